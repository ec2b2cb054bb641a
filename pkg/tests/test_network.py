import numpy as np
import pytest

from tradelens.errors import ConfigurationError
from tradelens.layers import (
    ConvSpec,
    GapSpec,
    KernelBank,
    LeakyReluSpec,
    MaxPoolSpec,
    SoftmaxSpec,
    conv2d_forward,
    global_average_pool,
    leaky_relu_forward,
    max_pool_forward,
    softmax,
)
from tradelens.network import Network, default_architecture, network_forward


def toy_specs():
    return [
        ConvSpec(2, 3, 3),
        LeakyReluSpec(0.01),
        MaxPoolSpec(),
        ConvSpec(2, 3, 3),
        GapSpec(),
        SoftmaxSpec(),
    ]


def test_zero_weight_network_yields_bias_logits_and_uniform_probs():
    net = Network.initialize(toy_specs(), seed=0)
    for bank in net.banks:
        if bank is not None:
            bank.weights[:] = 0.0
            bank.biases[:] = 0.0
    trace = net.forward(np.random.default_rng(0).normal(size=(1, 4, 4)))
    np.testing.assert_array_equal(trace.logits, [0.0, 0.0])
    np.testing.assert_allclose(trace.probabilities, [0.5, 0.5], atol=1e-15)

    # distinct biases flow through GAP into the logits untouched
    net.banks[3].biases[:] = [1.0, -1.0]
    trace = net.forward(np.zeros((1, 4, 4)))
    np.testing.assert_allclose(trace.logits, [1.0, -1.0], atol=1e-15)


def test_trace_matches_manual_layer_composition():
    rng = np.random.default_rng(5)
    net = Network.initialize(toy_specs(), seed=3)
    x = rng.normal(size=(1, 4, 4))
    trace = net.forward(x)

    step = conv2d_forward(x, net.banks[0])
    np.testing.assert_array_equal(trace.outputs[0], step)
    step = leaky_relu_forward(step, 0.01)
    np.testing.assert_array_equal(trace.outputs[1], step)
    step, switches = max_pool_forward(step)
    np.testing.assert_array_equal(trace.outputs[2], step)
    np.testing.assert_array_equal(trace.switches[2].argmax_index, switches.argmax_index)
    step = conv2d_forward(step, net.banks[3])
    np.testing.assert_array_equal(trace.outputs[3], step)
    logits = global_average_pool(step)
    np.testing.assert_array_equal(trace.logits, logits)
    np.testing.assert_array_equal(trace.probabilities, softmax(logits))


def test_probabilities_are_a_distribution():
    rng = np.random.default_rng(1)
    net = Network.initialize(default_architecture(2), seed=2)
    for _ in range(10):
        trace = net.forward(rng.normal(size=(1, 30, 5)) * 10)
        assert abs(trace.probabilities.sum() - 1.0) <= 1e-9
        assert (trace.probabilities >= 0).all() and (trace.probabilities <= 1).all()


def test_trace_has_one_record_per_layer():
    net = Network.initialize(default_architecture(2), seed=0)
    trace = net.forward(np.zeros((1, 30, 5)))
    assert len(trace.inputs) == len(net.specs)
    assert len(trace.outputs) == len(net.specs)
    assert len(trace.switches) == len(net.specs)
    pools = [i for i, s in enumerate(net.specs) if isinstance(s, MaxPoolSpec)]
    recorded = [i for i, sw in enumerate(trace.switches) if sw is not None]
    assert pools == recorded


def test_gap_logit_identity():
    rng = np.random.default_rng(12)
    net = Network.initialize(default_architecture(2), seed=4)
    trace = net.forward(rng.normal(size=(1, 30, 5)))
    last_conv = trace.outputs[net.last_conv_index]
    gap_input = trace.inputs[len(net.specs) - 2]
    np.testing.assert_array_equal(last_conv, gap_input)
    assert np.abs(trace.logits - gap_input.mean(axis=(1, 2))).max() <= 1e-12


def test_shape_mismatch_names_layer_index():
    net = Network.initialize(toy_specs(), seed=0)
    with pytest.raises(ConfigurationError, match="layer 0"):
        net.forward(np.zeros((2, 4, 4)))


def test_initialize_is_seed_deterministic():
    a = Network.initialize(default_architecture(2), seed=9)
    b = Network.initialize(default_architecture(2), seed=9)
    c = Network.initialize(default_architecture(2), seed=10)
    for ba, bb in zip(a.banks, b.banks):
        if ba is not None:
            assert np.array_equal(ba.weights, bb.weights)
    assert any(
        not np.array_equal(ba.weights, bc.weights)
        for ba, bc in zip(a.banks, c.banks)
        if ba is not None
    )


def test_forward_batch_agrees_with_per_sample_forward():
    # BLAS blocking differs with the batch dimension, so agreement is to
    # rounding, not bitwise
    rng = np.random.default_rng(2)
    net = Network.initialize(default_architecture(2), seed=1)
    x = rng.normal(size=(4, 1, 30, 5))
    probs, _ = net.forward_batch(x)
    for i in range(4):
        single = net.forward(x[i])
        np.testing.assert_allclose(probs[i], single.probabilities, rtol=1e-12, atol=1e-14)


def test_network_rejects_mismatched_banks():
    specs = toy_specs()
    banks = Network.initialize(specs, seed=0).banks
    with pytest.raises(ConfigurationError):
        Network(specs, banks[:-1])
    bad = list(banks)
    bad[0] = KernelBank(np.zeros((3, 1, 3, 3)), np.zeros(3))  # wrong out_channels
    with pytest.raises(ConfigurationError):
        Network(specs, bad)


def test_network_forward_alias():
    net = Network.initialize(toy_specs(), seed=0)
    x = np.zeros((1, 4, 4))
    np.testing.assert_array_equal(
        network_forward(net, x).probabilities, net.forward(x).probabilities
    )


def test_n_states_reads_the_head():
    assert Network.initialize(default_architecture(3), seed=0).n_states == 3
