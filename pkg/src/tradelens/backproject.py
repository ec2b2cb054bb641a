"""Back-projection of per-state responses to the input grid, and the
dominant-state / dominant-response maps derived from them.

The backward path is a purely linear composition: starting from the final
conv layer's recorded output, apply that layer's adjoint convolution with all
kernels zeroed except the chosen state's, then walk the remaining layers in
reverse, un-pooling through recorded switches and applying each convolution's
exact adjoint (biases excluded). Activation layers contribute only through
the forward activations and switches already captured in the trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .layers import ConvSpec, KernelBank, MaxPoolSpec, conv2d_input_backward, unpool
from .network import ForwardTrace, Network

__all__ = [
    "ResponseMap",
    "StateMap",
    "DominanceMap",
    "Explanation",
    "unpool",
    "state_isolated_backproject",
    "full_backproject",
    "all_state_responses",
    "dominant_state_map",
    "dominant_response_map",
    "day_state_assignment",
    "day_saliency",
    "explain_window",
    "explanation_csv_text",
]


@dataclass
class ResponseMap:
    """One state's contribution pattern over the input window's day x feature grid."""

    state: int
    values: np.ndarray


@dataclass
class StateMap:
    """Per cell, the state whose response dominates (ties break to the lowest index)."""

    states: np.ndarray


@dataclass
class DominanceMap:
    """Per cell, the response value of that cell's dominant state."""

    values: np.ndarray


def _isolated_bank(bank: KernelBank, state: int) -> KernelBank:
    weights = np.zeros_like(bank.weights)
    weights[state] = bank.weights[state]
    return KernelBank(weights, np.zeros(bank.out_channels))


def _backproject(trace: ForwardTrace, net: Network, isolate: Optional[int]) -> np.ndarray:
    i = trace.last_conv_index
    if len(trace.inputs) != len(net.specs):
        raise ValueError("trace layer count does not match the network")
    bank = net.banks[i]
    head = bank if isolate is None else _isolated_bank(bank, isolate)
    signal = conv2d_input_backward(trace.outputs[i], head)
    for j in range(i - 1, -1, -1):
        spec = net.specs[j]
        if isinstance(spec, ConvSpec):
            signal = conv2d_input_backward(signal, net.banks[j])
        elif isinstance(spec, MaxPoolSpec):
            if trace.switches[j] is None:
                raise ValueError("trace has no recorded switches for pooling layer %d" % j)
            signal = unpool(signal, trace.switches[j], trace.inputs[j].shape)
        # leaky relu: nothing to apply on the linear backward path
    return signal


def state_isolated_backproject(
    trace: ForwardTrace, net: Network, state: int, rectify: bool = False
) -> ResponseMap:
    """Project the chosen state's share of the final conv response down to the
    input domain. `rectify` optionally zeroes negative response values; it is
    off by default so the raw signed map feeds the argmax.
    """
    if not 0 <= state < net.n_states:
        raise ValueError("state %d outside the %d known states" % (state, net.n_states))
    signal = _backproject(trace, net, isolate=state)
    if signal.shape[0] != 1:
        raise ValueError("back-projection expects a single-channel input window")
    values = signal[0]
    if rectify:
        values = np.maximum(values, 0.0)
    return ResponseMap(state, values)


def full_backproject(trace: ForwardTrace, net: Network) -> np.ndarray:
    """Same backward chain without state isolation; the per-state maps sum to this."""
    signal = _backproject(trace, net, isolate=None)
    if signal.shape[0] != 1:
        raise ValueError("back-projection expects a single-channel input window")
    return signal[0]


def all_state_responses(
    trace: ForwardTrace, net: Network, rectify: bool = False
) -> list[ResponseMap]:
    return [
        state_isolated_backproject(trace, net, s, rectify=rectify)
        for s in range(net.n_states)
    ]


def dominant_state_map(responses: Sequence[ResponseMap]) -> StateMap:
    """Per-cell argmax over the raw signed responses."""
    if not responses:
        raise ValueError("need at least one response map")
    stack = np.stack([r.values for r in responses])
    if any(r.values.shape != stack.shape[1:] for r in responses):
        raise ValueError("response maps must share one shape")
    return StateMap(stack.argmax(axis=0))


def dominant_response_map(responses: Sequence[ResponseMap], state_map: StateMap) -> DominanceMap:
    stack = np.stack([r.values for r in responses])
    if state_map.states.shape != stack.shape[1:]:
        raise ValueError("state map shape does not match the response maps")
    values = np.take_along_axis(stack, state_map.states[None], axis=0)[0]
    return DominanceMap(values)


def day_state_assignment(responses: Sequence[ResponseMap]) -> np.ndarray:
    """Per day, the state with the largest summed (signed) response over features."""
    sums = np.stack([r.values.sum(axis=1) for r in responses])  # (states, days)
    return sums.argmax(axis=0)


def day_saliency(dominance: DominanceMap) -> np.ndarray:
    """Per-day positive dominant-response mass, summed over features."""
    return np.maximum(dominance.values, 0.0).sum(axis=1)


@dataclass
class Explanation:
    """Everything derived from one window's forward pass and back-projection."""

    probabilities: np.ndarray
    prediction: int
    responses: list
    state_map: StateMap
    dominance: DominanceMap

    @property
    def day_saliency(self) -> np.ndarray:
        return day_saliency(self.dominance)

    @property
    def day_states(self) -> np.ndarray:
        return day_state_assignment(self.responses)


def explain_window(net: Network, values: np.ndarray) -> Explanation:
    """Forward one normalized (days, features) window and derive all maps."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("window values must be a (days, features) grid")
    trace = net.forward(values[None])
    responses = all_state_responses(trace, net)
    state_map = dominant_state_map(responses)
    dominance = dominant_response_map(responses, state_map)
    return Explanation(
        probabilities=trace.probabilities,
        prediction=int(trace.probabilities.argmax()),
        responses=responses,
        state_map=state_map,
        dominance=dominance,
    )


def explanation_csv_text(
    explanation: Explanation, feature_names: Sequence[str]
) -> str:
    """One row per cell: day_index, feature, dominant state, response value,
    then every state probability repeated so each row is self-contained.
    Floats are written with repr so reloaded values compare bit-equal.
    """
    k = len(explanation.probabilities)
    days, feats = explanation.dominance.values.shape
    if feats != len(feature_names):
        raise ValueError("feature name count does not match the grid")
    header = "day_index,feature_name,dominant_state,response_value," + ",".join(
        "prob_state_%d" % s for s in range(k)
    )
    prob_suffix = ",".join(repr(float(p)) for p in explanation.probabilities)
    lines = [header]
    for d in range(days):
        for f in range(feats):
            lines.append(
                "%d,%s,%d,%s,%s"
                % (
                    d,
                    feature_names[f],
                    int(explanation.state_map.states[d, f]),
                    repr(float(explanation.dominance.values[d, f])),
                    prob_suffix,
                )
            )
    return "\n".join(lines) + "\n"
