"""Network assembly: an ordered layer list with parameters, forward passes
that record everything back-projection needs, and weight initialization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .layers import (
    ConvSpec,
    GapSpec,
    KernelBank,
    LayerSpec,
    LeakyReluSpec,
    MaxPoolSpec,
    PoolSwitches,
    SoftmaxSpec,
    _conv_forward_batch,
    _max_pool_forward_batch,
    global_average_pool,
    leaky_relu_forward,
    softmax,
    validate_architecture,
)

__all__ = ["ForwardTrace", "Network", "network_forward", "default_architecture"]


def default_architecture(n_states: int = 2) -> list[LayerSpec]:
    """Stock architecture: a 3x3 feature extractor, then row-preserving layers.

    Layers deeper than the first use 1-row kernels and a 1x1 per-state head,
    so the backward response projection never smears along the time axis at
    the coarse pooled scales; days keep crisp attribution while pooling and
    the feature-axis kernels still build multi-day, cross-feature detectors.
    """
    return [
        ConvSpec(16, 3, 3),
        LeakyReluSpec(0.01),
        MaxPoolSpec(),
        ConvSpec(32, 1, 3),
        LeakyReluSpec(0.01),
        MaxPoolSpec(),
        ConvSpec(64, 1, 3),
        LeakyReluSpec(0.01),
        ConvSpec(n_states, 1, 1),
        GapSpec(),
        SoftmaxSpec(),
    ]


@dataclass
class ForwardTrace:
    """Everything recorded during one sample's forward pass.

    inputs[i]/outputs[i] are the tensors entering/leaving layer i (gap and
    softmax outputs are vectors). switches[i] is set only for pooling layers.
    """

    inputs: list
    outputs: list
    switches: list
    logits: np.ndarray
    probabilities: np.ndarray
    last_conv_index: int

    @property
    def last_conv_output(self) -> np.ndarray:
        return self.outputs[self.last_conv_index]


class Network:
    """An immutable-by-convention stack of layers; share freely for inference."""

    def __init__(self, specs: Sequence[LayerSpec], banks: Sequence[Optional[KernelBank]]):
        specs = list(specs)
        banks = list(banks)
        validate_architecture(specs)
        if len(banks) != len(specs):
            raise ConfigurationError("one parameter slot per layer is required")
        for i, (spec, bank) in enumerate(zip(specs, banks)):
            if isinstance(spec, ConvSpec) != (bank is not None):
                raise ConfigurationError("layer %d: parameters do not match its kind" % i)
            if bank is not None and (
                bank.out_channels != spec.out_channels
                or bank.kernel_shape != (spec.kernel_rows, spec.kernel_cols)
            ):
                raise ConfigurationError("layer %d: kernel bank does not match spec" % i)
        self.specs = specs
        self.banks = banks
        self.last_conv_index = max(
            i for i, s in enumerate(specs) if isinstance(s, ConvSpec)
        )

    @classmethod
    def initialize(
        cls, specs: Sequence[LayerSpec], in_channels: int = 1, seed: int = 0
    ) -> "Network":
        """He-normal weights, zero biases, all drawn from one seeded generator."""
        validate_architecture(specs)
        rng = np.random.default_rng(seed)
        banks: list[Optional[KernelBank]] = []
        channels = in_channels
        for spec in specs:
            if isinstance(spec, ConvSpec):
                fan_in = channels * spec.kernel_rows * spec.kernel_cols
                weights = rng.normal(
                    0.0,
                    np.sqrt(2.0 / fan_in),
                    size=(spec.out_channels, channels, spec.kernel_rows, spec.kernel_cols),
                )
                banks.append(KernelBank(weights, np.zeros(spec.out_channels)))
                channels = spec.out_channels
            else:
                banks.append(None)
        return cls(specs, banks)

    @property
    def n_states(self) -> int:
        return self.banks[self.last_conv_index].out_channels

    @property
    def in_channels(self) -> int:
        first_conv = next(i for i, s in enumerate(self.specs) if isinstance(s, ConvSpec))
        return self.banks[first_conv].in_channels

    def forward(self, x: np.ndarray) -> ForwardTrace:
        """Run one (channels, rows, cols) sample, recording the full trace."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3:
            raise ConfigurationError("input must be (channels, rows, cols)")
        inputs, outputs, switches = [], [], []
        logits = None
        current = x
        for i, spec in enumerate(self.specs):
            inputs.append(current)
            try:
                if isinstance(spec, ConvSpec):
                    current = _conv_forward_batch(current[None], self.banks[i])[0]
                elif isinstance(spec, LeakyReluSpec):
                    current = leaky_relu_forward(current, spec.slope)
                elif isinstance(spec, MaxPoolSpec):
                    pooled, sw = _max_pool_forward_batch(current[None])
                    current = pooled[0]
                    switches.append(PoolSwitches(pooled.shape[2], pooled.shape[3], sw[0]))
                    outputs.append(current)
                    continue
                elif isinstance(spec, GapSpec):
                    logits = global_average_pool(current)
                    current = logits
                else:  # softmax
                    current = softmax(current)
            except ConfigurationError as exc:
                raise ConfigurationError("layer %d: %s" % (i, exc)) from None
            switches.append(None)
            outputs.append(current)
        probabilities = current
        return ForwardTrace(
            inputs, outputs, switches, logits, probabilities, self.last_conv_index
        )

    def forward_batch(self, x: np.ndarray, keep_cache: bool = False):
        """Vectorized forward over an (n, channels, rows, cols) stack.

        Returns (probabilities, caches); caches is None unless requested, and
        otherwise holds per-layer inputs plus pooling switch arrays for the
        trainer's backward sweep.
        """
        x = np.asarray(x, dtype=np.float64)
        caches = [] if keep_cache else None
        current = x
        for i, spec in enumerate(self.specs):
            entry = {"input": current} if keep_cache else None
            if isinstance(spec, ConvSpec):
                current = _conv_forward_batch(current, self.banks[i])
            elif isinstance(spec, LeakyReluSpec):
                current = leaky_relu_forward(current, spec.slope)
            elif isinstance(spec, MaxPoolSpec):
                current, sw = _max_pool_forward_batch(current)
                if keep_cache:
                    entry["switches"] = sw
            elif isinstance(spec, GapSpec):
                current = current.mean(axis=(-2, -1))
            else:
                current = softmax(current)
            if keep_cache:
                caches.append(entry)
        return current, caches

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        probs, _ = self.forward_batch(x)
        return probs

    def copy_banks(self) -> list:
        """Deep copies of all kernel banks, in layer order (None for no-param layers)."""
        return [
            KernelBank(b.weights.copy(), b.biases.copy()) if b is not None else None
            for b in self.banks
        ]


def network_forward(net: Network, x: np.ndarray) -> ForwardTrace:
    """Functional alias for Network.forward."""
    return net.forward(x)
