"""Dense-tensor layer primitives: convolution, leaky ReLU, max pooling with
recorded switches, global average pooling, softmax, and their backward passes.

Conventions used throughout:

- a single sample is an ndarray of shape (channels, rows, cols), float64
- rows run along the time axis (days), cols along the feature axis
- convolutions are same-padding, stride-1 cross-correlations
- pooling is 2x2 / stride 2; odd inputs are padded with the channel minimum
  minus one so a pad cell can never win the max

Every public op accepts one sample. The `_batch`-suffixed variants operate on
(n, channels, rows, cols) stacks and are what the trainer uses; the per-sample
ops are thin wrappers so both paths share one implementation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError

__all__ = [
    "KernelBank",
    "PoolSwitches",
    "ConvSpec",
    "LeakyReluSpec",
    "MaxPoolSpec",
    "GapSpec",
    "SoftmaxSpec",
    "LayerSpec",
    "validate_architecture",
    "conv2d_forward",
    "conv2d_input_backward",
    "conv2d_param_backward",
    "leaky_relu_forward",
    "leaky_relu_backward",
    "max_pool_forward",
    "max_pool_backward",
    "unpool",
    "global_average_pool",
    "gap_backward",
    "softmax",
    "softmax_cross_entropy_backward",
]


# ---------------------------------------------------------------------------
# parameter containers and architecture specs
# ---------------------------------------------------------------------------

@dataclass
class KernelBank:
    """Weights and biases of one convolutional layer.

    weights: (out_channels, in_channels, kernel_rows, kernel_cols)
    biases:  (out_channels,)
    """

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 4:
            raise ConfigurationError("kernel weights must be 4-dimensional")
        if self.biases.shape != (self.weights.shape[0],):
            raise ConfigurationError(
                "bias count %r does not match output channels %d"
                % (self.biases.shape, self.weights.shape[0])
            )
        kr, kc = self.weights.shape[2], self.weights.shape[3]
        if kr % 2 == 0 or kc % 2 == 0:
            raise ConfigurationError(
                "kernel dims must be odd for symmetric same-padding, got %dx%d" % (kr, kc)
            )

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_shape(self) -> tuple[int, int]:
        return self.weights.shape[2], self.weights.shape[3]


@dataclass
class PoolSwitches:
    """Recorded argmax positions of one 2x2 max-pool pass, for one sample.

    argmax_index holds, per (channel, pooled row, pooled col), the flat index
    of the winning cell within its own 2x2 region: 0=(0,0), 1=(0,1), 2=(1,0),
    3=(1,1). Ties break to the lowest index.
    """

    pooled_rows: int
    pooled_cols: int
    argmax_index: np.ndarray  # (channels, pooled_rows, pooled_cols) int

    def __post_init__(self):
        self.argmax_index = np.asarray(self.argmax_index)
        if self.argmax_index.shape[1:] != (self.pooled_rows, self.pooled_cols):
            raise ConfigurationError("switch array shape does not match pooled dims")
        if self.argmax_index.size and (
            self.argmax_index.min() < 0 or self.argmax_index.max() > 3
        ):
            raise ConfigurationError("switch indices must lie inside their 2x2 region")


@dataclass(frozen=True)
class ConvSpec:
    out_channels: int
    kernel_rows: int = 3
    kernel_cols: int = 3


@dataclass(frozen=True)
class LeakyReluSpec:
    slope: float = 0.01


@dataclass(frozen=True)
class MaxPoolSpec:
    pool_rows: int = 2
    pool_cols: int = 2


@dataclass(frozen=True)
class GapSpec:
    pass


@dataclass(frozen=True)
class SoftmaxSpec:
    pass


LayerSpec = Union[ConvSpec, LeakyReluSpec, MaxPoolSpec, GapSpec, SoftmaxSpec]


def validate_architecture(specs: Sequence[LayerSpec], n_states: Optional[int] = None) -> None:
    """Check the structural rules every architecture must obey.

    Raises ConfigurationError if the layer list does not end in exactly one
    global-average-pool followed by exactly one softmax, if any pooling/gap
    parameters are malformed, or (when n_states is given) if the final conv
    layer does not emit one channel per state.
    """
    if len(specs) < 3:
        raise ConfigurationError("architecture needs at least conv, gap and softmax layers")
    if sum(isinstance(s, GapSpec) for s in specs) != 1:
        raise ConfigurationError("architecture must contain exactly one gap layer")
    if sum(isinstance(s, SoftmaxSpec) for s in specs) != 1:
        raise ConfigurationError("architecture must contain exactly one softmax layer")
    if not isinstance(specs[-1], SoftmaxSpec) or not isinstance(specs[-2], GapSpec):
        raise ConfigurationError("architecture must end with gap followed by softmax")
    convs = [s for s in specs if isinstance(s, ConvSpec)]
    if not convs:
        raise ConfigurationError("architecture must contain at least one conv layer")
    for s in specs[:-2]:
        if isinstance(s, (GapSpec, SoftmaxSpec)):
            raise ConfigurationError("gap/softmax may only appear at the end")
        if isinstance(s, ConvSpec):
            if s.out_channels < 1:
                raise ConfigurationError("conv out_channels must be >= 1")
            if s.kernel_rows % 2 == 0 or s.kernel_cols % 2 == 0:
                raise ConfigurationError("conv kernel dims must be odd")
        if isinstance(s, LeakyReluSpec) and not 0.0 < s.slope < 1.0:
            raise ConfigurationError("leaky slope must lie in (0, 1)")
        if isinstance(s, MaxPoolSpec) and (s.pool_rows, s.pool_cols) != (2, 2):
            raise ConfigurationError("only 2x2 pooling is supported")
    if n_states is not None and convs[-1].out_channels != n_states:
        raise ConfigurationError(
            "final conv layer emits %d channels but there are %d states"
            % (convs[-1].out_channels, n_states)
        )


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def _patch_columns(x: np.ndarray, kernel_rows: int, kernel_cols: int) -> np.ndarray:
    """Same-padded im2col: (n, c, h, w) -> (n*h*w, c*kr*kc) patch matrix."""
    n, c, h, w = x.shape
    pr, pc = kernel_rows // 2, kernel_cols // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pr, pr), (pc, pc)))
    win = sliding_window_view(xp, (kernel_rows, kernel_cols), axis=(2, 3))
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(
        n * h * w, c * kernel_rows * kernel_cols
    )


def _conv_forward_batch(x: np.ndarray, bank: KernelBank) -> np.ndarray:
    """Same-padding stride-1 cross-correlation on a (n, c, h, w) stack."""
    if x.shape[1] != bank.in_channels:
        raise ConfigurationError(
            "input has %d channels but kernels expect %d" % (x.shape[1], bank.in_channels)
        )
    n, _, h, w = x.shape
    kr, kc = bank.kernel_shape
    cols = _patch_columns(x, kr, kc)
    out = cols @ bank.weights.reshape(bank.out_channels, -1).T
    out = out.reshape(n, h, w, bank.out_channels).transpose(0, 3, 1, 2)
    return out + bank.biases[None, :, None, None]


def _conv_input_backward_batch(upstream: np.ndarray, bank: KernelBank) -> np.ndarray:
    """Adjoint of _conv_forward_batch with respect to the input (biases excluded).

    Equals a same-padding cross-correlation of the upstream signal with the
    kernels flipped along both spatial axes and transposed in/out channels.
    """
    if upstream.shape[1] != bank.out_channels:
        raise ConfigurationError(
            "upstream has %d channels but kernels emit %d"
            % (upstream.shape[1], bank.out_channels)
        )
    n, _, h, w = upstream.shape
    kr, kc = bank.kernel_shape
    cols = _patch_columns(upstream, kr, kc)
    flipped = bank.weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)  # (c, o, kr, kc)
    out = cols @ np.ascontiguousarray(flipped).reshape(bank.in_channels, -1).T
    return out.reshape(n, h, w, bank.in_channels).transpose(0, 3, 1, 2)


def _conv_param_backward_batch(
    upstream: np.ndarray, x: np.ndarray, bank: KernelBank
) -> tuple[np.ndarray, np.ndarray]:
    """Loss gradients for weights and biases, summed over the batch."""
    n, _, h, w = x.shape
    kr, kc = bank.kernel_shape
    cols = _patch_columns(x, kr, kc)
    up_flat = upstream.transpose(0, 2, 3, 1).reshape(n * h * w, bank.out_channels)
    d_weights = (up_flat.T @ cols).reshape(
        bank.out_channels, bank.in_channels, kr, kc
    )
    d_biases = upstream.sum(axis=(0, 2, 3))
    return d_weights, d_biases


def conv2d_forward(x: np.ndarray, bank: KernelBank) -> np.ndarray:
    """Convolve one (channels, rows, cols) sample; output keeps rows/cols."""
    return _conv_forward_batch(x[None], bank)[0]


def conv2d_input_backward(upstream: np.ndarray, bank: KernelBank) -> np.ndarray:
    """Map an upstream signal back through a conv layer (the exact adjoint)."""
    return _conv_input_backward_batch(upstream[None], bank)[0]


def conv2d_param_backward(
    upstream: np.ndarray, x: np.ndarray, bank: KernelBank
) -> tuple[np.ndarray, np.ndarray]:
    return _conv_param_backward_batch(upstream[None], x[None], bank)


# ---------------------------------------------------------------------------
# leaky ReLU
# ---------------------------------------------------------------------------

def leaky_relu_forward(x: np.ndarray, slope: float) -> np.ndarray:
    """Elementwise x if x >= 0 else slope*x, for slope in (0, 1)."""
    if not 0.0 < slope < 1.0:
        raise ConfigurationError("leaky slope must lie in (0, 1), got %r" % (slope,))
    return np.where(x >= 0, x, slope * x)


def leaky_relu_backward(upstream: np.ndarray, x: np.ndarray, slope: float) -> np.ndarray:
    return upstream * np.where(x >= 0, 1.0, slope)


# ---------------------------------------------------------------------------
# 2x2 max pooling with switches, plus the shared scatter used by unpooling
# ---------------------------------------------------------------------------

def _pool_pad_batch(x: np.ndarray) -> np.ndarray:
    """Pad odd spatial dims to even with (per sample+channel) min - 1."""
    n, c, h, w = x.shape
    hp, wp = h + (h % 2), w + (w % 2)
    if (hp, wp) == (h, w):
        return x
    fill = x.min(axis=(2, 3)) - 1.0
    out = np.broadcast_to(fill[:, :, None, None], (n, c, hp, wp)).copy()
    out[:, :, :h, :w] = x
    return out


def _as_regions(x: np.ndarray) -> np.ndarray:
    """(n, c, 2*ph, 2*pw) -> (n, c, ph, pw, 4) with region cells flattened row-major."""
    n, c, h, w = x.shape
    return (
        x.reshape(n, c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h // 2, w // 2, 4)
    )


def _max_pool_forward_batch(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns (pooled, switches) where switches is (n, c, ph, pw) int."""
    regions = _as_regions(_pool_pad_batch(x))
    switches = regions.argmax(axis=-1)  # argmax takes the lowest flat index on ties
    pooled = np.take_along_axis(regions, switches[..., None], axis=-1)[..., 0]
    return pooled, switches


def _scatter_batch(
    pooled: np.ndarray, switches: np.ndarray, target_shape: tuple[int, ...]
) -> np.ndarray:
    """Place pooled values at their recorded positions, zeros elsewhere.

    target_shape is the original (possibly odd) spatial shape; scatter happens
    in the padded even grid and is cropped back. Switches never point at pad
    cells, so cropping drops only zeros.
    """
    n, c, ph, pw = pooled.shape
    h, w = target_shape[-2], target_shape[-1]
    if (ph, pw) != ((h + 1) // 2, (w + 1) // 2):
        raise ValueError(
            "pooled grid %dx%d does not match target %dx%d" % (ph, pw, h, w)
        )
    if switches.shape != pooled.shape:
        raise ValueError("switches shape does not match pooled shape")
    regions = np.zeros((n, c, ph, pw, 4), dtype=np.float64)
    np.put_along_axis(regions, switches[..., None], pooled[..., None], axis=-1)
    full = (
        regions.reshape(n, c, ph, pw, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, 2 * ph, 2 * pw)
    )
    return full[:, :, :h, :w]


def max_pool_forward(x: np.ndarray) -> tuple[np.ndarray, PoolSwitches]:
    """2x2 / stride-2 max pool of one sample, recording argmax switches."""
    pooled, sw = _max_pool_forward_batch(x[None])
    switches = PoolSwitches(pooled.shape[2], pooled.shape[3], sw[0])
    return pooled[0], switches


def max_pool_backward(
    upstream: np.ndarray, switches: PoolSwitches, input_shape: tuple[int, ...]
) -> np.ndarray:
    """Route each pooled-cell gradient to the cell that won the forward max."""
    return unpool(upstream, switches, input_shape)


def unpool(
    pooled: np.ndarray, switches: PoolSwitches, target_shape: tuple[int, ...]
) -> np.ndarray:
    """Invert a recorded 2x2 max pool: winners get their value, the rest zero."""
    if pooled.shape != (pooled.shape[0], switches.pooled_rows, switches.pooled_cols):
        raise ValueError(
            "pooled map %r does not match recorded switches %dx%d"
            % (pooled.shape, switches.pooled_rows, switches.pooled_cols)
        )
    if pooled.shape[0] != switches.argmax_index.shape[0]:
        raise ValueError("channel count differs between pooled map and switches")
    return _scatter_batch(pooled[None], switches.argmax_index[None], target_shape)[0]


# ---------------------------------------------------------------------------
# global average pooling and softmax
# ---------------------------------------------------------------------------

def global_average_pool(x: np.ndarray) -> np.ndarray:
    """Per-channel spatial mean: (channels, rows, cols) -> (channels,)."""
    return x.mean(axis=(-2, -1))


def gap_backward(upstream: np.ndarray, input_shape: tuple[int, ...]) -> np.ndarray:
    """Spread each channel's gradient evenly over its rows*cols cells."""
    h, w = input_shape[-2], input_shape[-1]
    scaled = upstream / float(h * w)
    return np.broadcast_to(scaled[..., None, None], input_shape).copy()


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax along the last axis."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy_backward(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of mean cross-entropy w.r.t. logits: probs minus one-hot."""
    grad = probs.copy()
    if grad.ndim == 1:
        grad[int(labels)] -= 1.0
    else:
        grad[np.arange(grad.shape[0]), labels] -= 1.0
    return grad
