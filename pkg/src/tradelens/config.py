"""Flat key=value configuration files and the architecture mini-grammar.

Config files are plain text: one ``key = value`` per line, ``#`` comments,
blank lines ignored. Unknown keys are rejected so typos fail loudly.
Command-line flags override file values.

Architecture strings list layers separated by whitespace or commas:

    conv:16@3x3 lrelu:0.01 pool conv:32@3x3 lrelu:0.01 pool conv:K@3x3 gap softmax

``conv:<out>@<rows>x<cols>`` (``K`` stands for the state count), ``lrelu``
with an optional slope, ``pool`` (2x2), ``gap`` and ``softmax``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from datetime import date
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError
from .layers import (
    ConvSpec,
    GapSpec,
    LayerSpec,
    LeakyReluSpec,
    MaxPoolSpec,
    SoftmaxSpec,
    validate_architecture,
)
from .training import TrainConfig

__all__ = ["AppConfig", "parse_architecture", "parse_palette", "load_app_config"]

DEFAULT_ARCHITECTURE_TEXT = (
    "conv:16@3x3 lrelu:0.01 pool conv:32@1x3 lrelu:0.01 pool "
    "conv:64@1x3 lrelu:0.01 conv:K@1x1 gap softmax"
)


def parse_architecture(text: str, n_states: int) -> list[LayerSpec]:
    tokens = text.replace(",", " ").split()
    specs: list[LayerSpec] = []
    for token in tokens:
        head, _, arg = token.partition(":")
        head = head.lower()
        if head == "conv":
            out_part, _, kernel_part = arg.partition("@")
            try:
                out_channels = n_states if out_part.upper() == "K" else int(out_part)
                if kernel_part:
                    rows_text, _, cols_text = kernel_part.partition("x")
                    rows, cols = int(rows_text), int(cols_text)
                else:
                    rows = cols = 3
            except ValueError:
                raise ConfigurationError("bad conv token %r" % token) from None
            specs.append(ConvSpec(out_channels, rows, cols))
        elif head == "lrelu":
            try:
                slope = float(arg) if arg else 0.01
            except ValueError:
                raise ConfigurationError("bad lrelu token %r" % token) from None
            specs.append(LeakyReluSpec(slope))
        elif head == "pool":
            specs.append(MaxPoolSpec())
        elif head == "gap":
            specs.append(GapSpec())
        elif head == "softmax":
            specs.append(SoftmaxSpec())
        else:
            raise ConfigurationError("unknown architecture token %r" % token)
    validate_architecture(specs, n_states)
    return specs


def parse_palette(text: str) -> dict:
    """``0:0,1:120`` -> {0: 0.0, 1: 120.0}"""
    hues = {}
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        state_text, _, hue_text = part.partition(":")
        try:
            hues[int(state_text)] = float(hue_text)
        except ValueError:
            raise ConfigurationError("bad palette entry %r" % part) from None
    if not hues:
        raise ConfigurationError("palette override is empty")
    return hues


@dataclass
class AppConfig:
    """Everything the CLI needs, with documented defaults."""

    data: Optional[str] = None
    out_dir: str = "out"
    window_days: int = 30
    train_fraction: float = 0.9
    epochs: int = 15
    batch_size: int = 32
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    leaky_slope: float = 0.01
    architecture: str = DEFAULT_ARCHITECTURE_TEXT
    palette: Optional[str] = None
    synth_days: int = 900
    synth_lookback: int = 4
    synth_step: float = 1.0
    synth_noise_frac: float = 0.35
    synth_base_price: float = 100.0
    synth_start_date: str = "2020-01-01"

    def __post_init__(self):
        if self.window_days < 1:
            raise ConfigurationError("window_days must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigurationError("train_fraction must lie in (0, 1)")
        if self.synth_lookback < 2:
            raise ConfigurationError("synth_lookback must be >= 2")
        if self.synth_days < self.window_days + 2:
            raise ConfigurationError("synth_days must exceed window_days + 1")
        try:
            date.fromisoformat(self.synth_start_date)
        except ValueError:
            raise ConfigurationError(
                "synth_start_date must be an ISO date, got %r" % self.synth_start_date
            ) from None
        # TrainConfig re-validates the numeric training fields
        self.to_train_config()

    def to_train_config(self, n_states: int = 2) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            seed=self.seed,
            leaky_slope=self.leaky_slope,
            architecture=parse_architecture(self.architecture, n_states),
            n_states=n_states,
        )


_INT_KEYS = {"window_days", "epochs", "batch_size", "seed", "synth_days", "synth_lookback"}
_FLOAT_KEYS = {
    "train_fraction",
    "learning_rate",
    "momentum",
    "leaky_slope",
    "synth_step",
    "synth_noise_frac",
    "synth_base_price",
}


def _parse_key_values(path) -> dict:
    raw = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError("cannot read config file %s: %s" % (path, exc.strerror)) from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError("config line %d is not key = value: %r" % (lineno, line))
        key, _, value = stripped.partition("=")
        raw[key.strip()] = value.strip()
    return raw


def load_app_config(path=None, overrides: Optional[dict] = None) -> AppConfig:
    """Build an AppConfig from an optional file plus flag overrides."""
    known = {f.name for f in fields(AppConfig)}
    raw = _parse_key_values(path) if path is not None else {}
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    kwargs = {}
    for key, value in raw.items():
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            else:
                kwargs[key] = str(value)
        except (TypeError, ValueError):
            raise ConfigurationError("config key %s has a bad value %r" % (key, value)) from None
    return AppConfig(**kwargs)
