"""HSV mapping of the dominant-state and dominant-response maps, plus SVG
rendering: the day x feature data-sheet heatmap and the price-line overlay.

Hue encodes the dominant state, saturation is fixed at 1, and value carries
the dominant response after clamping negatives to zero and dividing by the
grid's positive maximum (an all-nonpositive grid renders black). SVG output
is plain SVG 1.1 text with fixed number formatting, so identical inputs
produce identical bytes.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .backproject import DominanceMap, StateMap
from .data import FEATURE_NAMES, InputWindow
from .errors import ConfigurationError

__all__ = [
    "Palette",
    "default_palette",
    "HSVGrid",
    "RenderMeta",
    "to_hsv",
    "hsv_to_rgb",
    "render_datasheet_svg",
    "render_price_overlay_svg",
]

_MIN_BAND_WIDTH = 0.5
_MAX_BAND_WIDTH = 6.0


@dataclass(frozen=True)
class Palette:
    """Assigns each state a hue in degrees [0, 360); hues must be distinct."""

    hues: dict

    def __post_init__(self):
        for state, hue in self.hues.items():
            if not 0.0 <= hue < 360.0:
                raise ConfigurationError("hue %r for state %d outside [0, 360)" % (hue, state))
        values = list(self.hues.values())
        if len(set(values)) != len(values):
            raise ConfigurationError("palette hues must be pairwise distinct")

    def hue_for(self, state: int) -> float:
        try:
            return self.hues[int(state)]
        except KeyError:
            raise ConfigurationError("palette has no hue for state %d" % state) from None


def default_palette(n_states: int = 2) -> Palette:
    """Red for fall (state 0), green for rise (state 1); beyond two states,
    hues are spread evenly around the wheel."""
    if n_states <= 2:
        return Palette({0: 0.0, 1: 120.0})
    return Palette({s: 360.0 * s / n_states for s in range(n_states)})


@dataclass
class HSVGrid:
    hue: np.ndarray
    saturation: np.ndarray
    value: np.ndarray


def to_hsv(state_map: StateMap, dominance: DominanceMap, palette: Palette) -> HSVGrid:
    """Hue from the dominant state, saturation 1, value from the positive part
    of the dominant response scaled by its grid maximum."""
    states = state_map.states
    if states.shape != dominance.values.shape:
        raise ValueError("state map and dominance map shapes differ")
    lut = np.array([palette.hue_for(s) for s in range(int(states.max()) + 1)])
    hue = lut[states]
    positive = np.maximum(dominance.values, 0.0)
    peak = positive.max()
    value = positive / peak if peak > 0 else np.zeros_like(positive)
    return HSVGrid(hue, np.ones_like(value), value)


def hsv_to_rgb(h: float, s: float, v: float) -> tuple[int, int, int]:
    """Standard HSV -> RGB byte conversion; h in degrees [0, 360), s and v in [0, 1]."""
    if not 0.0 <= h < 360.0:
        raise ValueError("hue must lie in [0, 360)")
    if not 0.0 <= s <= 1.0 or not 0.0 <= v <= 1.0:
        raise ValueError("saturation and value must lie in [0, 1]")
    r, g, b = colorsys.hsv_to_rgb(h / 360.0, s, v)
    return int(round(r * 255)), int(round(g * 255)), int(round(b * 255))


def _hex_color(h: float, s: float, v: float) -> str:
    return "#%02x%02x%02x" % hsv_to_rgb(h, s, v)


@dataclass
class RenderMeta:
    """Header information shown above the data sheet."""

    prediction: int
    probabilities: Sequence[float]
    decision_label: str = ""
    state_names: Sequence[str] = ("fall", "rise")

    def headline(self) -> str:
        name = (
            self.state_names[self.prediction]
            if self.prediction < len(self.state_names)
            else "state %d" % self.prediction
        )
        probs = "  ".join(
            "p(%s)=%.4f" % (self.state_names[s] if s < len(self.state_names) else str(s), p)
            for s, p in enumerate(self.probabilities)
        )
        head = "prediction: %s   %s" % (name, probs)
        if self.decision_label:
            head += "   decision day %s" % self.decision_label
        return head


def render_datasheet_svg(
    hsv: HSVGrid,
    window: Optional[InputWindow] = None,
    meta: Optional[RenderMeta] = None,
    feature_names: Sequence[str] = FEATURE_NAMES,
) -> str:
    """Day x feature sheet: one rect per cell, rows ordered most-recent first
    (offsets counted back from the decision day), columns labeled by feature.
    """
    days, feats = hsv.value.shape
    cell = 24
    left, top = 58, 46
    width = left + feats * cell + 12
    height = top + days * cell + 12
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="%d" height="%d">'
        % (width, height),
    ]
    if meta is not None:
        out.append(
            '<text x="6" y="16" font-family="monospace" font-size="12">%s</text>'
            % escape(meta.headline())
        )
    for f in range(feats):
        name = feature_names[f] if f < len(feature_names) else "f%d" % f
        out.append(
            '<text x="%d" y="%d" font-family="monospace" font-size="10" text-anchor="middle">%s</text>'
            % (left + f * cell + cell // 2, top - 6, escape(str(name)))
        )
    for r in range(days):
        day_idx = days - 1 - r  # newest data row at the top
        out.append(
            '<text x="%d" y="%d" font-family="monospace" font-size="10" text-anchor="end">-%d</text>'
            % (left - 6, top + r * cell + cell // 2 + 4, r + 1)
        )
        for f in range(feats):
            color = _hex_color(
                float(hsv.hue[day_idx, f]),
                float(hsv.saturation[day_idx, f]),
                float(hsv.value[day_idx, f]),
            )
            out.append(
                '<rect x="%d" y="%d" width="%d" height="%d" fill="%s"/>'
                % (left + f * cell, top + r * cell, cell, cell, color)
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_price_overlay_svg(
    window: InputWindow,
    day_saliency: np.ndarray,
    state_per_day: np.ndarray,
    palette: Palette,
) -> str:
    """Close-price line with one colored band per day; band width scales
    linearly with that day's saliency between 0.5 and 6.0 display units,
    band color is the hue of the day's dominant state."""
    closes = np.asarray(window.values[:, 3], dtype=np.float64)
    days = len(closes)
    if len(day_saliency) != days or len(state_per_day) != days:
        raise ValueError("per-day inputs must have one entry per window day")
    spacing, margin_x, margin_y = 20, 40, 24
    width = margin_x * 2 + max(days - 1, 0) * spacing + 20
    height = 220
    xs = [margin_x + 10 + d * spacing for d in range(days)]
    lo, hi = float(closes.min()), float(closes.max())
    span = hi - lo
    if span == 0:
        ys = [height / 2.0] * days
    else:
        usable = height - 2 * margin_y
        ys = [height - margin_y - (c - lo) / span * usable for c in closes]

    sal = np.maximum(np.asarray(day_saliency, dtype=np.float64), 0.0)
    peak = sal.max()
    if peak > 0:
        widths = _MIN_BAND_WIDTH + (_MAX_BAND_WIDTH - _MIN_BAND_WIDTH) * sal / peak
    else:
        widths = np.full(days, _MIN_BAND_WIDTH)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="%d" height="%d">'
        % (width, height),
        '<text x="6" y="14" font-family="monospace" font-size="10">%s to %s</text>'
        % (escape(window.start_date.isoformat()), escape(window.end_date.isoformat())),
    ]
    for d in range(days):
        color = _hex_color(palette.hue_for(int(state_per_day[d])), 1.0, 1.0)
        out.append(
            '<line x1="%.2f" y1="%d" x2="%.2f" y2="%d" stroke="%s" stroke-width="%.3f"/>'
            % (xs[d], margin_y, xs[d], height - margin_y, color, widths[d])
        )
    if days == 1:
        out.append('<circle cx="%.2f" cy="%.2f" r="3" fill="black"/>' % (xs[0], ys[0]))
    else:
        points = " ".join("%.2f,%.2f" % (x, y) for x, y in zip(xs, ys))
        out.append(
            '<polyline points="%s" fill="none" stroke="black" stroke-width="1.2"/>' % points
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
