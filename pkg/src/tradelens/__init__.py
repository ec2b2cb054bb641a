"""tradelens: train a small convolutional rise/fall predictor on windowed
OHLCV data and visualize which days and features drove each decision."""

from .backproject import (
    DominanceMap,
    Explanation,
    ResponseMap,
    StateMap,
    all_state_responses,
    dominant_response_map,
    dominant_state_map,
    explain_window,
    full_backproject,
    state_isolated_backproject,
    unpool,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    DatasetSplit,
    InputWindow,
    OhlcvRow,
    SyntheticSpec,
    generate_synthetic,
    generate_synthetic_series,
    make_windows,
    normalize,
    parse_ohlcv_csv,
    split_chronological,
)
from .errors import CheckpointError, ConfigurationError, DataError, TradelensError
from .estimator import TradeWindowClassifier
from .network import Network, default_architecture, network_forward
from .render import default_palette, hsv_to_rgb, render_datasheet_svg, render_price_overlay_svg, to_hsv
from .training import EvalReport, TrainConfig, build_network, cross_entropy_loss, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "TradeWindowClassifier",
    "Network",
    "TrainConfig",
    "EvalReport",
    "DatasetSplit",
    "InputWindow",
    "OhlcvRow",
    "SyntheticSpec",
    "Explanation",
    "ResponseMap",
    "StateMap",
    "DominanceMap",
    "TradelensError",
    "ConfigurationError",
    "DataError",
    "CheckpointError",
    "default_architecture",
    "network_forward",
    "build_network",
    "train",
    "evaluate",
    "cross_entropy_loss",
    "save_checkpoint",
    "load_checkpoint",
    "parse_ohlcv_csv",
    "make_windows",
    "split_chronological",
    "normalize",
    "generate_synthetic",
    "generate_synthetic_series",
    "explain_window",
    "all_state_responses",
    "state_isolated_backproject",
    "full_backproject",
    "dominant_state_map",
    "dominant_response_map",
    "unpool",
    "to_hsv",
    "hsv_to_rgb",
    "default_palette",
    "render_datasheet_svg",
    "render_price_overlay_svg",
]
