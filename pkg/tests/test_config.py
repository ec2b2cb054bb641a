import pytest

from tradelens.config import (
    AppConfig,
    DEFAULT_ARCHITECTURE_TEXT,
    load_app_config,
    parse_architecture,
    parse_palette,
)
from tradelens.errors import ConfigurationError
from tradelens.layers import ConvSpec, GapSpec, LeakyReluSpec, MaxPoolSpec, SoftmaxSpec
from tradelens.network import default_architecture


def test_default_architecture_text_matches_builtin_default():
    assert parse_architecture(DEFAULT_ARCHITECTURE_TEXT, 2) == default_architecture(2)


def test_parse_architecture_tokens():
    specs = parse_architecture("conv:4@3x5 lrelu:0.2 pool conv:K@1x1 gap softmax", 3)
    assert specs == [
        ConvSpec(4, 3, 5),
        LeakyReluSpec(0.2),
        MaxPoolSpec(),
        ConvSpec(3, 1, 1),
        GapSpec(),
        SoftmaxSpec(),
    ]


def test_parse_architecture_accepts_commas_and_defaults():
    specs = parse_architecture("conv:2, gap, softmax", 2)
    assert specs[0] == ConvSpec(2, 3, 3)


@pytest.mark.parametrize(
    "text",
    [
        "conv:2@2x2 gap softmax",  # even kernel
        "conv:3 gap softmax",  # head does not match K=2
        "conv:K gap",  # missing softmax
        "dense:4 gap softmax",  # unknown token
        "conv:x@3x3 gap softmax",  # bad number
    ],
)
def test_parse_architecture_rejects_bad_strings(text):
    with pytest.raises(ConfigurationError):
        parse_architecture(text, 2)


def test_parse_palette():
    assert parse_palette("0:0, 1:120") == {0: 0.0, 1: 120.0}
    with pytest.raises(ConfigurationError):
        parse_palette("0=red")
    with pytest.raises(ConfigurationError):
        parse_palette("")


def test_load_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "\n".join(
            [
                "# training run",
                "data = prices.csv",
                "epochs = 3",
                "learning_rate = 0.01",
                "",
                "seed=9",
            ]
        ),
        encoding="utf-8",
    )
    cfg = load_app_config(path)
    assert cfg.data == "prices.csv"
    assert cfg.epochs == 3
    assert cfg.learning_rate == 0.01
    assert cfg.seed == 9
    assert cfg.window_days == 30  # untouched default


def test_overrides_beat_file_values(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 1\nout_dir = from_file\n", encoding="utf-8")
    cfg = load_app_config(path, {"seed": "5", "out_dir": "from_flag"})
    assert cfg.seed == 5
    assert cfg.out_dir == "from_flag"


def test_unknown_key_is_rejected(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("learning_rat = 0.1\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="learning_rat"):
        load_app_config(path)


def test_bad_value_is_rejected(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("epochs = many\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="epochs"):
        load_app_config(path)


def test_malformed_line_is_rejected(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("just some words\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="line 1"):
        load_app_config(path)


def test_missing_config_file_is_reported(tmp_path):
    with pytest.raises(ConfigurationError, match="nope.cfg"):
        load_app_config(tmp_path / "nope.cfg")


def test_app_config_validates_ranges():
    with pytest.raises(ConfigurationError):
        AppConfig(train_fraction=1.5)
    with pytest.raises(ConfigurationError):
        AppConfig(window_days=0)
    with pytest.raises(ConfigurationError):
        AppConfig(learning_rate=-1.0)
    with pytest.raises(ConfigurationError):
        AppConfig(synth_start_date="March 5th")


def test_app_config_to_train_config_resolves_architecture():
    cfg = AppConfig()
    train_cfg = cfg.to_train_config(n_states=2)
    assert train_cfg.architecture == default_architecture(2)
    assert train_cfg.epochs == cfg.epochs
