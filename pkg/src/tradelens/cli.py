"""Command-line entry point.

Subcommands: train, eval, explain, synth. Exit codes: 0 success,
2 configuration error, 3 data error, 4 internal invariant violation.
All artifacts land under the configured output directory.
"""

from __future__ import annotations

import argparse
import sys
from datetime import date
from pathlib import Path

import numpy as np

from .backproject import explain_window, explanation_csv_text
from .checkpoint import load_checkpoint, save_checkpoint
from .config import AppConfig, load_app_config, parse_palette
from .data import (
    DatasetSplit,
    FEATURE_NAMES,
    make_windows,
    normalize,
    parse_ohlcv_csv,
    split_chronological,
    compute_stats,
    generate_synthetic_series,
    window_before,
    write_ohlcv_csv,
)
from .errors import ConfigurationError, DataError, TradelensError
from .render import (
    RenderMeta,
    default_palette,
    Palette,
    render_datasheet_svg,
    render_price_overlay_svg,
    to_hsv,
)
from .training import evaluate, train, build_network, write_loss_curve

STATE_NAMES = ("fall", "rise")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tradelens",
        description="Train, evaluate and explain a convolutional rise/fall "
        "predictor over windowed OHLCV data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--out", help="output directory (overrides config out_dir)")
        p.add_argument("--seed", type=int, help="random seed (overrides config seed)")

    p_train = sub.add_parser("train", help="train a model and write checkpoint + reports")
    common(p_train)
    p_train.add_argument("--data", help="OHLCV CSV path (overrides config data)")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a CSV's holdout split")
    common(p_eval)
    p_eval.add_argument("--checkpoint", required=True, help="model checkpoint file")
    p_eval.add_argument("--csv", required=True, help="OHLCV CSV path")

    p_explain = sub.add_parser(
        "explain", help="explain one prediction: response CSV plus two SVG views"
    )
    common(p_explain)
    p_explain.add_argument("--checkpoint", required=True, help="model checkpoint file")
    p_explain.add_argument("--csv", required=True, help="OHLCV CSV path")
    p_explain.add_argument("--date", required=True, help="decision day, ISO format")

    p_synth = sub.add_parser("synth", help="write a synthetic OHLCV CSV with a planted rule")
    common(p_synth)
    return parser


def _load_config(args) -> AppConfig:
    overrides = {}
    if getattr(args, "out", None) is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "data", None) is not None:
        overrides["data"] = args.data
    return load_app_config(args.config, overrides)


def _out_dir(cfg: AppConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _palette(cfg: AppConfig, n_states: int) -> Palette:
    if cfg.palette:
        return Palette(parse_palette(cfg.palette))
    return default_palette(n_states)


def _load_split(cfg: AppConfig, csv_path):
    rows = parse_ohlcv_csv(csv_path)
    windows = make_windows(rows, cfg.window_days)
    split = split_chronological(windows, cfg.train_fraction)
    return rows, DatasetSplit(
        normalize(split.train, split.stats),
        normalize(split.eval, split.stats),
        split.stats,
    )


def cmd_train(cfg: AppConfig) -> int:
    if cfg.data is None:
        raise ConfigurationError("no input CSV configured; set data= or pass --data")
    if not Path(cfg.data).exists():
        raise DataError("input CSV not found: %s" % cfg.data)
    _, split = _load_split(cfg, cfg.data)
    train_cfg = cfg.to_train_config(n_states=2)
    net = build_network(train_cfg)
    records = train(net, split, train_cfg)
    out = _out_dir(cfg)
    save_checkpoint(net, out / "model.ctck")
    write_loss_curve(records, out / "loss_curve.csv")
    report = evaluate(net, split.eval)
    (out / "eval_report.csv").write_text(report.to_csv_text(), encoding="utf-8")
    print("trained %d epochs on %d windows" % (len(records), len(split.train)))
    print(report.format_text())
    print("artifacts written to %s" % out)
    return 0


def cmd_eval(cfg: AppConfig, checkpoint_path, csv_path) -> int:
    net = load_checkpoint(checkpoint_path)
    _, split = _load_split(cfg, csv_path)
    report = evaluate(net, split.eval)
    out = _out_dir(cfg)
    (out / "eval_report.csv").write_text(report.to_csv_text(), encoding="utf-8")
    print(report.format_text())
    return 0


def _stats_for_inference(cfg: AppConfig, rows):
    """Normalization stats recomputed from the CSV's training split, falling
    back to all windows when the file is too short to split."""
    windows = make_windows(rows, cfg.window_days)
    try:
        return split_chronological(windows, cfg.train_fraction).stats
    except DataError:
        return compute_stats(windows)


def cmd_explain(cfg: AppConfig, checkpoint_path, csv_path, date_text) -> int:
    try:
        decision_day = date.fromisoformat(date_text)
    except ValueError:
        raise ConfigurationError("bad --date %r, expected YYYY-MM-DD" % date_text) from None
    net = load_checkpoint(checkpoint_path)
    rows = parse_ohlcv_csv(csv_path)
    index = {r.day: i for i, r in enumerate(rows)}
    if decision_day not in index:
        nearest = min(rows, key=lambda r: abs(r.day - decision_day)).day
        raise DataError(
            "date %s not in %s; nearest available is %s"
            % (decision_day.isoformat(), csv_path, nearest.isoformat())
        )
    row_index = index[decision_day]
    raw_window = window_before(rows, row_index, cfg.window_days)
    stats = _stats_for_inference(cfg, rows)
    window = normalize([raw_window], stats)[0]

    explanation = explain_window(net, window.values)
    palette = _palette(cfg, net.n_states)
    hsv = to_hsv(explanation.state_map, explanation.dominance, palette)
    meta = RenderMeta(
        prediction=explanation.prediction,
        probabilities=[float(p) for p in explanation.probabilities],
        decision_label=decision_day.isoformat(),
        state_names=STATE_NAMES,
    )
    sheet = render_datasheet_svg(hsv, window, meta)
    overlay = render_price_overlay_svg(
        raw_window, explanation.day_saliency, explanation.day_states, palette
    )
    csv_text = explanation_csv_text(explanation, FEATURE_NAMES)

    out = _out_dir(cfg)
    stem = decision_day.isoformat()
    (out / ("%s.explain.csv" % stem)).write_text(csv_text, encoding="utf-8")
    (out / ("%s.sheet.svg" % stem)).write_text(sheet, encoding="utf-8")
    (out / ("%s.overlay.svg" % stem)).write_text(overlay, encoding="utf-8")

    name = STATE_NAMES[explanation.prediction]
    probs = "  ".join(
        "p(%s)=%.4f" % (STATE_NAMES[s], p) for s, p in enumerate(explanation.probabilities)
    )
    print("decision day %s: predicted %s   %s" % (stem, name, probs))
    saliency = explanation.day_saliency
    window_dates = [rows[row_index - cfg.window_days + i].day for i in range(cfg.window_days)]
    top = sorted(range(len(saliency)), key=lambda d: (-saliency[d], d))[:3]
    total = saliency.sum()
    for rank, d in enumerate(top, start=1):
        share = saliency[d] / total if total > 0 else 0.0
        print(
            "attentive day %d: %s (%.1f%% of response mass)"
            % (rank, window_dates[d].isoformat(), 100.0 * share)
        )
    print("artifacts written to %s" % out)
    return 0


def cmd_synth(cfg: AppConfig) -> int:
    rows, intended = generate_synthetic_series(
        n_days=cfg.synth_days,
        seed=cfg.seed,
        start_date=date.fromisoformat(cfg.synth_start_date),
        lookback=cfg.synth_lookback,
        step=cfg.synth_step,
        noise_frac=cfg.synth_noise_frac,
        base_price=cfg.synth_base_price,
    )
    out = _out_dir(cfg)
    path = out / "synthetic.csv"
    write_ohlcv_csv(rows, path)
    windows = make_windows(rows, cfg.window_days)
    checked = [
        (w.label, intended[i + cfg.window_days - 1])
        for i, w in enumerate(windows)
        if intended[i + cfg.window_days - 1] is not None
    ]
    agreement = float(np.mean([lab == want for lab, want in checked])) if checked else 0.0
    print("wrote %d days to %s" % (len(rows), path))
    print(
        "windowed labels agree with the planted rule on %.6f of %d windows"
        % (agreement, len(checked))
    )
    return 0


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.checkpoint, args.csv)
        if args.command == "explain":
            return cmd_explain(cfg, args.checkpoint, args.csv, args.date)
        return cmd_synth(cfg)
    except ConfigurationError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 2
    except DataError as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return 3
    except TradelensError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    except Exception as exc:  # internal invariant violation
        print("internal error: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
