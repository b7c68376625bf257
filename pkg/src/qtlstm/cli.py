"""Command-line interface.

Subcommands: ``synth-data``, ``train``, ``evaluate``, ``predict``, ``compare``.

Settings come from an INI-style config file with a single ``[qtlstm]``
section (path from ``--config`` or the ``QTLSTM_CONFIG`` environment
variable); command-line flags override it. Exit codes: 0 success, 1 usage,
2 data/schema/I-O problems, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path


from . import checkpoint as ckpt
from . import lstm
from .data import DEFAULT_LAGS, Schema, load_csv, prepare_dataset, synth_flood_series, write_csv
from .errors import DataError, DivergenceError
from .evaluation import DEFAULT_THRESHOLD_CM, classify_warnings, evaluate_regression
from .lstm import LstmSpec
from .mapping import default_layer_dims
from .trainer import QtModel, TrainConfig, persistence_mse, train_classical, train_qt

log = logging.getLogger("qtlstm")

CONFIG_ENV = "QTLSTM_CONFIG"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


@dataclass
class Settings:
    """Every config key, with its default."""

    data: str | None = None
    level_column: str = "level_cm"
    feature_columns: list[str] | None = None
    lags: list[int] = tuple(DEFAULT_LAGS)
    window: int = 30
    horizon_steps: int = 24
    test_fraction: float = 0.2
    val_fraction: float = 0.2
    hidden_dim: int = 24
    n_block: int = 2
    mapping_width: int | None = None
    epochs: int = 200
    batch_size: int | None = None
    learning_rate: float = 1e-3
    classical_learning_rate: float | None = None
    optimizer: str = "adam"
    seed: int = 0
    gradient_clip: float | None = None
    threshold: float = DEFAULT_THRESHOLD_CM


_LIST_INT = {"lags"}
_LIST_STR = {"feature_columns"}


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name in _LIST_INT:
        return [int(v) for v in raw.split(",") if v.strip()]
    if name in _LIST_STR:
        return [v.strip() for v in raw.split(",") if v.strip()] or None
    default = Settings.__dataclass_fields__[name].default
    if raw.lower() in ("", "none") and name in ("data", "mapping_width", "batch_size", "gradient_clip", "classical_learning_rate"):
        return None
    if name in ("data", "level_column", "optimizer"):
        return raw
    if isinstance(default, int) or name in ("mapping_width", "batch_size"):
        return int(raw)
    return float(raw)


def read_config(path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not parser.read(path):
        raise FileNotFoundError(f"config file not found: {path}")
    if "qtlstm" not in parser:
        raise DataError(f"{path}: missing [qtlstm] section")
    known = {f.name for f in fields(Settings)}
    out = {}
    for key, raw in parser["qtlstm"].items():
        if key not in known:
            raise DataError(f"{path}: unknown config key {key!r}")
        try:
            out[key] = _coerce(key, raw)
        except ValueError:
            raise DataError(f"{path}: bad value for {key}: {raw!r}") from None
    return out


def resolve_settings(args: argparse.Namespace) -> Settings:
    values = {}
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        values.update(read_config(path))
    for f in fields(Settings):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return Settings(**values)


# -- helpers ---------------------------------------------------------------


def _dataset(s: Settings, csv_path, stats=None):
    if not csv_path:
        raise DataError("no dataset given (use --data or the 'data' config key)")
    table = load_csv(csv_path, Schema(s.level_column, s.feature_columns))
    return prepare_dataset(
        table,
        s.level_column,
        s.horizon_steps,
        window=s.window,
        lags=s.lags,
        feature_columns=s.feature_columns,
        test_fraction=s.test_fraction,
        val_fraction=s.val_fraction,
        stats=stats,
    )


def _train_config(s: Settings, mode: str) -> TrainConfig:
    lr = s.learning_rate
    if mode == "classical" and s.classical_learning_rate is not None:
        lr = s.classical_learning_rate
    return TrainConfig(s.epochs, s.batch_size, lr, s.optimizer, s.seed, s.gradient_clip)


def _data_block(s: Settings, ds) -> dict:
    return {
        "level_column": ds.level_column,
        "feature_columns": s.feature_columns,
        "feature_names": list(ds.feature_names),
        "lags": list(s.lags),
        "window": ds.window,
        "horizon_steps": ds.horizon_steps,
        "test_fraction": s.test_fraction,
        "val_fraction": s.val_fraction,
        "normalization": ds.stats.to_dict(),
    }


def run_training(s: Settings, mode: str, ds):
    """Train one mode; returns ``(report, checkpoint)``."""
    spec = LstmSpec(ds.windows.shape[2], s.hidden_dim)
    config = _train_config(s, mode)
    if mode == "qt":
        n = lstm.qubits_for(lstm.param_count(spec))
        dims = None if s.mapping_width is None else [n + 1, s.mapping_width, s.mapping_width, 1]
        model = QtModel.init(spec, s.n_block, dims or default_layer_dims(n), seed=s.seed)
        report, model = train_qt(model, ds, config)
        ck = ckpt.Checkpoint("qt", spec, s.seed, _data_block(s, ds), model=model)
    else:
        report, theta = train_classical(spec, ds, config)
        ck = ckpt.Checkpoint("classical", spec, s.seed, _data_block(s, ds), theta=theta)
    ck.metrics = {"val_loss": report.final_val_loss, "trainable_count": report.trainable_count, "M": report.M}
    return report, ck


def _checkpoint_settings(ck: ckpt.Checkpoint, s: Settings) -> Settings:
    d = ck.data
    return Settings(
        data=s.data,
        level_column=d["level_column"],
        feature_columns=d["feature_columns"],
        lags=d["lags"],
        window=d["window"],
        horizon_steps=d["horizon_steps"],
        test_fraction=d["test_fraction"],
        val_fraction=d["val_fraction"],
        threshold=s.threshold,
    )


def checkpoint_predictions(ck: ckpt.Checkpoint, csv_path, split: str, s: Settings):
    """``(timestamps, actual_cm, predicted_cm, dataset)`` for one split."""
    ds = _dataset(_checkpoint_settings(ck, s), csv_path, stats=ck.stats)
    if list(ds.feature_names) != ck.data["feature_names"]:
        raise DataError(f"dataset features {ds.feature_names} differ from checkpoint {ck.data['feature_names']}")
    x, y = ds.subset(split)
    if len(y) == 0:
        raise DataError(f"split {split!r} is empty")
    preds = lstm.forward(ck.lstm_theta(), ck.spec, x)
    level = ds.level_column
    ts = ds.timestamps[ds.split.get(split)]
    return ts, ds.stats.unscale_column(y, level), ds.stats.unscale_column(preds, level), ds


def _fmt(v: float) -> str:
    return repr(float(v))


# -- subcommands -----------------------------------------------------------


def cmd_synth(args) -> int:
    table = synth_flood_series(args.length, args.seed, args.spike_rate, args.noise)
    write_csv(table, args.out)
    print(f"wrote {len(table)} rows to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    s = resolve_settings(args)
    ds = _dataset(s, s.data)
    report, ck = run_training(s, args.mode, ds)
    ckpt.save(ck, args.checkpoint)
    curve = args.curve or str(Path(args.checkpoint).with_suffix("")) + "_curve.csv"
    report.write_curve(curve)
    print(f"{args.mode}: trainable={report.trainable_count} M={report.M} final_val_loss={report.final_val_loss:.6g}")
    print(f"checkpoint -> {args.checkpoint}; learning curve -> {curve}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    s = resolve_settings(args)
    ck = ckpt.load(args.checkpoint)
    _, actual, pred, ds = checkpoint_predictions(ck, s.data, args.split, s)
    reg = evaluate_regression(pred, actual)
    warn = classify_warnings(pred, actual, s.threshold)
    persist = ds.stats.unscale_column(ds.last_level(args.split), ds.level_column)
    base = evaluate_regression(persist, actual)
    result = {
        "mode": ck.mode,
        "split": args.split,
        "regression": {"mse": reg.mse, "mae": reg.mae, "n_samples": reg.n_samples},
        "persistence": {"mse": base.mse, "mae": base.mae, "n_samples": base.n_samples},
        "warnings": warn.as_dict(),
    }
    print(f"{ck.mode} on {args.split}: MSE={reg.mse:.4f} MAE={reg.mae:.4f} (n={reg.n_samples})")
    print(f"persistence: MSE={base.mse:.4f} MAE={base.mae:.4f}")
    print(
        f"warnings @ {warn.threshold_cm:g} cm: true={warn.true_warning_pct:.2f}% "
        f"false_alert={warn.false_alert_pct:.2f}% missed={warn.missed_warning_pct:.2f}% "
        f"correct_no_warning={warn.correct_no_warning_pct:.2f}%"
    )
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2) + "\n")
    return EXIT_OK


def cmd_predict(args) -> int:
    s = resolve_settings(args)
    ck = ckpt.load(args.checkpoint)
    ts, actual, pred, _ = checkpoint_predictions(ck, s.data, args.split, s)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "actual", "predicted"])
        for t, a, p in zip(ts, actual, pred):
            w.writerow([str(t), _fmt(a), _fmt(p)])
    print(f"wrote {len(ts)} predictions to {args.out}")
    return EXIT_OK


def compare(s: Settings, ds, outdir: Path | None = None) -> list[dict]:
    """Train both modes on ``ds`` and collect one row of results per mode."""
    rows = []
    for mode in ("classical", "qt"):
        report, ck = run_training(s, mode, ds)
        x, y = ds.subset("test")
        preds = lstm.forward(ck.lstm_theta(), ck.spec, x)
        level = ds.level_column
        actual = ds.stats.unscale_column(y, level)
        pred_cm = ds.stats.unscale_column(preds, level)
        reg = evaluate_regression(pred_cm, actual)
        warn = classify_warnings(pred_cm, actual, s.threshold)
        if outdir is not None:
            ckpt.save(ck, outdir / f"{mode}.json")
            report.write_curve(outdir / f"{mode}_curve.csv")
        rows.append(
            {
                "mode": mode,
                "trainable": report.trainable_count,
                "M": report.M,
                "val_loss": report.final_val_loss,
                "test_mse_cm2": reg.mse,
                "test_mae_cm": reg.mae,
                "true_warning_pct": warn.true_warning_pct,
                "false_alert_pct": warn.false_alert_pct,
                "missed_warning_pct": warn.missed_warning_pct,
                "correct_no_warning_pct": warn.correct_no_warning_pct,
            }
        )
    return rows


def cmd_compare(args) -> int:
    s = resolve_settings(args)
    ds = _dataset(s, s.data)
    outdir = Path(args.outdir) if args.outdir else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    rows = compare(s, ds, outdir)
    print(f"persistence val_loss={persistence_mse(ds):.6g}")
    for r in rows:
        print(
            f"{r['mode']}: trainable={r['trainable']} M={r['M']} val_loss={r['val_loss']:.6g} "
            f"test_MSE={r['test_mse_cm2']:.3f} test_MAE={r['test_mae_cm']:.3f}"
        )
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in r.items()})
    return EXIT_OK


# -- parser ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_settings(p: argparse.ArgumentParser, training: bool) -> None:
    p.add_argument("--config", help=f"config file (default: ${CONFIG_ENV})")
    p.add_argument("--data", help="input CSV")
    p.add_argument("--threshold", type=float, help="flood threshold in cm (default 100)")
    if not training:
        return
    p.add_argument("--level-column", dest="level_column")
    p.add_argument("--feature-columns", dest="feature_columns", type=_str_list)
    p.add_argument("--lags", type=_int_list, help="comma-separated lags (default 1,3,5,7)")
    p.add_argument("--window", type=int)
    p.add_argument("--horizon-steps", dest="horizon_steps", type=int)
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--val-fraction", dest="val_fraction", type=float)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    p.add_argument("--n-block", dest="n_block", type=int)
    p.add_argument("--mapping-width", dest="mapping_width", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--classical-lr", dest="classical_learning_rate", type=float)
    p.add_argument("--optimizer", choices=["adam", "sgd"])
    p.add_argument("--seed", type=int)
    p.add_argument("--gradient-clip", dest="gradient_clip", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtlstm", description="Circuit-generated LSTM forecasting and flood warnings")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth-data", help="write a synthetic flood-like series CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--length", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spike-rate", type=float, default=0.008)
    p.add_argument("--noise", type=float, default=1.5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a QT or classical model")
    p.add_argument("--mode", choices=["qt", "classical"], default="qt")
    p.add_argument("--checkpoint", required=True, help="output checkpoint (JSON)")
    p.add_argument("--curve", help="learning-curve CSV (default: <checkpoint>_curve.csv)")
    _add_settings(p, training=True)
    p.set_defaults(func=cmd_train)

    for name, func, helptext in (
        ("evaluate", cmd_evaluate, "regression metrics and warning report"),
        ("predict", cmd_predict, "write timestamp,actual,predicted CSV"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--split", choices=["train", "val", "test", "all"], default="test")
        p.add_argument("--out", required=(name == "predict"))
        _add_settings(p, training=False)
        p.set_defaults(func=func)

    p = sub.add_parser("compare", help="train both modes and tabulate results")
    p.add_argument("--out", help="comparison CSV")
    p.add_argument("--outdir", help="directory for both checkpoints and learning curves")
    _add_settings(p, training=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), file=sys.stderr)
        return EXIT_DATA
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        if exc.report is not None and exc.report.train_loss:
            print(f"last finite train loss {exc.report.train_loss[-1]:.6g}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
