"""Command-line interface.

Subcommands: synth, convert, extract, train, eval, bench, sweep-latency.
Every option can also come from a flat ``key=value`` file passed with
``--config`` (keys are the long flag names without dashes); command-line
flags win. Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal error.
Errors are reported as one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import ClassifierError, load_model, save_model, train_linear_svm
from .dataset import (
    MANIFEST, Sample, load_dataset, read_manifest, scan_labelled_tree, stratified_split,
    write_dataset, write_manifest,
)
from .events import EventError, SensorGeometry
from .featfile import read_features, write_features
from .formats import FORMATS, WRITE_FORMATS, guess_format, read_events, write_events
from .hats import MODES, BlockNorm, HatsParams
from .pipeline import EmptyDataset, benchmark, evaluate, extract_features, latency_sweep
from .synth import NoiseSpec, two_class_dataset

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _feature_flags(p):
    g = p.add_argument_group("features")
    g.add_argument("--k", type=int, default=10, help="cell size in pixels")
    g.add_argument("--rho", type=int, default=3, help="surface radius in pixels")
    g.add_argument("--tau", type=float, default=1e9, help="decay constant (us)")
    g.add_argument("--dt", type=float, default=100_000, help="memory window / stacking window (us)")
    g.add_argument("--windows", type=int, default=1, help="number of stacked dt windows")
    g.add_argument("--mode", choices=MODES, default="faithful")
    g.add_argument("--block-norm", default="off", help="off or l<p>:<cells>, e.g. l2:2")
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--format", default=None, help=f"event file format {FORMATS} (default: by extension)")


def _svm_flags(p):
    g = p.add_argument_group("classifier")
    g.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    g.add_argument("--epochs", type=int, default=50)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--standardize", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="evhats", description=__doc__.splitlines()[0])
    root.add_argument("--version", action="version", version=__version__)
    sub = root.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key=value file with default option values")
        return p

    p = add("synth", "write a synthetic two-class dataset directory")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=200)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--duration", type=int, default=100_000)
    p.add_argument("--noise-rate", type=float, default=5000.0, help="noise events/s over the array")
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=WRITE_FORMATS, default="canonical")

    p = add("convert", "convert an event file, dataset directory or labelled tree")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--from", dest="src_format", choices=FORMATS, default=None)
    p.add_argument("--to", dest="dst_format", choices=WRITE_FORMATS, default="canonical")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--pattern", default="*.bin", help="file glob inside <split>/<label>/ trees")

    p = add("extract", "compute HATS features for a dataset directory")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=("all", "train", "test"), default="all")
    _feature_flags(p)

    p = add("train", "train a linear SVM on a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    _svm_flags(p)

    p = add("eval", "evaluate a model on a feature file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="metrics JSON")
    p.add_argument("--roc-csv", default=None)

    p = add("bench", "time feature extraction over a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None, help="metrics JSON (default: stdout)")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--split", choices=("all", "train", "test"), default="all")
    _feature_flags(p)

    p = add("sweep-latency", "accuracy/AUC as a function of the observed duration")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="CSV table")
    p.add_argument("--report", default=None, help="metrics JSON")
    p.add_argument("--durations", required=True, help="comma-separated microseconds, ascending")
    p.add_argument("--repetitions", type=int, default=5)
    _feature_flags(p)
    _svm_flags(p)
    return root


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            out[key.strip()] = value.strip()
    return out


def _find_config(argv):
    command = next((a for a in argv if not a.startswith("-")), None)
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return command, argv[i + 1]
        if a.startswith("--config="):
            return command, a.split("=", 1)[1]
    return command, None


def _apply_config(parser, command, path):
    choices = parser._subparsers._group_actions[0].choices
    if command not in choices:
        return
    sub = choices[command]
    by_flag = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                by_flag[opt[2:]] = action
                by_flag[action.dest] = action
    defaults = {}
    for key, value in read_config(path).items():
        action = by_flag.get(key) or by_flag.get(key.replace("_", "-"))
        if action is None or action.dest == "config":
            raise UsageError(f"{path}: unknown option {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = value.lower() in ("1", "true", "yes", "on")
        elif value == "None":
            defaults[action.dest] = None
        elif action.type is not None:
            try:
                defaults[action.dest] = action.type(value)
            except ValueError:
                raise UsageError(f"{path}: bad value for {key}: {value!r}") from None
        else:
            defaults[action.dest] = value
        action.required = False
    sub.set_defaults(**defaults)


def parse_args(argv):
    parser = build_parser()
    command, config = _find_config(argv)
    if config:
        try:
            _apply_config(parser, command, config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise UsageError("missing subcommand; see --help")
    return ns


def write_config(config: dict, path) -> None:
    """Inverse of :func:`read_config` for a resolved config echo."""
    with open(path, "w") as fh:
        for k, v in config.items():
            if k == "command":
                continue
            fh.write(f"{k}={v}\n")


def resolved_config(ns) -> dict:
    return {k: v for k, v in sorted(vars(ns).items()) if k not in ("config", "func")}


def hats_params(ns) -> HatsParams:
    try:
        return HatsParams.make(ns.k, ns.rho, ns.tau, ns.dt, ns.mode, BlockNorm.parse(ns.block_norm))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _meta(ns, **extra) -> dict:
    return {
        "tool": f"evhats {__version__}",
        "config": resolved_config(ns),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "host": platform.node(),
        "python": platform.python_version(),
        **extra,
    }


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _load_streams(root, split, fmt):
    streams = [stream for _, stream in load_dataset(root, split, fmt)]
    if not streams:
        raise EmptyDataset(f"{root}: no samples in split {split!r}")
    return streams


def cmd_synth(ns):
    g = SensorGeometry(ns.width, ns.height)
    streams = two_class_dataset(ns.n_per_class, g, NoiseSpec(ns.noise_rate), ns.seed, ns.duration)
    split = stratified_split([s.label for s in streams], ns.test_fraction, ns.seed)
    write_dataset(ns.out, streams, split, ns.format)
    print(f"wrote {len(streams)} samples to {ns.out}")


def cmd_convert(ns):
    src = Path(ns.input)
    out = Path(ns.out)
    geometry = SensorGeometry(ns.width, ns.height) if ns.width and ns.height else None
    ext = ".csv" if ns.dst_format == "csv" else ".evt"
    if src.is_file():
        stream = read_events(src, ns.src_format or guess_format(src), geometry)
        write_events(stream, out, ns.dst_format)
        print(f"converted {len(stream)} events")
        return
    if not src.is_dir():
        raise FileNotFoundError(f"{src}: no such file or directory")
    rows = read_manifest(src) if (src / MANIFEST).exists() else scan_labelled_tree(src, ns.pattern)
    if not rows:
        raise EmptyDataset(f"{src}: nothing to convert")
    out.mkdir(parents=True, exist_ok=True)
    new_rows = []
    for i, r in enumerate(rows):
        path = src / r.file
        try:
            stream = read_events(path, ns.src_format or guess_format(path), geometry)
        except EventError as exc:
            raise EventError(f"{path}: {exc}") from None
        name = f"sample_{i:06d}{ext}"
        write_events(stream, out / name, ns.dst_format)
        new_rows.append(Sample(name, r.label, r.split))
    write_manifest(out, new_rows)
    print(f"converted {len(new_rows)} samples to {out}")


def cmd_extract(ns):
    params = hats_params(ns)
    streams = _load_streams(ns.input, ns.split, ns.format)
    X, seconds = extract_features(streams, params, ns.windows, ns.threads)
    labels = np.array([s.label for s in streams])
    write_features(ns.out, X, labels)
    meta = _meta(ns, fingerprint=params.fingerprint(ns.windows), samples=len(streams),
                 dim=int(X.shape[1]), feature_seconds=float(seconds.sum()))
    _write_json(meta, f"{ns.out}.json")
    print(f"extracted {X.shape[0]} x {X.shape[1]} features to {ns.out}")


def _fingerprint_of(features_path) -> str:
    meta = Path(f"{features_path}.json")
    if meta.exists():
        return json.loads(meta.read_text()).get("fingerprint", "")
    return ""


def cmd_train(ns):
    X, labels = read_features(ns.features)
    if labels is None:
        raise EmptyDataset(f"{ns.features}: no label sidecar, cannot train")
    model = train_linear_svm(X, labels, ns.lam, ns.epochs, ns.seed, ns.standardize,
                             fingerprint=_fingerprint_of(ns.features))
    save_model(model, ns.out)
    print(f"trained {len(model.classes)}-class model on {len(X)} samples")


def cmd_eval(ns):
    model = load_model(ns.model)
    X, labels = read_features(ns.features)
    if labels is None:
        raise EmptyDataset(f"{ns.features}: no label sidecar, cannot evaluate")
    fp = _fingerprint_of(ns.features)
    if model.fingerprint and fp and fp != model.fingerprint:
        raise ClassifierError(f"feature fingerprint {fp} does not match model {model.fingerprint}")
    metrics = evaluate(model, X, labels)
    if ns.roc_csv and "roc" in metrics:
        with open(ns.roc_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fpr", "tpr"])
            w.writerows(metrics["roc"])
    _write_json({**metrics, **_meta(ns, model_hyper=model.hyper, fingerprint=model.fingerprint)}, ns.out)
    print(f"accuracy {metrics['accuracy']:.4f}" + (f" auc {metrics['auc']:.4f}" if "auc" in metrics else ""))


def cmd_bench(ns):
    params = hats_params(ns)
    streams = _load_streams(ns.input, ns.split, ns.format)
    report = benchmark(streams, params, ns.windows, ns.repeat, ns.threads)
    if ns.threads > 1:
        report["single_thread"] = benchmark(streams, params, ns.windows, ns.repeat, 1)
    report.update(_meta(ns, fingerprint=params.fingerprint(ns.windows)))
    report["reference"] = {"kev_per_s": 555.74, "ms_per_sample": 7.28, "note": "published figure, N-CARS, i7 2.7GHz"}
    _write_json(report, ns.out)


def cmd_sweep_latency(ns):
    params = hats_params(ns)
    try:
        durations = [float(d) for d in ns.durations.split(",") if d.strip()]
    except ValueError:
        raise UsageError(f"bad --durations {ns.durations!r}") from None
    if not durations or any(d <= 0 for d in durations) or durations != sorted(durations):
        raise UsageError("--durations must be positive and ascending")
    durations = [int(d) if d.is_integer() else d for d in durations]
    train = _load_streams(ns.input, "train", ns.format)
    test = _load_streams(ns.input, "test", ns.format)
    rows = latency_sweep(train, test, durations, params, ns.windows, ns.repetitions,
                         ns.lam, ns.epochs, ns.seed, ns.standardize, ns.threads)
    with open(ns.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["duration", "accuracy", "auc"])
        w.writeheader()
        w.writerows(rows)
    if ns.report:
        _write_json({"sweep": rows, **_meta(ns, fingerprint=params.fingerprint(ns.windows))}, ns.report)
    for r in rows:
        print(f"{r['duration']}\t{r['accuracy']:.4f}\t{r['auc']:.4f}")


COMMANDS = {
    "synth": cmd_synth, "convert": cmd_convert, "extract": cmd_extract, "train": cmd_train,
    "eval": cmd_eval, "bench": cmd_bench, "sweep-latency": cmd_sweep_latency,
}


def _fail(code, exc):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit": code}) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parse_args(argv)
        COMMANDS[ns.command](ns)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    except (EventError, ClassifierError, EmptyDataset, FileNotFoundError, IsADirectoryError,
            ValueError, KeyError, OSError) as exc:
        return _fail(EXIT_DATA, exc)
    except Exception as exc:  # noqa: BLE001
        return _fail(EXIT_INTERNAL, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
