"""Command-line front end.

Subcommands: ``train``, ``evaluate``, ``benchmark``, ``scheme-compare`` and
``verify-schemes``.  Every run writes a ``manifest.json`` next to its
outputs recording the effective configuration, dataset checksum, seeds and
timings.  Exit status is 0 on success, 1 on a failed check or runtime
error, and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import Dataset, SplitSpec, load_arff, load_csv, parse_label_spec, split
from .experiment import METHOD_MODES, benchmark_dict, derive_seeds, run_benchmark, worker_count
from .metrics import CRITERIA, dumps, evaluate_all, format_table
from .model import load_checkpoint, save_checkpoint, train_model
from .selfpace import SchemeKind, corrupted_funcs, verify_scheme
from .trainer import TrainConfig

log = logging.getLogger("mlspl")

TOY_NAME = "toy"
TOY_LABELS = 3

# flag attribute -> TrainConfig field
_CONFIG_FLAGS = {
    "scheme": "scheme", "alpha": "alpha", "beta": "beta", "m": "m",
    "lambda0": "lambda0", "mu": "mu", "max_outer": "max_outer", "tol": "tol",
}


class CLIError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def toy_path() -> Path:
    return Path(str(resources.files("mlspl") / "data" / "toy.arff"))


def load_dataset(args) -> tuple[Dataset, dict]:
    """Dataset plus an identity record (paths and checksums) for the manifest."""
    if args.dataset is None:
        raise CLIError("--dataset is required")
    if args.dataset == TOY_NAME:
        path = toy_path()
        ds = load_arff(path, TOY_LABELS)
        return ds, {"name": TOY_NAME, "format": "arff", "files": {str(path): _sha256(path)},
                    "n": ds.n, "d": ds.d, "labels": ds.n_labels}
    path = Path(args.dataset)
    fmt = args.format or ("csv" if path.suffix.lower() == ".csv" else "arff")
    if args.labels is None:
        raise CLIError("--labels is required (label count, names, MULAN .xml, or label CSV)")
    if fmt == "arff":
        ds = load_arff(path, parse_label_spec(args.labels))
        files = {str(path): _sha256(path)}
    else:
        ds = load_csv(path, args.labels)
        files = {str(path): _sha256(path), str(args.labels): _sha256(args.labels)}
    return ds, {"name": path.stem, "format": fmt, "files": files,
                "n": ds.n, "d": ds.d, "labels": ds.n_labels}


def resolve_config(args) -> TrainConfig:
    """Flags override config-file keys, which override built-in defaults."""
    values = {}
    if getattr(args, "config", None):
        try:
            values = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise CLIError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(values, dict):
            raise CLIError(f"{args.config}: expected a JSON object")
    for flag, key in _CONFIG_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            values[key] = val
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if getattr(args, "no_standardize", False):
        values["standardize"] = False
    try:
        return TrainConfig.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise CLIError(f"invalid configuration: {exc}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj) + "\n")


def write_manifest(out: Path, command: str, cfg, dataset: dict | None, seeds: dict,
                   timings: dict, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "toolkit_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": None if cfg is None else cfg.to_dict(),
        "dataset": dataset,
        "seeds": seeds,
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }
    if extra:
        manifest.update(extra)
    _write_json(out / "manifest.json", manifest)


def _split_or_whole(ds, args, side):
    if args.train_fraction is None:
        return ds
    train, test = split(ds, SplitSpec(args.train_fraction, args.split_seed))
    return train if side == "train" else test


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    t0 = time.perf_counter()
    cfg = resolve_config(args)
    ds, ident = load_dataset(args)
    train = _split_or_whole(ds, args, "train")
    t1 = time.perf_counter()
    model = train_model(train, cfg)
    t2 = time.perf_counter()
    out = _out_dir(args)
    save_checkpoint(model, out / "model.json")
    st = model.state
    print(f"trained {train.n} instances, {st.iteration} sweeps, final lambda {st.lam:.6g}")
    print(f"checkpoint: {out / 'model.json'}")
    write_manifest(out, "train", cfg, ident,
                   {"train": cfg.seed, "split": args.split_seed if args.train_fraction else None},
                   {"load": t1 - t0, "train": t2 - t1},
                   {"train_fraction": args.train_fraction, "checkpoint": "model.json",
                    "checkpoint_sha256": _sha256(out / "model.json")})
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    model = load_checkpoint(args.checkpoint)
    ds, ident = load_dataset(args)
    test = _split_or_whole(ds, args, "test")
    if test.d != len(model.feature_names):
        raise CLIError(f"checkpoint expects {len(model.feature_names)} features, "
                       f"dataset has {test.d}")
    scores = model.scores(test.features)
    report = evaluate_all(scores, model.predict(test.features), test.labels)
    out = _out_dir(args)
    payload = {"kind": "evaluation", **report.to_dict()}
    _write_json(out / "report.json", payload)
    table = "\n".join(f"{c.replace('_', ' '):<18} {getattr(report, c):.4f}" for c in CRITERIA)
    (out / "report.txt").write_text(table + "\n")
    with open(out / "scores.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(model.label_names)
        w.writerows([[repr(float(v)) for v in row] for row in scores])
    print(table)
    write_manifest(out, "evaluate", model.config, ident,
                   {"split": args.split_seed if args.train_fraction else None},
                   {"evaluate": time.perf_counter() - t0},
                   {"checkpoint_sha256": _sha256(args.checkpoint),
                    "train_fraction": args.train_fraction})
    return 0


def _methods(args) -> list:
    methods = ["mlspl"]
    if args.baselines:
        methods = ["independent_binary", "mllocc_equivalent", "mlspl"]
    return methods


def cmd_benchmark(args) -> int:
    t0 = time.perf_counter()
    cfg = resolve_config(args)
    ds, ident = load_dataset(args)
    methods = _methods(args)
    aggs, results = run_benchmark(ds, cfg, methods=methods, repeats=args.repeats,
                                  base_seed=cfg.seed, train_fraction=args.train_fraction,
                                  grid=args.grid)
    out = _out_dir(args)
    report = {"kind": "benchmark", "train_fraction": args.train_fraction,
              "grid": args.grid, **benchmark_dict(aggs, results)}
    _write_json(out / "report.json", report)
    table = format_table(aggs)
    (out / "report.txt").write_text(table)
    print(table, end="")
    write_manifest(out, "benchmark", cfg, ident,
                   {"base": cfg.seed, "repeats": derive_seeds(cfg.seed, args.repeats)},
                   {"total": time.perf_counter() - t0,
                    **{f"{r.method}[{r.repeat}]": r.seconds for r in results}},
                   {"methods": methods, "workers": worker_count()})
    return 0


def cmd_scheme_compare(args) -> int:
    t0 = time.perf_counter()
    cfg = resolve_config(args)
    ds, ident = load_dataset(args)
    aggs = {}
    per_scheme = {}
    for kind in SchemeKind:
        a, results = run_benchmark(ds, replace(cfg, scheme=kind), methods=("mlspl",),
                                   repeats=args.repeats, base_seed=cfg.seed,
                                   train_fraction=args.train_fraction, grid=args.grid)
        aggs[kind.value] = a["mlspl"]
        per_scheme[kind.value] = benchmark_dict(a, results)
    out = _out_dir(args)
    with open(out / "schemes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "criterion", "mean", "std"])
        for kind, agg in aggs.items():
            for c in CRITERIA:
                w.writerow([kind, c, repr(agg.mean[c]), repr(agg.std[c])])
    _write_json(out / "report.json", {"kind": "scheme_compare",
                                      "train_fraction": args.train_fraction,
                                      "grid": args.grid, "schemes": per_scheme})
    table = format_table(aggs)
    (out / "report.txt").write_text(table)
    print(table, end="")
    write_manifest(out, "scheme-compare", cfg, ident,
                   {"base": cfg.seed, "repeats": derive_seeds(cfg.seed, args.repeats)},
                   {"total": time.perf_counter() - t0})
    return 0


def cmd_verify_schemes(args) -> int:
    rows = []
    for kind in SchemeKind:
        funcs = corrupted_funcs(kind) if args.corrupt else None
        rep = verify_scheme(kind, funcs=funcs)
        rows.append(rep.as_dict())
        for c in rep.checks:
            print(f"{kind.value:<12} {c.name:<20} {'PASS' if c.passed else 'FAIL'}  "
                  f"worst={c.worst:.3g}")
    ok = all(r["passed"] for r in rows)
    if args.out:
        out = _out_dir(args)
        _write_json(out / "verification.json",
                    {"kind": "verification", "corrupted": bool(args.corrupt),
                     "passed": ok, "schemes": rows})
    print("all schemes pass" if ok else "verification FAILED")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _positive_int(text):
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def _data_args(p, *, split_flags=True):
    p.add_argument("--dataset", help=f"ARFF/CSV path, or '{TOY_NAME}' for the bundled toy set")
    p.add_argument("--format", choices=("arff", "csv"), help="default: from the file suffix")
    p.add_argument("--labels", help="ARFF: label count, comma-separated names or MULAN .xml; "
                                    "CSV: path of the label matrix")
    if split_flags:
        p.add_argument("--train-fraction", type=float, default=None,
                       help="use only one side of a random split (train or test)")
        p.add_argument("--split-seed", type=int, default=0)


def _config_args(p):
    p.add_argument("--config", help="JSON file of training options")
    p.add_argument("--scheme", choices=[k.value for k in SchemeKind])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--m", type=int, help="code length")
    p.add_argument("--lambda0", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--max-outer", type=int, dest="max_outer")
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-standardize", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlspl", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"mlspl {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _data_args(p)
    _config_args(p)
    p.add_argument("--out", default="mlspl-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a dataset with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    _data_args(p)
    p.add_argument("--out", default="mlspl-out")
    p.set_defaults(func=cmd_evaluate)

    for name, func, text in (
        ("benchmark", cmd_benchmark, "repeated random-split benchmark"),
        ("scheme-compare", cmd_scheme_compare, "benchmark once per self-paced scheme"),
    ):
        p = sub.add_parser(name, help=text)
        _data_args(p, split_flags=False)
        _config_args(p)
        p.add_argument("--repeats", type=_positive_int, default=10)
        p.add_argument("--train-fraction", type=float, default=0.3)
        p.add_argument("--grid", action="store_true",
                       help="select lambda0 and mu on a 20%% holdout of each training split")
        if name == "benchmark":
            p.add_argument("--baselines", action="store_true",
                           help="also run independent_binary and mllocc_equivalent")
        p.add_argument("--out", default="mlspl-out")
        p.set_defaults(func=func)

    p = sub.add_parser("verify-schemes", help="numerically check the four self-paced schemes")
    p.add_argument("--corrupt", action="store_true",
                   help="debug: verify deliberately broken regularizers (must fail)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify_schemes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"mlspl {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"mlspl {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
