"""``pad-rbm`` command line: train, eval, sample, check, gen-data.

Exit codes: 0 success, 1 check failed, 2 usage/config error, 3 IO error.
Config values come from the JSON file given by --config; command-line flags
override them.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checks
from .data_io import (
    format_bits,
    generate_bars_and_stripes,
    load_idx_images,
    load_model,
    load_text_dataset,
    save_model,
    save_text_dataset,
)
from .errors import CapacityError, InvalidArgumentError, ParseError
from .model import (
    MAX_ENUM_UNITS,
    avg_log_likelihood_exact,
)
from .perturbation import NoiseSource, Order, perturb
from .descend import descend_batch
from .matching import influence_weights, max_weight_matching
from .samplers import MAX_JOINT_UNITS, gibbs_sweep_arrays, perturb_and_map_exact
from .training import TrainConfig, reconstruction_error, train

log = logging.getLogger("pad_rbm")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

METRICS_HEADER = [
    "epoch",
    "step",
    "exact_avg_loglik",
    "recon_error",
    "grad_norm",
    "mean_hidden_activation",
    "wall_ms",
]

# keys a run config may hold beyond the TrainConfig fields
RUN_KEYS = {"data", "data_format", "idx_threshold", "model_out", "metrics_out", "record_wall_time"}


class UsageError(Exception):
    pass


class IOFailure(Exception):
    pass


def _load_dataset(path, fmt="text", threshold=128):
    if not Path(path).is_file():
        raise IOFailure(f"dataset not found: {path}")
    try:
        if fmt == "idx":
            return load_idx_images(path, threshold)
        return load_text_dataset(path)
    except OSError as exc:
        raise IOFailure(str(exc)) from None


def _load_model(path):
    if not Path(path).is_file():
        raise IOFailure(f"model file not found: {path}")
    try:
        return load_model(path)
    except OSError as exc:
        raise IOFailure(str(exc)) from None


def load_run_config(path) -> dict:
    """Read a JSON run config; unknown keys are rejected."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IOFailure(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config {path}: expected a JSON object")
    known = set(TrainConfig.field_names()) | RUN_KEYS
    unknown = sorted(set(doc) - known)
    if unknown:
        raise UsageError(f"config {path}: unknown keys {unknown}")
    return doc


def build_train_config(values: dict) -> TrainConfig:
    kw = {k: v for k, v in values.items() if k in TrainConfig.field_names()}
    try:
        return TrainConfig(**kw)
    except (InvalidArgumentError, TypeError) as exc:
        raise UsageError(f"invalid config: {exc}") from None


def _fmt_float(x):
    return "" if x is None else repr(float(x))


def metrics_csv(records, wall_time=True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for r in records:
        w.writerow(
            [
                r.epoch,
                r.step,
                _fmt_float(r.exact_avg_loglik),
                _fmt_float(r.recon_error),
                _fmt_float(r.grad_norm),
                _fmt_float(r.mean_hidden_activation),
                _fmt_float(r.wall_ms) if wall_time else "",
            ]
        )
    return buf.getvalue()


_TRAIN_FLAGS = {
    "algorithm": str,
    "hidden": int,
    "K": int,
    "beta": float,
    "perturb_order": str,
    "noise_sharing": str,
    "matching_cadence": int,
    "learning_rate": float,
    "epochs": int,
    "batch_size": int,
    "seed": int,
    "weight_decay": float,
    "momentum": float,
    "particle_count": int,
    "loglik_max_units": int,
    "threads": int,
}


def cmd_train(args) -> int:
    values = load_run_config(args.config) if args.config else {}
    for key in _TRAIN_FLAGS:
        val = getattr(args, key)
        if val is not None:
            values[key] = val
    for key in ("data", "model_out", "metrics_out", "data_format", "idx_threshold"):
        val = getattr(args, key)
        if val is not None:
            values[key] = val
    if args.mean_field_hidden:
        values["mean_field_hidden"] = True
    if args.no_wall_time:
        values["record_wall_time"] = False
    cfg = build_train_config(values)
    for key in ("data", "model_out", "metrics_out"):
        if not values.get(key):
            raise UsageError(f"missing required setting {key!r}")
    fmt = values.get("data_format", "text")
    if fmt not in ("text", "idx"):
        raise UsageError(f"data_format must be 'text' or 'idx', got {fmt!r}")
    data = _load_dataset(values["data"], fmt, int(values.get("idx_threshold", 128)))
    params, records = train(data, cfg)
    try:
        save_model(params, values["model_out"])
        Path(values["metrics_out"]).write_text(
            metrics_csv(records, values.get("record_wall_time", True)), encoding="utf-8"
        )
    except OSError as exc:
        raise IOFailure(str(exc)) from None
    if records and records[-1].exact_avg_loglik is not None:
        print(f"final exact avg log-likelihood: {records[-1].exact_avg_loglik:.6f}")
    print(f"wrote {values['model_out']} and {values['metrics_out']} ({len(records)} steps)")
    return EXIT_OK


def cmd_eval(args) -> int:
    p = _load_model(args.model)
    data = _load_dataset(args.data, args.data_format, args.idx_threshold)
    if data.n != p.n:
        raise UsageError(f"data has {data.n} visible bits, model has n={p.n}")
    if min(p.n, p.m) <= MAX_ENUM_UNITS:
        print(f"exact_avg_loglik {avg_log_likelihood_exact(data, p)!r}")
    else:
        print(f"notice: model ({p.n}, {p.m}) exceeds exact-enumeration capacity; reporting reconstruction error only")
    print(f"recon_error {reconstruction_error(data.examples, p)!r}")
    return EXIT_OK


def cmd_sample(args) -> int:
    p = _load_model(args.model)
    if args.count < 0:
        raise UsageError("count must be >= 0")
    if args.method == "pmap" and p.n + p.m > MAX_JOINT_UNITS:
        raise UsageError(f"pmap needs n + m <= {MAX_JOINT_UNITS}; model has {p.n + p.m}")
    count = args.count
    if count == 0:
        V = np.zeros((0, p.n), dtype=np.uint8)
    elif args.method == "pmap":
        V, _ = perturb_and_map_exact(p, NoiseSource.derive(args.seed, "sample-pmap"), size=count)
    elif args.method == "gibbs":
        if args.burnin < 0 or args.thin < 1:
            raise UsageError("--burnin must be >= 0 and --thin >= 1")
        src = NoiseSource.derive(args.seed, "sample-gibbs")
        v = (src.uniform(p.n) < 0.5).astype(np.uint8)
        for _ in range(args.burnin):
            v, _ = gibbs_sweep_arrays(v, p, src)
        out = []
        for _ in range(count):
            for _ in range(args.thin):
                v, _ = gibbs_sweep_arrays(v, p, src)
            out.append(v)
        V = np.stack(out)
    else:
        if args.K < 1 or args.beta < 0:
            raise UsageError("--K must be >= 1 and --beta >= 0")
        if args.data:
            seeds = _load_dataset(args.data).examples
            if seeds.shape[1] != p.n:
                raise UsageError(f"data has {seeds.shape[1]} visible bits, model has n={p.n}")
            V0 = seeds[np.arange(count) % len(seeds)]
        else:
            V0 = (NoiseSource.derive(args.seed, "sample-pd-start").uniform((count, p.n)) < 0.5).astype(np.uint8)
        order = Order(args.order)
        mt = max_weight_matching(influence_weights(p)) if order is Order.SECOND else None
        pps = [perturb(p, args.beta, NoiseSource.derive(args.seed, "sample-pd", k), order, mt) for k in range(count)]
        W = np.stack([pp.W for pp in pps]) if order is Order.SECOND else p.W
        V, _, _, _ = descend_batch(
            V0, W, np.stack([pp.a for pp in pps]), np.stack([pp.b for pp in pps]), args.K
        )
    try:
        Path(args.out).write_text(format_bits(V), encoding="utf-8")
    except OSError as exc:
        raise IOFailure(str(exc)) from None
    print(f"wrote {count} samples to {args.out}")
    return EXIT_OK


def cmd_check(args) -> int:
    p = _load_model(args.model)
    try:
        if args.check == "lemma1":
            res = checks.lemma1_check(p, draws=args.draws, seed=args.seed)
        elif args.check == "bound":
            res = checks.bound_check(p, trials=args.trials, seed=args.seed)
        else:
            data = _load_dataset(args.data).examples if args.data else None
            res = checks.gradient_check(p, data=data, seed=args.seed)
    except CapacityError as exc:
        raise UsageError(f"capacity: {exc}") from None
    print(res.describe())
    return EXIT_OK if res.passed else EXIT_CHECK_FAILED


def cmd_gen_data(args) -> int:
    if args.kind != "bars-stripes":
        raise UsageError(f"unknown dataset kind {args.kind!r}")
    try:
        if args.count is None:
            d = generate_bars_and_stripes(args.d)
        else:
            d = generate_bars_and_stripes(args.d, NoiseSource.derive(args.seed, "gen-data"), args.count)
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from None
    try:
        save_text_dataset(d, args.out)
    except OSError as exc:
        raise IOFailure(str(exc)) from None
    print(f"wrote {len(d)} examples to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pad-rbm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train an RBM")
    t.add_argument("--config")
    t.add_argument("--data")
    t.add_argument("--data-format", choices=["text", "idx"])
    t.add_argument("--idx-threshold", type=int)
    t.add_argument("--model-out")
    t.add_argument("--metrics-out")
    for key, typ in _TRAIN_FLAGS.items():
        flag = "--" + key.replace("_", "-")
        if key == "K":
            t.add_argument("--K", "-k", dest="K", type=typ)
        else:
            t.add_argument(flag, dest=key, type=typ)
    t.add_argument("--mean-field-hidden", action="store_true")
    t.add_argument("--no-wall-time", action="store_true", help="leave wall_ms empty for reproducible CSVs")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="exact average log-likelihood of data")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--data-format", choices=["text", "idx"], default="text")
    e.add_argument("--idx-threshold", type=int, default=128)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sample", help="draw visible samples")
    s.add_argument("--model", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--method", choices=["gibbs", "pd", "pmap"], default="gibbs")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burnin", type=int, default=1000)
    s.add_argument("--thin", type=int, default=1)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--K", "-k", dest="K", type=int, default=10)
    s.add_argument("--order", choices=["first", "second"], default="first")
    s.add_argument("--data", help="start PD descents from these examples")
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("check", help="statistical / numerical self-checks on a small model")
    c.add_argument("--model", required=True)
    c.add_argument("--check", choices=["lemma1", "bound", "gradcheck"], required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--draws", type=int, default=200_000)
    c.add_argument("--trials", type=int, default=10_000)
    c.add_argument("--data")
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset")
    g.add_argument("--kind", default="bars-stripes")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, help="sample this many patterns instead of enumerating")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IOFailure as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ParseError, InvalidArgumentError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
