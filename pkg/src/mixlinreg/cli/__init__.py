"""Command-line harness.

Subcommands: gen, pipeline, bench-subspace, bench-tmin-cluster,
bench-tmin-classify, bench-em, predict. Common flags: --config PATH,
--seed U64, --threads N, --out PATH, --format {csv,json}.
"""

from __future__ import annotations

import argparse

import numpy as np

from .. import __version__
from ..datagen import sample_meta_params, sample_pool
from ..eval import prediction_error
from ..model import FittedModel
from .bench import bench_em_compare, bench_subspace, bench_tmin, subspace_grid
from .config import RunConfig, config_hash, parse_config
from .pipeline import run_pipeline, spectral_fit
from .reports import csv_text, flatten_report, json_text, write_output

__all__ = [
    "main",
    "run_pipeline",
    "spectral_fit",
    "bench_subspace",
    "bench_tmin",
    "bench_em_compare",
    "RunConfig",
    "parse_config",
]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixlinreg",
        description="Spectral meta-learning for mixed linear regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gen", "generate a task pool and write it as .npz"),
        ("pipeline", "run subspace -> cluster -> classify -> eval (-> predict)"),
        ("bench-subspace", "subspace error over a (t_l1, n_l1) grid"),
        ("bench-tmin-cluster", "minimum t_h for 99% clustering accuracy"),
        ("bench-tmin-classify", "minimum t_l2 for 99% classification accuracy"),
        ("bench-em", "EM baseline vs the spectral pipeline on shared data"),
        ("predict", "Monte Carlo prediction error with the true parameters"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="INI config path")
        p.add_argument("--seed", type=int, default=0, help="base RNG seed")
        p.add_argument("--threads", type=int, default=1, help="worker parallelism")
        p.add_argument("--out", default="-", help="output path ('-' = stdout)")
        p.add_argument(
            "--format", choices=("csv", "json"), default="csv", dest="fmt"
        )
    return parser


def _meta_comments(config: RunConfig, seed: int) -> dict:
    return {
        "config_hash": config_hash(config),
        "seed": seed,
        "version": __version__,
    }


def _emit_rows(rows: list[dict], config: RunConfig, args) -> None:
    if args.fmt == "csv":
        text = csv_text(rows, _meta_comments(config, args.seed))
    else:
        text = json_text({"meta": _meta_comments(config, args.seed), "rows": rows})
    write_output(text, args.out)


def _cmd_gen(config: RunConfig, args) -> None:
    meta = sample_meta_params(config.k, config.d, config.gen_preset, args.seed)
    pool = sample_pool(meta, config.pool_sizes, args.seed)
    arrays = {
        "W": meta.W,
        "s": meta.s,
        "p": meta.p,
        "seed": np.array(args.seed, dtype=np.uint64),
        "config_hash": np.array(config_hash(config)),
        "version": np.array(__version__),
    }
    for name, tasks in (
        ("l1", pool.light1),
        ("h", pool.heavy),
        ("l2", pool.light2),
    ):
        arrays[f"{name}_X"] = np.stack([task.X for task in tasks])
        arrays[f"{name}_y"] = np.stack([task.y for task in tasks])
        arrays[f"{name}_z"] = np.array(
            [task.true_component for task in tasks], dtype=np.int64
        )
    out = args.out if args.out != "-" else "pool.npz"
    np.savez_compressed(out, **arrays)


def _cmd_pipeline(config: RunConfig, args) -> None:
    report = run_pipeline(config, seed=args.seed, threads=args.threads)
    if args.fmt == "json":
        write_output(json_text(report), args.out)
    else:
        rows = [flatten_report(report)]
        write_output(csv_text(rows, _meta_comments(config, args.seed)), args.out)


def _cmd_predict(config: RunConfig, args) -> None:
    meta = sample_meta_params(config.k, config.d, config.gen_preset, args.seed)
    rep = prediction_error(
        FittedModel.from_truth(meta), meta, config.tau, config.trials, args.seed
    )
    rows = [
        {
            "estimator": name,
            "train_mse": train,
            "test_mse": test,
            "param_mse": param,
            "noise_floor": rep.noise_floor,
            "tau": config.tau,
            "trials": rep.trials,
        }
        for name, train, test, param in (
            ("map", rep.map_train, rep.map_test, rep.map_param),
            ("bayes", rep.bayes_train, rep.bayes_test, rep.bayes_param),
        )
    ]
    _emit_rows(rows, config, args)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config = parse_config(args.config)

    if args.command == "gen":
        _cmd_gen(config, args)
    elif args.command == "pipeline":
        _cmd_pipeline(config, args)
    elif args.command == "bench-subspace":
        rows = bench_subspace(
            config, seed=args.seed, threads=args.threads, grid=subspace_grid(config)
        )
        _emit_rows(rows, config, args)
    elif args.command == "bench-tmin-cluster":
        rows = bench_tmin("cluster", config, seed=args.seed, threads=args.threads)
        _emit_rows(rows, config, args)
    elif args.command == "bench-tmin-classify":
        rows = bench_tmin("classify", config, seed=args.seed, threads=args.threads)
        _emit_rows(rows, config, args)
    elif args.command == "bench-em":
        rows = bench_em_compare(config, seed=args.seed, threads=args.threads)
        _emit_rows(rows, config, args)
    elif args.command == "predict":
        _cmd_predict(config, args)
    return 0
