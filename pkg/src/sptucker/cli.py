"""Command-line front end: gen, split, train, eval, bench, partition-dump.

Exit codes: 0 on success, 1 on bad invocations or precondition failures,
2 on I/O errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .coo import (
    CooFormatError,
    DatasetSplit,
    SparseTensorCoo,
    generate_synthetic,
    load_coo,
    split,
    write_coo,
)
from .model import ModelConfig, default_init_scale, init_model, load_model, save_model
from .partition import build_partition, round_schedule, schedule_text
from .trainer import TrainConfig, mae, rmse, train, write_metrics_csv


def _int_list(text: str):
    return tuple(int(t) for t in text.split(","))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sptucker",
        description="Sparse Tucker decomposition trained by SGD",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset from a random model")
    gen.add_argument("--dims", type=_int_list, required=True)
    gen.add_argument("--nnz", type=int, required=True)
    gen.add_argument("--j", type=_int_list, required=True)
    gen.add_argument("--rcore", type=int, required=True)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--model-out", default=None,
                     help="ground-truth checkpoint path (default: OUT.model)")

    spl = sub.add_parser("split", help="split a dataset into train/test files")
    spl.add_argument("--data", required=True)
    spl.add_argument("--test-fraction", type=float, required=True)
    spl.add_argument("--seed", type=int, default=0)
    spl.add_argument("--train-out", required=True)
    spl.add_argument("--test-out", required=True)

    tr = sub.add_parser("train", help="train a model on a COO dataset")
    tr.add_argument("--data", required=True)
    tr.add_argument("--test", default=None)
    tr.add_argument("--j", type=_int_list, default=(4,))
    tr.add_argument("--rcore", type=int, default=4)
    tr.add_argument("--epochs", type=int, default=20)
    tr.add_argument("--workers", type=int, default=1)
    tr.add_argument("--alpha-a", type=float, default=0.009)
    tr.add_argument("--beta-a", type=float, default=0.05)
    tr.add_argument("--lambda-a", type=float, default=0.01)
    tr.add_argument("--alpha-b", type=float, default=0.0045)
    tr.add_argument("--beta-b", type=float, default=0.1)
    tr.add_argument("--lambda-b", type=float, default=0.01)
    tr.add_argument("--no-core", action="store_true",
                    help="update factor matrices only")
    tr.add_argument("--core-batch-cap", type=int, default=1 << 20)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--eval-every", type=int, default=1)
    tr.add_argument("--metrics-out", default=None)
    tr.add_argument("--model-out", default=None)
    tr.add_argument("--resume", default=None,
                    help="checkpoint to continue from (overrides --j/--rcore)")

    ev = sub.add_parser("eval", help="print RMSE/MAE of a checkpoint on a dataset")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)

    be = sub.add_parser("bench", help="time epochs over a grid of ranks and workers")
    be.add_argument("--data", required=True)
    be.add_argument("--j-grid", type=_int_list, default=(4, 8, 16))
    be.add_argument("--rcore-grid", type=_int_list, default=(4,))
    be.add_argument("--workers-grid", type=_int_list, default=(1,))
    be.add_argument("--epochs", type=int, default=3)
    be.add_argument("--no-core", action="store_true")
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--out", default=None, help="CSV path (default: stdout)")

    pd = sub.add_parser("partition-dump", help="print a round schedule as text")
    pd.add_argument("--order", type=int, required=True)
    pd.add_argument("--m", type=int, required=True)
    pd.add_argument("--data", default=None,
                    help="optional dataset; adds per-block entry counts")

    return parser


def _expand_j(j, order):
    if len(j) == 1:
        return j * order
    if len(j) != order:
        raise ValueError(f"--j needs 1 or {order} values, got {len(j)}")
    return j


def cmd_gen(args) -> int:
    tensor, truth = generate_synthetic(
        args.dims, args.nnz, _expand_j(args.j, len(args.dims)), args.rcore,
        noise_sigma=args.noise, seed=args.seed,
    )
    write_coo(tensor, args.out)
    model_out = args.model_out or (args.out + ".model")
    save_model(truth, model_out)
    print(f"wrote {tensor.nnz} entries to {args.out}; ground truth to {model_out}")
    return 0


def cmd_split(args) -> int:
    tensor = load_coo(args.data)
    ds = split(tensor, args.test_fraction, seed=args.seed)
    write_coo(ds.train, args.train_out)
    if ds.test.nnz:
        write_coo(ds.test, args.test_out)
    else:
        print("test fraction rounded to zero entries; no test file written")
    print(f"train {ds.train.nnz} -> {args.train_out}; test {ds.test.nnz} -> {args.test_out}")
    return 0


def _load_split(args) -> DatasetSplit:
    train_set = load_coo(args.data)
    if args.test:
        test_set = load_coo(args.test)
        if test_set.dims != train_set.dims:
            dims = tuple(
                max(a, b) for a, b in zip(train_set.dims, test_set.dims)
            )
            train_set = SparseTensorCoo(dims, train_set.indices, train_set.values)
            test_set = SparseTensorCoo(dims, test_set.indices, test_set.values)
    else:
        test_set = SparseTensorCoo(
            train_set.dims,
            np.empty((0, train_set.order), dtype=np.int64),
            np.empty(0),
        )
    return DatasetSplit(train_set, test_set)


def cmd_train(args) -> int:
    ds = _load_split(args)
    if args.resume:
        model = load_model(args.resume)
        if model.dims != ds.train.dims:
            raise ValueError(
                f"checkpoint dims {model.dims} do not match data dims {ds.train.dims}"
            )
    else:
        j_ranks = _expand_j(args.j, ds.train.order)
        scale = default_init_scale(ds.train.values, ds.train.order)
        model = init_model(
            ds.train.dims, ModelConfig(j_ranks, args.rcore, scale, args.seed)
        )
    config = TrainConfig(
        epochs=args.epochs,
        workers=args.workers,
        update_core=not args.no_core,
        alpha_a=args.alpha_a,
        beta_a=args.beta_a,
        lambda_a=args.lambda_a,
        alpha_b=args.alpha_b,
        beta_b=args.beta_b,
        lambda_b=args.lambda_b,
        core_batch_cap=args.core_batch_cap,
        seed=args.seed,
        eval_every=args.eval_every,
    )
    rows = train(model, ds, config)
    last = rows[-1]
    print(
        f"epoch {last.epoch}: train_rmse={last.train_rmse:.6g} "
        f"train_mae={last.train_mae:.6g} test_rmse={last.test_rmse:.6g}"
    )
    if args.metrics_out:
        write_metrics_csv(rows, args.metrics_out)
        print(f"metrics -> {args.metrics_out}")
    if args.model_out:
        save_model(model, args.model_out)
        print(f"model -> {args.model_out}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = load_coo(args.data)
    if data.dims != model.dims:
        raise ValueError(
            f"model dims {model.dims} do not match data dims {data.dims}"
        )
    print(f"rmse {rmse(model, data):.17g}")
    print(f"mae {mae(model, data):.17g}")
    return 0


def cmd_bench(args) -> int:
    data = load_coo(args.data)
    empty_test = SparseTensorCoo(
        data.dims, np.empty((0, data.order), dtype=np.int64), np.empty(0)
    )
    ds = DatasetSplit(data, empty_test)
    lines = ["j,r_core,workers,epochs,seconds_per_epoch"]
    scale = default_init_scale(data.values, data.order)
    # warm the compiled loops so one-time jit cost stays out of the timings
    warm = init_model(data.dims, ModelConfig((2,) * data.order, 1, scale, args.seed))
    train(warm, ds, TrainConfig(epochs=1, update_core=not args.no_core,
                                seed=args.seed))
    for j in args.j_grid:
        for rcore in args.rcore_grid:
            for workers in args.workers_grid:
                model = init_model(
                    data.dims,
                    ModelConfig((j,) * data.order, rcore, scale, args.seed),
                )
                config = TrainConfig(
                    epochs=args.epochs,
                    workers=workers,
                    update_core=not args.no_core,
                    seed=args.seed,
                    eval_every=args.epochs,
                )
                rows = train(model, ds, config)
                # wall_seconds counts training phases only (no evaluation)
                per_epoch = rows[-1].wall_seconds / args.epochs
                lines.append(f"{j},{rcore},{workers},{args.epochs},{per_epoch!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"bench -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_partition_dump(args) -> int:
    schedule = round_schedule(args.order, args.m)
    plan = None
    if args.data:
        tensor = load_coo(args.data)
        if tensor.order != args.order:
            raise ValueError(
                f"--order {args.order} does not match data order {tensor.order}"
            )
        plan = build_partition(tensor, args.m)
    print(schedule_text(schedule, plan))
    return 0


_COMMANDS = {
    "gen": cmd_gen,
    "split": cmd_split,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "partition-dump": cmd_partition_dump,
}


def run(argv) -> int:
    """Parse argv (without the program name) and execute one subcommand."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except CooFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
