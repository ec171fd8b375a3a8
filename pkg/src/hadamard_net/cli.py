"""Command-line entry point: ``hadamard-net {train,eval,verify,bench}``.

Exit codes: 0 success, 1 bad flags, 2 data or checkpoint errors, 3 numerical
abort during training, 4 a verify property failed.
"""
from __future__ import annotations

import argparse
import sys

from . import bench, checkpoint, verify
from .data import IdxError, load_mnist
from .spectral import NonFiniteError
from .training import EpochMetrics, OptimizerConfig, build_mnist_network, evaluate, train
from .wirtinger import NumericalError

EXIT_FLAGS, EXIT_DATA, EXIT_NUMERIC, EXIT_VERIFY = 1, 2, 3, 4


class FlagError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise FlagError(message)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonnegative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _sizes(text):
    try:
        sizes = tuple(int(s) for s in text.split(",") if s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers, got {text}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hadamard-net", description="Frequency-domain Hadamard networks on MNIST.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train the MNIST network")
    p.add_argument("--data-dir", required=True, help="directory holding the MNIST IDX files")
    p.add_argument("--filters", type=_positive_int, default=50)
    p.add_argument("--epochs", type=_nonnegative_int, default=70)
    p.add_argument("--batch-size", type=_positive_int, default=100)
    p.add_argument("--lr", type=_positive_float, default=0.002)
    p.add_argument("--sigma", type=_positive_float, default=0.1)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--checkpoint-out", help="where to write the trained parameters")
    p.add_argument("--metrics-out", help="CSV file receiving one row per epoch")
    p.add_argument("--limit", type=_positive_int, help="use only the first LIMIT training images")
    p.add_argument("--test-limit", type=_positive_int, help="use only the first TEST_LIMIT test images")
    p.add_argument("--plain-sgd", action="store_true",
                   help="give the FC bias the same step size as every other parameter")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--split", choices=("test", "train"), default="test")
    p.add_argument("--limit", type=_positive_int)

    p = sub.add_parser("verify", help="run every invariant suite")
    p.add_argument("--sizes", type=_sizes, default=verify.DEFAULT_SIZES)
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--seed", type=_seed, default=0)

    p = sub.add_parser("bench", help="time fast paths against direct ones")
    p.add_argument("--sizes", type=_sizes, default=bench.DEFAULT_SIZES)
    p.add_argument("--trials", type=_positive_int, default=20)
    p.add_argument("--seed", type=_seed, default=0)
    return parser


def _load(data_dir, split, limit):
    try:
        return load_mnist(data_dir, split, limit=limit)
    except (OSError, IdxError) as exc:
        raise DataProblem(f"cannot load {split} data from {data_dir}: {exc}") from exc


class DataProblem(Exception):
    pass


def cmd_train(args) -> int:
    train_set = _load(args.data_dir, "train", args.limit)
    test_set = _load(args.data_dir, "test", args.test_limit)
    cfg = OptimizerConfig(args.lr, args.batch_size, args.epochs, args.sigma,
                          precondition_fc_bias=not args.plain_sgd)
    spec, params = build_mnist_network(args.filters, args.seed, args.sigma)

    metrics = open(args.metrics_out, "w") if args.metrics_out else None
    print(EpochMetrics.HEADER)
    if metrics:
        print(EpochMetrics.HEADER, file=metrics, flush=True)

    def sink(record):
        print(record.csv_row(), flush=True)
        if metrics:
            print(record.csv_row(), file=metrics, flush=True)

    try:
        params = train(spec, params, train_set, cfg, sink, test_set, args.seed)
    except (NumericalError, NonFiniteError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        if metrics:
            metrics.close()
    if args.checkpoint_out:
        meta = {"epochs": args.epochs, "lr": args.lr, "sigma": args.sigma,
                "batch_size": args.batch_size, "plain_sgd": args.plain_sgd}
        checkpoint.save(args.checkpoint_out, checkpoint.Checkpoint(spec, params, meta))
    return 0


def cmd_eval(args) -> int:
    try:
        ckpt = checkpoint.load(args.checkpoint)
    except (OSError, checkpoint.CheckpointError) as exc:
        code = getattr(exc, "code", "io")
        raise DataProblem(f"cannot read checkpoint {args.checkpoint} [{code}]: {exc}") from exc
    dataset = _load(args.data_dir, args.split, args.limit)
    acc, loss = evaluate(ckpt.spec, ckpt.params, dataset)
    print(f"accuracy={acc:.4f} loss={loss:.6f} examples={len(dataset)}")
    return 0


def cmd_verify(args) -> int:
    results = verify.run_all(args.sizes, args.trials, args.seed,
                             report=lambda r: print(r.line(), flush=True))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"verify failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all {len(results)} properties passed")
    return 0


def cmd_bench(args) -> int:
    for row in bench.run(args.sizes, args.trials, args.seed):
        print(bench.format_row(row), flush=True)
    return 0


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except FlagError:
        return EXIT_FLAGS
    try:
        return COMMANDS[args.command](args)
    except DataProblem as exc:
        print(exc, file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
