"""Train the 50-filter network on a slice of MNIST and report per-epoch metrics.

usage: python demos/train_small.py /path/to/mnist [train_count] [epochs]
"""
import sys

from hadamard_net.data import load_mnist
from hadamard_net.training import EpochMetrics, OptimizerConfig, build_mnist_network, evaluate, train


def main(argv):
    if not argv:
        print(__doc__.strip().splitlines()[-1])
        return 1
    data_dir = argv[0]
    count = int(argv[1]) if len(argv) > 1 else 5000
    epochs = int(argv[2]) if len(argv) > 2 else 3
    train_set = load_mnist(data_dir, "train", limit=count)
    test_set = load_mnist(data_dir, "test", limit=2000)

    spec, params = build_mnist_network(50, seed=0)
    print(f"{params.count()} complex parameters, {len(train_set)} training images")
    print(f"accuracy before training: {evaluate(spec, params, test_set)[0]:.4f}")
    print(EpochMetrics.HEADER)
    params = train(spec, params, train_set, OptimizerConfig(epochs=epochs),
                   metrics_sink=lambda m: print(m.csv_row(), flush=True), test_set=test_set)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
