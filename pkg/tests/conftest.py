import os

import numpy as np
import pytest

from hadamard_net.data import find_mnist

MNIST_DIR = os.environ.get("HADAMARD_MNIST_DIR", "/root/data/mnist")


def pytest_addoption(parser):
    parser.addoption("--run-long", action="store_true", default=False,
                     help="also run the multi-hour MNIST reproduction")


def pytest_configure(config):
    config.addinivalue_line("markers", "long: multi-hour training runs, enabled with --run-long")
    config.addinivalue_line("markers", "mnist: needs the MNIST IDX files")
    config.addinivalue_line("markers", "criterion(title): acceptance criterion checked by the test")


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            item.user_properties.append(("criterion", mark.args[0]))
    if config.getoption("--run-long"):
        return
    skip = pytest.mark.skip(reason="long-running; pass --run-long")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


def mnist_available() -> bool:
    try:
        find_mnist(MNIST_DIR, "train")
        find_mnist(MNIST_DIR, "test")
    except (FileNotFoundError, KeyError):
        return False
    return True


@pytest.fixture
def mnist_dir():
    if not mnist_available():
        pytest.skip(f"MNIST files not found in {MNIST_DIR} (set HADAMARD_MNIST_DIR)")
    return MNIST_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL/SKIP line per acceptance criterion, in criterion order."""
    rows = []
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" not in props or (outcome == "passed" and rep.when != "call"):
                continue
            label = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[outcome]
            rows.append((props["criterion"], label, props.get("measured", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    def order(row):
        tag = row[0].split()[0]
        digits = tag.rstrip("abcdefghijklmnopqrstuvwxyz")
        return int(digits), tag[len(digits):]

    for title, label, measured in sorted(rows, key=order):
        terminalreporter.write_line(f"{label} {title}" + (f"  [{measured}]" if measured else ""))
