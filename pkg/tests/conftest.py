import importlib.util
import os
from pathlib import Path

import numpy as np
import pytest

from geonet.datasets import DATA_DIR_ENV, MNIST_TEST, MNIST_TRAIN, load_mnist

ROOT = Path(__file__).resolve().parents[1]
ACCEPTANCE_LINES: list[str] = []


def _has_idx(directory: Path) -> bool:
    return all(any((directory / (stem + ext)).exists() for ext in ("", ".gz"))
               for stem in (*MNIST_TRAIN, *MNIST_TEST))


def _mnist_dir(tmp_path_factory) -> Path | None:
    env = os.environ.get(DATA_DIR_ENV)
    if env and _has_idx(Path(env)):
        return Path(env)
    try:
        import mlxtend  # noqa: F401
    except ImportError:
        return None
    spec = importlib.util.spec_from_file_location("mnist_idx", ROOT / "scripts" / "mnist_idx_from_mlxtend.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module.write_subset(tmp_path_factory.mktemp("mnist"), n_train=4000, seed=0)


@pytest.fixture(scope="session")
def mnist_dir(tmp_path_factory):
    path = _mnist_dir(tmp_path_factory)
    if path is None:
        pytest.skip(f"no MNIST IDX files: set ${DATA_DIR_ENV} or install mlxtend")
    return path


@pytest.fixture(scope="session")
def mnist(mnist_dir):
    """``(train, test)``: up to the 10k/2k subset, fewer if the files are smaller."""
    return load_mnist(mnist_dir, 10_000, 2_000)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
