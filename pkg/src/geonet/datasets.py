"""Synthetic classification datasets, IDX (MNIST-format) ingestion and stratified splits."""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

IDX_UBYTE = 0x08
IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

DATA_DIR_ENV = "GEONET_DATA_DIR"
MNIST_TRAIN = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
MNIST_TEST = ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    n_classes: int = field(default=0)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.labels) != len(self.features):
            raise ValueError(f"{len(self.features)} samples but {len(self.labels)} labels")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite values")
        if len(self.labels) and self.labels.min() < 0:
            raise ValueError("labels must be non-negative")
        seen = int(self.labels.max()) + 1 if len(self.labels) else 0
        if self.n_classes == 0:
            self.n_classes = seen
        elif seen > self.n_classes:
            raise ValueError(f"label {seen - 1} out of range for {self.n_classes} classes")

    def __len__(self):
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "Dataset":
        return Dataset(self.features[index], self.labels[index], self.name, self.n_classes)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels.copy(), self.name, self.n_classes)


def gen_xor(n: int = 400, noise_std: float = 0.1, rng=None) -> Dataset:
    """Noisy copies of the four XOR corners; corners with equal coordinates are class 0."""
    if n < 4 or n % 4:
        raise ValueError(f"n must be a positive multiple of 4, got {n}")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = rng if rng is not None else np.random.default_rng(0)
    corners = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    parity = np.array([0, 0, 1, 1])
    reps = n // 4
    x = np.repeat(corners, reps, axis=0)
    y = np.repeat(parity, reps)
    x = x + rng.normal(0.0, noise_std, x.shape)
    return Dataset(x, y, "xor", 2)


def gen_circles(n: int = 400, inner_radius: float = 0.5, outer_radius: float = 1.0,
                noise_std: float = 0.05, rng=None) -> Dataset:
    """Two concentric rings: class 0 on the outer ring, class 1 on the inner one."""
    if n < 2 or n % 2:
        raise ValueError(f"n must be even, got {n}")
    if not 0 < inner_radius < outer_radius:
        raise ValueError(f"need 0 < inner_radius < outer_radius, got {inner_radius}, {outer_radius}")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = rng if rng is not None else np.random.default_rng(0)
    half = n // 2
    angles = rng.uniform(0.0, 2 * np.pi, n)
    radii = np.concatenate([np.full(half, outer_radius), np.full(half, inner_radius)])
    radii = radii + rng.normal(0.0, noise_std, n)
    x = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    y = np.concatenate([np.zeros(half, np.int64), np.ones(half, np.int64)])
    return Dataset(x, y, "circles", 2)


def gen_moons(n: int = 400, noise_std: float = 0.1, rng=None) -> Dataset:
    """Two interleaving half circles.

    Class 0 is the upper arc of the unit circle. Class 1 is the lower arc
    centred at (1, 0.5), so its lowest point sits at y = -0.5.
    """
    if n < 2 or n % 2:
        raise ValueError(f"n must be even, got {n}")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = rng if rng is not None else np.random.default_rng(0)
    half = n // 2
    t = np.linspace(0.0, np.pi, half)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    x = np.vstack([upper, lower]) + rng.normal(0.0, noise_std, (n, 2))
    y = np.concatenate([np.zeros(half, np.int64), np.ones(half, np.int64)])
    return Dataset(x, y, "moons", 2)


def gen_gaussian_mixture(n: int, centers, std: float = 0.1, rng=None) -> Dataset:
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or len(centers) == 0:
        raise ValueError("centers must be a non-empty list of points")
    if std < 0:
        raise ValueError("std must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    k = len(centers)
    counts = np.full(k, n // k)
    counts[: n % k] += 1
    y = np.repeat(np.arange(k), counts)
    x = centers[y] + rng.normal(0.0, std, (n, centers.shape[1]))
    return Dataset(x, y, "mixture", k)


# -- IDX files ---------------------------------------------------------------

class IdxError(ValueError):
    code = "idx_error"


class BadMagicError(IdxError):
    code = "bad_magic"


class TruncatedFileError(IdxError):
    code = "truncated"


class CountMismatchError(IdxError):
    code = "count_mismatch"


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path, expected_magic: int | None = None) -> np.ndarray:
    """Read an unsigned-byte IDX file into an array of its declared shape."""
    with _open(path) as f:
        raw = f.read()
    if len(raw) < 4:
        raise TruncatedFileError(f"{path}: file shorter than the 4-byte magic")
    (magic,) = struct.unpack(">I", raw[:4])
    if expected_magic is not None and magic != expected_magic:
        raise BadMagicError(f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    if magic >> 8 != IDX_UBYTE:
        raise BadMagicError(f"{path}: unsupported IDX element type in magic 0x{magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedFileError(f"{path}: header truncated")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims)) if dims else 1
    if len(raw) - header < size:
        raise TruncatedFileError(f"{path}: expected {size} data bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def write_idx(path, array) -> None:
    array = np.asarray(array)
    if array.dtype != np.uint8:
        raise ValueError("only unsigned-byte IDX files are supported")
    magic = (IDX_UBYTE << 8) | array.ndim
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        f.write(struct.pack(f">{array.ndim}I", *array.shape))
        f.write(np.ascontiguousarray(array).tobytes())


def load_idx(images_path, labels_path, limit: int | None = None, name: str = "mnist") -> Dataset:
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if len(images) != len(labels):
        raise CountMismatchError(f"{len(images)} images but {len(labels)} labels")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    x = images.reshape(len(images), -1).astype(np.float64) / 255.0
    return Dataset(x, labels.astype(np.int64), name, 10 if name == "mnist" else 0)


def _locate(data_dir: Path, stem: str) -> Path:
    for candidate in (stem, stem + ".gz", stem.replace("-idx", ".idx"), stem.replace("-idx", ".idx") + ".gz"):
        if (data_dir / candidate).exists():
            return data_dir / candidate
    raise FileNotFoundError(f"no {stem}[.gz] under {data_dir}")


def default_data_dir() -> Path | None:
    value = os.environ.get(DATA_DIR_ENV)
    return Path(value) if value else None


def load_mnist(data_dir=None, n_train: int = 10_000, n_test: int = 2_000) -> tuple[Dataset, Dataset]:
    """Load the first ``n_train``/``n_test`` samples of the MNIST IDX files in ``data_dir``."""
    data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
    if data_dir is None:
        raise FileNotFoundError(f"no MNIST directory given and ${DATA_DIR_ENV} is unset")
    train = load_idx(_locate(data_dir, MNIST_TRAIN[0]), _locate(data_dir, MNIST_TRAIN[1]), n_train)
    test = load_idx(_locate(data_dir, MNIST_TEST[0]), _locate(data_dir, MNIST_TEST[1]), n_test)
    return train, test


def split(d: Dataset, train_fraction: float = 0.5, rng=None) -> tuple[Dataset, Dataset]:
    """Stratified, shuffled train/test split."""
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = rng if rng is not None else np.random.default_rng(0)
    train_idx, test_idx = [], []
    for cls in np.unique(d.labels):
        members = np.flatnonzero(d.labels == cls)
        if len(members) < 2:
            raise ValueError(f"class {cls} has {len(members)} sample(s); stratification needs >= 2")
        members = rng.permutation(members)
        cut = min(max(int(round(train_fraction * len(members))), 1), len(members) - 1)
        train_idx.append(members[:cut])
        test_idx.append(members[cut:])
    train_idx = rng.permutation(np.concatenate(train_idx))
    test_idx = rng.permutation(np.concatenate(test_idx))
    return d.subset(train_idx), d.subset(test_idx)
