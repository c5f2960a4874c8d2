"""Write MNIST-format IDX files from the 5,000-digit MNIST sample bundled with mlxtend.

Useful where the full MNIST archive cannot be downloaded. The sample is
class-sorted, so it is shuffled with a fixed seed before the first
``--train`` digits go to the training files and the rest to the test files.

    python scripts/mnist_idx_from_mlxtend.py OUT_DIR [--train 4000] [--seed 0]
"""

import argparse
from pathlib import Path

import numpy as np

from geonet.datasets import MNIST_TEST, MNIST_TRAIN, write_idx


def write_subset(out_dir, n_train: int = 4000, seed: int = 0) -> Path:
    from mlxtend.data import mnist_data

    x, y = mnist_data()
    order = np.random.default_rng(seed).permutation(len(y))
    images = x[order].reshape(-1, 28, 28).astype(np.uint8)
    labels = y[order].astype(np.uint8)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for (img_name, lbl_name), sl in ((MNIST_TRAIN, slice(0, n_train)), (MNIST_TEST, slice(n_train, None))):
        write_idx(out / img_name, images[sl])
        write_idx(out / lbl_name, labels[sl])
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir")
    parser.add_argument("--train", type=int, default=4000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    print(write_subset(args.out_dir, args.train, args.seed))


if __name__ == "__main__":
    main()
