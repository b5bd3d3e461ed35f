#!/usr/bin/env python3
"""Write a handwritten-digit subset as gzipped IDX files.

The MNIST distribution servers are often unreachable from build machines,
so this pulls the 5000-image MNIST subset (500 per class) that ships inside
the `mlxtend` wheel on PyPI and re-packs it as

    <out>/train-images-idx3-ubyte.gz
    <out>/train-labels-idx1-ubyte.gz

If you have the full dataset, just drop the original files into the data
directory instead; the loader accepts both plain and gzipped IDX.
"""

import argparse
import gzip
import io
import pathlib
import struct
import subprocess
import sys
import tempfile
import zipfile

import numpy as np

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def load_subset(wheel_dir: pathlib.Path):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "--quiet",
         "-d", str(wheel_dir), "mlxtend"],
        check=True,
    )
    wheel = next(wheel_dir.glob("mlxtend-*.whl"))
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read(MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    return table[:, :-1].astype(np.uint8), table[:, -1].astype(np.uint8)


def write_idx(out: pathlib.Path, images: np.ndarray, labels: np.ndarray):
    out.mkdir(parents=True, exist_ok=True)
    # mtime=0 keeps the archives byte-reproducible.
    with gzip.GzipFile(out / "train-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(out / "train-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(labels.tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = parser.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        images, labels = load_subset(pathlib.Path(tmp))
    write_idx(pathlib.Path(args.out), images, labels)
    print(f"wrote {len(images)} images to {args.out}")


if __name__ == "__main__":
    main()
