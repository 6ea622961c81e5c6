#!/usr/bin/env python3
"""Build IDX image/label files from the digit JSON bundled in the npm `mnist` package.

The package ships 10,000 grayscale MNIST digits as floats in [0, 1] with three
decimals; multiplying by 255 and rounding recovers the original bytes.

usage: scripts/mnist_from_npm.py <unpacked-npm-package-dir> <out-dir>
   or: scripts/mnist_from_npm.py --fetch <out-dir>   (runs `npm pack mnist@1.1.0`)
"""
import json
import os
import struct
import subprocess
import sys
import tarfile
import tempfile


def fetch(tmp):
    subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=tmp, check=True, stdout=subprocess.DEVNULL)
    with tarfile.open(os.path.join(tmp, "mnist-1.1.0.tgz")) as t:
        t.extractall(tmp)
    return os.path.join(tmp, "package")


def main():
    args = sys.argv[1:]
    if len(args) != 2:
        sys.exit(__doc__)
    with tempfile.TemporaryDirectory() as tmp:
        pkg = fetch(tmp) if args[0] == "--fetch" else args[0]
        out = args[1]
        os.makedirs(out, exist_ok=True)
        images = bytearray()
        labels = bytearray()
        for digit in range(10):
            with open(os.path.join(pkg, "src", "digits", f"{digit}.json")) as f:
                data = json.load(f)["data"]
            assert len(data) % 784 == 0
            images.extend(min(255, max(0, round(v * 255))) for v in data)
            labels.extend([digit] * (len(data) // 784))
        n = len(labels)
        with open(os.path.join(out, "images-idx3-ubyte"), "wb") as f:
            f.write(struct.pack(">IIII", 2051, n, 28, 28))
            f.write(images)
        with open(os.path.join(out, "labels-idx1-ubyte"), "wb") as f:
            f.write(struct.pack(">II", 2049, n))
            f.write(labels)
        print(f"wrote {n} images to {out}")


if __name__ == "__main__":
    main()
