#!/usr/bin/env python3
"""Build the IDX test fixture from the digit JSON files of the npm `mnist`
package (https://github.com/cazala/mnist, MIT licensed, samples taken from
the MNIST training set).

Usage: mnist_fixture.py <package>/src/digits <output dir>

Each JSON file holds {"data": [...]} with 784 values per image, stored as
byte/255 rounded to three decimals; round(v * 255) recovers the byte.
Images are interleaved round-robin over the digits so the file mixes classes
the way the original MNIST files do.
"""

import json
import struct
import sys
from pathlib import Path

QUOTA = {0: 200, 1: 200, **{d: 20 for d in range(2, 10)}}
PIXELS = 28 * 28


def load(digits_dir: Path, digit: int) -> list[bytes]:
    flat = json.loads((digits_dir / f"{digit}.json").read_text())["data"]
    images = []
    for start in range(0, QUOTA[digit] * PIXELS, PIXELS):
        chunk = flat[start:start + PIXELS]
        images.append(bytes(round(v * 255) for v in chunk))
    return images


def main() -> None:
    digits_dir, out_dir = Path(sys.argv[1]), Path(sys.argv[2])
    pools = {d: load(digits_dir, d) for d in QUOTA}
    images, labels = [], []
    while any(pools.values()):
        for d in sorted(pools):
            if pools[d]:
                images.append(pools[d].pop(0))
                labels.append(d)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "mnist-fixture-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(b"".join(images))
    with open(out_dir / "mnist-fixture-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))
    print(f"wrote {len(images)} images")


if __name__ == "__main__":
    main()
