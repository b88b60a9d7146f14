"""Regenerates digits.ngld from the scikit-learn 8x8 digits set.

Layout: b"NGLD", count (u32 LE), dims (u32 LE), count*dims f32 LE features
(row-major, scaled to [0, 1]), then count u8 labels.
"""
import struct

from sklearn.datasets import load_digits

COUNT = 500

d = load_digits()
x = d.data[:COUNT] / 16.0
y = d.target[:COUNT]
with open("digits.ngld", "wb") as f:
    f.write(b"NGLD")
    f.write(struct.pack("<II", COUNT, x.shape[1]))
    for row in x:
        f.write(struct.pack("<%df" % len(row), *row))
    f.write(bytes(int(v) for v in y))
