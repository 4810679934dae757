"""Writes golden.boxf: a 3x70 matrix with bit (p, b) set iff (7p + 3b) % 5 == 0."""
import struct

P, B = 3, 70
stride = (B + 63) // 64
words = [0] * (P * stride)
for p in range(P):
    for b in range(B):
        if (7 * p + 3 * b) % 5 == 0:
            words[p * stride + b // 64] |= 1 << (b % 64)

with open("golden.boxf", "wb") as f:
    f.write(b"BOXF")
    f.write(struct.pack("<IQQQ", 1, P, B, stride))
    f.write(struct.pack("<%dQ" % len(words), *words))
