#!/usr/bin/env python3
"""Independent generator for testdata/rs_vectors.txt.

Builds GF(32) by carry-less multiplication modulo x^5 + x^2 + 1 (no log
tables) and encodes by explicit polynomial long division against the
generator prod_{j=1..p} (x - alpha^j). Output lines:

    <n_parity> <data hex> <codeword hex>

where each symbol is two hex digits.
"""
import random

POLY = 0b100101


def mul(a, b):
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0b100000:
            a ^= POLY
    return r


def alpha_pow(e):
    r = 1
    for _ in range(e % 31):
        r = mul(r, 2)
    return r


def generator(p):
    g = [1]
    for j in range(1, p + 1):
        root = alpha_pow(j)
        nxt = [0] * (len(g) + 1)
        for i, c in enumerate(g):
            nxt[i] ^= c
            nxt[i + 1] ^= mul(c, root)
        g = nxt
    return g


def encode(data, p):
    g = generator(p)
    rem = list(data) + [0] * p
    for i in range(len(data)):
        c = rem[i]
        if c:
            for j in range(1, len(g)):
                rem[i + j] ^= mul(g[j], c)
    return list(data) + rem[len(data):]


def hexs(seq):
    return "".join(f"{s:02x}" for s in seq)


def main():
    rng = random.Random(20240607)
    lines = ["# n_parity data_hex codeword_hex  (GF(32), x^5+x^2+1, roots alpha^1..alpha^p)"]
    cases = [(10, 10), (4, 6), (12, 8), (19, 12), (21, 10), (1, 2)]
    for k, p in cases:
        for _ in range(3):
            data = [rng.randrange(32) for _ in range(k)]
            lines.append(f"{p} {hexs(data)} {hexs(encode(data, p))}")
    lines.append(f"10 {hexs([0]*10)} {hexs(encode([0]*10, 10))}")
    lines.append(f"2 {hexs([1])} {hexs(encode([1], 2))}")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
