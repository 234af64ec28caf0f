"""Slow, obviously-correct reference implementations used by the tests."""
import numpy as np


def xtime_mul(a, b):
    # Russian-peasant multiply modulo x^8 + x^4 + x^3 + x + 1
    r = 0
    for _ in range(8):
        if b & 1:
            r ^= a
        hi = a & 0x80
        a = (a << 1) & 0xFF
        if hi:
            a ^= 0x1B
        b >>= 1
    return r


def brute_inv(a):
    for x in range(1, 256):
        if xtime_mul(a, x) == 1:
            return x
    raise ZeroDivisionError


def rref(rows, pays):
    """Full Gauss-Jordan on a list of coefficient rows with payloads.

    Returns (rank, {col: payload bytes for fully decoded columns}).
    """
    A = [list(map(int, r)) for r in rows]
    P = [list(map(int, p)) for p in pays]
    n = len(A[0]) if A else 0
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(A)) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        P[r], P[piv] = P[piv], P[r]
        g = brute_inv(A[r][c])
        A[r] = [xtime_mul(g, v) for v in A[r]]
        P[r] = [xtime_mul(g, v) for v in P[r]]
        for i in range(len(A)):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [x ^ xtime_mul(f, y) for x, y in zip(A[i], A[r])]
                P[i] = [x ^ xtime_mul(f, y) for x, y in zip(P[i], P[r])]
        r += 1
    decoded = {}
    for i in range(r):
        nz = [c for c in range(n) if A[i][c]]
        if len(nz) == 1:
            decoded[nz[0]] = bytes(P[i])
    return r, decoded


def ks_distance(a, b):
    a, b = np.sort(np.asarray(a, float)), np.sort(np.asarray(b, float))
    xs = np.union1d(a, b)
    fa = np.searchsorted(a, xs, side="right") / a.size
    fb = np.searchsorted(b, xs, side="right") / b.size
    return float(np.abs(fa - fb).max())
