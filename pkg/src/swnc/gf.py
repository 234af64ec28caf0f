"""GF(2^8) arithmetic and an incremental RREF decoder.

The field uses the AES polynomial x^8 + x^4 + x^3 + x + 1 (0x11B). Products
come from a 256x256 table built once at import from the carry-less
definition.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels

POLY = 0x11B


def _clmul_reduce(a, b):
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= POLY
    return r


def _build_tables():
    mul = np.zeros((256, 256), dtype=np.uint8)
    for a in range(256):
        for b in range(a, 256):
            mul[a, b] = mul[b, a] = _clmul_reduce(a, b)
    inv = np.zeros(256, dtype=np.uint8)
    for a in range(1, 256):
        inv[a] = int(np.flatnonzero(mul[a] == 1)[0])
    return mul, inv


MUL, INV = _build_tables()
MUL.setflags(write=False)
INV.setflags(write=False)


def gf_add(a, b):
    return (a ^ b) & 0xFF


def gf_mul(a, b):
    return int(MUL[a, b])


def gf_inv(a):
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return int(INV[a])


def gf_combine(coeffs, payloads):
    """Byte-wise sum of ``coeffs[i] * payloads[i]``; payloads is (k, L) uint8."""
    coeffs = np.ascontiguousarray(coeffs, dtype=np.uint8)
    payloads = np.ascontiguousarray(payloads, dtype=np.uint8)
    if payloads.ndim != 2 or payloads.shape[0] != coeffs.shape[0]:
        raise ValueError(
            f"need one payload row per coefficient, got {coeffs.shape[0]} "
            f"coefficients for payload array of shape {payloads.shape}")
    return kernels.combine(coeffs, payloads, MUL)


@dataclass(frozen=True)
class CoeffVector:
    """Coefficients for source indices ``offset .. offset + len(elems) - 1``."""
    elems: np.ndarray
    offset: int = 0

    def __post_init__(self):
        elems = np.asarray(self.elems, dtype=np.uint8)
        if elems.ndim != 1 or elems.size == 0:
            raise ValueError("coefficient vector must be 1-D and non-empty")
        object.__setattr__(self, "elems", elems)

    def __len__(self):
        return int(self.elems.size)

    @property
    def last(self):
        return self.offset + len(self) - 1

    def is_zero(self):
        return not self.elems.any()


class InsertResult(Enum):
    INNOVATIVE = "innovative"
    REDUNDANT = "redundant"


class EliminationState:
    """Receiver-side decoder over ``n_cols`` source packets.

    Rows are kept in reduced row-echelon form after every insert, indexed by
    their pivot column, so decoded sources are the rows with a single
    nonzero coefficient.
    """

    def __init__(self, n_cols, payload_len):
        if n_cols < 1 or payload_len < 0:
            raise ValueError("n_cols must be >= 1 and payload_len >= 0")
        self.n_cols = n_cols
        self.payload_len = payload_len
        self.coef = np.zeros((n_cols, n_cols), dtype=np.uint8)
        self.pay = np.zeros((n_cols, payload_len), dtype=np.uint8)
        self.has_pivot = np.zeros(n_cols, dtype=np.bool_)
        self.rank = 0
        self._decoded = np.zeros(n_cols, dtype=np.bool_)
        self._dirty = False

    def _scatter(self, coeffs):
        if coeffs.offset < 0 or coeffs.last >= self.n_cols:
            raise ValueError(
                f"coefficients span [{coeffs.offset}, {coeffs.last}] outside "
                f"decoder columns [0, {self.n_cols - 1}]")
        vec = np.zeros(self.n_cols, dtype=np.uint8)
        vec[coeffs.offset:coeffs.last + 1] = coeffs.elems
        return vec

    def insert(self, coeffs, payload):
        payload = np.frombuffer(bytes(payload), dtype=np.uint8) \
            if isinstance(payload, (bytes, bytearray, memoryview)) \
            else np.asarray(payload, dtype=np.uint8)
        if payload.shape != (self.payload_len,):
            raise ValueError(
                f"payload length {payload.size} does not match decoder "
                f"payload length {self.payload_len}")
        vec = self._scatter(coeffs)
        p = payload.copy()
        lead = kernels.insert_row(self.coef, self.pay, self.has_pivot, vec, p, MUL, INV)
        if lead < 0:
            return InsertResult.REDUNDANT
        self.rank += 1
        self._dirty = True
        return InsertResult.INNOVATIVE

    def is_innovative(self, coeffs):
        """Whether ``coeffs`` would raise the rank; the state is not touched."""
        vec = self._scatter(coeffs)
        hit = np.flatnonzero(self.has_pivot & (vec != 0))
        if hit.size:
            f = vec[hit][:, None]
            vec ^= np.bitwise_xor.reduce(MUL[f, self.coef[hit]], axis=0)
        return bool(vec.any())

    def decoded_mask(self):
        if self._dirty:
            nnz = np.count_nonzero(self.coef, axis=1)
            self._decoded = self.has_pivot & (nnz == 1)
            self._dirty = False
        return self._decoded

    def decoded_upto(self):
        """Length of the decoded prefix 0..k-1 (in-order delivery point)."""
        mask = self.decoded_mask()
        gaps = np.flatnonzero(~mask)
        return int(gaps[0]) if gaps.size else self.n_cols

    def decoded_packets(self):
        idx = np.flatnonzero(self.decoded_mask())
        return [(int(i), self.pay[i].tobytes()) for i in idx]


def eliminate_insert(state, coeffs, payload):
    return state.insert(coeffs, payload)


def decoded_packets(state):
    return state.decoded_packets()
