import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_inv, rref, xtime_mul
from swnc.gf import (INV, MUL, CoeffVector, EliminationState, InsertResult, decoded_packets,
                     eliminate_insert, gf_add, gf_combine, gf_inv, gf_mul)

byte = st.integers(0, 255)


def test_mul_table_matches_shift_and_add():
    for a in range(256):
        for b in range(0, 256, 7):
            assert MUL[a, b] == xtime_mul(a, b)


def test_known_products():
    # AES examples
    assert gf_mul(0x57, 0x83) == 0xC1
    assert gf_mul(0x57, 0x13) == 0xFE
    assert gf_inv(0x53) == 0xCA


@given(byte, byte)
def test_add_is_xor_and_self_inverse(a, b):
    assert gf_add(a, b) == a ^ b
    assert gf_add(gf_add(a, b), b) == a


@given(byte, byte, byte)
def test_field_laws(a, b, c):
    assert gf_mul(a, b) == gf_mul(b, a)
    assert gf_mul(a, gf_mul(b, c)) == gf_mul(gf_mul(a, b), c)
    assert gf_mul(a, b ^ c) == gf_mul(a, b) ^ gf_mul(a, c)
    assert gf_mul(a, 1) == a and gf_mul(a, 0) == 0


def test_inverse_table():
    for a in range(1, 256):
        assert gf_mul(a, gf_inv(a)) == 1
    assert INV[7] == brute_inv(7)
    with pytest.raises(ZeroDivisionError):
        gf_inv(0)


def test_tables_read_only():
    with pytest.raises(ValueError):
        MUL[1, 1] = 0


def test_combine_matches_scalar_loop():
    rng = np.random.default_rng(3)
    c = rng.integers(0, 256, 5, dtype=np.uint8)
    p = rng.integers(0, 256, (5, 17), dtype=np.uint8)
    want = [0] * 17
    for i in range(5):
        for b in range(17):
            want[b] ^= xtime_mul(int(c[i]), int(p[i, b]))
    assert gf_combine(c, p).tolist() == want


def test_combine_shape_mismatch():
    with pytest.raises(ValueError, match="one payload row per coefficient"):
        gf_combine(np.ones(3, np.uint8), np.ones((2, 4), np.uint8))


def test_unit_vectors_decode_immediately():
    st_ = EliminationState(4, 2)
    assert eliminate_insert(st_, CoeffVector([1], 2), b"\x05\x06") is InsertResult.INNOVATIVE
    assert decoded_packets(st_) == [(2, b"\x05\x06")]
    assert st_.decoded_upto() == 0


def test_duplicate_is_redundant():
    st_ = EliminationState(3, 1)
    st_.insert(CoeffVector([3, 7], 0), b"\x01")
    assert st_.insert(CoeffVector([gf_mul(3, 9), gf_mul(7, 9)], 0), b"\x00") \
        is InsertResult.REDUNDANT
    assert st_.rank == 1


def test_is_innovative_does_not_mutate():
    st_ = EliminationState(3, 1)
    st_.insert(CoeffVector([1, 1], 0), b"\x01")
    before = st_.coef.copy()
    assert st_.is_innovative(CoeffVector([1, 2], 0))
    assert not st_.is_innovative(CoeffVector([5, 5], 0))
    assert np.array_equal(before, st_.coef) and st_.rank == 1


def test_errors():
    st_ = EliminationState(3, 2)
    with pytest.raises(ValueError, match="payload length"):
        st_.insert(CoeffVector([1], 0), b"\x01")
    with pytest.raises(ValueError, match="outside decoder columns"):
        st_.insert(CoeffVector([1, 1], 2), b"\x01\x02")
    with pytest.raises(ValueError):
        CoeffVector([], 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_decoder_matches_rref_oracle(n, seed):
    rng = np.random.default_rng(seed)
    src = rng.integers(0, 256, (n, 3), dtype=np.uint8)
    st_ = EliminationState(n, 3)
    rows, pays = [], []
    for _ in range(int(rng.integers(1, 2 * n + 2))):
        lo = int(rng.integers(0, n))
        hi = int(rng.integers(lo, n))
        c = rng.integers(0, 256, hi - lo + 1, dtype=np.uint8)
        if rng.random() < 0.3:
            c[rng.integers(0, c.size)] = 0
        pay = gf_combine(c, src[lo:hi + 1])
        full = np.zeros(n, np.uint8)
        full[lo:hi + 1] = c
        rows.append(full)
        pays.append(pay)
        st_.insert(CoeffVector(c, lo), pay)
        rank, dec = rref(rows, pays)
        assert st_.rank == rank
        assert dict(st_.decoded_packets()) == dec
    for col, payload in st_.decoded_packets():
        assert payload == src[col].tobytes()
