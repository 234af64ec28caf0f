"""Hot inner loops: GF(2^8) row algebra and the Gilbert-Elliott state chain.

Every kernel has two implementations with identical results: a numba
``@njit`` loop (``*_nb``) and a vectorized numpy path (``*_np``). The public
names bind to the numba versions unless numba is missing or disabled via
``SWNC_NO_NUMBA``.
"""
import numpy as np

from ._accel import HAS_NUMBA, njit


# ---------------------------------------------------------------- combine

@njit(cache=True)
def combine_nb(coeffs, payloads, mul):
    k, length = payloads.shape
    out = np.zeros(length, dtype=np.uint8)
    for i in range(k):
        c = coeffs[i]
        if c == 0:
            continue
        row = mul[c]
        for b in range(length):
            out[b] ^= row[payloads[i, b]]
    return out


def combine_np(coeffs, payloads, mul):
    if payloads.shape[0] == 0:
        return np.zeros(payloads.shape[1], dtype=np.uint8)
    return np.bitwise_xor.reduce(mul[coeffs[:, None], payloads], axis=0)


# ------------------------------------------------------------- insert_row
#
# Storage convention: row ``c`` of ``coef``/``pay`` holds the RREF row whose
# pivot is column ``c``; ``has_pivot[c]`` marks occupied rows. ``vec`` and
# ``p`` are scratch copies and are overwritten.

@njit(cache=True)
def insert_row_nb(coef, pay, has_pivot, vec, p, mul, inv):
    n = coef.shape[1]
    length = pay.shape[1]
    for c in range(n):
        f = vec[c]
        if f != 0 and has_pivot[c]:
            row = mul[f]
            for j in range(n):
                vec[j] ^= row[coef[c, j]]
            for b in range(length):
                p[b] ^= row[pay[c, b]]
    lead = -1
    for c in range(n):
        if vec[c] != 0:
            lead = c
            break
    if lead < 0:
        return -1
    g = inv[vec[lead]]
    if g != 1:
        row = mul[g]
        for j in range(n):
            vec[j] = row[vec[j]]
        for b in range(length):
            p[b] = row[p[b]]
    for r in range(n):
        if has_pivot[r]:
            f = coef[r, lead]
            if f != 0:
                row = mul[f]
                for j in range(n):
                    coef[r, j] ^= row[vec[j]]
                for b in range(length):
                    pay[r, b] ^= row[p[b]]
    for j in range(n):
        coef[lead, j] = vec[j]
    for b in range(length):
        pay[lead, b] = p[b]
    has_pivot[lead] = True
    return lead


def insert_row_np(coef, pay, has_pivot, vec, p, mul, inv):
    # Pivot rows are zero on every other pivot column, so the entries of vec
    # at pivot columns do not change while reducing: one batched pass suffices.
    hit = np.flatnonzero(has_pivot & (vec != 0))
    if hit.size:
        f = vec[hit][:, None]
        vec ^= np.bitwise_xor.reduce(mul[f, coef[hit]], axis=0)
        p ^= np.bitwise_xor.reduce(mul[f, pay[hit]], axis=0)
    nz = np.flatnonzero(vec)
    if nz.size == 0:
        return -1
    lead = int(nz[0])
    g = inv[vec[lead]]
    if g != 1:
        vec[:] = mul[g][vec]
        p[:] = mul[g][p]
    rows = np.flatnonzero(has_pivot & (coef[:, lead] != 0))
    if rows.size:
        f = coef[rows, lead][:, None]
        coef[rows] ^= mul[f, vec[None, :]]
        pay[rows] ^= mul[f, p[None, :]]
    coef[lead] = vec
    pay[lead] = p
    has_pivot[lead] = True
    return lead


# --------------------------------------------------------------- ge_chain

@njit(cache=True)
def ge_chain_nb(u_state, u_loss, start_bad, s, q, eps_g, eps_b):
    n = u_state.shape[0]
    bad = np.zeros(n, dtype=np.bool_)
    lost = np.zeros(n, dtype=np.bool_)
    state = start_bad
    for t in range(n):
        bad[t] = state
        if state:
            lost[t] = u_loss[t] < eps_b
            if u_state[t] < s:
                state = False
        else:
            lost[t] = u_loss[t] < eps_g
            if u_state[t] < q:
                state = True
    return bad, lost


def ge_chain_np(u_state, u_loss, start_bad, s, q, eps_g, eps_b):
    # Each step maps {good, bad} by one of: identity, swap, const-good,
    # const-bad. The state at t is the last constant before t XOR the parity
    # of swaps since then.
    n = u_state.shape[0]
    if n == 0:
        return np.zeros(0, bool), np.zeros(0, bool)
    u = u_state[:-1]
    swap = (u < q) & (u < s)
    to_bad = (u < q) & (u >= s)
    to_good = (u >= q) & (u < s)
    is_const = np.empty(n, dtype=bool)
    is_const[0] = True
    is_const[1:] = to_bad | to_good
    value = np.empty(n, dtype=bool)
    value[0] = bool(start_bad)
    value[1:] = to_bad
    flips = np.zeros(n, dtype=np.int64)
    flips[1:] = np.cumsum(swap)
    anchor = np.maximum.accumulate(np.where(is_const, np.arange(n), 0))
    bad = value[anchor] ^ (((flips - flips[anchor]) & 1) == 1)
    lost = np.where(bad, u_loss < eps_b, u_loss < eps_g)
    return bad, lost


if HAS_NUMBA:
    combine = combine_nb
    insert_row = insert_row_nb
    ge_chain = ge_chain_nb
else:
    combine = combine_np
    insert_row = insert_row_np
    ge_chain = ge_chain_np
