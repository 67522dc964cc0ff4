"""Compiled inner loop for annealing with the exact integer objective.

The whole run works on scaled integers (I^2 times the objective), so the
loop never touches a float except for the Metropolis draw. Randomness comes
from an inline xoshiro256++ stream whose state lives in local arrays: calls
are thread-safe and a run is fully determined by its four seed words, which
is what makes batches reproducible at any parallelism degree.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_DOUBLE_SCALE = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, inline="always")
def _next_u64(state):
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    tmp = s0 + s3
    result = ((tmp << np.uint64(23)) | (tmp >> np.uint64(41))) + s0
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return result


@njit(cache=True, inline="always")
def _next_double(state):
    return (_next_u64(state) >> np.uint64(11)) * _DOUBLE_SCALE


@njit(cache=True, inline="always")
def _next_below(state, bound):
    # bound is tiny (action counts), so the float path is unbiased enough
    r = int(_next_double(state) * bound)
    if r >= bound:
        r = bound - 1
    return r


@njit(cache=True)
def _objective(m_mat, n_mat, cp, cq, intervals):
    n, m = m_mat.shape
    best_m = np.int64(-1)
    for i in range(n):
        acc = np.int64(0)
        for j in range(m):
            acc += m_mat[i, j] * cq[j]
        if acc > best_m:
            best_m = acc
    best_n = np.int64(-1)
    for j in range(m):
        acc = np.int64(0)
        for i in range(n):
            acc += n_mat[i, j] * cp[i]
        if acc > best_n:
            best_n = acc
    vmv = np.int64(0)
    for i in range(n):
        if cp[i] == 0:
            continue
        acc = np.int64(0)
        for j in range(m):
            acc += (m_mat[i, j] + n_mat[i, j]) * cq[j]
        vmv += cp[i] * acc
    return intervals * (best_m + best_n) - vmv


@njit(cache=True, inline="always")
def _transfer(counts, state):
    k = counts.shape[0]
    positive = 0
    for i in range(k):
        if counts[i] > 0:
            positive += 1
    pick = _next_below(state, positive)
    donor = -1
    seen = 0
    for i in range(k):
        if counts[i] > 0:
            if seen == pick:
                donor = i
                break
            seen += 1
    offset = _next_below(state, k - 1)
    recipient = offset if offset < donor else offset + 1
    counts[donor] -= 1
    counts[recipient] += 1
    return donor, recipient


@njit(cache=True, nogil=True)
def anneal_ints(
    m_mat,
    n_mat,
    p0,
    q0,
    intervals,
    iterations,
    t_max,
    decay,
    linear_step,
    use_linear,
    move_both,
    seed_words,
    trace_f,
    trace_t,
    record_trace,
):
    """Run the annealing loop; returns state, counters and the best profile.

    Returns (best_p, best_q, best_obj, final_p, final_q, final_obj,
    accepted, uphill_proposed, uphill_accepted, first_zero_iter).
    Objective values are scaled integers (I^2 * f); ``first_zero_iter`` is
    the first iteration index (0 = the initial profile) at which the current
    pair was an exact equilibrium, or -1 if that never happened.
    """
    state = seed_words.copy()
    n = p0.shape[0]
    m = q0.shape[0]
    cp = p0.copy()
    cq = q0.copy()
    inv_scale = 1.0 / (float(intervals) * float(intervals))

    current = _objective(m_mat, n_mat, cp, cq, intervals)
    best = current
    best_p = cp.copy()
    best_q = cq.copy()
    first_zero = np.int64(-1)
    if current == 0:
        first_zero = 0

    accepted = np.int64(0)
    uphill_proposed = np.int64(0)
    uphill_accepted = np.int64(0)

    temperature = t_max
    for it in range(iterations):
        moved_player = -1
        donor = -1
        recipient = -1
        donor2 = -1
        recipient2 = -1
        if move_both:
            if n > 1:
                donor, recipient = _transfer(cp, state)
            if m > 1:
                donor2, recipient2 = _transfer(cq, state)
        elif n == 1 and m == 1:
            pass  # single profile: the proposal is the current pair
        else:
            moved_player = _next_below(state, 2)
            if moved_player == 0 and n == 1:
                moved_player = 1
            elif moved_player == 1 and m == 1:
                moved_player = 0
            if moved_player == 0:
                donor, recipient = _transfer(cp, state)
            else:
                donor2, recipient2 = _transfer(cq, state)

        candidate = _objective(m_mat, n_mat, cp, cq, intervals)
        delta = candidate - current
        accept = True
        if delta > 0:
            uphill_proposed += 1
            threshold = np.exp(-float(delta) * inv_scale / temperature)
            if _next_double(state) < threshold:
                uphill_accepted += 1
            else:
                accept = False
        if accept:
            accepted += 1
            current = candidate
            if current < best:
                best = current
                best_p[:] = cp
                best_q[:] = cq
            if current == 0 and first_zero < 0:
                first_zero = it + 1
        else:
            # revert the move(s)
            if donor >= 0:
                cp[donor] += 1
                cp[recipient] -= 1
            if donor2 >= 0:
                cq[donor2] += 1
                cq[recipient2] -= 1

        if record_trace:
            trace_f[it] = float(current) * inv_scale
            trace_t[it] = temperature

        if use_linear:
            temperature -= linear_step
        else:
            temperature *= decay

    return (
        best_p,
        best_q,
        best,
        cp,
        cq,
        current,
        accepted,
        uphill_proposed,
        uphill_accepted,
        first_zero,
    )


def seed_words_from(rng: np.random.Generator) -> np.ndarray:
    """Four nonzero xoshiro seed words drawn from a caller-owned generator."""
    words = rng.integers(0, 2**64, size=4, dtype=np.uint64)
    if not words.any():
        words[0] = np.uint64(0x9E3779B97F4A7C15)
    return words
