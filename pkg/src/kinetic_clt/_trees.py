"""Compiled inner loops shared by the McKean, Monte Carlo and limit modules."""

import numpy as np
from numba import njit

from .kernel import TRIG_KAC, draw_discrete, draw_lr, draw_trig, draw_trig_pow
from .rng import randbelow, uniform_pos


@njit(cache=True)
def draw_nu(t, state, nu_max):
    """Geometric leaf count with P(nu = n) = e^-t (1 - e^-t)^(n-1), capped.

    Returns (nu, truncated).
    """
    u = uniform_pos(state)
    if t <= 0.0:
        return 1, False
    q = -np.expm1(-t)  # 1 - e^-t
    if q >= 1.0:
        return nu_max, True
    x = np.floor(np.log(u) / np.log(q))
    if x >= nu_max - 1:
        return nu_max, True
    return 1 + int(x), False


@njit(inline="always")
def _split_ordered(beta, size, i, l, r):
    b = beta[i]
    for j in range(size, i + 1, -1):
        beta[j] = beta[j - 1]
    beta[i] = l * b
    beta[i + 1] = r * b


@njit(cache=True)
def grow_ordered(kind, table, p, n, state):
    """Weights in leaf order: the chosen leaf is replaced in place by its two children."""
    beta = np.empty(n)
    beta[0] = 1.0
    size = 1
    while size < n:
        i = randbelow(state, size)
        l, r = draw_lr(kind, table, p, state)
        _split_ordered(beta, size, i, l, r)
        size += 1
    return beta


@njit(inline="always")
def grow_unordered(kind, table, p, n, state, buf):
    """Same law of the weight multiset as ``grow_ordered`` in O(n).

    The right child is appended instead of spliced in; sums over leaves do
    not depend on leaf order.  ``buf`` must hold at least ``n`` entries.
    One loop per kernel family keeps the inner loop free of branches.
    """
    buf[0] = 1.0
    size = 1
    if kind == TRIG_KAC and p == 0.0:
        while size < n:
            i = randbelow(state, size)
            l, r = draw_trig(state)
            b = buf[i]
            buf[i] = l * b
            buf[size] = r * b
            size += 1
    elif kind == TRIG_KAC and (p == 1.0 or p == 3.0):
        # squared or fourth powers by multiplication
        four = p == 3.0
        while size < n:
            i = randbelow(state, size)
            l, r = draw_trig(state)
            l *= l
            r *= r
            if four:
                l *= l
                r *= r
            b = buf[i]
            buf[i] = l * b
            buf[size] = r * b
            size += 1
    elif kind == TRIG_KAC:
        e = 1.0 + p
        while size < n:
            i = randbelow(state, size)
            l, r = draw_trig_pow(e, state)
            b = buf[i]
            buf[i] = l * b
            buf[size] = r * b
            size += 1
    else:
        while size < n:
            i = randbelow(state, size)
            l, r = draw_discrete(table, state)
            b = buf[i]
            buf[i] = l * b
            buf[size] = r * b
            size += 1
    return size


@njit(inline="always")
def pow0(b, s):
    if b > 0.0:
        return b**s
    return 0.0


@njit(inline="always")
def power_sum(buf, size, s):
    """sum_j buf[j]**s over positive entries; integer s avoids pow()."""
    acc = 0.0
    if s == 1.0:
        for j in range(size):
            acc += buf[j]
    elif s == 2.0:
        for j in range(size):
            acc += buf[j] * buf[j]
    elif s == 0.0:
        for j in range(size):
            if buf[j] > 0.0:
                acc += 1.0
    else:
        for j in range(size):
            if buf[j] > 0.0:
                acc += buf[j] ** s
    return acc


@njit(inline="always")
def max_of(buf, size):
    bmax = 0.0
    for j in range(size):
        if buf[j] > bmax:
            bmax = buf[j]
    return bmax
