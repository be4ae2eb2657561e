"""Compiled inner loops.

Everything here works on plain float64/int64 arrays so that the public
modules can keep their dataclass surface and still run the O(n) and
O(n * band) recursions at native speed.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def banded_frechet(times, u, v, lo, hi):
    """Min-max monotone coupling of two step sequences on a shared grid.

    ``u[i]`` is the value of the reference path on merged cell ``i`` and
    ``v[j]`` the value of the warped path on merged cell ``j``.  A state
    ``(i, j)`` costs ``max(|times[i] - times[j]|, |u[i] - v[j]|)`` and is
    admissible only for ``lo[i] <= j < hi[i]``.  Moves are (1, 0), (0, 1)
    and (1, 1).

    Returns the optimal bottleneck cost and the largest time displacement
    met along the optimal coupling.
    """
    m = times.shape[0]
    inf = np.inf
    prev_d = np.full(m, inf)
    prev_w = np.full(m, inf)
    cur_d = np.full(m, inf)
    cur_w = np.full(m, inf)
    for i in range(m):
        plo = lo[i - 1] if i > 0 else 0
        phi = hi[i - 1] if i > 0 else 0
        for j in range(lo[i], hi[i]):
            dt = abs(times[i] - times[j])
            cost = abs(u[i] - v[j])
            if dt > cost:
                cost = dt
            if i == 0 and j == 0:
                best_d = 0.0
                best_w = 0.0
            else:
                best_d = inf
                best_w = inf
                if i > 0 and plo <= j < phi:
                    best_d = prev_d[j]
                    best_w = prev_w[j]
                if j > lo[i]:
                    d = cur_d[j - 1]
                    if d < best_d or (d == best_d and cur_w[j - 1] < best_w):
                        best_d = d
                        best_w = cur_w[j - 1]
                if i > 0 and plo <= j - 1 < phi:
                    d = prev_d[j - 1]
                    if d < best_d or (d == best_d and prev_w[j - 1] < best_w):
                        best_d = d
                        best_w = prev_w[j - 1]
            cur_d[j] = cost if cost > best_d else best_d
            cur_w[j] = dt if dt > best_w else best_w
        prev_d, cur_d = cur_d, prev_d
        prev_w, cur_w = cur_w, prev_w
    return prev_d[m - 1], prev_w[m - 1]


@njit(cache=True)
def euler_recursion(values, z, gamma, n, steps):
    """Run the clock/solution recursion for ``steps`` cells.

    ``counts[k]`` is ``n * c_k`` (an exact integer), ``h[k]`` the solution on
    cell ``k``.  Returns ``ok=False`` when the clock runs past the driver.
    """
    counts = np.zeros(steps + 1, dtype=np.int64)
    h = np.empty(steps)
    m = 0
    size = values.shape[0]
    for k in range(steps):
        if m >= size:
            return counts, h, False
        # z + X(c) - gamma*c + gamma*k/n, with the two gamma terms merged
        hk = z + values[m] + gamma * ((k - m) / n)
        h[k] = hk
        counts[k] = m
        if hk > 0.0:
            m += 1
    counts[steps] = m
    return counts, h, True
