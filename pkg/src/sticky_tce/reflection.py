"""
One-sided reflection at zero
============================

``reflect`` maps a grid path ``f`` to ``(r, l)`` with ``r = f + l >= 0`` and
``l`` the running maximum of ``max(-f, 0)``: the smallest nondecreasing push
that keeps ``r`` nonnegative.  ``check_reflection_axioms`` verifies the
defining conditions of such a pair, which on a grid pin it down uniquely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .paths import GridPath
from .verdicts import FAIL, PASS, Verdict


@dataclass(frozen=True)
class ReflectionPair:
    r: GridPath
    l: GridPath
    source_mesh: float


def reflect(f: GridPath) -> ReflectionPair:
    """Reflect ``f`` at zero.

    ``l[k] = max_{j<=k} max(-f[j], 0)`` and ``r = f + l``.  Only max and one
    addition per cell are used, so ``r`` is exactly 0 wherever ``l`` grows.
    """
    l = np.maximum.accumulate(np.maximum(-f.values, 0.0))
    return ReflectionPair(f.with_values(f.values + l), f.with_values(l), f.step)


def check_reflection_axioms(f: GridPath, pair: ReflectionPair, tolerance: float = 0.0) -> Verdict:
    """Check that ``pair`` is a reflection of ``f``; report the first violation.

    Order of checks: decomposition ``r = f + l`` (up to ``tolerance``),
    nonnegativity of ``r``, monotonicity of ``l``, the initial value
    ``l[0] = max(0, -f[0])`` and growth-support (``l`` increases only on
    cells where ``r == 0``, with ``l[-1] := 0``).  The last two are exact.
    """
    r, l = pair.r.values, pair.l.values
    if not (f.step == pair.r.step == pair.l.step and f.n_cells == r.size == l.size):
        raise ConfigurationError("f, r and l must share mesh and length")
    if tolerance < 0:
        raise ConfigurationError("tolerance must be nonnegative")

    gap = np.abs(r - (f.values + l))
    if gap.max() > tolerance:
        k = int(np.argmax(gap))
        return Verdict(FAIL, "decomposition", f"r != f + l at cell {k}", float(gap[k]))
    if r.min() < 0:
        k = int(np.argmin(r))
        return Verdict(FAIL, "nonnegativity", f"r < 0 at cell {k}", float(-r[k]))
    dl = np.diff(l, prepend=0.0)
    if np.any(dl[1:] < 0):
        k = int(np.argmin(dl[1:])) + 1
        return Verdict(FAIL, "monotonicity", f"l decreases at cell {k}", float(-dl[k]))
    if l[0] != max(0.0, -f.values[0]):
        return Verdict(FAIL, "initial", "l[0] != max(0, -f[0])", float(abs(l[0] - max(0.0, -f.values[0]))))
    bad = np.flatnonzero((dl > 0) & (r != 0))
    if bad.size:
        k = int(bad[0])
        return Verdict(FAIL, "growth-support", f"l grows at cell {k} where r = {r[k]!r}", float(r[k]))
    return Verdict(PASS, None, "all reflection axioms hold")
