"""
Exact solution of the sticky time-change equation
=================================================

For a driver ``X`` with ``X(0) = 0``, a start ``z >= 0`` and stickiness
``gamma > 0`` we look for ``(Z, C)`` with

    Z(t) = z + X(C(t)) + gamma * int_0^t I(Z(s) = 0) ds,
    C(t) = int_0^t I(Z(s) > 0) ds.

The solution is built by reflecting ``f = z + X`` at zero, stretching time
with the clock ``a(t) = t + l(t)/gamma`` and reading ``Z = r(C)`` where
``C`` inverts ``a``.  The module also provides residual and comparison
checks that certify (or refute) candidate solutions on a grid.

Grid convention for ``l``
-------------------------
``reflect`` stores ``l`` per cell.  The continuous ``l`` used by the clock is
piecewise linear with value ``l[j-1]`` at time ``j*step`` (``l[-1] = 0``), so
``l`` rises across cell ``j`` exactly when ``r`` is pushed up on that cell.
Time spent stretching the clock is then spent at ``r = 0``, and ``C`` only
uses driver values already revealed.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InvalidInitialCondition
from .paths import (
    GridPath,
    TimeChange,
    _grid_count,
    compose_path_timechange,
    invert_time_change,
    sup_distance,
    timechange_sup_distance,
)
from .reflection import reflect
from .verdicts import FAIL, INAPPLICABLE, PASS, Verdict


@dataclass(frozen=True)
class TceProblem:
    """Driver, start point and stickiness."""

    driver: GridPath
    z: float
    gamma: float

    def __post_init__(self):
        if not self.z >= 0:
            raise ConfigurationError(f"start point z must be >= 0, got {self.z}")
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be > 0, got {self.gamma}")

    @property
    def mesh(self) -> float:
        return self.driver.step

    @property
    def horizon(self) -> float:
        return self.driver.horizon


@dataclass(frozen=True)
class TceSolution:
    """Output of :func:`solve_exact`.

    ``L`` holds the per-cell local time ``l``; the continuous local time is
    ``gamma * (clock_a(t) - t)``.
    """

    Z: GridPath
    C: TimeChange
    L: GridPath
    clock_a: TimeChange
    zero_occupation: float


@dataclass(frozen=True)
class CandidatePair:
    """Any ``(Z, C)`` pair offered as a solution, e.g. from the Euler scheme."""

    Z: GridPath
    C: TimeChange


@dataclass(frozen=True)
class ResidualReport:
    max_equation_residual: float
    max_clock_residual: float
    indicator_integrals: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["indicator_integrals"] = list(self.indicator_integrals)
        return d


def solve_exact(
    p: TceProblem, output_mesh: float | None = None, horizon: float | None = None
) -> TceSolution:
    """Reflection-and-clock construction of the solution.

    Parameters
    ----------
    p : TceProblem
    output_mesh : float, optional
        Mesh on which ``Z`` is sampled; defaults to the driver mesh.  ``C``
        is exact piecewise-linear regardless.
    horizon : float, optional
        Length of the sampled ``Z``; defaults to the driver horizon.

    Raises
    ------
    InvalidInitialCondition
        If ``z + X(0) < 0``.
    """
    f = p.driver.with_values(p.z + p.driver.values)
    if f.values[0] < 0:
        raise InvalidInitialCondition(f"z + X(0) = {f.values[0]!r} < 0")
    step = p.driver.step
    output_mesh = step if output_mesh is None else float(output_mesh)
    horizon = p.driver.horizon if horizon is None else float(horizon)
    if horizon > p.driver.horizon:
        raise ConfigurationError("horizon exceeds the driver")

    pair = reflect(f)
    l_cont = np.concatenate(([0.0], pair.l.values))
    bp = np.arange(f.n_cells + 1) * step
    a = TimeChange(bp, bp + l_cont / p.gamma)
    C = invert_time_change(a)
    Z = compose_path_timechange(pair.r, C, output_mesh, _grid_count(horizon, output_mesh))
    occupation = float(np.interp(C(horizon), bp, l_cont)) / p.gamma
    return TceSolution(Z=Z, C=C, L=pair.l, clock_a=a, zero_occupation=occupation)


def check_residual(
    p: TceProblem, sol, horizon: float | None = None, zero_set: str = "exact"
) -> ResidualReport:
    """Measure how far ``sol`` is from solving the equation on ``sol.Z``'s grid.

    Indicator integrals are left-endpoint sums over the cells of ``Z``
    (exact, since ``Z`` is constant on them).  The equation residual is taken
    at every grid time below the horizon, the clock residual also at the
    horizon itself.

    Parameters
    ----------
    sol : TceSolution or CandidatePair
    zero_set : {"exact", "nonpositive"}
        ``"exact"`` integrates ``I(Z = 0)``; ``"nonpositive"`` integrates
        ``I(Z <= 0)``, the complement of ``I(Z > 0)``.  The two agree for
        nonnegative ``Z``; the second is the right bookkeeping for schemes
        whose values can dip below zero.
    """
    if zero_set not in ("exact", "nonpositive"):
        raise ConfigurationError(f"unknown zero_set {zero_set!r}")
    horizon = p.horizon if horizon is None else float(horizon)
    Zp, C = sol.Z, sol.C
    if Zp.horizon < horizon * (1 - 1e-12) or C.end < horizon * (1 - 1e-12):
        raise ConfigurationError(
            f"solution covers Z up to {Zp.horizon!r} and C up to {C.end!r}, "
            f"horizon is {horizon!r}"
        )
    if horizon > p.horizon * (1 + 1e-12):
        raise ConfigurationError("horizon exceeds the driver")
    k = _grid_count(horizon, Zp.step)
    z = Zp.values[:k]
    dt = np.diff(np.append(np.arange(k) * Zp.step, horizon))
    pos = z > 0
    zero = (z == 0) if zero_set == "exact" else ~pos
    int_pos = np.concatenate(([0.0], np.cumsum(pos * dt)))
    int_zero = np.concatenate(([0.0], np.cumsum(zero * dt)))
    t = np.append(np.arange(k) * Zp.step, horizon)
    c = C(np.minimum(t, C.end))
    x = p.driver.values[p.driver.cell_index(c[:k])]
    eq = np.abs(z - p.z - x - p.gamma * int_zero[:k])
    clock = np.abs(c - int_pos)
    return ResidualReport(
        max_equation_residual=float(eq.max()),
        max_clock_residual=float(clock.max()),
        indicator_integrals=(float(int_pos[-1]), float(int_zero[-1])),
    )


def compare_clocks(
    p1: TceProblem, p2: TceProblem, sols, tol: float | None = None
) -> Verdict:
    """Check the clock ordering ``C1 <= C2 + tol`` implied by ``z1+X1 <= z2+X2``.

    Returns an ``inapplicable`` verdict when the drivers are not ordered or
    the stickiness differs.  ``tol`` defaults to two driver meshes.
    """
    s1, s2 = sols
    if p1.driver.step != p2.driver.step:
        raise ConfigurationError("drivers must share a mesh")
    if p1.gamma != p2.gamma:
        return Verdict(INAPPLICABLE, "precondition", "problems use different gamma")
    m = min(p1.driver.n_cells, p2.driver.n_cells)
    lift = (p2.z + p2.driver.values[:m]) - (p1.z + p1.driver.values[:m])
    if lift.min() < 0:
        k = int(np.argmin(lift))
        return Verdict(INAPPLICABLE, "precondition", f"drivers not ordered at cell {k}",
                       float(-lift[k]))
    tol = 2 * p1.driver.step if tol is None else float(tol)
    end = min(s1.C.end, s2.C.end)
    t = np.union1d(s1.C.breakpoints, s2.C.breakpoints)
    t = t[t <= end]
    excess = s1.C(t) - s2.C(t)
    k = int(np.argmax(excess))
    worst = float(excess[k])
    if worst > tol:
        return Verdict(FAIL, "clock-order", f"C1 exceeds C2 by {worst!r} at t={t[k]!r}", worst)
    return Verdict(PASS, None, f"C1 <= C2 + {tol!r}; worst excess {worst!r}", worst)


def uniqueness_probe(
    p: TceProblem,
    candidate,
    tol: float,
    reference: TceSolution | None = None,
    zero_set: str = "nonpositive",
    horizon: float | None = None,
) -> Verdict:
    """Compare a residual-feasible candidate with the exact solution.

    The candidate must first solve the equation up to ``tol`` (both
    residuals); otherwise the probe does not apply.  It then passes iff
    ``Z`` and ``C`` are within ``3*tol`` of the exact ones in uniform
    distance.
    """
    horizon = p.horizon if horizon is None else float(horizon)
    res = check_residual(p, candidate, horizon, zero_set=zero_set)
    worst_res = max(res.max_equation_residual, res.max_clock_residual)
    if worst_res > tol:
        return Verdict(INAPPLICABLE, "precondition",
                       f"candidate residual {worst_res!r} exceeds tol {tol!r}", worst_res)
    ref = solve_exact(p, horizon=horizon) if reference is None else reference
    dz = sup_distance(candidate.Z, ref.Z, horizon)
    dc = timechange_sup_distance(candidate.C, ref.C, horizon)
    msg = f"sup|dZ| = {dz!r}, sup|dC| = {dc!r}, bound 3*tol = {3 * tol!r}"
    if dz > 3 * tol:
        return Verdict(FAIL, "Z-distance", msg, dz)
    if dc > 3 * tol:
        return Verdict(FAIL, "C-distance", msg, dc)
    return Verdict(PASS, None, msg, max(dz, dc))


def export_bundle(sol: TceSolution, out_dir, manifest: dict) -> list:
    """Write ``Z.csv``, ``C.json``, ``L.csv`` and ``manifest.json``; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "Z.csv", out / "C.json", out / "L.csv", out / "manifest.json"]
    sol.Z.to_csv(paths[0])
    paths[1].write_text(sol.C.to_json())
    sol.L.to_csv(paths[2])
    doc = dict(manifest)
    doc.setdefault("zero_occupation", sol.zero_occupation)
    doc["artifact_paths"] = [str(q) for q in paths]
    paths[3].write_text(json.dumps(doc, indent=2, sort_keys=True))
    return paths
