"""
Euler-type scheme for the time-change equation
==============================================

On the grid ``N/n`` the clock advances by one cell exactly when the current
value of the approximate solution is strictly positive:

    h_k     = z_n + X(c_k) - gamma*c_k + gamma*k/n
    c_{k+1} = c_k + I(h_k > 0) / n

``c_k`` is kept as an integer count of cells, so every branch decision is an
exact comparison of stored floats.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import euler_recursion
from .errors import ConfigurationError, HorizonError
from .levy import restrict_to_coarser_grid
from .paths import GridPath, TimeChange, _grid_count, j1_distance, timechange_sup_distance
from .tce import ResidualReport, TceProblem, check_residual, solve_exact


@dataclass(frozen=True, eq=False)
class EulerTrace:
    """Clock counts and solution values of one scheme run.

    ``counts[k] = n * c_k`` (length ``steps + 1``), ``h[k]`` is the value on
    ``[k/n, (k+1)/n)`` (length ``steps``).
    """

    mesh_n: int
    counts: np.ndarray
    h: np.ndarray
    gamma: float
    z_n: float

    @property
    def c(self) -> np.ndarray:
        return self.counts / self.mesh_n

    @property
    def steps(self) -> int:
        return self.h.size

    def to_csv(self, path) -> None:
        """Rows ``k,t,c_k,h_k`` for ``k < steps``."""
        n = self.mesh_n
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "t", "c_k", "h_k"])
            for k in range(self.steps):
                w.writerow([k, repr(k / n), repr(float(self.counts[k] / n)), repr(float(self.h[k]))])


def _mesh_n(step: float) -> int:
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-12:
        raise ConfigurationError(f"driver step {step!r} is not of the form 1/n")
    return n


def euler_solve(
    driver: GridPath, z_n: float, gamma: float, steps: int | None = None
) -> EulerTrace:
    """Run the scheme on a driver sampled at mesh ``1/n``.

    ``steps`` defaults to the number of driver cells, which the clock can
    never outrun.

    Raises
    ------
    HorizonError
        If the clock needs a driver cell beyond the last one.
    """
    if not gamma > 0:
        raise ConfigurationError("gamma must be > 0")
    if z_n < 0:
        raise ConfigurationError("z_n must be >= 0")
    n = _mesh_n(driver.step)
    steps = driver.n_cells if steps is None else int(steps)
    if steps < 1:
        raise ConfigurationError("steps must be >= 1")
    counts, h, ok = euler_recursion(driver.values, float(z_n), float(gamma), n, steps)
    if not ok:
        raise HorizonError(f"clock ran past the {driver.n_cells} driver cells")
    counts.setflags(write=False)
    h.setflags(write=False)
    return EulerTrace(n, counts, h, float(gamma), float(z_n))


def reconstruct_processes(trace: EulerTrace, output_mesh: float | None = None):
    """Piecewise-constant ``Z^n`` and piecewise-linear ``C^n`` from a trace.

    ``C^n`` has breakpoints on ``N/n`` and slope ``I(h_k > 0)`` on cell
    ``k``.  With ``output_mesh`` set, ``Z^n`` is resampled on that grid.
    """
    if trace.steps == 0:
        raise ConfigurationError("empty trace")
    n = trace.mesh_n
    Z = GridPath(1.0 / n, trace.h)
    C = TimeChange(np.arange(trace.steps + 1) / n, trace.counts / n)
    if output_mesh is not None and output_mesh != Z.step:
        t = np.arange(_grid_count(Z.horizon, output_mesh)) * output_mesh
        Z = GridPath(output_mesh, Z.values[Z.cell_index(t)])
    return Z, C


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    sup_dist_C: float
    j1_dist_Z: float
    j1_time_warp: float
    sup_dist_Z: float


@dataclass(frozen=True)
class ConvergenceTable:
    rows: list
    reference_mesh_n: int
    horizon: float
    reference_residual: ResidualReport

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "sup_dist_C", "j1_dist_Z"])
            for r in self.rows:
                w.writerow([r.n, repr(r.sup_dist_C), repr(r.j1_dist_Z)])


def convergence_curve(
    problem: TceProblem,
    meshes,
    horizon: float | None = None,
    window_factor: float = 10.0,
    reference=None,
) -> ConvergenceTable:
    """Distances between the scheme at each coarse mesh and the exact solution.

    Parameters
    ----------
    problem : TceProblem
        Driver at the fine reference mesh ``1/N``.
    meshes : sequence of int
        Coarse ``n``; each must divide ``N``.
    window_factor : float
        J1 window in units of the coarsest mesh in ``meshes``.  One window
        serves every row so that all rows are measured in the same metric.
    reference : TceSolution, optional
        Precomputed ``solve_exact(problem)``.
    """
    N = _mesh_n(problem.driver.step)
    horizon = problem.horizon if horizon is None else float(horizon)
    for n in meshes:
        if n < 1 or N % n:
            raise ConfigurationError(f"mesh n={n} does not divide the reference N={N}")
    ref = solve_exact(problem, horizon=horizon) if reference is None else reference
    residual = check_residual(problem, ref, horizon)
    window = window_factor / min(meshes)
    rows = []
    for n in meshes:
        xn = restrict_to_coarser_grid(problem.driver, n)
        steps = _grid_count(horizon, 1.0 / n)
        Zn, Cn = reconstruct_processes(euler_solve(xn, problem.z, problem.gamma, steps))
        rep = j1_distance(Zn, ref.Z, horizon, window=window)
        rows.append(ConvergenceRow(
            n=int(n),
            sup_dist_C=timechange_sup_distance(Cn, ref.C, horizon),
            j1_dist_Z=rep.j1_distance,
            j1_time_warp=rep.j1_time_warp_bound,
            sup_dist_Z=rep.sup_distance,
        ))
    return ConvergenceTable(rows, N, horizon, residual)


def write_table_manifest(table: ConvergenceTable, path, **extra) -> None:
    doc = {"reference_mesh_n": table.reference_mesh_n, "horizon": table.horizon,
           "reference_residual": table.reference_residual.to_dict(), **extra}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True))
