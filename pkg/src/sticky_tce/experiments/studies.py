"""
Monte Carlo studies
===================

Each study splits the replicate indices ``0..ensemble_size-1`` into a fixed
number of contiguous batches.  Batches are independent (every replicate has
its own random stream) and their partial sums are merged in batch order, so
the numbers in a report do not depend on how many worker processes ran them.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from ..errors import ConfigurationError
from ..euler import euler_solve, reconstruct_processes
from ..levy import LevyTriplet, SimConfig, restrict_to_coarser_grid, sample_path
from ..paths import GridPath, TimeChange, timechange_sup_distance
from ..tce import CandidatePair, TceProblem, check_residual, solve_exact
from ..verdicts import EXPLORATORY, FAIL, INAPPLICABLE, INCONCLUSIVE, PASS
from .functions import GeneratorEval, TestFunction, boundary_defect, generator_apply

DEFAULT_BATCHES = 20
EFFECT_FLOOR = 1e-3


@dataclass(frozen=True)
class StickyModel:
    """Law of a sticky process: driver triplet, start point and stickiness."""

    triplet: LevyTriplet
    z: float
    gamma: float


@dataclass
class ExperimentReport:
    """Named statistics with a verdict.  Monte Carlo means ``x`` come with ``x_se``."""

    name: str
    statistics: dict
    verdict: str
    provenance: dict = field(default_factory=dict)
    replicates: dict | None = None

    def to_json(self) -> str:
        doc = {"name": self.name, "verdict": self.verdict,
               "statistics": self.statistics, "provenance": self.provenance}
        return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable)

    def write(self, out_dir) -> list:
        """Write ``report.json`` and, when kept, ``replicates.csv``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "report.json"]
        paths[0].write_text(self.to_json())
        if self.replicates:
            keys = list(self.replicates)
            rows = np.column_stack([np.asarray(self.replicates[k], dtype=float) for k in keys])
            paths.append(out / "replicates.csv")
            with open(paths[-1], "w") as fh:
                fh.write(",".join(["replicate"] + keys) + "\n")
                for i, row in enumerate(rows):
                    fh.write(",".join([str(i)] + [repr(float(v)) for v in row]) + "\n")
        return paths


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _batches(ensemble: int, batches: int):
    edges = np.linspace(0, ensemble, min(batches, ensemble) + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def _run(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))


def _mean_se(total: np.ndarray, total_sq: np.ndarray, count: int):
    mean = total / count
    if count < 2:
        return mean, np.full_like(mean, np.inf)
    var = np.maximum(total_sq - count * mean * mean, 0.0) / (count - 1)
    return mean, np.sqrt(var / count)


def _solve_replicate(model: StickyModel, cfg: SimConfig, i: int, allow_invalid=False):
    x = sample_path(model.triplet, cfg, i, allow_invalid=allow_invalid)
    return x, solve_exact(TceProblem(x, model.z, model.gamma))


def _grid_index(t: float, mesh_n: int, what: str) -> int:
    k = int(round(t * mesh_n))
    if k < 0 or abs(k - t * mesh_n) > 1e-9 * max(1.0, t * mesh_n):
        raise ConfigurationError(f"{what} {t!r} is not on the grid N/{mesh_n}")
    return k


# -- generator / martingale ----------------------------------------------------
def _generator_values(g: GeneratorEval, f: TestFunction):
    """Vectorised ``x -> Lf(x)``; tabulated when the jump integral is costly."""
    if g.triplet.jumps is None:
        return lambda x: generator_apply(g, f, x)
    top = f.support_bound
    grid = np.linspace(0.0, top, 8001)
    table = generator_apply(g, f, grid)
    # past the support bound f and its derivatives vanish at x and x + y
    return lambda x: np.interp(x, grid, table, right=0.0)


def _martingale_batch(task):
    model, f, g, cfg, t_idx, d_idx, lo, hi = task
    lf = _generator_values(g, f)
    f0 = float(f.evaluation(np.array([model.z]))[0])
    mesh = cfg.step
    m = np.zeros((hi - lo, len(t_idx)))
    occ = np.zeros((hi - lo, len(t_idx)))
    first = np.zeros(hi - lo)
    for r, i in enumerate(range(lo, hi)):
        _, sol = _solve_replicate(model, cfg, i)
        z = sol.Z.values
        integral = np.concatenate(([0.0], np.cumsum(lf(z)) * mesh))
        zeros = np.concatenate(([0.0], np.cumsum(z == 0) * mesh))
        m[r] = f.evaluation(z[t_idx]) - f0 - integral[t_idx]
        occ[r] = zeros[t_idx]
        first[r] = f.evaluation(z[d_idx : d_idx + 1])[0] - f0
    return {"count": hi - lo, "m_sum": m.sum(0), "m_sq": (m * m).sum(0),
            "occ_sum": occ.sum(0), "occ_sq": (occ * occ).sum(0),
            "first_sum": first.sum(), "first_sq": (first * first).sum()}


def martingale_test(
    model: StickyModel,
    f: TestFunction,
    g: GeneratorEval,
    t_grid,
    cfg: SimConfig,
    delta: float | None = None,
    batches: int = DEFAULT_BATCHES,
    jobs: int = 1,
    effect_floor: float = EFFECT_FLOOR,
    provenance: dict | None = None,
) -> ExperimentReport:
    """Monte Carlo test that ``f(Z_t) - f(z) - int_0^t Lf(Z_s) ds`` has mean zero.

    ``m(t)`` is estimated with left-endpoint sums on the driver grid.  The
    verdict fails if ``|m(t)| > 3 SE(t)`` at any ``t``, is inconclusive if
    some ``SE(t)`` exceeds ``effect_floor`` and passes otherwise.  When the
    boundary defect ``d`` of ``f`` is nonzero, batch estimates of
    ``m(t_max) / E[time at 0 by t_max]`` are sign-tested against ``sign(d)``
    (one-sided binomial test).

    Simulations run up to one cell past ``max(t_grid)``; ``cfg.horizon`` is
    ignored.  ``delta`` sets the initial-derivative estimate
    ``(E f(Z_delta) - f(z)) / delta``; it defaults to ``0.01`` rounded down to
    the grid, since over a handful of cells the one-cell overshoot of the
    grid solution dominates.
    """
    t_grid = [float(t) for t in t_grid]
    n = cfg.mesh_n
    t_idx = np.array([_grid_index(t, n, "time") for t in t_grid])
    d_idx = max(1, int(0.01 * n)) if delta is None else _grid_index(delta, n, "delta")
    if d_idx < 1:
        raise ConfigurationError("delta must be at least one cell")
    cells = max(int(t_idx.max()), d_idx) + 1
    sim = SimConfig(cfg.seed, n, cells / n, cfg.ensemble_size)
    defect = boundary_defect(g, f, model.gamma)

    tasks = [(model, f, g, sim, t_idx, d_idx, lo, hi)
             for lo, hi in _batches(cfg.ensemble_size, batches)]
    parts = _run(_martingale_batch, tasks, jobs)
    count = sum(p["count"] for p in parts)
    m, m_se = _mean_se(sum(p["m_sum"] for p in parts), sum(p["m_sq"] for p in parts), count)
    occ, occ_se = _mean_se(sum(p["occ_sum"] for p in parts),
                           sum(p["occ_sq"] for p in parts), count)
    first, first_se = _mean_se(np.array(sum(p["first_sum"] for p in parts)),
                               np.array(sum(p["first_sq"] for p in parts)), count)
    dt = d_idx / n

    stats = {"boundary_defect": defect, "ensemble_size": count, "mesh_n": n,
             "batches": len(parts)}
    for j, t in enumerate(t_grid):
        stats[f"m({t})"] = float(m[j])
        stats[f"m({t})_se"] = float(m_se[j])
        stats[f"zero_time({t})"] = float(occ[j])
        stats[f"zero_time({t})_se"] = float(occ_se[j])
    stats["initial_derivative"] = float(first / dt)
    stats["initial_derivative_se"] = float(first_se / dt)
    stats["generator_at_start"] = float(generator_apply(g, f, model.z))
    stats["delta"] = dt

    last = int(np.argmax(t_idx))
    if occ[last] > 0:
        stats["drift_per_zero_time"] = float(m[last] / occ[last])
    if defect != 0:
        signs = [np.sign(p["m_sum"][last]) for p in parts]
        agree = sum(1 for s in signs if s == np.sign(defect))
        stats["sign_agreements"] = agree
        stats["sign_test_p"] = float(binomtest(agree, len(signs), 0.5,
                                               alternative="greater").pvalue)

    if np.any(np.abs(m) > 3 * m_se):
        verdict = FAIL
    elif np.any(m_se > effect_floor):
        verdict = INCONCLUSIVE
    else:
        verdict = PASS
    prov = {"seed": cfg.seed, "z": model.z, "gamma": model.gamma, "t_grid": t_grid,
            "test_function": f.label, **(provenance or {})}
    return ExperimentReport("martingale", stats, verdict, prov)


# -- occupation ---------------------------------------------------------------
def _first_times(z: np.ndarray, mesh: float):
    hits = np.flatnonzero(z == 0)
    horizon = z.size * mesh
    if hits.size == 0:
        return horizon, horizon
    k = int(hits[0])
    away = np.flatnonzero(z[k + 1:] != 0)
    leave = (k + 1 + int(away[0])) * mesh if away.size else horizon
    return k * mesh, leave


def _occupation_batch(task):
    model, cfg, factors, allow_invalid, lo, hi = task
    out = np.zeros((hi - lo, 1 + 2 * len(factors)))
    for r, i in enumerate(range(lo, hi)):
        x = sample_path(model.triplet, cfg, i, allow_invalid=allow_invalid)
        row = []
        for j, fac in enumerate(factors):
            xn = x if fac == 1 else restrict_to_coarser_grid(x, cfg.mesh_n // fac)
            sol = solve_exact(TceProblem(xn, model.z, model.gamma))
            if j == 0:
                row.append(sol.zero_occupation)
            row.extend(_first_times(sol.Z.values, sol.Z.step))
        out[r] = row
    return out


def occupation_study(
    model: StickyModel,
    cfg: SimConfig,
    coarsening=(1, 4, 16),
    batches: int = DEFAULT_BATCHES,
    jobs: int = 1,
    allow_invalid: bool = False,
    keep_replicates: bool = False,
    provenance: dict | None = None,
) -> ExperimentReport:
    """Time spent at zero and first hit/leave times of zero.

    The driver of every replicate is also restricted to the meshes
    ``mesh_n / c`` for ``c`` in ``coarsening``.  Passes iff every replicate
    spends positive time at zero and the mean first-hit time does not grow,
    and the mean first-leave time strictly shrinks, as the mesh refines.
    Inapplicable when no replicate ever reaches zero.
    """
    factors = tuple(int(c) for c in coarsening)
    if factors[0] != 1 or any(cfg.mesh_n % c for c in factors):
        raise ConfigurationError("coarsening factors must start at 1 and divide mesh_n")
    tasks = [(model, cfg, factors, allow_invalid, lo, hi)
             for lo, hi in _batches(cfg.ensemble_size, batches)]
    rows = np.concatenate(_run(_occupation_batch, tasks, jobs))
    occ = rows[:, 0]
    count = occ.size
    mean, se = _mean_se(np.array(occ.sum()), np.array((occ * occ).sum()), count)
    stats = {"ensemble_size": count, "zero_occupation": float(mean),
             "zero_occupation_se": float(se), "zero_occupation_min": float(occ.min()),
             "fraction_positive": float(np.mean(occ > 0))}
    hit_means, leave_means = [], []
    for j, fac in enumerate(factors):
        n = cfg.mesh_n // fac
        for name, col, acc in (("first_hit", 1 + 2 * j, hit_means),
                               ("first_leave", 2 + 2 * j, leave_means)):
            v = rows[:, col]
            mu, s = _mean_se(np.array(v.sum()), np.array((v * v).sum()), count)
            stats[f"{name}(n={n})"] = float(mu)
            stats[f"{name}(n={n})_se"] = float(s)
            acc.append(float(mu))
    # factors go from fine to coarse, so refinement means reading backwards
    hit_ok = all(a <= b for a, b in zip(hit_means, hit_means[1:]))
    leave_ok = all(a < b for a, b in zip(leave_means, leave_means[1:]))
    if np.all(occ == 0):
        verdict = INAPPLICABLE
    elif np.all(occ > 0) and hit_ok and leave_ok:
        verdict = PASS
    else:
        verdict = FAIL
    prov = {"seed": cfg.seed, "mesh_n": cfg.mesh_n, "horizon": cfg.horizon,
            "z": model.z, "gamma": model.gamma, **(provenance or {})}
    reps = {"zero_occupation": occ} if keep_replicates else None
    return ExperimentReport("occupation", stats, verdict, prov, reps)


def _sweep_batch(task):
    model, cfg, gammas, lo, hi = task
    out = np.zeros((hi - lo, len(gammas)))
    for r, i in enumerate(range(lo, hi)):
        x = sample_path(model.triplet, cfg, i)
        for j, gam in enumerate(gammas):
            out[r, j] = solve_exact(TceProblem(x, model.z, gam)).zero_occupation
    return out


def gamma_sweep(
    model: StickyModel, cfg: SimConfig, gammas=(0.5, 1.0, 2.0, 4.0),
    batches: int = DEFAULT_BATCHES, jobs: int = 1, provenance: dict | None = None,
) -> ExperimentReport:
    """Mean time at zero for several stickiness values on shared drivers.

    Exploratory: the monotone trend is reported, never judged.
    """
    gammas = [float(x) for x in gammas]
    tasks = [(model, cfg, gammas, lo, hi) for lo, hi in _batches(cfg.ensemble_size, batches)]
    rows = np.concatenate(_run(_sweep_batch, tasks, jobs))
    mean, se = _mean_se(rows.sum(0), (rows * rows).sum(0), rows.shape[0])
    stats = {"ensemble_size": rows.shape[0]}
    for gam, mu, s in zip(gammas, mean, se):
        stats[f"zero_occupation(gamma={gam})"] = float(mu)
        stats[f"zero_occupation(gamma={gam})_se"] = float(s)
    stats["strictly_decreasing"] = bool(np.all(np.diff(mean) < 0))
    prov = {"seed": cfg.seed, "mesh_n": cfg.mesh_n, "horizon": cfg.horizon, "z": model.z,
            "gammas": gammas, **(provenance or {})}
    return ExperimentReport("gamma-sweep", stats, EXPLORATORY, prov)


# -- counterexample ------------------------------------------------------------
def no_solution_demo(meshes=(4, 16, 64, 256), horizon: float = 1.0,
                     provenance: dict | None = None) -> ExperimentReport:
    """Scheme on the driver ``X = -Id`` with ``z = 0`` and ``gamma = 1``.

    The scheme converges to ``C*(t) = t/2`` and ``Z* = 0``, but that pair
    does not solve the equation.  Passes iff, at the finest mesh ``n``, the
    clock is within ``2/n`` of ``t/2``, ``|Z^n| <= 1/n`` and the limit pair
    leaves an equation residual of at least ``0.2``.
    """
    stats = {}
    limit_C = TimeChange.linear(0.5, horizon)
    ok = True
    for n in meshes:
        cells = int(round(horizon * n))
        driver = GridPath(1.0 / n, -np.arange(cells) / n)
        Zn, Cn = reconstruct_processes(euler_solve(driver, 0.0, 1.0, cells))
        dc = timechange_sup_distance(Cn, limit_C, horizon)
        dz = float(np.abs(Zn.values).max())
        stats[f"sup_dist_C(n={n})"] = dc
        stats[f"sup_abs_Z(n={n})"] = dz
        if n == max(meshes):
            ok = dc <= 2.0 / n and dz <= 1.0 / n
            limit = CandidatePair(GridPath(1.0 / n, np.zeros(cells)), limit_C)
            res = check_residual(TceProblem(driver, 0.0, 1.0), limit, horizon)
            stats["limit_equation_residual"] = res.max_equation_residual
            stats["limit_clock_residual"] = res.max_clock_residual
            ok = ok and res.max_equation_residual >= 0.2
    prov = {"driver": "-Id", "z": 0.0, "gamma": 1.0, "meshes": list(meshes),
            "horizon": horizon, **(provenance or {})}
    return ExperimentReport("no-solution", stats, PASS if ok else FAIL, prov)


# -- deterministic property suites over random drivers ------------------------
def _aux_rng(seed: int, i: int, stream: int) -> np.random.Generator:
    # independent of the driver stream (seed, i)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(i), stream)))


def _axioms_batch(task):
    from ..reflection import check_reflection_axioms, reflect

    model, cfg, lo, hi = task
    bad = []
    for i in range(lo, hi):
        x = sample_path(model.triplet, cfg, i, allow_invalid=True)
        f = x.with_values(model.z + x.values)
        v = check_reflection_axioms(f, reflect(f), 0.0)
        if not v.passed:
            bad.append((i, v.check))
    return bad


def reflection_axioms_study(
    model: StickyModel, cfg: SimConfig, batches: int = DEFAULT_BATCHES, jobs: int = 1,
    provenance: dict | None = None,
) -> ExperimentReport:
    """Reflect ``z + X`` for every replicate and check the axioms exactly."""
    tasks = [(model, cfg, lo, hi) for lo, hi in _batches(cfg.ensemble_size, batches)]
    bad = [b for part in _run(_axioms_batch, tasks, jobs) for b in part]
    stats = {"ensemble_size": cfg.ensemble_size, "violations": len(bad)}
    if bad:
        stats["first_violation"] = {"replicate": bad[0][0], "axiom": bad[0][1]}
    prov = {"seed": cfg.seed, "mesh_n": cfg.mesh_n, "z": model.z, **(provenance or {})}
    return ExperimentReport("reflection-axioms", stats, FAIL if bad else PASS, prov)


def random_lift(seed: int, i: int, cells: int) -> np.ndarray:
    """Nonnegative lift: a constant in ``[0, 0.5)`` plus rough cellwise noise."""
    rng = _aux_rng(seed, i, 1)
    return rng.uniform(0.0, 0.5) + 0.05 * np.abs(rng.standard_normal(cells))


def _order_batch(task):
    from ..tce import compare_clocks

    model, cfg, lo, hi = task
    worst, bad = -np.inf, []
    for i in range(lo, hi):
        x1 = sample_path(model.triplet, cfg, i)
        x2 = x1.with_values(x1.values + random_lift(cfg.seed, i, x1.n_cells))
        p1 = TceProblem(x1, model.z, model.gamma)
        p2 = TceProblem(x2, model.z, model.gamma)
        v = compare_clocks(p1, p2, (solve_exact(p1), solve_exact(p2)))
        worst = max(worst, v.worst if v.worst is not None else -np.inf)
        if not v.passed:
            bad.append((i, v.status))
    return worst, bad


def clock_order_study(
    model: StickyModel, cfg: SimConfig, batches: int = DEFAULT_BATCHES, jobs: int = 1,
    provenance: dict | None = None,
) -> ExperimentReport:
    """Clock comparison on pairs ``(X, X + lift)`` with a random nonnegative lift."""
    tasks = [(model, cfg, lo, hi) for lo, hi in _batches(cfg.ensemble_size, batches)]
    parts = _run(_order_batch, tasks, jobs)
    bad = [b for _, part in parts for b in part]
    stats = {"pairs": cfg.ensemble_size, "failures": len(bad),
             "worst_excess": float(max(w for w, _ in parts)),
             "tolerance": 2.0 / cfg.mesh_n}
    prov = {"seed": cfg.seed, "mesh_n": cfg.mesh_n, "z": model.z, "gamma": model.gamma,
            **(provenance or {})}
    return ExperimentReport("monotonicity", stats, FAIL if bad else PASS, prov)
