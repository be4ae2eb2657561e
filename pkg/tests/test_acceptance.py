"""End-to-end acceptance checks at their stated sizes and tolerances.

Each test records one PASS/FAIL line, printed in the pytest terminal summary.
A line is recorded before the assertions run, so a failing criterion still
reports its measured numbers.
"""
import time

import numpy as np
import pytest

from oracles import minimal_envelope_lp
from sticky_tce.euler import convergence_curve, euler_solve, reconstruct_processes
from sticky_tce.experiments import (
    GeneratorEval,
    StickyModel,
    clock_order_study,
    martingale_test,
    no_solution_demo,
    occupation_study,
    tuned_bump,
)
from sticky_tce.levy import (
    CompoundPoisson,
    Exponential,
    LevyTriplet,
    SimConfig,
    restrict_to_coarser_grid,
    sample_path,
)
from sticky_tce.paths import GridPath
from sticky_tce.reflection import check_reflection_axioms, reflect
from sticky_tce.tce import CandidatePair, TceProblem, check_residual, solve_exact, uniqueness_probe

pytestmark = pytest.mark.slow

BROWNIAN = LevyTriplet(0.0, 1.0)


def test_criterion_1_counterexample_limit(acceptance_line):
    t0 = time.perf_counter()
    rep = no_solution_demo(meshes=(256,), horizon=1.0)
    elapsed = time.perf_counter() - t0
    s = rep.statistics
    ok = (s["sup_dist_C(n=256)"] <= 2 / 256 and s["sup_abs_Z(n=256)"] <= 1 / 256
          and s["limit_equation_residual"] >= 0.2 and elapsed < 1.0)
    acceptance_line(1, "counterexample limit", ok,
                    f"sup|C-t/2|={s['sup_dist_C(n=256)']:.5f}, sup|Z|={s['sup_abs_Z(n=256)']:.5f}, "
                    f"limit residual={s['limit_equation_residual']}, {elapsed:.2f}s")
    assert s["sup_dist_C(n=256)"] <= 2 / 256
    assert s["sup_abs_Z(n=256)"] <= 1 / 256
    assert s["limit_equation_residual"] >= 0.2
    assert elapsed < 1.0


def _mixed_path(rng, length):
    start = rng.choice([0.0, rng.uniform(0, 1), -rng.uniform(0, 1)])
    inc = rng.standard_normal(length) / np.sqrt(length)
    if rng.random() < 0.5:
        inc += np.where(rng.random(length) < 5 / length, rng.exponential(0.5, length), 0.0)
    return start + np.concatenate(([0.0], np.cumsum(inc[1:])))


def test_criterion_2_reflection_axioms(acceptance_line):
    rng = np.random.default_rng(20240)
    t0 = time.perf_counter()
    bad_axioms = 0
    for _ in range(1000):
        f = GridPath(1.0, _mixed_path(rng, int(rng.integers(1, 4097))))
        bad_axioms += not check_reflection_axioms(f, reflect(f), 0.0).passed
    bad_oracle = 0
    for _ in range(100):
        # dyadic values keep the oracle comparison exact
        f = np.round(_mixed_path(rng, int(rng.integers(1, 21))) * 64) / 64
        bad_oracle += not np.array_equal(reflect(GridPath(1.0, f)).l.values, minimal_envelope_lp(f))
    elapsed = time.perf_counter() - t0
    ok = bad_axioms == 0 and bad_oracle == 0 and elapsed < 10
    acceptance_line(2, "reflection axioms", ok,
                    f"axiom violations={bad_axioms}/1000, oracle mismatches={bad_oracle}/100, "
                    f"{elapsed:.1f}s")
    assert bad_axioms == 0 and bad_oracle == 0
    assert elapsed < 10


def test_criterion_3_residual_refinement(acceptance_line):
    # seed fixed before any run
    t0 = time.perf_counter()
    fine = sample_path(BROWNIAN, SimConfig(0, 2**12, 1.0))
    eq, clock = [], []
    for n in (2**8, 2**10, 2**12):
        p = TceProblem(restrict_to_coarser_grid(fine, n), 0.0, 1.0)
        r = check_residual(p, solve_exact(p))
        eq.append(r.max_equation_residual)
        clock.append(r.max_clock_residual)
    elapsed = time.perf_counter() - t0
    ok = all(
        min(v) > 0 and v[0] > v[1] > v[2] and v[2] <= 0.05 for v in (eq, clock)
    ) and elapsed < 30
    acceptance_line(3, "exact-solution residual refinement", ok,
                    f"equation={[round(v, 4) for v in eq]}, clock={[round(v, 4) for v in clock]}, "
                    f"{elapsed:.1f}s")
    for v in (eq, clock):
        assert min(v) > 0
        assert v[0] > v[1] > v[2]
        assert v[2] <= 0.05
    assert elapsed < 30


def test_criterion_4_monotonicity(acceptance_line):
    t0 = time.perf_counter()
    rep = clock_order_study(StickyModel(BROWNIAN, 0.0, 1.0), SimConfig(4, 4096, 1.0, 500))
    elapsed = time.perf_counter() - t0
    s = rep.statistics
    ok = rep.verdict == "pass" and elapsed < 60
    acceptance_line(4, "clock monotonicity", ok,
                    f"failures={s['failures']}/500, worst excess={s['worst_excess']:.2e}, "
                    f"tol={s['tolerance']:.2e}, {elapsed:.1f}s")
    assert s["failures"] == 0
    assert elapsed < 60


@pytest.fixture(scope="module")
def euler_runs():
    """Convergence rows and uniqueness probes for 100 Brownian seeds."""
    N, meshes = 2**14, [2**k for k in range(6, 12)]
    rows, probes = [], []
    t0 = time.perf_counter()
    refs = []
    for seed in range(100):
        p = TceProblem(sample_path(BROWNIAN, SimConfig(seed, N, 1.0)), 0.0, 1.0)
        ref = solve_exact(p)
        rows.append(convergence_curve(p, meshes, reference=ref).rows)
        refs.append((p, ref))
    conv_time = time.perf_counter() - t0
    for (p, ref), r in zip(refs, rows):
        tol = max(r[-1].sup_dist_C, r[-1].j1_dist_Z)
        Zn, Cn = reconstruct_processes(euler_solve(restrict_to_coarser_grid(p.driver, 2**11), 0.0, 1.0))
        probes.append(uniqueness_probe(p, CandidatePair(Zn, Cn), tol, reference=ref))
    return rows, probes, conv_time


def test_criterion_5_euler_convergence(acceptance_line, euler_runs):
    rows, _, elapsed = euler_runs
    sup_c = np.array([[r.sup_dist_C for r in rs] for rs in rows])
    j1 = np.array([[r.j1_dist_Z for r in rs] for rs in rows])
    decreasing = int(np.sum(np.all(np.diff(sup_c, axis=1) < 0, axis=1)))
    improved = int(np.sum(j1[:, -1] < j1[:, 0]))
    ok = decreasing >= 90 and improved >= 95 and elapsed < 600
    acceptance_line(5, "Euler convergence", ok,
                    f"sup_dist_C strictly decreasing on {decreasing}/100 (need 90), "
                    f"j1_dist_Z improved on {improved}/100 (need 95), "
                    f"median sup_dist_C by mesh={np.round(np.median(sup_c, axis=0), 4).tolist()}, "
                    f"{elapsed:.0f}s")
    assert decreasing >= 90
    assert improved >= 95
    assert elapsed < 600


def test_criterion_6_sticky_occupation(acceptance_line):
    t0 = time.perf_counter()
    rep = occupation_study(StickyModel(BROWNIAN, 0.0, 1.0), SimConfig(0, 2**12, 1.0, 10**4),
                           coarsening=(1,))
    elapsed = time.perf_counter() - t0
    s = rep.statistics
    ok = s["fraction_positive"] == 1.0 and elapsed < 300
    zeros = round((1 - s["fraction_positive"]) * 10**4)
    acceptance_line(6, "sticky occupation", ok,
                    f"mean={s['zero_occupation']:.5f} +/- {s['zero_occupation_se']:.5f}, "
                    f"replicates with zero occupation={zeros}/10000, {elapsed:.0f}s")
    assert s["fraction_positive"] == 1.0
    assert elapsed < 300


def test_criterion_7_martingale(acceptance_line):
    model = StickyModel(BROWNIAN, 0.0, 1.0)
    g = GeneratorEval(BROWNIAN)
    cfg = SimConfig(0, 2**14, 1.0, 10**5)
    t_grid = [0.25, 0.5, 1.0]
    t0 = time.perf_counter()
    good = martingale_test(model, tuned_bump(g, 1.0, 0.0, c1=0.25), g, t_grid, cfg)
    bad = martingale_test(model, tuned_bump(g, 1.0, 1.0, c1=0.25), g, t_grid, cfg)
    elapsed = time.perf_counter() - t0
    gs, bs = good.statistics, bad.statistics
    within = [abs(gs[f"m({t})"]) <= 3 * gs[f"m({t})_se"] for t in t_grid]
    drift_sign = np.sign(bs["m(1.0)"]) == 1.0
    ok = all(within) and bad.verdict == "fail" and drift_sign and bs["sign_test_p"] < 0.01 \
        and elapsed < 1200
    ratios = [round(gs[f"m({t})"] / gs[f"m({t})_se"], 2) for t in t_grid]
    acceptance_line(7, "martingale boundary condition", ok,
                    f"m/SE={ratios}, defect-1 m(1)={bs['m(1.0)']:.4f}, "
                    f"sign test p={bs['sign_test_p']:.1e}, {elapsed:.0f}s")
    assert all(within)
    assert bad.verdict == "fail" and drift_sign
    assert bs["sign_test_p"] < 0.01
    assert elapsed < 1200


def test_criterion_8_uniqueness_probe(acceptance_line, euler_runs):
    _, probes, _ = euler_runs
    failed = [i for i, v in enumerate(probes) if not v.passed]
    ok = not failed
    detail = f"agreeing seeds={100 - len(failed)}/100"
    if failed:
        detail += f", first disagreement seed {failed[0]}: {probes[failed[0]].message}"
    acceptance_line(8, "uniqueness probe", ok, detail)
    assert not failed
