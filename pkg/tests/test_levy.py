import numpy as np
import pytest
from scipy import stats

from sticky_tce.errors import ConfigurationError, ModelHypothesisError
from sticky_tce.levy import (
    CompoundPoisson,
    Exponential,
    FixedSizes,
    LevyTriplet,
    Pareto,
    SimConfig,
    restrict_to_coarser_grid,
    sample_components,
    sample_path,
    validate_triplet,
)
from sticky_tce.paths import GridPath, sup_distance


def test_validate_brownian():
    assert validate_triplet(LevyTriplet(0.0, 1.0)).valid


def test_validate_compound_poisson_only_is_bounded_variation():
    v = validate_triplet(LevyTriplet(-1.0, 0.0, CompoundPoisson(2.0, Exponential(1.0))))
    assert not v.valid
    assert v.hypothesis == "unbounded variation"
    assert "bounded variation" in v.message


def test_validate_gaussian_plus_pareto():
    assert validate_triplet(LevyTriplet(3.0, 0.5, CompoundPoisson(1.0, Pareto(1.5, 1.0)))).valid


def test_small_jump_flag_is_named_but_rejected_for_sampling():
    tr = LevyTriplet(0.0, 0.0, None, small_jump_intensity_flag=True)
    assert not validate_triplet(tr).valid
    with pytest.raises(ConfigurationError):
        sample_path(tr, SimConfig(0, 4, 1.0), allow_invalid=True)


def test_jump_law_validation():
    with pytest.raises(ConfigurationError):
        Exponential(0.0)
    with pytest.raises(ConfigurationError):
        Pareto(1.0, 1.0)
    with pytest.raises(ConfigurationError):
        FixedSizes((1.0, 2.0), (0.5, 0.4))
    with pytest.raises(ConfigurationError):
        CompoundPoisson(1.0, FixedSizes((-1.0,), (1.0,)))


def test_simconfig_horizon_multiple_of_mesh():
    SimConfig(0, 4, 1.25)
    with pytest.raises(ConfigurationError):
        SimConfig(0, 4, 1.1)
    with pytest.raises(ConfigurationError):
        SimConfig(0, 0, 1.0)


def test_invalid_triplet_needs_opt_in():
    tr = LevyTriplet(-1.0, 0.0)
    with pytest.raises(ModelHypothesisError):
        sample_path(tr, SimConfig(0, 4, 1.0))


def test_degenerate_triplet_gives_zero_path():
    x = sample_path(LevyTriplet(0.0, 0.0), SimConfig(5, 8, 1.0), allow_invalid=True)
    assert np.all(x.values == 0)


def test_pure_drift_path():
    x = sample_path(LevyTriplet(-1.0, 0.0), SimConfig(0, 4, 1.0), allow_invalid=True)
    assert x.values.tolist() == [0, -0.25, -0.5, -0.75]
    assert x.step == 0.25


def test_reproducible_and_replicates_differ():
    tr = LevyTriplet(0.1, 1.0, CompoundPoisson(3.0, Exponential(0.5)))
    cfg = SimConfig(42, 64, 1.0)
    a, b = sample_path(tr, cfg, 7), sample_path(tr, cfg, 7)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, sample_path(tr, cfg, 8).values)
    assert not np.array_equal(a.values, sample_path(tr, SimConfig(43, 64, 1.0), 7).values)


@pytest.mark.parametrize("law", [Exponential(0.5), Pareto(1.5, 0.2), FixedSizes((0.5, 2.0), (0.3, 0.7))])
def test_jump_components_nonnegative(law):
    comp = sample_components(LevyTriplet(0.0, 1.0, CompoundPoisson(20.0, law)), SimConfig(1, 32, 4.0))
    assert comp.jumps.min() >= 0
    assert np.all((comp.jumps > 0) == (comp.jump_counts > 0))


def test_brownian_variance_at_time_one():
    # Var X_1 = sigma^2 = 1; X_1 sits at cell n of a horizon-2 path
    n = 16
    tr, cfg = LevyTriplet(0.0, 1.0), SimConfig(2024, n, 2.0)
    x1 = np.array([sample_path(tr, cfg, i).values[n] for i in range(10_000)])
    assert 0.95 <= x1.var(ddof=1) <= 1.05


def test_jump_counts_are_poisson():
    rate, t, n = 3.0, 1.0, 8
    tr = LevyTriplet(0.0, 1.0, CompoundPoisson(rate, Exponential(1.0)))
    cfg = SimConfig(7, n, t + 1.0 / n)  # n*t increments cover [0, t]
    counts = np.array([sample_components(tr, cfg, i).jump_counts.sum() for i in range(10_000)])
    kmax = 9
    observed = np.array([np.sum(counts == k) for k in range(kmax)] + [np.sum(counts >= kmax)])
    probs = np.append(stats.poisson.pmf(np.arange(kmax), rate * t), stats.poisson.sf(kmax - 1, rate * t))
    p = stats.chisquare(observed, probs * counts.size).pvalue
    assert p > 0.001


def test_mean_of_x1_matches_drift_plus_jumps():
    n = 8
    tr = LevyTriplet(0.3, 1.0, CompoundPoisson(2.0, FixedSizes((0.5, 1.5), (0.5, 0.5))))
    cfg = SimConfig(11, n, 2.0)
    x1 = np.array([sample_path(tr, cfg, i).values[n] for i in range(10_000)])
    expected = 0.3 + 2.0 * 1.0
    se = x1.std(ddof=1) / np.sqrt(x1.size)
    assert abs(x1.mean() - expected) < 4 * se


def test_compensated_drift_closed_forms():
    # numerical integrals of y * density on (0, 1) as oracle
    from scipy.integrate import quad
    for law in (Exponential(0.7), Pareto(2.5, 0.4)):
        tr = LevyTriplet(0.2, 1.0, CompoundPoisson(1.5, law))
        small, _ = quad(lambda y: y * law.density(y), 0, 1, points=[law.lower])
        assert tr.compensated_drift() == pytest.approx(0.2 + 1.5 * small, rel=1e-10)
    tr = LevyTriplet(0.2, 1.0, CompoundPoisson(1.5, FixedSizes((0.5, 2.0), (0.4, 0.6))))
    assert tr.compensated_drift() == pytest.approx(0.2 + 1.5 * 0.4 * 0.5)
    assert LevyTriplet(0.2, 1.0, CompoundPoisson(1.0, Pareto(2.0, 1.5))).compensated_drift() == 0.2


def test_restrict_examples():
    p = GridPath(0.25, [0, 1, 2, 3])
    assert restrict_to_coarser_grid(p, 4).values.tolist() == [0, 1, 2, 3]
    q = restrict_to_coarser_grid(p, 2)
    assert q.values.tolist() == [0, 2] and q.step == 0.5
    with pytest.raises(ConfigurationError):
        restrict_to_coarser_grid(p, 3)


def test_restriction_distance_follows_levy_modulus():
    fine = 2**11
    tr = LevyTriplet(0.0, 1.0)
    ns = [2**k for k in range(6, 11)]
    med = []
    for n in ns:
        d = [sup_distance(restrict_to_coarser_grid(x, n), restrict_to_coarser_grid(x, 2 * n), 1.0)
             for x in (sample_path(tr, SimConfig(99, fine, 1.0), i) for i in range(200))]
        med.append(np.median(d))
    assert all(a > b for a, b in zip(med, med[1:]))
    ratio = np.array(med) / np.sqrt(np.log(ns) / np.array(ns))
    assert np.all((ratio > 1 / 3) & (ratio < 3))
