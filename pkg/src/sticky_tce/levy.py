"""
Spectrally positive Levy drivers on uniform grids
=================================================

A driver is ``X_t = b t + sigma B_t + (compound Poisson sum of positive
jumps)``, sampled on the grid ``N/n``.  Each replicate draws from its own
random stream derived from ``(seed, replicate_index)``, so ensembles are
reproducible regardless of how they are split across workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigurationError, ModelHypothesisError
from .paths import GridPath


# -- jump laws ---------------------------------------------------------------
@dataclass(frozen=True)
class Exponential:
    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise ConfigurationError("exponential jump mean must be positive")

    def sample(self, rng, size):
        return rng.exponential(self.mean, size)

    def expectation(self) -> float:
        return self.mean

    def density(self, y):
        y = np.asarray(y, dtype=np.float64)
        return np.where(y >= 0, np.exp(-y / self.mean) / self.mean, 0.0)

    @property
    def lower(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Pareto:
    """Classical Pareto law on ``[scale, inf)`` with tail index ``alpha > 1``."""

    alpha: float
    scale: float

    def __post_init__(self):
        if not self.alpha > 1:
            raise ConfigurationError("Pareto jumps need alpha > 1 (finite mean)")
        if not self.scale > 0:
            raise ConfigurationError("Pareto scale must be positive")

    def sample(self, rng, size):
        # numpy's pareto is the Lomax law; shift and scale to the classical one
        return self.scale * (1.0 + rng.pareto(self.alpha, size))

    def expectation(self) -> float:
        return self.alpha * self.scale / (self.alpha - 1)

    def density(self, y):
        y = np.asarray(y, dtype=np.float64)
        safe = np.maximum(y, self.scale)
        return np.where(
            y >= self.scale, self.alpha * self.scale**self.alpha / safe ** (self.alpha + 1), 0.0
        )

    @property
    def lower(self) -> float:
        return self.scale


@dataclass(frozen=True)
class FixedSizes:
    """Finitely many jump sizes with given probabilities."""

    sizes: tuple
    probabilities: tuple

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(float(s) for s in self.sizes))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if len(self.sizes) == 0 or len(self.sizes) != len(self.probabilities):
            raise ConfigurationError("sizes and probabilities must be non-empty and aligned")
        if min(self.probabilities) < 0 or not np.isclose(sum(self.probabilities), 1.0):
            raise ConfigurationError("jump probabilities must be nonnegative and sum to 1")

    def sample(self, rng, size):
        return rng.choice(np.array(self.sizes), size=size, p=np.array(self.probabilities))

    def expectation(self) -> float:
        return float(np.dot(self.sizes, self.probabilities))


JumpLaw = Union[Exponential, Pareto, FixedSizes]


@dataclass(frozen=True)
class CompoundPoisson:
    rate: float
    jump_law: JumpLaw

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigurationError("compound Poisson rate must be positive")
        sizes = getattr(self.jump_law, "sizes", None)
        if sizes is not None and min(sizes) <= 0:
            raise ConfigurationError("jump sizes must be strictly positive (no negative jumps)")


@dataclass(frozen=True)
class LevyTriplet:
    """Drift, Gaussian coefficient and positive-jump specification.

    ``drift_b`` is the drift of the sampled path, i.e. increments are
    ``drift_b*dt + sigma*dB + (jumps)`` with jumps left uncompensated.
    """

    drift_b: float = 0.0
    sigma: float = 0.0
    jumps: CompoundPoisson | None = None
    small_jump_intensity_flag: bool = False

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigurationError("sigma must be nonnegative")

    def compensated_drift(self) -> float:
        """Drift in the compensated Levy-Ito form ``b + int_(0,1) x nu(dx)``."""
        if self.jumps is None:
            return self.drift_b
        law = self.jumps.jump_law
        if isinstance(law, Exponential):
            m = law.mean
            small = m * (1 - np.exp(-1 / m)) - np.exp(-1 / m)
        elif isinstance(law, Pareto):
            a, s = law.alpha, law.scale
            small = 0.0 if s >= 1 else a * s**a * (1 - s ** (1 - a)) / (1 - a)
        elif isinstance(law, FixedSizes):
            small = sum(p * x for x, p in zip(law.sizes, law.probabilities) if x < 1)
        else:
            raise ConfigurationError(f"no small-jump mean for jump law {type(law).__name__}")
        return self.drift_b + self.jumps.rate * small

    def mean_rate(self) -> float:
        """``E[X_1]``: drift plus mean jump contribution."""
        jump = 0.0 if self.jumps is None else self.jumps.rate * self.jumps.jump_law.expectation()
        return self.drift_b + jump


@dataclass(frozen=True)
class ValidationVerdict:
    valid: bool
    hypothesis: str | None
    message: str


def validate_triplet(tr: LevyTriplet) -> ValidationVerdict:
    """Check the unbounded-variation hypothesis at model level.

    On a grid the only unbounded-variation component we can sample is the
    Gaussian one, so the triplet is accepted iff ``sigma > 0``.
    """
    if tr.sigma > 0:
        return ValidationVerdict(True, None, "unbounded variation: Gaussian component present")
    if tr.small_jump_intensity_flag:
        return ValidationVerdict(
            False,
            "unbounded variation",
            "absolutely divergent small-jump sums are declared, but infinite-activity "
            "jumps cannot be sampled; add a Gaussian component (sigma > 0)",
        )
    return ValidationVerdict(
        False,
        "unbounded variation",
        "bounded variation: sigma = 0 and compound Poisson jumps have finitely many "
        "jumps per unit time, so the paths of X have bounded variation",
    )


@dataclass(frozen=True)
class SimConfig:
    seed: int
    mesh_n: int
    horizon: float
    ensemble_size: int = 1

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.mesh_n < 1:
            raise ConfigurationError("mesh_n must be >= 1")
        if self.ensemble_size < 1:
            raise ConfigurationError("ensemble_size must be >= 1")
        if not self.horizon > 0:
            raise ConfigurationError("horizon must be positive")
        cells = self.horizon * self.mesh_n
        if abs(cells - round(cells)) > 1e-9 * max(1.0, cells):
            raise ConfigurationError("horizon must be an integer multiple of 1/mesh_n")

    @property
    def n_cells(self) -> int:
        return int(round(self.horizon * self.mesh_n))

    @property
    def step(self) -> float:
        return 1.0 / self.mesh_n


def replicate_rng(seed: int, replicate_index: int) -> np.random.Generator:
    """Independent stream for one replicate, keyed by ``(seed, replicate_index)``."""
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=(int(replicate_index),))
    )


@dataclass(frozen=True)
class PathComponents:
    """Per-cell increments of a sampled driver, split by source."""

    drift: np.ndarray
    diffusion: np.ndarray
    jumps: np.ndarray
    jump_counts: np.ndarray = field(repr=False)

    @property
    def increments(self) -> np.ndarray:
        return self.drift + self.diffusion + self.jumps


def sample_components(
    tr: LevyTriplet, cfg: SimConfig, replicate_index: int = 0
) -> PathComponents:
    """Increments over the ``n_cells - 1`` cells whose right end lies in the path."""
    if tr.small_jump_intensity_flag:
        raise ConfigurationError("infinite-activity small jumps are not supported for sampling")
    cells = cfg.n_cells - 1
    n = cfg.mesh_n
    rng = replicate_rng(cfg.seed, replicate_index)
    drift = np.full(cells, tr.drift_b / n)
    if tr.sigma > 0:
        diffusion = tr.sigma / np.sqrt(n) * rng.standard_normal(cells)
    else:
        diffusion = np.zeros(cells)
    jumps = np.zeros(cells)
    counts = np.zeros(cells, dtype=np.int64)
    if tr.jumps is not None and cells > 0:
        total = rng.poisson(tr.jumps.rate * cells / n)
        # arrival times are uniform on (0, cells/n]; only the cell matters
        where = np.minimum((rng.random(total) * cells).astype(np.int64), cells - 1)
        sizes = tr.jumps.jump_law.sample(rng, total)
        jumps = np.bincount(where, weights=sizes, minlength=cells)
        counts = np.bincount(where, minlength=cells)
    return PathComponents(drift, diffusion, jumps, counts)


def sample_path(
    tr: LevyTriplet, cfg: SimConfig, replicate_index: int = 0, allow_invalid: bool = False
) -> GridPath:
    """Grid path of ``X`` on ``[0, cfg.horizon)`` with ``X(0) = 0``.

    Invalid triplets (bounded variation) raise :class:`ModelHypothesisError`
    unless ``allow_invalid`` is set, which the counterexample studies use.
    """
    verdict = validate_triplet(tr)
    if not verdict.valid and not allow_invalid:
        raise ModelHypothesisError(verdict)
    comp = sample_components(tr, cfg, replicate_index)
    values = np.empty(cfg.n_cells)
    values[0] = 0.0
    np.cumsum(comp.increments, out=values[1:])
    return GridPath(cfg.step, values)


def restrict_to_coarser_grid(path: GridPath, coarse_n: int) -> GridPath:
    """Piecewise-constant extension of the values at times ``N/coarse_n``."""
    if coarse_n < 1:
        raise ConfigurationError("coarse_n must be >= 1")
    ratio = (1.0 / coarse_n) / path.step
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9 * ratio:
        raise ConfigurationError(
            f"mesh 1/{coarse_n} is not an integer multiple of the path step {path.step!r}"
        )
    return GridPath(1.0 / coarse_n, path.values[::factor])
