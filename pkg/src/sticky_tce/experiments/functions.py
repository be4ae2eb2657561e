"""Test functions and the generator of the driver."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from ..errors import ConfigurationError
from ..levy import Exponential, FixedSizes, LevyTriplet, Pareto


@dataclass(frozen=True)
class TestFunction:
    """Bounded ``C^2`` function on ``[0, inf)`` with coded derivatives.

    All three callables are vectorised.  Beyond ``support_bound`` the
    function and its derivatives are below ``1e-12`` in magnitude.
    """

    __test__ = False  # not a pytest class

    evaluation: Callable
    first_derivative: Callable
    second_derivative: Callable
    support_bound: float
    boundary_defect: float | None = None
    label: str = ""

    def __call__(self, x):
        return self.evaluation(x)


@dataclass(frozen=True)
class _Constant:
    value: float

    def f(self, x):
        return np.full(np.shape(x), self.value)

    def zero(self, x):
        return np.zeros(np.shape(x))


def constant_function(value: float = 1.0) -> TestFunction:
    c = _Constant(float(value))
    return TestFunction(c.f, c.zero, c.zero, support_bound=np.inf, label=f"constant {value}")


@dataclass(frozen=True)
class _Bump:
    # module-level so that test functions pickle to worker processes
    c0: float
    c1: float
    c2: float
    width: float

    def _parts(self, x):
        x = np.asarray(x, dtype=np.float64)
        s2 = self.width * self.width
        return x, s2, self.c0 + self.c1 * x + self.c2 * x * x, np.exp(-x * x / (2 * s2))

    def f(self, x):
        _, _, p, e = self._parts(x)
        return p * e

    def df(self, x):
        x, s2, p, e = self._parts(x)
        return (self.c1 + 2 * self.c2 * x - x * p / s2) * e

    def d2f(self, x):
        x, s2, p, e = self._parts(x)
        dp = self.c1 + 2 * self.c2 * x
        return (2 * self.c2 - 2 * x * dp / s2 - p / s2 + x * x * p / (s2 * s2)) * e


def gaussian_bump(c0: float, c1: float, c2: float, width: float = 1.0) -> TestFunction:
    """``(c0 + c1 x + c2 x^2) * exp(-x^2 / (2 width^2))``.

    At the origin ``f = c0``, ``f' = c1`` and ``f'' = 2 c2 - c0 / width^2``.
    """
    if not width > 0:
        raise ConfigurationError("bump width must be positive")
    b = _Bump(float(c0), float(c1), float(c2), float(width))
    s2 = b.width**2
    # crude envelope of |f|, |f'|, |f''|; grow the bound until it is negligible
    scale = max(abs(c0) + abs(c1) + abs(c2), 1e-300)
    bound = b.width
    while True:
        x = bound
        poly = scale * (1 + x) ** 2 * (1 + (x / s2) * (1 + x) + (1 + x) ** 2 / s2**2)
        if poly * np.exp(-x * x / (2 * s2)) < 1e-12:
            break
        bound *= 1.25
    return TestFunction(b.f, b.df, b.d2f, support_bound=bound,
                        label=f"bump({c0!r}, {c1!r}, {c2!r}; width {width!r})")


def check_derivatives(f: TestFunction, probes: int = 100, h: float = 1e-5,
                      tol: float = 1e-6, upper: float | None = None) -> float:
    """Largest centred-difference mismatch of both derivatives on ``probes`` points.

    Returns the mismatch; compare against ``tol`` (kept for the caller's
    convenience in the message of failures).
    """
    upper = min(f.support_bound, 10.0) if upper is None else upper
    x = np.linspace(h, upper, probes)
    d1 = (f.evaluation(x + h) - f.evaluation(x - h)) / (2 * h)
    d2 = (f.first_derivative(x + h) - f.first_derivative(x - h)) / (2 * h)
    return float(max(np.abs(d1 - f.first_derivative(x)).max(),
                     np.abs(d2 - f.second_derivative(x)).max()))


@dataclass(frozen=True)
class GeneratorEval:
    """Quadrature settings for applying the generator of ``triplet``."""

    triplet: LevyTriplet
    quadrature_mesh: float = 1e-3
    jump_truncation: float = 50.0

    def __post_init__(self):
        if not self.quadrature_mesh > 0 or not self.jump_truncation > 0:
            raise ConfigurationError("quadrature mesh and truncation must be positive")


def _nodes(lo: float, hi: float, mesh: float) -> np.ndarray:
    # odd number of nodes so Simpson's rule is exact for cubics on each pair
    m = max(2, int(np.ceil((hi - lo) / mesh)))
    m += m % 2
    return np.linspace(lo, hi, m + 1)


def _jump_part(g: GeneratorEval, f: TestFunction, x: np.ndarray) -> np.ndarray:
    cp = g.triplet.jumps
    law = cp.jump_law
    fx = f.evaluation(x)[:, None]
    dfx = f.first_derivative(x)[:, None]

    def integrand(y, compensate):
        y = y[None, :]
        return f.evaluation(x[:, None] + y) - fx - dfx * y * compensate

    if isinstance(law, FixedSizes):
        y = np.array(law.sizes)
        return cp.rate * integrand(y, y < 1) @ np.array(law.probabilities)
    if isinstance(law, (Exponential, Pareto)):
        lo, T = law.lower, g.jump_truncation
        if T <= lo:
            raise ConfigurationError("jump truncation must exceed the smallest jump")
        total = np.zeros(x.size)
        # split at y = 1 where the compensator switches off, so that each
        # piece is smooth up to its endpoints
        for a, b, comp in ((lo, min(1.0, T), 1.0), (max(lo, 1.0), T, 0.0)):
            if b > a:
                y = _nodes(a, b, g.quadrature_mesh)
                total += simpson(integrand(y, comp) * law.density(y)[None, :], x=y, axis=1)
        # beyond T the test function has vanished at x + y, leaving -f(x)
        if isinstance(law, Exponential):
            tail = np.exp(-T / law.mean)
        else:
            tail = (law.scale / T) ** law.alpha
        return cp.rate * (total - f.evaluation(x) * tail)
    raise ConfigurationError(f"no quadrature for jump law {type(law).__name__}")


def generator_apply(g: GeneratorEval, f: TestFunction, x):
    """Generator of the driver applied to ``f`` at ``x`` (vectorised).

    Uses the compensated form ``b f' + sigma^2/2 f'' + int (f(x+y) - f(x)
    - f'(x) y I(y<1)) nu(dy)``, with ``b`` the drift of that form.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    tr = g.triplet
    out = tr.compensated_drift() * f.first_derivative(xa)
    out = out + 0.5 * tr.sigma**2 * f.second_derivative(xa)
    if tr.jumps is not None:
        out = out + _jump_part(g, f, xa)
    return float(out[0]) if np.ndim(x) == 0 else out


def boundary_defect(g: GeneratorEval, f: TestFunction, gamma: float) -> float:
    """``gamma f'(0+) - Lf(0+)``; zero exactly on the sticky boundary condition."""
    return float(gamma * f.first_derivative(np.array([0.0]))[0] - generator_apply(g, f, 0.0))


def tuned_bump(
    g: GeneratorEval, gamma: float, defect: float = 0.0, c0: float = 0.0,
    c1: float = 0.3, width: float = 1.0,
) -> TestFunction:
    """Gaussian bump whose quadratic coefficient is tuned to a boundary defect.

    The defect is affine in ``c2``, so two evaluations determine it.
    """
    d0 = boundary_defect(g, gaussian_bump(c0, c1, 0.0, width), gamma)
    d1 = boundary_defect(g, gaussian_bump(c0, c1, 1.0, width), gamma)
    if d1 == d0:
        raise ConfigurationError("boundary defect does not depend on the quadratic term")
    c2 = (defect - d0) / (d1 - d0)
    f = gaussian_bump(c0, c1, c2, width)
    return replace(f, boundary_defect=boundary_defect(g, f, gamma))
