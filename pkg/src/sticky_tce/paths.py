"""
Grid paths and time changes
===========================

Two representations cover every object the package manipulates:

* :class:`GridPath` -- a cadlag path that is constant on the cells
  ``[k*step, (k+1)*step)`` of a uniform grid (drivers, reflected paths,
  solutions, local times sampled on the grid).
* :class:`TimeChange` -- a continuous, nondecreasing, piecewise-linear map
  given by its breakpoints (clocks and their inverses).

The module also provides composition, exact inversion and the two path
metrics used by the convergence studies: the uniform distance and a windowed
upper bound for the Skorohod J1 distance.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import banded_frechet
from .errors import ConfigurationError, HorizonError, NonInvertibleError

# relative slack for float rounding in horizon-coverage and Lipschitz checks
_REL_EPS = 1e-12


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GridPath:
    """Piecewise-constant path on a uniform grid.

    Parameters
    ----------
    step : float
        Grid mesh (time units).
    values : array_like
        ``values[k]`` is the value on ``[k*step, (k+1)*step)``.
    origin_value_left_limit : float
        Value at ``0-``; only used to seed recursions.
    """

    step: float
    values: np.ndarray
    origin_value_left_limit: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "values", _frozen(self.values))
        if not self.step > 0 or not np.isfinite(self.step):
            raise ConfigurationError(f"grid step must be positive, got {self.step}")
        if self.values.ndim != 1 or self.values.size == 0:
            raise ConfigurationError("a grid path needs a non-empty 1-d value array")

    @property
    def n_cells(self) -> int:
        return self.values.size

    @property
    def horizon(self) -> float:
        return self.n_cells * self.step

    @property
    def times(self) -> np.ndarray:
        """Left endpoints ``k*step`` of all cells."""
        return np.arange(self.n_cells) * self.step

    def _raw_index(self, t: np.ndarray) -> np.ndarray:
        k = np.floor(t / self.step).astype(np.int64)
        k = k + ((k + 1) * self.step <= t)
        return k - (k * self.step > t)

    def cell_index(self, t):
        """Index of the cell containing ``t`` (vectorised).

        Grid times ``k*step`` always map to cell ``k``, also when ``t/step``
        rounds to just below ``k``.
        """
        t = np.asarray(t, dtype=np.float64)
        k = self._raw_index(t)
        if np.any(t < 0) or np.any(k >= self.n_cells):
            raise HorizonError(f"time outside [0, {self.horizon!r}) requested")
        return k

    def __call__(self, t):
        k = self.cell_index(t)
        out = self.values[k]
        return float(out) if out.ndim == 0 else out

    def with_values(self, values) -> "GridPath":
        return GridPath(self.step, values, self.origin_value_left_limit)

    # -- serialisation -----------------------------------------------------
    def to_json(self) -> str:
        return json.dumps({"step": self.step, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "GridPath":
        doc = json.loads(text)
        return cls(doc["step"], doc["values"])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "value"])
            for t, v in zip(self.times.tolist(), self.values.tolist()):
                writer.writerow([repr(t), repr(v)])

    @classmethod
    def from_csv(cls, path, step: float | None = None) -> "GridPath":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["t", "value"]:
            raise ConfigurationError(f"{path}: expected header 't,value'")
        body = rows[1:]
        if step is None:
            if len(body) < 2:
                raise ConfigurationError(f"{path}: cannot infer the step from a single row")
            step = float(body[1][0])
        return cls(step, [float(v) for _, v in body])


@dataclass(frozen=True, eq=False)
class TimeChange:
    """Continuous nondecreasing piecewise-linear function.

    Stored by its graph: ``values[i]`` is the function at
    ``breakpoints[i]``; in between it is linear.  Evaluation at a breakpoint
    returns the stored value exactly.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = _frozen(self.breakpoints)
        vals = _frozen(self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if bp.ndim != 1 or bp.shape != vals.shape or bp.size < 2:
            raise ConfigurationError("a time change needs >= 2 matching breakpoints and values")
        if bp[0] != 0.0:
            raise ConfigurationError("time-change breakpoints must start at 0")
        if np.any(np.diff(bp) <= 0):
            raise ConfigurationError("time-change breakpoints must be strictly increasing")
        if vals[0] < 0 or np.any(np.diff(vals) < 0):
            raise ConfigurationError("a time change must be nonnegative and nondecreasing")

    @classmethod
    def linear(cls, slope: float, end: float) -> "TimeChange":
        """``t -> slope * t`` on ``[0, end]``."""
        return cls([0.0, end], [0.0, slope * end])

    @property
    def end(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def value_at_zero(self) -> float:
        return float(self.values[0])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0) or np.any(t > self.end):
            raise HorizonError(f"time change defined on [0, {self.end!r}] only")
        out = np.interp(t, self.breakpoints, self.values)
        return float(out) if out.ndim == 0 else out

    def is_one_lipschitz(self) -> bool:
        """``0 <= c(t) - c(s) <= t - s`` on consecutive breakpoints (float slack)."""
        dv = np.diff(self.values)
        dt = np.diff(self.breakpoints)
        return bool(np.all(dv >= 0) and np.all(dv <= dt * (1 + _REL_EPS) + _REL_EPS * self.end))

    def to_json(self) -> str:
        return json.dumps(
            {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "TimeChange":
        doc = json.loads(text)
        return cls(doc["breakpoints"], doc["values"])


@dataclass(frozen=True)
class PathMetricReport:
    sup_distance: float
    j1_distance: float
    j1_time_warp_bound: float
    horizon: float


def evaluate(path: GridPath, t: float) -> float:
    """Value of ``path`` at ``t`` (right-continuous at grid times)."""
    return path(t)


def running_infimum(path: GridPath) -> GridPath:
    """``k -> min(0, min_{j<=k} values[j])``."""
    return path.with_values(np.minimum.accumulate(np.minimum(path.values, 0.0)))


def invert_time_change(a: TimeChange) -> TimeChange:
    """Exact inverse of a strictly increasing time change with ``a(0) = 0``.

    The graph is simply reflected through the diagonal.
    """
    if a.value_at_zero != 0.0:
        raise NonInvertibleError("the inverse must start at time 0, but a(0) != 0")
    if np.any(np.diff(a.values) <= 0):
        raise NonInvertibleError("time change has a flat segment")
    return TimeChange(a.values, a.breakpoints)


def _grid_count(end: float, step: float) -> int:
    # number of grid points k*step (k >= 0) with k*step < end, robust to rounding
    n = int(np.floor(end / step))
    while n * step < end and not np.isclose(n * step, end, rtol=_REL_EPS, atol=0):
        n += 1
    while n > 0 and (n - 1) * step >= end:
        n -= 1
    return max(n, 0)


def compose_path_timechange(
    path: GridPath, c: TimeChange, sample_step: float, n_samples: int | None = None
) -> GridPath:
    """Sample ``t -> path(c(t))`` on the grid of mesh ``sample_step``.

    By default as many cells as fit in the domain of ``c``.  Path values are
    looked up, never interpolated.
    """
    if n_samples is None:
        n_samples = _grid_count(c.end, sample_step)
    if n_samples < 1:
        raise ConfigurationError("time change domain shorter than one output cell")
    t = np.arange(n_samples) * sample_step
    return GridPath(sample_step, path.values[path.cell_index(c(t))])


def _check_cover(path: GridPath, horizon: float, name: str) -> None:
    if path.horizon < horizon * (1 - _REL_EPS):
        raise HorizonError(f"{name} covers [0, {path.horizon!r}) but horizon is {horizon!r}")


def _grid_times(path: GridPath, horizon: float) -> np.ndarray:
    return np.arange(_grid_count(horizon, path.step)) * path.step


def _lookup(path: GridPath, t: np.ndarray) -> np.ndarray:
    # coverage was checked up to float slack; clamp the last cell
    return path.values[np.clip(path._raw_index(t), 0, path.n_cells - 1)]


def sup_distance(p: GridPath, q: GridPath, horizon: float) -> float:
    """``max |p(t) - q(t)|`` over the union of both grids inside ``[0, horizon)``."""
    _check_cover(p, horizon, "p")
    _check_cover(q, horizon, "q")
    t = np.union1d(_grid_times(p, horizon), _grid_times(q, horizon))
    return float(np.max(np.abs(_lookup(p, t) - _lookup(q, t))))


def timechange_sup_distance(c1: TimeChange, c2: TimeChange, horizon: float) -> float:
    """Exact uniform distance of two time changes on ``[0, horizon]``.

    The difference is piecewise linear, so its maximum sits on a breakpoint
    of either function or at the horizon.
    """
    for name, c in (("c1", c1), ("c2", c2)):
        if c.end < horizon * (1 - _REL_EPS):
            raise HorizonError(f"{name} covers [0, {c.end!r}] but horizon is {horizon!r}")
    t = np.union1d(c1.breakpoints, c2.breakpoints)
    t = np.append(t[t < horizon], horizon)
    return float(np.max(np.abs(c1(np.minimum(t, c1.end)) - c2(np.minimum(t, c2.end)))))


def j1_distance(
    p: GridPath, q: GridPath, horizon: float, window: float | None = None
) -> PathMetricReport:
    """Windowed upper bound for the Skorohod J1 distance of two grid paths.

    Minimises ``max(|lam(t) - t|, |p(lam(t)) - q(t)|)`` over monotone
    couplings of the merged cells with ``|lam(t) - t| <= window``, by dynamic
    programming over the band.  The identity coupling is admissible, so the
    result never exceeds the uniform distance.  ``window`` defaults to ten
    times the coarser mesh.
    """
    coarse = max(p.step, q.step)
    if window is None:
        window = 10 * coarse
    if window < coarse:
        raise ConfigurationError(
            f"window {window!r} is smaller than the coarser mesh {coarse!r}"
        )
    sup = sup_distance(p, q, horizon)
    t = np.union1d(_grid_times(p, horizon), _grid_times(q, horizon))
    u = _lookup(q, t)
    v = _lookup(p, t)
    lo = np.searchsorted(t, t - window, side="left").astype(np.int64)
    hi = np.searchsorted(t, t + window, side="right").astype(np.int64)
    d, w = banded_frechet(t, u, v, lo, hi)
    return PathMetricReport(
        sup_distance=sup, j1_distance=float(d), j1_time_warp_bound=float(w),
        horizon=float(horizon),
    )


def write_json(obj, path) -> None:
    Path(path).write_text(obj.to_json())
