"""Limit processes of the scaled log-magnitude paths.

The rescaled paths converge to extremal functionals of a Poisson random
measure on ``[0, T] x (0, inf]`` whose mean measure is Lebesgue in time
with mark tail ``c x^{-alpha}``.  Truncating marks at a level ``gamma``
keeps finitely many atoms while leaving every sup-type statistic above
``gamma`` untouched, so the truncated measure is what gets sampled.

This module draws the truncated measure, builds the limit paths, samples
their one-point marginals in batch, and evaluates the closed-form
marginal distributions.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .paths import PointMeasure, StepPath
from .simulate import _run_jobs, replication_rng

DEFAULT_GRID_CELLS = 10_000


class LimitKind(enum.Enum):
    """Extremal functional applied to the limiting point measure.

    BACKWARD: running sup of ``-t_k + j_k``; 0 before the first atom.
      Limit of the scaled perpetuity path under contractive drift.
    FORWARD: ``-t`` plus the running sup of ``t_k + j_k``; equals ``-t``
      before the first atom.  Limit of the scaled forward chain.
    PEAK: running sup of the marks ``j_k`` alone; 0 before the first
      atom.  Limit of either chain when the additive tail dominates.
    """

    BACKWARD = "backward"
    FORWARD = "forward"
    PEAK = "peak"


@dataclass(frozen=True)
class PrmSpec:
    """Truncated Poisson random measure on ``[0, T] x (gamma, inf)``.

    The atom count is Poisson with mean ``T * c * gamma**-alpha``, atom
    times are i.i.d. uniform on ``[0, T]``, and marks are i.i.d. Pareto:
    ``P{V <= x} = 1 - (gamma / x)**alpha`` for ``x >= gamma``.
    """

    c: float
    alpha: float
    T: float
    gamma: float
    seed: int = 0

    def __post_init__(self):
        for name in ("c", "alpha", "T", "gamma"):
            v = float(getattr(self, name))
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def mean_count(self) -> float:
        """Expected atom count of one draw."""
        return self.T * self.c * self.gamma ** -self.alpha


def sample_prm(spec: PrmSpec, rep: int = 0) -> PointMeasure:
    """One draw of the truncated measure, deterministic in (seed, rep).

    Draw order is fixed: atom count, then times, then marks.
    """
    rng = replication_rng(spec.seed, rep)
    count = int(rng.poisson(spec.mean_count))
    times = spec.T * rng.random(count)
    # 1 - U lies in (0, 1], keeping marks finite and >= gamma
    marks = spec.gamma * (1.0 - rng.random(count)) ** (-1.0 / spec.alpha)
    return PointMeasure(spec.T, times, marks)


def _atom_scores(kind: LimitKind, times, marks):
    if kind is LimitKind.BACKWARD:
        return marks - times
    if kind is LimitKind.FORWARD:
        return times + marks
    return marks


def extremal_path(
    pm: PointMeasure,
    kind: LimitKind,
    horizon: float | None = None,
    grid_step: float | None = None,
) -> StepPath:
    """Limit path of the given kind built from one atom configuration.

    BACKWARD and PEAK paths are genuinely piecewise constant with jumps
    at the atom times.  The FORWARD path has slope -1 between atoms, so
    it is emitted as its samples on the merged grid of atom times and a
    regular grid of step ``grid_step`` (default ``horizon / 10**4``);
    the step used is recorded in the path metadata.
    """
    T = pm.horizon if horizon is None else float(horizon)
    if not (np.isfinite(T) and T > 0):
        raise ParameterError(f"horizon must be positive and finite, got {T}")
    if pm.count and pm.times[-1] > T:
        raise ParameterError("atoms must lie inside [0, horizon]")
    if not isinstance(kind, LimitKind):
        raise ParameterError(f"unknown limit kind: {kind!r}")

    meta = {"kind": kind.value, "atoms": pm.count}
    scores = _atom_scores(kind, pm.times, pm.marks)

    if kind is LimitKind.FORWARD:
        step = T / DEFAULT_GRID_CELLS if grid_step is None else float(grid_step)
        if not (np.isfinite(step) and step > 0):
            raise ParameterError(f"grid step must be positive, got {step}")
        grid = np.unique(np.concatenate([np.arange(0.0, T, step), [T], pm.times]))
        if pm.count:
            running = np.maximum.accumulate(scores)
            idx = np.searchsorted(pm.times, grid, side="right")
            sup = np.where(idx > 0, running[np.maximum(idx - 1, 0)], 0.0)
        else:
            sup = np.zeros(grid.shape)
        vals = sup - grid
        meta["grid_step"] = step
        return StepPath(T, grid[1:], vals, meta=meta)

    if grid_step is not None:
        raise ParameterError("grid step applies to the FORWARD kind only")
    if pm.count == 0:
        return StepPath(T, np.empty(0), np.zeros(1), meta=meta)
    running = np.maximum.accumulate(scores)
    # collapse duplicated atom times; the last entry carries the sup
    keep = np.ones(pm.count, dtype=bool)
    keep[:-1] = pm.times[1:] != pm.times[:-1]
    jump_t = pm.times[keep]
    jump_v = running[keep]
    if jump_t[0] == 0.0:
        # an atom sitting at time zero is visible from the start
        init = jump_v[0]
        jump_t, jump_v = jump_t[1:], jump_v[1:]
    else:
        init = 0.0
    return StepPath(T, jump_t, np.concatenate([[init], jump_v]), meta=meta)


def _marginal_value(kind: LimitKind, times, marks, u: float) -> float:
    sel = times <= u
    scores = _atom_scores(kind, times[sel], marks[sel])
    sup = float(np.max(scores)) if scores.size else 0.0
    return sup - u if kind is LimitKind.FORWARD else sup


def limit_marginal_values(
    kind: LimitKind,
    spec: PrmSpec,
    reps: int,
    u: float | None = None,
    rep_start: int = 0,
    jobs: int = 1,
) -> np.ndarray:
    """Value of the ``kind`` limit path at time ``u`` across replications.

    Replication ``r`` draws from the stream (spec.seed, rep_start + r),
    so results are byte-identical for any ``jobs``.
    """
    u = spec.T if u is None else float(u)
    if not (0.0 < u <= spec.T):
        raise ParameterError(f"evaluation time must lie in (0, T], got {u}")
    reps = int(reps)
    if reps <= 0:
        raise ParameterError(f"replication count must be positive, got {reps}")
    out = np.empty(reps)

    def worker(lo, hi):
        for r in range(lo, hi):
            pm = sample_prm(spec, rep_start + r)
            out[r] = _marginal_value(kind, pm.times, pm.marks, u)

    _run_jobs(worker, reps, jobs)
    return out


def drift_marginal_cdf(x, u: float, c: float, a: float):
    """Distribution of the BACKWARD (equally FORWARD) value at time u.

    Returns ``(x / (x + u))**(c/a)`` for ``x >= 0``; the FORWARD path has
    the same one-point law even though the two paths differ.
    """
    _check_cdf_params(u=u, c=c, a=a)
    xv = np.asarray(x, dtype=float)
    if np.any(xv < 0):
        raise ParameterError("x must be nonnegative")
    out = (xv / (xv + u)) ** (c / a)
    return out if out.ndim else float(out)


def peak_marginal_cdf(x, u: float, alpha: float):
    """Distribution of the PEAK value at time u: ``exp(-u * x**-alpha)``.

    Defined for ``x > 0``; the value tends to 0 as x decreases to 0.
    The tail exponent must lie in (0, 1].
    """
    _check_cdf_params(u=u)
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"tail exponent must lie in (0, 1], got {alpha}")
    xv = np.asarray(x, dtype=float)
    if np.any(xv <= 0):
        raise ParameterError("x must be positive")
    out = np.exp(-u * xv ** -alpha)
    return out if out.ndim else float(out)


def drift_exceedance_intensity(x, u: float, c: float, a: float):
    """Mean number of atoms with ``t <= u`` and ``-t + j > x``.

    Equals ``(c/a) * log((x + u) / x)``; the no-exceedance probability
    ``exp(-intensity)`` recovers ``drift_marginal_cdf`` exactly.
    """
    _check_cdf_params(u=u, c=c, a=a)
    xv = np.asarray(x, dtype=float)
    if np.any(xv <= 0):
        raise ParameterError("x must be positive")
    out = (c / a) * np.log((xv + u) / xv)
    return out if out.ndim else float(out)


def _check_cdf_params(u=None, c=None, a=None):
    if u is not None and not (np.isfinite(u) and u > 0):
        raise ParameterError(f"u must be positive and finite, got {u}")
    if c is not None and not (np.isfinite(c) and c > 0):
        raise ParameterError(f"c must be positive and finite, got {c}")
    if a is not None and not (np.isfinite(a) and a > 0):
        raise ParameterError(f"a must be positive and finite, got {a}")
