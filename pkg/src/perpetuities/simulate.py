"""Path simulation for the backward (perpetuity) and forward (chain) processes.

The backward process is Y_k = sum_{i<=k} M_1...M_{i-1} Q_i, the forward one
is X_k = M_k X_{k-1} + Q_k.  Both are emitted as step paths t -> log|.| at
index [nt]+1 on [0, T]: the value on [k/n, (k+1)/n) is the (k+1)-th iterate,
so every path jumps only at multiples of 1/n.

All accumulation runs in signed log space: a term's magnitude is
S_{i-1} + log|Q_i| with S the running sum of log|M|, never exponentiated.
Near-cancellations are flagged and surface as per-replication counts so the
statistical layer can exclude them; an exact zero iterate (excluded by the
model assumptions, possible only for contrived point-mass laws) raises.

Replication r of a run with master seed s draws from the dedicated stream
``default_rng([s, r])``, which makes every batch independent of chunking
and worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, StatisticalError
from .laws import CoefficientLaw, draw_log_mq
from .paths import StepPath
from .slog import signed_log_add_arrays, signed_log_diff

__all__ = [
    "SimScenario",
    "replication_rng",
    "simulate_perpetuity_path",
    "simulate_forward_chain_path",
    "simulate_pakes_sum",
    "scale_path",
    "backward_marginal_values",
    "backward_sup_values",
    "forward_marginal_values",
    "forward_sup_values",
    "pakes_values",
    "write_paths_csv",
]

_CHUNK = 128


@dataclass(frozen=True)
class SimScenario:
    """One simulation setting: law, scaling index, horizon, start, seed."""

    law: CoefficientLaw
    n: int
    T: float = 1.0
    x0: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ParameterError(f"T must be positive and finite, got {self.T}")
        if not np.isfinite(self.x0):
            raise ParameterError(f"x0 must be finite, got {self.x0}")

    @property
    def steps(self) -> int:
        """Number of iterates emitted on [0, T]: [nT] + 1."""
        return int(math.floor(self.n * self.T)) + 1


def replication_rng(seed: int, rep: int):
    """The dedicated generator stream of one replication."""
    return np.random.default_rng([int(seed), int(rep)])


def _backward_mags(law: CoefficientLaw, rng, count: int):
    """(sign, logmag, cancelled) of Y_1..Y_count via prefix two-pool sums."""
    sign_m, log_m, sign_q, log_q = draw_log_mq(law, rng, count)
    S = np.concatenate(([0.0], np.cumsum(log_m[:-1])))
    sign_pi = np.concatenate(([1], np.cumprod(sign_m[:-1])))
    term_sign = sign_pi * sign_q
    term_mag = S + log_q
    pos = np.logaddexp.accumulate(np.where(term_sign > 0, term_mag, -np.inf))
    neg = np.logaddexp.accumulate(np.where(term_sign < 0, term_mag, -np.inf))
    return signed_log_diff(pos, neg)


def _emit_path(s: SimScenario, mags, cancel_count: int, kind: str, rep: int) -> StepPath:
    if not np.all(np.isfinite(mags)):
        raise StatisticalError(
            "an iterate is exactly zero, so its log-magnitude is not a real "
            "number; the model assumes zero iterates have probability zero"
        )
    K = s.steps
    times = np.arange(1, K) / s.n
    meta = {
        "kind": kind,
        "n": s.n,
        "T": s.T,
        "seed": s.seed,
        "rep": rep,
        "cancel_count": int(cancel_count),
        "degenerate": bool(cancel_count),
    }
    return StepPath(s.T, times, mags, meta=meta)


def simulate_perpetuity_path(s: SimScenario, rep: int = 0) -> StepPath:
    """Step path t -> log|Y_{[nt]+1}| on [0, T], unscaled."""
    sign, mag, cancelled = _backward_mags(s.law, replication_rng(s.seed, rep), s.steps)
    return _emit_path(s, mag, np.sum(cancelled), "backward", rep)


def _forward_scan(law, x0, seed, reps, count, track, rep_start=0):
    """Evolve X_k = M_k X_{k-1} + Q_k for a block of replications.

    track: 'last' -> final logmag per rep; 'max' -> running max of emitted
    logmags; 'all' -> (reps, count) matrix.  Also returns per-rep flag
    counts and a bool mask of reps whose tracked value is poisoned by an
    exact zero.
    """
    sm = np.empty((reps, count))
    lm = np.empty((reps, count))
    sq = np.empty((reps, count))
    lq = np.empty((reps, count))
    for r in range(reps):
        rng = replication_rng(seed, rep_start + r)
        sm[r], lm[r], sq[r], lq[r] = draw_log_mq(law, rng, count)
    sign = np.zeros(reps) if x0 == 0 else np.full(reps, np.sign(x0))
    mag = np.full(reps, -np.inf) if x0 == 0 else np.full(reps, math.log(abs(x0)))
    cancel = np.zeros(reps, dtype=np.int64)
    best = np.full(reps, -np.inf)
    out = np.empty((reps, count)) if track == "all" else None
    zero_hit = np.zeros(reps, dtype=bool)
    for k in range(count):
        sign, mag, flagged = signed_log_add_arrays(
            sign * sm[:, k], mag + lm[:, k], sq[:, k], lq[:, k]
        )
        cancel += flagged
        zero_hit |= sign == 0
        if track == "max":
            best = np.maximum(best, mag)
        elif track == "all":
            out[:, k] = mag
    if track == "last":
        return mag, cancel, zero_hit
    if track == "max":
        return best, cancel, zero_hit
    return out, cancel, zero_hit


def simulate_forward_chain_path(s: SimScenario, rep: int = 0) -> StepPath:
    """Step path t -> log|X_{[nt]+1}| on [0, T], started from x0, unscaled."""
    mags, cancel, zero_hit = _forward_scan(
        s.law, s.x0, s.seed, 1, s.steps, "all", rep_start=rep
    )
    return _emit_path(s, mags[0], cancel[0], "forward", rep)


def simulate_pakes_sum(a: float, law: CoefficientLaw, n: int, seed: int, rep: int = 0) -> float:
    """log of sum_{k=0}^{n} e^{-ak} |Q_{k+1}|, via one positive log-space pool."""
    if not (a > 0 and np.isfinite(a)):
        raise ParameterError(f"decay rate must be positive, got {a}")
    if n < 0:
        raise ParameterError(f"n must be nonnegative, got {n}")
    _, _, _, log_q = draw_log_mq(law, replication_rng(seed, rep), int(n) + 1)
    terms = -a * np.arange(n + 1) + log_q
    m = float(np.max(terms))
    return m + math.log(float(np.sum(np.exp(terms - m))))


def scale_path(p: StepPath, divisor: float) -> StepPath:
    """Divide all values by a positive constant; times unchanged."""
    if not (divisor > 0 and np.isfinite(divisor)):
        raise ParameterError(f"divisor must be positive and finite, got {divisor}")
    return StepPath(p.horizon, p.times, p.values / divisor, meta=dict(p.meta))


# ---------------------------------------------------------------------------
# batch value samplers: one scalar per replication, r -> stream [seed, r].
# jobs > 1 splits the replication range across threads; the per-replication
# streams make the result identical for every split.

def _index_at(n: int, u: float) -> int:
    if not (u > 0 and np.isfinite(u)):
        raise ParameterError(f"evaluation time must be positive, got {u}")
    return int(math.floor(n * u)) + 1


def _run_jobs(worker, reps, jobs):
    ranges = []
    step = max(1, math.ceil(reps / max(1, jobs)))
    for start in range(0, reps, step):
        ranges.append((start, min(start + step, reps)))
    if len(ranges) <= 1 or jobs <= 1:
        return [worker(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda ab: worker(*ab), ranges))


def _backward_batch(law, n, count, extract, reps, seed, rep_start, jobs):
    values = np.empty(reps)
    flags = np.zeros(reps, dtype=np.int64)

    def worker(lo, hi):
        for r in range(lo, hi):
            sign, mag, cancelled = _backward_mags(
                law, replication_rng(seed, rep_start + r), count
            )
            values[r], flags[r] = extract(sign, mag, cancelled)
        return None

    _run_jobs(worker, reps, jobs)
    return values, flags


def backward_marginal_values(law, n, u, reps, seed, rep_start=0, jobs=1):
    """log|Y_{[nu]+1}| per replication; flags count poisoned samples."""
    idx = _index_at(n, u)

    def extract(sign, mag, cancelled):
        bad = int(cancelled[idx - 1]) + int(sign[idx - 1] == 0)
        return mag[idx - 1], bad

    return _backward_batch(law, n, idx, extract, reps, seed, rep_start, jobs)


def backward_sup_values(law, n, T, reps, seed, rep_start=0, jobs=1):
    """sup over [0, T] of log|Y_{[nt]+1}| per replication."""
    count = int(math.floor(n * T)) + 1

    def extract(sign, mag, cancelled):
        return np.max(mag), int(np.sum(cancelled)) + int(np.any(sign == 0))

    return _backward_batch(law, n, count, extract, reps, seed, rep_start, jobs)


def _forward_batch(law, n, count, track, reps, seed, x0, rep_start, jobs):
    values = np.empty(reps)
    flags = np.zeros(reps, dtype=np.int64)

    def worker(lo, hi):
        for start in range(lo, hi, _CHUNK):
            stop = min(start + _CHUNK, hi)
            vals, cancel, zero_hit = _forward_scan(
                law, x0, seed, stop - start, count, track, rep_start + start
            )
            values[start:stop] = vals
            flags[start:stop] = cancel + zero_hit
        return None

    _run_jobs(worker, reps, jobs)
    return values, flags


def forward_marginal_values(law, n, u, reps, seed, x0=0.0, rep_start=0, jobs=1):
    """log|X_{[nu]+1}| per replication, started from x0."""
    return _forward_batch(law, n, _index_at(n, u), "last", reps, seed, x0, rep_start, jobs)


def forward_sup_values(law, n, T, reps, seed, x0=0.0, rep_start=0, jobs=1):
    """sup over [0, T] of log|X_{[nt]+1}| per replication."""
    count = int(math.floor(n * T)) + 1
    return _forward_batch(law, n, count, "max", reps, seed, x0, rep_start, jobs)


def pakes_values(a, law, n, reps, seed, rep_start=0, jobs=1):
    """One decayed-sum sample per replication (always cancellation-free)."""
    values = np.empty(reps)

    def worker(lo, hi):
        for r in range(lo, hi):
            values[r] = simulate_pakes_sum(a, law, n, seed, rep_start + r)
        return None

    _run_jobs(worker, reps, jobs)
    return values, np.zeros(reps, dtype=np.int64)


def write_paths_csv(paths, fp):
    """Consolidated (rep, t, value) rows for a batch of step paths."""
    fp.write("rep,t,value\n")
    for i, p in enumerate(paths):
        rep = p.meta.get("rep", i)
        fp.write(f"{rep},{0.0!r},{float(p.values[0])!r}\n")
        for t, v in zip(p.times, p.values[1:]):
            fp.write(f"{rep},{float(t)!r},{float(v)!r}\n")
