"""Statistical harness tying the simulators to their limit laws.

The checks are Kolmogorov-Smirnov distances between scaled simulation
output and either a closed-form distribution or a sample from the limit
process itself. Reports carry the raw distance next to the threshold so
a caller can re-judge with a different tolerance without rerunning.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math

import numpy as np
from scipy.special import kolmogi

from .errors import ConfigurationError, ParameterError, StatisticalError
from .laws import CoefficientLaw, compute_bn
from .limits import (
    LimitKind,
    PrmSpec,
    drift_marginal_cdf,
    limit_marginal_values,
    peak_marginal_cdf,
    sample_prm,
)
from .simulate import (
    backward_marginal_values,
    backward_sup_values,
    forward_marginal_values,
    forward_sup_values,
    pakes_values,
)

MARGINAL_TAGS = (
    "Thm11-backward",
    "Thm11-forward",
    "Thm15-backward",
    "Thm15-forward",
    "Pakes114",
    "Pakes119",
)
REPORT_TAGS = MARGINAL_TAGS + ("ForwardBackwardEquality", "FunctionalSup")

# families whose scaled marginals the tag's limit law describes
_TAG_FAMILIES = {
    "Thm11-backward": ("CauchyTail",),
    "Thm11-forward": ("CauchyTail",),
    "Pakes114": ("CauchyTail",),
    "Thm15-backward": ("RegVarTail", "HeavyNegM"),
    "Thm15-forward": ("RegVarTail", "HeavyNegM"),
    "Pakes119": ("RegVarTail",),
}

_SUM_TAGS = ("Pakes114", "Pakes119")

# mark level below which the sampled limit measure is truncated; the
# induced CDF error is about (gamma/u)^(c/a), far below KS noise here
DEFAULT_LIMIT_GAMMA = 0.005

DEFAULT_MARGINAL_THRESHOLD = 0.05
DEFAULT_TWO_SAMPLE_LEVEL = 0.01


def canonical_tag(text) -> str:
    """Map loosely cased or underscored tag spellings to the fixed form."""
    key = str(text).strip().lower().replace("_", "").replace("-", "")
    table = {t.lower().replace("-", ""): t for t in REPORT_TAGS}
    if key not in table:
        known = ", ".join(REPORT_TAGS)
        raise ConfigurationError(f"unknown verification tag {text!r}; known: {known}")
    return table[key]


def _as_sample_array(samples, name):
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size == 0:
        raise ParameterError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} must be finite")
    return arr


def ks_statistic(samples, cdf) -> float:
    """sup-distance between the sample ECDF and ``cdf``.

    Both one-sided gaps are evaluated at every sample point, so the
    supremum is exact for a nondecreasing ``cdf``.
    """
    arr = np.sort(_as_sample_array(samples, "samples"))
    probs = np.asarray(cdf(arr), dtype=float).ravel()
    if probs.shape != arr.shape:
        raise ParameterError("cdf must return one probability per sample")
    if np.any(probs < -1e-12) or np.any(probs > 1.0 + 1e-12):
        raise ParameterError("cdf must map into [0, 1]")
    if np.any(np.diff(probs) < -1e-12):
        raise ParameterError("cdf must be nondecreasing")
    r = arr.size
    upper = np.max(np.arange(1, r + 1) / r - probs)
    lower = np.max(probs - np.arange(0, r) / r)
    return float(min(max(upper, lower, 0.0), 1.0))


def two_sample_ks(first, second) -> float:
    """sup-distance between two sample ECDFs, exact at pooled points."""
    a = np.sort(_as_sample_array(first, "first sample"))
    b = np.sort(_as_sample_array(second, "second sample"))
    grid = np.union1d(a, b)
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_threshold(reps: int, level: float = DEFAULT_MARGINAL_THRESHOLD) -> float:
    """Asymptotic one-sample critical value at the given level."""
    reps = int(reps)
    if reps <= 0:
        raise ParameterError(f"replication count must be positive, got {reps}")
    if not 0.0 < level < 1.0:
        raise ParameterError(f"level must lie in (0, 1), got {level}")
    return float(kolmogi(level)) / math.sqrt(reps)


def two_sample_threshold(
    n_first: int, n_second: int, level: float = DEFAULT_TWO_SAMPLE_LEVEL
) -> float:
    """Two-sample critical value: c(level) * sqrt((n + m) / (n m))."""
    n_first, n_second = int(n_first), int(n_second)
    if n_first <= 0 or n_second <= 0:
        raise ParameterError("both sample sizes must be positive")
    if not 0.0 < level < 1.0:
        raise ParameterError(f"level must lie in (0, 1), got {level}")
    ratio = (n_first + n_second) / (n_first * n_second)
    return float(kolmogi(level)) * math.sqrt(ratio)


@dataclasses.dataclass(frozen=True)
class VerificationReport:
    """One completed distribution check, threshold included."""

    tag: str
    n: int
    R: int
    u: float
    D: float
    threshold: float
    passed: bool
    degenerate: int
    seed: int
    detail: str = ""

    def __post_init__(self):
        if self.tag not in REPORT_TAGS:
            raise ParameterError(f"unknown report tag {self.tag!r}")
        if not (0.0 <= self.D <= 1.0):
            raise ParameterError(f"KS statistic must lie in [0, 1], got {self.D}")
        if not (np.isfinite(self.threshold) and self.threshold > 0):
            raise ParameterError(f"threshold must be positive, got {self.threshold}")
        if self.passed != (self.D <= self.threshold):
            raise ParameterError("pass flag must equal (D <= threshold)")
        if self.degenerate < 0 or self.R <= 0:
            raise ParameterError("counts must be nonnegative with R positive")

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "n": int(self.n),
            "R": int(self.R),
            "u": float(self.u),
            "D": float(self.D),
            "threshold": float(self.threshold),
            "pass": bool(self.passed),
            "degenerate": int(self.degenerate),
            "seed": int(self.seed),
            "detail": self.detail,
        }


def report_from_dict(d: dict) -> VerificationReport:
    return VerificationReport(
        tag=str(d["tag"]),
        n=int(d["n"]),
        R=int(d["R"]),
        u=float(d["u"]),
        D=float(d["D"]),
        threshold=float(d["threshold"]),
        passed=bool(d["pass"]),
        degenerate=int(d["degenerate"]),
        seed=int(d["seed"]),
        detail=str(d.get("detail", "")),
    )


def write_reports_json(reports, fp, config: dict | None = None) -> None:
    payload = {"reports": [r.to_dict() for r in reports]}
    if config is not None:
        payload["config"] = config
    json.dump(payload, fp, indent=2, sort_keys=True)
    fp.write("\n")


def write_reports_csv(reports, fp, config: dict | None = None) -> None:
    if config is not None:
        fp.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    writer = csv.writer(fp, lineterminator="\n")
    cols = ["tag", "n", "R", "u", "D", "threshold", "pass", "degenerate", "seed", "detail"]
    writer.writerow(cols)
    for r in reports:
        d = r.to_dict()
        writer.writerow([d[c] for c in cols])


def _check_tag_family(tag: str, law: CoefficientLaw) -> None:
    allowed = _TAG_FAMILIES[tag]
    if law.family not in allowed:
        raise ConfigurationError(
            f"{tag} applies to families {allowed}, got {law.family}"
        )


def _marginal_scale(tag: str, law: CoefficientLaw, n: int) -> float:
    if tag in ("Thm11-backward", "Thm11-forward", "Pakes114"):
        return law.a * n
    return compute_bn(law, n)


def _limit_kind(tag: str) -> LimitKind:
    if tag in ("Thm11-backward", "Pakes114"):
        return LimitKind.BACKWARD
    if tag == "Thm11-forward":
        return LimitKind.FORWARD
    return LimitKind.PEAK


def _limit_spec(tag: str, law: CoefficientLaw, T: float, gamma: float, seed) -> PrmSpec:
    if tag in ("Thm11-backward", "Thm11-forward", "Pakes114"):
        return PrmSpec(c=law.c / law.a, alpha=1.0, T=T, gamma=gamma, seed=seed)
    return PrmSpec(c=1.0, alpha=law.alpha, T=T, gamma=gamma, seed=seed)


def _limit_cdf(tag: str, law: CoefficientLaw, u: float):
    # finite-n samples can land below the limit support, where the
    # distribution function is zero; the core evaluators stay strict
    if tag in ("Thm11-backward", "Thm11-forward", "Pakes114"):
        core, inside = (lambda x: drift_marginal_cdf(x, u, law.c, law.a)), (
            lambda x: x >= 0.0
        )
    else:
        core, inside = (lambda x: peak_marginal_cdf(x, u, law.alpha)), (
            lambda x: x > 0.0
        )

    def extended(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        mask = inside(x)
        if np.any(mask):
            out[mask] = core(x[mask])
        return out

    return extended


def _checked_counts(n: int, u: float, R: int):
    n, R = int(n), int(R)
    if n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    if R < 100:
        raise ParameterError(f"need at least 100 replications, got {R}")
    u = float(u)
    if not (np.isfinite(u) and u > 0):
        raise ParameterError(f"evaluation time must be positive, got {u}")
    return n, u, R


def _screen_degenerate(tag, values, flags, R):
    good = flags == 0
    degenerate = int(R - int(np.sum(good)))
    if degenerate == R:
        raise StatisticalError(
            f"all {R} replications degenerate for {tag}; nothing to test"
        )
    return values[good], degenerate


def verify_marginal(
    tag,
    law: CoefficientLaw,
    n: int,
    u: float,
    R: int,
    seed: int,
    threshold: float = DEFAULT_MARGINAL_THRESHOLD,
    source: str = "simulation",
    gamma: float = DEFAULT_LIMIT_GAMMA,
    jobs: int = 1,
) -> VerificationReport:
    """One-sample KS check of a scaled time-u marginal against its limit law.

    ``source='simulation'`` scales the corresponding chain (or decayed
    sum) at index [nu]+1; ``source='limit'`` draws the same marginal from
    the truncated limit construction instead, which turns the check into
    a self-consistency test of the closed form.
    """
    tag = canonical_tag(tag)
    if tag not in MARGINAL_TAGS:
        raise ConfigurationError(f"{tag} is not a marginal verification tag")
    _check_tag_family(tag, law)
    n, u, R = _checked_counts(n, u, R)
    if tag in _SUM_TAGS and u != 1.0:
        raise ConfigurationError(
            f"{tag} checks the n-th indexed sum; its limit has no time "
            f"parameter, so u must be 1, got {u}"
        )
    if source == "simulation":
        if tag == "Thm11-backward" or tag == "Thm15-backward":
            values, flags = backward_marginal_values(law, n, u, R, seed, jobs=jobs)
        elif tag == "Thm11-forward" or tag == "Thm15-forward":
            values, flags = forward_marginal_values(
                law, n, u, R, seed, x0=0.0, jobs=jobs
            )
        else:
            values, flags = pakes_values(law.a, law, n, R, seed, jobs=jobs)
        values = values / _marginal_scale(tag, law, n)
    elif source == "limit":
        spec = _limit_spec(tag, law, u, gamma, seed)
        values = limit_marginal_values(_limit_kind(tag), spec, R, u=u, jobs=jobs)
        flags = np.zeros(R, dtype=np.int64)
    else:
        raise ConfigurationError(
            f"source must be 'simulation' or 'limit', got {source!r}"
        )
    samples, degenerate = _screen_degenerate(tag, values, flags, R)
    D = ks_statistic(samples, _limit_cdf(tag, law, u))
    return VerificationReport(
        tag=tag,
        n=n,
        R=R,
        u=u,
        D=D,
        threshold=float(threshold),
        passed=D <= threshold,
        degenerate=degenerate,
        seed=int(seed),
        detail=f"source={source} family={law.family}",
    )


def verify_forward_backward_equality(
    law: CoefficientLaw,
    n: int,
    u: float,
    R: int,
    seed: int,
    x0: float = 0.0,
    level: float = DEFAULT_TWO_SAMPLE_LEVEL,
    threshold: float | None = None,
    jobs: int = 1,
) -> VerificationReport:
    """Two-sample KS check that both chains share one fixed-n marginal.

    The agreement in law needs the forward chain started at zero, so any
    other x0 is refused. The two sides use disjoint replication streams;
    equal streams would make the check vacuously tight.
    """
    if x0 != 0.0:
        raise ConfigurationError(
            f"the fixed-n equality in law requires x0 = 0, got {x0}"
        )
    n, u, R = _checked_counts(n, u, R)
    fwd, fwd_flags = forward_marginal_values(law, n, u, R, seed, x0=0.0, jobs=jobs)
    bwd, bwd_flags = backward_marginal_values(
        law, n, u, R, seed, rep_start=R, jobs=jobs
    )
    fwd_good, fwd_bad = _screen_degenerate("forward side", fwd, fwd_flags, R)
    bwd_good, bwd_bad = _screen_degenerate("backward side", bwd, bwd_flags, R)
    if threshold is None:
        threshold = two_sample_threshold(fwd_good.size, bwd_good.size, level)
    D = two_sample_ks(fwd_good, bwd_good)
    return VerificationReport(
        tag="ForwardBackwardEquality",
        n=n,
        R=R,
        u=u,
        D=D,
        threshold=float(threshold),
        passed=D <= threshold,
        degenerate=fwd_bad + bwd_bad,
        seed=int(seed),
        detail=f"family={law.family}",
    )


def _forward_limit_sup(pm) -> float:
    # the forward limit declines at unit rate between atoms, so its
    # supremum is attained at time zero or right at an atom time
    if pm.count == 0:
        return 0.0
    record = np.maximum.accumulate(pm.times + pm.marks)
    return float(max(0.0, np.max(record - pm.times)))


def verify_functional_sup(
    tag,
    law: CoefficientLaw,
    n: int,
    T: float,
    R: int,
    seed: int,
    level: float = DEFAULT_TWO_SAMPLE_LEVEL,
    threshold: float | None = None,
    gamma: float = DEFAULT_LIMIT_GAMMA,
    limit_law: CoefficientLaw | None = None,
    jobs: int = 1,
) -> VerificationReport:
    """Two-sample KS check of path suprema over [0, T].

    One sample is the sup of the scaled simulated path per replication;
    the other is the sup of an independently sampled limit path.
    ``limit_law`` substitutes a different law on the limit side only,
    which is useful for demonstrating sensitivity; by default both sides
    use ``law``.
    """
    tag = canonical_tag(tag)
    if tag in _SUM_TAGS or tag not in MARGINAL_TAGS:
        raise ConfigurationError(f"{tag} has no path-functional form")
    _check_tag_family(tag, law)
    n, T, R = _checked_counts(n, T, R)
    if tag in ("Thm11-backward", "Thm15-backward"):
        values, flags = backward_sup_values(law, n, T, R, seed, jobs=jobs)
    else:
        values, flags = forward_sup_values(law, n, T, R, seed, x0=0.0, jobs=jobs)
    sim = values / _marginal_scale(tag, law, n)
    sim_good, degenerate = _screen_degenerate(tag, sim, flags, R)

    reference = law if limit_law is None else limit_law
    _check_tag_family(tag, reference)
    spec = _limit_spec(tag, reference, T, gamma, seed)
    kind = _limit_kind(tag)
    if kind is LimitKind.FORWARD:
        lim = np.empty(R)
        for r in range(R):
            lim[r] = _forward_limit_sup(sample_prm(spec, rep=R + r))
    else:
        # the backward and peak limit paths are nondecreasing, so the
        # supremum over [0, T] is just the endpoint marginal
        lim = limit_marginal_values(kind, spec, R, u=T, rep_start=R, jobs=jobs)
    if threshold is None:
        threshold = two_sample_threshold(sim_good.size, lim.size, level)
    D = two_sample_ks(sim_good, lim)
    return VerificationReport(
        tag="FunctionalSup",
        n=n,
        R=R,
        u=T,
        D=D,
        threshold=float(threshold),
        passed=D <= threshold,
        degenerate=degenerate,
        seed=int(seed),
        detail=f"variant={tag} family={law.family}",
    )


def compatible_tags(law: CoefficientLaw):
    """Marginal tags whose limit law covers this family."""
    return tuple(t for t in MARGINAL_TAGS if law.family in _TAG_FAMILIES[t])
