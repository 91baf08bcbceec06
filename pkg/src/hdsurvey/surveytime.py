"""Maximum-likelihood fits of survey-administration times (minutes) and the
time saved by a shorter questionnaire."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

TIME_UNIT = "minutes"


@dataclass(frozen=True)
class TimeSamples:
    values: np.ndarray
    label: str = "full_survey"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(v)):
            raise InputError("time samples must be finite")
        if np.any(v <= 0):
            raise InputError("time samples must be positive")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class TriangularParams:
    a: float  # lower bound
    c: float  # mode
    b: float  # upper bound

    def __post_init__(self):
        if not (self.a <= self.c <= self.b and self.a < self.b):
            raise InputError(f"triangular parameters need a <= c <= b and a < b, got {self}")

    @property
    def mean(self) -> float:
        return (self.a + self.c + self.b) / 3.0


@dataclass(frozen=True)
class LogisticParams:
    location: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise InputError("logistic scale must be positive")

    @property
    def mean(self) -> float:
        return self.location


@dataclass(frozen=True)
class FittedDistribution:
    family: str
    params: TriangularParams | LogisticParams
    log_likelihood: float
    n_params: int
    n_samples: int
    iterations: int = field(default=0, compare=False)

    @property
    def aic(self) -> float:
        return aic(self.log_likelihood, self.n_params)

    @property
    def mean(self) -> float:
        return self.params.mean

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "params": dict(self.params.__dict__),
            "log_likelihood": self.log_likelihood,
            "n_params": self.n_params,
            "aic": self.aic,
            "mean": self.mean,
            "n_samples": self.n_samples,
        }


def aic(log_likelihood: float, n_params: int) -> float:
    return 2.0 * n_params - 2.0 * log_likelihood


# -- triangular --------------------------------------------------------------

def triangular_logpdf(x, p: TriangularParams):
    x = np.asarray(x, dtype=np.float64)
    a, c, b = p.a, p.c, p.b
    out = np.full(x.shape, -np.inf)
    with np.errstate(divide="ignore"):
        lo = (x >= a) & (x < c)
        out[lo] = np.log(2.0 * (x[lo] - a) / ((b - a) * (c - a)))
        hi = (x >= c) & (x <= b)
        out[hi] = np.log(2.0 * (b - x[hi]) / ((b - a) * (b - c)))
    return out


def triangular_pdf(x, p: TriangularParams):
    return np.exp(triangular_logpdf(x, p))


def triangular_loglik(x, p: TriangularParams) -> float:
    return float(np.sum(triangular_logpdf(x, p)))


def sample_triangular(p: TriangularParams, n: int, rng) -> np.ndarray:
    """Inverse-CDF sampler."""
    u = rng.random(n)
    a, c, b = p.a, p.c, p.b
    fc = (c - a) / (b - a)
    return np.where(
        u < fc,
        a + np.sqrt(u * (b - a) * (c - a)),
        b - np.sqrt((1.0 - u) * (b - a) * (b - c)),
    )


def _mode_profile(xs, a, b):
    """Log-likelihood at every candidate mode: the sample points and both ends.

    Between two consecutive sample points the log-likelihood is convex in the
    mode, so its maximum over [a, b] sits at one of these candidates.
    """
    n = xs.size
    la = np.log(xs - a)
    lb = np.log(b - xs)
    pre_a = np.concatenate([[0.0], np.cumsum(la)])          # sum of log(x - a) over the first j points
    suf_b = np.concatenate([np.cumsum(lb[::-1])[::-1], [0.0]])  # sum of log(b - x) from point j on
    cand = np.concatenate([[a], xs, [b]])
    # points strictly below the candidate fall on the rising side
    j = np.searchsorted(xs, cand, side="left")
    with np.errstate(divide="ignore", invalid="ignore"):
        rise = np.where(j > 0, pre_a[j] - j * np.log(np.maximum(cand - a, 0.0)), 0.0)
        fall = np.where(j < n, suf_b[j] - (n - j) * np.log(np.maximum(b - cand, 0.0)), 0.0)
    ll = n * math.log(2.0) - n * math.log(b - a) + rise + fall
    return cand, np.where(np.isfinite(ll), ll, -np.inf)


def fit_triangular(s: TimeSamples) -> FittedDistribution:
    """Support pinned just outside the sample extremes; the mode maximises the
    likelihood exactly over the candidate set of ``_mode_profile``."""
    x = s.values
    if x.size < 3:
        raise InputError(f"triangular fit needs at least 3 samples, got {x.size}")
    lo, hi = float(x.min()), float(x.max())
    rng_ = hi - lo
    if rng_ <= 0:
        raise InputError("triangular fit needs samples with nonzero range")
    eps = 1e-6 * rng_
    a, b = lo - eps, hi + eps
    xs = np.sort(x)
    cand, ll = _mode_profile(xs, a, b)
    best = int(np.argmax(ll))
    params = TriangularParams(a, float(cand[best]), b)
    return FittedDistribution("triangular", params, triangular_loglik(x, params), 3, x.size)


def triangular_moment_start(s: TimeSamples) -> TriangularParams:
    """Mode from the mean identity c = 3*mean - a - b, clipped into the support."""
    x = s.values
    lo, hi = float(x.min()), float(x.max())
    eps = 1e-6 * (hi - lo)
    a, b = lo - eps, hi + eps
    return TriangularParams(a, float(np.clip(3.0 * x.mean() - a - b, a, b)), b)


# -- logistic ------------------------------------------------------------------

def logistic_logpdf(x, p: LogisticParams):
    z = (np.asarray(x, dtype=np.float64) - p.location) / p.scale
    return -z - math.log(p.scale) - 2.0 * np.logaddexp(0.0, -z)


def logistic_pdf(x, p: LogisticParams):
    return np.exp(logistic_logpdf(x, p))


def logistic_loglik(x, p: LogisticParams) -> float:
    return float(np.sum(logistic_logpdf(x, p)))


def sample_logistic(p: LogisticParams, n: int, rng) -> np.ndarray:
    u = rng.random(n)
    return p.location + p.scale * (np.log(u) - np.log1p(-u))


def logistic_score(x, mu, scale):
    """Gradient and Hessian of the mean log-likelihood in (location, scale)."""
    z = (x - mu) / scale
    t = np.tanh(z / 2.0)
    sech2 = 1.0 - t * t
    g = np.array([np.mean(t) / scale, np.mean(z * t - 1.0) / scale])
    h_mm = -np.mean(sech2) / (2.0 * scale**2)
    h_ms = -np.mean(t + 0.5 * z * sech2) / scale**2
    h_ss = np.mean(1.0 - 2.0 * z * t - 0.5 * z * z * sech2) / scale**2
    return g, np.array([[h_mm, h_ms], [h_ms, h_ss]])


def logistic_moment_start(s: TimeSamples) -> LogisticParams:
    x = s.values
    return LogisticParams(float(x.mean()), math.sqrt(3.0) * float(x.std()) / math.pi)


def fit_logistic(s: TimeSamples, tol: float = 1e-10, max_iter: int = 200) -> FittedDistribution:
    """Damped Newton on (location, scale) from the moment estimates.

    Converged once the gradient norm of the per-sample mean log-likelihood
    drops below ``tol``, or when no step along the Newton (or gradient)
    direction improves either the likelihood or the gradient any further.
    """
    x = s.values
    if x.size < 2:
        raise InputError(f"logistic fit needs at least 2 samples, got {x.size}")
    if float(x.std()) == 0.0:
        raise InputError("logistic fit needs samples with nonzero variance")
    start = logistic_moment_start(s)
    mu, sc = start.location, start.scale
    ll = logistic_loglik(x, start) / x.size
    gnorm = math.inf
    for it in range(1, max_iter + 1):
        g, H = logistic_score(x, mu, sc)
        gnorm = float(np.linalg.norm(g))
        if gnorm < tol:
            break
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g.copy()
        if step @ g <= 0:  # not an ascent direction: fall back to the gradient
            step = g * sc * sc
        moved = False
        t = 1.0
        # near the optimum the likelihood gain drops below rounding; inside
        # that band a step is accepted if it shrinks the gradient instead
        noise = 8.0 * np.finfo(float).eps * max(1.0, abs(ll))
        for _ in range(60):
            m2, s2 = mu + t * step[0], sc + t * step[1]
            if s2 > 0:
                ll2 = logistic_loglik(x, LogisticParams(m2, s2)) / x.size
                better = ll2 >= ll
                if not better and ll2 >= ll - noise:
                    better = float(np.linalg.norm(logistic_score(x, m2, s2)[0])) < gnorm
                if better:
                    moved = (m2, s2) != (mu, sc)
                    mu, sc, ll = m2, s2, ll2
                    break
            t *= 0.5
        if not moved:
            break
    else:
        raise InputError(f"logistic fit did not converge in {max_iter} iterations "
                         f"(gradient norm {gnorm:.3g})")
    params = LogisticParams(float(mu), float(sc))
    return FittedDistribution("logistic", params, logistic_loglik(x, params), 2, x.size, iterations=it)


# -- selection ---------------------------------------------------------------

FAMILIES = {"triangular": fit_triangular, "logistic": fit_logistic}


@dataclass
class FitReport:
    label: str
    candidates: dict[str, FittedDistribution]
    errors: dict[str, str]
    best: FittedDistribution

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "winner": self.best.family,
            "candidates": {k: v.as_dict() for k, v in self.candidates.items()},
            "errors": self.errors,
        }


def best_fit(s: TimeSamples, families=None) -> FitReport:
    """Fit every family and keep the smallest AIC; ties go to fewer parameters."""
    families = families or FAMILIES
    fits, errors = {}, {}
    for name, fitter in families.items():
        try:
            fits[name] = fitter(s)
        except InputError as exc:
            errors[name] = str(exc)
    if not fits:
        raise InputError("no distribution family could be fitted: " + "; ".join(f"{k}: {v}" for k, v in errors.items()))
    best = min(fits.values(), key=lambda f: (f.aic, f.n_params))
    return FitReport(s.label, fits, errors, best)


def reduction_percent(mean_before: float, mean_after: float) -> float:
    """Percent of the baseline time saved, unrounded."""
    if not mean_before > 0:
        raise InputError("baseline mean time must be positive")
    if mean_after < 0:
        raise InputError("mean time cannot be negative")
    return 100.0 * (1.0 - mean_after / mean_before)


def read_times(path, label: str = "full_survey") -> TimeSamples:
    """One column of positive reals; a non-numeric first line is taken as a header."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    values = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            cell = row[0].strip()
            try:
                values.append(float(cell))
            except ValueError:
                if lineno == 1:
                    continue
                raise InputError(f"{path}: line {lineno}: non-numeric time {cell!r}") from None
    if not values:
        raise InputError(f"{path}: no time samples")
    return TimeSamples(np.array(values), label)
