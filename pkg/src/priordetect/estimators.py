"""Trimmed maximum-likelihood estimates of the prior ``q``.

Labeled data give a clamped sample mean. Unlabeled data require maximising
the concave mixture log-likelihood ``sum log(q p1(x_i) + (1 - q) p0(x_i))``
over ``[theta, 1 - theta]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numerics import golden_section_max
from .errors import DegenerateSampleError

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class EstimateResult:
    q_hat: float
    mode: str
    trimmed: bool = False
    degenerate: bool = False
    iterations: int = 0
    tol: float = 0.0

    def to_dict(self):
        return {
            "q_hat": self.q_hat,
            "mode": self.mode,
            "trimmed": self.trimmed,
            "degenerate": self.degenerate,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class LogLikProfile:
    value: float
    first_derivative: float
    second_derivative: float


def _check_theta(theta):
    if not 0 < theta < 0.5:
        raise ValueError(f"theta must lie in (0, 1/2), got {theta}")


def mle_labeled(labels, theta):
    """Binomial MLE constrained to ``[theta, 1 - theta]``."""
    _check_theta(theta)
    y = np.asarray(labels)
    if y.size == 0:
        raise ValueError("labels must be nonempty")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary")
    raw = float(np.count_nonzero(y)) / y.size
    q_hat = min(max(raw, theta), 1.0 - theta)
    return EstimateResult(q_hat=q_hat, mode="labeled", trimmed=q_hat != raw)


def _density_columns(pair, samples):
    x = getattr(samples, "x", samples)
    x = np.asarray(x, dtype=float)
    p0 = np.asarray(pair.p0(x), dtype=float)
    p1 = np.asarray(pair.p1(x), dtype=float)
    bad = (p0 == 0) & (p1 == 0)
    if np.any(bad):
        raise DegenerateSampleError(
            f"{int(bad.sum())} sample(s) lie outside both supports, e.g. x={x[bad][0]}"
        )
    return p0, p1


def _profile(p0, p1, q):
    diff = p1 - p0
    f = q * p1 + (1.0 - q) * p0
    if np.any(f <= 0):
        raise DegenerateSampleError(f"mixture likelihood vanishes at q={q}")
    r = diff / f
    return LogLikProfile(
        value=float(np.sum(np.log(f))),
        first_derivative=float(np.sum(r)),
        second_derivative=float(-np.sum(r * r)),
    )


def unlabeled_loglik(pair, samples, q):
    """Value and first two derivatives in ``q`` of the mixture log-likelihood."""
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    p0, p1 = _density_columns(pair, samples)
    return _profile(p0, p1, q)


def mle_unlabeled(pair, samples, theta, tol=DEFAULT_TOL, method="bisection"):
    """Maximise the mixture log-likelihood on ``[theta, 1 - theta]``.

    The derivative is checked at both ends first; an interior maximiser is
    bracketed and found by bisection on the derivative. ``method="golden"``
    uses golden-section search on the value instead; it is also the fallback
    when derivatives are not finite.
    """
    _check_theta(theta)
    if not tol > 0:
        raise ValueError("tol must be positive")
    p0, p1 = _density_columns(pair, samples)
    lo, hi = theta, 1.0 - theta
    diff = p1 - p0
    if not np.any(diff):
        return EstimateResult(q_hat=0.5 * (lo + hi), mode="unlabeled", degenerate=True, tol=tol)

    def deriv(q):
        return float(np.sum(diff / (q * p1 + (1.0 - q) * p0)))

    d_lo, d_hi = deriv(lo), deriv(hi)
    if method == "bisection" and np.isfinite(d_lo) and np.isfinite(d_hi):
        if d_lo <= 0:
            return EstimateResult(q_hat=lo, mode="unlabeled", trimmed=True, tol=tol)
        if d_hi >= 0:
            return EstimateResult(q_hat=hi, mode="unlabeled", trimmed=True, tol=tol)
        a, b, it = lo, hi, 0
        while b - a > tol:
            m = 0.5 * (a + b)
            dm = deriv(m)
            if not np.isfinite(dm):
                break
            if dm > 0:
                a = m
            elif dm < 0:
                b = m
            else:
                a = b = m
            it += 1
        else:
            return EstimateResult(q_hat=0.5 * (a + b), mode="unlabeled", iterations=it, tol=tol)

    def value(q):
        return float(np.sum(np.log(q * p1 + (1.0 - q) * p0)))

    q_hat, it = golden_section_max(value, lo, hi, tol=tol)
    # a concave maximum sitting on an endpoint is reported exactly
    for end in (lo, hi):
        if value(end) >= value(q_hat):
            q_hat = end
    return EstimateResult(
        q_hat=q_hat, mode="unlabeled", trimmed=q_hat in (lo, hi), iterations=it, tol=tol
    )


def estimate(mode, pair, data, theta, tol=DEFAULT_TOL):
    """Dispatch on ``mode``: labels for ``"labeled"``, observations otherwise."""
    if mode == "labeled":
        y = getattr(data, "y", data)
        return mle_labeled(y, theta)
    if mode == "unlabeled":
        return mle_unlabeled(pair, data, theta, tol=tol)
    raise ValueError(f"unknown estimator mode {mode!r}")
