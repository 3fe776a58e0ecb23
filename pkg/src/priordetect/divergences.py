"""Distances between the known densities and between prior-indexed mixtures.

All logarithms are natural, so KL values are in nats. Continuous pairs are
integrated adaptively over the pair's domain, split at the family's
breakpoints and at every crossing of ``p1`` and ``p0``; discrete pairs are
summed exactly over the alphabet.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from ._numerics import integrate, scan_transitions

QUAD_TOL = 1e-10
# chi^2 and KL of well-separated pairs can be huge; their accuracy is relative
RATIO_RTOL = 1e-9
EXACT = "exact-sum"
QUADRATURE = "quadrature"
KINDS = ("tv", "hellinger_sq", "chi_sq", "kl")


@dataclass(frozen=True)
class DivergenceValue:
    kind: str
    value: float
    method: str
    tol: float

    def to_dict(self):
        return asdict(self)


def _crossings(pair, lo, hi):
    grid = np.linspace(lo, hi, 4096)
    return scan_transitions(lambda x: np.asarray(pair.p1(x)) > np.asarray(pair.p0(x)), grid)


def _domain(pair, widen=False):
    lo, hi = pair.domain()
    if widen and not pair.bounded:
        # room for integrands like p^2/q whose mass sits beyond the component means
        params = pair.params()
        means = [params["mean0"], params["mean1"]] if "mean0" in params else [
            c[1] for c in params["components0"] + params["components1"]
        ]
        spread = max(means) - min(means)
        lo, hi = lo - spread, hi + spread
    return lo, hi


def _functional(pair, integrand, widen=False, rtol=0.0):
    """``int integrand(p0(x), p1(x)) dx`` (or the alphabet sum); returns ``(value, err, method)``."""
    if pair.discrete:
        w0 = np.array(pair.weights0)
        w1 = np.array(pair.weights1)
        return math.fsum(np.atleast_1d(integrand(w0, w1))), 0.0, EXACT
    lo, hi = _domain(pair, widen)
    points = list(pair.breakpoints()) + _crossings(pair, lo, hi)

    def f(x):
        return float(integrand(np.float64(pair.p0(x)), np.float64(pair.p1(x))))

    val, err = integrate(f, lo, hi, points=points, tol=QUAD_TOL, rtol=rtol)
    return val, err, QUADRATURE


def _any_uncovered(pair, p, q, widen=False):
    """True if ``p > 0`` somewhere that ``q = 0`` (probed on the alphabet or a grid)."""
    if pair.discrete:
        a = np.array(pair.weights1 if p else pair.weights0)
        b = np.array(pair.weights1 if q else pair.weights0)
        return bool(np.any((a > 0) & (b == 0)))
    lo, hi = _domain(pair, widen)
    grid = np.linspace(lo, hi, 20001)
    a = np.asarray(pair.pdf(p, grid))
    b = np.asarray(pair.pdf(q, grid))
    return bool(np.any((a > 0) & (b == 0)))


def _tv(p0, p1):
    return np.minimum(p0, p1)


def total_variation(pair):
    """``V(p1, p0) = 1 - int min(p1, p0)``."""
    val, _, _ = _functional(pair, _tv)
    return min(1.0, max(0.0, 1.0 - val))


def hellinger_sq(pair):
    """``H^2 = int (sqrt p1 - sqrt p0)^2``, in ``[0, 2]``."""
    val, _, _ = _functional(pair, lambda p0, p1: (np.sqrt(p1) - np.sqrt(p0)) ** 2)
    return min(2.0, max(0.0, val))


def _ratio_sq(num, den):
    both = (num > 0) & (den > 0)
    return np.where(both, num * num / np.where(both, den, 1.0), 0.0)


def chi_sq(pair, reverse=False):
    """``chi^2(p1, p0) = int_{p1 p0 > 0} p1^2 / p0 - 1``; ``reverse`` swaps the roles.

    Returns ``inf`` when the numerator density has mass where the other vanishes.
    """
    num, den = (0, 1) if reverse else (1, 0)
    if _any_uncovered(pair, num, den, widen=True):
        return math.inf
    if reverse:
        integrand = lambda p0, p1: _ratio_sq(p0, p1)
    else:
        integrand = lambda p0, p1: _ratio_sq(p1, p0)
    val, _, _ = _functional(pair, integrand, widen=True, rtol=RATIO_RTOL)
    return max(0.0, val - 1.0)


def kl_divergence(pair, reverse=False):
    """``KL(p1 || p0)`` in nats; ``reverse`` gives ``KL(p0 || p1)``."""
    num, den = (0, 1) if reverse else (1, 0)
    if _any_uncovered(pair, num, den, widen=True):
        return math.inf

    def integrand(p0, p1):
        a, b = (p0, p1) if reverse else (p1, p0)
        both = (a > 0) & (b > 0)
        return np.where(both, special.rel_entr(a, np.where(both, b, 1.0)), 0.0)

    val, _, _ = _functional(pair, integrand, widen=True, rtol=RATIO_RTOL)
    return max(0.0, val)


_DISPATCH = {
    "tv": total_variation,
    "hellinger_sq": hellinger_sq,
    "chi_sq": chi_sq,
    "kl": kl_divergence,
}


def divergence(pair, kind):
    """Tagged value for one of ``tv``, ``hellinger_sq``, ``chi_sq``, ``kl``."""
    try:
        fn = _DISPATCH[kind]
    except KeyError:
        raise ValueError(f"unknown divergence kind {kind!r}; choose from {KINDS}") from None
    method = EXACT if pair.discrete else QUADRATURE
    tol = 0.0 if pair.discrete else QUAD_TOL
    return DivergenceValue(kind=kind, value=float(fn(pair)), method=method, tol=tol)


def bernoulli_kl(a, b):
    """``KL(Bernoulli(a) || Bernoulli(b))`` in nats, with ``0 log 0 = 0``."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"b must lie in [0, 1], got {b}")
    return float(special.rel_entr(a, b) + special.rel_entr(1.0 - a, 1.0 - b))


def labeled_joint_kl(pair, qa, qb):
    """Per-sample KL between the joint ``(X, Y)`` laws with priors ``qa`` and ``qb``.

    The shared class-conditional densities cancel, leaving the Bernoulli KL.
    """
    if not (0 < qa < 1 and 0 < qb < 1):
        raise ValueError("priors must lie in (0, 1)")
    return bernoulli_kl(qa, qb)


def fisher_information_unlabeled(pair, q):
    """``I(q) = int (p1 - p0)^2 / (q p1 + (1 - q) p0)``."""
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")

    def integrand(p0, p1):
        f = q * p1 + (1.0 - q) * p0
        pos = f > 0
        return np.where(pos, (p1 - p0) ** 2 / np.where(pos, f, 1.0), 0.0)

    val, _, _ = _functional(pair, integrand)
    return max(0.0, val)


def hellinger_shift_sq(pair, q, h):
    """Squared Hellinger distance between the mixtures at ``q`` and ``q + h``."""
    if not (0 <= q <= 1 and 0 <= q + h <= 1):
        raise ValueError("q and q + h must lie in [0, 1]")
    if h == 0:
        return 0.0

    def integrand(p0, p1):
        fa = q * p1 + (1.0 - q) * p0
        fb = (q + h) * p1 + (1.0 - q - h) * p0
        return (np.sqrt(np.maximum(fa, 0.0)) - np.sqrt(np.maximum(fb, 0.0))) ** 2

    val, _, _ = _functional(pair, integrand)
    return min(2.0, max(0.0, val))


def mixture_total_variation(pair, qa, qb):
    """Total variation between the mixtures at priors ``qa`` and ``qb``."""

    def integrand(p0, p1):
        return np.minimum(qa * p1 + (1.0 - qa) * p0, qb * p1 + (1.0 - qb) * p0)

    val, _, _ = _functional(pair, integrand)
    return min(1.0, max(0.0, 1.0 - val))
