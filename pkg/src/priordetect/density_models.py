"""Class-conditional density pairs, scenarios and data sampling.

Every family exposes vectorised evaluation of ``p0`` and ``p1``, a finite
integration domain with known non-smooth points, and inverse-transform style
sampling from an explicit :class:`numpy.random.Generator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar

import numpy as np
from scipy import special

from ._numerics import bisect_root, cell_integral, integrate
from .errors import ConstructionError, NumericError, UndefinedPointError

GAUSS_PAD = 10.0
CDF_KNOTS = 4096
SAMPLE_XTOL = 1e-10


class DensityPair:
    """Common interface for a pair of known class-conditional densities."""

    family: ClassVar[str] = ""
    discrete: ClassVar[bool] = False
    bounded: ClassVar[bool] = True

    def pdf(self, hypothesis, x):
        raise NotImplementedError

    def p0(self, x):
        return self.pdf(0, x)

    def p1(self, x):
        return self.pdf(1, x)

    @property
    def identical(self) -> bool:
        """True when ``p1`` and ``p0`` coincide everywhere."""
        return False

    def domain(self):
        """Finite interval carrying (numerically) all of the mass."""
        raise NotImplementedError

    def breakpoints(self):
        """Points inside the domain where the densities are not smooth."""
        return ()

    def interval_mass(self, hypothesis, a, b):
        """``(mass, abserr)`` of ``p_hypothesis`` on ``[a, b]``."""
        lo, hi = self.domain()
        a, b = max(a, lo), min(b, hi)
        return integrate(lambda x: float(self.pdf(hypothesis, x)), a, b, points=self.breakpoints())

    def draw(self, labels, rng):
        """Draw one observation per entry of ``labels`` from ``p_label``."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


def _as_array(x):
    return np.asarray(x, dtype=float)


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class GaussianPair(DensityPair):
    """Equal-variance Gaussians ``N(mean0, sigma^2)`` and ``N(mean1, sigma^2)``."""

    mean0: float
    mean1: float
    sigma: float = 1.0
    degenerate: bool = False

    family: ClassVar[str] = "gaussian"
    bounded: ClassVar[bool] = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConstructionError(f"sigma must be positive, got {self.sigma}")
        if self.mean0 == self.mean1 and not self.degenerate:
            raise ConstructionError("mean0 == mean1 requires degenerate=True")

    def _mean(self, hypothesis):
        return self.mean1 if hypothesis else self.mean0

    def pdf(self, hypothesis, x):
        xa = _as_array(x)
        z = (xa - self._mean(hypothesis)) / self.sigma
        out = np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))
        return _scalar_or_array(x, out)

    def cdf(self, hypothesis, x):
        return special.ndtr((_as_array(x) - self._mean(hypothesis)) / self.sigma)

    @property
    def identical(self):
        return self.mean0 == self.mean1

    def domain(self, pad=GAUSS_PAD):
        lo = min(self.mean0, self.mean1) - pad * self.sigma
        hi = max(self.mean0, self.mean1) + pad * self.sigma
        return lo, hi

    def interval_mass(self, hypothesis, a, b):
        if b <= a:
            return 0.0, 0.0
        m = self._mean(hypothesis)
        lo = special.ndtr((a - m) / self.sigma)
        hi = special.ndtr((b - m) / self.sigma)
        if a > m:
            # upper tail differences keep precision far right of the mean
            val = special.ndtr(-(a - m) / self.sigma) - special.ndtr(-(b - m) / self.sigma)
        else:
            val = hi - lo
        return float(val), 1e-16

    def draw(self, labels, rng):
        labels = np.asarray(labels, dtype=bool)
        means = np.where(labels, self.mean1, self.mean0)
        return means + self.sigma * rng.standard_normal(labels.size)

    def params(self):
        return {"mean0": self.mean0, "mean1": self.mean1, "sigma": self.sigma}


@dataclass(frozen=True)
class GaussianMixturePair(DensityPair):
    """Each hypothesis is a finite Gaussian mixture of ``(weight, mean, sd)`` triples."""

    components0: tuple
    components1: tuple

    family: ClassVar[str] = "gaussian_mixture"
    bounded: ClassVar[bool] = False

    def __post_init__(self):
        for name in ("components0", "components1"):
            comps = tuple(tuple(float(v) for v in c) for c in getattr(self, name))
            object.__setattr__(self, name, comps)
            if not comps:
                raise ConstructionError(f"{name} is empty")
            w = np.array([c[0] for c in comps])
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ConstructionError(f"{name} weights must be nonnegative and sum to 1")
            if any(c[2] <= 0 for c in comps):
                raise ConstructionError(f"{name} standard deviations must be positive")

    def _comps(self, hypothesis):
        return self.components1 if hypothesis else self.components0

    def pdf(self, hypothesis, x):
        xa = _as_array(x)
        out = np.zeros_like(xa)
        for w, m, s in self._comps(hypothesis):
            z = (xa - m) / s
            out = out + w * np.exp(-0.5 * z * z) / (s * math.sqrt(2.0 * math.pi))
        return _scalar_or_array(x, out)

    def cdf(self, hypothesis, x):
        xa = _as_array(x)
        return sum(w * special.ndtr((xa - m) / s) for w, m, s in self._comps(hypothesis))

    @property
    def identical(self):
        return sorted(self.components0) == sorted(self.components1)

    def domain(self, pad=GAUSS_PAD):
        comps = self.components0 + self.components1
        return min(m - pad * s for _, m, s in comps), max(m + pad * s for _, m, s in comps)

    def interval_mass(self, hypothesis, a, b):
        if b <= a:
            return 0.0, 0.0
        return float(self.cdf(hypothesis, b) - self.cdf(hypothesis, a)), 1e-15

    def draw(self, labels, rng):
        labels = np.asarray(labels, dtype=bool)
        u = rng.random(labels.size)
        z = rng.standard_normal(labels.size)
        out = np.empty(labels.size)
        for lab in (False, True):
            mask = labels == lab
            comps = self._comps(lab)
            cum = np.cumsum([c[0] for c in comps])
            k = np.minimum(np.searchsorted(cum, u[mask], side="right"), len(comps) - 1)
            means = np.array([c[1] for c in comps])[k]
            sds = np.array([c[2] for c in comps])[k]
            out[mask] = means + sds * z[mask]
        return out

    def params(self):
        return {
            "components0": [list(c) for c in self.components0],
            "components1": [list(c) for c in self.components1],
        }


@dataclass(frozen=True)
class DiscretePair(DensityPair):
    """Probability mass functions on a shared finite alphabet."""

    alphabet: tuple
    weights0: tuple
    weights1: tuple

    family: ClassVar[str] = "discrete"
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        for name in ("alphabet", "weights0", "weights1"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        k = len(self.alphabet)
        if k == 0 or len(self.weights0) != k or len(self.weights1) != k:
            raise ConstructionError("alphabet and weight vectors must have equal nonzero length")
        if len(set(self.alphabet)) != k:
            raise ConstructionError("alphabet points must be distinct")
        for name in ("weights0", "weights1"):
            w = np.array(getattr(self, name))
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ConstructionError(f"{name} must be nonnegative and sum to 1")

    @cached_property
    def _lookup(self):
        return {a: i for i, a in enumerate(self.alphabet)}

    def pdf(self, hypothesis, x):
        w = self.weights1 if hypothesis else self.weights0
        xa = np.atleast_1d(_as_array(x))
        out = np.array([w[self._lookup[v]] if v in self._lookup else 0.0 for v in xa.tolist()])
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))

    @property
    def identical(self):
        return self.weights0 == self.weights1

    def domain(self):
        return min(self.alphabet), max(self.alphabet)

    def interval_mass(self, hypothesis, a, b):
        w = self.weights1 if hypothesis else self.weights0
        return float(sum(wi for xi, wi in zip(self.alphabet, w) if a <= xi <= b)), 0.0

    def draw(self, labels, rng):
        labels = np.asarray(labels, dtype=bool)
        u = rng.random(labels.size)
        alpha = np.array(self.alphabet)
        cum0 = np.cumsum(self.weights0)
        cum1 = np.cumsum(self.weights1)
        k0 = np.minimum(np.searchsorted(cum0, u, side="right"), alpha.size - 1)
        k1 = np.minimum(np.searchsorted(cum1, u, side="right"), alpha.size - 1)
        return np.where(labels, alpha[k1], alpha[k0])

    def params(self):
        return {
            "alphabet": list(self.alphabet),
            "weights0": list(self.weights0),
            "weights1": list(self.weights1),
        }


DEFAULT_DISCRETE = DiscretePair((0.0, 1.0), (0.8, 0.2), (0.3, 0.7))


@dataclass(frozen=True)
class AppendixAPair(DensityPair):
    """Piecewise family on ``[0, 1]`` with ``p0 = 2 - p1``.

    ``p1`` is a rational-power profile on ``[0, t)`` and
    ``1 + 2 c1 (x - t)^(kappa - 1)`` on ``[t, 1]``; ``c1`` normalises ``p1``.
    Use :func:`build_appendix_a` rather than constructing directly.
    """

    kappa: float
    c: float
    t: float
    c1: float

    family: ClassVar[str] = "appendix_a"

    def p1(self, x):
        xa = _as_array(x)
        k1 = self.kappa - 1.0
        s = self.t**k1
        xc = np.clip(xa, 0.0, 1.0)
        left = (1.0 + 2.0 * self.c * xc**k1) * (1.0 - 2.0 * s) / (1.0 - 4.0 * self.c * (self.t * xc) ** k1)
        right = 1.0 + 2.0 * self.c1 * np.maximum(xc - self.t, 0.0) ** k1
        out = np.where(xa < self.t, left, right)
        out = np.where((xa < 0.0) | (xa > 1.0), 0.0, out)
        return _scalar_or_array(x, out)

    def p0(self, x):
        xa = _as_array(x)
        out = np.where((xa < 0.0) | (xa > 1.0), 0.0, 2.0 - _as_array(self.p1(xa)))
        return _scalar_or_array(x, out)

    def pdf(self, hypothesis, x):
        return self.p1(x) if hypothesis else self.p0(x)

    def domain(self):
        return 0.0, 1.0

    def breakpoints(self):
        return (self.t,)

    @cached_property
    def _cdf_table(self):
        n_left = max(16, int(round((CDF_KNOTS - 1) * self.t)))
        n_right = max(16, CDF_KNOTS - 1 - n_left)
        left = np.linspace(0.0, self.t, n_left + 1)
        right = np.linspace(self.t, 1.0, n_right + 1)
        cells = cell_integral(self.p1, left[:-1], left[1:])
        f_left = np.concatenate([[0.0], np.cumsum(cells)])
        u = right - self.t
        f_right = f_left[-1] + u + 2.0 * self.c1 * u**self.kappa / self.kappa
        knots = np.concatenate([left, right[1:]])
        f1 = np.concatenate([f_left, f_right[1:]])
        f1 = f1 / f1[-1]
        f0 = 2.0 * knots - f1
        return knots, f0, f1

    def cdf(self, hypothesis, x):
        knots, f0, f1 = self._cdf_table
        table = f1 if hypothesis else f0
        xa = np.clip(_as_array(x), 0.0, 1.0)
        i = np.clip(np.searchsorted(knots, xa, side="right") - 1, 0, knots.size - 2)
        pdf = self.p1 if hypothesis else self.p0
        return table[i] + cell_integral(pdf, knots[i], xa)

    def ppf(self, hypothesis, u):
        """Inverse CDF via the knot table plus in-cell bisection."""
        knots, f0, f1 = self._cdf_table
        table = f1 if hypothesis else f0
        pdf = self.p1 if hypothesis else self.p0
        u = _as_array(u)
        i = np.clip(np.searchsorted(table, u, side="right") - 1, 0, knots.size - 2)
        lo = knots[i].copy()
        hi = knots[i + 1].copy()
        base = knots[i]
        target = u - table[i]
        while np.max(hi - lo, initial=0.0) > SAMPLE_XTOL:
            mid = 0.5 * (lo + hi)
            below = cell_integral(pdf, base, mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def draw(self, labels, rng):
        labels = np.asarray(labels, dtype=bool)
        u = rng.random(labels.size)
        out = np.empty(labels.size)
        for lab in (False, True):
            mask = labels == lab
            if mask.any():
                out[mask] = self.ppf(lab, u[mask])
        return out

    def params(self):
        return {"kappa": self.kappa, "c": self.c, "t": self.t, "c1": self.c1}


def _left_piece_integrand(kappa, c, t):
    k1 = kappa - 1.0
    s = t**k1

    def f(x):
        return (1.0 + 2.0 * c * x**k1) * (1.0 - 2.0 * s) / (1.0 - 4.0 * c * (t * x) ** k1)

    return f


def build_appendix_a(kappa, c, t, quad_tol=1e-10, xtol=1e-12):
    """Build the lower-bound density pair, solving ``c1`` by bisection on ``[0, 1]``."""
    if not kappa > 1:
        raise ConstructionError(f"kappa must exceed 1, got {kappa}")
    if not 0 < c < 1:
        raise ConstructionError(f"c must lie in (0, 1), got {c}")
    if not 0 < t < 1:
        raise ConstructionError(f"t must lie in (0, 1), got {t}")
    k1 = kappa - 1.0
    if not 2.0 * t**k1 < 1.0:
        raise ConstructionError(f"t^(kappa-1)={t**k1:.4g} must be below 1/2 or p1 vanishes on [0, t)")
    if not 4.0 * c * t ** (2.0 * k1) < 1.0:
        raise ConstructionError(f"left-piece denominator reaches zero for c={c}, t={t}")
    left, _ = integrate(_left_piece_integrand(kappa, c, t), 0.0, t, tol=quad_tol)

    def residual(c1):
        right, _ = integrate(lambda x: 1.0 + 2.0 * c1 * (x - t) ** k1, t, 1.0, tol=quad_tol)
        return left + right - 1.0

    r_lo, r_hi = residual(0.0), residual(1.0)
    if not (r_lo < 0.0 < r_hi):
        raise ConstructionError(
            f"normalisation bracket [0, 1] has no sign change for kappa={kappa}, c={c}, t={t}: "
            f"residual(0)={r_lo:.3g}, residual(1)={r_hi:.3g}"
        )
    c1 = bisect_root(residual, 0.0, 1.0, xtol=xtol)
    if not 2.0 * c1 * (1.0 - t) ** k1 < 1.0:
        raise ConstructionError(f"p0 = 2 - p1 turns negative (c1={c1:.3g}); reduce t")
    return AppendixAPair(kappa=float(kappa), c=float(c), t=float(t), c1=float(c1))


@dataclass(frozen=True)
class Scenario:
    """A density pair with the true prior ``q = P(Y = 1)`` and trim level ``theta``."""

    pair: DensityPair
    q: float
    theta: float = 0.1

    def __post_init__(self):
        if not 0 < self.theta < 0.5:
            raise ConstructionError(f"theta must lie in (0, 1/2), got {self.theta}")
        if not self.theta <= self.q <= 1 - self.theta:
            raise ConstructionError(f"q={self.q} outside [theta, 1 - theta] for theta={self.theta}")

    def mixture_pdf(self, x):
        return self.q * _as_array(self.pair.p1(x)) + (1 - self.q) * _as_array(self.pair.p0(x))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    x: np.ndarray
    y: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.x.shape != self.y.shape:
            raise ValueError("x and y lengths differ")

    def __len__(self):
        return self.y.size

    def drop_labels(self):
        return UnlabeledDataset(self.x, self.seed)


@dataclass(frozen=True, eq=False)
class UnlabeledDataset:
    x: np.ndarray
    seed: int | None = None

    def __len__(self):
        return self.x.size


def _rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def evaluate(pair, hypothesis, x):
    """``p_hypothesis(x)``; zero outside the support."""
    return pair.pdf(int(hypothesis), x)


def likelihood_ratio(pair, x):
    """``p1(x) / p0(x)`` with ``inf`` where only ``p0`` vanishes."""
    p0 = _as_array(pair.p0(x))
    p1 = _as_array(pair.p1(x))
    if np.any((p0 == 0) & (p1 == 0)):
        raise UndefinedPointError(f"both densities vanish at x={x}")
    with np.errstate(divide="ignore"):
        out = np.where(p0 == 0, np.inf, p1 / np.where(p0 == 0, 1.0, p0))
    return _scalar_or_array(x, out)


def sample_labels(scenario, n, rng):
    """Labels only; identical to ``sample_labeled(...).y`` for the same stream."""
    gen, _ = _rng(rng)
    if n < 1:
        raise ValueError("n must be at least 1")
    return (gen.random(n) < scenario.q).astype(np.int8)


def sample_labeled(scenario, n, rng):
    """``n`` i.i.d. pairs: ``Y ~ Bernoulli(q)`` then ``X ~ p_Y``."""
    gen, seed = _rng(rng)
    y = sample_labels(scenario, n, gen)
    x = scenario.pair.draw(y.astype(bool), gen)
    return LabeledDataset(x=np.asarray(x, dtype=float), y=y, seed=seed)


def sample_unlabeled(scenario, n, rng):
    """``n`` i.i.d. draws from the mixture ``q p1 + (1 - q) p0``."""
    data = sample_labeled(scenario, n, rng)
    return data.drop_labels()


def normalization_residual(pair, tol=1e-10):
    """``(|int p0 - 1|, |int p1 - 1|)``."""
    if pair.discrete:
        return abs(math.fsum(pair.weights0) - 1.0), abs(math.fsum(pair.weights1) - 1.0)
    lo, hi = pair.domain()
    out = []
    for h in (0, 1):
        val, _ = integrate(lambda x, h=h: float(pair.pdf(h, x)), lo, hi, points=pair.breakpoints(), tol=tol)
        out.append(abs(val - 1.0))
    return tuple(out)


_FAMILIES = {
    "gaussian": GaussianPair,
    "gaussian_mixture": GaussianMixturePair,
    "discrete": DiscretePair,
    "appendix_a": AppendixAPair,
}


def pair_from_dict(family, params):
    """Rebuild a pair from its family tag and parameter mapping."""
    params = dict(params)
    if family == "gaussian":
        if params.get("mean0") == params.get("mean1"):
            params.setdefault("degenerate", True)
        return GaussianPair(**params)
    if family == "gaussian_mixture":
        return GaussianMixturePair(
            tuple(map(tuple, params["components0"])), tuple(map(tuple, params["components1"]))
        )
    if family == "discrete":
        return DiscretePair(params["alphabet"], params["weights0"], params["weights1"])
    if family == "appendix_a":
        pair = build_appendix_a(params["kappa"], params["c"], params["t"])
        given = params.get("c1")
        if given is not None and abs(given - pair.c1) > 1e-8:
            raise ConstructionError(f"stored c1={given} disagrees with solved c1={pair.c1}")
        return pair
    raise ConstructionError(f"unknown density family {family!r}")


def scenario_to_dict(scenario):
    return {
        "family": scenario.pair.family,
        "params": scenario.pair.params(),
        "q": scenario.q,
        "theta": scenario.theta,
    }


def scenario_from_dict(d):
    pair = pair_from_dict(d["family"], d.get("params", {}))
    return Scenario(pair, q=float(d["q"]), theta=float(d.get("theta", 0.1)))


def check_nonnegative(pair, points=10_000):
    """Minimum of ``p0`` and ``p1`` on a dense grid over the domain."""
    if pair.discrete:
        return min(min(pair.weights0), min(pair.weights1))
    lo, hi = pair.domain()
    grid = np.linspace(lo, hi, points)
    return float(min(np.min(pair.p0(grid)), np.min(pair.p1(grid))))


__all__ = [
    "AppendixAPair",
    "DEFAULT_DISCRETE",
    "DensityPair",
    "DiscretePair",
    "GaussianMixturePair",
    "GaussianPair",
    "LabeledDataset",
    "NumericError",
    "Scenario",
    "UnlabeledDataset",
    "build_appendix_a",
    "check_nonnegative",
    "evaluate",
    "likelihood_ratio",
    "normalization_residual",
    "pair_from_dict",
    "sample_labeled",
    "sample_labels",
    "sample_unlabeled",
    "scenario_from_dict",
    "scenario_to_dict",
]
