"""Shared scalar numerics: quadrature, bracketing searches and line fits."""

import math
import warnings

import numpy as np
from scipy import integrate as _integrate

from .errors import FitError, NumericError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def integrate(func, a, b, points=None, epsabs=1e-13, epsrel=1e-12, tol=1e-10, limit=400, rtol=0.0):
    """Adaptive quadrature of ``func`` over ``[a, b]``.

    Returns ``(value, abserr)``. Raises :class:`NumericError` if the error
    estimate exceeds ``tol + rtol * |value|``.
    """
    if b <= a:
        return 0.0, 0.0
    inner = None
    if points is not None:
        inner = sorted({float(p) for p in points if a < p < b})
        if not inner:
            inner = None
    with warnings.catch_warnings():
        warnings.simplefilter("error", _integrate.IntegrationWarning)
        try:
            value, err = _integrate.quad(
                func, a, b, points=inner, epsabs=epsabs, epsrel=epsrel, limit=limit
            )
        except _integrate.IntegrationWarning as exc:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                value, err = _integrate.quad(
                    func, a, b, points=inner, epsabs=epsabs, epsrel=epsrel, limit=limit
                )
            if not err <= tol + rtol * abs(value):
                raise NumericError(
                    f"quadrature on [{a}, {b}] did not converge: {exc}", achieved=err
                ) from exc
    if not err <= tol + rtol * abs(value):
        raise NumericError(
            f"quadrature on [{a}, {b}] reached only {err:.3g} (wanted {tol:.3g})",
            achieved=err,
        )
    return value, err


def bisect_root(func, a, b, xtol=1e-12, maxiter=200):
    """Root of a continuous scalar function bracketed by ``[a, b]``."""
    fa, fb = func(a), func(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise NumericError(f"no sign change on [{a}, {b}]: f(a)={fa:.3g}, f(b)={fb:.3g}")
    for _ in range(maxiter):
        if b - a <= xtol:
            break
        m = 0.5 * (a + b)
        fm = func(m)
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def bisect_transition(pred, a, b, xtol=1e-12, maxiter=200):
    """Locate where a boolean predicate flips between ``a`` and ``b``.

    ``pred(a) != pred(b)`` is required. Returns the right end of the final
    bracket, so the returned point carries ``pred(b)``'s value up to ``xtol``.
    """
    va = bool(pred(a))
    for _ in range(maxiter):
        if b - a <= xtol:
            break
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if bool(pred(m)) == va:
            a = m
        else:
            b = m
    return b


def scan_transitions(pred_vec, grid, xtol=1e-12):
    """All flips of a vectorised boolean predicate along a sorted grid.

    Each flip between consecutive grid points is refined by bisection.
    Flips closer together than the grid spacing can be missed.
    """
    grid = np.asarray(grid, dtype=float)
    vals = np.asarray(pred_vec(grid), dtype=bool)
    idx = np.nonzero(vals[1:] != vals[:-1])[0]

    def scalar(x):
        return bool(np.asarray(pred_vec(np.array([x])))[0])

    return [bisect_transition(scalar, grid[i], grid[i + 1], xtol=xtol) for i in idx]


def golden_section_max(func, a, b, tol=1e-9, maxiter=500):
    """Maximise a unimodal function on ``[a, b]``; returns ``(x, iterations)``."""
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = func(x1), func(x2)
    it = 0
    while b - a > tol and it < maxiter:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = func(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = func(x1)
        it += 1
    return 0.5 * (a + b), it


def linear_fit(x, y):
    """Ordinary least squares ``y ~ slope * x + intercept``.

    Returns ``(slope, intercept, r_squared)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("need at least two finite points for a line fit")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise FitError("abscissae are all equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return slope, intercept, r2


# 8-point Gauss-Legendre rule on [-1, 1]; used for short-cell integrals.
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def cell_integral(func, a, b):
    """Vectorised fixed-order Gauss-Legendre integral over many short cells."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[..., None] + half[..., None] * GL_NODES
    return half * np.sum(func(nodes) * GL_WEIGHTS, axis=-1)
