"""Shared numerical kernels: adaptive quadrature, least squares, monotone splines."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Gauss-Kronrod 15/7 nodes and weights on [-1, 1] (QUADPACK qk15), positive half.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss points are the odd-indexed Kronrod nodes (xgk[1], xgk[3], ...).
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5]] = _WG[:3]
_GAUSS_W[[13, 11, 9]] = _WG[:3]
_GAUSS_W[7] = _WG[3]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature hit its depth limit before meeting the tolerance."""

    def __init__(self, message: str, value: float, err_est: float):
        super().__init__(f"{message} (partial value={value!r}, error estimate={err_est:.3e})")
        self.value = value
        self.err_est = err_est


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-10
    max_depth: int = 50
    rule: str = "gauss_kronrod_15"

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be > 0, got {self.abs_tol}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.rule not in ("gauss_kronrod_15", "simpson_adaptive"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")


DEFAULT_QUADRATURE = QuadratureSettings()
_MAX_INTERVALS = 20000


def _eval(f, x: np.ndarray) -> np.ndarray:
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    return y


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = _eval(f, mid + half * _NODES)
    kronrod = half * float(fx @ _KRONROD_W)
    gauss = half * float(fx @ _GAUSS_W)
    return kronrod, abs(kronrod - gauss)


def _integrate_gk(f, a, b, settings):
    whole, whole_err = _gk15(f, a, b)
    # max-heap on error: always bisect the worst interval
    heap = [(-whole_err, a, b, whole, 0)]
    total = whole
    total_err = whole_err
    while True:
        floor = 50.0 * np.finfo(float).eps * abs(total)
        if total_err <= max(settings.abs_tol, floor) or not math.isfinite(total_err):
            break
        neg_err, lo, hi, est, depth = heapq.heappop(heap)
        if depth >= settings.max_depth or len(heap) > _MAX_INTERVALS:
            heapq.heappush(heap, (neg_err, lo, hi, est, depth))
            raise QuadratureError("quadrature did not converge", total, total_err)
        mid = 0.5 * (lo + hi)
        left, left_err = _gk15(f, lo, mid)
        right, right_err = _gk15(f, mid, hi)
        heapq.heappush(heap, (-left_err, lo, mid, left, depth + 1))
        heapq.heappush(heap, (-right_err, mid, hi, right, depth + 1))
        total += left + right - est
        total_err += left_err + right_err + neg_err
    # re-sum from the leaves to shed the running-update rounding
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    if not math.isfinite(total):
        raise QuadratureError("quadrature produced a non-finite value", total, total_err)
    return total, total_err


def _integrate_simpson(f, a, b, settings):
    def simpson(fa, fm, fb, h):
        return h * (fa + 4.0 * fm + fb) / 6.0

    fa, fm, fb = _eval(f, np.array([a, 0.5 * (a + b), b]))
    whole = simpson(fa, fm, fb, b - a)
    stack = [(a, b, fa, fm, fb, whole, settings.abs_tol, 0)]
    value = 0.0
    err = 0.0
    failed = False
    while stack:
        lo, hi, flo, fmid, fhi, est, tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl, fr = _eval(f, np.array([0.5 * (lo + mid), 0.5 * (mid + hi)]))
        left = simpson(flo, fl, fmid, mid - lo)
        right = simpson(fmid, fr, fhi, hi - mid)
        delta = left + right - est
        if abs(delta) <= 15.0 * tol or depth >= settings.max_depth:
            if abs(delta) > 15.0 * tol:
                failed = True
            value += left + right + delta / 15.0
            err += abs(delta) / 15.0
            continue
        stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * tol, depth + 1))
        stack.append((lo, mid, flo, fl, fmid, left, 0.5 * tol, depth + 1))
    if failed or not math.isfinite(value):
        raise QuadratureError("quadrature did not converge", value, err)
    return float(value), float(err)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]`` by adaptive bisection of the worst subinterval.

    ``f`` is called with numpy arrays of abscissae and must return an array of
    the same shape. Endpoints are never evaluated by the Gauss-Kronrod rule, so
    integrable endpoint singularities are tolerated, but convergence near them
    is slow; callers should remove algebraic singularities by substitution.

    Returns
    -------
    value, err_est
        The integral and the accumulated embedded error estimate.

    Raises
    ------
    QuadratureError
        If the subinterval carrying the largest error reaches
        ``settings.max_depth`` before the total estimate meets
        ``settings.abs_tol``.
    """
    a = float(a)
    b = float(b)
    if b < a:
        raise ValueError(f"integration bounds must satisfy a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0, 0.0
    if settings.rule == "simpson_adaptive":
        return _integrate_simpson(f, a, b, settings)
    return _integrate_gk(f, a, b, settings)


def integrate_endpoint_singular(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    exponent: float,
    endpoint: str = "left",
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> tuple[float, float]:
    """Integrate ``f`` with an algebraic singularity ``|x - c|**exponent`` at one end.

    The substitution ``x = c + v**(1 / (1 + exponent))`` (mirrored for the right
    endpoint) cancels the singular factor against the Jacobian, leaving a
    bounded integrand. Requires ``exponent > -1``.
    """
    if not exponent > -1.0:
        raise ValueError(f"singularity exponent must be > -1, got {exponent}")
    if endpoint not in ("left", "right"):
        raise ValueError(f"endpoint must be 'left' or 'right', got {endpoint!r}")
    a = float(a)
    b = float(b)
    if b < a:
        raise ValueError(f"integration bounds must satisfy a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0, 0.0
    p = 1.0 + exponent
    inv = 1.0 / p
    vmax = (b - a) ** p

    def g(v):
        step = v ** inv
        x = a + step if endpoint == "left" else b - step
        return f(x) * inv * v ** (inv - 1.0)

    return integrate(g, 0.0, vmax, settings)


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    n: int
    slope_stderr: float = float("nan")


def ols_fit(xs: Sequence[float], ys: Sequence[float]) -> RegressionFit:
    """Ordinary least squares fit of ``ys = slope * xs + intercept``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be one-dimensional and of equal length")
    n = x.size
    if n < 2:
        raise ValueError(f"need at least 2 points for a fit, got {n}")
    xbar = x.mean()
    ybar = y.mean()
    dx = x - xbar
    sxx = float(dx @ dx)
    if sxx == 0.0 or sxx <= 1e-300:
        raise ValueError("degenerate regression: all xs are equal")
    slope = float(dx @ (y - ybar)) / sxx
    intercept = float(ybar - slope * xbar)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    dy = y - ybar
    ss_tot = float(dy @ dy)
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else 0.0
    return RegressionFit(slope=slope, intercept=intercept, r_squared=r2, n=n, slope_stderr=stderr)


def _fritsch_carlson_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h = np.diff(x)
    delta = np.diff(y) / h
    n = x.size
    m = np.empty(n)
    m[0] = delta[0]
    m[-1] = delta[-1]
    if n > 2:
        m[1:-1] = 0.5 * (delta[:-1] + delta[1:])
        # local extrema get a flat tangent
        flat = delta[:-1] * delta[1:] <= 0.0
        m[1:-1][flat] = 0.0
    for k in range(n - 1):
        if delta[k] == 0.0:
            m[k] = 0.0
            m[k + 1] = 0.0
            continue
        a = m[k] / delta[k]
        b = m[k + 1] / delta[k]
        s = a * a + b * b
        if s > 9.0:
            tau = 3.0 / math.sqrt(s)
            m[k] = tau * a * delta[k]
            m[k + 1] = tau * b * delta[k]
    return m


class MonotoneSpline:
    """Fritsch-Carlson monotone cubic Hermite interpolant with flat extrapolation."""

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        x = np.asarray(xs, dtype=float)
        y = np.asarray(ys, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("knot abscissae and values must be 1-d and of equal length")
        if x.size < 2:
            raise ValueError(f"need at least 2 knots, got {x.size}")
        if np.any(np.diff(x) <= 0):
            raise ValueError("knot abscissae must be strictly increasing")
        self.x = x
        self.y = y
        self.m = _fritsch_carlson_slopes(x, y)

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        x, y, m = self.x, self.y, self.m
        qc = np.clip(q, x[0], x[-1])
        k = np.clip(np.searchsorted(x, qc, side="right") - 1, 0, x.size - 2)
        h = x[k + 1] - x[k]
        s = (qc - x[k]) / h
        s2 = s * s
        s3 = s2 * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        out = h00 * y[k] + h10 * h * m[k] + h01 * y[k + 1] + h11 * h * m[k + 1]
        # knots (and the flat extrapolation) return stored values exactly
        out = np.where(qc == x[k], y[k], out)
        out = np.where(qc == x[k + 1], y[k + 1], out)
        return out if out.ndim else float(out)


def spline_interpolate(knots: Sequence[tuple[float, float]], query):
    """Monotone cubic interpolation through ``knots``, flat outside their range."""
    if len(knots) < 2:
        raise ValueError(f"need at least 2 knots, got {len(knots)}")
    xs, ys = zip(*knots)
    return MonotoneSpline(xs, ys)(query)


def central_difference(f: Callable[[float], float], x: float, h: float = 1e-4) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)
