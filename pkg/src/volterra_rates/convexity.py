"""Convexity adjustment of bond-price ratios under the forward measure.

For ``t <= min(t1, t2)``,

    E^{Q^tau}[P_{t,t1} / P_{t,t2}] = P_{0,t1} / P_{0,t2} * C,

    log C = int_0^t (Sigma_s^{t2,tau} - Sigma_s^{t1,tau}) Sigma_s^{t2,tau} gamma'(s) ds.

``C`` is evaluated by adaptive quadrature for any kernel and driver, in closed
form for an exponential kernel under a Brownian driver, and through its
first-order small-``t`` expansion for Riemann-Liouville kernels.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .curves import (
    BrownianDriver,
    ContractError,
    ExponentialKernel,
    RateModel,
    RiemannLiouvilleKernel,
)
from .numerics import DEFAULT_QUADRATURE, QuadratureSettings, integrate


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    ASYMPTOTIC_SMALL_T = "asymptotic_small_t"


class Sign(str, enum.Enum):
    POSITIVE = "positive"
    ZERO = "zero"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class ConvexityQuery:
    t: float
    t1: float
    t2: float
    tau: float

    def __post_init__(self):
        for name in ("t", "t1", "t2", "tau"):
            value = getattr(self, name)
            if not value >= 0:
                raise ContractError(f"{name} must be >= 0, got {value}")
            object.__setattr__(self, name, float(value))
        if self.t > min(self.t1, self.t2):
            raise ContractError(
                f"observation time t={self.t} exceeds min(t1, t2)={min(self.t1, self.t2)}"
            )

    @property
    def degenerate(self) -> bool:
        """True when the adjustment is identically 1."""
        return self.t == 0 or self.t1 == self.t2 or self.t2 == self.tau


@dataclass(frozen=True)
class ConvexityResult:
    log_adjustment: float
    adjustment: float
    method: Method
    error_estimate: float = 0.0


def _result(log_c: float, method: Method, err: float = 0.0) -> ConvexityResult:
    try:
        adj = math.exp(log_c)
    except OverflowError:
        # the factor overflows long before its logarithm loses meaning
        adj = math.inf
    return ConvexityResult(log_adjustment=log_c, adjustment=adj, method=method,
                           error_estimate=err)


def _check_kernel_domain(model: RateModel, q: ConvexityQuery) -> None:
    # only the exponential antiderivative extends to negative arguments
    if not isinstance(model.kernel, ExponentialKernel) and q.tau < q.t:
        raise ContractError(
            f"tau={q.tau} < t={q.t}: Phi(tau - s) is outside the kernel domain for "
            f"{type(model.kernel).__name__}"
        )


def convexity_integrand(model: RateModel, q: ConvexityQuery):
    """The integrand ``(Sigma^{t2} - Sigma^{t1}) Sigma^{t2} gamma'`` as a vectorised callable."""
    kernel, driver = model.kernel, model.driver
    t1, t2, tau = q.t1, q.t2, q.tau

    def f(s):
        spread = kernel.Phi_diff(t2 - s, t1 - s)
        vol2 = kernel.Phi_diff(t2 - s, tau - s)
        return spread * vol2 * driver.gamma_prime(s)

    return f


def convexity_quadrature(model: RateModel, q: ConvexityQuery,
                         settings: QuadratureSettings = DEFAULT_QUADRATURE) -> ConvexityResult:
    _check_kernel_domain(model, q)
    if q.degenerate:
        return _result(0.0, Method.QUADRATURE)
    value, err = integrate(convexity_integrand(model, q), 0.0, q.t, settings)
    return _result(value, Method.QUADRATURE, err)


def convexity_exponential_closed_form(alpha: float, q: ConvexityQuery,
                                      sigma: float = 1.0) -> ConvexityResult:
    """Exact adjustment for ``phi(x) = sigma e^{-alpha x}`` with a Brownian driver.

    ``log C = sigma^2 (e^{2 alpha t} - 1) / (2 alpha^3)
    * (e^{-alpha t2} - e^{-alpha t1}) (e^{-alpha t2} - e^{-alpha tau})``,
    evaluated with ``expm1`` so that small ``alpha`` keeps full precision.
    """
    if not alpha > 0:
        raise ContractError(f"alpha must be > 0, got {alpha}")
    if q.degenerate:
        return _result(0.0, Method.CLOSED_FORM)
    a = alpha
    growth = math.expm1(2.0 * a * q.t) / (2.0 * a)
    spread = math.exp(-a * q.t1) * math.expm1(-a * (q.t2 - q.t1)) / a
    vol = math.exp(-a * q.tau) * math.expm1(-a * (q.t2 - q.tau)) / a
    return _result(sigma * sigma * growth * spread * vol, Method.CLOSED_FORM)


def convexity_alpha_zero_limit(q: ConvexityQuery, sigma: float = 1.0) -> ConvexityResult:
    """Limit of the exponential-kernel adjustment as ``alpha -> 0``: ``exp{(t2-t1)(t2-tau) t}``."""
    if q.degenerate:
        return _result(0.0, Method.CLOSED_FORM)
    return _result(sigma * sigma * (q.t2 - q.t1) * (q.t2 - q.tau) * q.t, Method.CLOSED_FORM)


def convexity_rl_small_t(hurst: float, q: ConvexityQuery, sigma: float = 1.0,
                         cross_check: bool = False,
                         settings: QuadratureSettings = DEFAULT_QUADRATURE) -> ConvexityResult:
    """First-order small-``t`` term for the Riemann-Liouville kernel ``sigma x^{H-1/2}``.

    ``log C ~ t / H+^2 (t2^{H+} - t1^{H+}) (t2^{H+} - tau^{H+})`` with
    ``H+ = H + 1/2``. With ``cross_check`` the error estimate is the distance
    to the quadrature value (Brownian driver).
    """
    if not 0 < hurst < 1:
        raise ContractError(f"hurst must lie in (0, 1), got {hurst}")
    hp = hurst + 0.5
    log_c = (sigma * sigma * q.t / hp ** 2
             * (q.t2 ** hp - q.t1 ** hp) * (q.t2 ** hp - q.tau ** hp))
    err = 0.0
    if cross_check:
        model = RateModel(None, RiemannLiouvilleKernel(hurst=hurst, sigma=sigma), BrownianDriver())
        err = abs(convexity_quadrature(model, q, settings).log_adjustment - log_c)
    return _result(log_c, Method.ASYMPTOTIC_SMALL_T, err)


def convexity_adjustment(model: RateModel, q: ConvexityQuery, method: str = "auto",
                         settings: QuadratureSettings = DEFAULT_QUADRATURE) -> ConvexityResult:
    """Convexity adjustment factor for ``model`` at ``q``.

    ``method`` is one of ``auto``, ``closed``/``closed_form``, ``quad``/``quadrature``
    or ``asymptotic``. ``auto`` uses the closed form when the kernel is
    exponential and the driver Brownian, quadrature otherwise. Degenerate
    queries (``t = 0``, ``t1 = t2`` or ``t2 = tau``) return exactly 1.

    Raises
    ------
    ContractError
        If the requested method does not apply to the model, or ``tau < t``
        for a kernel defined only on the positive half-line.
    QuadratureError
        If the quadrature fails to converge.
    """
    _check_kernel_domain(model, q)
    kernel = model.kernel
    closed_ok = isinstance(kernel, ExponentialKernel) and isinstance(model.driver, BrownianDriver)
    m = {"closed": "closed_form", "quad": "quadrature"}.get(method, method)
    if m == "auto":
        m = "closed_form" if closed_ok else "quadrature"
    if m == "closed_form":
        if not closed_ok:
            raise ContractError("closed form needs an exponential kernel and a Brownian driver")
        return convexity_exponential_closed_form(kernel.alpha, q, kernel.sigma)
    if m == "quadrature":
        return convexity_quadrature(model, q, settings)
    if m == "asymptotic":
        if not isinstance(kernel, RiemannLiouvilleKernel) or not isinstance(model.driver, BrownianDriver):
            raise ContractError("small-t asymptotic needs a Riemann-Liouville kernel and a Brownian driver")
        return convexity_rl_small_t(kernel.hurst, q, kernel.sigma)
    raise ValueError(f"unknown convexity method {method!r}")


def convexity_sign(model: RateModel, q: ConvexityQuery) -> Sign:
    """Sign of ``log C`` predicted from the ordering of ``t1``, ``t2`` and ``tau``.

    With ``phi > 0`` and ``gamma' > 0`` the sign is
    ``sign(t1 - t2) * sign(tau - t2)``.
    """
    if q.degenerate or model.kernel.sigma == 0:
        return Sign.ZERO
    s = np.sign(q.t1 - q.t2) * np.sign(q.tau - q.t2)
    return Sign.POSITIVE if s > 0 else Sign.NEGATIVE
