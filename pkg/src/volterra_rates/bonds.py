"""Zero-coupon bond prices and instantaneous forward rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import ContractError, RateModel, RiemannLiouvilleKernel, theta_integral
from .numerics import DEFAULT_QUADRATURE, QuadratureSettings, integrate


@dataclass(frozen=True)
class BondQuote:
    t: float
    T: float
    price: float
    log_price: float


def log_variance_term(model: RateModel, t: float, T: float,
                      settings: QuadratureSettings = DEFAULT_QUADRATURE) -> float:
    """``int_t^T Xi_T(u)^2 gamma'(u) du``: conditional variance of the log bond price."""
    if t == T:
        return 0.0
    kernel, driver = model.kernel, model.driver
    if kernel.sigma == 0:
        return 0.0

    def integrand(u):
        x = kernel.Phi_diff(T - u, 0.0)
        return x * x * driver.gamma_prime(u)

    value, _ = integrate(integrand, t, T, settings)
    return value


def _quote(t, T, log_price) -> BondQuote:
    return BondQuote(t=t, T=T, price=np.exp(log_price), log_price=log_price)


def zcb_price_initial(model: RateModel, T: float,
                      settings: QuadratureSettings = DEFAULT_QUADRATURE) -> BondQuote:
    """Time-zero bond price ``P_{0,T} = exp(-Theta_{0,T} + 1/2 int_0^T Xi_T(u)^2 gamma'(u) du)``."""
    if T < 0:
        raise ContractError(f"maturity must be >= 0, got {T}")
    if T == 0:
        return BondQuote(t=0.0, T=0.0, price=1.0, log_price=0.0)
    log_p = -theta_integral(model.theta, 0.0, T) + 0.5 * log_variance_term(model, 0.0, T, settings)
    return _quote(0.0, T, log_p)


def zcb_price_on_path(model: RateModel, t: float, T: float, stoch_integral,
                      settings: QuadratureSettings = DEFAULT_QUADRATURE) -> BondQuote:
    """Bond price at ``t`` given the realised ``int_0^t Xi_T(t, u) dW_u``.

    ``stoch_integral`` may be an array (one value per path); the deterministic
    part is computed once.
    """
    if not 0 <= t <= T:
        raise ContractError(f"zcb_price_on_path requires 0 <= t <= T, got t={t}, T={T}")
    if t == T:
        # P_{T,T} = 1 whatever the path
        x = np.asarray(stoch_integral, dtype=float)
        one = np.ones_like(x) if x.ndim else 1.0
        return BondQuote(t=t, T=T, price=one, log_price=one * 0.0)
    det = -theta_integral(model.theta, t, T) + 0.5 * log_variance_term(model, t, T, settings)
    x = np.asarray(stoch_integral, dtype=float)
    log_p = det + x if x.ndim else det + float(x)
    return _quote(t, T, log_p)


def forward_rate_initial(model: RateModel, T: float,
                         settings: QuadratureSettings = DEFAULT_QUADRATURE) -> float:
    """Instantaneous forward ``f_{0,T} = theta(T) + int_0^T phi(T - u) Xi_T(u) gamma'(u) du``.

    For Riemann-Liouville kernels the integrand is singular at ``u = T`` when
    ``H < 1/2``; the substitution ``u = T - v^{1/H+}`` cancels the singularity
    exactly and is used for every ``H``.
    """
    if T < 0:
        raise ContractError(f"maturity must be >= 0, got {T}")
    level = float(model.theta(T))
    kernel, driver = model.kernel, model.driver
    if T == 0 or kernel.sigma == 0:
        return level
    if isinstance(kernel, RiemannLiouvilleKernel):
        hp = kernel.h_plus
        scale = -(kernel.sigma / hp) ** 2

        def integrand(v):
            u = np.maximum(T - v ** (1.0 / hp), 0.0)
            return scale * v * driver.gamma_prime(u)

        value, _ = integrate(integrand, 0.0, T ** hp, settings)
        return level + value

    def integrand(u):
        return kernel.phi(T - u) * kernel.Phi_diff(T - u, 0.0) * driver.gamma_prime(u)

    value, _ = integrate(integrand, 0.0, T, settings)
    return level + value

