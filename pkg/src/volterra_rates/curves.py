"""Deterministic model ingredients: the theta curve, convolution kernels, drivers.

The short rate is ``r_t = theta(t) + int_0^t phi(t - u) dW_u`` where ``W`` is a
Gaussian martingale with quadratic variation ``gamma(t)``. Every other module
works through the objects defined here:

* ``theta(t)`` and its integral ``Theta(t, T)``;
* the kernel ``phi`` and an antiderivative ``Phi`` with ``Phi' = -phi``;
* ``Xi_T(t, u) = Phi(T - u) - Phi(t - u)`` and the ratio volatility
  ``Sigma_t^{T, tau} = Phi(T - t) - Phi(tau - t)``;
* the driver density ``gamma'(t)``.

All objects are immutable and all functions accept numpy arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np


class ContractError(ValueError):
    """Arguments violate an ordering or range precondition."""


class DomainError(ValueError):
    """A kernel was evaluated where it is singular or undefined."""


def _as_points(points) -> tuple[tuple[float, float], ...]:
    pts = tuple((float(a), float(b)) for a, b in points)
    if len(pts) < 1:
        raise ValueError("a table needs at least one point")
    xs = [p[0] for p in pts]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("table abscissae must be strictly increasing")
    return pts


# ---------------------------------------------------------------------------
# theta curves


class ThetaCurve:
    """Base class for the deterministic level ``theta(t)``."""

    def __call__(self, t):
        raise NotImplementedError

    def integral(self, t: float, T: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantTheta(ThetaCurve):
    rate: float

    def __call__(self, t):
        return self.rate + 0.0 * np.asarray(t, dtype=float)

    def integral(self, t, T):
        return self.rate * (T - t)


@dataclass(frozen=True)
class VasicekTheta(ThetaCurve):
    """``theta(t) = r0 e^{-kappa t} + mu (1 - e^{-kappa t})``.

    Paired with the kernel ``sigma e^{-kappa x}`` and a Brownian driver this is
    exactly the Vasicek model started at ``r0``.
    """

    r0: float
    kappa: float
    mu: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")

    def __call__(self, t):
        e = np.exp(-self.kappa * np.asarray(t, dtype=float))
        return self.r0 * e + self.mu * (1.0 - e)

    def integral(self, t, T):
        k = self.kappa
        # e^{-kt} - e^{-kT}, written to keep precision when T - t is small
        decay = -math.exp(-k * t) * math.expm1(-k * (T - t))
        return self.mu * (T - t) + (self.r0 - self.mu) * decay / k


@dataclass(frozen=True)
class TableTheta(ThetaCurve):
    """Piecewise-linear theta through ``points``, flat outside the table."""

    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))

    @property
    def _xy(self):
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])
        return xs, ys

    def __call__(self, t):
        xs, ys = self._xy
        return np.interp(np.asarray(t, dtype=float), xs, ys)

    def _primitive(self, x: float) -> float:
        # exact integral of the piecewise-linear (flat-extrapolated) curve from xs[0]
        xs, ys = self._xy
        if x <= xs[0]:
            return ys[0] * (x - xs[0])
        seg = np.diff(xs) * 0.5 * (ys[:-1] + ys[1:])
        k = int(np.searchsorted(xs, x, side="right")) - 1
        total = float(seg[:k].sum())
        if k >= len(xs) - 1:
            return total + ys[-1] * (x - xs[-1])
        h = x - xs[k]
        slope = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])
        return total + ys[k] * h + 0.5 * slope * h * h

    def integral(self, t, T):
        return self._primitive(T) - self._primitive(t)


# ---------------------------------------------------------------------------
# kernels


class KernelSpec:
    """Convolution kernel ``phi`` with antiderivative ``Phi`` (``Phi' = -phi``)."""

    sigma: float

    def phi(self, x):
        raise NotImplementedError

    def Phi(self, z):
        raise NotImplementedError

    def Phi_diff(self, a, b):
        """``Phi(a) - Phi(b)``; subclasses override where cancellation bites."""
        return self.Phi(a) - self.Phi(b)


@dataclass(frozen=True)
class ExponentialKernel(KernelSpec):
    """``phi(x) = sigma e^{-alpha x}``: an Ornstein-Uhlenbeck short rate."""

    alpha: float
    sigma: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ContractError(f"alpha must be > 0, got {self.alpha}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    def phi(self, x):
        return self.sigma * np.exp(-self.alpha * np.asarray(x, dtype=float))

    def Phi(self, z):
        return self.sigma * np.exp(-self.alpha * np.asarray(z, dtype=float)) / self.alpha

    def Phi_diff(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return self.sigma * np.exp(-self.alpha * b) * np.expm1(-self.alpha * (a - b)) / self.alpha


@dataclass(frozen=True)
class RiemannLiouvilleKernel(KernelSpec):
    """``phi(x) = sigma x^{H - 1/2}``: a Riemann-Liouville fractional driver."""

    hurst: float
    sigma: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ContractError(f"hurst must lie in (0, 1), got {self.hurst}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    @property
    def h_plus(self) -> float:
        return self.hurst + 0.5

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("Riemann-Liouville kernel is undefined for negative lags")
        if self.hurst < 0.5 and np.any(x == 0):
            raise DomainError(f"Riemann-Liouville kernel with H={self.hurst} is singular at 0")
        return self.sigma * x ** (self.hurst - 0.5)

    def Phi(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < 0):
            raise DomainError("Riemann-Liouville antiderivative is undefined for negative arguments")
        return -self.sigma * z ** self.h_plus / self.h_plus


@dataclass(frozen=True)
class TabulatedKernel(KernelSpec):
    """``phi`` linearly interpolated through positive tabulated values.

    Extrapolation is flat on both sides; ``Phi(0) = 0``.
    """

    times: tuple
    values: tuple
    sigma: float = 1.0

    def __post_init__(self):
        times = tuple(float(x) for x in self.times)
        values = tuple(float(v) for v in self.values)
        if len(times) != len(values) or len(times) < 1:
            raise ValueError("tabulated kernel needs matching, non-empty times and values")
        if times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("tabulated kernel times must be >= 0 and strictly increasing")
        if any(v <= 0 for v in values):
            raise ValueError("tabulated kernel values must be strictly positive")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        xs = np.array(times)
        ys = np.array(values)
        # integral of phi/sigma from 0 to each node
        head = ys[0] * xs[0]
        cum = np.concatenate([[0.0], np.cumsum(np.diff(xs) * 0.5 * (ys[:-1] + ys[1:]))]) + head
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_ys", ys)
        object.__setattr__(self, "_cum", cum)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("tabulated kernel is undefined for negative lags")
        return self.sigma * np.interp(x, self._xs, self._ys)

    def Phi(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < 0):
            raise DomainError("tabulated antiderivative is undefined for negative arguments")
        xs, ys, cum = self._xs, self._ys, self._cum
        zc = np.clip(z, xs[0], xs[-1])
        k = np.clip(np.searchsorted(xs, zc, side="right") - 1, 0, max(len(xs) - 2, 0))
        if len(xs) == 1:
            inside = ys[0] * zc
        else:
            h = zc - xs[k]
            slope = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])
            inside = cum[k] + ys[k] * h + 0.5 * slope * h * h
        below = ys[0] * z
        above = cum[-1] + ys[-1] * (z - xs[-1])
        out = np.where(z < xs[0], below, np.where(z > xs[-1], above, inside))
        return -self.sigma * out


# ---------------------------------------------------------------------------
# drivers


class DriverSpec:
    """Gaussian martingale driver described by its quadratic variation."""

    def gamma_prime(self, t):
        raise NotImplementedError

    def gamma(self, t):
        raise NotImplementedError


@dataclass(frozen=True)
class BrownianDriver(DriverSpec):
    def gamma_prime(self, t):
        return 1.0 + 0.0 * np.asarray(t, dtype=float)

    def gamma(self, t):
        return 1.0 * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class ScaledDriver(DriverSpec):
    """``dW = sigma(t) dB`` with ``sigma`` constant or piecewise linear (flat outside)."""

    sigma: Union[float, tuple]

    def __post_init__(self):
        if isinstance(self.sigma, (int, float)):
            if not self.sigma > 0:
                raise ValueError(f"driver sigma must be > 0, got {self.sigma}")
            object.__setattr__(self, "sigma", float(self.sigma))
        else:
            pts = _as_points(self.sigma)
            if any(v <= 0 for _, v in pts):
                raise ValueError("driver sigma table values must be > 0")
            object.__setattr__(self, "sigma", pts)

    def _table(self):
        xs = np.array([p[0] for p in self.sigma])
        ys = np.array([p[1] for p in self.sigma])
        return xs, ys

    def gamma_prime(self, t):
        t = np.asarray(t, dtype=float)
        if isinstance(self.sigma, float):
            return self.sigma ** 2 + 0.0 * t
        xs, ys = self._table()
        return np.interp(t, xs, ys) ** 2

    def gamma(self, t):
        t = np.asarray(t, dtype=float)
        if isinstance(self.sigma, float):
            return self.sigma ** 2 * t
        xs, ys = self._table()
        # knots of the piecewise-quadratic gamma' on [0, inf)
        knots = np.concatenate([[0.0], xs[xs > 0]])
        vals = np.interp(knots, xs, ys)
        seg = np.diff(knots) * (vals[:-1] ** 2 + vals[:-1] * vals[1:] + vals[1:] ** 2) / 3.0
        cum = np.concatenate([[0.0], np.cumsum(seg)])

        def one(x):
            k = int(np.searchsorted(knots, x, side="right")) - 1
            if k >= len(knots) - 1:
                return cum[-1] + vals[-1] ** 2 * (x - knots[-1])
            s0 = vals[k]
            s1 = float(np.interp(x, xs, ys))
            return cum[k] + (x - knots[k]) * (s0 * s0 + s0 * s1 + s1 * s1) / 3.0

        return np.vectorize(one, otypes=[float])(t) if t.ndim else float(one(float(t)))


@dataclass(frozen=True)
class OUDriver(DriverSpec):
    """Weighting of an Ornstein-Uhlenbeck driver: ``gamma'(t) = e^{-2 beta t}``."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    def gamma_prime(self, t):
        return np.exp(-2.0 * self.beta * np.asarray(t, dtype=float))

    def gamma(self, t):
        return -np.expm1(-2.0 * self.beta * np.asarray(t, dtype=float)) / (2.0 * self.beta)


@dataclass(frozen=True)
class RateModel:
    theta: ThetaCurve
    kernel: KernelSpec
    driver: DriverSpec = field(default_factory=BrownianDriver)


def vasicek_model(r0: float, kappa: float, mu: float, sigma: float) -> RateModel:
    """The Vasicek model ``dr = kappa (mu - r) dt + sigma dB`` as a ``RateModel``."""
    return RateModel(
        VasicekTheta(r0=r0, kappa=kappa, mu=mu),
        ExponentialKernel(alpha=kappa, sigma=sigma),
        BrownianDriver(),
    )


# ---------------------------------------------------------------------------
# operations


def phi(kernel: KernelSpec, x):
    return kernel.phi(x)


def xi(kernel: KernelSpec, T, t, u):
    """``Xi_T(t, u) = -int_t^T phi(s - u) ds = Phi(T - u) - Phi(t - u)``, for ``u <= t <= T``."""
    T_, t_, u_ = (np.asarray(v, dtype=float) for v in (T, t, u))
    if np.any(u_ > t_) or np.any(t_ > T_):
        raise ContractError(f"xi requires u <= t <= T, got u={u}, t={t}, T={T}")
    return kernel.Phi_diff(T_ - u_, t_ - u_)


def sigma(kernel: KernelSpec, t, T, tau):
    """``Sigma_t^{T, tau} = Phi(T - t) - Phi(tau - t)``, for ``t <= min(T, tau)``."""
    t_, T_, tau_ = (np.asarray(v, dtype=float) for v in (t, T, tau))
    if np.any(t_ > np.minimum(T_, tau_)):
        raise ContractError(f"sigma requires t <= min(T, tau), got t={t}, T={T}, tau={tau}")
    return kernel.Phi_diff(T_ - t_, tau_ - t_)


def theta_integral(theta: ThetaCurve, t: float, T: float) -> float:
    if not 0 <= t <= T:
        raise ContractError(f"theta_integral requires 0 <= t <= T, got t={t}, T={T}")
    if t == T:
        return 0.0
    return float(theta.integral(t, T))


def gamma_prime(driver: DriverSpec, t):
    return driver.gamma_prime(t)


def gamma(driver: DriverSpec, t):
    return driver.gamma(t)


# ---------------------------------------------------------------------------
# JSON configuration


def _theta_from_dict(d: dict) -> ThetaCurve:
    kind = d.get("type")
    if kind == "constant":
        return ConstantTheta(rate=float(d["rate"]))
    if kind == "vasicek":
        return VasicekTheta(r0=float(d["r0"]), kappa=float(d["kappa"]), mu=float(d["mu"]))
    if kind == "table":
        return TableTheta(points=d["points"])
    raise ValueError(f"unknown theta type {kind!r}")


def _kernel_from_dict(d: dict) -> KernelSpec:
    kind = d.get("type")
    sig = float(d.get("sigma", 1.0))
    if kind == "exponential":
        return ExponentialKernel(alpha=float(d["alpha"]), sigma=sig)
    if kind == "riemann_liouville":
        return RiemannLiouvilleKernel(hurst=float(d["hurst"]), sigma=sig)
    if kind == "table":
        if "points" in d:
            times, values = zip(*d["points"])
        else:
            times, values = d["times"], d["values"]
        return TabulatedKernel(times=times, values=values, sigma=sig)
    raise ValueError(f"unknown kernel type {kind!r}")


def _driver_from_dict(d: dict) -> DriverSpec:
    kind = d.get("type")
    if kind == "brownian":
        return BrownianDriver()
    if kind == "scaled":
        s = d["sigma"]
        return ScaledDriver(sigma=float(s) if isinstance(s, (int, float)) else tuple(map(tuple, s)))
    if kind == "ou":
        return OUDriver(beta=float(d["beta"]))
    raise ValueError(f"unknown driver type {kind!r}")


def model_from_dict(config: dict) -> RateModel:
    try:
        theta = _theta_from_dict(config["theta"])
        kernel = _kernel_from_dict(config["kernel"])
        driver = _driver_from_dict(config.get("driver", {"type": "brownian"}))
    except KeyError as exc:
        raise ValueError(f"model config is missing field {exc.args[0]!r}") from None
    return RateModel(theta, kernel, driver)


def model_to_dict(model: RateModel) -> dict:
    th, k, dr = model.theta, model.kernel, model.driver
    if isinstance(th, ConstantTheta):
        theta = {"type": "constant", "rate": th.rate}
    elif isinstance(th, VasicekTheta):
        theta = {"type": "vasicek", "r0": th.r0, "kappa": th.kappa, "mu": th.mu}
    else:
        theta = {"type": "table", "points": [list(p) for p in th.points]}
    if isinstance(k, ExponentialKernel):
        kernel = {"type": "exponential", "alpha": k.alpha, "sigma": k.sigma}
    elif isinstance(k, RiemannLiouvilleKernel):
        kernel = {"type": "riemann_liouville", "hurst": k.hurst, "sigma": k.sigma}
    else:
        kernel = {"type": "table", "times": list(k.times), "values": list(k.values), "sigma": k.sigma}
    if isinstance(dr, BrownianDriver):
        driver = {"type": "brownian"}
    elif isinstance(dr, ScaledDriver):
        s = dr.sigma
        driver = {"type": "scaled", "sigma": s if isinstance(s, float) else [list(p) for p in s]}
    else:
        driver = {"type": "ou", "beta": dr.beta}
    return {"theta": theta, "kernel": kernel, "driver": driver}


def load_model(path: Union[str, Path]) -> RateModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


__all__: Sequence[str] = [
    "BrownianDriver", "ConstantTheta", "ContractError", "DomainError", "DriverSpec",
    "ExponentialKernel", "KernelSpec", "OUDriver", "RateModel", "RiemannLiouvilleKernel",
    "ScaledDriver", "TableTheta", "TabulatedKernel", "ThetaCurve", "VasicekTheta",
    "gamma", "gamma_prime", "load_model", "model_from_dict", "model_to_dict", "phi",
    "sigma", "theta_integral", "vasicek_model", "xi",
]
