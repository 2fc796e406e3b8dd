"""Monte Carlo simulation of the short rate on a time grid.

The stochastic integrals ``int_0^{t_i} Xi_T(t_i, u) dW_u`` are discretised with
left-point sums, which on a grid ``0 = t_0 < ... < t_N`` is a lower-triangular
matrix applied to the vector of driver increments::

    X_{t_i} = sum_{k < i} Xi_T(t_i, t_k) (W_{t_{k+1}} - W_{t_k})

and likewise ``r_{t_i} = theta(t_i) + sum_{k < i} phi(t_i - t_k) dW_k``.

Every path draws its normals from its own counter-based stream keyed by
``(seed, path_index)``, so results do not depend on how paths are split
across blocks or workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from .bonds import zcb_price_initial, zcb_price_on_path
from .convexity import ConvexityQuery
from .curves import (
    BrownianDriver,
    ContractError,
    RateModel,
    RiemannLiouvilleKernel,
    ScaledDriver,
)

_SEED_MASK = (1 << 64) - 1
_DENSE_LIMIT = 2000
DEFAULT_BLOCK = 4096


@dataclass(frozen=True)
class SimGrid:
    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("a grid needs at least two times")
        if times[0] != 0.0:
            raise ValueError(f"grid must start at 0, got {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("grid times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @classmethod
    def uniform(cls, horizon: float, n_steps: int) -> "SimGrid":
        if n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {n_steps}")
        return cls(np.linspace(0.0, horizon, n_steps + 1))

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def is_uniform(self) -> bool:
        dt = np.diff(self.times)
        return bool(np.allclose(dt, dt[0], rtol=1e-9, atol=0.0))


@dataclass(frozen=True)
class PathSet:
    """Simulated paths. Arrays are indexed ``[path, step]`` or ``[path, time]``."""

    times: np.ndarray
    n_paths: int
    seed: int
    driver_increments: np.ndarray
    short_rate: np.ndarray
    stoch_integral: np.ndarray
    measure: str
    T_for_integral: float


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_paths: int

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "MCEstimate":
        n = samples.size
        mean = float(np.mean(samples))
        se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(mean=mean, std_error=se, n_paths=n)


def _parse_measure(measure, tau):
    if isinstance(measure, str) and measure.startswith(("fwd:", "forward:")):
        tau = float(measure.split(":", 1)[1])
        measure = "forward"
    if measure in ("rn", "risk_neutral"):
        return "risk_neutral", None
    if measure in ("fwd", "forward"):
        if tau is None:
            raise ContractError("forward measure needs a tau")
        return "forward", float(tau)
    raise ValueError(f"unknown measure {measure!r}")


def build_kernel_matrix(model: RateModel, grid: SimGrid, T: float) -> np.ndarray:
    """Lower-triangular ``N x N`` matrix with ``M[i-1, k] = Xi_T(t_i, t_k)`` for ``k < i``.

    Row ``i - 1`` produces the stochastic integral at ``t_i`` (``i = 1..N``).
    Only positive lags ``t_i - t_k`` are evaluated, so singular kernels are safe.
    """
    if grid.horizon > T:
        raise ContractError(f"grid horizon {grid.horizon} exceeds maturity {T}")
    t = grid.times
    ti = t[1:, None]
    tk = t[None, :-1]
    mask = tk < ti
    lag = np.where(mask, ti - tk, 1.0)
    out = model.kernel.Phi_diff(T - np.where(mask, tk, 0.0), lag)
    return np.where(mask, out, 0.0)


def _phi_matrix(model: RateModel, grid: SimGrid) -> np.ndarray:
    t = grid.times
    ti = t[1:, None]
    tk = t[None, :-1]
    mask = tk < ti
    lag = np.where(mask, ti - tk, 1.0)
    return np.where(mask, model.kernel.phi(lag), 0.0)


def _drift(model: RateModel, grid: SimGrid, tau: Optional[float]) -> np.ndarray:
    if tau is None:
        return np.zeros(grid.n_steps)
    tk = grid.times[:-1]
    if tau < grid.horizon:
        raise ContractError(f"forward measure tau={tau} precedes the grid horizon {grid.horizon}")
    # left-point Girsanov drift Xi_tau(t_k, t_k) gamma'(t_k) dt_k
    return (model.kernel.Phi_diff(tau - tk, 0.0) * model.driver.gamma_prime(tk)
            * np.diff(grid.times))


def path_normals(seed: int, start: int, stop: int, n_steps: int) -> np.ndarray:
    """Standard normals for paths ``start..stop-1``, one independent stream per path."""
    if not 0 <= seed <= _SEED_MASK:
        raise ValueError("seed must be an unsigned 64-bit integer")
    out = np.empty((stop - start, n_steps))
    for row, idx in enumerate(range(start, stop)):
        gen = np.random.Generator(np.random.Philox(key=(idx << 64) | seed))
        out[row] = gen.standard_normal(n_steps)
    return out


def driver_increments(model: RateModel, grid: SimGrid, seed: int, start: int, stop: int,
                      tau: Optional[float] = None) -> np.ndarray:
    dgamma = np.diff(model.driver.gamma(grid.times))
    z = path_normals(seed, start, stop, grid.n_steps)
    return z * np.sqrt(dgamma) + _drift(model, grid, tau)


class _Operators:
    """Applies the rate and stochastic-integral maps to increment blocks."""

    def __init__(self, model: RateModel, grid: SimGrid, T: float):
        self.model = model
        self.grid = grid
        self.T = T
        self.theta = np.asarray(model.theta(grid.times), dtype=float)
        n = grid.n_steps
        self.toeplitz = n > _DENSE_LIMIT and grid.is_uniform
        if self.toeplitz:
            h = grid.times[1]
            lags = h * np.arange(1, n + 1)
            self.phi_lags = model.kernel.phi(lags)
            self.Phi_lags = model.kernel.Phi(lags)
            self.Phi_T = model.kernel.Phi(T - grid.times[:-1])
        else:
            self.xi_mat = build_kernel_matrix(model, grid, T)
            self.phi_mat = _phi_matrix(model, grid)

    def _causal(self, inc, kern):
        # y[:, i] = sum_{k <= i} kern[i - k] inc[:, k]  (row i is time t_{i+1})
        return fftconvolve(inc, kern[None, :], axes=1)[:, : inc.shape[1]]

    def stoch_integral(self, inc):
        if self.toeplitz:
            # Xi_T(t_i, t_k) = Phi(T - t_k) - Phi(t_i - t_k)
            return np.cumsum(inc * self.Phi_T, axis=1) - self._causal(inc, self.Phi_lags)
        return inc @ self.xi_mat.T

    def short_rate(self, inc):
        if self.toeplitz:
            noise = self._causal(inc, self.phi_lags)
        else:
            noise = inc @ self.phi_mat.T
        return self.theta[1:] + noise


def _prepend(values, first):
    col = np.full((values.shape[0], 1), first, dtype=float)
    return np.hstack([col, values])


def simulate(model: RateModel, grid: SimGrid, n_paths: int, seed: int,
             measure: str = "risk_neutral", T_for_integral: Optional[float] = None,
             tau: Optional[float] = None, n_workers: int = 1,
             block_size: int = DEFAULT_BLOCK) -> PathSet:
    """Simulate short-rate paths and the stochastic integrals for maturity ``T_for_integral``.

    ``measure`` is ``"risk_neutral"`` or ``"forward"`` (with ``tau``); the
    strings ``"rn"`` and ``"fwd:<tau>"`` are accepted too. Under the forward
    measure each increment carries the left-point drift
    ``Xi_tau(t_k, t_k) gamma'(t_k) (t_{k+1} - t_k)``.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    T = grid.horizon if T_for_integral is None else float(T_for_integral)
    if grid.horizon > T:
        raise ContractError(f"grid horizon {grid.horizon} exceeds T_for_integral {T}")
    kind, tau = _parse_measure(measure, tau)
    ops = _Operators(model, grid, T)

    def block(bounds):
        start, stop = bounds
        inc = driver_increments(model, grid, seed, start, stop, tau)
        return inc, ops.stoch_integral(inc), ops.short_rate(inc)

    bounds = [(s, min(s + block_size, n_paths)) for s in range(0, n_paths, block_size)]
    with ThreadPoolExecutor(max_workers=max(1, n_workers)) as pool:
        parts = list(pool.map(block, bounds))
    inc = np.vstack([p[0] for p in parts])
    stoch = _prepend(np.vstack([p[1] for p in parts]), 0.0)
    rate = _prepend(np.vstack([p[2] for p in parts]), float(ops.theta[0]))
    label = "risk_neutral" if kind == "risk_neutral" else f"forward({tau!r})"
    return PathSet(times=grid.times, n_paths=n_paths, seed=seed, driver_increments=inc,
                   short_rate=rate, stoch_integral=stoch, measure=label, T_for_integral=T)


def _map_blocks(fn, n_paths, block_size, n_workers):
    bounds = [(s, min(s + block_size, n_paths)) for s in range(0, n_paths, block_size)]
    with ThreadPoolExecutor(max_workers=max(1, n_workers)) as pool:
        return np.concatenate(list(pool.map(fn, bounds)))


def ratio_samples(model: RateModel, q: ConvexityQuery, grid: SimGrid, n_paths: int, seed: int,
                  n_workers: int = 1, block_size: int = DEFAULT_BLOCK) -> np.ndarray:
    """Per-path ``P_{t,t1} / P_{t,t2}`` simulated under the ``tau``-forward measure."""
    if abs(grid.horizon - q.t) > 1e-12 * max(1.0, q.t):
        raise ContractError(f"grid horizon {grid.horizon} must equal the query time {q.t}")
    if q.tau < q.t:
        raise ContractError(f"tau={q.tau} must be >= t={q.t}")
    w1 = build_kernel_matrix(model, grid, q.t1)[-1]
    w2 = build_kernel_matrix(model, grid, q.t2)[-1]
    t = grid.horizon
    det = (zcb_price_on_path(model, t, q.t1, 0.0).log_price
           - zcb_price_on_path(model, t, q.t2, 0.0).log_price)

    def block(bounds):
        inc = driver_increments(model, grid, seed, bounds[0], bounds[1], q.tau)
        return np.exp(det + inc @ (w1 - w2))

    return _map_blocks(block, n_paths, block_size, n_workers)


def estimate_ratio_expectation(model: RateModel, q: ConvexityQuery, grid: Optional[SimGrid],
                               n_paths: int, seed: int, n_workers: int = 1,
                               block_size: int = DEFAULT_BLOCK) -> MCEstimate:
    """Monte Carlo estimate of ``E^{Q^tau}[P_{t,t1} / P_{t,t2}]``.

    At ``t = 0`` the ratio is deterministic and returned exactly (``grid`` is
    ignored).
    """
    if q.t == 0:
        ratio = zcb_price_initial(model, q.t1).price / zcb_price_initial(model, q.t2).price
        return MCEstimate(mean=float(ratio), std_error=0.0, n_paths=n_paths)
    return MCEstimate.from_samples(
        ratio_samples(model, q, grid, n_paths, seed, n_workers, block_size))


def discounted_bond_samples(model: RateModel, grid: SimGrid, T: float, n_paths: int, seed: int,
                            n_workers: int = 1, block_size: int = DEFAULT_BLOCK) -> np.ndarray:
    """Per-path ``P_{t,T} exp(-int_0^t r ds)`` at ``t = grid.horizon`` under the risk-neutral measure.

    The integrated rate uses the trapezoidal rule on the grid.
    """
    ops = _Operators(model, grid, T)
    t = grid.horizon
    det = zcb_price_on_path(model, t, T, 0.0).log_price
    dt = np.diff(grid.times)

    def block(bounds):
        inc = driver_increments(model, grid, seed, bounds[0], bounds[1])
        x = ops.stoch_integral(inc)[:, -1]
        r = _prepend(ops.short_rate(inc), float(ops.theta[0]))
        integrated = (0.5 * (r[:, 1:] + r[:, :-1]) * dt).sum(axis=1)
        return np.exp(det + x - integrated)

    return _map_blocks(block, n_paths, block_size, n_workers)


def estimate_discounted_bond(model: RateModel, grid: SimGrid, T: float, n_paths: int, seed: int,
                             n_workers: int = 1, block_size: int = DEFAULT_BLOCK) -> MCEstimate:
    return MCEstimate.from_samples(
        discounted_bond_samples(model, grid, T, n_paths, seed, n_workers, block_size))


def short_rate_path(model: RateModel, grid: SimGrid, seed: int, path_index: int = 0,
                    scheme: str = "left_point") -> np.ndarray:
    """One short-rate path on ``grid`` (cheap for long uniform grids).

    ``scheme="hybrid"`` switches to :func:`hybrid_short_rate` for
    Riemann-Liouville kernels.
    """
    if scheme == "hybrid":
        return hybrid_short_rate(model, grid, 1, seed, start=path_index)[0]
    if scheme != "left_point":
        raise ValueError(f"unknown scheme {scheme!r}")
    ops = _Operators(model, grid, grid.horizon)
    inc = driver_increments(model, grid, seed, path_index, path_index + 1)
    return np.concatenate([[float(ops.theta[0])], ops.short_rate(inc)[0]])


def hybrid_short_rate(model: RateModel, grid: SimGrid, n_paths: int, seed: int,
                      start: int = 0) -> np.ndarray:
    """Short-rate paths for a Riemann-Liouville kernel by the hybrid scheme.

    The left-point sum misses most of the mass of ``x^{H-1/2}`` near the
    origin when ``H`` is small, so paths come out smoother than the model.
    Here the most recent cell's contribution
    ``Y_k = int_{t_k}^{t_{k+1}} (t_{k+1} - s)^{H-1/2} dB_s`` is drawn exactly,
    jointly with ``dB_k``, and older cells use the cell-averaged kernel.
    Requires a uniform grid and a Brownian or constant-scale driver.

    Returns an array of shape ``(n_paths, N + 1)``.
    """
    kernel = model.kernel
    if not isinstance(kernel, RiemannLiouvilleKernel):
        raise ContractError("the hybrid scheme is implemented for Riemann-Liouville kernels only")
    driver = model.driver
    if isinstance(driver, BrownianDriver):
        scale = 1.0
    elif isinstance(driver, ScaledDriver) and isinstance(driver.sigma, float):
        scale = driver.sigma
    else:
        raise ContractError("the hybrid scheme needs a Brownian or constant-scale driver")
    if not grid.is_uniform:
        raise ContractError("the hybrid scheme needs a uniform grid")
    n = grid.n_steps
    h = grid.times[1]
    H, hp = kernel.hurst, kernel.h_plus
    # joint law of (dB_k, Y_k) per cell
    var_b = h
    var_y = h ** (2 * H) / (2 * H)
    cov = h ** hp / hp
    l11 = math.sqrt(var_b)
    l21 = cov / l11
    l22 = math.sqrt(max(var_y - l21 * l21, 0.0))
    z = path_normals(seed, start, start + n_paths, 2 * n).reshape(n_paths, n, 2)
    db = l11 * z[..., 0]
    y = l21 * z[..., 0] + l22 * z[..., 1]
    # cell-averaged kernel for lags j >= 2: (j^{H+} - (j-1)^{H+}) h^{H-1/2} / H+
    j = np.arange(2, n + 1, dtype=float)
    far = np.concatenate([[0.0], (j ** hp - (j - 1) ** hp) * h ** (H - 0.5) / hp])
    noise = fftconvolve(db, far[None, :], axes=1)[:, :n] + y
    theta = np.asarray(model.theta(grid.times), dtype=float)
    rate = theta[1:] + kernel.sigma * scale * noise
    return _prepend(rate, float(theta[0]))
