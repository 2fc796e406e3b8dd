"""Compounded-rate cashflows (OIS style) under a Volterra short-rate model.

A flow accrues the simple compounded rate over ``[T_RS, T_RE]`` (first and
last reset dates) and pays at ``T_p``. When ``T_p != T_RE`` the forward
measure of the payment date differs from the natural one of the rate and
the bond-price ratio picks up a convexity factor.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bonds import zcb_price_initial
from .convexity import ConvexityQuery, convexity_adjustment
from .curves import ContractError, RateModel
from .numerics import DEFAULT_QUADRATURE, QuadratureSettings


class DayCount(str, enum.Enum):
    ACT_365F = "ACT_365F"
    ACT_360 = "ACT_360"
    YEARFRAC_EXACT = "YEARFRAC_EXACT"


def _increasing(name, values):
    arr = tuple(float(v) for v in values)
    if len(arr) < 2:
        raise ContractError(f"{name} needs at least two dates")
    if any(b <= a for a, b in zip(arr, arr[1:])):
        raise ContractError(f"{name} must be strictly increasing")
    if arr[0] < 0:
        raise ContractError(f"{name} must start at a non-negative time")
    return arr


@dataclass(frozen=True)
class Schedule:
    """Reset and accrual dates (year fractions) and the payment date.

    ``payment_date`` may fall before the last reset (payment ahead of the
    period end) but not before the first one.
    """

    reset_dates: tuple
    accrual_dates: tuple
    payment_date: float
    day_count: DayCount = DayCount.YEARFRAC_EXACT

    def __post_init__(self):
        reset = _increasing("reset_dates", self.reset_dates)
        accrual = _increasing("accrual_dates", self.accrual_dates)
        if len(reset) != len(accrual):
            raise ContractError("reset_dates and accrual_dates must have equal length")
        tp = float(self.payment_date)
        if tp < reset[0]:
            raise ContractError(f"payment date {tp} precedes the first reset {reset[0]}")
        object.__setattr__(self, "reset_dates", reset)
        object.__setattr__(self, "accrual_dates", accrual)
        object.__setattr__(self, "payment_date", tp)
        try:
            day_count = DayCount(self.day_count)
        except ValueError:
            raise ContractError(f"unknown day_count {self.day_count!r}") from None
        object.__setattr__(self, "day_count", day_count)

    @classmethod
    def simple(cls, start: float, end: float, payment: float,
               day_count: DayCount = DayCount.YEARFRAC_EXACT) -> "Schedule":
        """Single-period schedule with identical reset and accrual dates."""
        return cls((start, end), (start, end), payment, day_count)

    @property
    def T_RS(self) -> float:
        return self.reset_dates[0]

    @property
    def T_RE(self) -> float:
        return self.reset_dates[-1]

    @property
    def has_reset_delay(self) -> bool:
        return self.reset_dates != self.accrual_dates


def day_count_fraction(schedule: Schedule, a: float, b: float) -> float:
    if a > b:
        raise ContractError(f"day count needs a <= b, got a={a}, b={b}")
    span = b - a
    conv = schedule.day_count
    if conv is DayCount.YEARFRAC_EXACT:
        return span
    days = round(span * 365.0)
    return days / (365.0 if conv is DayCount.ACT_365F else 360.0)


def simple_compounded_rate(bond_prices: Sequence[float], schedule: Schedule) -> float:
    """``(prod 1/P_{t_i, t_{i+1}} - 1) / D(t_0, t_n)`` over the reset dates."""
    prices = np.asarray(bond_prices, dtype=float)
    if prices.size != len(schedule.reset_dates) - 1:
        raise ContractError(
            f"expected {len(schedule.reset_dates) - 1} bond prices, got {prices.size}")
    if np.any(~(prices > 0)):
        raise ContractError("bond prices must be positive")
    growth = math.exp(-float(np.sum(np.log(prices))))
    return (growth - 1.0) / day_count_fraction(schedule, schedule.T_RS, schedule.T_RE)


@dataclass(frozen=True)
class FlowPV:
    pv: float
    convexity_factor: float
    p0_ratio: float
    p0_payment: float


def _pieces(model, schedule, t, method, settings):
    if not 0 <= t <= schedule.T_RS:
        raise ContractError(f"observation time t={t} must lie in [0, T_RS={schedule.T_RS}]")
    p_rs = zcb_price_initial(model, schedule.T_RS, settings).price
    p_re = zcb_price_initial(model, schedule.T_RE, settings).price
    p_tp = zcb_price_initial(model, schedule.payment_date, settings).price
    q = ConvexityQuery(t=t, t1=schedule.T_RS, t2=schedule.T_RE, tau=schedule.payment_date)
    c = convexity_adjustment(model, q, method, settings).adjustment
    return float(p_rs / p_re), float(c), float(p_tp)


def payment_delay_pv(model: RateModel, schedule: Schedule, t: float, method: str = "auto",
                     settings: QuadratureSettings = DEFAULT_QUADRATURE) -> FlowPV:
    """Time-zero value of the compounded flow paid at ``T_p``, with its ingredients.

    ``PV = P_{0,T_p} ((P_{0,T_RS} / P_{0,T_RE}) C - 1)`` where ``C`` is the
    convexity factor of the ratio observed at ``t`` under the ``T_p``-forward
    measure.
    """
    if schedule.has_reset_delay:
        raise ContractError("payment-delay pricing needs reset_dates == accrual_dates")
    ratio, c, p_tp = _pieces(model, schedule, t, method, settings)
    return FlowPV(pv=p_tp * (ratio * c - 1.0), convexity_factor=c, p0_ratio=ratio,
                  p0_payment=p_tp)


def reset_delay_pv(model: RateModel, schedule: Schedule, t: float, r0_S: float,
                   method: str = "auto",
                   settings: QuadratureSettings = DEFAULT_QUADRATURE) -> FlowPV:
    """Time-zero value of a flow whose accrual period differs from its reset period.

    ``PV = P_{0,T_p} (D_A / D_R) {(P_{0,T_RS} / P_{0,T_RE}) (C - 1) + D_R r0_S}``
    with ``D_A``, ``D_R`` the accrual and reset day-count fractions and
    ``r0_S`` the compounded-rate observation at time zero. The expected
    adjusted rate under the payment forward measure is taken equal to its
    time-zero value.
    """
    ratio, c, p_tp = _pieces(model, schedule, t, method, settings)
    acc, res = schedule.accrual_dates, schedule.reset_dates
    d_a = day_count_fraction(schedule, acc[0], acc[-1])
    d_r = day_count_fraction(schedule, res[0], res[-1])
    pv = p_tp * (d_a / d_r) * (ratio * (c - 1.0) + d_r * r0_S)
    return FlowPV(pv=pv, convexity_factor=c, p0_ratio=ratio, p0_payment=p_tp)


def pv_flow_payment_delay(model: RateModel, schedule: Schedule, t: float, **kw) -> float:
    return payment_delay_pv(model, schedule, t, **kw).pv


def pv_flow_reset_delay(model: RateModel, schedule: Schedule, t: float, r0_S: float,
                        **kw) -> float:
    return reset_delay_pv(model, schedule, t, r0_S, **kw).pv


def schedule_from_dict(cfg: dict) -> Schedule:
    """Build a schedule from ``{"reset", "accrual", "payment", "day_count"}``.

    ``accrual`` defaults to ``reset``.
    """
    try:
        reset = cfg["reset"]
        payment = cfg["payment"]
    except KeyError as exc:
        raise ContractError(f"schedule is missing {exc.args[0]!r}") from None
    unknown = set(cfg) - {"reset", "accrual", "payment", "day_count"}
    if unknown:
        raise ContractError(f"unknown schedule keys: {sorted(unknown)}")
    return Schedule(reset, cfg.get("accrual", reset), payment, cfg.get("day_count", "YEARFRAC_EXACT"))


def load_schedule(path) -> Schedule:
    with open(path) as fh:
        return schedule_from_dict(json.load(fh))


__all__ = [
    "DayCount",
    "FlowPV",
    "Schedule",
    "day_count_fraction",
    "load_schedule",
    "payment_delay_pv",
    "pv_flow_payment_delay",
    "pv_flow_reset_delay",
    "reset_delay_pv",
    "schedule_from_dict",
    "simple_compounded_rate",
]
