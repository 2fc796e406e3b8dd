"""Gaussian-Volterra short-rate models.

Bond prices and forward rates, convexity adjustments of bond-price ratios,
Monte Carlo simulation on a time grid, Hurst-exponent estimation from yield
panels and compounded-rate cashflows.
"""

from .bonds import (
    BondQuote,
    forward_rate_initial,
    log_variance_term,
    zcb_price_initial,
    zcb_price_on_path,
)
from .convexity import (
    ConvexityQuery,
    ConvexityResult,
    Method,
    Sign,
    convexity_adjustment,
    convexity_alpha_zero_limit,
    convexity_exponential_closed_form,
    convexity_quadrature,
    convexity_rl_small_t,
    convexity_sign,
)
from .curves import (
    BrownianDriver,
    ConstantTheta,
    ContractError,
    DomainError,
    ExponentialKernel,
    OUDriver,
    RateModel,
    RiemannLiouvilleKernel,
    ScaledDriver,
    TableTheta,
    TabulatedKernel,
    VasicekTheta,
    load_model,
    model_from_dict,
    model_to_dict,
    vasicek_model,
)
from .hurst import (
    HurstEstimate,
    YieldPanel,
    estimate_hurst,
    export_csv,
    hurst_by_maturity,
    ingest_csv,
    interpolate_curve,
)
from .numerics import QuadratureError, QuadratureSettings, integrate
from .products import (
    DayCount,
    Schedule,
    day_count_fraction,
    pv_flow_payment_delay,
    pv_flow_reset_delay,
    simple_compounded_rate,
)
from .simulation import (
    MCEstimate,
    PathSet,
    SimGrid,
    build_kernel_matrix,
    estimate_discounted_bond,
    estimate_ratio_expectation,
    hybrid_short_rate,
    short_rate_path,
    simulate,
)

__version__ = "0.1.0"
