import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from volterra_rates.curves import (
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
    gamma,
    gamma_prime,
    load_model,
    model_from_dict,
    model_to_dict,
    phi,
    sigma,
    theta_integral,
    xi,
)

KERNELS = [
    ExponentialKernel(alpha=1.3, sigma=0.8),
    RiemannLiouvilleKernel(hurst=0.2, sigma=1.1),
    RiemannLiouvilleKernel(hurst=0.75),
    TabulatedKernel(times=(0.0, 1.0, 3.0, 6.0), values=(1.0, 0.6, 0.7, 0.2), sigma=0.5),
    TabulatedKernel(times=(0.5, 2.0), values=(2.0, 1.0)),
]
DRIVERS = [BrownianDriver(), ScaledDriver(sigma=0.4), ScaledDriver(sigma=((1.0, 0.5), (3.0, 2.0), (4.0, 1.0))),
           OUDriver(beta=0.7)]


def test_phi_examples():
    assert phi(ExponentialKernel(alpha=1.0), 0.0) == 1.0
    assert phi(RiemannLiouvilleKernel(hurst=0.5), 2.7) == 1.0
    assert float(phi(ExponentialKernel(alpha=2.0), 0.5)) == pytest.approx(float(mpmath.exp(-1)), rel=1e-15)


def test_rl_singular_and_negative_arguments():
    with pytest.raises(DomainError):
        phi(RiemannLiouvilleKernel(hurst=0.3), 0.0)
    with pytest.raises(DomainError):
        phi(RiemannLiouvilleKernel(hurst=0.7), -1.0)
    assert phi(RiemannLiouvilleKernel(hurst=0.7), 0.0) == 0.0


def test_kernel_parameter_validation():
    with pytest.raises(ContractError):
        ExponentialKernel(alpha=0.0)
    with pytest.raises(ContractError):
        RiemannLiouvilleKernel(hurst=1.0)
    with pytest.raises(ValueError):
        TabulatedKernel(times=(0.0, 1.0), values=(1.0, -0.1))


def test_xi_examples():
    assert xi(ExponentialKernel(alpha=1.0), 2.0, 2.0, 0.5) == 0.0
    assert float(xi(ExponentialKernel(alpha=1.0), 1.0, 0.0, 0.0)) == pytest.approx(math.exp(-1) - 1, abs=1e-15)
    assert float(xi(RiemannLiouvilleKernel(hurst=0.5), 3.0, 1.0, 1.0)) == pytest.approx(-2.0, abs=1e-15)
    with pytest.raises(ContractError):
        xi(KERNELS[0], 1.0, 2.0, 0.0)


def test_sigma_examples():
    assert sigma(KERNELS[1], 0.5, 2.0, 2.0) == 0.0
    assert float(sigma(RiemannLiouvilleKernel(hurst=0.5), 0.0, 3.0, 2.0)) == pytest.approx(-1.0, abs=1e-15)
    assert float(sigma(ExponentialKernel(alpha=1e-6), 0.0, 3.0, 2.0)) == pytest.approx(-1.0, abs=1e-5)
    with pytest.raises(ContractError):
        sigma(KERNELS[0], 2.5, 2.0, 3.0)


def test_theta_integral_examples():
    assert theta_integral(ConstantTheta(0.06), 0.0, 1.0) == pytest.approx(0.06, abs=1e-16)
    assert theta_integral(ConstantTheta(0.06), 1.5, 1.5) == 0.0
    vas = VasicekTheta(r0=0.05, kappa=1.0, mu=0.03)
    ref, _ = sp_integrate.quad(vas, 0.0, 2.0, epsabs=1e-14)
    assert theta_integral(vas, 0.0, 2.0) == pytest.approx(ref, abs=1e-10)
    with pytest.raises(ContractError):
        theta_integral(vas, 2.0, 1.0)


def test_table_theta_integral_exact():
    tab = TableTheta(points=((0.5, 0.01), (2.0, 0.04), (3.0, 0.02)))
    for a, b in ((0.0, 4.0), (0.7, 2.5), (2.2, 2.9), (0.0, 0.3)):
        ref, _ = sp_integrate.quad(tab, a, b, points=[0.5, 2.0, 3.0], epsabs=1e-14)
        assert theta_integral(tab, a, b) == pytest.approx(ref, abs=1e-12)


def test_gamma_examples():
    bm = BrownianDriver()
    assert gamma_prime(bm, 3.3) == 1.0 and gamma(bm, 3.3) == 3.3
    assert gamma_prime(OUDriver(beta=1.0), 0.0) == 1.0
    assert float(gamma(OUDriver(beta=0.5), 2.0)) == pytest.approx(1 - math.exp(-2), abs=1e-15)
    ref, _ = sp_integrate.quad(OUDriver(beta=0.5).gamma_prime, 0, 2, epsabs=1e-14)
    assert float(gamma(OUDriver(beta=0.5), 2.0)) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("driver", DRIVERS)
def test_gamma_matches_quadrature(driver):
    for t in (0.0, 0.5, 1.7, 3.5, 6.0):
        ref, _ = sp_integrate.quad(driver.gamma_prime, 0.0, t, points=[1.0, 3.0, 4.0] if t > 4 else None,
                                   epsabs=1e-14, limit=200)
        assert float(gamma(driver, t)) == pytest.approx(ref, abs=1e-11)


@pytest.mark.parametrize("kernel", KERNELS)
def test_Phi_derivative_is_minus_phi(kernel):
    rng = np.random.default_rng(1)
    z = rng.uniform(0.01, 10.0, 100)
    h = 1e-6 * np.maximum(z, 1.0)
    if isinstance(kernel, TabulatedKernel):
        # keep the stencil off the kinks of the interpolant
        z = z[np.min(np.abs(z[:, None] - np.array(kernel.times)[None, :]), axis=1) > 1e-3]
        h = h[: z.size]
    fd = (kernel.Phi(z + h) - kernel.Phi(z - h)) / (2 * h)
    assert np.allclose(fd, -kernel.phi(z), rtol=1e-6, atol=0)


times = st.floats(0.0, 10.0, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(KERNELS), times, times, times, times)
def test_xi_additivity(kernel, a, b, c, d):
    u, t, s, T = sorted((a, b, c, d))
    lhs = xi(kernel, T, t, u)
    rhs = xi(kernel, s, t, u) + xi(kernel, T, s, u)
    assert float(lhs) == pytest.approx(float(rhs), abs=1e-12 * (1 + abs(float(lhs))))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(KERNELS), times, times, times)
def test_sigma_sign(kernel, t, T, tau):
    assume(t <= min(T, tau))
    assume(abs(T - tau) > 1e-9)
    assume(not isinstance(kernel, TabulatedKernel) or kernel.sigma > 0)
    value = float(sigma(kernel, t, T, tau))
    assert np.sign(value) == np.sign(tau - T)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(DRIVERS), times, times)
def test_gamma_increasing(driver, t1, t2):
    assume(t2 > t1 + 1e-9)
    assert float(gamma(driver, t2)) > float(gamma(driver, t1))
    assert float(gamma_prime(driver, t1)) > 0


def test_config_round_trip(tmp_path):
    configs = [
        {"theta": {"type": "constant", "rate": 0.06}, "kernel": {"type": "exponential", "alpha": 1.0, "sigma": 0.01},
         "driver": {"type": "brownian"}},
        {"theta": {"type": "vasicek", "r0": 0.02, "kappa": 0.5, "mu": 0.03},
         "kernel": {"type": "riemann_liouville", "hurst": 0.1, "sigma": 0.02}, "driver": {"type": "ou", "beta": 1.0}},
        {"theta": {"type": "table", "points": [[0.0, 0.01], [5.0, 0.03]]},
         "kernel": {"type": "table", "times": [0.0, 2.0], "values": [1.0, 0.5], "sigma": 1.0},
         "driver": {"type": "scaled", "sigma": [[0.0, 0.5], [2.0, 1.0]]}},
    ]
    for cfg in configs:
        model = model_from_dict(cfg)
        assert model_from_dict(model_to_dict(model)) == model
        path = tmp_path / "m.json"
        path.write_text(json.dumps(cfg))
        assert load_model(path) == model


def test_config_defaults_and_errors():
    model = model_from_dict({"theta": {"type": "constant", "rate": 0.0},
                             "kernel": {"type": "exponential", "alpha": 2.0}})
    assert model.driver == BrownianDriver() and model.kernel.sigma == 1.0
    with pytest.raises(ValueError):
        model_from_dict({"theta": {"type": "constant", "rate": 0.0}})
    with pytest.raises(ValueError):
        model_from_dict({"theta": {"type": "spline"}, "kernel": {"type": "exponential", "alpha": 1}})


def test_models_are_immutable():
    model = RateModel(ConstantTheta(0.01), ExponentialKernel(alpha=1.0))
    with pytest.raises(AttributeError):
        model.kernel = None
