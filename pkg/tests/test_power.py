import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bromimo import power
from bromimo.channel import SystemConfig
from bromimo.errors import DomainError


def test_power_split_example():
    s = power.powers_from_alpha(0.5, 10.0, 2.5, 1.0)
    assert s.rho_d == pytest.approx(25.0 / 3.0)
    assert s.rho_p == pytest.approx(12.5)
    assert s.rho_p * 1.0 + s.rho_d * 1.5 == pytest.approx(25.0, abs=1e-12)


def test_power_split_endpoints():
    s0 = power.powers_from_alpha(0.0, 10.0, 2.5, 1.0)
    s1 = power.powers_from_alpha(1.0, 10.0, 2.5, 1.0)
    assert s0.rho_d == 0.0 and s0.rho_p == 25.0
    assert s1.rho_p == 0.0


@given(
    st.floats(0.0, 1.0),
    st.floats(1e-3, 1e4),
    st.floats(1.0, 5.0),
    st.floats(0.01, 5.0),
)
def test_energy_is_conserved(alpha, rho, tau_p, extra):
    tau = tau_p + extra
    s = power.powers_from_alpha(alpha, rho, tau, tau_p)
    total = rho * tau
    assert abs(s.rho_p * tau_p + s.rho_d * (tau - tau_p) - total) <= 1e-12 * max(1.0, total)
    assert abs(s.rho_d * (tau - tau_p) - alpha * total) <= 1e-12 * max(1.0, total)


@pytest.mark.parametrize(
    "args",
    [(0.5, 10.0, 2.0, 2.0), (0.5, 10.0, 2.0, 0.5), (0.5, 0.0, 2.0, 1.0), (1.2, 10.0, 2.0, 1.0)],
)
def test_power_split_domain_errors(args):
    with pytest.raises(DomainError):
        power.powers_from_alpha(*args)


@pytest.fixture(scope="module")
def small_curve():
    cfg = SystemConfig(n=40, beta=1.5, tau=2.0, tau_p=1.0, rho=10.0, alpha=0.5, r=0.4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        return cfg, power.optimize_alpha(cfg, power.Objective.MSE, 21)


def test_curve_shape_and_extrema(small_curve):
    _, curve = small_curve
    assert curve.alphas.shape == (21,)
    assert curve.alphas[0] == pytest.approx(power.ALPHA_EPS)
    assert curve.alphas[-1] == pytest.approx(1 - power.ALPHA_EPS)
    step = curve.alphas[1] - curve.alphas[0]
    assert abs(curve.alpha_star_mse - curve.alphas[np.argmin(curve.mse_values)]) <= step
    assert abs(curve.alpha_star_ber - curve.alphas[np.argmax(curve.mu_values)]) <= step
    assert curve.mse_star <= curve.mse_values.min()
    assert curve.ber_star <= curve.ber_values.min()
    assert curve.unimodal_mse and curve.unimodal_ber


def test_interior_optimum(small_curve):
    _, curve = small_curve
    assert curve.mse_values[0] > curve.mse_star
    assert curve.mse_values[-1] > curve.mse_star
    assert curve.ber_values[0] > curve.ber_star
    assert curve.ber_values[-1] > curve.ber_star


def test_ber_curve_is_q_of_mu(small_curve):
    from bromimo.asymptotics import q_function

    _, curve = small_curve
    np.testing.assert_allclose(curve.ber_values, q_function(curve.mu_values / 2), rtol=1e-14)


def test_perfect_csi_override_is_used():
    cfg = SystemConfig(n=20, beta=1.5, tau=2.0, tau_p=1.0, rho=10.0, alpha=0.5, rho_p_override=1e12)
    eig = np.ones(cfg.m)
    imperfect = power.predict_at_alpha(SystemConfig(n=20, beta=1.5, tau=2.0, tau_p=1.0, rho=10.0, alpha=0.5), 0.5, eig)
    perfect = power.predict_at_alpha(cfg, 0.5, eig)
    assert perfect.mse < imperfect.mse


def test_optimize_alpha_rejects_bad_arguments():
    cfg = SystemConfig(n=20, beta=1.5, tau=2.0, tau_p=1.0, rho=10.0, alpha=0.5)
    with pytest.raises(DomainError):
        power.optimize_alpha(cfg, "mse", 2)
    with pytest.raises(ValueError):
        power.optimize_alpha(cfg, "snr", 11)
