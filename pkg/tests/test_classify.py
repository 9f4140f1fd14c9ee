"""Envelope fitting, embeddings, algebra and operator mapping tests."""

import math

import numpy as np
import pytest

from mlreg.classify import (
    BEURLING_H_GRID,
    Caps,
    CoefficientLaw,
    DEFAULT_CAPS,
    RECOVERY_CAPS,
    RECOVERY_P_RANGE,
    apply_ultradiff_operator,
    check_algebra,
    check_embedding,
    check_sigma_embedding,
    fit_envelope,
    leibniz_product_sups,
    log_seminorm,
    seminorm,
    substitution_violation,
)
from mlreg.params import ClassParams
from mlreg.signals import (
    DerivSups,
    Spectrum,
    forward_transform,
    inverse_transform,
    oracle_log_sups,
    synth,
    synth_prescribed_decay,
)

K = (0.3, 0.7)


def _const_sups(log_vals) -> DerivSups:
    v = np.asarray(log_vals, dtype=float)
    return DerivSups(len(v) - 1, v, K, "test")


def test_seminorm_zero_function():
    sups = _const_sups([-np.inf] * 8)
    assert seminorm(sups, ClassParams(1.0, 2.0), 1.0) == 0.0


def test_seminorm_unit_cosine():
    # S_p = 1 for all p: the sup is attained at p in {0, 1} and equals 1.
    sups = _const_sups([0.0] * 10)
    assert seminorm(sups, ClassParams(1.0, 2.0), 1.0) == pytest.approx(1.0)


def test_seminorm_monotone_in_h_and_tau():
    sig = synth("gaussian", width=0.05)
    sups = oracle_log_sups(sig, K, 12)
    for params in (ClassParams(0.5, 2.0), ClassParams(1.0, 1.5)):
        s1 = log_seminorm(sups, params, 1.0)
        s2 = log_seminorm(sups, params, 2.0)
        assert s2 <= s1 + 1e-12
    s_tau1 = log_seminorm(sups, ClassParams(0.5, 2.0), 1.0)
    s_tau2 = log_seminorm(sups, ClassParams(1.0, 2.0), 1.0)
    assert s_tau2 <= s_tau1 + 1e-12


def test_fit_envelope_cosine_is_analytic_like():
    sups = oracle_log_sups(synth("cosine", lam=40.0), K, 16)
    fit = fit_envelope(sups, 2.0, DEFAULT_CAPS)
    assert fit.feasible
    assert fit.tau_hat == 0.0


def test_fit_envelope_divergent_sups_is_not_in_class():
    sups = oracle_log_sups(synth("heaviside", x0=0.5), (0.4, 0.6), 8)
    fit = fit_envelope(sups, 2.0, DEFAULT_CAPS)
    assert not fit.feasible
    assert "not in class" in fit.verdict
    assert fit.tau_hat is None


def test_fit_envelope_requires_enough_orders():
    with pytest.raises(ValueError, match="p_max >= 6"):
        fit_envelope(_const_sups([0.0] * 4), 2.0)


@pytest.mark.parametrize("tau0,sigma0", [(1.0, 2.0), (2.0, 2.0), (1.0, 3.0)])
def test_fit_recovers_planted_tau(tau0, sigma0):
    sig = synth_prescribed_decay(ClassParams(tau0, sigma0), seed=1)
    sups = oracle_log_sups(sig, K, RECOVERY_P_RANGE[1], band_extension=None)
    fit = fit_envelope(sups, sigma0, RECOVERY_CAPS, p_range=RECOVERY_P_RANGE)
    assert fit.feasible
    assert 0.8 * tau0 <= fit.tau_hat <= 1.2 * tau0
    # and the quarter-tau system is infeasible at the same caps
    viol = substitution_violation(
        sups, sigma0, tau0 / 4.0, RECOVERY_CAPS.log_a, RECOVERY_CAPS.log_h, RECOVERY_P_RANGE
    )
    assert viol > 1e-9


def test_fit_monotone_in_caps():
    sig = synth_prescribed_decay(ClassParams(1.0, 2.0), seed=2)
    sups = oracle_log_sups(sig, K, 48, band_extension=None)
    tight = fit_envelope(sups, 2.0, Caps(1e6, 1.2), p_range=(2, 48))
    loose = fit_envelope(sups, 2.0, Caps(1e8, 4.0), p_range=(2, 48))
    assert loose.tau_hat <= tight.tau_hat + 1e-9


def test_fit_residual_certificate_consistent():
    sig = synth_prescribed_decay(ClassParams(1.0, 2.0), seed=3)
    sups = oracle_log_sups(sig, K, 48, band_extension=None)
    fit = fit_envelope(sups, 2.0, RECOVERY_CAPS, p_range=(2, 48))
    assert fit.residual <= 1e-9
    assert fit.log_h <= RECOVERY_CAPS.log_h + 1e-12
    assert fit.log_a <= RECOVERY_CAPS.log_a + 1e-12


def test_beurling_mode_reports_smallest_h():
    sups = oracle_log_sups(synth("cosine", lam=3.0), K, 12)
    fit = fit_envelope(sups, 2.0, DEFAULT_CAPS, mode="beurling")
    assert fit.feasible
    assert fit.beurling_h in BEURLING_H_GRID
    # the reported h really passes
    assert (
        substitution_violation(sups, 2.0, fit.tau_hat, DEFAULT_CAPS.log_a, math.log(fit.beurling_h))
        <= 1e-9
    )


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------


def test_embedding_transfer_verbatim():
    sups = oracle_log_sups(synth("gaussian", width=0.05), K, 12)
    rep = check_embedding(sups, 2.0, 0.5, 1.0)
    assert rep["holds"]
    if rep["transfer_checked"]:
        assert rep["violation"] <= 1e-9


def test_embedding_rejects_equal_taus():
    sups = oracle_log_sups(synth("gaussian", width=0.05), K, 12)
    with pytest.raises(ValueError):
        check_embedding(sups, 2.0, 1.0, 1.0)


def test_sigma_embedding_constructs_certificate():
    sups = oracle_log_sups(synth("gaussian", width=0.05), K, 12)
    rep = check_sigma_embedding(sups, 1.0, 2.0, 0.1, 3.0)
    assert rep["holds"]
    if rep["transfer_checked"]:
        assert rep["violation"] <= 1e-9


# ---------------------------------------------------------------------------
# Algebra
# ---------------------------------------------------------------------------


def test_algebra_unit_element():
    phi = oracle_log_sups(synth("gaussian", width=0.05), K, 16)
    one = _const_sups([0.0] + [-np.inf] * 16)
    for h in (0.25, 1.0, 4.0):
        rep = check_algebra(phi, one, 2.0, 1.0, h)
        assert rep["holds"]


def test_algebra_cosine_squared():
    cos_sups = oracle_log_sups(synth("cosine", lam=1.0), K, 16)
    rep = check_algebra(cos_sups, cos_sups, 2.0, 1.0, 1.0)
    assert rep["holds"]
    assert rep["c_h"] == 1.0


def test_algebra_small_h_branch():
    cos_sups = oracle_log_sups(synth("cosine", lam=1.0), K, 16)
    rep = check_algebra(cos_sups, cos_sups, 2.0, 1.0, 0.5)
    assert rep["c_h"] == pytest.approx(0.5**2.0)  # h**(2**(sigma-1)) branch
    assert rep["holds"]


@pytest.mark.parametrize("h", [0.25, 0.5, 1.0, 2.0, 4.0])
@pytest.mark.parametrize("tau,sigma", [(0.25, 9 / 8), (1.0, 2.0), (4.0, 3.0)])
def test_algebra_catalog_pair(h, tau, sigma):
    phi = oracle_log_sups(synth("gaussian", width=0.05), K, 20)
    psi = oracle_log_sups(synth("cosine", lam=40.0), K, 20)
    assert check_algebra(phi, psi, sigma, tau, h)["holds"]


def test_leibniz_product_needs_common_region():
    phi = oracle_log_sups(synth("gaussian", width=0.05), K, 8)
    psi = oracle_log_sups(synth("gaussian", width=0.05), (0.4, 0.6), 8)
    with pytest.raises(ValueError):
        leibniz_product_sups(phi, psi)


# ---------------------------------------------------------------------------
# Infinite-order operators
# ---------------------------------------------------------------------------


def test_operator_identity_preserves_spectrum():
    sig = synth_prescribed_decay(ClassParams(1.0, 2.0), seed=4)
    spec = forward_transform(sig)
    law = CoefficientLaw(1.0, 1.0, ClassParams(1.0, 2.0))
    out, rep = apply_ultradiff_operator(spec, law, truncation=0)
    assert rep.truncation == 0
    np.testing.assert_allclose(out.values, spec.values, rtol=0, atol=1e-14)


def test_operator_small_l_matches_direct_differentiation():
    sig = synth("gaussian", width=0.06)
    spec = forward_transform(sig)
    params = ClassParams(1.0, 2.0)
    law = CoefficientLaw(1.0, 1e-3, params)
    out, rep = apply_ultradiff_operator(spec, law)
    assert rep.truncation <= 2
    back = inverse_transform(out)
    coeffs = law.coefficients(rep.truncation)
    x, dx = sig.x, sig.spacing[0]
    direct = coeffs[0] * sig.samples
    if rep.truncation >= 1:
        direct = direct + coeffs[1] * np.gradient(sig.samples, dx)
    if rep.truncation >= 2:
        direct = direct + coeffs[2] * np.gradient(np.gradient(sig.samples, dx), dx)
    sel = (x > 0.1) & (x < 0.9)
    scale = np.abs(direct[sel]).max()
    assert np.max(np.abs(back.samples[sel] - direct[sel])) <= 1e-3 * scale


def test_operator_refuses_truncation_past_cap():
    sig = synth_prescribed_decay(ClassParams(1.0, 2.0), seed=4)
    spec = forward_transform(sig)
    law = CoefficientLaw(1.0, 1.0, ClassParams(1.0, 2.0))
    with pytest.raises(ValueError, match="cap"):
        apply_ultradiff_operator(spec, law, truncation=12, p_cap=8)


@pytest.mark.parametrize("tau0,sigma0", [(1.0, 2.0), (2.0, 2.0), (1.0, 3.0)])
def test_operator_mapping_bound(tau0, sigma0):
    params = ClassParams(tau0, sigma0)
    sig = synth_prescribed_decay(params, seed=1)
    spec = forward_transform(sig)
    in_sups = oracle_log_sups(sig, K, 120, band_extension=None)
    law = CoefficientLaw(1.0, 1.0, params)
    out, rep = apply_ultradiff_operator(spec, law, input_sups=in_sups, fit_p_range=(2, 100))
    assert rep.dropped_tail_ratio <= 1e-12
    target = tau0 * 2.0 ** (sigma0 - 1.0)
    assert rep.fit_out.feasible
    assert rep.fit_out.tau_hat <= target + 0.2
