"""Certificate and enumeration tests for the weight-sequence module."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlreg.msequence import (
    EnumMap,
    Profile,
    associated_weight,
    associated_weight_many,
    certify_m1,
    certify_m2_tilde,
    certify_m2_tilde_prime,
    certify_m3_prime,
    certify_stirling_bounds,
    enumerate_profile,
    floor_power,
    log_m,
    log_m_array,
)
from mlreg.params import ClassParams

GRID = [
    ClassParams(tau, sigma)
    for tau in (0.25, 0.5, 1.0, 2.0, 4.0)
    for sigma in (9 / 8, 1.5, 2.0, 3.0)
]


def test_log_m_base_cases():
    p = ClassParams(1.0, 2.0)
    assert log_m(p, 0) == 0.0
    assert log_m(p, 1) == 0.0
    assert log_m(ClassParams(3.7, 1.2), 1) == 0.0
    assert log_m(p, 2) == pytest.approx(4.0 * math.log(2.0), rel=1e-15)


def test_log_m_monotone_in_parameters():
    for p in (2, 5, 17):
        assert log_m(ClassParams(1.0, 2.0), p) < log_m(ClassParams(1.5, 2.0), p)
        assert log_m(ClassParams(1.0, 2.0), p) < log_m(ClassParams(1.0, 2.5), p)
    # parameter-independent at p in {0, 1}
    assert log_m(ClassParams(0.3, 1.1), 1) == log_m(ClassParams(4.0, 3.0), 1)


def test_floor_power_snaps_exact_integers():
    assert floor_power(4, 1.5) == 8
    assert floor_power(9, 2.0) == 81
    assert floor_power(2, 1.5) == 2  # 2.828... floors to 2
    assert floor_power(3, 9 / 8) == 3  # 3.44 floors to 3


def test_m1_margin_at_p2():
    # slack at p = 2 for tau=1, sigma=2: ln M_1 + ln M_3 - 2 ln M_2
    expected = 0.0 + 9.0 * math.log(3.0) - 2.0 * 4.0 * math.log(2.0)
    p = ClassParams(1.0, 2.0)
    slack = log_m(p, 1) + log_m(p, 3) - 2.0 * log_m(p, 2)
    assert slack == pytest.approx(expected, rel=1e-14)
    assert expected > 0
    cert = certify_m1(p, 200)
    assert cert.holds and cert.margin >= 0.0


@pytest.mark.parametrize("params", GRID, ids=str)
def test_m1_holds_on_grid(params):
    cert = certify_m1(params, 200)
    assert cert.holds
    assert cert.margin >= -1e-9


def test_m2_tilde_prime_minimal_c1_is_16():
    cert = certify_m2_tilde_prime(ClassParams(1.0, 2.0), q_max=3, p_max=200)
    c_q = cert.constants["C_q"]
    assert c_q[0] == pytest.approx(1.0, abs=1e-12)
    assert c_q[1] == pytest.approx(16.0, rel=1e-12)  # active at p = 1: M_2 <= C_1 M_1
    assert np.all(c_q >= 1.0)
    assert cert.holds


def test_m2_tilde_prime_rejects_bad_ranges():
    with pytest.raises(ValueError):
        certify_m2_tilde_prime(ClassParams(1.0, 2.0), q_max=0, p_max=10)
    with pytest.raises(ValueError):
        certify_m2_tilde_prime(ClassParams(1.0, 2.0), q_max=1, p_max=0)


def test_m2_tilde_diagonal_constant_sigma2():
    # For sigma = 2 the (p, p) cells all force C = 4**tau exactly.
    for tau in (0.5, 1.0, 2.0):
        cert = certify_m2_tilde(ClassParams(tau, 2.0), 100)
        assert cert.constants["C"] == pytest.approx(4.0**tau, rel=1e-10)
        assert cert.holds
        assert cert.margin >= -1e-9


def test_m2_tilde_symmetric_margin():
    cert = certify_m2_tilde(ClassParams(1.0, 2.0), 50)
    assert cert.holds  # margin computed over the full square including p or q = 0


def test_m3_prime_trace_values():
    cert = certify_m3_prime(ClassParams(1.0, 2.0), 50)
    terms = cert.trace["terms"]
    assert terms[0] == pytest.approx(1.0)  # M_0 / M_1
    assert terms[1] == pytest.approx(1.0 / 16.0, rel=1e-14)
    assert terms[2] == pytest.approx(16.0 / 19683.0, rel=1e-13)
    partial = cert.trace["partial_sums"]
    assert partial[2] == pytest.approx(1.0633128843, rel=1e-9)
    # domination at p = 3: 16/19683 <= 6^{-2}
    assert math.exp(-cert.trace["log_dominating"][1] * -1.0) == pytest.approx(
        6.0**-2.0, rel=1e-12
    )
    assert cert.holds
    assert np.all(np.diff(partial) >= 0)
    assert partial[-1] <= cert.constants["sum_upper_bound"]
    assert math.isfinite(cert.constants["sum_upper_bound"])


@pytest.mark.parametrize("params", GRID, ids=str)
def test_m3_prime_holds_on_grid(params):
    cert = certify_m3_prime(params, 120)
    assert cert.holds
    assert np.isfinite(cert.constants["sum_upper_bound"])


def test_stirling_lower_bound_active_at_p1():
    upper, lower = certify_stirling_bounds(ClassParams(1.0, 2.0), 150)
    # p = 1 forces B >= 1; p = 2 only needs sqrt(24)/16.
    assert lower.constants["B"] >= 1.0
    assert math.sqrt(24.0) / 16.0 < 1.0
    assert lower.holds and upper.holds
    assert upper.constants["C"] == pytest.approx(math.exp(0.5), rel=1e-14)


@pytest.mark.parametrize("params", GRID, ids=str)
def test_stirling_holds_on_grid(params):
    upper, lower = certify_stirling_bounds(params, 150)
    assert upper.holds and lower.holds
    assert upper.margin >= -1e-9 and lower.margin >= -1e-9


@settings(max_examples=30, deadline=None)
@given(
    tau=st.floats(0.1, 8.0),
    sigma=st.floats(1.05, 3.5),
)
def test_certificates_hold_for_random_parameters(tau, sigma):
    params = ClassParams(tau, sigma)
    assert certify_m1(params, 60).holds
    assert certify_m2_tilde_prime(params, 10, 60).holds
    assert certify_m2_tilde(params, 30).holds
    assert certify_m3_prime(params, 60).holds
    upper, lower = certify_stirling_bounds(params, 60)
    assert upper.holds and lower.holds


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def _paper_style_profile(tau, sigma, h, xi):
    """ln of h^N * N^{(tau/sigma) N} / xi^{floor(N^{1/sigma})} at real N."""

    def logf(n):
        n = np.asarray(n, dtype=float)
        return (
            n * math.log(h)
            + (tau / sigma) * n * np.log(np.maximum(n, 1.0))
            - np.floor(n ** (1.0 / sigma)) * math.log(xi)
        )

    return logf


def test_enumerate_identity_is_noop():
    n = np.arange(1, 20)
    prof = Profile(n, np.log(1.0 / n), log_formula=lambda m: -np.log(m))
    out = enumerate_profile(prof, EnumMap.identity())
    np.testing.assert_allclose(out.log_values, prof.log_values, rtol=1e-14)
    assert not out.interpolated


def test_enumerate_scale_reindexes():
    n = np.arange(1, 10)
    prof = Profile(n, -(n**2.0), log_formula=lambda m: -(m**2.0))
    out = enumerate_profile(prof, EnumMap.scale(2.0))
    # value'(3) = value(6)
    assert out.log_values[2] == pytest.approx(-36.0)


def test_enumerate_reproduces_transformed_floor_exponent():
    tau, sigma, h, xi = 0.5, 2.0, 1.5, 40.0
    prof = Profile(
        np.arange(1, 30),
        _paper_style_profile(tau, sigma, h, xi)(np.arange(1, 30)),
        log_formula=_paper_style_profile(tau, sigma, h, xi),
    )
    out = enumerate_profile(prof, EnumMap.scale(1.0 / tau))
    n = np.arange(1, 30, dtype=float)
    expected_exponent = np.floor((n / tau) ** (1.0 / sigma))
    direct = (
        (n / tau) * math.log(h)
        + (tau / sigma) * (n / tau) * np.log(n / tau)
        - expected_exponent * math.log(xi)
    )
    np.testing.assert_allclose(out.log_values, direct, rtol=1e-12, atol=1e-12)


def test_enumerate_composition_associative():
    n = np.arange(1, 40)
    prof = Profile(n, np.sqrt(n), log_formula=lambda m: np.sqrt(m))
    m1 = EnumMap.scale(3.0)
    m2 = EnumMap.power(0.5, 1.25)
    twice = enumerate_profile(enumerate_profile(prof, m1), m2)
    composed = enumerate_profile(prof, m1.compose(m2))
    np.testing.assert_allclose(twice.log_values, composed.log_values, rtol=1e-13)


def test_enumerate_interpolation_is_flagged():
    n = np.arange(1, 50)
    prof = Profile(n, -np.log(n))  # samples only, no closed form
    out = enumerate_profile(prof, EnumMap.power(1.0, 0.9))  # stays inside the range
    assert out.interpolated
    # monotone interpolation of a monotone profile stays monotone
    assert np.all(np.diff(out.log_values) < 0)


def test_enumerate_rejects_nonmonotone_map():
    with pytest.raises(ValueError):
        EnumMap.scale(-1.0)
    with pytest.raises(ValueError):
        EnumMap.power(1.0, 0.0)


# ---------------------------------------------------------------------------
# Associated weight
# ---------------------------------------------------------------------------


def test_weight_zero_at_and_below_one():
    params = ClassParams(1.0, 2.0)
    assert associated_weight(params, 1.0) == 0.0
    assert associated_weight(params, 0.25) == 0.0


def test_weight_known_value():
    # t = e^4, tau=1, sigma=2: max over p of (4p - p^2 ln p) is at p=2.
    params = ClassParams(1.0, 2.0)
    candidates = [p * 4.0 - log_m(params, p) for p in range(0, 8)]
    expected = max(candidates)
    assert expected == pytest.approx(8.0 - 4.0 * math.log(2.0))
    assert associated_weight(params, math.exp(4.0)) == pytest.approx(expected, rel=1e-12)


def test_weight_matches_brute_force_scan():
    params = ClassParams(0.7, 1.6)
    for s in (0.5, 2.0, 5.0, 9.0, 14.0):
        t = math.exp(s)
        brute = max(p * s - log_m(params, p) for p in range(0, 4000))
        assert associated_weight(params, t) == pytest.approx(brute, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    t1=st.floats(0.5, 1e6),
    t2=st.floats(0.5, 1e6),
    tau=st.floats(0.2, 4.0),
    sigma=st.floats(1.1, 3.0),
)
def test_weight_monotone_in_t_and_tau(t1, t2, tau, sigma):
    lo, hi = sorted((t1, t2))
    p1 = ClassParams(tau, sigma)
    assert associated_weight(p1, lo) <= associated_weight(p1, hi) + 1e-12
    p2 = ClassParams(tau * 1.5, sigma)
    assert associated_weight(p2, hi) <= associated_weight(p1, hi) + 1e-12


def test_weight_vectorized_matches_scalar():
    params = ClassParams(1.0, 2.0)
    ts = np.array([0.3, 1.0, 5.0, 100.0, 1e8])
    vec = associated_weight_many(params, ts)
    for t, v in zip(ts, vec):
        assert v == pytest.approx(associated_weight(params, float(t)), rel=1e-13)


def test_weight_convex_in_log_t():
    params = ClassParams(0.5, 2.0)
    s = np.linspace(0.1, 30.0, 200)
    T = associated_weight_many(params, np.exp(s))
    second = np.diff(T, 2)
    assert np.all(second >= -1e-9)
