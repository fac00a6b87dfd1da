import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restrict_lab.asymptotics import (SUITES, PhaseProfile, StationaryModel, analytic_C_sta,
                                      binomial_P, correlation_d, correlation_matrix,
                                      correlation_report, default_C_k, derivative_test_check,
                                      finite_difference_check, fit_C_sta, near_far_split,
                                      no_cancellation_witness, nonstationary_scaled,
                                      partial_summation_bound, phase_profile_checks,
                                      profile_integral, profile_pairs, property_suite,
                                      row_sum_scaling, row_sum_target, sample_stationary_pairs,
                                      schur_witness, stationary_c, stationary_matrix, v1_norm)
from restrict_lab.errors import InvalidInputError
from restrict_lab.spectral import ttstar_bound

C_STA = 0.5 + 0.5j


def _model(N=128, k=3, C_k=0.5):
    return StationaryModel(k, N, C_STA, C_k)


def test_stationary_c_diagonal_and_threshold():
    m = _model()
    assert stationary_c(100, 100, m) == 0
    thr = m.threshold
    assert stationary_c(100, 100 + math.floor(thr) - (1 if thr == int(thr) else 0), m) == 0
    assert stationary_c(100, 100 + math.ceil(thr), m) != 0


def test_stationary_c_outside_block():
    with pytest.raises(InvalidInputError):
        stationary_c(10, 100, _model())


@settings(max_examples=50, deadline=None)
@given(st.integers(64, 128), st.integers(64, 128), st.sampled_from([3, 4]))
def test_stationary_c_hermitian_and_magnitude_law(n, m, k):
    model = _model(128, k)
    c = stationary_c(n, m, model)
    assert c == np.conj(stationary_c(m, n, model))
    if c != 0:
        mag = abs(c) * abs(n - m) ** 0.5 * (n + m) ** (1 / (2 * (k - 1)))
        assert mag == pytest.approx(abs(C_STA), rel=1e-13)


def test_stationary_matrix_matches_pointwise():
    model = _model(64)
    c = stationary_matrix(model)
    assert c.hermitian_defect() == 0.0
    lo = model.block[0]
    for n, m in [(40, 60), (60, 33), (50, 52), (64, 32)]:
        assert c.entries[n - lo, m - lo] == pytest.approx(stationary_c(n, m, model), abs=1e-15)


def test_model_validation():
    with pytest.raises(InvalidInputError):
        StationaryModel(3, 64, 0j)
    with pytest.raises(InvalidInputError):
        StationaryModel(3, 64, C_STA, 1.0)


def test_correlation_d_hermitian_and_matches_matrix():
    model = _model(48)
    d = correlation_matrix(model)
    lo = model.block[0]
    for n, m in [(30, 44), (25, 47), (40, 40)]:
        a = correlation_d(n, m, model)
        assert a == pytest.approx(np.conj(correlation_d(m, n, model)), abs=1e-14)
        assert d.entries[n - lo, m - lo] == pytest.approx(a, abs=1e-12)


def test_correlation_d_range_check():
    with pytest.raises(InvalidInputError):
        correlation_d(30, 40, _model(48), (0, 48))


def test_ttstar_is_sqrt_row_sum():
    model = _model(128)
    c = stationary_matrix(model)
    d = correlation_matrix(model, c)
    row = np.abs(c.entries @ c.entries).sum(axis=1).max()
    assert ttstar_bound(c) == pytest.approx(math.sqrt(row), rel=1e-12)
    assert abs(d.entries - d.entries.conj().T).max() == 0


def test_correlation_bands_stable():
    reps = [correlation_report(N, 3) for N in (128, 256, 512)]
    for a, b in zip(reps, reps[1:]):
        assert 0.5 <= b.near_max / a.near_max <= 2
        assert 0.5 <= b.far_max / a.far_max <= 2
        assert b.ttstar ** 2 == pytest.approx(
            np.abs(correlation_matrix(StationaryModel(3, b.N, analytic_C_sta(3))).entries)
            .sum(axis=1).max(), rel=1e-10)


def test_row_sum_scaling_input_and_target():
    assert row_sum_target(3) == pytest.approx(1 / 3)
    with pytest.raises(InvalidInputError):
        row_sum_scaling(3, [128, 64])
    rows = row_sum_scaling(3, [64, 128])
    assert [r[0] for r in rows] == [64, 128] and rows[1][1] > rows[0][1]


def test_schur_witness_band():
    vals = [schur_witness(N, 3) for N in (128, 256, 512)]
    assert max(vals) / min(vals) <= 2


def test_near_far_split_k3():
    assert near_far_split(512, 3) == pytest.approx(512 ** (5 / 6))


def test_binomial_P_identity():
    t = np.linspace(-0.5, 0.5, 11)
    for k in (2, 3, 5):
        assert np.allclose(binomial_P(t, k), ((1 + t) ** k - 1 - k * t) / k, atol=1e-15)


def test_quadratic_profile_integral_matches_stationary_constant():
    for k in (3, 4):
        for lam in (100.0, 400.0, 1600.0):
            v = abs(profile_integral(lam, k, quadratic=True))
            assert v == pytest.approx(abs(analytic_C_sta(k)) / math.sqrt(lam), rel=0.1)


def test_fit_C_sta_needs_two_pairs():
    with pytest.raises(InvalidInputError):
        fit_C_sta(256, 3, [(10, 200)])
    with pytest.raises(InvalidInputError):
        fit_C_sta(256, 3, [(10, 12), (10, 200)])


def test_fit_C_sta_stable_and_residual_bounded():
    f256 = fit_C_sta(256, 3, sample_stationary_pairs(256, 3, 30, seed=1))
    f512 = fit_C_sta(512, 3, sample_stationary_pairs(512, 3, 30, seed=1))
    assert abs(f512.C_sta - f256.C_sta) <= 0.02 * abs(f256.C_sta)
    assert f512.max_scaled_residual <= 1.0
    assert np.max(f512.scaled_residuals) == pytest.approx(f512.max_scaled_residual)
    assert abs(f512.C_sta) == pytest.approx(abs(analytic_C_sta(3)), rel=0.05)


def test_nonstationary_remainder_bounded():
    pairs = sample_stationary_pairs(256, 3, 10, seed=2)
    assert nonstationary_scaled(256, 3, pairs) <= 2.0


def test_sample_pairs_respect_threshold():
    for n, m in sample_stationary_pairs(512, 3, 50, seed=0):
        assert abs(n - m) >= 512 ** 0.5


@settings(max_examples=60, deadline=None)
@given(st.integers(200, 5000), st.integers(1, 500), st.sampled_from([3, 4, 5]))
def test_profile_closed_form_identities(n, gap, k):
    m = n + gap
    prof = PhaseProfile(n, m, k)
    assert abs(prof.f(n) - prof.f(m)) <= 1e-12 * max(1.0, abs(prof.f(n)))
    # stay away from the zero of f' between n and m
    x = np.concatenate([np.linspace(0.6 * n, 0.9 * n, 4), m + np.linspace(0.1, 0.4, 4) * n])
    e1, e2 = finite_difference_check(prof, x, h=1e-4 * n)
    assert e1 <= 1e-6 and e2 <= 1e-6


def test_profile_critical_point_between():
    prof = PhaseProfile(300, 340, 3)
    x0 = prof.critical_point()
    assert 300 < x0 < 340
    assert abs(prof.df(x0)) < 1e-12


def test_phase_profile_bands():
    for k in (3, 4):
        r1, r2 = [], []
        for N in (256, 512, 1024):
            for n, m in profile_pairs(N, k):
                rep = phase_profile_checks(n, m, k, N)
                assert rep.endpoint_gap <= 1e-12 * N
                r1 += [rep.r1_min, rep.r1_max]
                r2 += [rep.r2_min, rep.r2_max]
        assert max(r1) / min(r1) <= 8
        assert max(r2) / min(r2) <= 8


def test_phase_profile_rejects_bad_pairs():
    with pytest.raises(InvalidInputError):
        phase_profile_checks(10, 20, 3, 256)
    with pytest.raises(InvalidInputError):
        phase_profile_checks(250, 240, 3, 256)


def test_default_C_k():
    assert default_C_k(3) == pytest.approx(1 - 1 / 30)


def test_no_cancellation_near_split():
    N, k = 4096, 3
    gap = int(round(near_far_split(N, k)))
    n = N - gap - 10
    assert no_cancellation_witness(n, n + gap, k) >= 0.5


def test_first_derivative_linear_phase():
    r = derivative_test_check(1, lambda x: 0.01 * x, (1, 1000), 0.01,
                              df=lambda x: np.full_like(x, 0.01))
    assert r.lhs <= 1 / (2 * math.sin(math.pi * 0.01)) + 1e-9
    assert r.ratio <= 1


def test_second_derivative_quadratic_phase():
    T = 1e4
    r = derivative_test_check(2, lambda x: x * x / (2 * T), (1, 1000), 1 / T)
    assert r.ratio <= 10


def test_derivative_preconditions():
    with pytest.raises(InvalidInputError):
        derivative_test_check(1, lambda x: 0 * x, (1, 100), 0.01)
    with pytest.raises(InvalidInputError):
        derivative_test_check(1, lambda x: 0.01 * x, (1, 1), 0.01)
    with pytest.raises(InvalidInputError):
        derivative_test_check(1, lambda x: 0.9 * x, (1, 100), 0.9)
    with pytest.raises(InvalidInputError):
        derivative_test_check(3, lambda x: x, (1, 100), 0.1)


def test_v1_norm_examples():
    assert v1_norm(np.ones(10)) == 1.0
    w = np.array([1.0, 2.0, 5.0, 6.0])
    assert v1_norm(w) == pytest.approx(6 + (6 - 1))
    assert v1_norm([]) == 0.0


def test_partial_summation_constant_weights():
    f = np.random.default_rng(0).random(50)
    r = partial_summation_bound(np.ones(50), f)
    assert r.v1 == 1.0
    assert r.lhs <= r.rhs + 1e-12


def test_partial_summation_shape_mismatch():
    with pytest.raises(InvalidInputError):
        partial_summation_bound(np.ones(3), np.zeros(4))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=60), st.integers(0, 2**31))
def test_partial_summation_inequality(w, seed):
    f = np.random.default_rng(seed).random(len(w))
    r = partial_summation_bound(np.array(w), f)
    assert r.lhs <= r.rhs * (1 + 1e-12) + 1e-12


@pytest.mark.parametrize("name", SUITES)
def test_property_suites(name):
    res = property_suite(name, trials=300, seed=3)
    assert res.passed, res
    assert res.trials == 300


def test_property_suite_unknown():
    with pytest.raises(InvalidInputError):
        property_suite("nope")
