import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restrict_lab.errors import InvalidInputError, ResourceError
from restrict_lab.exp_core import (CoefficientVector, PhaseSpec, PlateauCutoff, build_grid,
                                   build_local_grid, e, eval_sum, grid_for_variation, lp_norm,
                                   oscillatory_integral, plateau)
from restrict_lab.spectral import dense_gram

CUBIC = PhaseSpec.monomial(3, -1.0)


def mp_sum(coeffs, lo, k, beta, x, dps=40):
    """Direct summation in arbitrary precision."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        total = mpmath.mpc(0)
        for j, a in enumerate(coeffs):
            n = lo + j
            total += mpmath.mpc(a) * mpmath.expjpi(2 * (n * x + beta * n * n * x ** k))
        return complex(total)


def test_e_convention():
    assert e(0.0) == 1
    assert abs(e(0.25) - 1j) < 1e-15
    assert abs(e(1e9 + 0.5) + 1) < 1e-6


def test_eval_sum_single_constant_term():
    a = CoefficientVector.single(0)
    assert eval_sum(a, CUBIC, [0.37])[0] == pytest.approx(1.0, abs=1e-15)


def test_eval_sum_pair_at_origin():
    a = CoefficientVector(-1, 1, [1, 0, 1])
    assert eval_sum(a, CUBIC, [0.0])[0] == pytest.approx(2.0, abs=1e-15)


def test_eval_sum_matches_arbitrary_precision_oracle():
    a = CoefficientVector.constant(-8, 8)
    got = eval_sum(a, CUBIC, [0.5])[0]
    want = mp_sum([1] * 17, -8, 3, -1, mpmath.mpf(1) / 2)
    assert abs(got - want) < 1e-12


@pytest.mark.parametrize("k,beta", [(2, -1.0), (3, -1.0 / 3), (4, 0.7)])
def test_eval_sum_random_against_oracle(k, beta):
    rng = np.random.default_rng(k)
    a = CoefficientVector.random_unit(-20, 25, rng)
    xs = rng.uniform(-1, 1, 5)
    got = eval_sum(a, PhaseSpec.monomial(k, beta), xs)
    for x, g in zip(xs, got):
        assert abs(g - mp_sum(a.values, -20, k, beta, x)) < 1e-12


def test_eval_sum_general_phase_matches_monomial():
    phase = PhaseSpec.general(lambda x: x ** 3, [lambda x: 3 * x ** 2, lambda x: 6 * x,
                                                 lambda x: 6 + 0 * x, lambda x: 0 * x], k=3)
    a = CoefficientVector.random_unit(-30, 30, 1)
    xs = np.linspace(-1, 1, 17)
    assert np.max(np.abs(eval_sum(a, phase, xs) - eval_sum(a, CUBIC, xs))) < 1e-11


def test_eval_sum_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        eval_sum(CoefficientVector(0, 1, [1, np.nan]), CUBIC, [0.1])
    with pytest.raises(InvalidInputError):
        eval_sum(CoefficientVector.single(0), CUBIC, [np.inf])


def test_coefficient_vector_norm_and_validation():
    a = CoefficientVector(2, 4, [3, 4j, 0])
    assert a.norm == pytest.approx(5.0, rel=1e-14)
    assert list(a.indices) == [2, 3, 4]
    with pytest.raises(ValueError):
        a.values[0] = 1
    with pytest.raises(InvalidInputError):
        CoefficientVector(0, 3, [1, 2])


@given(st.integers(-50, 50), st.lists(st.complex_numbers(max_magnitude=1e3,
                                                         allow_nan=False), min_size=1,
                                      max_size=40))
def test_cached_norm_matches_recomputation(lo, vals):
    a = CoefficientVector.from_values(lo, vals)
    again = math.sqrt(sum(abs(v) ** 2 for v in vals))
    assert a.norm == pytest.approx(again, rel=1e-14, abs=1e-300)


def test_build_grid_constant_integrand_floor():
    g = build_grid(CUBIC, 0, (-1, 1), 8.0)
    assert g.size >= 64
    assert abs(g.weights.sum() - 2.0) < 1e-14


def test_build_grid_node_count_rule():
    g = build_grid(CUBIC, 100, (-1, 1), 8.0)
    assert g.size >= 8 * 2 * (100 + 3 * 100 ** 2)
    assert g.size >= 481_600
    assert abs(g.weights.sum() - 2.0) <= 1e-12 * 2


def test_build_grid_resource_limit_names_count():
    with pytest.raises(ResourceError) as info:
        build_grid(CUBIC, 1000, (-1, 1), 8.0, max_nodes=10_000)
    assert info.value.required > 10_000
    assert str(info.value.required) in str(info.value)


def test_build_grid_rejects_small_rho_and_bad_interval():
    with pytest.raises(InvalidInputError):
        build_grid(CUBIC, 4, (-1, 1), 2.0)
    with pytest.raises(InvalidInputError):
        build_grid(CUBIC, 4, (1, 1), 8.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 300), st.integers(2, 6),
       st.floats(-1, 0.9), st.floats(0.05, 1.0), st.floats(4, 16))
def test_grid_certification_invariants(N, k, a, width, rho):
    b = min(1.0, a + width)
    phase = PhaseSpec.monomial(k)
    g = build_grid(phase, N, (a, b), rho)
    assert g.size >= rho * g.max_phase_variation
    assert g.size >= 64
    assert abs(g.weights.sum() - (b - a)) <= 1e-12 * (b - a)
    assert g.max_phase_variation >= phase.frequency_bound(N, (a, b)) * (b - a) * (1 - 1e-12)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_local_grid_resolves_like_uniform(k):
    phase = PhaseSpec.monomial(k)
    a = CoefficientVector.random_unit(-24, 24, 3)
    u = lp_norm(a, phase, 2, (-1, 1), build_grid(phase, 24, (-1, 1), 8))
    loc = lp_norm(a, phase, 2, (-1, 1), build_local_grid(phase, 24, (-1, 1), 8))
    assert abs(u - loc) <= 1e-12 * u


def test_refining_rho_changes_l2_mass_little():
    a = CoefficientVector.random_unit(-32, 32, 7)
    m1 = lp_norm(a, CUBIC, 2, (-1, 1), build_grid(CUBIC, 32, (-1, 1), 8)) ** 2
    m2 = lp_norm(a, CUBIC, 2, (-1, 1), build_grid(CUBIC, 32, (-1, 1), 16)) ** 2
    assert abs(m1 - m2) <= 1e-8 * m1


def test_lp_norm_single_character():
    a = CoefficientVector.single(5, 3.0)
    g = build_grid(CUBIC, 5, (-1, 1))
    assert lp_norm(a, CUBIC, 2, (-1, 1), g) == pytest.approx(3 * math.sqrt(2), abs=1e-10)


def test_lp_norm_squared_is_gram_quadratic_form():
    a = CoefficientVector.random_unit(-16, 16, 11)
    g = build_grid(CUBIC, 16, (-1, 1))
    G = dense_gram(16, CUBIC, (-1, 1), grid=g)
    q = G.quadratic_form(a.values).real
    assert lp_norm(a, CUBIC, 2, (-1, 1), g) ** 2 == pytest.approx(q, rel=1e-8)


def test_lp_norm_p4_refinement():
    a = CoefficientVector.constant(0, 4)
    n1 = lp_norm(a, CUBIC, 4, (-1, 1), build_grid(CUBIC, 4, (-1, 1), 8))
    n2 = lp_norm(a, CUBIC, 4, (-1, 1), build_grid(CUBIC, 4, (-1, 1), 16))
    assert abs(n1 - n2) <= 1e-6 * n1


def test_lp_norm_grid_mismatch():
    g = build_grid(CUBIC, 4, (0, 1))
    with pytest.raises(InvalidInputError):
        lp_norm(CoefficientVector.single(0), CUBIC, 2, (-1, 1), g)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=5, allow_nan=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False))
def test_eval_sum_is_linear(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    a = CoefficientVector.random_unit(-12, 12, rng)
    b = CoefficientVector.random_unit(-12, 12, rng)
    ab = CoefficientVector(-12, 12, alpha * a.values + beta * b.values)
    x = rng.uniform(-1, 1, 9)
    lhs = eval_sum(ab, CUBIC, x)
    rhs = alpha * eval_sum(a, CUBIC, x) + beta * eval_sum(b, CUBIC, x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + abs(alpha) + abs(beta)) * 25


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([3, 5, 7]))
def test_odd_degree_conjugation_symmetry(seed, k):
    rng = np.random.default_rng(seed)
    a = CoefficientVector(-10, 10, rng.standard_normal(21))
    phase = PhaseSpec.monomial(k)
    x = rng.uniform(0, 1, 7)
    assert np.max(np.abs(eval_sum(a, phase, -x) - np.conj(eval_sum(a, phase, x)))) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 24), st.sampled_from([2, 3, 4]))
def test_trivial_l2_bounds(seed, N, k):
    phase = PhaseSpec.monomial(k)
    g = build_grid(phase, N, (-1, 1))
    a = CoefficientVector.random_unit(-N, N, np.random.default_rng(seed))
    assert lp_norm(a, phase, 2, (-1, 1), g) <= math.sqrt(2 * (2 * N + 1)) * a.norm * (1 + 1e-12)
    one = CoefficientVector.single(N, 2.5)
    assert lp_norm(one, phase, 2, (-1, 1), g) == pytest.approx(math.sqrt(2) * 2.5, rel=1e-12)


def test_plateau_shape():
    t = np.array([0.0, 0.1, 0.25, 0.5, 0.6, 1.0])
    v = plateau(t, 0.5)
    assert np.all(v[:3] == 1.0)
    assert v[3] == 0.0 and v[4] == 0.0 and v[5] == 0.0
    mid = plateau(np.linspace(0.25, 0.5, 50), 0.5)
    assert np.all(np.diff(mid) <= 0)


def test_oscillatory_integral_trivial_cases():
    g = grid_for_variation((0, 1), 1.0)
    assert oscillatory_integral(lambda x: 0 * x, None, (0, 1), g) == pytest.approx(1, abs=1e-14)
    assert abs(oscillatory_integral(lambda x: x, None, (0, 1), g)) < 1e-10


def test_oscillatory_integral_localized_refinement():
    n, m, k = 200, 100, 3
    x0 = (n + m) ** (-1.0 / (k - 1))
    cut = PlateauCutoff(x0, (n + m) ** (1.0 / (k - 1)))
    lo, hi = cut.support
    phi = lambda x: (n - m) * (x - (n + m) * x ** k / k)
    var = (n - m) * (1 + (n + m) * hi ** 2) * (hi - lo)
    i1 = oscillatory_integral(phi, cut, (lo, hi), grid_for_variation((lo, hi), var, 8))
    i2 = oscillatory_integral(phi, cut, (lo, hi), grid_for_variation((lo, hi), var, 16))
    assert abs(i1 - i2) <= 1e-8 * abs(i1)


def test_oscillatory_integral_rejects_cutoff_outside():
    cut = PlateauCutoff(0.95, 2.0)
    g = grid_for_variation((0, 1), 1.0)
    with pytest.raises(InvalidInputError):
        oscillatory_integral(lambda x: x, cut, (0, 1), g)
