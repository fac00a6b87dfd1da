import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restrict_lab.errors import ConvergenceError, InvalidInputError, ResourceError
from restrict_lab.exp_core import PhaseSpec, build_grid
from restrict_lab.spectral import (KernelMatrix, dense_gram, gram_blocks, gram_entry,
                                   opnorm_assembled, opnorm_dense, opnorm_iterative,
                                   quadratic_gram, quadratic_phase_integral, rayleigh_ratio,
                                   schur_bound, ttstar_bound)

CUBIC = PhaseSpec.monomial(3)


def test_gram_entry_diagonal_and_symmetry():
    g = build_grid(CUBIC, 10, (-1, 1))
    assert gram_entry(4, 4, CUBIC, (-1, 1), g) == pytest.approx(2.0, abs=1e-14)
    rng = np.random.default_rng(0)
    for n, m in rng.integers(-10, 11, size=(20, 2)):
        assert abs(gram_entry(n, m, CUBIC, (-1, 1), g)
                   - np.conj(gram_entry(m, n, CUBIC, (-1, 1), g))) < 1e-12


def test_gram_entry_refinement():
    g8 = build_grid(CUBIC, 1, (-1, 1), 8)
    g16 = build_grid(CUBIC, 1, (-1, 1), 16)
    assert abs(gram_entry(1, 0, CUBIC, (-1, 1), g8) - gram_entry(1, 0, CUBIC, (-1, 1), g16)) < 1e-10


def test_dense_gram_trivial_and_hermitian():
    G0 = dense_gram(0, CUBIC)
    assert G0.entries.shape == (1, 1)
    assert G0.entries[0, 0] == pytest.approx(2.0, abs=1e-14)
    G = dense_gram(12, CUBIC)
    assert G.hermitian_defect() == 0.0
    assert np.allclose(np.diag(G.entries), 2.0, atol=1e-12)


def test_dense_gram_cap():
    with pytest.raises(ResourceError) as info:
        dense_gram(300, CUBIC)
    assert info.value.required == 601


def test_opnorm_dense_trivial():
    assert opnorm_dense(KernelMatrix(0, np.array([[2.0]]), "gram")).value == pytest.approx(
        math.sqrt(2), abs=1e-15)
    assert opnorm_dense(KernelMatrix(0, 2 * np.eye(7), "gram")).value == pytest.approx(
        math.sqrt(2), abs=1e-15)


def test_opnorm_dense_rejects_non_hermitian():
    with pytest.raises(InvalidInputError):
        opnorm_dense(KernelMatrix(0, np.array([[1, 1j], [1j, 1]]), "gram"))


def test_jacobi_eigenvalues_match_lapack():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    H = A + A.conj().T
    from restrict_lab.spectral import hermitian_eigenvalues
    ev, _, off = hermitian_eigenvalues(KernelMatrix(0, H, "gram"))
    assert np.max(np.abs(ev - np.linalg.eigvalsh(H))) < 1e-12 * np.abs(ev).max()


def test_opnorm_iterative_trivial():
    assert opnorm_iterative(0, CUBIC).value == pytest.approx(math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("method", ["lobpcg", "power_iteration"])
def test_opnorm_iterative_seed_invariance(method):
    kw = {"tol": 1e-10} if method == "lobpcg" else {"tol": 1e-7, "max_iter": 20000}
    a = opnorm_iterative(24, CUBIC, seed=1, method=method, **kw).value
    b = opnorm_iterative(24, CUBIC, seed=2, method=method, **kw).value
    assert abs(a - b) <= 1e-8 * a


def test_seed_invariance_at_48():
    a = opnorm_iterative(48, CUBIC, seed=1).value
    b = opnorm_iterative(48, CUBIC, seed=99).value
    assert abs(a - b) <= 1e-8 * a


def test_opnorm_iterative_convergence_error():
    with pytest.raises(ConvergenceError) as info:
        opnorm_iterative(40, CUBIC, tol=1e-14, max_iter=2)
    assert info.value.residual > 1e-14


@pytest.mark.parametrize("k", [2, 3, 4])
def test_three_methods_agree(k):
    phase = PhaseSpec.monomial(k)
    d = opnorm_dense(dense_gram(20, phase)).value
    assert abs(opnorm_iterative(20, phase).value - d) <= 1e-10 * d
    assert abs(opnorm_assembled(20, phase).value - d) <= 1e-10 * d


def test_asymmetric_interval_agrees():
    iv = (-0.5, 1.0)
    d = opnorm_dense(dense_gram(12, CUBIC, iv)).value
    assert abs(opnorm_iterative(12, CUBIC, iv).value - d) <= 1e-9 * d
    assert abs(opnorm_assembled(12, CUBIC, iv).value - d) <= 1e-9 * d


@pytest.mark.parametrize("k", [3, 4])
def test_folded_blocks_share_spectrum(k):
    phase = PhaseSpec.monomial(k)
    full = np.linalg.eigvalsh(dense_gram(9, phase).entries)
    parts = np.sort(np.concatenate([np.linalg.eigvalsh(B) for B in gram_blocks(9, phase)]))
    assert np.max(np.abs(full - parts)) < 1e-12


def test_quadratic_closed_form_matches_quadrature():
    phase = PhaseSpec.monomial(2)
    for iv in [(-1.0, 1.0), (-0.3, 0.8)]:
        Gq = quadratic_gram(12, phase, iv).entries
        Gd = dense_gram(12, phase, iv).entries
        assert np.max(np.abs(Gq - Gd)) < 1e-12


def test_quadratic_phase_integral_special_cases():
    assert quadratic_phase_integral(0.0, 0.0, -1, 1) == pytest.approx(2)
    assert abs(quadratic_phase_integral(3.0, 0.0, -1, 1)) < 1e-15
    # real Fresnel check: integral of cos(pi t^2 / 2) on [0, 1]
    v = quadratic_phase_integral(0.0, 0.25, 0.0, 1.0)
    assert v.real == pytest.approx(0.7798934003768228, abs=1e-14)


def test_opnorm_bounds_and_dominance():
    for k in (2, 3, 4):
        for N in (0, 4, 16):
            G = dense_gram(N, PhaseSpec.monomial(k))
            B = opnorm_dense(G).value
            assert math.sqrt(2) - 1e-12 <= B <= math.sqrt(2 * (2 * N + 1)) + 1e-12
            assert B ** 2 <= schur_bound(G) + 1e-8
            assert B ** 2 <= ttstar_bound(G) + 1e-8


def test_monotone_under_index_extension():
    for N in (8, 16, 24):
        b0 = opnorm_dense(dense_gram(N, CUBIC)).value
        b1 = opnorm_dense(dense_gram(N + 8, CUBIC)).value
        assert b1 >= b0 - 1e-12


def test_schur_examples():
    assert schur_bound(np.zeros((3, 3))) == 0
    assert schur_bound(np.eye(4)) == 2


def test_ttstar_examples():
    assert ttstar_bound(np.eye(5)) == 1
    assert ttstar_bound(np.zeros((2, 2))) == 0
    with pytest.raises(InvalidInputError):
        ttstar_bound(np.array([[0, 1], [0, 0]]))


def _hermitian(seed, L):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
    return A + A.conj().T, rng


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_spectral_bounds_dominate_rayleigh(seed, L):
    C, rng = _hermitian(seed, L)
    s, t = schur_bound(C), ttstar_bound(C)
    for _ in range(10):
        a = rng.standard_normal(L) + 1j * rng.standard_normal(L)
        r = rayleigh_ratio(C, a)
        assert r <= s * (1 + 1e-12) + 1e-12
        assert r <= t * (1 + 1e-12) + 1e-12


def test_schur_random_hermitian_8x8():
    C, rng = _hermitian(8, 8)
    bound = schur_bound(C)
    for _ in range(100):
        a = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        assert rayleigh_ratio(C, a) <= bound


def test_kernel_matrix_validation():
    with pytest.raises(InvalidInputError):
        KernelMatrix(0, np.ones((2, 3)), "gram")
    with pytest.raises(InvalidInputError):
        KernelMatrix(0, np.eye(2), "other")
