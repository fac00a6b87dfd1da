"""Constructive-interference coefficients and certified lower-bound ratios.

The one-variable construction expands psi(x, n) = n*x - n^2*phi(x) to second
order around (x_N, n0), where phi'(x_N) = 1/N makes the mixed derivative
psi_xn vanish, and cancels the n-dependent Taylor terms with the coefficient
phases.  On |x - x_N| <= Delta the active terms then add almost in phase.
The two-variable cylinder and moment-curve examples reuse the same data.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConvergenceError, InvalidInputError
from .exp_core import (DEFAULT_RHO, CoefficientVector, PhaseSpec, e, eval_sum,
                       grid_for_variation, build_local_grid, lp_norm, _GL_W, _GL_X)

DEFAULT_C_SMALL = 0.1
SET_NODES_PER_HALF_WIDTH = 64
CERTIFICATE_SAMPLES = 1025


def _phi_derivs(phase):
    """phi', phi'', phi''' for psi = n*x - n^2*phi(x)."""
    if phase.kind == "monomial_curve":
        if phase.linear_sign != 1 or phase.beta >= 0:
            raise InvalidInputError("construction needs psi = n*x - c*n^2*x^k with c > 0")
        c, k = -phase.beta, phase.k

        def d(j):
            coef = c * math.perm(k, j)
            return lambda x: coef * np.asarray(x, dtype=float) ** (k - j)

        return d(0), d(1), d(2), d(3)
    if phase.kind == "general_scalar":
        if len(phase.derivatives) < 3:
            raise InvalidInputError("general phases need phi', phi'', phi''' oracles")
        return (phase.phi,) + tuple(phase.derivatives[:3])
    raise InvalidInputError(f"construction is defined for one-variable phases, not {phase.kind}")


def critical_point(phase, N, tol=1e-12, max_steps=100):
    """Point x_N > 0 with phi'(x_N) = 1/N.

    Closed form (k c N)^(-1/(k-1)) for phi = c*x^k; Newton from that seed
    otherwise, with phi'(0) = ... = phi^(k-1)(0) = 0 and phi^(k)(0) != 0.

    Raises
    ------
    ConvergenceError
        If Newton has not reached |phi'(x) - 1/N| <= tol after max_steps.
    """
    if not N >= 1:
        raise InvalidInputError("N must be >= 1")
    k = phase.k
    if phase.kind == "monomial_curve":
        _phi_derivs(phase)
        return (k * (-phase.beta) * N) ** (-1.0 / (k - 1))
    _, d1, d2, _ = _phi_derivs(phase)
    x = (k * N) ** (-1.0 / (k - 1))
    target = 1.0 / N
    for step in range(max_steps):
        r = float(d1(x)) - target
        if abs(r) <= tol:
            return float(x)
        slope = float(d2(x))
        if slope == 0 or not math.isfinite(slope):
            break
        x -= r / slope
    r = float(d1(x)) - target
    if abs(r) <= tol:
        return float(x)
    raise ConvergenceError(f"Newton for phi'(x) = 1/N did not converge (residual {r:.3e})",
                           residual=abs(r), iterations=max_steps)


@dataclass(frozen=True)
class ConstructionParams:
    """Parameters of the one-variable interference construction.

    ``Delta = c_small * N^(-(k+1)/(3(k-1)))``, ``M = floor(N^((2k-1)/(3(k-1))))``,
    ``n0 = floor(N/2)``.
    """

    N: int
    k: int
    c_small: float
    x_N: float
    Delta: float
    M: int
    n0: int

    @classmethod
    def build(cls, phase, N, c_small=DEFAULT_C_SMALL):
        if int(N) != N or N < 2:
            raise InvalidInputError("N must be an integer >= 2")
        if not c_small > 0:
            raise InvalidInputError("c_small must be positive")
        N, k = int(N), phase.k
        M = block_half_width(N, k)
        n0 = N // 2
        if n0 + M > N or n0 - M < -N:
            raise InvalidInputError(f"block {n0}+-{M} leaves [-N, N] at N={N}")
        return cls(N, k, float(c_small), critical_point(phase, N), window_half_width(N, k, c_small),
                   M, n0)

    @property
    def active(self):
        return 2 * self.M + 1


def block_half_width(N, k):
    """floor(N^((2k-1)/(3(k-1)))), guarded against rounding at exact powers."""
    val = N ** ((2 * k - 1) / (3 * (k - 1)))
    M = math.floor(val)
    if M + 1 - val < 1e-9:
        M += 1
    return M


def window_half_width(N, k, c_small=DEFAULT_C_SMALL):
    return c_small * N ** (-(k + 1) / (3 * (k - 1)))


def psi_partials(phase, x, n):
    """Dict of closed-form partials of psi = n*x - n^2*phi(x)."""
    phi, d1, d2, d3 = _phi_derivs(phase)
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    return {
        "n": x - 2 * n * phi(x),
        "nn": -2 * phi(x) + 0 * n,
        "xn": 1 - 2 * n * d1(x),
        "xnn": -2 * d1(x) + 0 * n,
        "xxn": -2 * n * d2(x),
        "xxx": -n * n * d3(x),
    }


def taylor_remainders(phase, params):
    """Cubic Taylor remainder magnitudes on [x_N +- Delta] x [n0 +- M].

    Returns the three terms (1/2)|psi_xnn| Delta M^2, (1/2)|psi_xxn| Delta^2 M
    and (1/6)|psi_xxx| Delta^3 with sup norms over the box (monotone in each
    variable, so corners suffice).
    """
    xs = np.array([params.x_N - params.Delta, params.x_N + params.Delta])
    ns = np.array([params.n0 - params.M, params.n0 + params.M], dtype=float)
    X, Nn = np.meshgrid(xs, ns)
    P = psi_partials(phase, X, Nn)
    D, M = params.Delta, params.M
    return {
        "xnn": 0.5 * float(np.max(np.abs(P["xnn"]))) * D * M * M,
        "xxn": 0.5 * float(np.max(np.abs(P["xxn"]))) * D * D * M,
        "xxx": float(np.max(np.abs(P["xxx"]))) * D ** 3 / 6.0,
    }


def _quadratic_modulation(phase, x0, n0, n):
    P = psi_partials(phase, x0, n0)
    j = np.asarray(n, dtype=float) - n0
    return P["n"] * j + 0.5 * P["nn"] * j * j


def interference_coefficients(params, phase):
    """Unimodular coefficients on |n - n0| <= M cancelling the n-Taylor terms.

    a_n = e(-psi_n(x_N, n0)(n - n0) - psi_nn(x_N, n0)(n - n0)^2 / 2).
    """
    n = np.arange(params.n0 - params.M, params.n0 + params.M + 1)
    vals = e(-_quadratic_modulation(phase, params.x_N, params.n0, n))
    return CoefficientVector(int(n[0]), int(n[-1]), vals)


@dataclass(frozen=True)
class InterferenceSet:
    """Box of half-widths around a center; ``coords`` names the variables."""

    dimension: int
    center: tuple
    half_widths: tuple
    coords: tuple = ("x",)

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise InvalidInputError("dimension must be 1, 2 or 3")
        if len(self.center) != self.dimension or len(self.half_widths) != self.dimension:
            raise InvalidInputError("center and half_widths must match the dimension")
        if not all(h > 0 for h in self.half_widths):
            raise InvalidInputError("half-widths must be positive")

    @property
    def measure(self):
        return float(np.prod([2.0 * h for h in self.half_widths]))

    def bounds(self, axis=0):
        c, h = self.center[axis], self.half_widths[axis]
        return (c - h, c + h)

    def shifted(self, offset):
        offset = np.broadcast_to(np.asarray(offset, dtype=float), (self.dimension,))
        return InterferenceSet(self.dimension, tuple(np.add(self.center, offset)),
                               self.half_widths, self.coords)


def interference_window(params):
    return InterferenceSet(1, (params.x_N,), (params.Delta,))


def _set_grid(lo, hi, frequency, rho=DEFAULT_RHO):
    return grid_for_variation((lo, hi), frequency * (hi - lo), rho,
                              min_nodes=2 * SET_NODES_PER_HALF_WIDTH)


def lower_bound_ratio(a, phase, p, iset, rho=DEFAULT_RHO):
    """(integral over the set of |S|^p)^(1/p) / |a|_2 for a one-variable set.

    Never exceeds the full-interval L^p / l^2 ratio when the set lies in the
    integration domain.
    """
    if iset.dimension != 1:
        raise InvalidInputError("lower_bound_ratio integrates one-variable sets")
    lo, hi = iset.bounds()
    Nmax = max(abs(a.lo), abs(a.hi))
    freq = phase.frequency_bound(Nmax, (lo, hi))
    grid = _set_grid(lo, hi, freq, rho)
    return lp_norm(a, phase, p, (lo, hi), grid) / a.norm


@dataclass(frozen=True)
class Certificate:
    """Outcome of sampling |S| over an interference set."""

    min_abs: float
    active: int
    threshold: float
    passed: bool

    @property
    def relative(self):
        return self.min_abs / self.active if self.active else float("nan")


def interference_certificate(a, phase, iset, threshold=0.8, samples=CERTIFICATE_SAMPLES):
    """Min of |S| over a uniform sampling of the set (endpoints included).

    Passes when the minimum is at least ``threshold`` times the number of
    nonzero coefficients.
    """
    if iset.dimension != 1:
        raise InvalidInputError("use the two-variable constructions for 2D sets")
    lo, hi = iset.bounds()
    x = np.linspace(lo, hi, samples)
    m = float(np.min(np.abs(eval_sum(a, phase, x))))
    active = int(np.count_nonzero(a.values))
    return Certificate(m, active, float(threshold), m >= threshold * active)


@dataclass(frozen=True)
class InterferenceResult:
    params: ConstructionParams
    coefficients: CoefficientVector
    iset: InterferenceSet
    p: float
    ratio: float
    certificate: Certificate


def interference_experiment(N, k=3, p=2.0, c_small=DEFAULT_C_SMALL, phase=None, threshold=0.8):
    """Build the coefficients for N and measure the set-restricted ratio."""
    phase = phase or PhaseSpec.monomial(k, -1.0)
    params = ConstructionParams.build(phase, N, c_small)
    a = interference_coefficients(params, phase)
    iset = interference_window(params)
    ratio = lower_bound_ratio(a, phase, p, iset)
    cert = interference_certificate(a, phase, iset, threshold)
    return InterferenceResult(params, a, iset, float(p), ratio, cert)


def _gl_nodes(lo, hi, panels):
    edges = np.linspace(lo, hi, panels + 1)
    h = np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + 0.5 * h[:, None] * _GL_X[None, :]).ravel()
    w = (0.5 * h[:, None] * _GL_W[None, :]).ravel()
    return x, w


def _panels_for(frequency, width, rho=DEFAULT_RHO):
    need = max(2 * SET_NODES_PER_HALF_WIDTH, math.ceil(rho * frequency * width))
    return -(-need // 16)


@dataclass(frozen=True)
class TwoVariableResult:
    """Two-variable construction: coefficients, set, ratio and certificate."""

    N: int
    coefficients: np.ndarray
    index_lo: int
    iset: InterferenceSet
    p: float
    ratio: float
    certificate: Certificate


def cylinder_construction(N, c_small=DEFAULT_C_SMALL, threshold=0.8, samples=257):
    """Product coefficients a_{n,m} = a_n a_m for the cubic cylinder.

    Phase n*x + m*y - (n^2 + m^2) x^3.  With a_n from the one-variable data
    at (x_N, n0), the sum factorizes as S1(x) * T(x, y) with
    T = sum_m a_m e(m*x - m^2 x^3) e(m (y - x)).  The set is
    |x - x_N| <= Delta, |y - x| <= c_small * N^(-5/6), integrated in the
    sheared coordinates (x, w = y - x).
    """
    if N < 64:
        raise InvalidInputError("cylinder construction needs N >= 64")
    phase = PhaseSpec.monomial(3, -1.0)
    params = ConstructionParams.build(phase, N, c_small)
    a1 = interference_coefficients(params, phase)
    n = a1.indices.astype(float)
    Dw = c_small * N ** (-5.0 / 6.0)
    iset = InterferenceSet(2, (params.x_N, 0.0), (params.Delta, Dw), ("x", "y - x"))

    def S_grid(x, w):
        A = e(n[None, :] * x[:, None] - (n * n)[None, :] * x[:, None] ** 3) * a1.values[None, :]
        S1 = A.sum(axis=1)
        T = A @ e(n[:, None] * w[None, :])
        return S1[:, None] * T

    nmax = params.n0 + params.M
    fx = nmax + 3.0 * nmax ** 2 * (params.x_N + params.Delta) ** 2
    xq, wx = _gl_nodes(*iset.bounds(0), _panels_for(2 * fx, 2 * params.Delta))
    yq, wy = _gl_nodes(*iset.bounds(1), _panels_for(nmax, 2 * Dw))
    S = S_grid(xq, yq)
    integral = float(wx @ (np.abs(S) ** 2) @ wy)
    norm = a1.norm ** 2
    ratio = math.sqrt(integral) / norm
    xs = np.linspace(*iset.bounds(0), samples)
    ys = np.linspace(*iset.bounds(1), samples)
    mn = float(np.min(np.abs(S_grid(xs, ys))))
    active = a1.size ** 2
    cert = Certificate(mn, active, float(threshold), mn >= threshold * active)
    coeffs = np.outer(a1.values, a1.values)
    return TwoVariableResult(N, coeffs, a1.lo, iset, 2.0, ratio, cert)


def moment_curve_vN(N):
    return 2.0 / (3.0 * math.sqrt(N))


def theta_partials(v, n, vN):
    """Partials of theta(v, n) = n^2 v - n^3 v^3 + n^3 vN^3."""
    return {
        "n": 2 * n * v - 3 * n * n * v ** 3 + 3 * n * n * vN ** 3,
        "nn": 2 * v - 6 * n * v ** 3 + 6 * n * vN ** 3,
        "vn": 2 * n - 9 * n * n * v * v,
    }


def moment_curve_coefficients(N, c_small=DEFAULT_C_SMALL):
    """Coefficients on |n - n0| <= floor(N^(5/6)) for the moment-curve example.

    Combines the quadratic modulation of n*u - n^2 u^3 at (x_N, n0) with
    that of theta(v, n) at (v_N, n0), and restores the n^3 v_N^3 shift:
    a_n = e(-f1(n) - g1(n) + n^3 v_N^3).
    """
    phase = PhaseSpec.monomial(3, -1.0)
    params = ConstructionParams.build(phase, N, c_small)
    vN = moment_curve_vN(N)
    n = np.arange(params.n0 - params.M, params.n0 + params.M + 1)
    nf = n.astype(float)
    f1 = _quadratic_modulation(phase, params.x_N, params.n0, nf)
    T = theta_partials(vN, float(params.n0), vN)
    j = nf - params.n0
    g1 = T["n"] * j + 0.5 * T["nn"] * j * j
    vals = e(-f1 - g1 + nf ** 3 * vN ** 3)
    return params, CoefficientVector(int(n[0]), int(n[-1]), vals)


def moment_curve_construction(N, c_small=DEFAULT_C_SMALL, p=6.0, threshold=0.8, samples=257):
    """L^p ratio over |u - x_N| <= Delta, |v - v_N| <= c_small N^(-5/3).

    Works in u = x, v = y + x^3, where the phase is
    (n u - n^2 u^3) + (n^2 v - n^3 v^3).
    """
    if N < 64:
        raise InvalidInputError("moment-curve construction needs N >= 64")
    params, a = moment_curve_coefficients(N, c_small)
    vN = moment_curve_vN(N)
    Dv = c_small * N ** (-5.0 / 3.0)
    iset = InterferenceSet(2, (params.x_N, vN), (params.Delta, Dv), ("u", "v"))
    n = a.indices.astype(float)

    def S_grid(u, v):
        A = e(n[None, :] * u[:, None] - (n * n)[None, :] * u[:, None] ** 3) * a.values[None, :]
        B = e((n * n)[None, :] * v[:, None] - (n ** 3)[None, :] * v[:, None] ** 3)
        return A @ B.T

    nmax = n[-1]
    fu = nmax + 3.0 * nmax ** 2 * (params.x_N + params.Delta) ** 2
    fv = nmax ** 2 + 3.0 * nmax ** 3 * (vN + Dv) ** 2
    uq, wu = _gl_nodes(*iset.bounds(0), _panels_for(fu, 2 * params.Delta))
    vq, wv = _gl_nodes(*iset.bounds(1), _panels_for(fv, 2 * Dv))
    S = S_grid(uq, vq)
    integral = float(wu @ (np.abs(S) ** p) @ wv)
    ratio = integral ** (1.0 / p) / a.norm
    us = np.linspace(*iset.bounds(0), samples)
    vs = np.linspace(*iset.bounds(1), samples)
    mn = float(np.min(np.abs(S_grid(us, vs))))
    cert = Certificate(mn, a.size, float(threshold), mn >= threshold * a.size)
    return TwoVariableResult(N, a.values.copy(), a.lo, iset, float(p), ratio, cert)


@dataclass(frozen=True)
class ConstantCoeffResult:
    N: int
    k: int
    p: float
    full_ratio: float
    near_zero_ratio: float


def constant_coeff_ratio(N, k=3, p=4.0, rho=DEFAULT_RHO):
    """L^p / l^2 ratios for a_n = 1 on [-N, N]: over (-1, 1) and |x| <= 1/N."""
    if not p >= 2:
        raise InvalidInputError("p must be >= 2")
    if N < 1:
        raise InvalidInputError("N must be >= 1")
    phase = PhaseSpec.monomial(k, -1.0)
    a = CoefficientVector.constant(-N, N)
    grid = build_local_grid(phase, N, (-1.0, 1.0), rho)
    if k % 2 == 1:
        # |S(-x)| = |S(x)| for odd k and real symmetric coefficients
        x, w = grid.half()
        vals = np.abs(eval_sum(a, phase, x))
        full = (2.0 * float(np.dot(w, vals ** p))) ** (1.0 / p)
    else:
        full = lp_norm(a, phase, p, (-1.0, 1.0), grid)
    near_grid = build_local_grid(phase, N, (-1.0 / N, 1.0 / N), rho)
    near = lp_norm(a, phase, p, (-1.0 / N, 1.0 / N), near_grid)
    return ConstantCoeffResult(N, k, float(p), full / a.norm, near / a.norm)


def _lipschitz_basis(phi_x, x, lo, L, anchor=64):
    """E[q, j] = e((lo+j) phi(x_q) + (lo+j)^2 x_q), re-anchored every ``anchor`` steps."""
    E = np.empty((x.size, L), dtype=complex)
    step2 = e(2.0 * x)
    for j0 in range(0, L, anchor):
        n = lo + j0
        z = e(n * phi_x + float(n * n) * x)
        r = e(phi_x + float(2 * n + 1) * x)
        for j in range(j0, min(L, j0 + anchor)):
            E[:, j] = z
            z = z * r
            r = r * step2
    return E


@dataclass(frozen=True)
class LipschitzResult:
    N: int
    max_ratio: float
    sup_ratio: float
    trials: int
    ceiling: float


def lipschitz_l2_check(phi, N, trials=32, lipschitz=1.0, seed=0, rho=DEFAULT_RHO, chunk=16384):
    """Max over random unit a of |sum_{N/2<=n<=N} a_n e(n phi(x) + n^2 x)|_{L^2(-1,1)}.

    Also reports the exact supremum sqrt(lambda_max) of the assembled Gram
    matrix, which every trial ratio must respect.
    """
    if N < 2:
        raise InvalidInputError("N must be >= 2")
    lo, hi = N // 2, N
    L = hi - lo + 1
    variation = 2.0 * (lipschitz * hi + hi * hi)
    grid = grid_for_variation((-1.0, 1.0), variation, rho)
    G = np.zeros((L, L), dtype=complex)
    for s in range(0, grid.size, chunk):
        x = grid.nodes[s:s + chunk]
        E = _lipschitz_basis(np.asarray(phi(x), dtype=float), x, lo, L)
        W = grid.weights[s:s + chunk, None] * E
        G += W.T @ E.conj()
    G = 0.5 * (G + G.conj().T)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        a = rng.uniform(-1, 1, L) + 1j * rng.uniform(-1, 1, L)
        q = float(np.real(a @ G @ a.conj())) / float(np.vdot(a, a).real)
        best = max(best, math.sqrt(max(q, 0.0)))
    sup = math.sqrt(max(float(np.linalg.eigvalsh(G)[-1]), 0.0))
    return LipschitzResult(N, best, sup, trials, math.sqrt(2.0 * (N / 2 + 1)))
