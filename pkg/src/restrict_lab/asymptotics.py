"""Stationary-phase kernel model, its correlation matrix, and the phase profile.

Phase convention here is n*x - n^2 x^k / k.  For n != m the Gram integrand
is e(phi_nm(x)) with phi_nm(x) = (n - m)[x - (n + m) x^k / k], whose only
critical point on [0, 1] is x0 = (n + m)^(-1/(k-1)).  The leading-order
stationary model replaces each localized integral by

    c_nm = C / (|n - m|^(1/2) (n + m)^(1/(2(k-1)))) * e((k-1)(n - m) / (k (n+m)^(1/(k-1))))

with C = C_sta for m > n and conj(C_sta) for m < n, and zero when
|n - m| < N^(1/(k-1)).  The TT* argument bounds the model through the
row sums of d = c c, whose entries are weighted exponential sums with phase
profile f_nm.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidInputError
from .exp_core import (DEFAULT_DELTA, DEFAULT_RHO, PlateauCutoff, e, grid_for_variation,
                       oscillatory_integral)
from .spectral import KernelMatrix, rayleigh_ratio, schur_bound, ttstar_bound

SCAN_C_K = 0.5


def default_C_k(k):
    return 1.0 - 1.0 / (10.0 * k)


def block_range(N, C_k):
    """Integer indices in [C_k N, N]."""
    return int(math.ceil(C_k * N - 1e-9)), int(N)


def stationary_threshold(N, k):
    return N ** (1.0 / (k - 1))


def _phi_nm(n, m, k):
    n, m = float(n), float(m)
    return lambda x: (n - m) * (x - (n + m) * np.asarray(x, dtype=float) ** k / k)


def critical_x0(n, m, k):
    return (n + m) ** (-1.0 / (k - 1))


def model_phase(n, m, k):
    """(k-1)(n - m) / (k (n + m)^(1/(k-1))), the value of phi_nm at x0."""
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    return (k - 1) * (n - m) / (k * (n + m) ** (1.0 / (k - 1)))


def model_amplitude(n, m, k):
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    return 1.0 / (np.abs(n - m) ** 0.5 * (n + m) ** (1.0 / (2 * (k - 1))))


def analytic_C_sta(k):
    """Leading stationary-phase constant e(1/8)/sqrt(k-1) for a cutoff with eta(0) = 1."""
    return complex(e(0.125)) / math.sqrt(k - 1)


@dataclass(frozen=True)
class StationaryModel:
    """Stationary-regime model of the localized Gram integrals on a block."""

    k: int
    N: int
    C_sta: complex
    C_k: float = SCAN_C_K
    fit_residual: float = float("nan")

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInputError("k must be >= 2")
        if not 0 < self.C_k < 1:
            raise InvalidInputError("C_k must lie in (0, 1)")
        if abs(self.C_sta) == 0:
            raise InvalidInputError("C_sta must be nonzero")

    @property
    def threshold(self):
        return stationary_threshold(self.N, self.k)

    @property
    def block(self):
        return block_range(self.N, self.C_k)

    def indices(self):
        lo, hi = self.block
        return np.arange(lo, hi + 1)


def stationary_c(n, m, model):
    """Model coefficient c_nm; zero on the diagonal band |n - m| < N^(1/(k-1))."""
    lo, hi = model.block
    if not (lo <= n <= hi and lo <= m <= hi):
        raise InvalidInputError(f"indices ({n}, {m}) outside block [{lo}, {hi}]")
    if n == m or abs(n - m) < model.threshold:
        return 0j
    # evaluate the m > n entry and conjugate, so symmetry is exact
    lo_i, hi_i = min(n, m), max(n, m)
    k = model.k
    c = complex(model.C_sta * model_amplitude(lo_i, hi_i, k) * e(model_phase(lo_i, hi_i, k)))
    return c if m > n else c.conjugate()


def stationary_matrix(model):
    """All c_nm on the block, as a Hermitian KernelMatrix."""
    idx = model.indices().astype(float)
    n, m = np.meshgrid(idx, idx, indexing="ij")
    k = model.k
    gap = np.abs(n - m)
    active = (gap >= model.threshold) & (gap > 0)
    with np.errstate(divide="ignore"):
        amp = np.where(active, model_amplitude(n, m, k), 0.0)
    C = np.where(m > n, model.C_sta, np.conj(model.C_sta))
    # build one triangle and mirror so the result is exactly Hermitian
    c = np.triu(C * amp * e(model_phase(n, m, k)), 1)
    c = c + c.conj().T
    return KernelMatrix(int(idx[0]), c, "stationary_c")


def correlation_matrix(model, c=None):
    """d = c c over the block (an exact finite sum, evaluated as a matrix product)."""
    if c is None:
        c = stationary_matrix(model)
    d = c.entries @ c.entries
    d = 0.5 * (d + d.conj().T)
    return KernelMatrix(c.offset, d, "correlation_d")


def correlation_d(n, m, model, index_range=None):
    """d_nm = sum over integer x in the range of c_nx c_xm."""
    lo, hi = index_range if index_range is not None else model.block
    blo, bhi = model.block
    if not (blo <= lo <= hi <= bhi):
        raise InvalidInputError("summation range must lie inside the block")
    total = 0j
    for x in range(lo, hi + 1):
        total += stationary_c(n, x, model) * stationary_c(x, m, model)
    return total


def stationary_integral(n, m, k, delta=DEFAULT_DELTA, rho=DEFAULT_RHO, complement=False):
    """Integral of e(phi_nm) against eta((n+m)^(1/(k-1)) (x - x0)).

    With ``complement=True`` the weight is 1 - eta(...) on [0, 1], the
    non-stationary remainder.
    """
    if n == m:
        raise InvalidInputError("n and m must differ")
    x0 = critical_x0(n, m, k)
    scale = (n + m) ** (1.0 / (k - 1))
    cut = PlateauCutoff(x0, scale, delta, complement)
    if complement:
        interval = (0.0, 1.0)
    else:
        interval = cut.support
    top = interval[1]
    freq = abs(n - m) * (1.0 + (n + m) * top ** (k - 1))
    # cutoff derivative adds at most a few units of variation per unit t
    variation = freq * (interval[1] - interval[0]) + 8.0
    grid = grid_for_variation(interval, variation, rho, min_nodes=256)
    return oscillatory_integral(_phi_nm(n, m, k), cut, interval, grid)


def binomial_P(t, k):
    """P(t) = (1/k) sum_{j=2..k} binom(k, j) t^j = ((1 + t)^k - 1 - k t) / k."""
    t = np.asarray(t, dtype=float)
    return sum(math.comb(k, j) * t ** j for j in range(2, k + 1)) / k


def profile_integral(lam, k, delta=DEFAULT_DELTA, quadratic=False, rho=DEFAULT_RHO):
    """Integral of e(lam P(t)) eta(t) dt; ``quadratic`` keeps only (k-1) t^2 / 2."""
    if quadratic:
        P = lambda t: lam * 0.5 * (k - 1) * np.asarray(t, dtype=float) ** 2  # noqa: E731
    else:
        P = lambda t: lam * binomial_P(t, k)  # noqa: E731
    slope = abs(lam) * ((1 + delta) ** (k - 1) + 1)
    grid = grid_for_variation((-delta, delta), slope * 2 * delta + 8.0, rho, min_nodes=256)
    return oscillatory_integral(P, PlateauCutoff(0.0, 1.0, delta), (-delta, delta), grid)


def sample_stationary_pairs(N, k, count, seed=0, lo=1):
    """Random pairs (n, m) in [lo, N]^2 with |n - m| >= N^(1/(k-1))."""
    rng = np.random.default_rng(seed)
    thr = stationary_threshold(N, k)
    pairs = set()
    while len(pairs) < count:
        n, m = (int(v) for v in rng.integers(lo, N + 1, size=2))
        if abs(n - m) >= thr:
            pairs.add((n, m))
    return sorted(pairs)


@dataclass(frozen=True)
class StationaryFit:
    C_sta: complex
    max_scaled_residual: float
    pairs: tuple
    integrals: np.ndarray
    model_values: np.ndarray

    @property
    def scaled_residuals(self):
        gaps = np.array([abs(n - m) for n, m in self.pairs], dtype=float)
        return np.abs(self.integrals - self.model_values) * gaps


def fit_C_sta(N, k, sample_pairs, delta=DEFAULT_DELTA, rho=DEFAULT_RHO):
    """Least-squares C_sta from true localized integrals.

    For m > n the model is C_sta * A_nm, for m < n it is conj(C_sta) * A_nm,
    where A_nm carries the explicit amplitude and phase.  Conjugating the
    m < n equations makes the problem linear in C_sta; each equation is
    weighted by |n - m|.  Reports max |integral - model| * |n - m|.
    """
    pairs = tuple((int(n), int(m)) for n, m in sample_pairs)
    if len(pairs) < 2:
        raise InvalidInputError("need at least two sample pairs")
    thr = stationary_threshold(N, k)
    if any(n == m or abs(n - m) < thr for n, m in pairs):
        raise InvalidInputError("all pairs must satisfy |n - m| >= N^(1/(k-1))")
    I = np.array([stationary_integral(n, m, k, delta, rho) for n, m in pairs])
    n = np.array([p[0] for p in pairs], dtype=float)
    m = np.array([p[1] for p in pairs], dtype=float)
    A = model_amplitude(n, m, k) * e(model_phase(n, m, k))
    up = m > n
    # the error term is O(1/|n-m|): scale each equation by |n-m| so the
    # residuals are homoscedastic
    w = np.abs(n - m)
    B = w * np.where(up, A, np.conj(A))
    y = w * np.where(up, I, np.conj(I))
    C = complex(np.vdot(B, y) / np.vdot(B, B).real)
    model = np.where(up, C * A, np.conj(C) * A)
    scaled = float(np.max(np.abs(I - model) * np.abs(n - m)))
    return StationaryFit(C, scaled, pairs, I, model)


def nonstationary_scaled(N, k, pairs, delta=DEFAULT_DELTA, rho=DEFAULT_RHO):
    """max over pairs of |integral of e(phi_nm)(1 - eta)| * |n - m| on [0, 1]."""
    vals = [abs(stationary_integral(n, m, k, delta, rho, complement=True)) * abs(n - m)
            for n, m in pairs]
    return float(np.max(vals))


# ---- correlation scans -------------------------------------------------

def near_far_split(N, k):
    return N ** ((2 * k - 1) / (3 * (k - 1)))


@dataclass(frozen=True)
class CorrelationReport:
    """Normalized correlation quantities for one N."""

    N: int
    k: int
    C_k: float
    near_max: float
    far_max: float
    row_sum: float
    schur_row_sum: float
    ttstar: float


def correlation_report(N, k, C_sta=None, C_k=SCAN_C_K):
    """Max of |d| N^(1/(k-1)) on the near band |n-m| <= N^((2k-1)/(3(k-1))),
    max of |d| |n-m|^(3/2) / N^((2k-3)/(2(k-1))) off it, the max row sum of
    |d| and of |c|, and the TT* bound.
    """
    model = StationaryModel(k, N, analytic_C_sta(k) if C_sta is None else C_sta, C_k)
    c = stationary_matrix(model)
    d = correlation_matrix(model, c)
    absd = np.abs(d.entries)
    idx = model.indices()
    gap = np.abs(idx[:, None] - idx[None, :])
    split = near_far_split(N, k)
    near = gap <= split
    near_max = float(np.max(absd[near])) * N ** (1.0 / (k - 1))
    far = ~near
    far_vals = absd[far] * gap[far] ** 1.5 / N ** ((2 * k - 3) / (2 * (k - 1)))
    far_max = float(np.max(far_vals)) if far_vals.size else float("nan")
    row = float(absd.sum(axis=1).max())
    schur_row = float(np.abs(c.entries).sum(axis=1).max())
    return CorrelationReport(N, k, C_k, near_max, far_max, row, schur_row, ttstar_bound(c))


def row_sum_scaling(k, N_list, C_sta=None, C_k=SCAN_C_K):
    """(N, max_n sum_m |d_nm|) per N; compare growth with 2(k-2)/(3(k-1))."""
    N_list = list(N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise InvalidInputError("N list must be strictly increasing")
    return [(N, correlation_report(N, k, C_sta, C_k).row_sum) for N in N_list]


def row_sum_target(k):
    return 2.0 * (k - 2) / (3.0 * (k - 1))


# ---- phase profile -------------------------------------------------------

@dataclass(frozen=True)
class PhaseProfile:
    """f(x) = ((k-1)/k) [(x-n)/(x+n)^(1/(k-1)) - (x-m)/(x+m)^(1/(k-1))]."""

    n: int
    m: int
    k: int

    def f(self, x):
        x = np.asarray(x, dtype=float)
        a = 1.0 / (self.k - 1)
        return (self.k - 1) / self.k * ((x - self.n) / (x + self.n) ** a
                                        - (x - self.m) / (x + self.m) ** a)

    def df(self, x):
        x = np.asarray(x, dtype=float)
        k = self.k
        p = k / (k - 1)
        return ((k - 2) * x + k * self.n) / (x + self.n) ** p / k \
            - ((k - 2) * x + k * self.m) / (x + self.m) ** p / k

    def d2f(self, x):
        x = np.asarray(x, dtype=float)
        k = self.k
        p = (2 * k - 1) / (k - 1)
        g = lambda t: ((2 - k) * x + (2 - 3 * k) * t) / (x + t) ** p  # noqa: E731
        return (g(self.n) - g(self.m)) / (k * (k - 1))

    def critical_point(self):
        lo, hi = sorted((self.n, self.m))
        return brentq(lambda t: float(self.df(t)), lo, hi, xtol=1e-12)


@dataclass(frozen=True)
class ProfileReport:
    n: int
    m: int
    k: int
    N: int
    r1_min: float
    r1_max: float
    r2_min: float
    r2_max: float
    endpoint_gap: float


def phase_profile_checks(n, m, k, N, C_k=None, points=401, near=0.1):
    """Ratios r2 = |f''| N^((2k-1)/(k-1)) / |m-n| on [C_k N, N] and
    r1 = |f'| N^((2k-1)/(k-1)) / (m-n)^2 within ``near``(m-n) of n or m."""
    C_k = default_C_k(k) if C_k is None else C_k
    lo, hi = C_k * N, float(N)
    if not (lo <= n < m <= hi):
        raise InvalidInputError("need C_k N <= n < m <= N")
    prof = PhaseProfile(n, m, k)
    scale = N ** ((2 * k - 1) / (k - 1))
    x = np.linspace(lo, hi, points)
    r2 = np.abs(prof.d2f(x)) * scale / (m - n)
    w = near * (m - n)
    xn = np.linspace(max(lo, n - w), min(hi, n + w), points)
    xm = np.linspace(max(lo, m - w), min(hi, m + w), points)
    xs = np.concatenate([xn, xm])
    r1 = np.abs(prof.df(xs)) * scale / (m - n) ** 2
    gap = abs(float(prof.f(n)) - float(prof.f(m)))
    return ProfileReport(n, m, k, N, float(r1.min()), float(r1.max()),
                         float(r2.min()), float(r2.max()), gap)


def profile_pairs(N, k, C_k=None, count=24, seed=0):
    """Deterministic sample of pairs C_k N <= n < m <= N, spread over gaps."""
    C_k = default_C_k(k) if C_k is None else C_k
    lo, hi = block_range(N, C_k)
    rng = np.random.default_rng(seed)
    pairs = set()
    span = hi - lo
    gaps = np.unique(np.clip(np.geomspace(1, span, count).astype(int), 1, span))
    for g in gaps:
        n = int(rng.integers(lo, hi - g + 1))
        pairs.add((n, n + int(g)))
    return sorted(pairs)


def finite_difference_check(prof, x, h=1e-3):
    """Max relative error of df against central differences of f, and of
    d2f against central differences of df."""
    x = np.asarray(x, dtype=float)
    fd1 = (prof.f(x + h) - prof.f(x - h)) / (2 * h)
    fd2 = (prof.df(x + h) - prof.df(x - h)) / (2 * h)
    e1 = np.max(np.abs(fd1 - prof.df(x)) / np.abs(prof.df(x)))
    e2 = np.max(np.abs(fd2 - prof.d2f(x)) / np.abs(prof.d2f(x)))
    return float(e1), float(e2)


def correlation_weights(n, m, k, x):
    """w_x = |(n-x)(m-x)|^(-1/2) [(n+x)(m+x)]^(-1/(2(k-1)))."""
    x = np.asarray(x, dtype=float)
    return 1.0 / (np.sqrt(np.abs((n - x) * (m - x)))
                  * ((n + x) * (m + x)) ** (1.0 / (2 * (k - 1))))


def no_cancellation_witness(n, m, k, window=0.1):
    """|sum w_x e(f(x))| / sum w_x over integers with |x - x0| <= window (m - n)."""
    prof = PhaseProfile(n, m, k)
    x0 = prof.critical_point()
    r = window * abs(m - n)
    xs = np.arange(math.ceil(x0 - r), math.floor(x0 + r) + 1)
    xs = xs[(xs != n) & (xs != m)]
    w = correlation_weights(n, m, k, xs)
    return float(abs(np.sum(w * e(prof.f(xs)))) / np.sum(w))


def schur_witness(N, k, C_sta=None, C_k=SCAN_C_K):
    """max_n sum_m |c_nm| / N^((k-2)/(2(k-1)))."""
    model = StationaryModel(k, N, analytic_C_sta(k) if C_sta is None else C_sta, C_k)
    c = stationary_matrix(model)
    return float(np.abs(c.entries).sum(axis=1).max()) / N ** ((k - 2) / (2 * (k - 1)))


# ---- derivative tests and summation by parts ---------------------------

@dataclass(frozen=True)
class DerivativeTestResult:
    lhs: float
    rhs: float
    ratio: float


def derivative_test_check(order, f, I, lam, df=None, d2f=None, spread=4.0):
    """Compare |sum_{x in I} e(f(x))| with the first or second derivative bound.

    Parameters
    ----------
    order : {1, 2}
    f : callable
        Real phase, vectorized.
    I : (int, int)
        Inclusive integer interval with b - a >= 1.
    lam : float
        Size parameter; |f'| (order 1) or |f''| (order 2) must lie within a
        factor ``spread`` of it on the integer samples.
    df, d2f : callable, optional
        Derivative oracles; central differences of f otherwise.

    Raises
    ------
    InvalidInputError
        If the measured derivatives violate the test's preconditions.
    """
    a, b = int(I[0]), int(I[1])
    if b - a < 1:
        raise InvalidInputError("interval length must be at least 1")
    if not lam > 0:
        raise InvalidInputError("lambda must be positive")
    x = np.arange(a, b + 1, dtype=float)
    h = 1e-4 * max(1.0, abs(b))
    if order == 1:
        d = df(x) if df is not None else (f(x + h) - f(x - h)) / (2 * h)
        d = np.asarray(d, dtype=float)
        if lam > 0.5:
            raise InvalidInputError("first derivative test needs lambda = o(1) (<= 1/2)")
        steps = np.diff(d)
        if not (np.all(steps >= -1e-15 * np.abs(d[1:])) or np.all(steps <= 1e-15 * np.abs(d[1:]))):
            raise InvalidInputError("f' is not monotone on I")
        rhs = 1.0 / lam
    elif order == 2:
        if d2f is not None:
            d = np.asarray(d2f(x), dtype=float)
        elif df is not None:
            d = (df(x + h) - df(x - h)) / (2 * h)
        else:
            d = (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)
        rhs = math.sqrt(lam) * (b - a) + 1.0 / math.sqrt(lam)
    else:
        raise InvalidInputError("order must be 1 or 2")
    mag = np.abs(d)
    if np.any(mag < lam / spread) or np.any(mag > lam * spread):
        raise InvalidInputError(
            f"derivative magnitudes [{mag.min():.3e}, {mag.max():.3e}] are not comparable to {lam}")
    lhs = float(abs(np.sum(e(f(x)))))
    return DerivativeTestResult(lhs, rhs, lhs / rhs)


def v1_norm(w):
    """|w_b| + sum |w_{x+1} - w_x| (endpoint plus total variation)."""
    w = np.asarray(w)
    if w.size == 0:
        return 0.0
    return float(abs(w[-1]) + np.sum(np.abs(np.diff(w))))


@dataclass(frozen=True)
class PartialSummation:
    lhs: float
    rhs: float
    v1: float
    max_partial: float


def partial_summation_bound(w, f_values):
    """|sum w_x e(f(x))| against |w|_{V^1} * max_n |sum_{x <= n} e(f(x))|."""
    w = np.asarray(w)
    z = e(np.asarray(f_values, dtype=float))
    if w.shape != z.shape or w.ndim != 1:
        raise InvalidInputError("weights and phases must be 1-D of equal length")
    lhs = float(abs(np.sum(w * z)))
    partial = float(np.max(np.abs(np.cumsum(z)))) if z.size else 0.0
    v1 = v1_norm(w)
    return PartialSummation(lhs, v1 * partial, v1, partial)


def schur_and_ttstar(C):
    """Both spectral bounds for a Hermitian kernel."""
    return schur_bound(C), ttstar_bound(C)


# ---- randomized property suites -------------------------------------------

SUITES = ("schur", "ttstar", "summation", "derivative")
SLACK = 1e-12


@dataclass(frozen=True)
class SuiteResult:
    """Outcome of one randomized suite; ``worst`` is the largest lhs/rhs seen."""

    name: str
    trials: int
    violations: int
    worst: float

    @property
    def passed(self):
        return self.violations == 0


def _random_hermitian(rng):
    L = int(rng.integers(1, 25))
    A = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
    if rng.random() < 0.3:
        A *= rng.random((L, L)) < 0.3
    H = np.triu(A, 1)
    return KernelMatrix(0, H + H.conj().T + np.diag(A.real.diagonal()), "stationary_c")


def _bound_suite(name, bound, trials, rng):
    bad, worst = 0, 0.0
    for _ in range(trials):
        C = _random_hermitian(rng)
        a = rng.standard_normal(C.size) + 1j * rng.standard_normal(C.size)
        lhs = rayleigh_ratio(C, a)
        rhs = bound(C)
        worst = max(worst, lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf))
        bad += lhs > rhs * (1 + SLACK) + SLACK
    return SuiteResult(name, trials, int(bad), worst)


def _summation_suite(trials, rng):
    bad, worst = 0, 0.0
    for _ in range(trials):
        L = int(rng.integers(1, 201))
        w = rng.standard_normal(L)
        if rng.random() < 0.5:
            w = np.cumsum(np.abs(w))
        f = rng.random(L) if rng.random() < 0.5 else rng.random() * np.arange(L) ** 2 / L
        r = partial_summation_bound(w, f)
        worst = max(worst, r.lhs / r.rhs if r.rhs > 0 else 0.0)
        bad += r.lhs > r.rhs * (1 + SLACK) + SLACK
    return SuiteResult("summation", trials, int(bad), worst)


def _derivative_suite(trials, rng, limit=10.0):
    bad, worst = 0, 0.0
    for t in range(trials):
        if t % 2 == 0:
            alpha = float(rng.uniform(0.002, 0.5))
            a = int(rng.integers(-1000, 1000))
            I = (a, a + int(rng.integers(1, 3000)))
            r = derivative_test_check(1, lambda x, al=alpha: al * x, I, alpha,
                                      df=lambda x, al=alpha: np.full_like(x, al))
        else:
            T = float(10 ** rng.uniform(2, 6))
            a = int(rng.integers(0, 1000))
            I = (a, a + int(rng.integers(1, 3000)))
            r = derivative_test_check(2, lambda x, T=T: x * x / (2 * T), I, 1.0 / T,
                                      d2f=lambda x, T=T: np.full_like(x, 1.0 / T))
        worst = max(worst, r.ratio)
        bad += r.ratio > limit
    return SuiteResult("derivative", trials, int(bad), worst)


def property_suite(name, trials=1000, seed=0):
    """Randomized checks of the Schur, TT*, summation-by-parts and
    derivative-test inequalities.  The first three are exact inequalities
    (slack 1e-12); the derivative tests must keep lhs/rhs <= 10."""
    rng = np.random.default_rng(seed)
    if name == "schur":
        return _bound_suite("schur", schur_bound, trials, rng)
    if name == "ttstar":
        return _bound_suite("ttstar", ttstar_bound, trials, rng)
    if name == "summation":
        return _summation_suite(trials, rng)
    if name == "derivative":
        return _derivative_suite(trials, rng)
    raise InvalidInputError(f"unknown suite {name!r}; known: {SUITES}")
