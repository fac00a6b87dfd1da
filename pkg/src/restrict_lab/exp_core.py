"""Weighted exponential sums, oscillatory integrals and L^p norms.

All phases use the character e(z) = exp(2*pi*i*z).  Quadrature is composite
16-point Gauss-Legendre; every grid records a certified upper bound on the
total phase change of the integrand it was built for, and carries at least
``rho`` nodes per unit of that bound.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from . import _kernels
from .errors import InvalidInputError, ResourceError

PANEL_ORDER = 16
MIN_NODES = 64
DEFAULT_RHO = 8.0
DEFAULT_MAX_NODES = 64_000_000
DEFAULT_DELTA = 0.5

PHASE_KINDS = ("monomial_curve", "general_scalar", "cylinder_2d", "moment_curve_2d")

_GL_X, _GL_W = np.polynomial.legendre.leggauss(PANEL_ORDER)


def e(z):
    """The character exp(2 pi i z), with the argument reduced mod 1 first."""
    z = np.asarray(z, dtype=float)
    return np.exp(2j * np.pi * (z - np.floor(z)))


@dataclass(frozen=True)
class PhaseSpec:
    """Phase family psi(x, n) for the sums S(x) = sum_n a_n e(psi(x, n)).

    Parameters
    ----------
    kind : str
        ``monomial_curve``: psi = lin*n*x + beta*n^2*x^k.
        ``general_scalar``: psi = lin*n*x - n^2*phi(x).
        ``cylinder_2d``: psi = n*x + m*y + beta*(n^2 + m^2)*x^3.
        ``moment_curve_2d``: psi = n*x + n^2*y + beta*n^3*(y + x^3)^3.
    k : int
        Vanishing order of the curvature (monomial degree), at least 2.
    beta : float
        Coefficient of the quadratic-in-n term for monomial phases.
    linear_sign : int
        Sign ``lin`` of the linear term, +1 or -1.
    phi : callable, optional
        Smooth phi for ``general_scalar``; vectorized in x.
    derivatives : tuple of callable
        Oracles phi', phi'', ..., up to order k+1 for ``general_scalar``.
    dphi_bound : float, optional
        Upper bound on sup |phi'| over the domain.  Sampled (with a 25%
        margin) when omitted.
    """

    kind: str = "monomial_curve"
    k: int = 3
    beta: float = -1.0
    linear_sign: int = 1
    phi: object = field(default=None, compare=False)
    derivatives: tuple = field(default=(), compare=False)
    dphi_bound: float = None

    def __post_init__(self):
        if self.kind not in PHASE_KINDS:
            raise InvalidInputError(f"unknown phase kind {self.kind!r}")
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 2:
            raise InvalidInputError(f"k must be an integer >= 2, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if self.linear_sign not in (1, -1):
            raise InvalidInputError("linear_sign must be +1 or -1")
        if self.kind == "monomial_curve":
            if not math.isfinite(self.beta) or self.beta == 0:
                raise InvalidInputError("beta must be finite and nonzero")
        if self.kind == "general_scalar":
            if not callable(self.phi):
                raise InvalidInputError("general_scalar phases need a callable phi")
            if len(self.derivatives) < 1 or not all(callable(d) for d in self.derivatives):
                raise InvalidInputError("general_scalar phases need derivative oracles")

    @classmethod
    def monomial(cls, k, beta=-1.0, linear_sign=1):
        return cls("monomial_curve", k=k, beta=float(beta), linear_sign=linear_sign)

    @classmethod
    def general(cls, phi, derivatives, k=3, linear_sign=1, dphi_bound=None):
        return cls("general_scalar", k=k, phi=phi, derivatives=tuple(derivatives),
                   linear_sign=linear_sign, dphi_bound=dphi_bound)

    @property
    def is_monomial(self):
        return self.kind == "monomial_curve"

    def psi(self, x, n):
        """Phase psi(x, n) for the one-variable families."""
        x = np.asarray(x, dtype=float)
        n = np.asarray(n, dtype=float)
        if self.kind == "monomial_curve":
            return self.linear_sign * n * x + self.beta * n * n * x ** self.k
        if self.kind == "general_scalar":
            return self.linear_sign * n * x - n * n * self.phi(x)
        raise InvalidInputError(f"psi(x, n) is not defined for {self.kind}")

    def frequency_bound(self, N, interval):
        """Upper bound on sup |d psi/dx| over the interval for |n| <= N."""
        lo, hi = interval
        if self.kind == "monomial_curve":
            r = max(abs(lo), abs(hi))
            return N + self.k * abs(self.beta) * N * N * r ** (self.k - 1)
        if self.kind == "general_scalar":
            return N + N * N * self._dphi_sup(lo, hi)
        raise InvalidInputError(f"no scalar frequency bound for {self.kind}")

    def _dphi_sup(self, lo, hi):
        if self.dphi_bound is not None:
            return float(self.dphi_bound)
        xs = np.linspace(lo, hi, 4097)
        return 1.25 * float(np.max(np.abs(self.derivatives[0](xs))))


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Complex weights a_n for lo <= n <= hi (inclusive)."""

    lo: int
    hi: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).ravel()
        if int(self.lo) != self.lo or int(self.hi) != self.hi:
            raise InvalidInputError("index bounds must be integers")
        if self.hi < self.lo or vals.size != self.hi - self.lo + 1:
            raise InvalidInputError(
                f"length {vals.size} inconsistent with range [{self.lo}, {self.hi}]")
        vals.setflags(write=False)
        object.__setattr__(self, "lo", int(self.lo))
        object.__setattr__(self, "hi", int(self.hi))
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, lo, values):
        values = np.asarray(values, dtype=complex).ravel()
        return cls(lo, lo + values.size - 1, values)

    @classmethod
    def constant(cls, lo, hi, c=1.0):
        return cls(lo, hi, np.full(hi - lo + 1, c, dtype=complex))

    @classmethod
    def single(cls, n, value=1.0):
        return cls(n, n, np.array([value], dtype=complex))

    @classmethod
    def random_unit(cls, lo, hi, rng):
        """Uniform complex entries in the unit square, normalized to norm 1."""
        rng = np.random.default_rng(rng)
        L = hi - lo + 1
        v = rng.uniform(-1, 1, L) + 1j * rng.uniform(-1, 1, L)
        return cls(lo, hi, v / np.linalg.norm(v))

    @property
    def indices(self):
        return np.arange(self.lo, self.hi + 1)

    @property
    def size(self):
        return self.values.size

    @cached_property
    def norm(self):
        return float(np.linalg.norm(self.values))

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))

    def __eq__(self, other):
        if not isinstance(other, CoefficientVector):
            return NotImplemented
        return (self.lo == other.lo and self.hi == other.hi
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.lo, self.hi, self.values.tobytes()))


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Composite Gauss-Legendre rule on an interval.

    ``max_phase_variation`` is a certified upper bound on the total phase
    change (in units of e) of the integrands the grid was built for.
    """

    interval: tuple
    nodes: np.ndarray
    weights: np.ndarray
    max_phase_variation: float
    oversampling: float
    panels: int
    symmetric: bool = False

    @property
    def size(self):
        return self.nodes.size

    @property
    def length(self):
        return self.interval[1] - self.interval[0]

    def covers(self, interval, rtol=1e-12):
        a, b = self.interval
        c, d = interval
        scale = max(1.0, abs(a), abs(b))
        return abs(a - c) <= rtol * scale and abs(b - d) <= rtol * scale

    def half(self):
        """Nodes and weights with x > 0 of a grid mirrored about the origin."""
        if not self.symmetric:
            raise InvalidInputError("grid is not mirrored about the origin")
        keep = self.nodes > 0
        return self.nodes[keep], self.weights[keep]


@dataclass(frozen=True)
class SumSample:
    x: float
    value: complex


def _check_interval(interval):
    try:
        a, b = (float(interval[0]), float(interval[1]))
    except (TypeError, IndexError, ValueError) as exc:
        raise InvalidInputError(f"bad interval {interval!r}") from exc
    if not (math.isfinite(a) and math.isfinite(b)) or not b > a:
        raise InvalidInputError(f"interval must be finite and nondegenerate: {interval!r}")
    return a, b


def _panels_to_grid(edges, interval, variation, rho, max_nodes, symmetric=False):
    edges = np.asarray(edges, dtype=float)
    npan = edges.size - 1
    count = npan * PANEL_ORDER
    if count > max_nodes:
        raise ResourceError(
            f"grid needs {count} nodes, budget is {max_nodes}", required=count, limit=max_nodes)
    h = np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + 0.5 * h[:, None] * _GL_X[None, :]).ravel()
    weights = (0.5 * h[:, None] * _GL_W[None, :]).ravel()
    return QuadratureGrid((float(interval[0]), float(interval[1])), nodes, weights,
                          float(variation), float(rho), int(npan), symmetric)


def grid_for_variation(interval, variation, rho=DEFAULT_RHO, max_nodes=DEFAULT_MAX_NODES,
                       min_nodes=MIN_NODES):
    """Uniform panel grid with at least max(min_nodes, rho*variation) nodes."""
    a, b = _check_interval(interval)
    if not rho >= 4:
        raise InvalidInputError(f"rho must be >= 4, got {rho}")
    if not (variation >= 0 and math.isfinite(variation)):
        raise InvalidInputError("phase variation must be finite and nonnegative")
    required = max(min_nodes, math.ceil(rho * variation))
    npan = -(-required // PANEL_ORDER)
    if npan * PANEL_ORDER > max_nodes:
        need = npan * PANEL_ORDER
        raise ResourceError(
            f"grid needs {need} nodes, budget is {max_nodes}", required=need, limit=max_nodes)
    symmetric = abs(a + b) <= 1e-15 * max(abs(a), abs(b))
    if symmetric:
        npan += npan % 2
        half = np.linspace(0.0, b, npan // 2 + 1)
        edges = np.concatenate([-half[::-1], half[1:]])
    else:
        edges = np.linspace(a, b, npan + 1)
    return _panels_to_grid(edges, (a, b), variation, rho, max_nodes, symmetric)


def build_grid(phase, N, interval=(-1.0, 1.0), rho=DEFAULT_RHO, max_nodes=DEFAULT_MAX_NODES):
    """Uniform composite grid resolving every character with |n| <= N.

    The node count is at least rho * (sup |d psi/dx|) * |interval|, with the
    sup bounded by N + k|beta|N^2 on the unit interval, and never below 64.

    Raises
    ------
    ResourceError
        If the node count exceeds ``max_nodes``.
    """
    a, b = _check_interval(interval)
    if N < 0:
        raise InvalidInputError("N must be nonnegative")
    variation = phase.frequency_bound(N, (a, b)) * (b - a)
    return grid_for_variation((a, b), variation, rho, max_nodes)


def _local_edges(N, k, beta, lin_scale, u0, u1, rho):
    """Panel edges on [u0, u1] (u0 >= 0) with width * sup(omega) <= 16/rho."""
    cap = PANEL_ORDER / rho
    c = k * abs(beta) * N * N

    def omega(x):
        return lin_scale * N + c * x ** (k - 1)

    def Phi(x):
        return lin_scale * N * x + abs(beta) * N * N * x ** k

    total = Phi(u1) - Phi(u0)
    if total <= 0:
        return np.array([u0, u1])
    npan = max(1, math.ceil(total / (0.98 * cap)))
    targets = Phi(u0) + np.arange(1, npan) * (total / npan)
    # Newton from above converges monotonically for convex increasing Phi
    guesses = [np.full(targets.shape, u1)]
    if lin_scale * N > 0:
        guesses.append(targets / (lin_scale * N))
    guesses.append((targets / (abs(beta) * N * N)) ** (1.0 / k))
    x = np.minimum.reduce(guesses)
    for _ in range(100):
        step = (Phi(x) - targets) / omega(x)
        x = x - step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(x, 1e-300)):
            break
    edges = np.concatenate([[u0], np.clip(x, u0, u1), [u1]])
    edges = np.maximum.accumulate(edges)
    # certify each panel; split any that overshoots
    w = np.diff(edges)
    bound = w * omega(edges[1:])
    parts = np.maximum(1, np.ceil(bound / cap)).astype(int)
    if np.any(parts > 1):
        out = [edges[:1]]
        for i in range(w.size):
            out.append(edges[i] + w[i] * np.arange(1, parts[i] + 1) / parts[i])
        edges = np.concatenate(out)
        edges[-1] = u1
    return edges


def build_local_grid(phase, N, interval=(-1.0, 1.0), rho=DEFAULT_RHO,
                     max_nodes=DEFAULT_MAX_NODES):
    """Monomial-phase grid with panel widths adapted to the local frequency.

    Each panel satisfies width * sup_panel |d psi/dx| <= 16/rho, using the
    local bound N + k|beta|N^2|x|^(k-1), so every panel carries at least
    rho nodes per unit of certified phase change.  Intervals symmetric about
    the origin get a mirrored grid.
    """
    if not phase.is_monomial:
        raise InvalidInputError("local grids are built for monomial phases only")
    a, b = _check_interval(interval)
    if N < 0:
        raise InvalidInputError("N must be nonnegative")
    if not rho >= 4:
        raise InvalidInputError(f"rho must be >= 4, got {rho}")
    k, beta = phase.k, phase.beta

    def side(u0, u1):
        return _local_edges(N, k, beta, 1.0, u0, u1, rho)

    symmetric = abs(a + b) <= 1e-15 * max(abs(a), abs(b))
    if symmetric:
        right = side(0.0, b)
        edges = np.concatenate([-right[::-1], right[1:]])
    elif a >= 0:
        edges = side(a, b)
    elif b <= 0:
        edges = -side(-b, -a)[::-1]
    else:
        edges = np.concatenate([-side(0.0, -a)[::-1], side(0.0, b)[1:]])
    npan = edges.size - 1
    if npan * PANEL_ORDER < MIN_NODES:
        # refine uniformly to reach the node floor
        per = -(-MIN_NODES // (npan * PANEL_ORDER))
        if symmetric and per % 2:
            per += 1
        w = np.diff(edges)
        edges = np.concatenate([edges[:1]] + [edges[i] + w[i] * np.arange(1, per + 1) / per
                                              for i in range(npan)])
    ed = edges
    h = np.diff(ed)
    omega_max = N + k * abs(beta) * N * N * np.maximum(np.abs(ed[:-1]), np.abs(ed[1:])) ** (k - 1)
    variation = float(np.sum(h * omega_max))
    return _panels_to_grid(ed, (a, b), variation, rho, max_nodes, symmetric)


def _as_points(points):
    x = np.asarray(points, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("evaluation points must be finite")
    return x


def _check_coeffs(a):
    if not isinstance(a, CoefficientVector):
        raise InvalidInputError("coefficients must be a CoefficientVector")
    if not a.is_finite():
        raise InvalidInputError("coefficients must be finite")


def eval_sum(a, phase, points):
    """S(x) = sum_n a_n e(psi(x, n)) by direct summation at each point.

    Parameters
    ----------
    a : CoefficientVector
    phase : PhaseSpec
        A one-variable family (``monomial_curve`` or ``general_scalar``).
    points : array_like of float

    Returns
    -------
    ndarray of complex, shaped like ``points``.
    """
    _check_coeffs(a)
    x = _as_points(points)
    shape = x.shape
    x = np.ascontiguousarray(x.ravel())
    if phase.kind == "monomial_curve":
        A = a.values.reshape(-1, 1)
        Sr, Si = _kernels.monomial_sum(x, a.lo, phase.beta, phase.k, float(phase.linear_sign),
                                       np.ascontiguousarray(A.real), np.ascontiguousarray(A.imag))
        return (Sr[:, 0] + 1j * Si[:, 0]).reshape(shape)
    if phase.kind == "general_scalar":
        out = np.zeros(x.size, dtype=complex)
        n = a.indices.astype(float)
        phi = np.asarray(phase.phi(x), dtype=float)
        if not np.all(np.isfinite(phi)):
            raise InvalidInputError("phi is not finite at some evaluation point")
        step = max(1, 2_000_000 // max(1, n.size))
        for s in range(0, x.size, step):
            xs, ps = x[s:s + step, None], phi[s:s + step, None]
            ph = phase.linear_sign * n[None, :] * xs - (n * n)[None, :] * ps
            out[s:s + step] = e(ph) @ a.values
        return out.reshape(shape)
    raise InvalidInputError(f"eval_sum handles one-variable phases, not {phase.kind}")


def sample_sum(a, phase, points):
    """Evaluate S at the points and package the values as SumSample records."""
    x = _as_points(points).ravel()
    vals = eval_sum(a, phase, x)
    return [SumSample(float(xi), complex(v)) for xi, v in zip(x, vals)]


def lp_norm(a, phase, p, interval, grid, chunk=1 << 20):
    """(integral over the interval of |S(x)|^p dx)^(1/p) on the given grid.

    Raises
    ------
    InvalidInputError
        If the grid does not cover exactly the requested interval, or p is
        not a finite number >= 1.
    """
    if not (math.isfinite(p) and p >= 1):
        raise InvalidInputError(f"p must be finite and >= 1, got {p}")
    interval = _check_interval(interval)
    if not grid.covers(interval):
        raise InvalidInputError(f"grid interval {grid.interval} does not match {interval}")
    total = 0.0
    for s in range(0, grid.size, chunk):
        vals = np.abs(eval_sum(a, phase, grid.nodes[s:s + chunk]))
        total += float(np.dot(grid.weights[s:s + chunk], vals ** p))
    return total ** (1.0 / p)


def _mollifier(s):
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def plateau(t, delta=DEFAULT_DELTA):
    """Smooth bump: 1 on [-delta/2, delta/2], 0 outside [-delta, delta]."""
    t = np.abs(np.asarray(t, dtype=float))
    u = _mollifier((delta - t) / (0.5 * delta))
    v = _mollifier((t - 0.5 * delta) / (0.5 * delta))
    return u / (u + v)


@dataclass(frozen=True)
class PlateauCutoff:
    """Cutoff x -> eta(scale * (x - center)), optionally complemented.

    With ``complement=True`` the weight is 1 - eta(...), the non-stationary
    remainder.
    """

    center: float
    scale: float
    delta: float = DEFAULT_DELTA
    complement: bool = False

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidInputError("cutoff scale must be positive")
        if not 0 < self.delta <= 1:
            raise InvalidInputError("cutoff delta must lie in (0, 1]")

    @property
    def support(self):
        r = self.delta / self.scale
        return (self.center - r, self.center + r)

    def __call__(self, x):
        w = plateau(self.scale * (np.asarray(x, dtype=float) - self.center), self.delta)
        return 1.0 - w if self.complement else w


def oscillatory_integral(phase_fn, cutoff, interval, grid):
    """Integral of e(phase_fn(x)) * cutoff(x) over the interval.

    Parameters
    ----------
    phase_fn : callable
        Real phase, vectorized in x (in units of e).
    cutoff : PlateauCutoff or None
    interval : (float, float)
    grid : QuadratureGrid
        Must cover the interval.
    """
    interval = _check_interval(interval)
    if not grid.covers(interval):
        raise InvalidInputError(f"grid interval {grid.interval} does not match {interval}")
    if cutoff is not None and not cutoff.complement:
        lo, hi = cutoff.support
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if lo < interval[0] - tol or hi > interval[1] + tol:
            raise InvalidInputError(f"cutoff support {cutoff.support} leaves {interval}")
    x = grid.nodes
    vals = e(np.asarray(phase_fn(x), dtype=float))
    if cutoff is not None:
        vals = vals * cutoff(x)
    return complex(np.dot(grid.weights, vals))
