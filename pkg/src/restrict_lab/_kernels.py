"""Compiled inner loops for monomial phases psi(x, n) = lin*n*x + beta*n^2*x^k.

Characters e(psi(x, n)) for consecutive n are produced by a second-order
multiplicative recurrence, re-anchored with exact sin/cos every ``ANCHOR``
steps so the accumulated rounding stays near 1e-13.  Nodes are processed in
groups of ``LANES`` that advance in lockstep, which lets LLVM vectorize the
recurrence.  Work over nodes is split into a partition that depends only on
the node count, and per-chunk partial results are reduced in chunk order, so
results are bit-identical for any thread count.
"""

import math

import numpy as np
from numba import njit, prange

LANES = 32
ANCHOR = 256
MAX_CHUNKS = 32
TWO_PI = 2.0 * math.pi

# no 'afn': keep libm-accurate sin/cos
_FM = {"reassoc", "contract", "nsz", "arcp"}


@njit(cache=True, fastmath=_FM)
def _wrap(ph):
    return ph - np.floor(ph)


@njit(cache=True, fastmath=_FM)
def _ipow(x, k):
    r = 1.0
    for _ in range(k):
        r *= x
    return r


@njit(cache=True, fastmath=_FM)
def _num_chunks(q):
    groups = (q + LANES - 1) // LANES
    if groups < 1:
        return 1
    return min(MAX_CHUNKS, groups)


@njit(cache=True, fastmath=_FM)
def _load_lanes(nodes, weights, q0, q_hi, beta, k, xv, wv, xk, sr, si):
    for b in range(LANES):
        q = q0 + b
        if q < q_hi:
            xv[b] = nodes[q]
            wv[b] = weights[q]
        else:
            xv[b] = 0.0
            wv[b] = 0.0
        xk[b] = _ipow(xv[b], k)
        p2 = _wrap(2.0 * beta * xk[b])
        sr[b] = math.cos(TWO_PI * p2)
        si[b] = math.sin(TWO_PI * p2)


@njit(cache=True, fastmath=_FM)
def _anchor(xv, xk, n, beta, lin, zr, zi, rr, ri):
    for b in range(LANES):
        ph = _wrap(lin * n * xv[b] + beta * (n * n) * xk[b])
        zr[b] = math.cos(TWO_PI * ph)
        zi[b] = math.sin(TWO_PI * ph)
        p1 = _wrap(lin * xv[b] + beta * (2 * n + 1) * xk[b])
        rr[b] = math.cos(TWO_PI * p1)
        ri[b] = math.sin(TWO_PI * p1)


@njit(cache=True, fastmath=_FM)
def _step(zr, zi, rr, ri, sr, si):
    for b in range(LANES):
        t = zr[b] * rr[b] - zi[b] * ri[b]
        zi[b] = zr[b] * ri[b] + zi[b] * rr[b]
        zr[b] = t
        t = rr[b] * sr[b] - ri[b] * si[b]
        ri[b] = rr[b] * si[b] + ri[b] * sr[b]
        rr[b] = t


@njit(cache=True, fastmath=_FM)
def _forward_lanes(xv, xk, lo, beta, lin, Ar, Ai, zr, zi, rr, ri, sr, si, Sr, Si):
    L, V = Ar.shape
    Sr[:, :] = 0.0
    Si[:, :] = 0.0
    for j0 in range(0, L, ANCHOR):
        _anchor(xv, xk, lo + j0, beta, lin, zr, zi, rr, ri)
        for j in range(j0, min(L, j0 + ANCHOR)):
            for v in range(V):
                a_r = Ar[j, v]
                a_i = Ai[j, v]
                for b in range(LANES):
                    Sr[v, b] += a_r * zr[b] - a_i * zi[b]
                    Si[v, b] += a_r * zi[b] + a_i * zr[b]
            _step(zr, zi, rr, ri, sr, si)


@njit(parallel=True, cache=True, fastmath=_FM)
def monomial_sum(nodes, lo, beta, k, lin, Ar, Ai):
    """S_v(x_q) = sum_j A[j, v] e(psi(x_q, lo + j)); returns (Q, V) real/imag."""
    Q = nodes.shape[0]
    V = Ar.shape[1]
    out_r = np.zeros((Q, V))
    out_i = np.zeros((Q, V))
    groups = (Q + LANES - 1) // LANES
    ones = np.ones(Q)
    for g in prange(groups):
        xv = np.empty(LANES)
        wv = np.empty(LANES)
        xk = np.empty(LANES)
        sr = np.empty(LANES)
        si = np.empty(LANES)
        zr = np.empty(LANES)
        zi = np.empty(LANES)
        rr = np.empty(LANES)
        ri = np.empty(LANES)
        Sr = np.empty((V, LANES))
        Si = np.empty((V, LANES))
        q0 = g * LANES
        _load_lanes(nodes, ones, q0, Q, beta, k, xv, wv, xk, sr, si)
        _forward_lanes(xv, xk, lo, beta, lin, Ar, Ai, zr, zi, rr, ri, sr, si, Sr, Si)
        for b in range(min(LANES, Q - q0)):
            for v in range(V):
                out_r[q0 + b, v] = Sr[v, b]
                out_i[q0 + b, v] = Si[v, b]
    return out_r, out_i


@njit(parallel=True, cache=True, fastmath=_FM)
def monomial_basis(nodes, lo, L, beta, k, lin):
    """Matrix Z[q, j] = e(psi(x_q, lo + j)) built by the anchored recurrence."""
    Q = nodes.shape[0]
    Z = np.empty((Q, L), dtype=np.complex128)
    groups = (Q + LANES - 1) // LANES
    ones = np.ones(Q)
    for g in prange(groups):
        xv = np.empty(LANES)
        wv = np.empty(LANES)
        xk = np.empty(LANES)
        sr = np.empty(LANES)
        si = np.empty(LANES)
        zr = np.empty(LANES)
        zi = np.empty(LANES)
        rr = np.empty(LANES)
        ri = np.empty(LANES)
        q0 = g * LANES
        _load_lanes(nodes, ones, q0, Q, beta, k, xv, wv, xk, sr, si)
        nb = min(LANES, Q - q0)
        for j0 in range(0, L, ANCHOR):
            _anchor(xv, xk, lo + j0, beta, lin, zr, zi, rr, ri)
            for j in range(j0, min(L, j0 + ANCHOR)):
                for b in range(nb):
                    Z[q0 + b, j] = complex(zr[b], zi[b])
                _step(zr, zi, rr, ri, sr, si)
    return Z


@njit(cache=True, fastmath=_FM)
def _full_chunk(nodes, weights, q_lo, q_hi, lo, beta, k, lin, Ar, Ai, Pr, Pi):
    L, V = Ar.shape
    xv = np.empty(LANES)
    wv = np.empty(LANES)
    xk = np.empty(LANES)
    sr = np.empty(LANES)
    si = np.empty(LANES)
    zr = np.empty(LANES)
    zi = np.empty(LANES)
    rr = np.empty(LANES)
    ri = np.empty(LANES)
    Sr = np.empty((V, LANES))
    Si = np.empty((V, LANES))
    for q0 in range(q_lo, q_hi, LANES):
        _load_lanes(nodes, weights, q0, q_hi, beta, k, xv, wv, xk, sr, si)
        _forward_lanes(xv, xk, lo, beta, lin, Ar, Ai, zr, zi, rr, ri, sr, si, Sr, Si)
        for v in range(V):
            for b in range(LANES):
                Sr[v, b] *= wv[b]
                Si[v, b] *= wv[b]
        for j0 in range(0, L, ANCHOR):
            _anchor(xv, xk, lo + j0, beta, lin, zr, zi, rr, ri)
            for j in range(j0, min(L, j0 + ANCHOR)):
                for v in range(V):
                    acc_r = 0.0
                    acc_i = 0.0
                    for b in range(LANES):
                        acc_r += Sr[v, b] * zr[b] + Si[v, b] * zi[b]
                        acc_i += Si[v, b] * zr[b] - Sr[v, b] * zi[b]
                    Pr[j, v] += acc_r
                    Pi[j, v] += acc_i
                _step(zr, zi, rr, ri, sr, si)


@njit(parallel=True, cache=True, fastmath=_FM)
def gram_apply_full(nodes, weights, lo, beta, k, lin, Ar, Ai):
    """(G A)[m] = sum_q w_q S(x_q) conj(e(psi(x_q, m))) for a complex block A."""
    Q = nodes.shape[0]
    L, V = Ar.shape
    nch = _num_chunks(Q)
    Pr = np.zeros((nch, L, V))
    Pi = np.zeros((nch, L, V))
    for c in prange(nch):
        _full_chunk(nodes, weights, (c * Q) // nch, ((c + 1) * Q) // nch,
                    lo, beta, k, lin, Ar, Ai, Pr[c], Pi[c])
    Or = np.zeros((L, V))
    Oi = np.zeros((L, V))
    for c in range(nch):
        Or += Pr[c]
        Oi += Pi[c]
    return Or, Oi


@njit(cache=True, fastmath=_FM)
def _oddfold_chunk(nodes, weights, q_lo, q_hi, lo, beta, k, lin, U, P):
    L, V = U.shape
    xv = np.empty(LANES)
    wv = np.empty(LANES)
    xk = np.empty(LANES)
    sr = np.empty(LANES)
    si = np.empty(LANES)
    zr = np.empty(LANES)
    zi = np.empty(LANES)
    rr = np.empty(LANES)
    ri = np.empty(LANES)
    Sr = np.empty((V, LANES))
    Si = np.empty((V, LANES))
    for q0 in range(q_lo, q_hi, LANES):
        _load_lanes(nodes, weights, q0, q_hi, beta, k, xv, wv, xk, sr, si)
        Sr[:, :] = 0.0
        Si[:, :] = 0.0
        for j0 in range(0, L, ANCHOR):
            _anchor(xv, xk, lo + j0, beta, lin, zr, zi, rr, ri)
            for j in range(j0, min(L, j0 + ANCHOR)):
                for v in range(V):
                    u = U[j, v]
                    for b in range(LANES):
                        Sr[v, b] += u * zr[b]
                        Si[v, b] += u * zi[b]
                _step(zr, zi, rr, ri, sr, si)
        for v in range(V):
            for b in range(LANES):
                Sr[v, b] *= 2.0 * wv[b]
                Si[v, b] *= 2.0 * wv[b]
        for j0 in range(0, L, ANCHOR):
            _anchor(xv, xk, lo + j0, beta, lin, zr, zi, rr, ri)
            for j in range(j0, min(L, j0 + ANCHOR)):
                for v in range(V):
                    acc = 0.0
                    for b in range(LANES):
                        acc += Sr[v, b] * zr[b] + Si[v, b] * zi[b]
                    P[j, v] += acc
                _step(zr, zi, rr, ri, sr, si)


@njit(parallel=True, cache=True, fastmath=_FM)
def gram_apply_oddfold(nodes, weights, lo, beta, k, lin, U):
    """Real Gram action for odd k on a symmetric interval, from half-line nodes.

    Uses e(psi(-x, n)) = conj(e(psi(x, n))), so G = 2 Re H with H the Gram
    matrix over the positive half; U is a real block.
    """
    Q = nodes.shape[0]
    L, V = U.shape
    nch = _num_chunks(Q)
    P = np.zeros((nch, L, V))
    for c in prange(nch):
        _oddfold_chunk(nodes, weights, (c * Q) // nch, ((c + 1) * Q) // nch,
                       lo, beta, k, lin, U, P[c])
    out = np.zeros((L, V))
    for c in range(nch):
        out += P[c]
    return out


@njit(cache=True, fastmath=_FM)
def _parity_anchor(xv, xk, n, beta, lin, tr, ti, rr, ri, ur, ui):
    for b in range(LANES):
        ph = _wrap(beta * (n * n) * xk[b])
        tr[b] = math.cos(TWO_PI * ph)
        ti[b] = math.sin(TWO_PI * ph)
        p1 = _wrap(beta * (2 * n + 1) * xk[b])
        rr[b] = math.cos(TWO_PI * p1)
        ri[b] = math.sin(TWO_PI * p1)
        p3 = _wrap(lin * n * xv[b])
        ur[b] = math.cos(TWO_PI * p3)
        ui[b] = math.sin(TWO_PI * p3)


@njit(cache=True, fastmath=_FM)
def _parity_basis(n, parity, lin, tr, ti, ur, ui, fr, fi):
    # phi_n = gamma_n t_n cos(2 pi n x)        (even)
    # phi_n = sqrt2 i lin t_n sin(2 pi n x)    (odd); lin*ui = sin(2 pi n x)
    if parity > 0:
        g = 1.0 if n == 0 else math.sqrt(2.0)
        for b in range(LANES):
            fr[b] = g * tr[b] * ur[b]
            fi[b] = g * ti[b] * ur[b]
    else:
        g = math.sqrt(2.0)
        for b in range(LANES):
            s = lin * ui[b]
            fr[b] = -g * ti[b] * s * lin
            fi[b] = g * tr[b] * s * lin


@njit(cache=True, fastmath=_FM)
def _parity_step(tr, ti, rr, ri, sr, si, ur, ui, cr, ci):
    for b in range(LANES):
        t = tr[b] * rr[b] - ti[b] * ri[b]
        ti[b] = tr[b] * ri[b] + ti[b] * rr[b]
        tr[b] = t
        t = rr[b] * sr[b] - ri[b] * si[b]
        ri[b] = rr[b] * si[b] + ri[b] * sr[b]
        rr[b] = t
        t = ur[b] * cr[b] - ui[b] * ci[b]
        ui[b] = ur[b] * ci[b] + ui[b] * cr[b]
        ur[b] = t


@njit(cache=True, fastmath=_FM)
def _parity_chunk(nodes, weights, q_lo, q_hi, n0, beta, k, lin, parity, Br, Bi, Pr, Pi):
    L, V = Br.shape
    xv = np.empty(LANES)
    wv = np.empty(LANES)
    xk = np.empty(LANES)
    sr = np.empty(LANES)
    si = np.empty(LANES)
    tr = np.empty(LANES)
    ti = np.empty(LANES)
    rr = np.empty(LANES)
    ri = np.empty(LANES)
    ur = np.empty(LANES)
    ui = np.empty(LANES)
    cr = np.empty(LANES)
    ci = np.empty(LANES)
    fr = np.empty(LANES)
    fi = np.empty(LANES)
    Sr = np.empty((V, LANES))
    Si = np.empty((V, LANES))
    for q0 in range(q_lo, q_hi, LANES):
        _load_lanes(nodes, weights, q0, q_hi, beta, k, xv, wv, xk, sr, si)
        for b in range(LANES):
            p = _wrap(lin * xv[b])
            cr[b] = math.cos(TWO_PI * p)
            ci[b] = math.sin(TWO_PI * p)
        Sr[:, :] = 0.0
        Si[:, :] = 0.0
        for j0 in range(0, L, ANCHOR):
            _parity_anchor(xv, xk, n0 + j0, beta, lin, tr, ti, rr, ri, ur, ui)
            for j in range(j0, min(L, j0 + ANCHOR)):
                _parity_basis(n0 + j, parity, lin, tr, ti, ur, ui, fr, fi)
                for v in range(V):
                    a_r = Br[j, v]
                    a_i = Bi[j, v]
                    for b in range(LANES):
                        Sr[v, b] += a_r * fr[b] - a_i * fi[b]
                        Si[v, b] += a_r * fi[b] + a_i * fr[b]
                _parity_step(tr, ti, rr, ri, sr, si, ur, ui, cr, ci)
        for v in range(V):
            for b in range(LANES):
                Sr[v, b] *= 2.0 * wv[b]
                Si[v, b] *= 2.0 * wv[b]
        for j0 in range(0, L, ANCHOR):
            _parity_anchor(xv, xk, n0 + j0, beta, lin, tr, ti, rr, ri, ur, ui)
            for j in range(j0, min(L, j0 + ANCHOR)):
                _parity_basis(n0 + j, parity, lin, tr, ti, ur, ui, fr, fi)
                for v in range(V):
                    acc_r = 0.0
                    acc_i = 0.0
                    for b in range(LANES):
                        acc_r += Sr[v, b] * fr[b] + Si[v, b] * fi[b]
                        acc_i += Si[v, b] * fr[b] - Sr[v, b] * fi[b]
                    Pr[j, v] += acc_r
                    Pi[j, v] += acc_i
                _parity_step(tr, ti, rr, ri, sr, si, ur, ui, cr, ci)


@njit(parallel=True, cache=True, fastmath=_FM)
def gram_apply_parity(nodes, weights, N, beta, k, lin, parity, Br, Bi):
    """Gram action restricted to coefficient vectors with a_{-n} = parity*a_n.

    For even k, e(psi(-x, n)) = e(psi(x, -n)); the restricted operator is
    represented in the orthonormal coordinates b_0 = a_0, b_n = sqrt2*a_n
    (even) or b_n = sqrt2*a_n, n >= 1 (odd), using half-line nodes only.
    """
    Q = nodes.shape[0]
    L, V = Br.shape
    n0 = 0 if parity > 0 else 1
    nch = _num_chunks(Q)
    Pr = np.zeros((nch, L, V))
    Pi = np.zeros((nch, L, V))
    for c in prange(nch):
        _parity_chunk(nodes, weights, (c * Q) // nch, ((c + 1) * Q) // nch,
                      n0, beta, k, lin, parity, Br, Bi, Pr[c], Pi[c])
    Or = np.zeros((L, V))
    Oi = np.zeros((L, V))
    for c in range(nch):
        Or += Pr[c]
        Oi += Pi[c]
    return Or, Oi


@njit(cache=True)
def jacobi_hermitian_eigenvalues(A, tol, max_sweeps):
    """Cyclic Jacobi for a Hermitian matrix; returns (eigenvalues, sweeps, off_norm).

    Each rotation first rotates the phase of a_pq to make it real, then applies
    the classical real symmetric rotation.  Works on a private copy.
    """
    n = A.shape[0]
    a = A.copy()
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j].real ** 2 + a[i, j].imag ** 2
    scale = math.sqrt(scale)
    sweeps = 0
    off = 0.0
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j].real ** 2 + a[i, j].imag ** 2
        off = math.sqrt(2.0 * off)
        if off <= tol * scale or scale == 0.0:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                h = a[p, q]
                mag = abs(h)
                if mag == 0.0:
                    continue
                ph = h.conjugate() / mag
                # column q *= ph, row q *= conj(ph): a_pq becomes real
                for r in range(n):
                    a[r, q] = a[r, q] * ph
                for r in range(n):
                    a[q, r] = a[q, r] * ph.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    if r != p and r != q:
                        arp = a[r, p]
                        arq = a[r, q]
                        a[r, p] = c * arp - s * arq
                        a[r, q] = s * arp + c * arq
                        a[p, r] = a[r, p].conjugate()
                        a[q, r] = a[r, q].conjugate()
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                a[p, q] = 0.0
                a[q, p] = 0.0
    ev = np.empty(n)
    for i in range(n):
        ev[i] = a[i, i].real
    return ev, sweeps, off / scale if scale > 0 else 0.0
