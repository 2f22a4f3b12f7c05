"""Numba-compiled inner loops for the grid right-hand sides.

Everything here is an optional fast path: each kernel reproduces one of the
vectorized numpy routines (same arithmetic, point by point) and is selected
at call sites only for float64 grid-shaped input.  If numba is missing the
module still imports and HAVE_NUMBA is False.
"""

import numpy as np

from .tensor_core import LEVI3, LEVI4

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard speedup, soft dep
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# pointwise reduced-Ricci source


@njit(cache=True)
def _ricci_lower_kernel(g, gi, dg, out):
    """Second-derivative-free Ricci remainder, per point.

    g, gi: (P, 4, 4); dg: (P, 4, 4, 4) with leading derivative slot;
    out: (P, 4, 4).
    """
    npts = g.shape[0]
    di = np.empty((4, 4, 4))
    tmp = np.empty((4, 4, 4))
    c_low = np.empty((4, 4, 4))
    gam = np.empty((4, 4, 4))
    ric = np.empty((4, 4))
    dgc = np.empty((4, 4))
    tr_di = np.empty(4)
    gam_tr = np.empty(4)
    v1 = np.empty(4)
    sv = np.empty(4)
    w = np.empty((4, 4))
    u = np.empty((4, 4))
    for p in range(npts):
        gl = g[p]
        gil = gi[p]
        dgl = dg[p]
        # d_b g^{xy} = -g^{xc} g^{yd} d_b g_{cd}
        for b in range(4):
            for x in range(4):
                for d in range(4):
                    acc = 0.0
                    for c in range(4):
                        acc += gil[x, c] * dgl[b, c, d]
                    tmp[b, x, d] = acc
        for b in range(4):
            for x in range(4):
                for y in range(4):
                    acc = 0.0
                    for d in range(4):
                        acc += tmp[b, x, d] * gil[y, d]
                    di[b, x, y] = -acc
        # C_{lmn} = d_m g_{ln} + d_n g_{lm} - d_l g_{mn};  Gamma = g^{-1} C / 2
        for l in range(4):
            for m in range(4):
                for n in range(4):
                    c_low[l, m, n] = dgl[m, l, n] + dgl[n, l, m] - dgl[l, m, n]
        for k in range(4):
            for m in range(4):
                for n in range(4):
                    acc = 0.0
                    for l in range(4):
                        acc += gil[k, l] * c_low[l, m, n]
                    gam[k, m, n] = 0.5 * acc
        for l in range(4):
            acc = 0.0
            for a in range(4):
                acc += di[a, a, l]
            tr_di[l] = acc
        for b in range(4):
            acc = 0.0
            for a in range(4):
                acc += gam[a, a, b]
            gam_tr[b] = acc
        # Ricci from the two traces of d Gamma plus the Gamma*Gamma terms
        for m in range(4):
            for n in range(4):
                acc = 0.0
                for l in range(4):
                    acc += 0.5 * tr_di[l] * c_low[l, m, n]
                for a in range(4):
                    for l in range(4):
                        acc -= 0.5 * di[n, a, l] * c_low[l, a, m]
                for b in range(4):
                    acc += gam_tr[b] * gam[b, m, n]
                for a in range(4):
                    for b in range(4):
                        acc -= gam[a, n, b] * gam[b, a, m]
                ric[m, n] = acc
        # d_mu Gamma^kappa of the contracted gauge vector
        for a in range(4):
            acc = 0.0
            for n in range(4):
                for b in range(4):
                    acc += gil[n, b] * dgl[n, a, b]
            v1[a] = acc
        for n in range(4):
            acc = 0.0
            for a in range(4):
                for b in range(4):
                    acc += gil[a, b] * dgl[n, a, b]
            sv[n] = acc
        for m in range(4):
            for a in range(4):
                acc = 0.0
                for n in range(4):
                    for b in range(4):
                        acc += di[m, n, b] * dgl[n, a, b]
                w[m, a] = acc
        for m in range(4):
            for n in range(4):
                acc = 0.0
                for a in range(4):
                    for b in range(4):
                        acc += di[m, a, b] * dgl[n, a, b]
                u[m, n] = acc
        for m in range(4):
            for k in range(4):
                acc = 0.0
                for a in range(4):
                    acc += di[m, k, a] * v1[a] + gil[k, a] * w[m, a]
                for n in range(4):
                    acc -= 0.5 * (di[m, k, n] * sv[n] + gil[k, n] * u[m, n])
                dgc[m, k] = acc
        for m in range(4):
            for n in range(4):
                acc = ric[m, n]
                for k in range(4):
                    acc -= 0.5 * (gl[k, n] * dgc[m, k] + gl[k, m] * dgc[n, k])
                out[p, m, n] = acc


def ricci_lower_grid(g, g_inv, dg):
    """ricci_lower_order for real grid fields via the pointwise kernel."""
    shape = g.shape[2:]
    npts = int(np.prod(shape))
    gp = np.ascontiguousarray(np.moveaxis(g.reshape(4, 4, npts), -1, 0))
    gip = np.ascontiguousarray(np.moveaxis(g_inv.reshape(4, 4, npts), -1, 0))
    dgp = np.ascontiguousarray(np.moveaxis(dg.reshape(4, 4, 4, npts), -1, 0))
    out = np.empty((npts, 4, 4))
    _ricci_lower_kernel(gp, gip, dgp, out)
    return np.ascontiguousarray(np.moveaxis(out, 0, -1)).reshape((4, 4) + shape)


# ---------------------------------------------------------------------------
# closed-form Maxwell constitutive inversion

# The 6 index pairs (a < b) of an antisymmetric 4x4 array, the complementary
# pair (k < l), and the symbol value [a b k l]; contracting the permutation
# symbol with an antisymmetric two-form reduces to one term per pair.
_PAIR_A = np.array([0, 0, 0, 1, 1, 2])
_PAIR_B = np.array([1, 2, 3, 2, 3, 3])
_COMP_K = np.array([2, 1, 1, 0, 0, 0])
_COMP_L = np.array([3, 3, 2, 3, 2, 1])
_PAIR_SGN = np.array([LEVI4[a, b, k, l] for a, b, k, l
                      in zip(_PAIR_A, _PAIR_B, _COMP_K, _COMP_L)])


@njit(cache=True)
def _maxwell_m_low(pa, pb, ck, cl, sgn, gl, coef, f, m):
    """m_{mn} = g_{ma} g_{nb} (star f)^{# a b} at one point, coef = -1/(2 sd);
    f must be exactly antisymmetric."""
    for mi in range(4):
        for ni in range(4):
            m[mi, ni] = 0.0
    for p in range(6):
        a = pa[p]
        b = pb[p]
        val = 2.0 * coef * sgn[p] * f[ck[p], cl[p]]
        if val != 0.0:
            for mi in range(4):
                for ni in range(4):
                    m[mi, ni] += val * (gl[mi, a] * gl[ni, b]
                                        - gl[mi, b] * gl[ni, a])


@njit(cache=True)
def _d_of_m(levi3, m, d):
    for j in range(3):
        acc = 0.0
        for a in range(3):
            for b in range(3):
                acc += levi3[j, a, b] * m[1 + a, 1 + b]
        d[j] = 0.5 * acc


@njit(cache=True)
def _maxwell_invert_kernel(levi3, pa, pb, ck, cl, sgn, g, sd,
                           bfield, dfield, e_out, h_out):
    """Exact linear solve for (E, H) from (B, D) at the Maxwell model.

    g: (P, 4, 4); sd: (P,); bfield, dfield, e_out, h_out: (P, 3).
    """
    npts = g.shape[0]
    f = np.empty((4, 4))
    m = np.empty((4, 4))
    amat = np.empty((3, 3))
    hcol = np.empty((3, 3))
    d0 = np.empty(3)
    h0 = np.empty(3)
    col = np.empty(3)
    rhs = np.empty(3)
    for p in range(npts):
        gl = g[p]
        coef = -0.5 / sd[p]
        # B-sourced part
        for i in range(4):
            for j in range(4):
                f[i, j] = 0.0
        for i in range(3):
            for a in range(3):
                for b in range(3):
                    f[1 + a, 1 + b] += levi3[i, a, b] * bfield[p, i]
        _maxwell_m_low(pa, pb, ck, cl, sgn, gl, coef, f, m)
        _d_of_m(levi3, m, d0)
        for j in range(3):
            h0[j] = m[1 + j, 0]
        # columns of the E dependence from unit electric fields
        for k in range(3):
            for i in range(4):
                for j in range(4):
                    f[i, j] = 0.0
            f[1 + k, 0] = 1.0
            f[0, 1 + k] = -1.0
            _maxwell_m_low(pa, pb, ck, cl, sgn, gl, coef, f, m)
            _d_of_m(levi3, m, col)
            for j in range(3):
                amat[j, k] = col[j]
                hcol[j, k] = m[1 + j, 0]
        for j in range(3):
            rhs[j] = dfield[p, j] - d0[j]
        # 3x3 solve by the adjugate
        det = (amat[0, 0] * (amat[1, 1] * amat[2, 2] - amat[1, 2] * amat[2, 1])
               - amat[0, 1] * (amat[1, 0] * amat[2, 2] - amat[1, 2] * amat[2, 0])
               + amat[0, 2] * (amat[1, 0] * amat[2, 1] - amat[1, 1] * amat[2, 0]))
        e0 = (rhs[0] * (amat[1, 1] * amat[2, 2] - amat[1, 2] * amat[2, 1])
              - amat[0, 1] * (rhs[1] * amat[2, 2] - amat[1, 2] * rhs[2])
              + amat[0, 2] * (rhs[1] * amat[2, 1] - amat[1, 1] * rhs[2])) / det
        e1 = (amat[0, 0] * (rhs[1] * amat[2, 2] - amat[1, 2] * rhs[2])
              - rhs[0] * (amat[1, 0] * amat[2, 2] - amat[1, 2] * amat[2, 0])
              + amat[0, 2] * (amat[1, 0] * rhs[2] - rhs[1] * amat[2, 0])) / det
        e2 = (amat[0, 0] * (amat[1, 1] * rhs[2] - rhs[1] * amat[2, 1])
              - amat[0, 1] * (amat[1, 0] * rhs[2] - rhs[1] * amat[2, 0])
              + rhs[0] * (amat[1, 0] * amat[2, 1] - amat[1, 1] * amat[2, 0])) / det
        e_out[p, 0] = e0
        e_out[p, 1] = e1
        e_out[p, 2] = e2
        # H by linearity from the stored columns
        for j in range(3):
            h_out[p, j] = -(h0[j] + hcol[j, 0] * e0 + hcol[j, 1] * e1
                            + hcol[j, 2] * e2)


def maxwell_invert_grid(g_mat, sqrt_det, B, D):
    """Exact (E, H) from (B, D) for Maxwell; grid-shaped float arrays."""
    shape = B.shape[1:]
    npts = int(np.prod(shape))
    gp = np.ascontiguousarray(np.moveaxis(g_mat.reshape(4, 4, npts), -1, 0))
    sdp = np.ascontiguousarray(np.broadcast_to(sqrt_det, shape).reshape(npts))
    bp = np.ascontiguousarray(B.reshape(3, npts).T)
    dp = np.ascontiguousarray(D.reshape(3, npts).T)
    e_out = np.empty((npts, 3))
    h_out = np.empty((npts, 3))
    _maxwell_invert_kernel(LEVI3, _PAIR_A, _PAIR_B, _COMP_K, _COMP_L,
                           _PAIR_SGN, gp, sdp, bp, dp, e_out, h_out)
    e = np.ascontiguousarray(e_out.T).reshape((3,) + shape)
    h = np.ascontiguousarray(h_out.T).reshape((3,) + shape)
    return e, h


# ---------------------------------------------------------------------------
# pointwise stress-energy pieces


@njit(cache=True)
def _stress_pieces_kernel(pa, pb, ck, cl, sgn, gi, sd, f, f1, f2, sq):
    """Per point: invariants F1, F2 and the quadratic sq_{mn} = g^{kl} F_{mk} F_{nl}.

    gi: (P, 4, 4); sd: (P,); f: (P, 4, 4); f1, f2: (P,); sq: (P, 4, 4).
    """
    npts = gi.shape[0]
    fu = np.empty((4, 4))
    tmp = np.empty((4, 4))
    for p in range(npts):
        gil = gi[p]
        fl = f[p]
        for m in range(4):
            for b in range(4):
                acc = 0.0
                for a in range(4):
                    acc += gil[m, a] * fl[a, b]
                tmp[m, b] = acc
        for m in range(4):
            for n in range(4):
                acc = 0.0
                for b in range(4):
                    acc += tmp[m, b] * gil[n, b]
                fu[m, n] = acc
        acc = 0.0
        for m in range(4):
            for n in range(4):
                acc += fu[m, n] * fl[m, n]
        f1[p] = 0.5 * acc
        acc = 0.0
        for q in range(6):
            acc += 4.0 * sgn[q] * fl[pa[q], pb[q]] * fl[ck[q], cl[q]]
        f2[p] = -0.125 * acc / sd[p]
        # sq_{mn} = F_{mk} g^{kl} F_{nl} = F_{mk} (F g^{-1})^T... use tmp2
        for m in range(4):
            for n in range(4):
                acc = 0.0
                for k in range(4):
                    for l in range(4):
                        acc += gil[k, l] * fl[m, k] * fl[n, l]
                sq[p, m, n] = acc


def stress_pieces_grid(g_inv, sqrt_det, f_low):
    """(F1, F2, sq) for grid fields via the pointwise kernel."""
    shape = f_low.shape[2:]
    npts = int(np.prod(shape))
    gip = np.ascontiguousarray(np.moveaxis(g_inv.reshape(4, 4, npts), -1, 0))
    sdp = np.ascontiguousarray(np.broadcast_to(sqrt_det, shape).reshape(npts))
    fp = np.ascontiguousarray(np.moveaxis(f_low.reshape(4, 4, npts), -1, 0))
    f1 = np.empty(npts)
    f2 = np.empty(npts)
    sq = np.empty((npts, 4, 4))
    _stress_pieces_kernel(_PAIR_A, _PAIR_B, _COMP_K, _COMP_L, _PAIR_SGN,
                          gip, sdp, fp, f1, f2, sq)
    sq_out = np.ascontiguousarray(np.moveaxis(sq, 0, -1)).reshape((4, 4) + shape)
    return f1.reshape(shape), f2.reshape(shape), sq_out


# ---------------------------------------------------------------------------
# single-pass difference stencils (periodic, same arithmetic as the rolls)


@njit(cache=True)
def _d1_axis2(f, inv12dx, out):
    m, n = f.shape[0], f.shape[2]
    for r in range(m):
        for i in range(n):
            for j in range(n):
                for k in range(2, n - 2):
                    out[r, i, j, k] = (-f[r, i, j, k + 2]
                                       + 8.0 * f[r, i, j, k + 1]
                                       - 8.0 * f[r, i, j, k - 1]
                                       + f[r, i, j, k - 2]) * inv12dx
                for k in (0, 1, n - 2, n - 1):
                    out[r, i, j, k] = (-f[r, i, j, (k + 2) % n]
                                       + 8.0 * f[r, i, j, (k + 1) % n]
                                       - 8.0 * f[r, i, j, (k - 1) % n]
                                       + f[r, i, j, (k - 2) % n]) * inv12dx


@njit(cache=True)
def _d1_axis1(f, inv12dx, out):
    m, n = f.shape[0], f.shape[2]
    for r in range(m):
        for i in range(n):
            for j in range(n):
                jp2 = (j + 2) % n
                jp1 = (j + 1) % n
                jm1 = (j - 1) % n
                jm2 = (j - 2) % n
                for k in range(n):
                    out[r, i, j, k] = (-f[r, i, jp2, k]
                                       + 8.0 * f[r, i, jp1, k]
                                       - 8.0 * f[r, i, jm1, k]
                                       + f[r, i, jm2, k]) * inv12dx


@njit(cache=True)
def _d1_axis0(f, inv12dx, out):
    m, n = f.shape[0], f.shape[2]
    for r in range(m):
        for i in range(n):
            ip2 = (i + 2) % n
            ip1 = (i + 1) % n
            im1 = (i - 1) % n
            im2 = (i - 2) % n
            for j in range(n):
                for k in range(n):
                    out[r, i, j, k] = (-f[r, ip2, j, k]
                                       + 8.0 * f[r, ip1, j, k]
                                       - 8.0 * f[r, im1, j, k]
                                       + f[r, im2, j, k]) * inv12dx


@njit(cache=True)
def _d2_axis2(f, inv12dx2, out):
    m, n = f.shape[0], f.shape[2]
    for r in range(m):
        for i in range(n):
            for j in range(n):
                for k in range(2, n - 2):
                    out[r, i, j, k] = (-f[r, i, j, k + 2]
                                       + 16.0 * f[r, i, j, k + 1]
                                       - 30.0 * f[r, i, j, k]
                                       + 16.0 * f[r, i, j, k - 1]
                                       - f[r, i, j, k - 2]) * inv12dx2
                for k in (0, 1, n - 2, n - 1):
                    out[r, i, j, k] = (-f[r, i, j, (k + 2) % n]
                                       + 16.0 * f[r, i, j, (k + 1) % n]
                                       - 30.0 * f[r, i, j, k]
                                       + 16.0 * f[r, i, j, (k - 1) % n]
                                       - f[r, i, j, (k - 2) % n]) * inv12dx2


@njit(cache=True)
def _d2_axis1(f, inv12dx2, out):
    m, n = f.shape[0], f.shape[2]
    for r in range(m):
        for i in range(n):
            for j in range(n):
                jp2 = (j + 2) % n
                jp1 = (j + 1) % n
                jm1 = (j - 1) % n
                jm2 = (j - 2) % n
                for k in range(n):
                    out[r, i, j, k] = (-f[r, i, jp2, k]
                                       + 16.0 * f[r, i, jp1, k]
                                       - 30.0 * f[r, i, j, k]
                                       + 16.0 * f[r, i, jm1, k]
                                       - f[r, i, jm2, k]) * inv12dx2


@njit(cache=True)
def _d2_axis0(f, inv12dx2, out):
    m, n = f.shape[0], f.shape[2]
    for r in range(m):
        for i in range(n):
            ip2 = (i + 2) % n
            ip1 = (i + 1) % n
            im1 = (i - 1) % n
            im2 = (i - 2) % n
            for j in range(n):
                for k in range(n):
                    out[r, i, j, k] = (-f[r, ip2, j, k]
                                       + 16.0 * f[r, ip1, j, k]
                                       - 30.0 * f[r, i, j, k]
                                       + 16.0 * f[r, im1, j, k]
                                       - f[r, im2, j, k]) * inv12dx2


_D1 = (_d1_axis0, _d1_axis1, _d1_axis2)
_D2 = (_d2_axis0, _d2_axis1, _d2_axis2)


def _grid_view(f):
    """(M, n, n, n) C-contiguous view of a grid field, or None."""
    if f.dtype != np.float64 or f.ndim < 3 or not f.flags.c_contiguous:
        return None
    n = f.shape[-1]
    if f.shape[-2] != n or f.shape[-3] != n:
        return None
    return f.reshape(-1, n, n, n)


def d1_grid(f, axis, dx):
    v = _grid_view(f)
    if v is None:
        return None
    out = np.empty_like(v)
    _D1[axis](v, 1.0 / (12.0 * dx), out)
    return out.reshape(f.shape)


def d2_grid(f, axis, dx):
    v = _grid_view(f)
    if v is None:
        return None
    out = np.empty_like(v)
    _D2[axis](v, 1.0 / (12.0 * dx * dx), out)
    return out.reshape(f.shape)
