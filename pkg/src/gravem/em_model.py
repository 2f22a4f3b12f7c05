"""Lagrangian families for nonlinear electrodynamics.

A model is a scalar Lagrangian of the two field invariants with analytic
first and second partials.  From it we build the Maxwell tensor (the
two-form whose Hodge dual is the field derivative of the Lagrangian), the
rank-4 principal tensor entering the quasilinear field equations, the
energy-momentum tensor, the E/B/D/H split on constant-time slices, and the
numerical inversion of the constitutive map used by the evolution code.

All raw kernels accept arrays with trailing broadcast axes and tolerate
complex dtype (used by complex-step differentiation in the diagnostics).
"""

import numpy as np

from . import fast
from .tensor_core import (MINK, LEVI3, LEVI4, MetricState, SymTensor4, TwoForm,
                          dual_sharp, form_mat, invariants_raw, lower2, raise2,
                          sym_mat)


class DomainViolation(Exception):
    pass


class NoConvergence(Exception):
    pass


class DecViolation(Exception):
    pass


MBI_RADICAND_FLOOR = 1e-8


class EmModel:
    """Lagrangian of the invariants; kinds: maxwell, born_infeld, polynomial.

    partials(F1, F2) returns (L, L1, L2, L11, L12, L22) elementwise.
    """

    def __init__(self, kind, beta=1.0, coeffs=None):
        if kind not in ("maxwell", "born_infeld", "polynomial"):
            raise ValueError("unknown model kind %r" % kind)
        if kind == "born_infeld" and beta <= 0:
            raise ValueError("beta must be positive")
        self.kind = kind
        self.beta = float(beta)
        # polynomial coefficients: {(i, j): c} multiplying F1^i F2^j,
        # defaulting to the pure linear-theory term -1/2 F1.
        self.coeffs = {(1, 0): -0.5} if coeffs is None else dict(coeffs)

    @classmethod
    def maxwell(cls):
        return cls("maxwell")

    @classmethod
    def born_infeld(cls, beta=1.0):
        return cls("born_infeld", beta=beta)

    @classmethod
    def polynomial(cls, coeffs):
        return cls("polynomial", coeffs=coeffs)

    def partials(self, f1, f2):
        f1 = np.asarray(f1)
        f2 = np.asarray(f2)
        zero = np.zeros(np.broadcast(f1, f2).shape, dtype=np.result_type(f1, f2))
        if self.kind == "maxwell":
            return (-0.5 * f1 + zero, -0.5 + zero, zero, zero, zero, zero)
        if self.kind == "born_infeld":
            b4 = self.beta ** 4
            b8 = b4 * b4
            s = 1.0 + b4 * f1 - b8 * f2 * f2
            if np.any(np.real(s) < MBI_RADICAND_FLOOR):
                raise DomainViolation("MBI radicand below floor")
            rt = np.sqrt(s)
            lag = (1.0 - rt) / b4
            l1 = -0.5 / rt
            l2 = b4 * f2 / rt
            l11 = 0.25 * b4 / rt ** 3
            l12 = -0.5 * b8 * f2 / rt ** 3
            l22 = b4 / rt + b4 * b8 * f2 * f2 / rt ** 3
            return (lag, l1, l2, l11, l12, l22)
        # polynomial
        out = [zero.copy() for _ in range(6)]
        for (i, j), c in self.coeffs.items():
            out[0] = out[0] + c * f1 ** i * f2 ** j
            if i >= 1:
                out[1] = out[1] + c * i * f1 ** (i - 1) * f2 ** j
            if j >= 1:
                out[2] = out[2] + c * j * f1 ** i * f2 ** (j - 1)
            if i >= 2:
                out[3] = out[3] + c * i * (i - 1) * f1 ** (i - 2) * f2 ** j
            if i >= 1 and j >= 1:
                out[4] = out[4] + c * i * j * f1 ** (i - 1) * f2 ** (j - 1)
            if j >= 2:
                out[5] = out[5] + c * j * (j - 1) * f1 ** i * f2 ** (j - 2)
        return tuple(out)


def lagrangian(model, f1, f2):
    return model.partials(f1, f2)[0]


# ---------------------------------------------------------------------------
# raw kernels (arrays in, arrays out)


def _metric_of(g):
    if isinstance(g, MetricState):
        return sym_mat(g.g), sym_mat(g.g_inv), g.sqrt_det_g
    return g  # assume (g, g_inv, sqrt_det) tuple


def maxwell_tensor_raw(model, g_mat, g_inv, sqrt_det, f_low):
    """M_{mu nu}: the two-form whose (curved) dual-sharp is 2 L1 F^# + L2 (*F)^#."""
    f1, f2 = invariants_raw(g_inv, sqrt_det, f_low)
    _, l1, l2, _, _, _ = model.partials(f1, f2)
    star_m_sharp = (2.0 * l1 * raise2(g_inv, f_low)
                    + l2 * dual_sharp(g_inv, sqrt_det, f_low))
    # invert the dual with double-dual = -identity
    star_m_low = lower2(g_mat, star_m_sharp)
    return -lower2(g_mat, dual_sharp(g_inv, sqrt_det, star_m_low))


def big_n_raw(model, g_inv, sqrt_det, f_low):
    """Principal rank-4 tensor N^{# mu nu kappa lambda} in closed form."""
    f1, f2 = invariants_raw(g_inv, sqrt_det, f_low)
    _, l1, l2, l11, l12, l22 = model.partials(f1, f2)
    f_up = raise2(g_inv, f_low)
    df_up = dual_sharp(g_inv, sqrt_det, f_low)
    anti = (np.einsum("mk...,nl...->mnkl...", g_inv, g_inv)
            - np.einsum("ml...,nk...->mnkl...", g_inv, g_inv))
    n = (-l1 * anti
         - 2.0 * l11 * np.einsum("mn...,kl...->mnkl...", f_up, f_up)
         - l12 * (np.einsum("mn...,kl...->mnkl...", f_up, df_up)
                  + np.einsum("mn...,kl...->mnkl...", df_up, f_up))
         - 0.5 * l22 * np.einsum("mn...,kl...->mnkl...", df_up, df_up))
    return n


def big_n_principal_block(h_low):
    """The explicit (m, h) principal part: 1/2 {mm - mm - hm + hm - mh + mh}
    with h indices raised by the Minkowski metric."""
    h_low = np.asarray(h_low)
    m = MINK.reshape((4, 4) + (1,) * (h_low.ndim - 2)) + np.zeros_like(h_low)
    h_up = np.einsum("ma,kb,ab...->mk...", MINK, MINK, h_low)
    blk = (np.einsum("mk...,nl...->mnkl...", m, m)
           - np.einsum("ml...,nk...->mnkl...", m, m)
           - np.einsum("mk...,nl...->mnkl...", h_up, m)
           + np.einsum("ml...,nk...->mnkl...", h_up, m)
           - np.einsum("mk...,nl...->mnkl...", m, h_up)
           + np.einsum("ml...,nk...->mnkl...", m, h_up))
    return 0.5 * blk


class MaterialTensors:
    def __init__(self, m_dual_sharp, n_sharp, n_triangle):
        self.M_dual_sharp = m_dual_sharp
        self.N_sharp = n_sharp
        self.N_triangle = n_triangle


def maxwell_tensor(model, g, F):
    g_mat, g_inv, sqrt_det = _metric_of(g)
    m_low = maxwell_tensor_raw(model, g_mat, g_inv, sqrt_det, form_mat(F))
    if isinstance(F, TwoForm):
        return TwoForm.from_matrix(0.5 * (m_low - m_low.T))
    return m_low


def big_n(model, g, F):
    g_mat, g_inv, sqrt_det = _metric_of(g)
    f_low = form_mat(F)
    f1, f2 = invariants_raw(g_inv, sqrt_det, f_low)
    _, l1, l2, _, _, _ = model.partials(f1, f2)
    star_m_sharp = (2.0 * l1 * raise2(g_inv, f_low)
                    + l2 * dual_sharp(g_inv, sqrt_det, f_low))
    n_sharp = big_n_raw(model, g_inv, sqrt_det, f_low)
    h_low = g_mat - MINK.reshape((4, 4) + (1,) * (np.ndim(g_mat) - 2))
    n_tri = n_sharp - big_n_principal_block(h_low)
    return MaterialTensors(star_m_sharp, n_sharp, n_tri)


def stress_energy_raw(model, g_mat, g_inv, sqrt_det, f_low):
    if (fast.HAVE_NUMBA and isinstance(f_low, np.ndarray) and f_low.ndim >= 3
            and f_low.dtype == np.float64 and np.asarray(g_inv).dtype == np.float64
            and np.shape(g_inv) == f_low.shape):
        f1, f2, sq = fast.stress_pieces_grid(g_inv, sqrt_det, f_low)
    else:
        f1, f2 = invariants_raw(g_inv, sqrt_det, f_low)
        sq = np.einsum("kl...,mk...,nl...->mn...", g_inv, f_low, f_low)
    lag, l1, l2, _, _, _ = model.partials(f1, f2)
    scal = lag - f2 * l2
    g_b = g_mat
    if np.ndim(g_mat) == 2 and np.ndim(scal) > 0:
        g_b = np.reshape(g_mat, (4, 4) + (1,) * np.ndim(scal))
    return -2.0 * l1 * sq + scal * g_b


def stress_energy(model, g, F):
    g_mat, g_inv, sqrt_det = _metric_of(g)
    t = stress_energy_raw(model, g_mat, g_inv, sqrt_det, form_mat(F))
    if isinstance(F, TwoForm):
        return SymTensor4.from_matrix(0.5 * (t + t.T))
    return t


def dec_check(model, g, F, trials=1000, seed=0):
    """Dominant-energy sufficient conditions plus sampled T(X, Y) >= 0."""
    g_mat, g_inv, sqrt_det = _metric_of(g)
    f_low = form_mat(F)
    f1, f2 = invariants_raw(g_inv, sqrt_det, f_low)
    lag, l1, l2, _, _, _ = model.partials(f1, f2)
    if not np.all(np.real(l1) < 0.0):
        raise DecViolation("dL/dF1 not negative")
    trace_cond = lag - f1 * l1 - f2 * l2
    if np.any(np.real(trace_cond) > 1e-12):
        raise DecViolation("trace condition positive: %.3e" % float(np.max(trace_cond)))
    t = stress_energy_raw(model, g_mat, g_inv, sqrt_det, f_low)
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = 0
    while count < trials:
        v = rng.uniform(-0.85, 0.85, (3, 2))
        x = np.array([1.0, v[0, 0], v[1, 0], v[2, 0]])
        y = np.array([1.0, v[0, 1], v[1, 1], v[2, 1]])
        if x @ g_mat @ x >= 0 or y @ g_mat @ y >= 0:
            continue
        count += 1
        val = x @ t @ y
        worst = min(worst, float(val))
        if val < -1e-12:
            raise DecViolation("T(X,Y) = %.3e < 0" % val)
    return {"min_txy": worst, "trials": trials}


# ---------------------------------------------------------------------------
# E/B/D/H split on constant-time slices (flat, wave-coordinate components)


class EmFieldSplit:
    def __init__(self, E, B, D, H):
        self.E = np.asarray(E)
        self.B = np.asarray(B)
        self.D = np.asarray(D)
        self.H = np.asarray(H)


def split_two_form(f_low):
    """(E, B) with E_j = F_{j0}, B_j = (1/2)[jab] F_{ab}."""
    f_low = np.asarray(f_low)
    e = f_low[1:, 0]
    b = 0.5 * np.einsum("jab,ab...->j...", LEVI3, f_low[1:, 1:])
    return e, b


def join_two_form(e, b):
    """Inverse of split_two_form: F_{j0} = E_j, F_{jk} = [ijk] B_i."""
    e = np.asarray(e)
    b = np.asarray(b)
    f = np.zeros((4, 4) + e.shape[1:], dtype=np.result_type(e, b))
    f[1:, 0] = e
    f[0, 1:] = -e
    f[1:, 1:] = np.einsum("ijk,i...->jk...", LEVI3, b)
    return f


def field_split(g, F, M):
    e, b = split_two_form(form_mat(F))
    m_low = form_mat(M)
    h = -m_low[1:, 0]
    d = 0.5 * np.einsum("jab,ab...->j...", LEVI3, m_low[1:, 1:])
    return EmFieldSplit(e, b, d, h)


def recompose(split):
    """(F, M) back from the four slice vectors; exact inverse of field_split."""
    f = join_two_form(split.E, split.B)
    m = join_two_form(-split.H, split.D)
    return f, m


def _dh_from_maxwell(m_low):
    d = 0.5 * np.einsum("jab,ab...->j...", LEVI3, m_low[1:, 1:])
    h = -m_low[1:, 0]
    return d, h


def _inv3(a):
    """Vectorized exact 3x3 inverse; a has shape (3, 3, ...)."""
    det = (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
           - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
           + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))
    out = np.empty_like(a)
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = a[r[0], c[0]] * a[r[1], c[1]] - a[r[0], c[1]] * a[r[1], c[0]]
            out[i, j] = ((-1.0) ** (i + j)) * minor / det
    return out


def constitutive_invert(model, g, B, D, tol=1e-12, max_iter=25):
    """Solve the constitutive map for (E, H) given the evolved pair (B, D).

    Newton iteration on E with the linear-theory guess E0 = D; the forward
    map builds F from (E, B), forms the Maxwell tensor at the metric g, and
    reads off D.  Works elementwise over trailing axes.
    """
    g_mat, g_inv, sqrt_det = _metric_of(g)
    b = np.asarray(B, dtype=float)
    d = np.asarray(D, dtype=float)
    if (model.kind == "maxwell" and fast.HAVE_NUMBA
            and isinstance(g_mat, np.ndarray) and g_mat.ndim >= 3
            and g_mat.dtype == np.float64 and b.shape == d.shape
            and b.shape[1:] == g_mat.shape[2:]):
        # the map is linear in F for this model, so solve it exactly
        return fast.maxwell_invert_grid(g_mat, sqrt_det, b, d)

    def forward(e):
        m_low = maxwell_tensor_raw(model, g_mat, g_inv, sqrt_det,
                                   join_two_form(e, b))
        return _dh_from_maxwell(m_low)

    e = d.copy()
    step = 1e-7
    for _ in range(max_iter):
        d_out, h_out = forward(e)
        resid = d_out - d
        err = float(np.max(np.abs(resid)))
        if err <= tol:
            return e, h_out
        jac = np.empty((3, 3) + e.shape[1:])
        for k in range(3):
            bump = np.zeros_like(e)
            bump[k] = step
            dp, _ = forward(e + bump)
            dm, _ = forward(e - bump)
            jac[:, k] = (dp - dm) / (2.0 * step)
        e = e - np.einsum("jk...,k...->j...", _inv3(jac), resid)
    raise NoConvergence("constitutive inversion stalled at %.3e" % err)
