"""Pointwise 4D Lorentzian tensor algebra.

Metric assembly and exact inversion, Christoffel symbols, the contracted
gauge vector in both of its equivalent forms, Hodge duals, electromagnetic
invariants, and a residual suite for the algebraic identities these objects
satisfy.

Conventions: signature (-,+,+,+), geometric units G = c = 1, coordinate
index 0 is time.  All functions accept numpy arrays whose leading axes are
the tensor indices; any trailing axes (grid points, batch samples) are
carried along unchanged, so the same kernels serve both the point API and
the grid evolution code.
"""

import numpy as np

# Minkowski metric (and its inverse, which is the same matrix).
MINK = np.diag([-1.0, 1.0, 1.0, 1.0])

# Upper-triangle orderings used by the compact storage classes.
SYM_IDX = [(0, 0), (0, 1), (0, 2), (0, 3),
           (1, 1), (1, 2), (1, 3),
           (2, 2), (2, 3), (3, 3)]
ASYM_IDX = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def _build_levi4():
    eps = np.zeros((4, 4, 4, 4))
    from itertools import permutations
    for perm in permutations(range(4)):
        sign = 1.0
        p = list(perm)
        for i in range(4):
            for j in range(i + 1, 4):
                if p[i] > p[j]:
                    sign = -sign
        eps[perm] = sign
    return eps


# Totally antisymmetric symbol [mu nu kappa lambda] with [0123] = 1.
LEVI4 = _build_levi4()

# 3D permutation symbol [ijk] with [123] = 1 (indices 0,1,2 here).
LEVI3 = LEVI4[0, 1:, 1:, 1:]


class NonLorentzian(Exception):
    pass


class IdentityViolation(Exception):
    pass


# ---------------------------------------------------------------------------
# compact storage types


class SymTensor4:
    """Symmetric 4x4 tensor; stores the 10 upper-triangle components."""

    __slots__ = ("c",)

    def __init__(self, c):
        c = np.asarray(c, dtype=float)
        if c.shape != (10,):
            raise ValueError("SymTensor4 needs 10 components")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite entries")
        self.c = c

    @classmethod
    def from_matrix(cls, mat):
        mat = np.asarray(mat, dtype=float)
        if not np.allclose(mat, mat.T, atol=1e-14):
            raise ValueError("matrix is not symmetric")
        return cls(np.array([mat[i, j] for i, j in SYM_IDX]))

    @classmethod
    def zero(cls):
        return cls(np.zeros(10))

    def mat(self):
        out = np.empty((4, 4))
        for k, (i, j) in enumerate(SYM_IDX):
            out[i, j] = self.c[k]
            out[j, i] = self.c[k]
        return out

    def __add__(self, other):
        return SymTensor4(self.c + other.c)

    def __sub__(self, other):
        return SymTensor4(self.c - other.c)

    def __mul__(self, a):
        return SymTensor4(self.c * a)

    __rmul__ = __mul__


class TwoForm:
    """Antisymmetric 4x4 tensor; stores the 6 upper-triangle components."""

    __slots__ = ("c",)

    def __init__(self, c):
        c = np.asarray(c, dtype=float)
        if c.shape != (6,):
            raise ValueError("TwoForm needs 6 components")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite entries")
        self.c = c

    @classmethod
    def from_matrix(cls, mat):
        mat = np.asarray(mat, dtype=float)
        if not np.allclose(mat, -mat.T, atol=1e-14):
            raise ValueError("matrix is not antisymmetric")
        return cls(np.array([mat[i, j] for i, j in ASYM_IDX]))

    @classmethod
    def zero(cls):
        return cls(np.zeros(6))

    def mat(self):
        out = np.zeros((4, 4))
        for k, (i, j) in enumerate(ASYM_IDX):
            out[i, j] = self.c[k]
            out[j, i] = -self.c[k]
        return out

    def __add__(self, other):
        return TwoForm(self.c + other.c)

    def __sub__(self, other):
        return TwoForm(self.c - other.c)

    def __mul__(self, a):
        return TwoForm(self.c * a)

    __rmul__ = __mul__


def sym_expand(c):
    """(10, ...) packed components -> full (4, 4, ...) symmetric array."""
    c = np.asarray(c)
    out = np.zeros((4, 4) + c.shape[1:], dtype=c.dtype)
    for k, (i, j) in enumerate(SYM_IDX):
        out[i, j] = c[k]
        if i != j:
            out[j, i] = c[k]
    return out


def sym_compress(mat):
    """Full (4, 4, ...) symmetric array -> packed (10, ...) components."""
    mat = np.asarray(mat)
    return np.stack([mat[i, j] for i, j in SYM_IDX])


def sym_mat(x):
    """Accept a SymTensor4 or a raw matrix; return the (4,4,...) array."""
    return x.mat() if isinstance(x, SymTensor4) else np.asarray(x)


def form_mat(x):
    return x.mat() if isinstance(x, TwoForm) else np.asarray(x)


# ---------------------------------------------------------------------------
# exact 4x4 linear algebra (cofactor formulas, vectorized over trailing axes)


def det4(a):
    """Determinant by expansion in complementary 2x2 minors (rows 01 / 23)."""

    def p(i, j):
        return a[0, i] * a[1, j] - a[0, j] * a[1, i]

    def c(i, j):
        return a[2, i] * a[3, j] - a[2, j] * a[3, i]

    return (p(0, 1) * c(2, 3) - p(0, 2) * c(1, 3) + p(0, 3) * c(1, 2)
            + p(1, 2) * c(0, 3) - p(1, 3) * c(0, 2) + p(2, 3) * c(0, 1))


def _minor3(a, row, col):
    rows = [i for i in range(4) if i != row]
    cols = [j for j in range(4) if j != col]
    (r0, r1, r2), (c0, c1, c2) = rows, cols
    return (a[r0, c0] * (a[r1, c1] * a[r2, c2] - a[r1, c2] * a[r2, c1])
            - a[r0, c1] * (a[r1, c0] * a[r2, c2] - a[r1, c2] * a[r2, c0])
            + a[r0, c2] * (a[r1, c0] * a[r2, c1] - a[r1, c1] * a[r2, c0]))


def inv4(a, det=None):
    """Exact inverse via the adjugate; works elementwise over trailing axes."""
    a = np.asarray(a)
    if det is None:
        det = det4(a)
    out = np.empty_like(a)
    for i in range(4):
        for j in range(4):
            out[i, j] = ((-1.0) ** (i + j)) * _minor3(a, j, i) / det
    return out


# ---------------------------------------------------------------------------
# metric assembly


def metric_pack(h_total):
    """Raw metric bundle from the total perturbation h = h0 + h1.

    Returns (g, g_inv, sqrt_det) where sqrt_det = |det g|^(1/2); raises
    NonLorentzian when det g >= 0.  h_total has shape (4,4,...).
    """
    h_total = np.asarray(h_total)
    g = h_total + MINK.reshape((4, 4) + (1,) * (h_total.ndim - 2))
    det = det4(g)
    if np.any(np.real(det) >= 0.0):
        raise NonLorentzian("det g >= 0")
    g_inv = inv4(g, det=det)
    return g, g_inv, np.sqrt(-det)


class MetricState:
    """The split g = m + h0 + h1 with exact inverse at a point."""

    def __init__(self, h0, h1):
        self.h0 = h0
        self.h1 = h1
        h = sym_mat(h0) + sym_mat(h1)
        try:
            g, g_inv, sqrt_det = metric_pack(h)
        except NonLorentzian:
            raise NonLorentzian("metric assembly: det g >= 0")
        resid = np.max(np.abs(g @ g_inv - np.eye(4)))
        if resid > 1e-10:
            raise NonLorentzian("inversion residual %.3e" % resid)
        self.g = SymTensor4.from_matrix(0.5 * (g + g.T))
        self.g_inv = SymTensor4.from_matrix(0.5 * (g_inv + g_inv.T))
        self.H = SymTensor4.from_matrix(0.5 * (g_inv + g_inv.T) - MINK)
        self.sqrt_det_g = float(sqrt_det)


def assemble_metric(h0, h1):
    return MetricState(h0, h1)


# ---------------------------------------------------------------------------
# radial cutoff profile


def smoothstep(z):
    """C^2 quintic ramp: 0 for z<=0, 1 for z>=1, 10z^3-15z^4+6z^5 between."""
    z = np.asarray(z, dtype=float)
    zc = np.clip(z, 0.0, 1.0)
    return zc ** 3 * (10.0 + zc * (-15.0 + 6.0 * zc))


def smoothstep_d1(z):
    z = np.asarray(z, dtype=float)
    zc = np.clip(z, 0.0, 1.0)
    return 30.0 * zc ** 2 * (1.0 - zc) ** 2


def smoothstep_d2(z):
    z = np.asarray(z, dtype=float)
    inside = (z > 0.0) & (z < 1.0)
    zc = np.clip(z, 0.0, 1.0)
    return np.where(inside, 60.0 * zc * (1.0 - zc) * (1.0 - 2.0 * zc), 0.0)


def cutoff_chi(z):
    """Radial cutoff: 0 for z <= 1/2, 1 for z >= 3/4, C^2 quintic between."""
    return smoothstep((np.asarray(z, dtype=float) - 0.5) * 4.0)


def cutoff_chi_d1(z):
    return 4.0 * smoothstep_d1((np.asarray(z, dtype=float) - 0.5) * 4.0)


def cutoff_chi_d2(z):
    return 16.0 * smoothstep_d2((np.asarray(z, dtype=float) - 0.5) * 4.0)


def schwarzschild_tail(t, x, mass, chi=cutoff_chi):
    """Mass-tail metric perturbation chi(r/t) chi(r) (2M/r) delta_{mu nu}.

    At t <= 0 the interior cutoff chi(r/t) is taken to be 1 (its limit),
    so the t=0 slice is chi(r) (2M/r) delta_{mu nu}.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.sqrt(np.sum(x * x)))
    if mass == 0.0 or r == 0.0:
        return SymTensor4.zero()
    amp = tail_profile(t, r, mass, chi)
    return SymTensor4.from_matrix(amp * np.eye(4))


def tail_profile(t, r, mass, chi=cutoff_chi):
    """Scalar profile chi(r/t) chi(r) (2M/r); r may be an array."""
    r = np.asarray(r, dtype=float)
    inner = np.ones_like(r) if t <= 0.0 else chi(r / t)
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.where(r > 0.0, inner * chi(r) * (2.0 * mass / np.maximum(r, 1e-300)), 0.0)
    return amp


def tail_profile_jet(t, x, y, z, mass):
    """Value, 4-gradient and 4-Hessian of the tail profile, in closed form.

    Inputs are arrays of identical shape; output arrays have leading axes
    for the derivative indices.  Everything is assembled by chain rule on
    r = |x| and the two cutoff factors, so the grid evolution can subtract
    the mass-tail wave operator without finite differencing.
    """
    x = np.asarray(x, dtype=float)
    shp = x.shape
    r = np.sqrt(x * x + y * y + z * z)
    r = np.maximum(r, 1e-12)
    xi = np.stack([x, y, z]) / r          # dr/dx_i
    val = np.zeros(shp)
    grad = np.zeros((4,) + shp)
    hess = np.zeros((4, 4) + shp)
    if mass == 0.0:
        return val, grad, hess

    # phi(t, r) = chi(r/t) chi(r) 2M/r; partials in (t, r) first.
    co = chi_r = cutoff_chi(r)
    chi_r1 = cutoff_chi_d1(r)
    chi_r2 = cutoff_chi_d2(r)
    f = 2.0 * mass / r
    f_r = -2.0 * mass / r ** 2
    f_rr = 4.0 * mass / r ** 3
    if t > 0.0:
        zt = r / t
        ci = cutoff_chi(zt)
        ci_z = cutoff_chi_d1(zt)
        ci_zz = cutoff_chi_d2(zt)
        ci_r = ci_z / t
        ci_t = -ci_z * r / t ** 2
        ci_rr = ci_zz / t ** 2
        ci_rt = -(ci_zz * r / t + ci_z) / t ** 2
        ci_tt = ci_zz * r ** 2 / t ** 4 + 2.0 * ci_z * r / t ** 3
    else:
        ci = np.ones(shp)
        ci_r = ci_t = ci_rr = ci_rt = ci_tt = np.zeros(shp)

    outer = co * f
    outer_r = chi_r1 * f + co * f_r
    outer_rr = chi_r2 * f + 2.0 * chi_r1 * f_r + co * f_rr

    val = ci * outer
    phi_t = ci_t * outer
    phi_r = ci_r * outer + ci * outer_r
    phi_tt = ci_tt * outer
    phi_tr = ci_rt * outer + ci_t * outer_r
    phi_rr = ci_rr * outer + 2.0 * ci_r * outer_r + ci * outer_rr

    grad[0] = phi_t
    for i in range(3):
        grad[1 + i] = phi_r * xi[i]
    hess[0, 0] = phi_tt
    for i in range(3):
        hess[0, 1 + i] = hess[1 + i, 0] = phi_tr * xi[i]
    for i in range(3):
        for j in range(3):
            dij = 1.0 if i == j else 0.0
            hess[1 + i, 1 + j] = (phi_rr * xi[i] * xi[j]
                                  + phi_r * (dij - xi[i] * xi[j]) / r)
    return val, grad, hess


# ---------------------------------------------------------------------------
# Christoffel symbols and the contracted gauge vector


def christoffel_lower_jet(g_inv, dg):
    """Gamma^kappa_{mu nu} from g_inv and dg[lambda, mu, nu] = d_lambda g_{mu nu}."""
    # 0.5 g^{kl} (d_mu g_{l nu} + d_nu g_{mu l} - d_l g_{mu nu})
    term = (np.einsum("kl...,mln...->kmn...", g_inv, dg)
            + np.einsum("kl...,nml...->kmn...", g_inv, dg)
            - np.einsum("kl...,lmn...->kmn...", g_inv, dg))
    return 0.5 * term


def contracted_gamma(g_inv, dg):
    """Gamma^mu = g^{kl} Gamma^mu_{kl} directly from the jet."""
    gam = christoffel_lower_jet(g_inv, dg)
    return np.einsum("kl...,mkl...->m...", g_inv, gam)


def contracted_gamma_divergence_form(g_inv, dg, sqrt_det):
    """Gamma^mu = -|det g|^{-1/2} d_nu ( |det g|^{1/2} g^{mu nu} ).

    Expanded by the product rule so only the metric jet is needed:
    d_nu g^{mu nu} = -g^{mu a} g^{nu b} d_nu g_{ab} and
    d_nu |det g|^{1/2} = 0.5 |det g|^{1/2} g^{ab} d_nu g_{ab}.
    """
    del sqrt_det  # cancels exactly in the expansion
    term1 = np.einsum("ma...,nb...,nab...->m...", g_inv, g_inv, dg)
    term2 = 0.5 * np.einsum("mn...,ab...,nab...->m...", g_inv, g_inv, dg)
    return term1 - term2


class ChristoffelData:
    def __init__(self, gamma, contracted, contracted_alt):
        self.gamma = gamma                  # [kappa, mu, nu]
        self.contracted = contracted        # from the direct contraction
        self.contracted_alt = contracted_alt  # from the divergence identity
        self.form_difference = float(np.max(np.abs(contracted - contracted_alt)))


def christoffel(g, dg):
    """Both Christoffel forms from a MetricState and the metric jet dg."""
    g_inv = sym_mat(g.g_inv) if isinstance(g, MetricState) else np.asarray(g)
    dg = np.asarray(dg, dtype=float)
    gam = christoffel_lower_jet(g_inv, dg)
    c1 = np.einsum("kl...,mkl...->m...", g_inv, gam)
    c2 = contracted_gamma_divergence_form(g_inv, dg, None)
    return ChristoffelData(gam, c1, c2)


# ---------------------------------------------------------------------------
# Hodge duals and electromagnetic invariants


def dual_sharp(g_inv, sqrt_det, f_low):
    """(star F)^{# mu nu} = 0.5 eps^{# mu nu k l} F_{k l}.

    eps^{#0123} = -|det g|^{-1/2} with the [0123] = +1 symbol.
    """
    shape = (4, 4, 4, 4) + (1,) * (np.ndim(f_low) - 2)
    return -0.5 * np.einsum("mnkl...,kl...->mn...",
                            LEVI4.reshape(shape), f_low) / sqrt_det


def lower2(g, a_up):
    return np.einsum("ma...,nb...,ab...->mn...", g, g, a_up)


def raise2(g_inv, a_low):
    return np.einsum("ma...,nb...,ab...->mn...", g_inv, g_inv, a_low)


def hodge_dual(g, F, which="curved"):
    """Hodge dual of a two-form; 'curved' uses g, 'minkowski' uses m."""
    f = form_mat(F)
    if which == "minkowski":
        g_mat, g_inv, sqrt_det = MINK, MINK, 1.0
    else:
        g_mat = sym_mat(g.g)
        g_inv = sym_mat(g.g_inv)
        sqrt_det = g.sqrt_det_g
    dual_low = lower2(g_mat, dual_sharp(g_inv, sqrt_det, f))
    if isinstance(F, TwoForm):
        return TwoForm.from_matrix(0.5 * (dual_low - dual_low.T))
    return dual_low


def invariants_raw(g_inv, sqrt_det, f_low):
    """(F1, F2) for raw arrays; trailing axes carried through."""
    f_up = raise2(g_inv, f_low)
    f1 = 0.5 * np.einsum("mn...,mn...->...", f_up, f_low)
    shape = (4, 4, 4, 4) + (1,) * (np.ndim(f_low) - 2)
    f2 = -0.125 * np.einsum("klmn...,kl...,mn...->...",
                            LEVI4.reshape(shape), f_low, f_low) / sqrt_det
    return f1, f2


def invariants(g, F):
    f1, f2 = invariants_raw(sym_mat(g.g_inv), g.sqrt_det_g, form_mat(F))
    return float(f1), float(f2)


# ---------------------------------------------------------------------------
# identity residual suite


def identity_suite(g, F, fd_step=1e-5, fd_tol=1e-8, alg_tol=1e-11,
                   raise_on_fail=True):
    """Residuals of the algebraic/variational identities tying F, its dual
    and the invariants together.  Returns a dict of named residuals."""
    g_mat = sym_mat(g.g)
    g_inv = sym_mat(g.g_inv)
    sqrt_det = g.sqrt_det_g
    f = form_mat(F)
    f1, f2 = invariants_raw(g_inv, sqrt_det, f)
    dual_up = dual_sharp(g_inv, sqrt_det, f)
    dual_low = lower2(g_mat, dual_up)
    f_up = raise2(g_inv, f)

    res = {}
    # F2^2 = |det F| |det g|^{-1}
    res["pfaffian"] = abs(f2 ** 2 - abs(det4(f)) / (sqrt_det ** 2))
    # g^{kl} F_{mk} (star F)_{nl} = F2 g_{mn}
    lhs = np.einsum("kl,mk,nl->mn", g_inv, f, dual_low)
    res["cross_contraction"] = float(np.max(np.abs(lhs - f2 * g_mat)))
    # double dual = -F
    ddual = lower2(g_mat, dual_sharp(g_inv, sqrt_det, dual_low))
    res["double_dual"] = float(np.max(np.abs(ddual + f)))

    # FD partials of the invariants with respect to F_{mu nu} (independent
    # upper-triangle slots; symmetric-pair convention d/dF treats F_{mu nu}
    # and F_{nu mu} = -F_{mu nu} as dependent).
    def inv_of(fm):
        return invariants_raw(g_inv, sqrt_det, fm)

    r1 = r2 = 0.0
    for (i, j) in ASYM_IDX:
        bump = np.zeros((4, 4))
        bump[i, j] = fd_step
        bump[j, i] = -fd_step
        f1p, f2p = inv_of(f + bump)
        f1m, f2m = inv_of(f - bump)
        # slot derivative d/dF_{ij} with the antisymmetric pair moving together
        # equals 2 * (the formal partial), hence factors below.
        d1 = (f1p - f1m) / (2.0 * fd_step)
        d2 = (f2p - f2m) / (2.0 * fd_step)
        r1 = max(r1, abs(d1 - 2.0 * f_up[i, j]))
        r2 = max(r2, abs(d2 - dual_up[i, j]))
    res["dF1_partial"] = r1
    res["dF2_partial"] = r2

    # d|det g|/dg_{mu nu} = |det g| g^{mu nu} and the inverse-metric partial,
    # checked on one random-ish slot pair each (FD).
    det_g = -(sqrt_det ** 2)
    rdet = 0.0
    for (i, j) in [(0, 0), (0, 1), (1, 2), (3, 3)]:
        bump = np.zeros((4, 4))
        bump[i, j] += 0.5 * fd_step
        bump[j, i] += 0.5 * fd_step
        dp = det4(g_mat + bump)
        dm = det4(g_mat - bump)
        d = (abs(dp) - abs(dm)) / (2.0 * fd_step)
        fac = 1.0 if i == j else 1.0  # symmetric pair moves together
        expect = abs(det_g) * g_inv[i, j] * fac
        rdet = max(rdet, abs(d - expect) / max(1.0, abs(expect)))
    res["ddet_partial"] = rdet

    # d(g^{-1})^{kl}/dg_{mu nu} = -g^{k mu} g^{l nu} (symmetrized pair move)
    rinv = 0.0
    for (i, j) in [(0, 0), (0, 2), (1, 3), (2, 2)]:
        bump = np.zeros((4, 4))
        bump[i, j] += 0.5 * fd_step
        bump[j, i] += 0.5 * fd_step
        ip = inv4(g_mat + bump)
        im = inv4(g_mat - bump)
        d = (ip - im) / (2.0 * fd_step)
        expect = -0.5 * (np.outer(g_inv[:, i], g_inv[:, j])
                         + np.outer(g_inv[:, j], g_inv[:, i]))
        rinv = max(rinv, float(np.max(np.abs(d - expect))))
    res["dginv_partial"] = rinv

    if raise_on_fail:
        for name in ("pfaffian", "cross_contraction", "double_dual"):
            if res[name] > alg_tol:
                raise IdentityViolation("%s residual %.3e" % (name, res[name]))
        for name in ("dF1_partial", "dF2_partial", "ddet_partial",
                     "dginv_partial"):
            if res[name] > fd_tol:
                raise IdentityViolation("%s residual %.3e" % (name, res[name]))
    return res
