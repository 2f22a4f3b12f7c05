"""Initial-slice construction on the grid.

Abstract data (spatial metric perturbation, extrinsic curvature, electric
and magnetic slice vectors, mass parameter) is turned into the full metric
jet (g, d_t g)|_{t=0} and Faraday tensor at t = 0.  The construction makes
the contracted Christoffel vector vanish on the initial slice in the
continuum; residual measurement routines quantify the discrete leftovers.

Analytic data families are shipped for testing: a trivial vacuum, a
divergence-free electromagnetic pulse, a pure mass tail, and a smooth
metric bump.  Families carry closed-form spatial derivatives so the
measured gauge residual reflects genuine stencil truncation.
"""

import numpy as np

from . import em_model as em
from . import stencil as st
from . import tensor_core as tc


class LapseCollapse(Exception):
    pass


class FalloffViolation(Exception):
    pass


class AbstractData:
    """Slice data: h1_spatial, K (3,3 grids), D_abs, B_abs (3-vector grids),
    mass parameter, and the grid geometry (n, L).

    dh1_spatial may hold analytic derivatives d_a h1_{bj} (leading axes
    (3,3,3)); when absent, grid stencils are used.
    """

    def __init__(self, n, L, h1_spatial, K, D_abs, B_abs, mass=0.0,
                 dh1_spatial=None):
        self.n = int(n)
        self.L = float(L)
        self.h1_spatial = h1_spatial
        self.K = K
        self.D_abs = D_abs
        self.B_abs = B_abs
        self.mass = float(mass)
        self.dh1_spatial = dh1_spatial
        if n < 16 or n % 8:
            raise ValueError("n must be >= 16 and divisible by 8")
        if mass < 0:
            raise ValueError("mass must be nonnegative")


class ReducedData:
    """Full t = 0 jet: g0, dtg0 (4,4 grids), F0 (4,4 grid), lapse A, and the
    evolved-variable views (h1, pi packed to 10 components; B, D vectors)."""

    def __init__(self, n, L, mass, g0, dtg0, F0, lapse, B, D):
        self.n = n
        self.L = L
        self.mass = mass
        self.g0 = g0
        self.dtg0 = dtg0
        self.F0 = F0
        self.lapse = lapse
        self.B = B
        self.D = D
        # evolved metric unknowns: subtract Minkowski and the t=0 mass tail
        x, y, z, dx = st.grid_mesh(n, L)
        tail, _, _ = tc.tail_profile_jet(0.0, x, y, z, mass)
        h = g0 - tc.MINK.reshape(4, 4, 1, 1, 1) - tail * np.eye(4).reshape(4, 4, 1, 1, 1)
        self.h1 = tc.sym_compress(h)
        self.pi = tc.sym_compress(dtg0)  # d_t of the mass tail vanishes at t=0
        self.dx = dx


# ---------------------------------------------------------------------------
# data families


def family_trivial(n, L):
    shape = (n, n, n)
    return AbstractData(n, L,
                        np.zeros((3, 3) + shape), np.zeros((3, 3) + shape),
                        np.zeros((3,) + shape), np.zeros((3,) + shape),
                        mass=0.0,
                        dh1_spatial=np.zeros((3, 3, 3) + shape))


def _gauss(x, y, z, center, width):
    r2 = (x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2
    return np.exp(-r2 / width ** 2)


def family_em_pulse(n, L, amplitude, width, center=(0.0, 0.0, 0.0)):
    """Divergence-free pulse: B = curl(f z-hat), D = curl(f x-hat) with a
    Gaussian potential profile f; curls taken in closed form."""
    x, y, z, _ = st.grid_mesh(n, L)
    f = amplitude * width * _gauss(x, y, z, center, width)
    fx = -2.0 * (x - center[0]) / width ** 2 * f
    fy = -2.0 * (y - center[1]) / width ** 2 * f
    fz = -2.0 * (z - center[2]) / width ** 2 * f
    b = np.stack([fy, -fx, np.zeros_like(f)])      # curl of f z-hat
    d = np.stack([np.zeros_like(f), fz, -fy])      # curl of f x-hat
    shape = (n, n, n)
    return AbstractData(n, L, np.zeros((3, 3) + shape), np.zeros((3, 3) + shape),
                        d, b, mass=0.0,
                        dh1_spatial=np.zeros((3, 3, 3) + shape))


def family_tail_only(n, L, mass):
    data = family_trivial(n, L)
    return AbstractData(n, L, data.h1_spatial, data.K, data.D_abs, data.B_abs,
                        mass=mass, dh1_spatial=data.dh1_spatial)


def family_metric_bump(n, L, amplitude, width):
    """Conformal spatial bump h1_{jk} = a exp(-r^2/w^2) delta_{jk} with
    closed-form first derivatives."""
    x, y, z, _ = st.grid_mesh(n, L)
    prof = amplitude * _gauss(x, y, z, (0, 0, 0), width)
    shape = (n, n, n)
    h1 = np.zeros((3, 3) + shape)
    dh1 = np.zeros((3, 3, 3) + shape)
    grad = [-2.0 * x / width ** 2 * prof,
            -2.0 * y / width ** 2 * prof,
            -2.0 * z / width ** 2 * prof]
    for j in range(3):
        h1[j, j] = prof
        for a in range(3):
            dh1[a, j, j] = grad[a]
    return AbstractData(n, L, h1, np.zeros((3, 3) + shape),
                        np.zeros((3,) + shape), np.zeros((3,) + shape),
                        mass=0.0, dh1_spatial=dh1)


def make_family(kind, n, L, amplitude=0.0, width=1.0, mass=0.0,
                center=(0.0, 0.0, 0.0)):
    if kind == "trivial":
        return family_trivial(n, L)
    if kind == "em_pulse":
        return family_em_pulse(n, L, amplitude, width, center)
    if kind == "tail_only":
        return family_tail_only(n, L, mass)
    if kind == "metric_bump":
        return family_metric_bump(n, L, amplitude, width)
    raise ValueError("unknown data family %r" % kind)


# ---------------------------------------------------------------------------
# reduction to the full t = 0 jet


def _falloff_ok(field, n):
    """Outer-boundary envelope check: the field must be small on the
    outermost shell compared to its global magnitude."""
    sup = float(np.max(np.abs(field)))
    if sup == 0.0:
        return True
    shell = np.zeros((n, n, n), dtype=bool)
    shell[0, :, :] = shell[-1, :, :] = True
    shell[:, 0, :] = shell[:, -1, :] = True
    shell[:, :, 0] = shell[:, :, -1] = True
    edge = float(np.max(np.abs(np.asarray(field)[..., shell])))
    return edge <= 1e-3 * sup


def build_reduced(data, model=None, check_falloff=True):
    """Apply the initial-slice formula blocks and invert the constitutive
    map for the Faraday tensor; returns ReducedData."""
    if model is None:
        model = em.EmModel.maxwell()
    n, L, mass = data.n, data.L, data.mass
    x, y, z, dx = st.grid_mesh(n, L)
    shape = (n, n, n)

    if check_falloff:
        for name in ("h1_spatial", "K", "D_abs", "B_abs"):
            if not _falloff_ok(getattr(data, name), n):
                raise FalloffViolation(name)

    tail, tail_grad, _ = tc.tail_profile_jet(0.0, x, y, z, mass)

    # spatial metric and its closed-form(-where-possible) derivatives
    gbar = np.zeros((3, 3) + shape)
    dgbar = np.zeros((3, 3, 3) + shape)  # [a, b, j] = d_a gbar_{bj}
    for j in range(3):
        gbar[j, j] = 1.0 + tail
        for a in range(3):
            dgbar[a, j, j] += tail_grad[1 + a]
    gbar += data.h1_spatial
    if data.dh1_spatial is not None:
        dgbar += data.dh1_spatial
    else:
        for a in range(3):
            dgbar[a] += st.d1(data.h1_spatial, a, dx)

    a2 = 1.0 - tail
    if np.any(a2 <= 0.0):
        raise LapseCollapse("lapse squared reaches %.3e" % float(np.min(a2)))
    lapse = np.sqrt(a2)
    dlapse = np.stack([-tail_grad[1 + j] / (2.0 * lapse) for j in range(3)])

    gbar_inv = _inv3_grid(gbar)

    g0 = np.zeros((4, 4) + shape)
    g0[0, 0] = -a2
    g0[1:, 1:] = gbar

    dtg0 = np.zeros((4, 4) + shape)
    tr_k = np.einsum("ab...,ab...->...", gbar_inv, data.K)
    dtg0[0, 0] = 2.0 * lapse ** 3 * tr_k
    for j in range(3):
        dtg0[0, 1 + j] = dtg0[1 + j, 0] = (
            a2 * np.einsum("ab...,ab...->...", gbar_inv, dgbar[:, :, j])
            - 0.5 * a2 * np.einsum("ab...,ab...->...", gbar_inv,
                                   dgbar[j, :, :])
            - lapse * dlapse[j])
    dtg0[1:, 1:] = 2.0 * lapse * data.K

    # Faraday tensor from the slice pair (B, D) via constitutive inversion
    g0_inv = tc.inv4(g0)
    sqrt_det = np.sqrt(-tc.det4(g0))
    if np.max(np.abs(data.D_abs)) == 0.0 and np.max(np.abs(data.B_abs)) == 0.0:
        e_field = np.zeros((3,) + shape)
    else:
        e_field, _ = em.constitutive_invert(model, (g0, g0_inv, sqrt_det),
                                            data.B_abs, data.D_abs)
    F0 = em.join_two_form(e_field, data.B_abs)

    return ReducedData(n, L, mass, g0, dtg0, F0, lapse,
                       B=np.array(data.B_abs, dtype=float),
                       D=np.array(data.D_abs, dtype=float))


def _inv3_grid(a):
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


# ---------------------------------------------------------------------------
# residual measurements on the initial slice


def gauge_residual_t0(rd):
    """Contracted Christoffel vector at t = 0 from the stored time
    derivative and grid spatial stencils; returns (field, sup, l2)."""
    dg = np.zeros((4, 4, 4) + rd.g0.shape[2:])
    dg[0] = rd.dtg0
    for a in range(3):
        dg[1 + a] = st.d1(rd.g0, a, rd.dx)
    g_inv = tc.inv4(rd.g0)
    gam = tc.contracted_gamma(g_inv, dg)
    sup = float(np.max(np.abs(gam)))
    l2 = st.l2_norm(gam, rd.dx)
    return gam, sup, l2


def em_constraints_t0(rd, data=None):
    """Flat divergences of the evolved pair (B, D); returns dict of norms."""
    div_b = st.divergence(rd.B, rd.dx)
    div_d = st.divergence(rd.D, rd.dx)
    return {
        "divB_sup": float(np.max(np.abs(div_b))),
        "divB_l2": st.l2_norm(div_b, rd.dx),
        "divD_sup": float(np.max(np.abs(div_d))),
        "divD_l2": st.l2_norm(div_d, rd.dx),
    }


def gravitational_constraint_residual(rd, data, model=None):
    """Pointwise residuals of the slice constraints sourced by the
    electromagnetic stress tensor; returns (gauss_field, codazzi_field)."""
    if model is None:
        model = em.EmModel.maxwell()
    n, L, dx = rd.n, rd.L, rd.dx
    gbar = rd.g0[1:, 1:]
    gbar_inv = _inv3_grid(gbar)
    k_low = rd.dtg0[1:, 1:] / (2.0 * rd.lapse)

    # 3-Christoffels of gbar by stencils
    dgbar = np.stack([st.d1(gbar, a, dx) for a in range(3)])
    # dgbar[a, b, j] = d_a gbar_{bj}
    gam3 = 0.5 * (np.einsum("cl...,alb...->cab...", gbar_inv, dgbar)
                  + np.einsum("cl...,bla...->cab...", gbar_inv, dgbar)
                  - np.einsum("cl...,lab...->cab...", gbar_inv, dgbar))

    # 3-Ricci scalar
    dgam = np.stack([st.d1(gam3, a, dx) for a in range(3)])
    ric = (np.einsum("ccab...->ab...", dgam)
           - np.einsum("accb...->ab...", dgam)
           + np.einsum("ccd...,dab...->ab...", gam3, gam3)
           - np.einsum("dac...,cdb...->ab...", gam3, gam3))
    r_scal = np.einsum("ab...,ab...->...", gbar_inv, ric)

    k_up = np.einsum("ac...,bd...,cd...->ab...", gbar_inv, gbar_inv, k_low)
    k_sq = np.einsum("ab...,ab...->...", k_up, k_low)
    tr_k = np.einsum("ab...,ab...->...", gbar_inv, k_low)

    g0_inv = tc.inv4(rd.g0)
    sqrt_det = np.sqrt(-tc.det4(rd.g0))
    t_stress = em.stress_energy_raw(model, rd.g0, g0_inv, sqrt_det, rd.F0)

    gauss = r_scal - k_sq + tr_k ** 2 - 2.0 * t_stress[0, 0] / rd.lapse ** 2

    # Codazzi: gbar^{ab} (D_a K_{bj} - D_j K_{ab}) = T(N, d_j)
    dk = np.stack([st.d1(k_low, a, dx) for a in range(3)])
    cov_dk = (dk
              - np.einsum("cab...,cj...->abj...", gam3, k_low)
              - np.einsum("caj...,bc...->abj...", gam3, k_low))
    codazzi = (np.einsum("ab...,abj...->j...", gbar_inv, cov_dk)
               - np.einsum("ab...,jab...->j...", gbar_inv, cov_dk)
               - t_stress[0, 1:] / rd.lapse)
    return gauss, codazzi
