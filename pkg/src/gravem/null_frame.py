"""Flat null frames, null decomposition, seminorms, quadratic null forms,
conformal Killing fields, and finite-difference Lie derivatives.

The frame is always the Minkowskian one (ingoing/outgoing radial null pair
plus two spherical tangent vectors); the evolved metric never enters the
frame construction.
"""

import numpy as np

from .tensor_core import LEVI3, LEVI4, MINK, TwoForm, form_mat, inv4, sym_mat


class TooCloseToAxisOrigin(Exception):
    pass


R_MIN_DEFAULT = 1e-6


class NullFrame:
    """uL = (1, -omega), L = (1, omega), plus the spherical pair e1, e2."""

    def __init__(self, uL, L, e1, e2, x):
        self.uL = uL
        self.L = L
        self.e1 = e1
        self.e2 = e2
        self.x = x

    def vectors(self):
        return (self.uL, self.L, self.e1, self.e2)


def frame_at(x, r_min=R_MIN_DEFAULT):
    """Deterministic frame at the spatial point x (|x| >= r_min).

    e1 is the normalized z-hat x omega cross product (x-hat fallback near
    the z axis); e2 completes the right-handed triad (omega, e1, e2)...
    precisely e2 = omega x e1, so that (e1, e2, omega) is right-handed.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r < r_min:
        raise TooCloseToAxisOrigin("|x| = %.3e below r_min" % r)
    omega = x / r
    ref = np.array([0.0, 0.0, 1.0])
    if abs(omega @ ref) > 0.99:
        ref = np.array([1.0, 0.0, 0.0])
    e1s = np.cross(ref, omega)
    e1s /= np.linalg.norm(e1s)
    e2s = np.cross(omega, e1s)
    zeros = np.zeros(1)
    uL = np.concatenate([[1.0], -omega])
    L = np.concatenate([[1.0], omega])
    e1 = np.concatenate([zeros, e1s])
    e2 = np.concatenate([zeros, e2s])
    return NullFrame(uL, L, e1, e2, x)


class NullDecomp:
    def __init__(self, alpha_bar, alpha, rho, sigma):
        self.alpha_bar = np.asarray(alpha_bar)
        self.alpha = np.asarray(alpha)
        self.rho = rho
        self.sigma = sigma


def null_decompose(F, frame):
    """Null components: abar_A = F(e_A, uL), alpha_A = F(e_A, L),
    rho = (1/2) F(uL, L), sigma = F(e1, e2)."""
    f = form_mat(F)
    uL, L, e1, e2 = frame.vectors()
    abar = np.array([e1 @ f @ uL, e2 @ f @ uL])
    alph = np.array([e1 @ f @ L, e2 @ f @ L])
    rho = 0.5 * (uL @ f @ L)
    sigma = e1 @ f @ e2
    return NullDecomp(abar, alph, rho, sigma)


def recompose_two_form(dec, frame):
    """Exact inverse of null_decompose (frame components back to coordinates)."""
    V = np.stack(frame.vectors(), axis=1)      # columns are frame vectors
    theta = inv4(V)                            # rows are the dual covectors
    comp = np.zeros((4, 4))
    # frame-component matrix C_ab = F(v_a, v_b)
    comp[0, 1] = 2.0 * dec.rho       # F(uL, L)
    comp[1, 0] = -2.0 * dec.rho
    for a_idx, val in ((2, dec.alpha_bar[0]), (3, dec.alpha_bar[1])):
        comp[a_idx, 0] = val          # F(e_A, uL)
        comp[0, a_idx] = -val
    for a_idx, val in ((2, dec.alpha[0]), (3, dec.alpha[1])):
        comp[a_idx, 1] = val          # F(e_A, L)
        comp[1, a_idx] = -val
    comp[2, 3] = dec.sigma
    comp[3, 2] = -dec.sigma
    return TwoForm.from_matrix(theta.T @ comp @ theta)


def sphere_area_form(frame):
    """Area two-form of the sphere through the base point, normalized so
    eps(e1, e2) = +-1: (1/2) [mu nu kappa lambda] uL^kappa L^lambda."""
    return 0.5 * np.einsum("mnkl,k,l->mn", LEVI4, frame.uL, frame.L)


CLASS_VECTORS = {"L": ("L",), "T": ("L", "e1", "e2"),
                 "N": ("uL", "L", "e1", "e2")}


def seminorm(P, V, W, frame):
    """|P|_{VW}: sum of |V^k W^l P_{kl}| over the two contraction classes."""
    p = sym_mat(P) if not isinstance(P, np.ndarray) else P
    total = 0.0
    for vn in CLASS_VECTORS[V]:
        for wn in CLASS_VECTORS[W]:
            total += abs(getattr(frame, vn) @ p @ getattr(frame, wn))
    return total


def lambda_vector(h, frame):
    """Corrected outgoing direction L + (1/4) h(L, L) uL."""
    h_ll = frame.L @ sym_mat(h) @ frame.L
    return frame.L + 0.25 * h_ll * frame.uL


# ---------------------------------------------------------------------------
# quadratic null forms


def q0(dpsi, dchi):
    """m^{kl} (d_k psi)(d_l chi); inputs are 4-gradients."""
    return np.einsum("kl,k...,l...->...", MINK, dpsi, dchi)


def q_munu(dpsi, dchi):
    """Antisymmetrized gradient product (d_mu psi d_nu chi - mu<->nu)."""
    return (np.einsum("m...,n...->mn...", dpsi, dchi)
            - np.einsum("n...,m...->mn...", dpsi, dchi))


def p_form(dh_mu, dh_nu):
    """P(nabla_mu Pi, nabla_nu Theta) for single-direction gradients:
    (1/4) tr tr - (1/2) full contraction, traces/raising with m."""
    tr_mu = np.einsum("kl,kl...->...", MINK, dh_mu)
    tr_nu = np.einsum("kl,kl...->...", MINK, dh_nu)
    full = np.einsum("ka,lb,kl...,ab...->...", MINK, MINK, dh_mu, dh_nu)
    return 0.25 * tr_mu * tr_nu - 0.5 * full


def p_tensor(dh1, dh2):
    """P(nabla_mu h, nabla_nu h) as a (mu, nu) tensor from full gradients
    dh[lambda, mu, nu] = d_lambda h_{mu nu}."""
    tr = np.einsum("kl,mkl...->m...", MINK, dh1)
    tr2 = np.einsum("kl,mkl...->m...", MINK, dh2)
    full = np.einsum("ka,lb,mkl...,nab...->mn...", MINK, MINK, dh1, dh2)
    return 0.25 * np.einsum("m...,n...->mn...", tr, tr2) - 0.5 * full


def q1h_tensor(dh):
    """The six-term null-form combination entering the quadratic part of the
    reduced metric equation; dh[lambda, mu, nu] = d_lambda h_{mu nu}."""
    m = MINK
    # term 1: m^{lL} Q0(nabla h_{l mu}, nabla h_{L nu})
    t1 = np.einsum("lL,pq,plm...,qLn...->mn...", m, m, dh, dh)
    # term 2: - m^{kK} m^{lL} Q_{k L}(nabla h_{l mu}, nabla h_{K nu})
    t2 = -(np.einsum("kK,lL,klm...,LKn...->mn...", m, m, dh, dh)
           - np.einsum("kK,lL,Llm...,kKn...->mn...", m, m, dh, dh))
    return t1 + t2 + _q1h_tail(dh)


def _q1h_tail(dh):
    m = MINK

    def qab(mu_grad, nu_grad):
        """Q_{mu nu}(nabla psi, nabla chi) for gradient arrays with free
        trailing component indices folded in by the caller."""
        return mu_grad * nu_grad

    # term 3: m^{kK} m^{lL} Q_{mu k}(nabla h_{K L}, nabla h_{l nu})
    t3 = (np.einsum("kK,lL,mKL...,kln...->mn...", m, m, dh, dh)
          - np.einsum("kK,lL,kKL...,mln...->mn...", m, m, dh, dh))
    # term 4: m^{kK} m^{lL} Q_{nu k}(nabla h_{K L}, nabla h_{l mu})
    t4 = (np.einsum("kK,lL,nKL...,klm...->mn...", m, m, dh, dh)
          - np.einsum("kK,lL,kKL...,nlm...->mn...", m, m, dh, dh))
    # term 5: (1/2) m^{kK} m^{lL} Q_{L mu}(nabla h_{k K}, nabla h_{l nu})
    t5 = 0.5 * (np.einsum("kK,lL,LkK...,mln...->mn...", m, m, dh, dh)
                - np.einsum("kK,lL,mkK...,Lln...->mn...", m, m, dh, dh))
    # term 6: (1/2) m^{kK} m^{lL} Q_{L nu}(nabla h_{k K}, nabla h_{l mu})
    t6 = 0.5 * (np.einsum("kK,lL,LkK...,nlm...->mn...", m, m, dh, dh)
                - np.einsum("kK,lL,nkK...,Llm...->mn...", m, m, dh, dh))
    return t3 + t4 + t5 + t6


def q2h_tensor(f, g2):
    """Quadratic field source in the metric equation:
    -2 m^{kl} F_{mu k} G_{nu l} + (1/2) m_{mu nu} m^{ke} m^{lz} F_{kl} G_{ez}."""
    m = MINK
    dot = np.einsum("ke,lz,kl...,ez...->...", m, m, f, g2)
    t = -2.0 * np.einsum("kl,mk...,nl...->mn...", m, f, g2)
    shape = (4, 4) + (1,) * (np.ndim(dot))
    return t + 0.5 * np.reshape(m, shape) * dot


def pf_vector(h, df):
    """P_F(h, nabla F)^nu = m^{mM} m^{kK} m^{nl} h_{MK} nabla_m F_{kl}."""
    m = MINK
    return np.einsum("mM,kK,nl,MK...,mkl...->n...", m, m, m, h, df)


def q1f_vector(h, df):
    """Q1F(h, nabla F)^nu = m^{mk} m^{nN} m^{lL} h_{NL} nabla_m F_{kl}."""
    m = MINK
    return np.einsum("mk,nN,lL,NL...,mkl...->n...", m, m, m, h, df)


def q2f_vector(dh, f):
    """Q2F(nabla h, F)^nu = m^{mk} m^{nN} m^{lL} (nabla_m h_{NL}) F_{kl}."""
    m = MINK
    return np.einsum("mk,nN,lL,mNL...,kl...->n...", m, m, m, dh, f)


# ---------------------------------------------------------------------------
# conformal Killing fields


class KillingField:
    """One of: translations d_mu, rotations/boosts Omega_{mu nu}, scaling S.

    c_matrix[mu, nu] is the constant covariant gradient nabla_mu Z_nu;
    c_z is the conformal factor in nabla_(mu Z_nu) = (c_z / 2) m_{mu nu}...
    normalized so Lie_Z m = c_z m.
    """

    def __init__(self, kind, indices=()):
        self.kind = kind
        self.indices = tuple(indices)
        if kind == "translation":
            (mu,) = self.indices
            self.c_z = 0.0
            self.c_matrix = np.zeros((4, 4))
            self._const = np.eye(4)[mu]
        elif kind == "lorentz":  # rotation (spatial pair) or boost (0, j)
            mu, nu = self.indices
            self.c_z = 0.0
            self.c_matrix = (np.outer(MINK[:, mu], MINK[:, nu])
                             - np.outer(MINK[:, nu], MINK[:, mu]))
            self._const = None
        elif kind == "scaling":
            self.c_z = 2.0
            self.c_matrix = MINK.copy()
            self._const = None
        else:
            raise ValueError(kind)

    def __repr__(self):
        return "KillingField(%s%s)" % (self.kind, list(self.indices))

    def at(self, t, x):
        """Contravariant components Z^mu at the event (t, x)."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        pt = np.stack([t + np.zeros_like(x[0]), x[0], x[1], x[2]])
        if self.kind == "translation":
            return (self._const.reshape((4,) + (1,) * (pt.ndim - 1))
                    + np.zeros_like(pt))
        if self.kind == "scaling":
            return pt
        mu, nu = self.indices
        x_low = np.einsum("ab,b...->a...", MINK, pt)
        out = np.zeros_like(pt)
        out[nu] = x_low[mu]
        out[mu] = -x_low[nu]
        return out

    def dz_up(self):
        """Constant matrix d_mu Z^nu (index raised with m)."""
        return self.c_matrix @ MINK


def standard_killing_set():
    """The full commuting family: 4 translations, 3 rotations, 3 boosts,
    and the scaling field (11 generators)."""
    zs = [KillingField("translation", (mu,)) for mu in range(4)]
    zs += [KillingField("lorentz", (i, j)) for (i, j) in
           ((1, 2), (1, 3), (2, 3))]
    zs += [KillingField("lorentz", (0, j)) for j in (1, 2, 3)]
    zs.append(KillingField("scaling"))
    return zs


def lie_scalar(z, phi_grad, t, x):
    """Lie (= directional) derivative of a scalar from its 4-gradient."""
    return np.einsum("k...,k...->...", z.at(t, x), phi_grad)


def lie_two_form(z, f, df, t, x):
    """Lie_Z F_{mu nu} from the pointwise value f and gradient
    df[lambda, mu, nu]; uses the constant c-matrix for the dZ terms."""
    zv = z.at(t, x)
    dz = z.dz_up()  # d_mu Z^nu
    adv = np.einsum("k...,kmn...->mn...", zv, df)
    corr = (np.einsum("ma,an...->mn...", dz, f)
            + np.einsum("na,ma...->mn...", dz, f))
    return adv + corr


def lie_sym_tensor(z, u, du, t, x):
    """Lie_Z U_{mu nu} for a symmetric covariant 2-tensor."""
    return lie_two_form(z, u, du, t, x)  # same index structure


def modified_lie_two_form(z, f, df, t, x):
    return lie_two_form(z, f, df, t, x) + 2.0 * z.c_z * f


# ---------------------------------------------------------------------------
# FD sampling helpers and commutation checks


def grad4_fd(sampler, t, x, step):
    """4-gradient of sampler(t, x) -> array by central differences."""
    base = np.asarray(sampler(t, x))
    out = np.zeros((4,) + base.shape)
    out[0] = (np.asarray(sampler(t + step, x))
              - np.asarray(sampler(t - step, x))) / (2 * step)
    for j in range(3):
        dp = np.zeros(3)
        dp[j] = step
        dxp = x + dp.reshape((3,) + (1,) * (np.ndim(x) - 1))
        dxm = x - dp.reshape((3,) + (1,) * (np.ndim(x) - 1))
        out[1 + j] = (np.asarray(sampler(t, dxp))
                      - np.asarray(sampler(t, dxm))) / (2 * step)
    return out


def box_fd(sampler, t, x, step):
    """Flat wave operator m^{kl} d_k d_l by second central differences."""
    base = np.asarray(sampler(t, x))
    acc = np.zeros_like(base)
    # -d_t^2
    acc -= (np.asarray(sampler(t + step, x)) - 2 * base
            + np.asarray(sampler(t - step, x))) / step ** 2
    for j in range(3):
        dp = np.zeros(3)
        dp[j] = step
        dxp = x + dp.reshape((3,) + (1,) * (np.ndim(x) - 1))
        dxm = x - dp.reshape((3,) + (1,) * (np.ndim(x) - 1))
        acc += (np.asarray(sampler(t, dxp)) - 2 * base
                + np.asarray(sampler(t, dxm))) / step ** 2
    return acc


def lie_derivative_Z(sampler, z, t, x, step, rank=0, modified=False):
    """FD Lie derivative of a sampled field at (t, x).

    rank 0: scalar (returns nabla_Z phi, optionally + c_z phi);
    rank 2: covariant two-tensor sampler returning shape (4, 4, ...).
    """
    if rank == 0:
        g = grad4_fd(sampler, t, x, step)
        val = np.einsum("k...,k...->...", z.at(t, x), g)
        if modified:
            val = val + z.c_z * np.asarray(sampler(t, x))
        return val
    if rank == 2:
        f = np.asarray(sampler(t, x))
        df = grad4_fd(sampler, t, x, step)
        val = lie_two_form(z, f, df, t, x)
        if modified:
            val = val + 2.0 * z.c_z * f
        return val
    raise ValueError("rank must be 0 or 2")


def maxwell_divergence_fd(sampler, t, x, step):
    """Flat-metric Maxwell divergence operator applied to a two-form field:
    (m^{mk} m^{nl} - m^{ml} m^{nk}) d_m F_{kl}, by central differences."""
    df = grad4_fd(sampler, t, x, step)
    return (np.einsum("mk,nl,mkl...->n...", MINK, MINK, df)
            - np.einsum("ml,nk,mkl...->n...", MINK, MINK, df))


def commutation_checks(z_set, scalar_sampler, two_form_sampler, t, x, steps):
    """Residuals of the wave-operator and Maxwell-divergence commutation
    identities for each Z and FD step; returns {(kind, check): [residuals]}.
    """
    report = {}
    for z in z_set:
        wave_res = []
        max_res = []
        for step in steps:
            # (a) modified nabla_Z of box phi vs box of nabla_Z phi
            lhs = lie_derivative_Z(lambda tt, xx: box_fd(scalar_sampler, tt, xx, step),
                                   z, t, x, step, rank=0) \
                + z.c_z * box_fd(scalar_sampler, t, x, step)
            rhs = box_fd(lambda tt, xx: lie_derivative_Z(scalar_sampler, z, tt, xx, step),
                         t, x, step)
            wave_res.append(float(np.max(np.abs(lhs - rhs))))
            # (b) Maxwell divergence: D(Lie_Z F) = (Lie_Z + 2 c_Z) D(F)
            dF = maxwell_divergence_fd(
                lambda tt, xx: lie_derivative_Z(two_form_sampler, z, tt, xx, step, rank=2),
                t, x, step)
            div = lambda tt, xx: maxwell_divergence_fd(two_form_sampler, tt, xx, step)
            zv = z.at(t, x)
            dz = z.dz_up()
            dd = grad4_fd(div, t, x, step)
            lie_vec = (np.einsum("k...,kn...->n...", zv, dd)
                       - np.einsum("an,a...->n...", dz, div(t, x)))
            rhs_b = lie_vec + 2.0 * z.c_z * div(t, x)
            max_res.append(float(np.max(np.abs(dF - rhs_b))))
        report[(repr(z), "wave")] = wave_res
        report[(repr(z), "maxwell")] = max_res
    return report
