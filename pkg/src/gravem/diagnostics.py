"""Weighted norms, energy currents, and inequality/decay probes.

Everything in here is read-only over grid states: weighted energies of the
metric perturbation and the electromagnetic field, the canonical-stress
energy current and its pointwise (jet-level) divergence identity, ratio
probes for the weighted Sobolev and Hardy inequalities, sup-over-sphere
decay probes for the null components of F, and a finite-difference residual
of the null-decomposed linearized field equations.

All grid reductions go through stencil.tree_sum so results are deterministic
for a fixed grid.
"""

import numpy as np

from . import em_model as em
from . import evolution as ev
from . import null_frame as nf
from . import stencil as st
from . import tensor_core as tc


class WindowTooShort(Exception):
    """Fewer than six usable samples inside the requested fit window."""


# ---------------------------------------------------------------------------
# weights


class WeightSpec:
    """The fixed exponents of the weight functions, with their ordering
    constraints enforced at construction:

        0 < delta < 1/4,   delta < gamma < 1/2,   0 < mu < 1/2,
        0 < gamma_prime < gamma - delta,   delta < mu_prime < 1/2 - mu.
    """

    def __init__(self, gamma=0.25, mu=0.125, delta=0.1,
                 gamma_prime=0.1, mu_prime=0.2):
        self.gamma = float(gamma)
        self.mu = float(mu)
        self.delta = float(delta)
        self.gamma_prime = float(gamma_prime)
        self.mu_prime = float(mu_prime)
        ok = (0.0 < self.delta < 0.25
              and self.delta < self.gamma < 0.5
              and 0.0 < self.mu < 0.5
              and 0.0 < self.gamma_prime < self.gamma - self.delta
              and self.delta < self.mu_prime < 0.5 - self.mu)
        if not ok:
            raise ValueError("weight exponents violate the ordering "
                             "constraints: %r" % self.__dict__)

    def __repr__(self):
        return ("WeightSpec(gamma=%g, mu=%g, delta=%g, gamma_prime=%g, "
                "mu_prime=%g)" % (self.gamma, self.mu, self.delta,
                                  self.gamma_prime, self.mu_prime))


def weight_w(q, spec):
    """Energy weight: 1 + (1+|q|)^{1+2 gamma} outside the cone (q > 0),
    1 + (1+|q|)^{-2 mu} inside.  Continuous, w(0) = 2, w >= 1."""
    q = np.asarray(q, dtype=float)
    a = 1.0 + np.abs(q)
    return np.where(q >= 0.0,
                    1.0 + a ** (1.0 + 2.0 * spec.gamma),
                    1.0 + a ** (-2.0 * spec.mu))


def weight_w_prime(q, spec):
    """dw/dq; positive for mu > 0 (w is increasing)."""
    q = np.asarray(q, dtype=float)
    a = 1.0 + np.abs(q)
    return np.where(q >= 0.0,
                    (1.0 + 2.0 * spec.gamma) * a ** (2.0 * spec.gamma),
                    2.0 * spec.mu * a ** (-1.0 - 2.0 * spec.mu))


def varpi(q, spec):
    """Pointwise-decay weight: (1+|q|)^{1+gamma'} for q > 0,
    (1+|q|)^{1/2-mu'} for q <= 0."""
    q = np.asarray(q, dtype=float)
    a = 1.0 + np.abs(q)
    return np.where(q >= 0.0,
                    a ** (1.0 + spec.gamma_prime),
                    a ** (0.5 - spec.mu_prime))


# ---------------------------------------------------------------------------
# records


class EnergyRecord:
    """One diagnostics row: time, energies by derivative order, and the
    gauge/constraint residual norms."""

    def __init__(self, t, energy_k, data_norm=0.0, gauge_sup=0.0,
                 gauge_l2=0.0, divB_l2=0.0, divD_l2=0.0):
        self.t = float(t)
        self.energy_k = dict(energy_k)
        self.data_norm = float(data_norm)
        self.gauge_sup = float(gauge_sup)
        self.gauge_l2 = float(gauge_l2)
        self.divB_l2 = float(divB_l2)
        self.divD_l2 = float(divD_l2)


class DecayFit:
    """Log-log least-squares fit of a sup-over-sphere probe against time."""

    def __init__(self, probe, window, exponent, r_squared):
        self.probe = probe
        self.window = (float(window[0]), float(window[1]))
        self.exponent = float(exponent)
        self.r_squared = float(r_squared)

    def __repr__(self):
        return ("DecayFit(%s, window=(%g, %g), exponent=%.4f, r2=%.4f)"
                % (self.probe, self.window[0], self.window[1],
                   self.exponent, self.r_squared))


def fit_loglog(ts, vals, window):
    """Least-squares slope of log(val) vs log(t) over t in [window].

    Drops non-positive samples; raises WindowTooShort below six points.
    Returns (exponent, r_squared).
    """
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(vals, dtype=float)
    keep = (ts >= window[0]) & (ts <= window[1]) & (vals > 0.0) & (ts > 0.0)
    if int(np.sum(keep)) < 6:
        raise WindowTooShort("%d usable samples in [%g, %g]"
                             % (int(np.sum(keep)), window[0], window[1]))
    lt = np.log(ts[keep])
    lv = np.log(vals[keep])
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = lv - (slope * lt + intercept)
    tot = lv - np.mean(lv)
    denom = float(np.dot(tot, tot))
    r2 = 1.0 if denom == 0.0 else 1.0 - float(np.dot(resid, resid)) / denom
    return float(slope), min(max(r2, 0.0), 1.0)


# ---------------------------------------------------------------------------
# energies


def _em_fields(state, model):
    """(E, B) on the grid; E = D for the linear model on a flat background."""
    if model is None or (model.kind == "maxwell" and state.h1 is None):
        return state.D, state.B
    raise ValueError("energy_norm needs model=None (linear, flat "
                     "background) or an explicit flat state")


def _h_first_jet(state, grid):
    """dh[lam, mu, nu] = d_lam h1_{mu nu} with the time slot from pi."""
    h1m = tc.sym_expand(state.h1)
    pim = tc.sym_expand(state.pi)
    dh = np.empty((4, 4, 4) + h1m.shape[2:])
    dh[0] = pim
    for a in range(3):
        dh[1 + a] = st.d1(h1m, a, grid.dx)
    return h1m, pim, dh


def _h_second_jet(state, grid, model, mass, pim, dh):
    """ddh[kap, lam, mu, nu] = d_kap d_lam h1_{mu nu}; the double time slot
    comes from the evolution right-hand side."""
    n = pim.shape[-1]
    ddh = np.empty((4, 4, 4, 4, n, n, n))
    ddh[0, 0] = tc.sym_expand(ev.metric_rhs(state, grid, model, mass))
    for a in range(3):
        da_pi = st.d1(pim, a, grid.dx)
        ddh[0, 1 + a] = da_pi
        ddh[1 + a, 0] = da_pi
        for b in range(a, 3):
            dab = st.d1(dh[1 + a], b, grid.dx)
            ddh[1 + a, 1 + b] = dab
            ddh[1 + b, 1 + a] = dab
    return ddh


SPATIAL_OUTER = [nf.KillingField("translation", (j,)) for j in (1, 2, 3)] + \
    [nf.KillingField("lorentz", (i, j)) for (i, j) in ((1, 2), (1, 3), (2, 3))]


def energy_norm(state, grid, k, spec, model=None, mass=0.0):
    """sqrt of sum_{|I| <= k} int { |grad grad_Z^I h1|^2 + |Lie_Z^I F|^2 } w(q).

    k = 0, 1, 2.  At k = 1 all eleven generators act; at k = 2 the outer
    generator ranges over the purely spatial, time-independent family
    (translations and rotations), which is what keeps every time derivative
    expressible through the evolution equations.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1, or 2")
    t = state.t
    r = np.sqrt(grid.x ** 2 + grid.y ** 2 + grid.z ** 2)
    w = weight_w(r - t, spec)
    dv = grid.dx ** 3
    xm = (grid.x, grid.y, grid.z)
    total = 0.0

    have_h = state.h1 is not None
    have_f = state.B is not None

    if have_h:
        h1m, pim, dh = _h_first_jet(state, grid)
        total += st.tree_sum(np.einsum("lmn...,lmn...->...", dh, dh) * w) * dv
    if have_f:
        e_f, b_f = _em_fields(state, model)
        total += st.tree_sum(2.0 * (np.einsum("j...,j...->...", e_f, e_f)
                                    + np.einsum("j...,j...->...", b_f, b_f))
                             * w) * dv
    if k == 0:
        return np.sqrt(total)

    zs = nf.standard_killing_set()
    if have_h:
        mdl = model if model is not None else em.EmModel.maxwell()
        ddh = _h_second_jet(state, grid, mdl, mass, pim, dh)
    if have_f:
        f_low = em.join_two_form(e_f, b_f)
        df = np.empty((4,) + f_low.shape)
        # linear flat-background time derivative: d_t E = curl B, d_t B = -curl E
        df[0] = em.join_two_form(st.curl(b_f, grid.dx),
                                 -st.curl(e_f, grid.dx))
        for a in range(3):
            df[1 + a] = st.d1(f_low, a, grid.dx)

    for z in zs:
        zv = z.at(t, xm)
        dz = z.dz_up()
        if have_h:
            # grad_Z h1 and its full four-gradient
            val1 = np.einsum("l...,lmn...->mn...", zv, dh)
            dval1 = (np.einsum("kl,lmn...->kmn...", dz, dh)
                     + np.einsum("l...,klmn...->kmn...", zv, ddh))
            total += st.tree_sum(
                np.einsum("kmn...,kmn...->...", dval1, dval1) * w) * dv
        if have_f:
            lf = nf.lie_two_form(z, f_low, df, t, xm)
            total += st.tree_sum(
                np.einsum("mn...,mn...->...", lf, lf) * w) * dv
        if k < 2:
            continue
        for z2 in SPATIAL_OUTER:
            z2v = z2.at(t, xm)
            dz2 = z2.dz_up()
            if have_h:
                val2 = np.einsum("j...,jmn...->mn...", z2v[1:], dval1[1:])
                dval2 = np.einsum("kl,lmn...->kmn...", dz2, dval1)
                # d_k d_j val1 by stencils; mixed time slot via symmetry
                for j in range(3):
                    dval2[0] += z2v[1 + j] * st.d1(dval1[0], j, grid.dx)
                    for a in range(3):
                        dval2[1 + a] += z2v[1 + j] * st.d1(dval1[1 + j], a,
                                                           grid.dx)
                total += st.tree_sum(
                    np.einsum("kmn...,kmn...->...", dval2, dval2) * w) * dv
            if have_f:
                lf2 = np.einsum("ma,an...->mn...", dz2, lf) \
                    + np.einsum("na,ma...->mn...", dz2, lf)
                for j in range(3):
                    lf2 += z2v[1 + j] * st.d1(lf, j, grid.dx)
                total += st.tree_sum(
                    np.einsum("mn...,mn...->...", lf2, lf2) * w) * dv
    return np.sqrt(total)


def data_norm(data, spec, k=2):
    """Weighted Sobolev norm of the free slice data:

        sum over { grad h1_spatial, K, D_abs, B_abs } of
        sum_{|I| <= k} int (1 + |x|^2)^{1/2 + gamma + |I|} |grad^I U|^2.
    """
    n, L = data.n, data.L
    x, y, z, dx = st.grid_mesh(n, L)
    r2 = x ** 2 + y ** 2 + z ** 2
    eta = 0.5 + spec.gamma
    dv = dx ** 3

    if data.dh1_spatial is not None:
        dh1 = np.asarray(data.dh1_spatial)
    else:
        dh1 = np.stack([st.d1(np.asarray(data.h1_spatial), a, dx)
                        for a in range(3)])
    fields = [dh1, np.asarray(data.K), np.asarray(data.D_abs),
              np.asarray(data.B_abs)]
    total = 0.0
    for u in fields:
        comps = [u.reshape((-1,) + u.shape[-3:])]
        for order in range(1, k + 1):
            prev = comps[-1]
            comps.append(np.concatenate(
                [st.d1(prev, a, dx) for a in range(3)]))
        for order, u_i in enumerate(comps):
            wgt = (1.0 + r2) ** (eta + order)
            total += st.tree_sum(
                np.einsum("c...,c...->...", u_i, u_i) * wgt) * dv
    return np.sqrt(total)


# ---------------------------------------------------------------------------
# canonical stress and its divergence identity


def canonical_stress(model, g, F, Fdot, w=1.0):
    """Mixed quadratic stress of a field variation Fdot on background (g, F):

        S^mu_nu = N^{mu zeta kappa lam} Fdot_{kappa lam} Fdot_{nu zeta}
                  - (1/4) delta^mu_nu N^{zeta eta kappa lam}
                          Fdot_{zeta eta} Fdot_{kappa lam}

    Returns (S, J0) with J0 = -w * S^0_0 (the energy density of the
    variation; equals (1/2)|Fdot|^2 w at a trivial background).
    """
    g_mat, g_inv, sqrt_det = em._metric_of(g)
    f_low = tc.form_mat(F)
    fd = tc.form_mat(Fdot)
    n_sharp = em.big_n_raw(model, g_inv, sqrt_det, f_low)
    s_mix = np.einsum("mzkl...,kl...,nz...->mn...", n_sharp, fd, fd)
    tr = np.einsum("zykl...,zy...,kl...->...", n_sharp, fd, fd)
    eye = np.eye(4).reshape((4, 4) + (1,) * np.ndim(tr))
    s_mix = s_mix - 0.25 * tr * eye
    return s_mix, -w * s_mix[0, 0]


def _big_n_of(model, g_mat, f_low):
    det = tc.det4(g_mat)
    g_inv = tc.inv4(g_mat, det)
    sqrt_det = np.sqrt(-det + 0j) if np.iscomplexobj(g_mat) \
        else np.sqrt(-det)
    return em.big_n_raw(model, g_inv, sqrt_det, f_low)


def random_eov_jet(model, rng, h_amp=0.05, f_amp=0.05, fdot_amp=1.0):
    """A random pointwise jet (g, dg, F, dF, Fdot, dFdot) whose dFdot slot
    satisfies the linearized-field structural constraints by construction:
    the cyclic (exterior-derivative) part of dFdot vanishes identically,
    and the remaining divergence content is absorbed into the free
    inhomogeneity evaluated by the checker."""
    def sympair(a):
        return 0.5 * (a + np.swapaxes(a, -1, -2))

    h = h_amp * sympair(rng.standard_normal((4, 4)))
    g = tc.MINK + h
    dg = h_amp * sympair(rng.standard_normal((4, 4, 4)))
    f_base = rng.standard_normal((4, 4))
    f_low = f_amp * (f_base - f_base.T)
    df = rng.standard_normal((4, 4, 4))
    df = f_amp * (df - np.swapaxes(df, 1, 2))
    fd_base = rng.standard_normal((4, 4))
    fdot = fdot_amp * (fd_base - fd_base.T)
    # dFdot[lam, mu, nu] = S[lam, mu, nu] - S[lam, nu, mu] with S symmetric
    # in its first two slots: the cyclic sum over (lam, mu, nu) cancels.
    s = fdot_amp * sympair(
        np.swapaxes(rng.standard_normal((4, 4, 4)), 1, 2))
    s = 0.5 * (s + np.transpose(s, (1, 0, 2)))
    dfdot = s - np.transpose(s, (0, 2, 1))
    return g, dg, f_low, df, fdot, dfdot


def stress_divergence_jet_check(model, jet, eps=1e-20):
    """Pointwise divergence identity for the canonical stress.

    With N = N(g, F), Fd the variation, and the inhomogeneity defined by
    contraction, I^nu := N^{mu nu kappa lam} dFd[mu, kappa, lam], the chain
    rule gives

        d_mu S^mu_nu = (d_mu N^{mu z k l}) Fd_{kl} Fd_{nu z}
                       + Fd_{nu eta} I^eta
                       - (1/4) (d_nu N^{z e k l}) Fd_{ze} Fd_{kl}

    whenever the cyclic part of dFd vanishes.  Returns the max-abs residual
    of that identity, with d_mu N evaluated by a complex-step derivative
    along the jet directions.
    """
    g, dg, f_low, df, fdot, dfdot = jet
    n0 = np.real(_big_n_of(model, g + 0j, f_low + 0j))
    dn = np.empty((4, 4, 4, 4, 4))
    for mu in range(4):
        nc = _big_n_of(model, g + 1j * eps * dg[mu],
                       f_low + 1j * eps * df[mu])
        dn[mu] = np.imag(nc) / eps

    # left side: term-by-term derivative of S^mu_nu, contracted on mu
    lhs = (np.einsum("mmzkl,kl,nz->n", dn, fdot, fdot)
           + np.einsum("mzkl,mkl,nz->n", n0, dfdot, fdot)
           + np.einsum("mzkl,kl,mnz->n", n0, fdot, dfdot))
    lhs -= 0.25 * (np.einsum("nzekl,ze,kl->n", dn, fdot, fdot)
                   + np.einsum("zekl,nze,kl->n", n0, dfdot, fdot)
                   + np.einsum("zekl,ze,nkl->n", n0, fdot, dfdot))

    inhom = np.einsum("mzkl,mkl->z", n0, dfdot)
    rhs = (np.einsum("ne,e->n", fdot, inhom)
           + np.einsum("mmzkl,kl,nz->n", dn, fdot, fdot)
           - 0.25 * np.einsum("nzekl,ze,kl->n", dn, fdot, fdot))
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# inequality ratio probes


def _sample_jet2(phi, t, x, y, z, step):
    """phi, its four-gradient, and its four-Hessian at fixed t by central
    differences of an analytic sampler (time included)."""
    base = phi(t, x, y, z)
    args = [x, y, z]

    def at(dt, dj=None, h=0.0):
        sh = [x, y, z]
        if dj is not None:
            sh[dj] = args[dj] + h
        return phi(t + dt, sh[0], sh[1], sh[2])

    plus = [at(step)] + [at(0.0, j, step) for j in range(3)]
    minus = [at(-step)] + [at(0.0, j, -step) for j in range(3)]
    grad = np.stack([(plus[m] - minus[m]) / (2.0 * step) for m in range(4)])
    hess = np.empty((4, 4) + base.shape)
    for m in range(4):
        hess[m, m] = (plus[m] - 2.0 * base + minus[m]) / step ** 2
    for m in range(4):
        for k in range(m + 1, 4):
            def at2(sm, sk):
                dt = sm * step if m == 0 else 0.0
                sh = [x, y, z]
                if m > 0:
                    sh[m - 1] = args[m - 1] + sm * step
                sh[k - 1] = args[k - 1] + sk * step
                return phi(t + dt, sh[0], sh[1], sh[2])
            mix = (at2(1, 1) - at2(1, -1) - at2(-1, 1) + at2(-1, -1)) \
                / (4.0 * step ** 2)
            hess[m, k] = mix
            hess[k, m] = mix
    return base, grad, hess


def ks_ratio(phi, t, spec, n=48, L=16.0, step=None):
    """Ratio probe for the weighted sup-norm inequality

        (1 + t + |x|) [(1 + |q|) w(q)]^{1/2} |phi|
            <= C sum_{|I| <= 2} || w^{1/2} grad_Z^I phi ||_{L^2}.

    Returns sup(LHS) / sum(RHS) on an n^3 grid of half-width L; 0 for the
    zero field.
    """
    x, y, z, dx = st.grid_mesh(n, L)
    if step is None:
        step = dx
    base, grad, hess = _sample_jet2(phi, t, x, y, z, step)
    r = np.sqrt(x ** 2 + y ** 2 + z ** 2)
    q = r - t
    w = weight_w(q, spec)
    lhs = float(np.max((1.0 + t + r) * np.sqrt((1.0 + np.abs(q)) * w)
                       * np.abs(base)))
    dv = dx ** 3
    xm = (x, y, z)

    def l2(field):
        return np.sqrt(st.tree_sum(field ** 2 * w) * dv)

    zs = nf.standard_killing_set()
    rhs = l2(base)
    firsts = []
    for zf in zs:
        zv = zf.at(t, xm)
        firsts.append(np.einsum("m...,m...->...", zv, grad))
        rhs += l2(firsts[-1])
    for z1 in zs:
        z1v = z1.at(t, xm)
        dz1 = z1.dz_up()
        for z2 in zs:
            z2v = z2.at(t, xm)
            dz2 = z2.dz_up()
            fld = (np.einsum("m...,mn,n...->...", z1v, dz2, grad)
                   + np.einsum("m...,n...,mn...->...", z1v, z2v, hess))
            rhs += l2(fld)
    if rhs == 0.0:
        return 0.0
    return lhs / rhs


def hardy_ratio(phi, a, spec, t=0.0, n=48, L=16.0, step=None):
    """Ratio of the two sides of the weighted radial inequality

        int (1+t+|q|)^{-1+a} (1+|q|)^{-2} phi^2 w
            <= C int (1+t+|q|)^{-1+a} |d_r phi|^2 w,   a in [-1, 1].
    """
    if not -1.0 <= a <= 1.0:
        raise ValueError("a must lie in [-1, 1]")
    x, y, z, dx = st.grid_mesh(n, L)
    if step is None:
        step = dx
    base = phi(t, x, y, z)
    r = np.maximum(np.sqrt(x ** 2 + y ** 2 + z ** 2), 1e-12)
    om = (x / r, y / r, z / r)
    # radial central difference: sample at x +/- step*omega
    p = phi(t, x + step * om[0], y + step * om[1], z + step * om[2])
    m = phi(t, x - step * om[0], y - step * om[1], z - step * om[2])
    dr = (p - m) / (2.0 * step)
    q = r - t
    w = weight_w(q, spec)
    outer = (1.0 + t + np.abs(q)) ** (-1.0 + a)
    lhs = st.tree_sum(outer * (1.0 + np.abs(q)) ** (-2.0) * base ** 2 * w)
    rhs = st.tree_sum(outer * dr ** 2 * w)
    if rhs == 0.0:
        return 0.0
    return float(lhs / rhs)


# ---------------------------------------------------------------------------
# null-component probes


def sphere_directions(m=96, seed=7):
    """A roughly uniform set of unit vectors (Fibonacci spiral), shape (3, m)."""
    i = np.arange(m, dtype=float) + 0.5
    mu = 1.0 - 2.0 * i / m
    phi_ang = np.pi * (1.0 + np.sqrt(5.0)) * i
    s = np.sqrt(np.maximum(1.0 - mu ** 2, 0.0))
    return np.stack([s * np.cos(phi_ang), s * np.sin(phi_ang), mu])


def _trilinear(field, pts, n, L):
    """Periodic trilinear interpolation of field (..., n, n, n) at pts (3, m)."""
    dx = 2.0 * L / n
    u = (pts + L) / dx
    i0 = np.floor(u).astype(int)
    fr = u - i0
    out = 0.0
    for cx in (0, 1):
        for cy in (0, 1):
            for cz in (0, 1):
                wgt = ((fr[0] if cx else 1.0 - fr[0])
                       * (fr[1] if cy else 1.0 - fr[1])
                       * (fr[2] if cz else 1.0 - fr[2]))
                out = out + wgt * field[...,
                                        (i0[0] + cx) % n,
                                        (i0[1] + cy) % n,
                                        (i0[2] + cz) % n]
    return out


def null_component_sups(state, grid, q0, directions=None, r_min=0.5):
    """Sup over the sphere r = t + q0 of the null components of F.

    Components (E = D on the linear flat background):
        rho = -E.omega, sigma = B.omega,
        alpha_bar = P(E - omega x B),  alpha = P(E + omega x B),
    with P the tangential projector.  Returns a dict with keys
    alpha_bar, alpha, rho, sigma, F_total.
    """
    if directions is None:
        directions = sphere_directions()
    rr = state.t + q0
    if rr < r_min:
        return {k: 0.0 for k in
                ("alpha_bar", "alpha", "rho", "sigma", "F_total")}
    pts = rr * directions
    e_s = _trilinear(state.D, pts, grid.n, grid.L)
    b_s = _trilinear(state.B, pts, grid.n, grid.L)
    om = directions

    def dot(u, v):
        return np.einsum("j...,j...->...", u, v)

    def proj(v):
        return v - om * dot(om, v)

    omxb = np.cross(om, b_s, axis=0)
    rho = -dot(e_s, om)
    sig = dot(b_s, om)
    abar = proj(e_s - omxb)
    alph = proj(e_s + omxb)

    def supv(v):
        return float(np.max(np.sqrt(dot(v, v))))

    return {
        "alpha_bar": supv(abar),
        "alpha": supv(alph),
        "rho": float(np.max(np.abs(rho))),
        "sigma": float(np.max(np.abs(sig))),
        "F_total": float(np.max(np.sqrt(2.0 * (dot(e_s, e_s)
                                               + dot(b_s, b_s))))),
    }


def null_decay_probe(history, grid, spec, window, q0=0.0, directions=None,
                     r_min=0.5):
    """Decay-exponent fits of the null-component sups along outgoing spheres.

    history: iterable of GridState snapshots (flat linear background).
    Probes whose samples vanish identically are omitted from the result.
    Raises WindowTooShort when a nonzero probe has < 6 usable samples.
    """
    ts = []
    rows = []
    for state in history:
        ts.append(state.t)
        rows.append(null_component_sups(state, grid, q0, directions, r_min))
    fits = {}
    for key in ("alpha_bar", "alpha", "rho", "sigma", "F_total"):
        vals = np.array([row[key] for row in rows])
        if np.all(vals == 0.0):
            continue
        expo, r2 = fit_loglog(ts, vals, window)
        fits[key] = DecayFit(key, window, expo, r2)
    return fits


# ---------------------------------------------------------------------------
# null-decomposed linearized-equation residual


def _null_scalar_fields(state, grid, r_floor=1e-9):
    """sigma, rho, and the tangential one-form abar as grid fields."""
    r = np.maximum(np.sqrt(grid.x ** 2 + grid.y ** 2 + grid.z ** 2), r_floor)
    om = np.stack([grid.x, grid.y, grid.z]) / r
    e_f, b_f = state.D, state.B
    sig = np.einsum("j...,j...->...", om, b_f)
    rho = -np.einsum("j...,j...->...", om, e_f)
    v = e_f - np.cross(om, b_f, axis=0)
    abar = v - om * np.einsum("j...,j...->...", om, v)
    return r, om, sig, rho, abar


EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS3[_i, _j, _k] = 1.0
    EPS3[_i, _k, _j] = -1.0


def eov_null_residual(history, grid, r_min=1.0, r_max=None,
                      sigma_extra=None):
    """Finite-difference residuals of the transport equations satisfied by
    the middle null components on a flat linear background:

        (d_t - d_r) sigma - 2 sigma / r + eps^{ab} d_a abar_b = 0
        (d_t - d_r) rho   - 2 rho / r   + P^{ab}  d_a abar_b = 0

    history: (state_minus, state_mid, state_plus), equally spaced in time.
    Returns {"sigma": sup, "rho": sup} over r_min < r < r_max.
    sigma_extra (a grid field) is added to sigma before differencing —
    a deliberate corruption hook for self-tests.
    """
    sm, s0, sp = history
    dt2 = sp.t - sm.t
    r, om, sig, rho, abar = _null_scalar_fields(s0, grid)
    if sigma_extra is not None:
        sig = sig + sigma_extra
    _, _, sig_m, rho_m, _ = _null_scalar_fields(sm, grid)
    _, _, sig_p, rho_p, _ = _null_scalar_fields(sp, grid)
    if sigma_extra is not None:
        sig_m = sig_m + sigma_extra
        sig_p = sig_p + sigma_extra

    dt_sig = (sig_p - sig_m) / dt2
    dt_rho = (rho_p - rho_m) / dt2
    d_abar = np.stack([st.d1(abar, a, grid.dx) for a in range(3)])
    dr_sig = sum(om[j] * st.d1(sig, j, grid.dx) for j in range(3))
    dr_rho = sum(om[j] * st.d1(rho, j, grid.dx) for j in range(3))

    eps_ab = np.einsum("abc,c...->ab...", EPS3, om)
    ang_sig = np.einsum("ab...,ab...->...", eps_ab, d_abar)
    proj = np.eye(3).reshape(3, 3, 1, 1, 1) - om[:, None] * om[None, :]
    ang_rho = np.einsum("ab...,ab...->...", proj, d_abar)

    res_sig = dt_sig - dr_sig - 2.0 * sig / r + ang_sig
    res_rho = dt_rho - dr_rho - 2.0 * rho / r + ang_rho

    if r_max is None:
        r_max = grid.L - 4.0 * grid.dx
    mask = (r > r_min) & (r < r_max) \
        & (np.maximum(np.maximum(np.abs(grid.x), np.abs(grid.y)),
                      np.abs(grid.z)) < r_max)
    return {"sigma": float(np.max(np.abs(res_sig[mask]))),
            "rho": float(np.max(np.abs(res_rho[mask])))}
