"""Method-of-lines evolution on a uniform periodic cube.

Unknowns: the packed metric remainder h1 and its time derivative pi
(10 components each), plus the exactly-evolved electromagnetic pair
(B, D).  The metric equation is the harmonic-reduced wave system with
the mass-tail wave operator subtracted in closed form; the EM equations
are the curl forms with (E, H) recovered from (B, D) by constitutive
inversion at the current metric.  Classical RK4 in time with optional
fourth-difference dissipation.
"""

import numpy as np

from . import em_model as em
from . import fast
from . import stencil as st
from . import tensor_core as tc

EYE4 = np.eye(4)


class MetricDegenerate(Exception):
    pass


class NanDetected(Exception):
    pass


class Grid:
    def __init__(self, n, L):
        self.n = int(n)
        self.L = float(L)
        if self.n < 16 or self.n % 8:
            raise ValueError("n must be >= 16 and divisible by 8")
        self.dx = 2.0 * self.L / self.n
        self.x, self.y, self.z, _ = st.grid_mesh(self.n, self.L)


class StepperConfig:
    def __init__(self, cfl=0.25, dissipation_eps=0.0, freeze_metric=False):
        if not 0.0 < cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if dissipation_eps < 0.0:
            raise ValueError("dissipation_eps must be >= 0")
        self.cfl = float(cfl)
        self.dissipation_eps = float(dissipation_eps)
        self.freeze_metric = bool(freeze_metric)


class GridState:
    """h1, pi: packed (10, n, n, n) or None for a frozen flat metric;
    B, D: (3, n, n, n); t: time."""

    def __init__(self, t, h1, pi, B, D):
        self.t = float(t)
        self.h1 = h1
        self.pi = pi
        self.B = B
        self.D = D

    def copy(self):
        cp = lambda a: None if a is None else a.copy()
        return GridState(self.t, cp(self.h1), cp(self.pi),
                         self.B.copy(), self.D.copy())


# ---------------------------------------------------------------------------
# the lower-order (second-derivative-free) part of the reduced Ricci tensor


def _dginv(g_inv, dg):
    """d_b (g^{-1})^{xy} = -g^{xc} g^{yd} d_b g_{cd}; leading axis b."""
    return -np.einsum("xc...,yd...,bcd...->bxy...", g_inv, g_inv, dg,
                      optimize=True)


def _dgamma_contracted(g_inv, dg, ddg=None, di=None):
    """d_mu Gamma^kappa of the contracted gauge vector; leading axis mu."""
    if di is None:
        di = _dginv(g_inv, dg)
    out = (np.einsum("mka...,nb...,nab...->mk...", di, g_inv, dg, optimize=True)
           + np.einsum("ka...,mnb...,nab...->mk...", g_inv, di, dg, optimize=True)
           - 0.5 * np.einsum("mkn...,ab...,nab...->mk...", di, g_inv, dg, optimize=True)
           - 0.5 * np.einsum("kn...,mab...,nab...->mk...", g_inv, di, dg, optimize=True))
    if ddg is not None:
        out = out + (np.einsum("ka...,nb...,mnab...->mk...", g_inv, g_inv, ddg,
                               optimize=True)
                     - 0.5 * np.einsum("kn...,ab...,mnab...->mk...", g_inv,
                                       g_inv, ddg, optimize=True))
    return out


def _ricci(g_inv, dg, ddg=None, di=None):
    gam = tc.christoffel_lower_jet(g_inv, dg)      # Gamma^k_{mn}
    if di is None:
        di = _dginv(g_inv, dg)
    # d_b Gamma^a_{mn} = 0.5 d_b g^{al} C_{lmn} + 0.5 g^{al} d_b C_{lmn}
    # with C_{lmn} = d_m g_{ln} + d_n g_{lm} - d_l g_{mn}; only the two
    # traces of d Gamma enter, so the rank-4 array is never materialized
    c_low = (np.einsum("mln...->lmn...", dg) + np.einsum("nlm...->lmn...", dg)
             - dg)
    tr_di = np.einsum("aal...->l...", di)
    ric = (0.5 * np.einsum("l...,lmn...->mn...", tr_di, c_low)
           - 0.5 * np.einsum("nal...,lam...->mn...", di, c_low,
                             optimize=True)
           + np.einsum("aab...,bmn...->mn...", gam, gam, optimize=True)
           - np.einsum("anb...,bam...->mn...", gam, gam, optimize=True))
    if ddg is not None:
        dc = (np.einsum("bmln...->blmn...", ddg)
              + np.einsum("bnlm...->blmn...", ddg)
              - ddg)
        ric = ric + 0.5 * (np.einsum("al...,almn...->mn...", g_inv, dc,
                                     optimize=True)
                           - np.einsum("al...,nlam...->mn...", g_inv, dc,
                                       optimize=True))
    return ric


def ricci_lower_order(g, g_inv, dg, ddg=None):
    """The second-derivative-free remainder of the reduced Ricci tensor.

    Equals R_{mn} + (1/2) g^{ab} dd_ab g_{mn} minus the symmetrized
    g-weighted gradient of the contracted gauge vector.  All explicit
    second-derivative contributions cancel identically, so the ddg slots
    (if supplied) must not change the output.
    """
    if (ddg is None and fast.HAVE_NUMBA and isinstance(g, np.ndarray)
            and g.ndim == 5 and g.dtype == np.float64
            and dg.dtype == np.float64):
        return fast.ricci_lower_grid(g, g_inv, dg)
    di = _dginv(g_inv, dg)
    ric = _ricci(g_inv, dg, ddg, di=di)
    dgam = _dgamma_contracted(g_inv, dg, ddg, di=di)
    out = ric - 0.5 * (np.einsum("kn...,mk...->mn...", g, dgam)
                       + np.einsum("km...,nk...->mn...", g, dgam))
    if ddg is not None:
        out = out + 0.5 * np.einsum("ab...,abmn...->mn...", g_inv, ddg,
                                    optimize=True)
    return out


# ---------------------------------------------------------------------------
# right-hand sides


def _metric_fields(state, grid, mass):
    """Assemble (g, g_inv, sqrt_det, tail jet) for the current state."""
    tail, tgrad, thess = tc.tail_profile_jet(state.t, grid.x, grid.y, grid.z,
                                             mass)
    eye = EYE4.reshape(4, 4, 1, 1, 1)
    g = tc.MINK.reshape(4, 4, 1, 1, 1) + tail * eye
    if state.h1 is not None:
        g = g + tc.sym_expand(state.h1)
    det = tc.det4(g)
    if np.any(det >= 0.0):
        raise tc.NonLorentzian("metric determinant reached %.3e"
                               % float(np.max(det)))
    g_inv = tc.inv4(g, det)
    if np.min(np.abs(g_inv[0, 0])) < 0.1:
        raise MetricDegenerate("min |g^00| = %.3e"
                               % float(np.min(np.abs(g_inv[0, 0]))))
    return g, g_inv, np.sqrt(-det), (tail, tgrad, thess)


def _faraday_of_state(state, model, gpack):
    g, g_inv, sqrt_det, _ = gpack
    e, h_field = em.constitutive_invert(model, (g, g_inv, sqrt_det),
                                        state.B, state.D)
    return em.join_two_form(e, state.B), e, h_field


def metric_rhs(state, grid, model, mass, gpack=None, faraday=None):
    """d_t pi: the isolated second time derivative of h1."""
    if gpack is None:
        gpack = _metric_fields(state, grid, mass)
    g, g_inv, sqrt_det, (tail, tgrad, thess) = gpack
    dx = grid.dx
    eye = EYE4.reshape(4, 4, 1, 1, 1)

    pim = tc.sym_expand(state.pi)
    dg = np.empty((4,) + g.shape, dtype=g.dtype)
    dg[0] = tgrad[0] * eye + pim
    for a in range(3):
        dg[1 + a] = tgrad[1 + a] * eye + tc.sym_expand(st.d1(state.h1, a, dx))

    q_low = ricci_lower_order(g, g_inv, dg)

    if faraday is None:
        faraday = _faraday_of_state(state, model, gpack)
    f_low = faraday[0]
    t_low = em.stress_energy_raw(model, g, g_inv, sqrt_det, f_low)
    tr_t = np.einsum("ab...,ab...->...", g_inv, t_low)
    rhs = 2.0 * q_low - 2.0 * (t_low - 0.5 * g * tr_t)

    # subtract the mass-tail wave operator (closed form)
    box_tail = np.einsum("ab...,ab...->...", g_inv, thess)
    rhs = rhs - box_tail * eye

    # isolate d_t^2 h1 from g^{ab} dd_ab h1 = rhs (packed components)
    spat = np.zeros((10,) + rhs.shape[2:], dtype=rhs.dtype)
    for j in range(3):
        spat = spat + 2.0 * g_inv[0, 1 + j] * st.d1(state.pi, j, dx)
        for k in range(3):
            spat = spat + g_inv[1 + j, 1 + k] * st.d11(state.h1, j, k, dx)
    return (tc.sym_compress(rhs) - spat) / g_inv[0, 0]


def em_rhs(state, grid, model, mass, gpack=None, faraday=None):
    """(d_t B, d_t D) = (-curl E, curl H)."""
    flat = state.h1 is None and mass == 0.0
    if flat and model.kind == "maxwell":
        e, h_field = state.D, state.B
    else:
        if gpack is None:
            gpack = _metric_fields(state, grid, mass)
        if faraday is None:
            faraday = _faraday_of_state(state, model, gpack)
        _, e, h_field = faraday
    return -st.curl(e, grid.dx), st.curl(h_field, grid.dx)


def _full_rhs(state, grid, model, mass, stepper):
    """Time derivative of every evolved field, plus dissipation."""
    evolve_metric = state.h1 is not None
    gpack = faraday = None
    if evolve_metric or model.kind != "maxwell" or mass != 0.0:
        gpack = _metric_fields(state, grid, mass)
        faraday = _faraday_of_state(state, model, gpack)
    dt_b, dt_d = em_rhs(state, grid, model, mass, gpack, faraday)
    dt_h1 = dt_pi = None
    if evolve_metric:
        dt_h1 = state.pi.copy()
        dt_pi = metric_rhs(state, grid, model, mass, gpack, faraday)
    eps = stepper.dissipation_eps
    if eps > 0.0:
        dt_b = dt_b + st.kreiss_oliger(state.B, grid.dx, eps)
        dt_d = dt_d + st.kreiss_oliger(state.D, grid.dx, eps)
        if evolve_metric:
            dt_h1 = dt_h1 + st.kreiss_oliger(state.h1, grid.dx, eps)
            dt_pi = dt_pi + st.kreiss_oliger(state.pi, grid.dx, eps)
    return dt_h1, dt_pi, dt_b, dt_d


def _axpy(state, rhs, dt):
    h1 = pi = None
    if state.h1 is not None:
        h1 = state.h1 + dt * rhs[0]
        pi = state.pi + dt * rhs[1]
    return GridState(state.t + dt, h1, pi,
                     state.B + dt * rhs[2], state.D + dt * rhs[3])


def _check_finite(state, step):
    fields = [("B", state.B), ("D", state.D)]
    if state.h1 is not None:
        fields += [("h1", state.h1), ("pi", state.pi)]
    for name, f in fields:
        if not np.all(np.isfinite(f)):
            idx = np.unravel_index(int(np.argmin(np.isfinite(f))), f.shape)
            raise NanDetected("field %s at index %s, step %d"
                              % (name, idx, step))


def rk4_step(state, dt, grid, model, mass, stepper, step_index=0):
    _check_finite(state, step_index)
    k1 = _full_rhs(state, grid, model, mass, stepper)
    s2 = _axpy(state, k1, 0.5 * dt)
    k2 = _full_rhs(s2, grid, model, mass, stepper)
    s3 = _axpy(state, k2, 0.5 * dt)
    k3 = _full_rhs(s3, grid, model, mass, stepper)
    s4 = _axpy(state, k3, dt)
    k4 = _full_rhs(s4, grid, model, mass, stepper)

    def comb(i):
        if k1[i] is None:
            return None
        return (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0

    out = _axpy(state, tuple(comb(i) for i in range(4)), dt)
    _check_finite(out, step_index)
    return out


def state_from_reduced(rd, freeze_metric=False):
    if freeze_metric:
        return GridState(0.0, None, None, rd.B.copy(), rd.D.copy())
    return GridState(0.0, rd.h1.copy(), rd.pi.copy(), rd.B.copy(), rd.D.copy())


def evolve(initial, t_final, model, grid, stepper, mass=0.0, sink=None,
           sink_every=1):
    """Fixed-dt RK4 loop.  `initial` is a ReducedData or GridState; `sink`
    (if given) is called as sink(state, step) at step 0, every sink_every
    steps, and at the final step."""
    if hasattr(initial, "g0"):
        state = state_from_reduced(initial, stepper.freeze_metric)
        mass = initial.mass
    else:
        state = initial.copy()
    if t_final < 0.0:
        raise ValueError("t_final must be >= 0")
    dt = stepper.cfl * grid.dx
    n_steps = max(int(np.ceil(t_final / dt - 1e-12)), 0) if t_final > 0 else 0
    if n_steps:
        dt = t_final / n_steps
    if sink is not None:
        sink(state, 0)
    for step in range(1, n_steps + 1):
        state = rk4_step(state, dt, grid, model, mass, stepper, step)
        if sink is not None and (step % sink_every == 0 or step == n_steps):
            sink(state, step)
    return state


def gauge_of_state(state, grid, mass):
    """Contracted gauge vector of the current state (stencil spatial
    derivatives, stored time derivative); zero for frozen metric."""
    if state.h1 is None:
        return np.zeros((4, grid.n, grid.n, grid.n))
    g, g_inv, _, (tail, tgrad, _) = _metric_fields(state, grid, mass)
    eye = EYE4.reshape(4, 4, 1, 1, 1)
    dg = np.empty((4,) + g.shape)
    dg[0] = tgrad[0] * eye + tc.sym_expand(state.pi)
    for a in range(3):
        dg[1 + a] = st.d1(g, a, grid.dx)
    return tc.contracted_gamma(g_inv, dg)
