import numpy as np
import pytest

from gravem import em_model as em
from gravem import evolution as ev
from gravem import null_frame as nf
from gravem import stencil as st
from gravem import tensor_core as tc


def random_lorentz_jet(rng, amp=0.05):
    h = amp * rng.standard_normal((4, 4))
    h = 0.5 * (h + h.T)
    g = tc.MINK + h
    dg = amp * rng.standard_normal((4, 4, 4))
    dg = 0.5 * (dg + np.swapaxes(dg, 1, 2))
    return g, tc.inv4(g), dg


def test_ricci_lower_order_zero_jet():
    g = tc.MINK.copy()
    q = ev.ricci_lower_order(g, tc.inv4(g), np.zeros((4, 4, 4)))
    assert np.max(np.abs(q)) == 0.0


def test_ricci_lower_order_second_derivative_free():
    rng = np.random.default_rng(7)
    for _ in range(50):
        g, g_inv, dg = random_lorentz_jet(rng)
        ddg = rng.standard_normal((4, 4, 4, 4))
        ddg = 0.5 * (ddg + np.swapaxes(ddg, 0, 1))
        ddg = 0.5 * (ddg + np.swapaxes(ddg, 2, 3))
        q0 = ev.ricci_lower_order(g, g_inv, dg)
        q1 = ev.ricci_lower_order(g, g_inv, dg, ddg)
        assert np.max(np.abs(q1 - q0)) < 1e-12


def linear_gauge_part(dh):
    """Linear part of the contracted gauge vector for a constant jet."""
    m = tc.MINK
    return (np.einsum("ab,abM->M", m, dh)
            - 0.5 * np.einsum("ab,Mab->M", m, dh))


def project_linear_gauge(dh):
    """Minimal-norm correction making the jet satisfy the linearized
    gauge condition (the quadratic decomposition is stated in gauge)."""
    basis, rows = [], []
    for l in range(4):
        for p, q in tc.SYM_IDX:
            e = np.zeros((4, 4, 4))
            e[l, p, q] = e[l, q, p] = 1.0
            basis.append(e)
            rows.append(linear_gauge_part(e))
    a = np.array(rows)                      # (nb, 4)
    coef, *_ = np.linalg.lstsq(a.T, linear_gauge_part(dh), rcond=None)
    return dh - np.tensordot(coef, np.array(basis), axes=(0, 0))


def test_ricci_lower_order_quadratic_match():
    # at amplitude eps the output matches half the quadratic null-form
    # combination to a cubic remainder, on gauge-compatible jets
    rng = np.random.default_rng(11)
    h = rng.standard_normal((4, 4))
    h = 0.5 * (h + h.T)
    dh = rng.standard_normal((4, 4, 4))
    dh = 0.5 * (dh + np.swapaxes(dh, 1, 2))
    dh = project_linear_gauge(dh)
    assert np.max(np.abs(linear_gauge_part(dh))) < 1e-12
    quad = 0.5 * (nf.p_tensor(dh, dh) + nf.q1h_tensor(dh))
    epss = np.array([0.02, 0.01, 0.005, 0.0025])
    devs = []
    for eps in epss:
        g = tc.MINK + eps * h
        q = ev.ricci_lower_order(g, tc.inv4(g), eps * dh)
        devs.append(np.max(np.abs(q - eps ** 2 * quad)))
    slope = np.polyfit(np.log(epss), np.log(devs), 1)[0]
    assert abs(slope - 3.0) < 0.2


def flat_state(n, t=0.0):
    shape = (n, n, n)
    return ev.GridState(t, np.zeros((10,) + shape), np.zeros((10,) + shape),
                        np.zeros((3,) + shape), np.zeros((3,) + shape))


def test_metric_rhs_flat_vacuum():
    grid = ev.Grid(16, 4.0)
    rhs = ev.metric_rhs(flat_state(16), grid, em.EmModel.maxwell(), 0.0)
    assert np.max(np.abs(rhs)) < 1e-14


def test_metric_source_quadratic_in_em_amplitude():
    grid = ev.Grid(24, 6.0)
    model = em.EmModel.maxwell()
    sups, epss = [], (0.02, 0.01, 0.005)
    for eps in epss:
        state = flat_state(24)
        prof = eps * np.exp(-(grid.x ** 2 + grid.y ** 2 + grid.z ** 2))
        state.D[2] = prof
        state.B[1] = -prof
        rhs = ev.metric_rhs(state, grid, model, 0.0)
        sups.append(np.max(np.abs(rhs)))
    slope = np.polyfit(np.log(epss), np.log(sups), 1)[0]
    assert abs(slope - 2.0) < 0.1


def tt_wave_state(grid, a, k):
    """h1_22 = -h1_33 = a sin(k(x - t)) at t = 0: transverse-traceless,
    divergence-free, an exact solution of the linearized system."""
    n = grid.n
    s = np.sin(k * grid.x)
    c = np.cos(k * grid.x)
    h1 = np.zeros((10, n, n, n))
    pi = np.zeros((10, n, n, n))
    i22 = tc.SYM_IDX.index((2, 2))
    i33 = tc.SYM_IDX.index((3, 3))
    h1[i22], h1[i33] = a * s, -a * s
    pi[i22], pi[i33] = -a * k * c, a * k * c
    return ev.GridState(0.0, h1, pi, np.zeros((3, n, n, n)),
                        np.zeros((3, n, n, n)))


def test_metric_wave_global_order_4():
    model = em.EmModel.maxwell()
    a, L = 1e-7, 4.0
    k = np.pi / L
    t_final = 2.0
    errs, dxs = [], []
    for n in (16, 24, 32):
        grid = ev.Grid(n, L)
        state = tt_wave_state(grid, a, k)
        out = ev.evolve(state, t_final, model, grid, ev.StepperConfig())
        i22 = tc.SYM_IDX.index((2, 2))
        exact = a * np.sin(k * (grid.x - t_final))
        errs.append(np.max(np.abs(out.h1[i22] - exact)) / a)
        dxs.append(grid.dx)
    slope = np.polyfit(np.log(dxs), np.log(errs), 1)[0]
    assert abs(slope - 4.0) < 0.5


def test_em_rhs_static():
    grid = ev.Grid(16, 4.0)
    n = 16
    state = ev.GridState(0.0, None, None,
                         np.ones((3, n, n, n)), np.zeros((3, n, n, n)))
    dtb, dtd = ev.em_rhs(state, grid, em.EmModel.maxwell(), 0.0)
    assert np.max(np.abs(dtb)) == 0.0 and np.max(np.abs(dtd)) == 0.0


def maxwell_wave_state(grid, k):
    f = np.sin(k * grid.x)
    n = grid.n
    B = np.zeros((3, n, n, n))
    D = np.zeros((3, n, n, n))
    D[1] = f
    B[2] = f
    return ev.GridState(0.0, None, None, B, D)


def test_maxwell_plane_wave_advection_order_4():
    model = em.EmModel.maxwell()
    L = 4.0
    k = np.pi / L
    t_final = 1.5
    errs, dxs = [], []
    for n in (16, 24, 32):
        grid = ev.Grid(n, L)
        out = ev.evolve(maxwell_wave_state(grid, k), t_final, model, grid,
                        ev.StepperConfig())
        exact = np.sin(k * (grid.x - t_final))
        err = st.l2_norm(out.D[1] - exact, grid.dx)
        errs.append(err)
        dxs.append(grid.dx)
    slope = np.polyfit(np.log(dxs), np.log(errs), 1)[0]
    assert abs(slope - 4.0) < 0.5


def test_mbi_null_wave_rhs_matches_maxwell():
    grid = ev.Grid(24, 4.0)
    state = maxwell_wave_state(grid, np.pi / 4.0)
    b1, d1_ = ev.em_rhs(state, grid, em.EmModel.maxwell(), 0.0)
    b2, d2_ = ev.em_rhs(state, grid, em.EmModel.born_infeld(1.0), 0.0)
    assert np.max(np.abs(b1 - b2)) < 1e-12
    assert np.max(np.abs(d1_ - d2_)) < 1e-12


def test_rk4_flat_vacuum_unchanged():
    grid = ev.Grid(16, 4.0)
    state = flat_state(16)
    out = ev.rk4_step(state, 0.1, grid, em.EmModel.maxwell(), 0.0,
                      ev.StepperConfig())
    for f in (out.h1, out.pi, out.B, out.D):
        assert np.max(np.abs(f)) < 1e-15


def test_maxwell_pulse_energy_drift():
    grid = ev.Grid(64, 4.0)
    r2 = grid.x ** 2 + grid.y ** 2 + grid.z ** 2
    prof = 1e-3 * np.exp(-r2 / 1.0)
    n = grid.n
    B = np.zeros((3, n, n, n))
    D = np.zeros((3, n, n, n))
    # solenoidal curl-of-potential fields
    B[0], B[1] = st.d1(prof, 1, grid.dx), -st.d1(prof, 0, grid.dx)
    D[1], D[2] = st.d1(prof, 2, grid.dx), -st.d1(prof, 1, grid.dx)
    state = ev.GridState(0.0, None, None, B, D)

    def energy(s):
        return st.tree_sum(s.B ** 2 + s.D ** 2) * grid.dx ** 3

    e0 = energy(state)
    out = ev.evolve(state, 2.0 * grid.L, em.EmModel.maxwell(), grid,
                    ev.StepperConfig(cfl=0.2))
    assert abs(energy(out) - e0) / e0 < 1e-6


def test_evolve_t0_returns_initial():
    grid = ev.Grid(16, 4.0)
    state = flat_state(16)
    state.B[0] += 0.25
    out = ev.evolve(state, 0.0, em.EmModel.maxwell(), grid,
                    ev.StepperConfig())
    assert out.t == 0.0
    assert np.array_equal(out.B, state.B)


def test_nan_detected():
    grid = ev.Grid(16, 4.0)
    state = flat_state(16)
    state.B[0, 3, 4, 5] = np.nan
    with pytest.raises(ev.NanDetected):
        ev.rk4_step(state, 0.1, grid, em.EmModel.maxwell(), 0.0,
                    ev.StepperConfig())


def test_metric_degenerate():
    grid = ev.Grid(16, 4.0)
    state = flat_state(16)
    i00 = tc.SYM_IDX.index((0, 0))
    state.h1[i00] -= 9.5  # g_00 = -10.5, so |g^00| drops below 0.1
    with pytest.raises((ev.MetricDegenerate, tc.NonLorentzian)):
        ev.metric_rhs(state, grid, em.EmModel.maxwell(), 0.0)
