import numpy as np
import pytest

from gravem import tensor_core as tc
from gravem import null_frame as nf


def minkdot(a, b):
    return a @ tc.MINK @ b


def random_points(rng, n):
    pts = rng.uniform(-3, 3, (n, 3))
    return pts[np.linalg.norm(pts, axis=1) > 0.3]


def random_form(rng, scale=1.0):
    a = rng.uniform(-scale, scale, (4, 4))
    return tc.TwoForm.from_matrix(0.5 * (a - a.T))


def test_frame_at_examples_and_invariants():
    fr = nf.frame_at(np.array([1.0, 0, 0]))
    assert np.allclose(fr.uL, [1, -1, 0, 0])
    assert np.allclose(fr.L, [1, 1, 0, 0])

    rng = np.random.default_rng(0)
    for p in random_points(rng, 500):
        fr = nf.frame_at(p)
        omega = p / np.linalg.norm(p)
        assert abs(minkdot(fr.uL, fr.uL)) <= 1e-14
        assert abs(minkdot(fr.L, fr.L)) <= 1e-14
        assert minkdot(fr.uL, fr.L) == pytest.approx(-2.0, abs=1e-14)
        for e in (fr.e1, fr.e2):
            assert e[0] == 0.0
            assert abs(e[1:] @ omega) <= 1e-14
            assert minkdot(e, e) == pytest.approx(1.0, abs=1e-14)
            assert abs(minkdot(e, fr.uL)) <= 1e-14
            assert abs(minkdot(e, fr.L)) <= 1e-14
        assert abs(minkdot(fr.e1, fr.e2)) <= 1e-14

    with pytest.raises(nf.TooCloseToAxisOrigin):
        nf.frame_at(np.zeros(3))


def test_null_decompose_radial_electric():
    e = 0.7
    x = np.array([2.0, 0, 0])
    f = np.zeros((4, 4))
    f[1, 0] = e
    f[0, 1] = -e
    dec = nf.null_decompose(tc.TwoForm.from_matrix(f), nf.frame_at(x))
    assert np.max(np.abs(dec.alpha_bar)) <= 1e-15
    assert np.max(np.abs(dec.alpha)) <= 1e-15
    assert dec.rho == pytest.approx(-e)
    assert dec.sigma == pytest.approx(0.0, abs=1e-15)


def test_null_recompose_roundtrip():
    rng = np.random.default_rng(1)
    for p in random_points(rng, 100):
        fr = nf.frame_at(p)
        f = random_form(rng)
        dec = nf.null_decompose(f, fr)
        back = nf.recompose_two_form(dec, fr)
        assert np.max(np.abs(back.mat() - f.mat())) <= 1e-13


def test_dual_null_component_relations():
    flat = tc.assemble_metric(tc.SymTensor4.zero(), tc.SymTensor4.zero())
    rng = np.random.default_rng(2)
    for p in random_points(rng, 100):
        fr = nf.frame_at(p)
        eps = nf.sphere_area_form(fr)
        eps_ab = np.array([[fr.e1 @ eps @ fr.e1, fr.e1 @ eps @ fr.e2],
                           [fr.e2 @ eps @ fr.e1, fr.e2 @ eps @ fr.e2]])
        f = random_form(rng)
        dec = nf.null_decompose(f, fr)
        dd = nf.null_decompose(tc.hodge_dual(flat, f, which="minkowski"), fr)
        assert dd.rho == pytest.approx(dec.sigma, abs=1e-13)
        assert dd.sigma == pytest.approx(-dec.rho, abs=1e-13)
        want_abar = -np.einsum("b,ba->a", dec.alpha_bar, eps_ab)
        want_a = np.einsum("b,ba->a", dec.alpha, eps_ab)
        assert np.max(np.abs(dd.alpha_bar - want_abar)) <= 1e-13
        assert np.max(np.abs(dd.alpha - want_a)) <= 1e-13


def test_seminorms():
    rng = np.random.default_rng(3)
    fr = nf.frame_at(np.array([1.0, 1.0, 0.3]))
    assert nf.seminorm(tc.MINK, "L", "L", fr) <= 1e-14
    fr2 = nf.frame_at(np.array([2.0, 0, 0]))
    p = np.diag([1.0, 0, 0, 0])
    val = nf.seminorm(p, "N", "N", fr2)
    assert val >= 1.0  # contains the |uL^0 uL^0 P_00| = 1 term
    for _ in range(100):
        t = rng.uniform(-1, 1, (4, 4))
        assert nf.seminorm(t, "L", "T", fr) <= nf.seminorm(t, "N", "N", fr) + 1e-15


def test_null_forms_basics():
    fr = nf.frame_at(np.array([0.5, -1.0, 2.0]))
    l_low = tc.MINK @ fr.L
    assert abs(nf.q0(l_low, l_low)) <= 1e-14
    rng = np.random.default_rng(4)
    for _ in range(200):
        dpsi = rng.uniform(-1, 1, 4)
        dchi = rng.uniform(-1, 1, 4)
        q = nf.q_munu(dpsi, dchi)
        assert abs(fr.uL @ q @ fr.uL) <= 1e-15


def test_q2h_oracle():
    rng = np.random.default_rng(5)
    m = tc.MINK
    for _ in range(50):
        f = random_form(rng).mat()
        g2 = random_form(rng).mat()
        got = nf.q2h_tensor(f, g2)
        want = np.zeros((4, 4))
        for mu in range(4):
            for nu in range(4):
                acc = 0.0
                for k in range(4):
                    for l in range(4):
                        acc += -2.0 * m[k, l] * f[mu, k] * g2[nu, l]
                dot = 0.0
                for k in range(4):
                    for e in range(4):
                        for l in range(4):
                            for z in range(4):
                                dot += m[k, e] * m[l, z] * f[k, l] * g2[e, z]
                want[mu, nu] = acc + 0.5 * m[mu, nu] * dot
        assert np.max(np.abs(got - want)) <= 1e-13


def test_p_and_q1h_oracles():
    rng = np.random.default_rng(6)
    m = tc.MINK
    dh = rng.uniform(-1, 1, (4, 4, 4))
    dh = 0.5 * (dh + np.transpose(dh, (0, 2, 1)))

    got_p = nf.p_tensor(dh, dh)
    for mu in range(4):
        for nu in range(4):
            tr_mu = sum(m[k, l] * dh[mu, k, l] for k in range(4) for l in range(4))
            tr_nu = sum(m[k, l] * dh[nu, k, l] for k in range(4) for l in range(4))
            full = sum(m[k, a] * m[l, b] * dh[mu, k, l] * dh[nu, a, b]
                       for k in range(4) for l in range(4)
                       for a in range(4) for b in range(4))
            assert got_p[mu, nu] == pytest.approx(0.25 * tr_mu * tr_nu - 0.5 * full,
                                                  abs=1e-12)

    def q_sc(mu, nu, dpsi, dchi):
        return dpsi[mu] * dchi[nu] - dpsi[nu] * dchi[mu]

    got_q = nf.q1h_tensor(dh)
    for mu in range(4):
        for nu in range(4):
            acc = 0.0
            for l in range(4):
                for l2 in range(4):
                    acc += m[l, l2] * nf.q0(dh[:, l, mu], dh[:, l2, nu])
            for k in range(4):
                for k2 in range(4):
                    for l in range(4):
                        for l2 in range(4):
                            mm = m[k, k2] * m[l, l2]
                            if mm == 0.0:
                                continue
                            acc += -mm * q_sc(k, l2, dh[:, l, mu], dh[:, k2, nu])
                            acc += mm * q_sc(mu, k, dh[:, k2, l2], dh[:, l, nu])
                            acc += mm * q_sc(nu, k, dh[:, k2, l2], dh[:, l, mu])
                            acc += 0.5 * mm * q_sc(l2, mu, dh[:, k, k2], dh[:, l, nu])
                            acc += 0.5 * mm * q_sc(l2, nu, dh[:, k, k2], dh[:, l, mu])
            assert got_q[mu, nu] == pytest.approx(acc, abs=1e-12)


def test_em_vector_null_forms_oracle():
    rng = np.random.default_rng(7)
    m = tc.MINK
    h = rng.uniform(-1, 1, (4, 4))
    h = 0.5 * (h + h.T)
    dh = rng.uniform(-1, 1, (4, 4, 4))
    dh = 0.5 * (dh + np.transpose(dh, (0, 2, 1)))
    f = random_form(rng).mat()
    df = rng.uniform(-1, 1, (4, 4, 4))
    df = 0.5 * (df - np.transpose(df, (0, 2, 1)))

    got_p = nf.pf_vector(h, df)
    got_q1 = nf.q1f_vector(h, df)
    got_q2 = nf.q2f_vector(dh, f)
    for n in range(4):
        p = q1 = q2 = 0.0
        for mu in range(4):
            for k in range(4):
                for l in range(4):
                    for a in range(4):
                        for b in range(4):
                            p += m[mu, a] * m[k, b] * m[n, l] * h[a, b] * df[mu, k, l]
        for mu in range(4):
            for k in range(4):
                for l in range(4):
                    for a in range(4):
                        for b in range(4):
                            q1 += m[mu, k] * m[n, a] * m[l, b] * h[a, b] * df[mu, k, l]
                            q2 += m[mu, k] * m[n, a] * m[l, b] * dh[mu, a, b] * f[k, l]
        assert got_p[n] == pytest.approx(p, abs=1e-12)
        assert got_q1[n] == pytest.approx(q1, abs=1e-12)
        assert got_q2[n] == pytest.approx(q2, abs=1e-12)


def test_killing_fields_conformal_relation():
    step = 1e-5
    rng = np.random.default_rng(8)
    for z in nf.standard_killing_set():
        # FD gradient of the lowered coordinate expression
        for _ in range(5):
            t = rng.uniform(-2, 2)
            x = rng.uniform(-2, 2, 3)
            grad = np.zeros((4, 4))
            for mu in range(4):
                dt = step if mu == 0 else 0.0
                dx = np.zeros(3)
                if mu > 0:
                    dx[mu - 1] = step
                zp = tc.MINK @ z.at(t + dt, x + dx)
                zm = tc.MINK @ z.at(t - dt, x - dx)
                grad[mu] = (zp - zm) / (2 * step)
            assert np.max(np.abs(grad - z.c_matrix)) <= 1e-9
            sym = grad + grad.T
            assert np.max(np.abs(sym - z.c_z * tc.MINK)) <= 1e-9


def test_lie_derivative_examples():
    sc = nf.KillingField("scaling")
    tr = nf.KillingField("translation", (1,))

    const_mink = lambda t, x: tc.MINK + np.zeros((4, 4) + np.shape(x)[1:])
    t, x = 0.3, np.array([1.0, -0.5, 0.7])
    out = nf.lie_derivative_Z(const_mink, tr, t, x, 1e-4, rank=2)
    assert np.max(np.abs(out)) <= 1e-10
    out = nf.lie_derivative_Z(const_mink, sc, t, x, 1e-4, rank=2)
    assert np.max(np.abs(out - 2.0 * tc.MINK)) <= 1e-9


def _gauss_scalar(t, x):
    x = np.asarray(x)
    r2 = np.sum(np.asarray(x) ** 2, axis=0)
    return np.exp(-0.4 * r2 - 0.3 * (np.asarray(t) - 0.2) ** 2) * (1.0 + x[0])


def _gauss_two_form(t, x):
    x = np.asarray(x)
    r2 = np.sum(x ** 2, axis=0)
    base = np.exp(-0.35 * r2 - 0.25 * np.asarray(t) ** 2)
    shape = np.shape(base)
    f = np.zeros((4, 4) + shape)
    f[0, 1] = base * (1.0 + 0.3 * x[1])
    f[1, 0] = -f[0, 1]
    f[2, 3] = base * (0.5 - 0.2 * x[0] + 0.1 * np.asarray(t))
    f[3, 2] = -f[2, 3]
    f[1, 2] = base * 0.4 * x[2]
    f[2, 1] = -f[1, 2]
    return f


def test_commutation_checks_converge():
    steps = [0.08, 0.04, 0.02, 0.01]
    zs = [nf.KillingField("translation", (0,)),
          nf.KillingField("lorentz", (1, 2)),
          nf.KillingField("lorentz", (0, 3)),
          nf.KillingField("scaling")]
    rep = nf.commutation_checks(zs, _gauss_scalar, _gauss_two_form,
                                0.4, np.array([0.8, -0.3, 0.5]), steps)
    for (zname, check), resids in rep.items():
        if max(resids) <= 1e-12:
            continue  # operator commutes exactly at the discrete level
        slope = np.polyfit(np.log(steps), np.log(np.maximum(resids, 1e-16)), 1)[0]
        assert slope >= 1.7, (zname, check, resids)
    assert nf.commutation_checks([], _gauss_scalar, _gauss_two_form,
                                 0.0, np.array([1.0, 0, 0]), steps) == {}


def test_rotation_commutes_with_null_decomposition():
    # rotation about the z axis, e1/e2 gauge is equivariant there
    z = nf.KillingField("lorentz", (1, 2))
    x0 = np.array([0.9, 0.4, 0.3])
    t0 = 0.6

    def comp_field(t, x):
        f = _gauss_two_form(t, x)
        fr = nf.frame_at(x)
        dec = nf.null_decompose(tc.TwoForm.from_matrix(f), fr)
        return np.array([dec.alpha_bar[0], dec.alpha_bar[1],
                         dec.alpha[0], dec.alpha[1], dec.rho, dec.sigma])

    resids = []
    steps = [0.04, 0.02, 0.01]
    for step in steps:
        lie_f = nf.lie_derivative_Z(_gauss_two_form, z, t0, x0, step, rank=2)
        dec_lie = nf.null_decompose(tc.TwoForm.from_matrix(lie_f), nf.frame_at(x0))
        got = np.array([dec_lie.alpha_bar[0], dec_lie.alpha_bar[1],
                        dec_lie.alpha[0], dec_lie.alpha[1],
                        dec_lie.rho, dec_lie.sigma])
        want = nf.lie_derivative_Z(comp_field, z, t0, x0, step, rank=0)
        resids.append(np.max(np.abs(got - want)))
    slope = np.polyfit(np.log(steps), np.log(resids), 1)[0]
    assert slope >= 1.7 or max(resids) <= 1e-10


def test_lambda_vector():
    fr = nf.frame_at(np.array([3.0, 0, 0]))
    h0 = tc.SymTensor4.zero()
    assert np.allclose(nf.lambda_vector(h0, fr), fr.L)
    # h with h(L, L) = 4 -> L + uL = (2, 0, 0, 0)
    h = np.zeros((4, 4))
    h[0, 0] = 1.0  # h(L,L) = h_00 L^0 L^0 = 1... scale to 4
    h = 4.0 * h
    lam = nf.lambda_vector(tc.SymTensor4.from_matrix(h), fr)
    hll = fr.L @ h @ fr.L
    assert np.allclose(lam, fr.L + 0.25 * hll * fr.uL)
    rng = np.random.default_rng(9)
    for _ in range(50):
        a = rng.uniform(-0.2, 0.2, (4, 4))
        hs = 0.5 * (a + a.T)
        lam = nf.lambda_vector(hs, fr)
        hll = fr.L @ hs @ fr.L
        # m(Lambda, Lambda) = -h_LL + O(h^2) structure
        assert minkdot(lam, lam) == pytest.approx(
            0.25 * hll * (2 * minkdot(fr.L, fr.uL) + 0.25 * hll * minkdot(fr.uL, fr.uL)))
