import numpy as np
import pytest

from gravem import tensor_core as tc
from gravem import em_model as em


FLAT = tc.assemble_metric(tc.SymTensor4.zero(), tc.SymTensor4.zero())


def random_metric(rng, scale=0.1):
    a = rng.uniform(-scale, scale, (4, 4))
    return tc.assemble_metric(tc.SymTensor4.from_matrix(0.5 * (a + a.T)),
                              tc.SymTensor4.zero())


def random_form(rng, scale):
    a = rng.uniform(-scale, scale, (4, 4))
    return tc.TwoForm.from_matrix(0.5 * (a - a.T))


def electric_form(e):
    f = np.zeros((4, 4))
    f[1, 0] = e
    f[0, 1] = -e
    return tc.TwoForm.from_matrix(f)


def test_lagrangian_values():
    assert em.lagrangian(em.EmModel.maxwell(), 2.0, 7.0) == pytest.approx(-1.0)
    assert em.lagrangian(em.EmModel.born_infeld(1.0), 0.0, 0.0) == pytest.approx(0.0)
    assert em.lagrangian(em.EmModel.born_infeld(1.0), 3.0, 0.0) == pytest.approx(1.0 - 2.0)


def test_lagrangian_normalization():
    for model in (em.EmModel.maxwell(), em.EmModel.born_infeld(0.7),
                  em.EmModel.born_infeld(2.0)):
        lag, l1, l2, _, _, _ = model.partials(0.0, 0.0)
        assert lag == pytest.approx(0.0)
        assert l1 == pytest.approx(-0.5)
        assert l2 == pytest.approx(0.0)


def test_mbi_domain_guard():
    with pytest.raises(em.DomainViolation):
        em.EmModel.born_infeld(1.0).partials(-1.0, 0.0)


def test_mbi_partials_against_fd():
    model = em.EmModel.born_infeld(1.3)
    rng = np.random.default_rng(0)
    s = 1e-5
    for _ in range(50):
        f1, f2 = rng.uniform(-0.1, 0.1, 2)
        lag, l1, l2, l11, l12, l22 = model.partials(f1, f2)
        fd1 = (model.partials(f1 + s, f2)[0] - model.partials(f1 - s, f2)[0]) / (2 * s)
        fd2 = (model.partials(f1, f2 + s)[0] - model.partials(f1, f2 - s)[0]) / (2 * s)
        assert l1 == pytest.approx(fd1, abs=1e-8)
        assert l2 == pytest.approx(fd2, abs=1e-8)
        fd11 = (model.partials(f1 + s, f2)[1] - model.partials(f1 - s, f2)[1]) / (2 * s)
        fd12 = (model.partials(f1, f2 + s)[1] - model.partials(f1, f2 - s)[1]) / (2 * s)
        fd22 = (model.partials(f1, f2 + s)[2] - model.partials(f1, f2 - s)[2]) / (2 * s)
        assert l11 == pytest.approx(fd11, abs=1e-7)
        assert l12 == pytest.approx(fd12, abs=1e-7)
        assert l22 == pytest.approx(fd22, abs=1e-7)


def test_maxwell_tensor_is_flat_dual_for_maxwell():
    rng = np.random.default_rng(1)
    model = em.EmModel.maxwell()
    for _ in range(100):
        f = random_form(rng, 0.7)
        m = em.maxwell_tensor(model, FLAT, f)
        want = tc.hodge_dual(FLAT, f)
        assert np.max(np.abs(m.mat() - want.mat())) <= 1e-13
    assert np.max(np.abs(em.maxwell_tensor(model, FLAT, tc.TwoForm.zero()).mat())) == 0.0


def test_maxwell_tensor_mbi_cubic_deviation():
    model = em.EmModel.born_infeld(1.0)
    rng = np.random.default_rng(2)
    f = random_form(rng, 1.0)
    lams = np.array([0.1, 0.05, 0.025, 0.0125, 0.00625])
    devs = []
    for lam in lams:
        fl = tc.TwoForm(f.c * lam)
        m = em.maxwell_tensor(model, FLAT, fl)
        devs.append(np.max(np.abs(m.mat() - tc.hodge_dual(FLAT, fl).mat())))
    slope = np.polyfit(np.log(lams), np.log(devs), 1)[0]
    assert slope == pytest.approx(3.0, abs=0.2)


def brute_n_sharp(model, ms, f):
    """Oracle: N^# from a central-difference Hessian of the Lagrangian plus
    the topological epsilon term, using only model.partials order <= 1."""
    g_inv = ms.g_inv.mat()
    sd = ms.sqrt_det_g
    f_low = f.mat()
    step = 1e-4

    def lag_of(fm):
        f1, f2 = tc.invariants_raw(g_inv, sd, fm)
        return model.partials(f1, f2)[0]

    hess = np.zeros((4, 4, 4, 4))
    for (a, b) in tc.ASYM_IDX:
        for (c, d) in tc.ASYM_IDX:
            b1 = np.zeros((4, 4)); b1[a, b] = step; b1[b, a] = -step
            b2 = np.zeros((4, 4)); b2[c, d] = step; b2[d, c] = -step
            val = (lag_of(f_low + b1 + b2) - lag_of(f_low + b1 - b2)
                   - lag_of(f_low - b1 + b2) + lag_of(f_low - b1 - b2)) / (4 * step * step)
            # pair-moving convention: both antisymmetric pairs vary together
            for (i, j, s1) in ((a, b, 1.0), (b, a, -1.0)):
                for (k, l, s2) in ((c, d, 1.0), (d, c, -1.0)):
                    hess[i, j, k, l] = s1 * s2 * val
    f1, f2 = tc.invariants(ms, f)
    l2 = model.partials(f1, f2)[2]
    eps_sharp = -tc.LEVI4 / sd
    return -0.5 * hess + 0.5 * l2 * eps_sharp


def test_big_n_symmetries_and_hessian():
    rng = np.random.default_rng(3)
    worst = 0.0
    for model in (em.EmModel.maxwell(), em.EmModel.born_infeld(1.0)):
        for _ in range(100):
            ms = random_metric(rng)
            f = random_form(rng, 0.3)
            n = em.big_n(model, ms, f).N_sharp
            worst = max(worst,
                        np.max(np.abs(n + np.transpose(n, (1, 0, 2, 3)))),
                        np.max(np.abs(n + np.transpose(n, (0, 1, 3, 2)))),
                        np.max(np.abs(n - np.transpose(n, (2, 3, 0, 1)))))
    assert worst <= 1e-13

    # Hessian relation with an FD oracle (sign-checked via the variational def)
    for model in (em.EmModel.born_infeld(1.0),
                  em.EmModel.polynomial({(1, 0): -0.5, (2, 0): 0.2,
                                         (1, 1): -0.1, (0, 2): 0.15})):
        ms = random_metric(rng, 0.05)
        f = random_form(rng, 0.2)
        n = em.big_n(model, ms, f).N_sharp
        oracle = brute_n_sharp(model, ms, f)
        assert np.max(np.abs(n - oracle)) <= 1e-6


def test_big_n_hessian_residual_scales_quadratically():
    model = em.EmModel.born_infeld(1.0)
    rng = np.random.default_rng(4)
    ms = random_metric(rng, 0.05)
    f = random_form(rng, 0.2)
    n = em.big_n(model, ms, f).N_sharp
    g_inv = ms.g_inv.mat()
    sd = ms.sqrt_det_g
    f_low = f.mat()

    def lag_of(fm):
        f1, f2 = tc.invariants_raw(g_inv, sd, fm)
        return model.partials(f1, f2)[0]

    def resid_at(step):
        worst = 0.0
        for (a, b) in [(0, 1), (1, 2)]:
            for (c, d) in [(0, 1), (2, 3)]:
                b1 = np.zeros((4, 4)); b1[a, b] = step; b1[b, a] = -step
                b2 = np.zeros((4, 4)); b2[c, d] = step; b2[d, c] = -step
                val = (lag_of(f_low + b1 + b2) - lag_of(f_low + b1 - b2)
                       - lag_of(f_low - b1 + b2) + lag_of(f_low - b1 - b2)) / (4 * step * step)
                f1, f2 = tc.invariants(ms, f)
                l2 = model.partials(f1, f2)[2]
                want = -2.0 * (n[a, b, c, d] - 0.5 * l2 * (-tc.LEVI4[a, b, c, d] / sd))
                worst = max(worst, abs(val - want))
        return worst

    steps = np.array([0.2, 0.1, 0.05, 0.025])
    resids = np.array([resid_at(s) for s in steps])
    slope = np.polyfit(np.log(steps), np.log(resids), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.4)


def test_big_n_maxwell_flat_values():
    n = em.big_n(em.EmModel.maxwell(), FLAT, tc.TwoForm.zero())
    assert n.N_sharp[0, 1, 0, 1] == pytest.approx(-0.5)  # (1/2) m^00 m^11
    assert np.max(np.abs(n.N_triangle)) <= 1e-15


def test_n_triangle_quadratic_order():
    model = em.EmModel.born_infeld(1.0)
    rng = np.random.default_rng(5)
    a = rng.uniform(-1, 1, (4, 4))
    h = 0.5 * (a + a.T)
    f = random_form(rng, 1.0)
    lams = 0.2 * 0.5 ** np.arange(6)
    norms = []
    for lam in lams:
        ms = tc.assemble_metric(tc.SymTensor4.from_matrix(lam * h),
                                tc.SymTensor4.zero())
        tri = em.big_n(model, ms, tc.TwoForm(lam * f.c)).N_triangle
        norms.append(np.max(np.abs(tri)))
    slope = np.polyfit(np.log(lams), np.log(norms), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def brute_stress(model, ms, f):
    g_inv = ms.g_inv.mat()
    g = ms.g.mat()
    fm = f.mat()
    f1, f2 = tc.invariants(ms, f)
    lag, l1, l2 = model.partials(f1, f2)[:3]
    t = np.zeros((4, 4))
    for mu in range(4):
        for nu in range(4):
            acc = 0.0
            for k in range(4):
                for l in range(4):
                    acc += g_inv[k, l] * fm[mu, k] * fm[nu, l]
            t[mu, nu] = -2.0 * l1 * acc - f2 * l2 * g[mu, nu] + g[mu, nu] * lag
    return t


def test_stress_energy_examples():
    model = em.EmModel.maxwell()
    assert np.max(np.abs(em.stress_energy(model, FLAT, tc.TwoForm.zero()).mat())) == 0.0
    e = 0.6
    t = em.stress_energy(model, FLAT, electric_form(e)).mat()
    assert t[0, 0] == pytest.approx(e * e / 2)

    rng = np.random.default_rng(6)
    for _ in range(200):
        ms = random_metric(rng)
        f = random_form(rng, 0.5)
        t = em.stress_energy(model, ms, f).mat()
        assert np.max(np.abs(t - brute_stress(model, ms, f))) <= 1e-12
        trace = np.einsum("kl,kl", ms.g_inv.mat(), t)
        assert abs(trace) <= 1e-12

    # MBI against the same brute-force oracle
    model = em.EmModel.born_infeld(1.0)
    for _ in range(100):
        ms = random_metric(rng)
        f = random_form(rng, 0.3)
        t = em.stress_energy(model, ms, f).mat()
        assert np.max(np.abs(t - brute_stress(model, ms, f))) <= 1e-12


def test_dec_check():
    rng = np.random.default_rng(7)
    em.dec_check(em.EmModel.maxwell(), FLAT, random_form(rng, 0.5), trials=500)
    em.dec_check(em.EmModel.born_infeld(1.0), FLAT, random_form(rng, 0.4), trials=500)
    bad = em.EmModel.polynomial({(1, 0): 0.5})
    with pytest.raises(em.DecViolation):
        em.dec_check(bad, FLAT, random_form(rng, 0.1), trials=10)


def test_field_split_roundtrip():
    rng = np.random.default_rng(8)
    f = np.zeros((4, 4))
    f[2, 3] = 0.9; f[3, 2] = -0.9
    s = em.field_split(FLAT, tc.TwoForm.from_matrix(f), tc.TwoForm.zero())
    assert np.allclose(s.B, [0.9, 0, 0])
    assert np.max(np.abs(s.E)) == 0.0

    for _ in range(100):
        fr = random_form(rng, 1.0)
        mr = random_form(rng, 1.0)
        s = em.field_split(FLAT, fr, mr)
        f2, m2 = em.recompose(s)
        assert np.max(np.abs(f2 - fr.mat())) == 0.0
        assert np.max(np.abs(m2 - mr.mat())) == 0.0


def test_field_split_maxwell_flat_d_equals_e():
    rng = np.random.default_rng(9)
    model = em.EmModel.maxwell()
    for _ in range(50):
        f = random_form(rng, 0.8)
        m = em.maxwell_tensor(model, FLAT, f)
        s = em.field_split(FLAT, f, m)
        assert np.max(np.abs(s.D - s.E)) <= 1e-13
        assert np.max(np.abs(s.H - s.B)) <= 1e-13


def test_constitutive_invert():
    rng = np.random.default_rng(10)
    # Maxwell flat: identity map
    b = rng.uniform(-0.5, 0.5, 3)
    d = rng.uniform(-0.5, 0.5, 3)
    e, h = em.constitutive_invert(em.EmModel.maxwell(), FLAT, b, d)
    assert np.max(np.abs(e - d)) <= 1e-12
    assert np.max(np.abs(h - b)) <= 1e-12

    # MBI round trip through the forward map
    model = em.EmModel.born_infeld(1.0)
    for ms in (FLAT, random_metric(rng, 0.05)):
        for _ in range(20):
            e0 = rng.uniform(-0.2, 0.2, 3)
            b0 = rng.uniform(-0.2, 0.2, 3)
            f = tc.TwoForm.from_matrix(em.join_two_form(e0, b0))
            m = em.maxwell_tensor(model, ms, f)
            s = em.field_split(ms, f, m)
            e, h = em.constitutive_invert(model, ms, s.B, s.D)
            assert np.max(np.abs(e - e0)) <= 1e-10
            assert np.max(np.abs(h - s.H)) <= 1e-10

    # far outside the admissible domain the inversion must fail loudly
    with pytest.raises((em.NoConvergence, em.DomainViolation)):
        em.constitutive_invert(model, FLAT, np.zeros(3), np.array([5.0, 0, 0]))
