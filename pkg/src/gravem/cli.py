"""Batch front end: config-driven runs streaming diagnostics to CSV,
verification suites, and decay-exponent fits.

Config files are flat ``key = value`` text with ``#`` comments.  Snapshots
are little-endian float64 blobs behind a short plain-text header.  The
environment variable GRAVEM_THREADS caps the BLAS/OpenMP worker count.
"""

import argparse
import os
import sys

import numpy as np

from . import diagnostics as dg
from . import em_model as em
from . import evolution as ev
from . import initial_data as idt
from . import null_frame as nf
from . import stencil as st
from . import tensor_core as tc


class ConfigError(Exception):
    pass


CSV_HEADER = ("t,energy_k0,energy_k1,energy_k2,gauge_sup,gauge_l2,"
              "divB_l2,divD_l2,alphabar_sup,alpha_sup,rho_sup,sigma_sup")

SNAP_MAGIC = "gravem-snapshot 1"

_DEFAULTS = {
    "cfl": "0.25",
    "dissipation_eps": "0.0",
    "output.every": "1",
    "model": "maxwell",
    "beta": "1.0",
    "weights.gamma": "0.25",
    "weights.mu": "0.125",
    "weights.delta": "0.1",
    "weights.gamma_prime": "0.1",
    "weights.mu_prime": "0.2",
    "data.amplitude": "0.0",
    "data.width": "1.0",
    "data.mass": "0.0",
    "seed": "0",
}

_REQUIRED = ("grid.n", "grid.L", "t_final", "output.path", "data.family")

_ALL_KEYS = set(_DEFAULTS) | set(_REQUIRED)

_FAMILIES = ("trivial", "em_pulse", "tail_only", "metric_bump")


class RunConfig:
    """Validated run parameters; see parse_config."""

    def __init__(self, values):
        self.n = values["grid.n"]
        self.L = values["grid.L"]
        self.cfl = values["cfl"]
        self.dissipation_eps = values["dissipation_eps"]
        self.t_final = values["t_final"]
        self.output_path = values["output.path"]
        self.output_every = values["output.every"]
        self.model = values["model"]
        self.beta = values["beta"]
        self.family = values["data.family"]
        self.amplitude = values["data.amplitude"]
        self.width = values["data.width"]
        self.mass = values["data.mass"]
        self.seed = values["seed"]
        self.spec = dg.WeightSpec(
            gamma=values["weights.gamma"], mu=values["weights.mu"],
            delta=values["weights.delta"],
            gamma_prime=values["weights.gamma_prime"],
            mu_prime=values["weights.mu_prime"])

    def model_obj(self):
        if self.model == "maxwell":
            return em.EmModel.maxwell()
        return em.EmModel.born_infeld(self.beta)


def parse_config(path):
    """Flat key = value parser with line-numbered range validation."""
    raw = {}
    lines = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError("line %d: expected key = value" % lineno)
            key, val = (part.strip() for part in body.split("=", 1))
            if key not in _ALL_KEYS:
                raise ConfigError("line %d: unknown key %r" % (lineno, key))
            if key in raw:
                raise ConfigError("line %d: duplicate key %r" % (lineno, key))
            raw[key] = val
            lines[key] = lineno

    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError("missing required key %r" % key)
    for key, val in _DEFAULTS.items():
        raw.setdefault(key, val)
        lines.setdefault(key, 0)

    def conv(key, kind):
        try:
            return kind(raw[key])
        except ValueError:
            raise ConfigError("line %d: key %r: cannot parse %r as %s"
                              % (lines[key], key, raw[key], kind.__name__))

    values = {
        "grid.n": conv("grid.n", int),
        "grid.L": conv("grid.L", float),
        "cfl": conv("cfl", float),
        "dissipation_eps": conv("dissipation_eps", float),
        "t_final": conv("t_final", float),
        "output.path": raw["output.path"],
        "output.every": conv("output.every", int),
        "model": raw["model"],
        "beta": conv("beta", float),
        "weights.gamma": conv("weights.gamma", float),
        "weights.mu": conv("weights.mu", float),
        "weights.delta": conv("weights.delta", float),
        "weights.gamma_prime": conv("weights.gamma_prime", float),
        "weights.mu_prime": conv("weights.mu_prime", float),
        "data.family": raw["data.family"],
        "data.amplitude": conv("data.amplitude", float),
        "data.width": conv("data.width", float),
        "data.mass": conv("data.mass", float),
        "seed": conv("seed", int),
    }

    def bad(key, why):
        raise ConfigError("line %d: key %r: %s" % (lines[key], key, why))

    if values["grid.n"] < 16 or values["grid.n"] % 8:
        bad("grid.n", "must be >= 16 and divisible by 8")
    if values["grid.L"] <= 0:
        bad("grid.L", "must be positive")
    if not 0.0 < values["cfl"] <= 1.0:
        bad("cfl", "must lie in (0, 1]")
    if values["dissipation_eps"] < 0:
        bad("dissipation_eps", "must be nonnegative")
    if values["t_final"] < 0:
        bad("t_final", "must be nonnegative")
    if values["output.every"] < 1:
        bad("output.every", "must be >= 1")
    if values["model"] not in ("maxwell", "born_infeld"):
        bad("model", "must be maxwell or born_infeld")
    if values["beta"] <= 0:
        bad("beta", "must be positive")
    if values["data.family"] not in _FAMILIES:
        bad("data.family", "must be one of %s" % (_FAMILIES,))
    if values["data.amplitude"] < 0:
        bad("data.amplitude", "must be nonnegative")
    if values["data.width"] <= 0:
        bad("data.width", "must be positive")
    if values["data.mass"] < 0:
        bad("data.mass", "must be nonnegative")
    try:
        return RunConfig(values)
    except ValueError as exc:
        raise ConfigError("weight exponents: %s" % exc)


def apply_thread_cap():
    val = os.environ.get("GRAVEM_THREADS")
    if not val:
        return
    try:
        cap = max(1, int(val))
    except ValueError:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(cap))


# ---------------------------------------------------------------------------
# snapshots


def write_snapshot(path, state, n, L):
    fields = ["B", "D"] if state.h1 is None else ["h1", "pi", "B", "D"]
    with open(path, "wb") as fh:
        head = "%s\nn %d\nL %.17g\nt %.17g\nfields %s\nend\n" % (
            SNAP_MAGIC, n, L, state.t, " ".join(fields))
        fh.write(head.encode("ascii"))
        for name in fields:
            fh.write(np.ascontiguousarray(
                getattr(state, name)).astype("<f8").tobytes())


def read_snapshot(path):
    """Returns (n, L, t, {field: array})."""
    with open(path, "rb") as fh:
        data = fh.read()
    end = data.index(b"end\n") + 4
    head = data[:end].decode("ascii").splitlines()
    if head[0] != SNAP_MAGIC:
        raise ValueError("not a snapshot file: %r" % path)
    meta = dict(line.split(None, 1) for line in head[1:-1])
    n = int(meta["n"])
    L = float(meta["L"])
    t = float(meta["t"])
    names = meta["fields"].split()
    shapes = {"h1": (10, n, n, n), "pi": (10, n, n, n),
              "B": (3, n, n, n), "D": (3, n, n, n)}
    out = {}
    offset = end
    for name in names:
        shape = shapes[name]
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        out[name] = arr.reshape(shape).astype(np.float64)
        offset += count * 8
    return n, L, t, out


# ---------------------------------------------------------------------------
# simulate


def _csv_row(state, grid, cfg):
    energies = [dg.energy_norm(state, grid, k, cfg.spec, model=None,
                               mass=cfg.mass) for k in (0, 1, 2)]
    gam = ev.gauge_of_state(state, grid, cfg.mass)
    gmag = np.sqrt(np.einsum("m...,m...->...", gam, gam))
    gauge_sup = float(np.max(gmag))
    gauge_l2 = float(st.l2_norm(gmag, grid.dx))
    div_b = float(st.l2_norm(st.divergence(state.B, grid.dx), grid.dx))
    div_d = float(st.l2_norm(st.divergence(state.D, grid.dx), grid.dx))
    sups = dg.null_component_sups(state, grid, q0=0.0)
    vals = energies + [gauge_sup, gauge_l2, div_b, div_d,
                       sups["alpha_bar"], sups["alpha"], sups["rho"],
                       sups["sigma"]]
    return "%.17g," % state.t + ",".join("%.17g" % v for v in vals)


def cmd_simulate(config_path):
    try:
        cfg = parse_config(config_path)
    except (OSError, ConfigError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    apply_thread_cap()
    model = cfg.model_obj()
    try:
        data = idt.make_family(cfg.family, cfg.n, cfg.L,
                               amplitude=cfg.amplitude, width=cfg.width,
                               mass=cfg.mass)
        rd = idt.build_reduced(data, model=model)
    except (ValueError, idt.FalloffViolation, idt.LapseCollapse) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2

    grid = ev.Grid(cfg.n, cfg.L)
    stepper = ev.StepperConfig(cfl=cfg.cfl,
                               dissipation_eps=cfg.dissipation_eps)
    base, _ = os.path.splitext(cfg.output_path)
    counter = {"rows": 0}

    try:
        with open(cfg.output_path, "w") as fh:
            fh.write(CSV_HEADER + "\n")

            def sink(state, step):
                fh.write(_csv_row(state, grid, cfg) + "\n")
                write_snapshot("%s_%06d.snap" % (base, step), state,
                               cfg.n, cfg.L)
                counter["rows"] += 1

            ev.evolve(rd, cfg.t_final, model, grid, stepper, mass=cfg.mass,
                      sink=sink, sink_every=cfg.output_every)
    except (ev.NanDetected, ev.MetricDegenerate, tc.NonLorentzian,
            em.NoConvergence, em.DomainViolation) as exc:
        print("runtime abort after %d output rows: %s"
              % (counter["rows"], exc), file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# verify suites


def _suite_identities(trials, rng, report):
    worst = 0.0
    for _ in range(trials):
        h = rng.uniform(-0.1, 0.1, (4, 4))
        ms = tc.assemble_metric(
            tc.SymTensor4.from_matrix(0.5 * (h + h.T)), tc.SymTensor4.zero())
        f = rng.uniform(-0.5, 0.5, (4, 4))
        f = tc.TwoForm.from_matrix(0.5 * (f - f.T))
        res = tc.identity_suite(ms, f, raise_on_fail=False)
        worst = max(worst,
                    res["pfaffian"], res["cross_contraction"],
                    res["double_dual"])
        if res["dF1_partial"] > 1e-7 or res["dF2_partial"] > 1e-7:
            report("FAIL identities fd_partials %.3e"
                   % max(res["dF1_partial"], res["dF2_partial"]))
            return False
    ok = worst <= 1e-11
    report("%s identities algebraic max=%.3e (%d trials)"
           % ("PASS" if ok else "FAIL", worst, trials))
    return ok


def _suite_stress(trials, rng, report):
    ok = True
    for model, amp, tol in ((em.EmModel.maxwell(), 0.05, 1e-11),
                            (em.EmModel.born_infeld(1.0), 0.02, 1e-10)):
        worst = 0.0
        for _ in range(trials):
            jet = dg.random_eov_jet(model, rng, f_amp=amp)
            worst = max(worst, dg.stress_divergence_jet_check(model, jet))
        good = worst <= tol
        ok = ok and good
        report("%s stress %s max=%.3e (%d trials)"
               % ("PASS" if good else "FAIL", model.kind, worst, trials))
    return ok


def _suite_commutation(trials, rng, report):
    def scalar(t, x):
        return np.exp(-(x[0] ** 2 + x[1] ** 2 + x[2] ** 2) / 4.0) \
            * np.cos(0.7 * t + 0.3 * x[0])

    def two_form(t, x):
        f = np.zeros((4, 4) + np.shape(x[0]))
        bump = np.exp(-((x[0] - 0.3 * t) ** 2 + x[1] ** 2 + x[2] ** 2) / 4.0)
        f[1, 2] = bump
        f[2, 1] = -bump
        f[0, 3] = 0.5 * bump
        f[3, 0] = -0.5 * bump
        return f

    x0 = np.array([0.8, -0.4, 0.6])
    steps = (0.04, 0.02)
    rep = nf.commutation_checks(nf.standard_killing_set(), scalar, two_form,
                                0.5, x0, steps)
    ok = True
    for (zname, kind), resids in rep.items():
        if resids[0] <= 1e-13:
            continue
        order = np.log(resids[0] / max(resids[1], 1e-300)) / np.log(2.0)
        good = order > 1.5 or resids[1] <= 1e-10
        ok = ok and good
        if not good:
            report("FAIL commutation %s %s order=%.2f" % (zname, kind, order))
    report("%s commutation (%d generators x 2 identities)"
           % ("PASS" if ok else "FAIL", 11))
    return ok


def _suite_constraints(trials, rng, report):
    model = em.EmModel.maxwell()
    divs = []
    for n in (24, 32):
        data = idt.make_family("em_pulse", n, 8.0, amplitude=1e-3, width=1.2)
        rd = idt.build_reduced(data, model=model)
        cons = idt.em_constraints_t0(rd)
        divs.append(max(cons["divB_l2"], cons["divD_l2"]))
    data = idt.make_family("em_pulse", 32, 8.0, amplitude=1e-3, width=1.2)
    rd = idt.build_reduced(data, model=model)
    _, gauge_sup, _ = idt.gauge_residual_t0(rd)
    gauss, codazzi = idt.gravitational_constraint_residual(rd, data, model)
    checks = [
        ("gauge_sup", gauge_sup, 1e-4),
        ("div_refinement_ratio", divs[1] / divs[0], 0.5),
        ("gauss_sup", float(np.max(np.abs(gauss))), 1e-4),
        ("codazzi_sup", float(np.max(np.abs(codazzi))), 1e-4),
    ]
    ok = True
    for name, val, tol in checks:
        good = val <= tol
        ok = ok and good
        report("%s constraints %s %.3e (tol %.0e)"
               % ("PASS" if good else "FAIL", name, val, tol))
    return ok


def _suite_null(trials, rng, report):
    errs = []
    for n in (32, 48):
        grid = ev.Grid(n, 8.0)
        tau = grid.dx
        hist = []
        for t in (1.0 - tau, 1.0, 1.0 + tau):
            f = np.exp(-((grid.x - t + 2.0)) ** 2)
            e = np.zeros((3,) + f.shape)
            b = np.zeros_like(e)
            e[1] = f
            b[2] = f
            hist.append(ev.GridState(float(t), None, None, b, e))
        res = dg.eov_null_residual(hist, grid, r_min=1.0)
        errs.append(max(res["sigma"], res["rho"]))
    order = np.log(errs[0] / errs[1]) / np.log(48.0 / 32.0)
    ok = order > 1.5
    report("%s null transport order=%.2f" % ("PASS" if ok else "FAIL", order))
    return ok


_SUITES = {
    "identities": _suite_identities,
    "stress": _suite_stress,
    "commutation": _suite_commutation,
    "constraints": _suite_constraints,
    "null": _suite_null,
}


def cmd_verify(suite, trials=200):
    if suite not in _SUITES:
        print("unknown suite %r (choose from %s)"
              % (suite, sorted(_SUITES)), file=sys.stderr)
        return 2
    apply_thread_cap()
    rng = np.random.default_rng(0)

    def report(line):
        print(line)

    ok = _SUITES[suite](trials, rng, report)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# decay fits


def cmd_decay_fit(csv_path, probe, window):
    try:
        table = np.genfromtxt(csv_path, delimiter=",", names=True)
    except (OSError, ValueError) as exc:
        print("csv error: %s" % exc, file=sys.stderr)
        return 2
    if table.dtype.names is None or "t" not in table.dtype.names:
        print("csv error: missing header/t column", file=sys.stderr)
        return 2
    col = probe if probe in table.dtype.names else probe + "_sup"
    if col not in table.dtype.names:
        print("csv error: no column for probe %r (have %s)"
              % (probe, list(table.dtype.names)), file=sys.stderr)
        return 2
    ts = np.atleast_1d(table["t"])
    vals = np.atleast_1d(table[col])
    if np.any(~np.isfinite(ts)) or np.any(~np.isfinite(vals)):
        print("csv error: non-numeric entries", file=sys.stderr)
        return 2
    try:
        expo, r2 = dg.fit_loglog(ts, vals, window)
    except dg.WindowTooShort as exc:
        print("window too short: %s" % exc, file=sys.stderr)
        return 1
    print("probe=%s window=[%g,%g] exponent=%.6f r2=%.6f"
          % (probe, window[0], window[1], expo, r2))
    return 0


# ---------------------------------------------------------------------------
# entry point


def _window_arg(text):
    try:
        a, b = (float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected a,b") from None
    return (a, b)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="gravem")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a config and stream CSV")
    p_sim.add_argument("config")

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite")
    p_ver.add_argument("--trials", type=int, default=200)

    p_fit = sub.add_parser("decay-fit", help="log-log fit of a CSV column")
    p_fit.add_argument("csv")
    p_fit.add_argument("--probe", required=True)
    p_fit.add_argument("--window", type=_window_arg, required=True)

    args = parser.parse_args(argv)
    if args.command == "simulate":
        return cmd_simulate(args.config)
    if args.command == "verify":
        return cmd_verify(args.suite, args.trials)
    return cmd_decay_fit(args.csv, args.probe, args.window)


if __name__ == "__main__":
    sys.exit(main())
