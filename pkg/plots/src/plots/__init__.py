"""Post-hoc figure generation from gravem run CSVs.

This package reads only the documented CSV time-series format (header row,
comma separated, a leading ``t`` column) and turns it into matplotlib
figures.  It deliberately has no dependency on the solver package: the CSV
is the interface.

Four figure kinds are supported:

``decay``
    Log-log history of the null-frame sup norms with a least-squares
    exponent fitted over the requested window, plus t^-1 and t^-2
    reference lines.
``energy``
    Weighted energy histories against 1 + t on log-log axes.
``residuals``
    Gauge and divergence residual histories on a semilog axis.
``convergence``
    Running local log-log slope of each decay probe, i.e. the order the
    probe is decaying at as a function of time, with the -1 / -2
    references.
"""

from dataclasses import dataclass

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


KINDS = ("decay", "energy", "residuals", "convergence")

# probe columns shown on decay/convergence figures, in plot order
DECAY_COLUMNS = ("alphabar_sup", "alpha_sup", "rho_sup", "sigma_sup")
ENERGY_COLUMNS = ("energy_k0", "energy_k1", "energy_k2")
RESIDUAL_COLUMNS = ("gauge_sup", "gauge_l2", "divB_l2", "divD_l2")

_REQUIRED = {
    "decay": ("t",) + DECAY_COLUMNS,
    "energy": ("t",) + ENERGY_COLUMNS,
    "residuals": ("t",) + RESIDUAL_COLUMNS,
    "convergence": ("t",) + DECAY_COLUMNS,
}


class PlotError(Exception):
    """Anything that should become a nonzero exit from the CLI."""


class MissingColumns(PlotError):
    pass


class WindowTooShort(PlotError):
    pass


@dataclass
class FigureSpec:
    csv: str
    kind: str
    window: tuple
    out: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotError("unknown kind %r (want one of %s)"
                            % (self.kind, ", ".join(KINDS)))
        w0, w1 = float(self.window[0]), float(self.window[1])
        if not w0 < w1:
            raise PlotError("empty window [%g, %g]" % (w0, w1))
        self.window = (w0, w1)


def fit_loglog(ts, vals, window):
    """Least-squares slope of log(val) vs log(t) over t in [window].

    Drops non-positive samples; raises WindowTooShort below six points.
    Returns (exponent, r_squared).  This is the same ordinary least
    squares fit the solver CLI prints, so annotations agree with it.
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


def load_table(csv_path, required):
    try:
        table = np.genfromtxt(csv_path, delimiter=",", names=True)
    except (OSError, ValueError, IndexError) as exc:
        raise PlotError("csv error: %s" % exc)
    names = table.dtype.names
    if names is None:
        raise MissingColumns("csv error: no header row in %s" % csv_path)
    missing = [c for c in required if c not in names]
    if missing:
        raise MissingColumns("missing columns %s (have %s)"
                             % (missing, list(names)))
    cols = {c: np.atleast_1d(table[c]).astype(float) for c in names}
    if cols["t"].size == 0:
        raise PlotError("csv error: no data rows in %s" % csv_path)
    return cols


def _reference_lines(ax, ts):
    ts = ts[ts > 0.0]
    if ts.size == 0:
        return
    t0, t1 = float(np.min(ts)), float(np.max(ts))
    if not t0 < t1:
        return
    tt = np.array([t0, t1])
    for p, style in ((-1.0, "--"), (-2.0, ":")):
        ax.plot(tt, (tt / t0) ** p, style, color="0.5", lw=0.8,
                label="t^%g" % p)


def _fig_decay(cols, window):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    fits = {}
    for name in DECAY_COLUMNS:
        vals = cols[name]
        if not np.any(vals > 0.0):
            continue
        try:
            expo, r2 = fit_loglog(cols["t"], vals, window)
            label = "%s  (t^%.3f, r2=%.3f)" % (name, expo, r2)
            fits[name] = (expo, r2)
        except WindowTooShort:
            label = name
        ax.loglog(cols["t"], vals, label=label)
    if not fits:
        raise WindowTooShort("no probe has six positive samples in "
                             "[%g, %g]" % window)
    _reference_lines(ax, cols["t"])
    ax.axvspan(window[0], window[1], color="0.92", zorder=0)
    text = "\n".join("%s: exponent=%.6f" % (k, fits[k][0])
                     for k in DECAY_COLUMNS if k in fits)
    ax.text(0.02, 0.02, text, transform=ax.transAxes, fontsize=8,
            va="bottom")
    ax.set_xlabel("t")
    ax.set_ylabel("sup norm")
    ax.legend(fontsize=7, loc="upper right")
    ax.set_title("null-frame decay, fit window [%g, %g]" % window)
    return fig, fits


def _fig_energy(cols, window):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    shifted = 1.0 + cols["t"]
    for name in ENERGY_COLUMNS:
        ax.loglog(shifted, cols[name], label=name)
    ax.set_xlabel("1 + t")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    ax.set_title("weighted energies")
    return fig, {}


def _fig_residuals(cols, window):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    floor = 1e-18
    for name in RESIDUAL_COLUMNS:
        ax.semilogy(cols["t"], np.maximum(cols[name], floor), label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("residual")
    ax.legend(fontsize=8)
    ax.set_title("gauge and divergence residuals")
    return fig, {}


def _local_slope(ts, vals):
    """Centered secant slope of log(val) vs log(t), nan where unusable."""
    out = np.full(ts.shape, np.nan)
    ok = (ts > 0.0) & (vals > 0.0)
    idx = np.flatnonzero(ok)
    if idx.size < 3:
        return out
    lt = np.log(ts[idx])
    lv = np.log(vals[idx])
    out[idx[1:-1]] = (lv[2:] - lv[:-2]) / (lt[2:] - lt[:-2])
    return out


def _fig_convergence(cols, window):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    drew = False
    for name in DECAY_COLUMNS:
        slope = _local_slope(cols["t"], cols[name])
        if np.all(~np.isfinite(slope)):
            continue
        ax.plot(cols["t"], slope, label=name)
        drew = True
    if not drew:
        raise WindowTooShort("no probe has enough positive samples for "
                             "a local slope")
    for p, style in ((-1.0, "--"), (-2.0, ":")):
        ax.axhline(p, ls=style, color="0.5", lw=0.8)
    ax.axvspan(window[0], window[1], color="0.92", zorder=0)
    ax.set_xlabel("t")
    ax.set_ylabel("local log-log slope")
    ax.legend(fontsize=8)
    ax.set_title("local decay order")
    return fig, {}


_BUILDERS = {
    "decay": _fig_decay,
    "energy": _fig_energy,
    "residuals": _fig_residuals,
    "convergence": _fig_convergence,
}


def plot(spec):
    """Render the figure for `spec` and write it to spec.out.

    Returns a dict of fitted exponents, {column: (exponent, r2)}; empty
    for kinds without a fit.  Raises PlotError subclasses on bad input.
    """
    cols = load_table(spec.csv, _REQUIRED[spec.kind])
    fig, fits = _BUILDERS[spec.kind](cols, spec.window)
    fig.tight_layout()
    fig.savefig(spec.out, dpi=110)
    plt.close(fig)
    return fits
