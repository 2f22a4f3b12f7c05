"""Fourth-order centered finite-difference stencils on a periodic cube.

Grid fields are numpy arrays whose last three axes are the spatial axes of
the cube [-L, L]^3 with n points per axis (cell spacing dx = 2L/n).  All
operators are built from axis rolls, so they commute exactly with each
other — in particular div(curl ·) vanishes identically in floating point up
to roundoff-free cancellation of identical terms.
"""

import numpy as np

from . import fast


def _sh(f, k, axis):
    """f shifted k cells in +axis direction (periodic)."""
    return np.roll(f, -k, axis=axis)


def d1(f, axis, dx):
    """First derivative, 4th order: (-f2 + 8f1 - 8f-1 + f-2) / 12dx."""
    if fast.HAVE_NUMBA and isinstance(f, np.ndarray):
        out = fast.d1_grid(f, axis, dx)
        if out is not None:
            return out
    ax = f.ndim - 3 + axis
    return (-_sh(f, 2, ax) + 8.0 * _sh(f, 1, ax)
            - 8.0 * _sh(f, -1, ax) + _sh(f, -2, ax)) / (12.0 * dx)


def d2(f, axis, dx):
    """Second derivative, 4th order."""
    if fast.HAVE_NUMBA and isinstance(f, np.ndarray):
        out = fast.d2_grid(f, axis, dx)
        if out is not None:
            return out
    ax = f.ndim - 3 + axis
    return (-_sh(f, 2, ax) + 16.0 * _sh(f, 1, ax) - 30.0 * f
            + 16.0 * _sh(f, -1, ax) - _sh(f, -2, ax)) / (12.0 * dx * dx)


def d11(f, ax_i, ax_j, dx):
    """Mixed second derivative by composing first-derivative stencils."""
    if ax_i == ax_j:
        return d2(f, ax_i, dx)
    return d1(d1(f, ax_i, dx), ax_j, dx)


def grad3(f, dx):
    """Spatial gradient: stacked first derivatives, leading axis 3."""
    return np.stack([d1(f, a, dx) for a in range(3)])


def divergence(v, dx):
    """Divergence of a vector field with leading axis 3."""
    return d1(v[0], 0, dx) + d1(v[1], 1, dx) + d1(v[2], 2, dx)


def curl(v, dx):
    """Curl of a vector field with leading axis 3."""
    return np.stack([
        d1(v[2], 1, dx) - d1(v[1], 2, dx),
        d1(v[0], 2, dx) - d1(v[2], 0, dx),
        d1(v[1], 0, dx) - d1(v[0], 1, dx),
    ])


def kreiss_oliger(f, dx, eps):
    """Fourth-difference dissipation operator (added to right-hand sides)."""
    if eps == 0.0:
        return np.zeros_like(f)
    acc = np.zeros_like(f)
    for axis in range(3):
        ax = f.ndim - 3 + axis
        acc += (_sh(f, 2, ax) - 4.0 * _sh(f, 1, ax) + 6.0 * f
                - 4.0 * _sh(f, -1, ax) + _sh(f, -2, ax))
    return -(eps / 16.0) / dx * acc


def axes_coords(n, L):
    """Cell-centered-free uniform axis: n points at -L + i * dx (periodic)."""
    dx = 2.0 * L / n
    return -L + dx * np.arange(n), dx


def grid_mesh(n, L):
    ax, dx = axes_coords(n, L)
    x, y, z = np.meshgrid(ax, ax, ax, indexing="ij")
    return x, y, z, dx


def tree_sum(values):
    """Fixed binary-tree summation of a 1D array (deterministic reduction)."""
    vals = np.asarray(values, dtype=float).ravel()
    n = vals.size
    if n == 0:
        return 0.0
    while n > 1:
        half = n // 2
        vals = np.concatenate([vals[:half] + vals[half:2 * half], vals[2 * half:n]])
        n = vals.size
    return float(vals[0])


def l2_norm(f, dx):
    """Deterministic grid L2 norm: sqrt(sum f^2 dx^3)."""
    return float(np.sqrt(tree_sum(np.asarray(f) ** 2) * dx ** 3))
