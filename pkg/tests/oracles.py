"""Independent reference implementations used by the tests.

Everything here is written with explicit loops over grid points and
markers, without the package's stencil helpers or sparse assembly, so it
can serve as a check on the vectorized code.
"""
import numpy as np


def grad_loop(s, dx, dy):
    """G with zero values outside the block; returns (gx, gy)."""
    nx, ny = s.shape

    def at(i, j):
        return s[i, j] if 0 <= i < nx and 0 <= j < ny else 0.0

    gx = np.zeros((nx + 1, ny))
    gy = np.zeros((nx, ny + 1))
    for i in range(nx + 1):
        for j in range(ny):
            gx[i, j] = (at(i, j) - at(i - 1, j)) / dx
    for i in range(nx):
        for j in range(ny + 1):
            gy[i, j] = (at(i, j) - at(i, j - 1)) / dy
    return gx, gy


def div_loop(vx, vy, dx, dy):
    nx, ny = vy.shape[0], vx.shape[1]
    out = np.zeros((nx, ny))
    for i in range(nx):
        for j in range(ny):
            out[i, j] = (vx[i + 1, j] - vx[i, j]) / dx + (vy[i, j + 1] - vy[i, j]) / dy
    return out


def lap_loop(s, dx, dy):
    nx, ny = s.shape

    def at(i, j):
        return s[i, j] if 0 <= i < nx and 0 <= j < ny else 0.0

    out = np.zeros_like(s)
    for i in range(nx):
        for j in range(ny):
            out[i, j] = ((at(i + 1, j) - 2 * s[i, j] + at(i - 1, j)) / dx**2
                         + (at(i, j + 1) - 2 * s[i, j] + at(i, j - 1)) / dy**2)
    return out


def probe(fn, n_in):
    """Dense matrix of a linear map by unit-vector probing."""
    cols = []
    for k in range(n_in):
        e = np.zeros(n_in)
        e[k] = 1.0
        cols.append(np.asarray(fn(e), dtype=float))
    return np.column_stack(cols)


def delta2(phi, dx, dy, x, y, X, Y):
    """Full tensor-product delta evaluated at arbitrary points."""
    return phi((x - X) / dx) / dx * phi((y - Y) / dy) / dy


def spread_loop(phi, grid, space, body, data, weighted=False):
    """R_* by a triple loop: sum_l d(x_p - X_l) [n_l.(x_p - X_l)] data_l dS_l."""
    xs, ys = grid.coords(space)
    out = np.zeros(xs.shape)
    for a in range(xs.shape[0]):
        for b in range(xs.shape[1]):
            acc = 0.0
            for l in range(body.n_markers):
                X, Y = body.positions[l]
                d = delta2(phi, grid.dx, grid.dy, xs[a, b], ys[a, b], X, Y)
                if d == 0.0:
                    continue
                w = 1.0
                if weighted:
                    w = body.normals[l, 0] * (xs[a, b] - X) + body.normals[l, 1] * (ys[a, b] - Y)
                acc += d * w * data[l] * body.areas[l]
            out[a, b] = acc
    return out


def interp_loop(phi, grid, space, body, field, weighted=False):
    """E_* by a double loop: dx dy sum_p d(x_p - X_l) [n_l.(x_p - X_l)] f_p."""
    xs, ys = grid.coords(space)
    out = np.zeros(body.n_markers)
    for l in range(body.n_markers):
        X, Y = body.positions[l]
        d = delta2(phi, grid.dx, grid.dy, xs, ys, X, Y)
        w = np.ones_like(d)
        if weighted:
            w = body.normals[l, 0] * (xs - X) + body.normals[l, 1] * (ys - Y)
        out[l] = grid.dx * grid.dy * np.sum(d * w * field)
    return out


def tensor_delta(phi, grid, comp, X, Y):
    """Face deltas averaged to the tensor point of component ``comp``.

    xx and yy live at cell centers, xy and yx at nodes; xx and xy average
    along x, yx and yy along y.
    """
    space = "C" if comp in ("xx", "yy") else "N"
    xs, ys = grid.coords(space)
    hx, hy = 0.5 * grid.dx, 0.5 * grid.dy
    if comp in ("xx", "xy"):
        pts = [(xs - hx, ys), (xs + hx, ys)]
    else:
        pts = [(xs, ys - hy), (xs, ys + hy)]
    return 0.5 * sum(delta2(phi, grid.dx, grid.dy, px, py, X, Y) for px, py in pts), xs, ys
