"""Discrete Legendre-Fenchel transform, biconjugation, and slope regions.

The transform phi*(y) = max_x <x,y> - phi(x) is computed two ways: a
brute-force maximum over all primal nodes, and a fast axis-separable sweep
(the max factors one axis at a time).  Both evaluate every candidate with
the *same* floating-point expression, namely

    x1*y1 + (x2*y2 - f(x1, x2))        (1-D: x*y - f(x))

and break ties toward the lowest row-major primal index, so their results
are bit-identical -- a property the test suite asserts.

Slope regions (the numerical Delta_phi) keep only dual nodes whose max is
attained at an interior primal node: boundary attainment encodes the box
truncation, not a genuine subgradient, and is discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grids import (
    Box,
    ConvexGridFunction,
    Grid,
    GridFunction,
    NEG_INF,
    _lower_hull_1d,
)

# A dual grid is an ordinary Grid over the slope box.
DualGrid = Grid

_CHUNK_ELEMS = 1 << 24  # soft cap on temporary array size in elements


def default_dual_grid(f: GridFunction, nodes_per_axis=None) -> Grid:
    """Dual grid covering the slope range of f, padded by one dual spacing.

    The raw range per axis is [min, max] of forward differences of the
    finite values; padding one spacing on each side keeps Delta_f strictly
    inside the dual box.
    """
    if f.is_identically_neg_inf:
        raise DomainError("no slopes: function is identically -inf")
    if nodes_per_axis is None:
        nodes_per_axis = f.grid.nodes_per_axis
    nodes = tuple(max(int(m), 5) for m in np.atleast_1d(nodes_per_axis))
    lo, hi = [], []
    v = f.values
    for ax in range(f.grid.dim):
        h = f.grid.spacing[ax]
        d = np.diff(v, axis=ax) / h
        d = d[np.isfinite(d)]
        if d.size == 0 or d.max() - d.min() < 1e-12:
            center = float(d[0]) if d.size else 0.0
            mn, mx = center - 0.5, center + 0.5
        else:
            mn, mx = float(d.min()), float(d.max())
        pad = (mx - mn) / (nodes[ax] - 3)
        lo.append(mn - pad)
        hi.append(mx + pad)
    return Grid(Box(tuple(lo), tuple(hi)), nodes)


def check_dual_contains_slopes(f: GridFunction, dual: Grid):
    """DualGrid invariant: slope range of f inside the dual box."""
    v = f.values
    for ax in range(f.grid.dim):
        d = np.diff(v, axis=ax) / f.grid.spacing[ax]
        d = d[np.isfinite(d)]
        if d.size == 0:
            continue
        if d.min() < dual.box.lower[ax] - 1e-12 or d.max() > dual.box.upper[ax] + 1e-12:
            raise DomainError(
                f"dual box axis {ax} [{dual.box.lower[ax]}, {dual.box.upper[ax]}] "
                f"does not contain slope range [{d.min():g}, {d.max():g}]"
            )


def _transform_brute(axes, values, dual_axes):
    """Brute-force conjugate over arbitrary axis data.

    Returns (vals, witness) where witness holds flat row-major primal
    indices (first maximizer).
    """
    dim = len(axes)
    vflat = values.ravel()
    if dim == 1:
        x = axes[0]
        out = np.empty(len(dual_axes[0]))
        wit = np.empty(len(dual_axes[0]), dtype=np.intp)
        for q, y in enumerate(dual_axes[0]):
            cand = x * y - vflat
            wit[q] = np.argmax(cand)
            out[q] = cand[wit[q]]
        return out, wit
    mesh = np.meshgrid(axes[0], axes[1], indexing="ij")
    x1f, x2f = mesh[0].ravel(), mesh[1].ravel()
    m1, m2 = len(dual_axes[0]), len(dual_axes[1])
    out = np.empty((m1, m2))
    wit = np.empty((m1, m2), dtype=np.intp)
    for p, y1 in enumerate(dual_axes[0]):
        for q, y2 in enumerate(dual_axes[1]):
            cand = x1f * y1 + (x2f * y2 - vflat)
            wit[p, q] = np.argmax(cand)
            out[p, q] = cand[wit[p, q]]
    return out, wit


def _transform_fast(axes, values, dual_axes):
    """Axis-separable conjugate; same candidates and tie-break as brute."""
    dim = len(axes)
    if dim == 1:
        x = axes[0]
        y = dual_axes[0]
        cand = x[None, :] * y[:, None] - values[None, :]
        wit = np.argmax(cand, axis=1)
        out = cand[np.arange(len(y)), wit]
        return out, wit
    x1, x2 = axes
    y1, y2 = dual_axes
    n1, n2 = values.shape
    m1, m2 = len(y1), len(y2)
    inner = x2[None, :, None] * y2[None, None, :] - values[:, :, None]  # (n1,n2,m2)
    w2 = np.argmax(inner, axis=1)  # (n1, m2)
    t = np.take_along_axis(inner, w2[:, None, :], axis=1)[:, 0, :]  # (n1, m2)
    out = np.empty((m1, m2))
    w1 = np.empty((m1, m2), dtype=np.intp)
    step = max(1, _CHUNK_ELEMS // (n1 * m2))
    for s in range(0, m1, step):
        yb = y1[s : s + step]
        outer = x1[:, None, None] * yb[None, :, None] + t[:, None, :]  # (n1,b,m2)
        wb = np.argmax(outer, axis=0)
        w1[s : s + step] = wb
        out[s : s + step] = np.take_along_axis(outer, wb[None, :, :], axis=0)[0]
    wit = w1 * n2 + w2[w1, np.arange(m2)[None, :]]
    return out, wit


def legendre(
    f: GridFunction,
    dual: Grid,
    method: str = "fast",
    return_witness: bool = False,
):
    """phi*(y) = max over primal nodes of <x,y> - phi(x), on the dual grid.

    method is "fast" (axis-separable sweep) or "brute"; the two agree
    bit-for-bit including the argmax witness.
    """
    if not f.finite_mask.all():
        # any -inf node would push the max to +inf at every slope
        raise DomainError("conjugate of a function with -inf values is +inf everywhere")
    if method == "fast":
        vals, wit = _transform_fast(f.grid.axes(), f.values, dual.axes())
    elif method == "brute":
        vals, wit = _transform_brute(f.grid.axes(), f.values, dual.axes())
    else:
        raise ValueError(f"unknown method {method!r}")
    out = ConvexGridFunction.trusted(GridFunction(dual, vals.reshape(dual.shape)))
    if return_witness:
        return out, wit.reshape(dual.shape)
    return out


def biconjugate(f: GridFunction, dual: Grid, method: str = "fast") -> ConvexGridFunction:
    """Legendre transform applied twice; lands back on the primal grid."""
    g = legendre(f, dual, method=method)
    return legendre(g, f.grid, method=method)


@dataclass(frozen=True, eq=False)
class SlopeRegion:
    """Discretely convex set of dual-grid nodes (the numerical Delta_f)."""

    grid: Grid
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool).reshape(self.grid.shape)
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def cell_volume(self) -> float:
        return self.grid.cell_volume

    @property
    def node_count(self) -> int:
        return int(self.mask.sum())

    @property
    def volume(self) -> float:
        return self.node_count * self.cell_volume

    def intersect(self, other: "SlopeRegion") -> "SlopeRegion":
        if self.grid != other.grid:
            raise DomainError("grid mismatch")
        return SlopeRegion(self.grid, self.mask & other.mask)


def _convex_fill(grid: Grid, mask: np.ndarray) -> np.ndarray:
    """Close a node mask under the discrete convex hull of its true-set."""
    if mask.sum() <= 1:
        return mask
    if grid.dim == 1:
        idx = np.nonzero(mask)[0]
        out = np.zeros_like(mask)
        out[idx[0] : idx[-1] + 1] = True
        return out
    pts = grid.coords()[mask.ravel()]
    # collinear point sets: fill the contiguous range along the common line
    if np.ptp(pts[:, 0]) < 1e-15 or np.ptp(pts[:, 1]) < 1e-15:
        ii, jj = np.nonzero(mask)
        out = np.zeros_like(mask)
        out[ii.min() : ii.max() + 1, jj.min() : jj.max() + 1] = True
        return out
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(pts)
    except QhullError:
        ii, jj = np.nonzero(mask)
        out = np.zeros_like(mask)
        out[ii.min() : ii.max() + 1, jj.min() : jj.max() + 1] = True
        return out
    eq = hull.equations
    coords = grid.coords()
    scale = max(1.0, float(np.abs(pts).max()))
    inside = np.all(coords @ eq[:, :2].T + eq[:, 2] <= 1e-9 * scale, axis=1)
    return inside.reshape(grid.shape)


def subgradient_range(
    f: ConvexGridFunction, dual: Grid, tol: float | None = None
) -> SlopeRegion:
    """Dual nodes whose conjugate max is attained at an interior primal node.

    Attainment is tested by comparing the full conjugate against the
    conjugate restricted to interior primal nodes; nodes passing within
    ``tol`` are kept, and the set is closed under the discrete convex hull.
    """
    if f.is_identically_neg_inf:
        raise DomainError("identically -inf function has no subgradients")
    full, _ = _transform_fast(f.grid.axes(), f.values, dual.axes())
    int_axes = [a[1:-1] for a in f.grid.axes()]
    sl = tuple(slice(1, -1) for _ in range(f.grid.dim))
    interior, _ = _transform_fast(int_axes, f.values[sl], dual.axes())
    if tol is None:
        scale = max(1.0, f.value_range(), float(np.abs(full).max()))
        tol = 1e-8 * scale
    mask = (interior >= full - tol).reshape(dual.shape)
    return SlopeRegion(dual, _convex_fill(dual, mask))


def _concave_envelope_on_points(pts: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Upper concave envelope of scattered data, evaluated at the data points."""
    if pts.shape[1] == 1:
        order = np.argsort(pts[:, 0], kind="stable")
        x, v = pts[order, 0], vals[order]
        hull = _lower_hull_1d(x, -v)
        env = np.empty_like(vals)
        env[order] = -np.interp(x, x[hull], -v[hull])
        return env
    from scipy.spatial import ConvexHull, QhullError

    cloud = np.column_stack([pts, vals])
    try:
        hull = ConvexHull(cloud)
    except QhullError:
        return vals.copy()
    eq = hull.equations[hull.equations[:, 2] > 1e-12]
    if eq.shape[0] == 0:
        return vals.copy()
    planes = -(pts @ eq[:, :2].T + eq[:, 3]) / eq[:, 2]
    return planes.min(axis=1)


def is_concave_on_support(u: GridFunction, tol: float) -> tuple[bool, tuple | None, float]:
    """Concavity of u restricted to its finite nodes (hull-based check)."""
    fin = u.finite_mask
    if not fin.any():
        return True, None, 0.0
    pts = u.grid.coords()[fin.ravel()]
    vals = u.values[fin]
    env = _concave_envelope_on_points(pts, vals)
    dev = env - vals
    worst = int(np.argmax(dev))
    if dev[worst] <= tol:
        return True, None, float(dev[worst])
    flat = np.nonzero(fin.ravel())[0][worst]
    return False, np.unravel_index(flat, u.grid.shape), float(dev[worst])


def superlevel_of_concave(
    u: GridFunction, lam: float, region: SlopeRegion | None = None, tol: float | None = None
) -> SlopeRegion:
    """{y : u(y) >= lam}, optionally intersected with a slope region."""
    if tol is None:
        tol = max(1e-9 * max(1.0, u.value_range()), 1e-12)
    ok, witness, dev = is_concave_on_support(u, tol)
    if not ok:
        raise DomainError(f"u is not concave: deviation {dev:g} at node {witness}")
    mask = u.finite_mask & (u.values >= lam)
    out = SlopeRegion(u.grid, mask)
    if region is not None:
        out = out.intersect(region)
    return out
