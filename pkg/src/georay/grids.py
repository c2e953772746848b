"""Uniform grids on boxes, extended-real grid functions, and convex envelopes.

Values are stored as float64 arrays shaped like the grid.  The only
extended value allowed is -inf (the sentinel for the "identically minus
infinity" convention and for cut-off samples of test curves); +inf and NaN
are rejected at construction.  Finite entries are capped in magnitude so
that exp/log-sum-exp further down the pipeline cannot overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

NEG_INF = float("-inf")

#: Magnitude cap on finite values (keeps transforms and LSE stable).
VALUE_CAP = 1e12

#: Default relative tolerance for convexity certification.
TOL_CONVEX_REL = 1e-9


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in R^n, n in {1, 2}."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi):
            raise DomainError("lower and upper must have the same length")
        if len(lo) not in (1, 2):
            raise DomainError("only dimensions 1 and 2 are supported")
        for a, b in zip(lo, hi):
            if not (a < b):
                raise DomainError(f"degenerate box: lower {a} >= upper {b}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def diameter(self) -> float:
        return float(np.sqrt(sum(w * w for w in self.widths)))


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid over a box.

    Node coordinates along axis i are exactly lower[i] + j * h[i] with
    h[i] = (upper[i] - lower[i]) / (nodes_per_axis[i] - 1).
    """

    box: Box
    nodes_per_axis: tuple[int, ...]

    def __post_init__(self):
        n = tuple(int(m) for m in np.atleast_1d(self.nodes_per_axis))
        object.__setattr__(self, "nodes_per_axis", n)
        if len(n) != self.box.dim:
            raise DomainError("nodes_per_axis length must match box dimension")
        for m in n:
            if m < 3:
                raise DomainError("need at least 3 nodes per axis")

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes_per_axis

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.nodes_per_axis))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (b - a) / (m - 1)
            for a, b, m in zip(self.box.lower, self.box.upper, self.nodes_per_axis)
        )

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, i: int) -> np.ndarray:
        a = self.box.lower[i]
        h = self.spacing[i]
        return a + h * np.arange(self.nodes_per_axis[i])

    def axes(self) -> list[np.ndarray]:
        return [self.axis(i) for i in range(self.dim)]

    def coords(self) -> np.ndarray:
        """All node coordinates, row-major, shape (num_nodes, dim)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def interior_mask(self) -> np.ndarray:
        """Boolean array (grid shape): True away from the box boundary."""
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[ax] = 0
            mask[tuple(sl)] = False
            sl[ax] = -1
            mask[tuple(sl)] = False
        return mask


def make_grid(box: Box, nodes_per_axis) -> Grid:
    return Grid(box, tuple(np.atleast_1d(nodes_per_axis)))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Extended-real values on a grid (-inf allowed, +inf and NaN rejected)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.num_nodes:
            raise DomainError(
                f"expected {self.grid.num_nodes} values, got {v.size}"
            )
        v = v.reshape(self.grid.shape)
        if np.any(np.isnan(v)) or np.any(v == np.inf):
            raise DomainError("grid function values must be finite or -inf")
        finite = np.isfinite(v)
        if np.any(np.abs(v[finite]) > VALUE_CAP):
            raise DomainError(f"finite values exceed the cap {VALUE_CAP:g}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_identically_neg_inf(self) -> bool:
        return bool(np.all(self.values == NEG_INF))

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def value_range(self) -> float:
        fin = self.values[self.finite_mask]
        if fin.size == 0:
            return 0.0
        return float(fin.max() - fin.min())

    @staticmethod
    def neg_inf(grid: Grid) -> "GridFunction":
        return GridFunction(grid, np.full(grid.shape, NEG_INF))

    @staticmethod
    def from_callable(grid: Grid, fn) -> "GridFunction":
        mesh = np.meshgrid(*grid.axes(), indexing="ij")
        return GridFunction(grid, fn(*mesh))


@dataclass(frozen=True, eq=False)
class ConvexGridFunction(GridFunction):
    """GridFunction certified (or trusted by construction) convex.

    ``tol_convex`` records the certification tolerance.  Functions built as
    maxima of affine functions or as lower hulls are convex by construction
    and are created with ``certify`` left to the caller.
    """

    tol_convex: float = 0.0

    @staticmethod
    def certify(f: GridFunction, tol: float | None = None) -> "ConvexGridFunction":
        if f.is_identically_neg_inf:
            return ConvexGridFunction(f.grid, f.values, tol_convex=0.0)
        if tol is None:
            tol = max(TOL_CONVEX_REL * f.value_range(), 1e-12)
        ok, _, dev = is_convex(f, tol)
        if not ok:
            raise DomainError(f"function is not convex: max deviation {dev:g} > {tol:g}")
        return ConvexGridFunction(f.grid, f.values, tol_convex=tol)

    @staticmethod
    def trusted(f: GridFunction, tol: float = 0.0) -> "ConvexGridFunction":
        """Wrap without re-certifying; for outputs convex by construction."""
        return ConvexGridFunction(f.grid, f.values, tol_convex=tol)


def _require_same_grid(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise DomainError("grid mismatch")


def pointwise_max(f: GridFunction, g: GridFunction) -> GridFunction:
    """Node-wise maximum; -inf only where both operands are -inf."""
    _require_same_grid(f, g)
    return GridFunction(f.grid, np.maximum(f.values, g.values))


def pointwise_shift(f: GridFunction, c: float) -> GridFunction:
    """f + c node-wise; -inf entries stay -inf."""
    v = f.values.copy()
    fin = np.isfinite(v)
    v[fin] = v[fin] + float(c)
    return GridFunction(f.grid, v)


def _lower_hull_1d(x: np.ndarray, v: np.ndarray):
    """Indices of the lower convex hull vertices of points (x, v), x sorted."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            j, m = hull[-2], hull[-1]
            # pop m if it lies on or above segment (j, i)
            cross = (x[m] - x[j]) * (v[i] - v[j]) - (v[m] - v[j]) * (x[i] - x[j])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _envelope_1d(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    hull = _lower_hull_1d(x, v)
    return np.interp(x, x[hull], v[hull])


def _envelope_2d(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Lower convex envelope on a 2-D grid via the lower hull of the epigraph.

    Each downward-facing facet of the hull of (x, y, f) supports the point
    cloud from below, so the envelope is the max of the facet planes.
    """
    from scipy.spatial import ConvexHull, QhullError

    pts = np.column_stack([grid.coords(), v.ravel()])
    # affine data has a flat epigraph; it is its own envelope
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return v.copy()
    eq = hull.equations  # n . p + off <= 0 inside
    lower = eq[:, 2] < -1e-12
    eq = eq[lower]
    if eq.shape[0] == 0:
        return v.copy()
    nxy, nz, off = eq[:, :2], eq[:, 2], eq[:, 3]
    coords = grid.coords()
    out = np.empty(coords.shape[0])
    chunk = 4096
    for s in range(0, coords.shape[0], chunk):
        block = coords[s : s + chunk]
        planes = -(block @ nxy.T + off) / nz  # (B, F)
        out[s : s + chunk] = planes.max(axis=1)
    # the hull surface interpolates the data; guard fp drift above f
    return np.minimum(out.reshape(grid.shape), v)


def lower_convex_envelope(f: GridFunction) -> ConvexGridFunction:
    """Pointwise-largest convex minorant of f, sampled at the nodes.

    A convex function that is -inf anywhere is -inf everywhere, so any
    -inf entry collapses the envelope to the identically -inf function.
    """
    if not np.all(f.finite_mask):
        return ConvexGridFunction.trusted(GridFunction.neg_inf(f.grid))
    if f.grid.dim == 1:
        env = _envelope_1d(f.grid.axis(0), f.values)
    else:
        env = _envelope_2d(f.grid, f.values)
    return ConvexGridFunction.trusted(GridFunction(f.grid, env))


def is_convex(f: GridFunction, tol: float):
    """Check f == lower_convex_envelope(f) within tol at every finite node.

    Returns (ok, witness_index, max_deviation); witness_index is the
    multi-index of the worst violation (None when convex or identically
    -inf).
    """
    if f.is_identically_neg_inf:
        return True, None, 0.0
    if not np.all(f.finite_mask):
        # a partially -inf function is never convex on the whole box
        idx = np.unravel_index(int(np.argmin(f.finite_mask.ravel())), f.grid.shape)
        return False, idx, np.inf
    env = lower_convex_envelope(f)
    dev = f.values - env.values
    worst = int(np.argmax(dev.ravel()))
    max_dev = float(dev.ravel()[worst])
    if max_dev <= tol:
        return True, None, max_dev
    return False, np.unravel_index(worst, f.grid.shape), max_dev
