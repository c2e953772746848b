"""Bounded multiplicative filtrations as weighted lattice-point data.

Degree-1 lattice points with integer weights generate all higher degrees
through a tropical (max-plus) convolution; the resulting weight arrays
model a multiplicative filtration.  From them we build sup-norm Bergman
metrics, their log-sum-exp surrogates, the concave transform of the
weights on the polytope, the Fekete limit curve, and the Phong-Sturm ray,
together with the equivalence check against the envelope-built ray.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .curves import TestCurve, envelope_from_u
from .errors import DomainError, ResourceError
from .grids import ConvexGridFunction, Grid, GridFunction, NEG_INF, lower_convex_envelope
from .legendre import _lower_hull_1d, check_dual_contains_slopes

#: Guard on lattice array sizes produced by closures.
LATTICE_SIZE_CAP = 10**6


@dataclass(eq=False)
class WeightedLatticeData:
    """Integer weights on degree-1 lattice points, closed multiplicatively.

    ``closures[k]`` maps the reachable points of k * conv(P1) to the
    maximal sum of k degree-1 weights; unreachable points carry -inf.
    """

    points: np.ndarray  # (P, n) integers
    weights: np.ndarray  # (P,) integers

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.int64))
        if pts.shape[0] == 0:
            raise DomainError("need at least one lattice point")
        if pts.shape[1] not in (1, 2):
            raise DomainError("lattice dimension must be 1 or 2")
        w = np.asarray(self.weights, dtype=np.int64).ravel()
        if w.size != pts.shape[0]:
            raise DomainError("one weight per point required")
        self.points = pts
        self.weights = w
        self.closures: dict[int, np.ndarray] = {}
        # degree-1 closure is the input itself on its bounding lattice box
        self.closures[1] = self._degree_one_array()

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def weight_bound(self) -> int:
        """C with |weight at degree k| <= C k."""
        return int(np.abs(self.weights).max())

    def _origin(self, k: int) -> np.ndarray:
        return k * self.points.min(axis=0)

    def _shape(self, k: int) -> tuple[int, ...]:
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return tuple(int(k * s + 1) for s in span)

    def _degree_one_array(self) -> np.ndarray:
        arr = np.full(self._shape(1), NEG_INF)
        origin = self._origin(1)
        for p, w in zip(self.points, self.weights):
            arr[tuple(p - origin)] = float(w)
        return arr

    def closure(self, k: int) -> np.ndarray:
        if k not in self.closures:
            multiplicative_closure(self, k)
        return self.closures[k]

    def reachable(self, k: int):
        """(points (R, n), normalized weights (R,)) at degree k, row-major."""
        arr = self.closure(k)
        mask = np.isfinite(arr)
        idx = np.argwhere(mask)
        pts = idx + self._origin(k)
        return pts, arr[mask]


def multiplicative_closure(data: WeightedLatticeData, k: int) -> np.ndarray:
    """Degree-k weights by max-plus convolution of the degree-1 weights.

    lambda_k(alpha) = max over decompositions alpha = a_1 + ... + a_k of
    sum of degree-1 weights; computed by the dynamic program
    lambda_k = lambda_{k-1} (max-plus) w1.
    """
    if k < 1:
        raise DomainError("degree must be >= 1")
    if int(np.prod(data._shape(k))) > LATTICE_SIZE_CAP:
        raise ResourceError(f"degree-{k} lattice exceeds the size cap {LATTICE_SIZE_CAP}")
    have = max(j for j in data.closures if j <= k)
    arr = data.closures[have]
    for j in range(have, k):
        new = np.full(data._shape(j + 1), NEG_INF)
        base = data.points.min(axis=0)
        for p, w in zip(data.points, data.weights):
            off = p - base
            sl = tuple(slice(o, o + s) for o, s in zip(off, arr.shape))
            np.maximum(new[sl], arr + float(w), out=new[sl])
        arr = new
        data.closures[j + 1] = arr
    return data.closures[k]


def weight_histogram(data: WeightedLatticeData, k: int):
    """Multiplicities per weight and cumulative-from-above dimensions.

    Returns (weights desc, dim V_lambda, dim F_lambda); the cumulative
    identity dim F_lambda = sum of multiplicities above holds by
    construction and is asserted.
    """
    _, w = data.reachable(k)
    vals, counts = np.unique(w.astype(np.int64), return_counts=True)
    vals, counts = vals[::-1], counts[::-1]
    cum = np.cumsum(counts)
    assert cum[-1] == w.size
    return vals, counts, cum


@dataclass(eq=False)
class BergmanInstance:
    """Base metric phi plus cached conjugate values at normalized points."""

    phi: ConvexGridFunction
    dual: Grid

    def __post_init__(self):
        check_dual_contains_slopes(self.phi, self.dual)
        self._conj_cache: dict[tuple, float] = {}
        self._coords = self.phi.grid.coords()
        self._vflat = self.phi.values.ravel()

    def conj_at(self, y: np.ndarray) -> np.ndarray:
        """phi*(y) at arbitrary slope points (exact max over primal nodes)."""
        y = np.atleast_2d(y)
        for ax in range(y.shape[1]):
            if (
                y[:, ax].min() < self.dual.box.lower[ax] - 1e-12
                or y[:, ax].max() > self.dual.box.upper[ax] + 1e-12
            ):
                raise DomainError("normalized lattice point outside the dual box")
        return (self._coords @ y.T - self._vflat[:, None]).max(axis=0)

    def section_values(self, data: WeightedLatticeData, k: int):
        """e_i(x) = <alpha_i/k, x> - phi*(alpha_i/k) for reachable alpha_i.

        Returns (E (num_nodes, R), weights (R,)) in row-major point order.
        """
        pts, w = data.reachable(k)
        slopes = pts.astype(float) / k
        c = self.conj_at(slopes)
        E = self._coords @ slopes.T - c
        return E, w


def extremal_metric(
    inst: BergmanInstance, data: WeightedLatticeData, k: int, lam: float
) -> GridFunction:
    """max of e_i over sections with weight >= k*lam (sup-norm extremal)."""
    E, w = inst.section_values(data, k)
    sel = w >= k * lam - 1e-9
    grid = inst.phi.grid
    if not sel.any():
        return GridFunction.neg_inf(grid)
    return GridFunction(grid, E[:, sel].max(axis=1).reshape(grid.shape))


def bergman_metric(
    inst: BergmanInstance, data: WeightedLatticeData, k: int, lam: float
) -> GridFunction:
    """(1/k) log sum exp(k e_i) over the same selection (max-shift stable)."""
    E, w = inst.section_values(data, k)
    sel = w >= k * lam - 1e-9
    grid = inst.phi.grid
    if not sel.any():
        return GridFunction.neg_inf(grid)
    vals = logsumexp(k * E[:, sel], axis=1) / k
    return GridFunction(grid, vals.reshape(grid.shape))


def phong_sturm_ray(
    inst: BergmanInstance, data: WeightedLatticeData, k: int, t_grid=None
):
    """frame(t) = (1/k) log sum over all sections of exp(t w_i + k e_i)."""
    from .rays import Ray, default_t_grid

    if t_grid is None:
        t_grid = default_t_grid()
    ts = np.asarray(t_grid, dtype=float).ravel()
    E, w = inst.section_values(data, k)
    grid = inst.phi.grid
    frames = []
    for t in ts:
        vals = logsumexp(k * E + t * w[None, :], axis=1) / k
        frames.append(GridFunction(grid, vals.reshape(grid.shape)))
    return Ray(ts, tuple(frames), source=f"phong-sturm k={k}")


def limit_curve(
    inst: BergmanInstance, data: WeightedLatticeData, k_list
) -> TestCurve:
    """Fekete supremum of extremal metrics over k, convexified per lambda.

    The lambda grid is {j / k_max} over the normalized weight range; the
    critical value is the largest normalized weight.
    """
    k_list = sorted(set(int(k) for k in k_list))
    if not k_list:
        raise DomainError("empty degree list")
    k_max = k_list[-1]
    norm_min = math.inf
    norm_max = -math.inf
    for k in k_list:
        _, w = data.reachable(k)
        norm_min = min(norm_min, float(w.min()) / k)
        norm_max = max(norm_max, float(w.max()) / k)
    j_lo = math.floor(norm_min * k_max + 1e-9)
    j_hi = math.ceil(norm_max * k_max - 1e-9)
    lambdas = np.arange(j_lo, j_hi + 1) / k_max
    grid = inst.phi.grid
    samples = []
    lambda_c = None
    for lam in lambdas:
        acc = np.full(grid.shape, NEG_INF)
        for k in k_list:
            ext = extremal_metric(inst, data, k, lam)
            np.maximum(acc, ext.values, out=acc)
        if np.all(acc == NEG_INF):
            samples.append(ConvexGridFunction.trusted(GridFunction.neg_inf(grid)))
            continue
        lambda_c = float(lam)
        samples.append(lower_convex_envelope(GridFunction(grid, acc)))
    if lambda_c is None:
        raise DomainError("limit curve has no finite samples")
    return TestCurve(
        lambdas, tuple(samples), lambda_head=float(lambdas[0]), lambda_c=lambda_c
    )


@dataclass(frozen=True, eq=False)
class ConcaveTransformG:
    """Piecewise-linear concave envelope of normalized weight data."""

    nodes: np.ndarray  # (R, n) normalized lattice points
    values: np.ndarray  # (R,) concave-envelope values at the nodes
    hull_equations: np.ndarray | None  # 2-D domain hull; None in 1-D

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.nodes.shape[1] == 1:
            return np.interp(pts[:, 0], self.nodes[:, 0], self.values)
        from scipy.interpolate import LinearNDInterpolator

        interp = LinearNDInterpolator(self.nodes, self.values)
        return interp(pts)

    @property
    def max_value(self) -> float:
        return float(self.values.max())


def concave_transform_g(data: WeightedLatticeData, k: int) -> ConcaveTransformG:
    """Concave envelope of {(alpha/k, weight(alpha)/k)} on the polytope."""
    pts, w = data.reachable(k)
    x = pts.astype(float) / k
    v = w.astype(float) / k
    if data.dim == 1:
        order = np.argsort(x[:, 0], kind="stable")
        xs, vs = x[order, 0], v[order]
        hull = _lower_hull_1d(xs, -vs)
        env = -np.interp(xs, xs[hull], -vs[hull])
        return ConcaveTransformG(xs[:, None], env, None)
    from .legendre import _concave_envelope_on_points
    from scipy.spatial import ConvexHull

    env = _concave_envelope_on_points(x, v)
    hull = ConvexHull(x)
    return ConcaveTransformG(x, env, hull.equations)


def moment_check(
    g: ConcaveTransformG, data: WeightedLatticeData, k: int, p: int, mesh: int = 4097
):
    """((1/k^n) sum of normalized weights^p, integral of g^p over the polytope)."""
    if p not in (1, 2):
        raise DomainError("only moments p in {1, 2} are supported")
    _, w = data.reachable(k)
    n = data.dim
    lhs = float(((w / k) ** p).sum()) / k**n
    if n == 1:
        a, b = float(g.nodes.min()), float(g.nodes.max())
        xs = np.linspace(a, b, mesh)
        rhs = float(np.trapezoid(g(xs[:, None]) ** p, xs))
    else:
        lo = g.nodes.min(axis=0)
        hi = g.nodes.max(axis=0)
        m = int(math.isqrt(mesh))
        xs = np.linspace(lo[0], hi[0], m)
        ys = np.linspace(lo[1], hi[1], m)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        inside = np.all(
            pts @ g.hull_equations[:, :2].T + g.hull_equations[:, 2] <= 1e-12, axis=1
        )
        vals = np.zeros(pts.shape[0])
        vals[inside] = g(pts[inside]) ** p
        cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
        rhs = float(np.nansum(vals)) * cell
    return lhs, rhs


def log_sum_exp_sandwich_gap(
    inst: BergmanInstance, data: WeightedLatticeData, k: int, lam: float = -np.inf
):
    """Worst node-wise violation of max <= bergman <= max + ln|I|/k.

    Returns (low_violation, high_violation); both should be ~ 0.
    """
    E, w = inst.section_values(data, k)
    sel = w >= k * lam - 1e-9 if np.isfinite(lam) else np.ones(w.size, dtype=bool)
    if not sel.any():
        raise DomainError("empty selection")
    block = E[:, sel]
    mx = block.max(axis=1)
    lse = logsumexp(k * block, axis=1) / k
    budget = math.log(int(sel.sum())) / k
    low = float((mx - lse).max())
    high = float((lse - (mx + budget)).max())
    return low, high


def equivalence_check(
    inst: BergmanInstance,
    data: WeightedLatticeData,
    k: int,
    t_grid=None,
    k_list=None,
) -> np.ndarray:
    """Per-t sup-norm gap between the Phong-Sturm ray at degree k and the
    envelope-built ray of the limit curve."""
    from .curves import concave_transform, maximal_envelope
    from .rays import compare_rays, ray_from_curve

    if k_list is None:
        k_list = sorted(data.closures)
    curve = limit_curve(inst, data, k_list)
    env = maximal_envelope(inst.phi, curve, inst.dual)
    hat = ray_from_curve(env, t_grid)
    ps = phong_sturm_ray(inst, data, k, t_grid)
    return compare_rays(hat, ps)
