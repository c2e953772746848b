"""Geodesic rays: Legendre transform in lambda, the dual construction,
energy linearity, and the inverse (infimum) transform.

A ray is a t-indexed family of grid functions.  Two constructions are
implemented and compared: the lambda-supremum of a test curve,
frame(t) = max over lambda of (phi_lambda + t lambda), and the dual route
frame(t) = conjugate of (phi* - t u) on the finite-u region.  Their
agreement, and the linearity of the relative energy in t, are the model
identities the acceptance suite pins down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import ConcaveTransform, TestCurve
from .errors import DomainError
from .grids import ConvexGridFunction, Grid, GridFunction, NEG_INF
from .monge_ampere import _energy_dual_grid, energy_quadrature, ma_measure


@dataclass(frozen=True, eq=False)
class Ray:
    """Frames of grid functions indexed by a sorted t grid starting at 0."""

    t_grid: np.ndarray
    frames: tuple[GridFunction, ...]
    source: str = ""
    curve: TestCurve | None = None

    def __post_init__(self):
        ts = np.asarray(self.t_grid, dtype=float).ravel()
        ts.setflags(write=False)
        object.__setattr__(self, "t_grid", ts)
        object.__setattr__(self, "frames", tuple(self.frames))
        if ts.size == 0 or ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
            raise DomainError("t grid must start at 0 and increase strictly")
        if len(self.frames) != ts.size:
            raise DomainError("one frame per t required")

    @property
    def grid(self) -> Grid:
        return self.frames[0].grid


@dataclass(frozen=True)
class LinearityReport:
    slope: float
    intercept: float
    max_abs_residual: float
    predicted_slope: float


def default_t_grid() -> np.ndarray:
    return np.linspace(0.0, 1.0, 11)


def ray_from_curve(tc: TestCurve, t_grid=None) -> Ray:
    """frame(t) = node-wise max over stored lambda of (phi_lambda + t lambda)."""
    if t_grid is None:
        t_grid = default_t_grid()
    ts = np.asarray(t_grid, dtype=float).ravel()
    if tc.head.is_identically_neg_inf:
        raise DomainError("test curve head is identically -inf")
    frames = []
    for t in ts:
        acc = np.full(tc.grid.shape, NEG_INF)
        for lam, s in zip(tc.lambdas, tc.samples):
            if s.is_identically_neg_inf:
                continue
            np.maximum(acc, s.values + t * lam, out=acc)
        frames.append(GridFunction(tc.grid, acc))
    return Ray(ts, tuple(frames), source="curve", curve=tc)


def ray_dual(
    phi: ConvexGridFunction, u: ConcaveTransform, t_grid=None
) -> Ray:
    """frame(t) = conjugate (dual -> primal) of phi* - t u on the u-region."""
    from .legendre import legendre

    if t_grid is None:
        t_grid = default_t_grid()
    ts = np.asarray(t_grid, dtype=float).ravel()
    dual = u.u.grid
    sel = u.base.mask.ravel() & np.isfinite(u.u.values.ravel())
    if not sel.any():
        raise DomainError("empty slope region for the dual ray")
    phistar = legendre(phi, dual)
    y = dual.coords()[sel]
    star = phistar.values.ravel()[sel]
    uv = u.u.values.ravel()[sel]
    coords = phi.grid.coords()
    frames = []
    for t in ts:
        mod = star - t * uv
        vals = np.empty(phi.grid.num_nodes)
        chunk = max(1, (1 << 24) // max(1, y.shape[0]))
        for s in range(0, coords.shape[0], chunk):
            block = coords[s : s + chunk]
            vals[s : s + chunk] = (block @ y.T - mod).max(axis=1)
        frames.append(GridFunction(phi.grid, vals.reshape(phi.grid.shape)))
    return Ray(ts, tuple(frames), source="dual")


def compare_rays(r1: Ray, r2: Ray) -> np.ndarray:
    """Per-t sup-norm over nodes where both frames are finite."""
    if not np.array_equal(r1.t_grid, r2.t_grid):
        raise DomainError("mismatched t grids")
    if r1.grid != r2.grid:
        raise DomainError("mismatched primal grids")
    out = np.empty(r1.t_grid.size)
    for i, (a, b) in enumerate(zip(r1.frames, r2.frames)):
        both = a.finite_mask & b.finite_mask
        out[i] = float(np.abs(a.values[both] - b.values[both]).max()) if both.any() else 0.0
    return out


def _predicted_slope(tc: TestCurve, dual: Grid | None = None) -> float:
    """-sum lambda_j dF_j with F(lambda) = total MA mass of phi_lambda.

    Right Riemann-Stieltjes over the stored lambda grid, including the
    terminal drop of F to zero at lambda_c.
    """
    from .legendre import subgradient_range

    if dual is None:
        dual = _energy_dual_grid(tc.head)
    lams, Fs = [], []
    for lam, s in zip(tc.lambdas, tc.samples):
        if s.is_identically_neg_inf:
            continue
        lams.append(lam)
        region = subgradient_range(s, dual)
        Fs.append(ma_measure(s, dual, region=region).total)
    total = 0.0
    for j in range(1, len(Fs)):
        total += lams[j] * (Fs[j] - Fs[j - 1])
    total += tc.lambda_c * (0.0 - Fs[-1])
    return -total


def energy_linearity(
    ray: Ray, f0: ConvexGridFunction, t_samples: int = 11
) -> LinearityReport:
    """Least-squares line through (t, E(frame(t), f0)) with predicted slope.

    The prediction requires the generating curve (ray.curve); rays without
    one get predicted_slope = NaN.
    """
    dual = _energy_dual_grid(f0)
    energies = np.array(
        [
            energy_quadrature(
                ConvexGridFunction.trusted(fr), f0, t_samples, dual=dual
            ).value
            for fr in ray.frames
        ]
    )
    slope, intercept = np.polyfit(ray.t_grid, energies, 1)
    resid = float(np.abs(energies - (slope * ray.t_grid + intercept)).max())
    predicted = (
        _predicted_slope(ray.curve, dual) if ray.curve is not None else float("nan")
    )
    return LinearityReport(
        slope=float(slope),
        intercept=float(intercept),
        max_abs_residual=resid,
        predicted_slope=predicted,
    )


def inverse_transform(ray: Ray, lambdas=None) -> TestCurve:
    """psi_lambda = node-wise min over the t grid of frame(t) - t lambda.

    Lambdas whose infimum is still decreasing at the largest t (by more
    than one primal spacing per unit t) cannot be certified on a finite t
    grid and are flagged -inf.
    """
    if lambdas is None:
        if ray.curve is None:
            raise DomainError("no lambda grid: pass lambdas or use a curve-built ray")
        lambdas = ray.curve.lambdas
    lam = np.asarray(lambdas, dtype=float).ravel()
    stack = np.stack([fr.values for fr in ray.frames])  # (T, *shape)
    ts = ray.t_grid
    h = max(ray.grid.spacing)
    samples = []
    lambda_c = None
    for l in lam:
        shifted = stack - ts.reshape((-1,) + (1,) * ray.grid.dim) * l
        vals = shifted.min(axis=0)
        argmin = shifted.argmin(axis=0)
        degenerate = False
        if ts.size >= 2:
            tail_rate = (shifted[-1] - shifted[-2]) / (ts[-1] - ts[-2])
            degenerate = bool(np.any((argmin == ts.size - 1) & (tail_rate < -h)))
        if degenerate:
            samples.append(ConvexGridFunction.trusted(GridFunction.neg_inf(ray.grid)))
        else:
            lambda_c = l
            samples.append(ConvexGridFunction.trusted(GridFunction(ray.grid, vals)))
    if lambda_c is None:
        raise DomainError("every lambda degenerates on this t grid")
    return TestCurve(
        lam, tuple(samples), lambda_head=float(lam[0]), lambda_c=lambda_c
    )
