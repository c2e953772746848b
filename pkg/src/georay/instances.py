"""Canonical problem instances shared by the check suite and the tests.

The workhorse is the "huber instance": a quadratic bowl continued with
linear growth past |x| = 1, so its slope set [-1, 1] sits strictly inside
the primal box and dual-ray maximizers stay interior for every t in
[0, 1].  Its lambda-envelopes are the Huber functions, whence the name.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import ConcaveTransform, TestCurve, envelope_from_u
from .grids import Box, ConvexGridFunction, Grid, GridFunction, make_grid
from .legendre import SlopeRegion, subgradient_range


def quadratic_1d(nodes: int = 257, half_width: float = 1.0) -> ConvexGridFunction:
    """x^2/2 on [-half_width, half_width]."""
    g = make_grid(Box((-half_width,), (half_width,)), nodes)
    return ConvexGridFunction.certify(GridFunction.from_callable(g, lambda x: x * x / 2))


def abs_1d(nodes: int = 257) -> ConvexGridFunction:
    g = make_grid(Box((-1.0,), (1.0,)), nodes)
    return ConvexGridFunction.certify(GridFunction.from_callable(g, np.abs))


def quadratic_2d(nodes: int = 65) -> ConvexGridFunction:
    g = make_grid(Box((-1.0, -1.0), (1.0, 1.0)), (nodes, nodes))
    # convex by construction; certification at large 2-D sizes costs a hull
    return ConvexGridFunction.trusted(
        GridFunction.from_callable(g, lambda x, y: (x * x + y * y) / 2)
    )


def linear_growth_bowl(nodes: int = 129, box_half: float = 3.0) -> ConvexGridFunction:
    """x^2/2 for |x| <= 1, |x| - 1/2 beyond; slope set exactly [-1, 1]."""
    g = make_grid(Box((-box_half,), (box_half,)), nodes)

    def fn(x):
        return np.where(np.abs(x) <= 1.0, x * x / 2, np.abs(x) - 0.5)

    return ConvexGridFunction.certify(GridFunction.from_callable(g, fn))


def filtration_base(nodes: int = 257) -> ConvexGridFunction:
    """Base metric with slope set exactly [0, 1] = conv(P1) for P1 = {0, 1}.

    0 for x <= 0, x^2/2 on [0, 1], x - 1/2 beyond, on the box [-2, 3].
    """
    g = make_grid(Box((-2.0,), (3.0,)), nodes)

    def fn(x):
        return np.where(x <= 0.0, 0.0, np.where(x <= 1.0, x * x / 2, x - 0.5))

    return ConvexGridFunction.certify(GridFunction.from_callable(g, fn))


def random_convex_1d(
    rng: np.random.Generator,
    nodes: int = 257,
    slope_bound: float = 1.0,
    pin_end_slopes: bool = True,
) -> ConvexGridFunction:
    """Random convex function; pinned end slopes give a shared slope set."""
    g = make_grid(Box((-1.0,), (1.0,)), nodes)
    s = np.sort(rng.uniform(-slope_bound, slope_bound, nodes - 1 - (2 if pin_end_slopes else 0)))
    if pin_end_slopes:
        s = np.concatenate([[-slope_bound], s, [slope_bound]])
    v = np.concatenate([[0.0], np.cumsum(s * g.spacing[0])])
    v -= v.mean()
    return ConvexGridFunction.certify(GridFunction(g, v))


def random_nonconvex_1d(rng: np.random.Generator, nodes: int = 257) -> GridFunction:
    g = make_grid(Box((-1.0,), (1.0,)), nodes)
    x = g.axis(0)
    a, b, c = rng.uniform(1, 4), rng.uniform(2, 6), rng.uniform(0.2, 1.0)
    return GridFunction(g, np.sin(a * np.pi * x) * c + b * 0.05 * x)


@dataclass(frozen=True)
class RayInstance:
    """Base obstacle, dual grid, concave dual data, and the envelope curve."""

    phi: ConvexGridFunction
    dual: Grid
    u: ConcaveTransform
    curve: TestCurve
    lambda_spacing: float


def huber_instance(
    nodes: int = 129,
    dual_nodes: int = 129,
    lambda_spacing: float = 2.0**-5,
    box_half: float = 3.0,
) -> RayInstance:
    """phi with slope set [-1, 1], u(y) = -|y|; envelopes are Huber functions."""
    phi = linear_growth_bowl(nodes, box_half)
    from .legendre import default_dual_grid

    dual = default_dual_grid(phi, dual_nodes)
    base = subgradient_range(phi, dual)
    uvals = np.where(base.mask, -np.abs(dual.axis(0)), -np.inf)
    u = ConcaveTransform(GridFunction(dual, uvals), base)
    lambdas = np.arange(-1.0, 1e-12, lambda_spacing)
    curve = envelope_from_u(phi, u, lambdas, dual, lambda_head=-1.0)
    return RayInstance(phi, dual, u, curve, lambda_spacing)


def constant_u_instance(
    nodes: int = 129, dual_nodes: int = 129, level: float = 1.0, box_half: float = 3.0
) -> RayInstance:
    """u identically ``level`` on the slope set: pure-translation dynamics."""
    phi = linear_growth_bowl(nodes, box_half)
    from .legendre import default_dual_grid

    dual = default_dual_grid(phi, dual_nodes)
    base = subgradient_range(phi, dual)
    uvals = np.where(base.mask, level, -np.inf)
    u = ConcaveTransform(GridFunction(dual, uvals), base)
    lambdas = np.array([level - 1.0, level])
    curve = envelope_from_u(phi, u, lambdas, dual, lambda_head=level)
    return RayInstance(phi, dual, u, curve, 1.0)
