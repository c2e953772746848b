"""Test curves, their concave transform on the dual, and maximal envelopes.

A test curve is a lambda-indexed family of convex grid functions: constant
below ``lambda_head``, node-wise decreasing and concave in lambda, and
identically -inf past the critical value ``lambda_c``.  Its concave
transform u(y) is the largest lambda whose member still has y among its
subgradients.  The maximal envelope runs the other way: from an obstacle
phi and superlevel regions {u >= lambda} it rebuilds the curve as a
restricted biconjugate, a supremum of affine functions with slopes
confined to the region.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grids import (
    ConvexGridFunction,
    Grid,
    GridFunction,
    NEG_INF,
    pointwise_shift,
)
from .legendre import (
    SlopeRegion,
    check_dual_contains_slopes,
    legendre,
    subgradient_range,
)


@dataclass(frozen=True, eq=False)
class TestCurve:
    """Sorted lambda samples with one convex grid function each."""

    lambdas: np.ndarray
    samples: tuple[ConvexGridFunction, ...]
    lambda_head: float
    lambda_c: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float).ravel()
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "samples", tuple(self.samples))
        if len(self.samples) != lam.size:
            raise DomainError("one sample per lambda required")
        if lam.size == 0:
            raise DomainError("empty test curve")
        if np.any(np.diff(lam) <= 0):
            raise DomainError("lambda grid must be strictly increasing")

    @property
    def grid(self) -> Grid:
        return self.samples[0].grid

    @property
    def head(self) -> ConvexGridFunction:
        return self.samples[0]

    def finite_flags(self) -> np.ndarray:
        return np.array([not s.is_identically_neg_inf for s in self.samples])

    @staticmethod
    def constant_cutoff(
        head: ConvexGridFunction, lambdas, lambda_c: float
    ) -> "TestCurve":
        """Curve equal to ``head`` up to lambda_c and -inf after."""
        lam = np.asarray(lambdas, dtype=float).ravel()
        samples = []
        for v in lam:
            if v <= lambda_c + 1e-12:
                samples.append(head)
            else:
                samples.append(
                    ConvexGridFunction.trusted(GridFunction.neg_inf(head.grid))
                )
        return TestCurve(lam, tuple(samples), lambda_head=lambda_c, lambda_c=lambda_c)


@dataclass(frozen=True)
class CurveDiagnostics:
    valid: bool
    issues: tuple[str, ...]
    witness: tuple | None  # (lambda, node multi-index) of first violation


def validate(
    tc: TestCurve,
    tol_concave: float = 1e-9,
    tol_monotone: float = 1e-12,
) -> CurveDiagnostics:
    """Check all TestCurve invariants; reports the first violating node."""
    issues: list[str] = []
    witness = None

    def note(msg, lam=None, node=None):
        nonlocal witness
        issues.append(msg)
        if witness is None and lam is not None:
            witness = (lam, node)

    grid = tc.grid
    for s in tc.samples:
        if s.grid != grid:
            note("samples live on different grids")
            return CurveDiagnostics(False, tuple(issues), witness)

    finite = tc.finite_flags()
    # finite exactly for lambda <= lambda_c
    for lam, fin in zip(tc.lambdas, finite):
        if fin and lam > tc.lambda_c + 1e-12:
            note(f"finite sample past lambda_c at lambda={lam:g}", lam)
        if not fin and lam <= tc.lambda_c - 1e-12:
            note(f"-inf sample at lambda={lam:g} <= lambda_c", lam)

    # mixed supports are not allowed within a sample
    for lam, s in zip(tc.lambdas, tc.samples):
        if not s.is_identically_neg_inf and not s.finite_mask.all():
            note(f"partially -inf sample at lambda={lam:g}", lam)

    # constant head
    head_idx = np.nonzero(tc.lambdas <= tc.lambda_head + 1e-12)[0]
    for i in head_idx:
        if not np.array_equal(tc.samples[i].values, tc.head.values):
            note(f"sample at lambda={tc.lambdas[i]:g} differs from head", tc.lambdas[i])

    # node-wise decreasing in lambda
    for i in range(len(tc.samples) - 1):
        a, b = tc.samples[i], tc.samples[i + 1]
        if b.is_identically_neg_inf:
            continue
        dev = b.values - a.values
        j = int(np.argmax(dev))
        if dev.ravel()[j] > tol_monotone:
            note(
                f"curve increases in lambda between {tc.lambdas[i]:g} and "
                f"{tc.lambdas[i + 1]:g}",
                tc.lambdas[i + 1],
                np.unravel_index(j, grid.shape),
            )

    # concavity in lambda: interior samples above the chord of their neighbors
    fin_idx = np.nonzero(finite)[0]
    for a, b, c in zip(fin_idx, fin_idx[1:], fin_idx[2:]):
        la, lb, lc = tc.lambdas[a], tc.lambdas[b], tc.lambdas[c]
        w = (lb - la) / (lc - la)
        chord = (1 - w) * tc.samples[a].values + w * tc.samples[c].values
        dev = chord - tc.samples[b].values
        j = int(np.argmax(dev))
        if dev.ravel()[j] > tol_concave:
            note(
                f"concavity in lambda fails at lambda={lb:g} "
                f"(deviation {dev.ravel()[j]:g})",
                lb,
                np.unravel_index(j, grid.shape),
            )

    return CurveDiagnostics(len(issues) == 0, tuple(issues), witness)


@dataclass(frozen=True, eq=False)
class ConcaveTransform:
    """u(y) = sup{lambda : y in Delta of the lambda-sample}, -inf off base."""

    u: GridFunction
    base: SlopeRegion

    def __post_init__(self):
        if self.u.grid != self.base.grid:
            raise DomainError("u and base live on different dual grids")


def concave_transform(
    tc: TestCurve, dual: Grid, validate_tol: float | None = None
) -> ConcaveTransform:
    """Largest sample lambda whose slope region still contains each dual node."""
    if validate_tol is not None:
        diag = validate(tc, tol_concave=validate_tol)
        if not diag.valid:
            raise DomainError(f"invalid test curve: {diag.issues[0]}")
    u = np.full(dual.shape, NEG_INF)
    base = None
    for lam, s in zip(tc.lambdas, tc.samples):
        if s.is_identically_neg_inf:
            continue
        region = subgradient_range(s, dual)
        if base is None:
            base = region
        u[region.mask] = lam
    if base is None:
        raise DomainError("test curve has no finite samples")
    return ConcaveTransform(GridFunction(dual, u), base)


def envelope_from_u(
    phi: ConvexGridFunction,
    u: ConcaveTransform,
    lambdas,
    dual: Grid,
    lambda_head: float | None = None,
) -> TestCurve:
    """Maximal-envelope curve of phi with slopes confined to {u >= lambda}.

    phi_lambda(x) = max over dual nodes y with u(y) >= lambda of
    <x,y> - phi*(y); empty selections give -inf samples.
    """
    check_dual_contains_slopes(phi, dual)
    lam = np.asarray(lambdas, dtype=float).ravel()
    phistar = legendre(phi, dual)
    coords_primal = phi.grid.coords()
    coords_dual = dual.coords()
    uvals = u.u.values.ravel()
    base = u.base.mask.ravel()
    star = phistar.values.ravel()
    samples = []
    lambda_c = None
    for l in lam:
        sel = base & np.isfinite(uvals) & (uvals >= l - 1e-12)
        if not sel.any():
            samples.append(ConvexGridFunction.trusted(GridFunction.neg_inf(phi.grid)))
            continue
        lambda_c = l
        y = coords_dual[sel]
        c = star[sel]
        vals = np.empty(phi.grid.num_nodes)
        chunk = max(1, (1 << 24) // max(1, y.shape[0]))
        for s in range(0, coords_primal.shape[0], chunk):
            block = coords_primal[s : s + chunk]
            vals[s : s + chunk] = (block @ y.T - c).max(axis=1)
        samples.append(
            ConvexGridFunction.trusted(GridFunction(phi.grid, vals.reshape(phi.grid.shape)))
        )
    if lambda_c is None:
        raise DomainError("every lambda selection is empty")
    if lambda_head is None:
        lambda_head = float(lam[0])
    return TestCurve(lam, tuple(samples), lambda_head=lambda_head, lambda_c=lambda_c)


def maximal_envelope(
    phi: ConvexGridFunction, tc: TestCurve, dual: Grid
) -> TestCurve:
    """Envelope curve of phi driven by the concave transform of tc."""
    u = concave_transform(tc, dual)
    return envelope_from_u(phi, u, tc.lambdas, dual, lambda_head=tc.lambda_head)


def default_contact_tol(phi: ConvexGridFunction) -> float:
    """10 h (slope bound): the contact set needs a band on grids."""
    h = max(phi.grid.spacing)
    slope = max(
        float(np.abs(np.diff(phi.values, axis=ax)).max()) / phi.grid.spacing[ax]
        for ax in range(phi.grid.dim)
    )
    return 10.0 * h * max(slope, 1.0)


def contact_set(
    phi: ConvexGridFunction,
    phi_lambda: GridFunction,
    tol: float | None = None,
) -> np.ndarray:
    """Nodes where the envelope touches the obstacle: phi_lambda >= phi - tol."""
    if phi_lambda.grid != phi.grid:
        raise DomainError("grid mismatch")
    if tol is None:
        tol = default_contact_tol(phi)
    if phi_lambda.is_identically_neg_inf:
        return np.zeros(phi.grid.shape, dtype=bool)
    return phi_lambda.values >= phi.values - tol


def idempotence_check(
    phi: ConvexGridFunction, tc: TestCurve, dual: Grid
) -> float:
    """Sup-norm drift of the envelope construction applied to its own output."""
    c1 = maximal_envelope(phi, tc, dual)
    c2 = maximal_envelope(phi, c1, dual)
    worst = 0.0
    for lam, a, b in zip(c1.lambdas, c1.samples, c2.samples):
        if lam >= c1.lambda_c:
            continue
        if a.is_identically_neg_inf and b.is_identically_neg_inf:
            continue
        if a.is_identically_neg_inf != b.is_identically_neg_inf:
            return float("inf")
        worst = max(worst, float(np.abs(a.values - b.values).max()))
    return worst
