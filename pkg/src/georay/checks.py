"""Self-contained verification suite: each check returns a small record.

Every check builds its own instances, measures one quantity, and compares
it against a fixed bound (scaled by ``tol_scale``).  The record format is::

    {"name": ..., "measured": float, "bound": float, "passed": bool,
     "seconds": float, "limit_seconds": float}

Suites group the checks: ``core`` (transform correctness), ``envelopes``
(measures, energies, contact), ``rays`` (duality and linearity),
``filtration`` (Bergman metrics and moments), ``all``.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .curves import contact_set, maximal_envelope
from .filtration import (
    BergmanInstance,
    WeightedLatticeData,
    equivalence_check,
    log_sum_exp_sandwich_gap,
    phong_sturm_ray,
)
from .grids import Box, ConvexGridFunction, Grid, GridFunction, lower_convex_envelope
from .instances import (
    abs_1d,
    constant_u_instance,
    filtration_base,
    huber_instance,
    quadratic_1d,
    quadratic_2d,
    random_convex_1d,
    random_nonconvex_1d,
)
from .legendre import biconjugate, default_dual_grid, legendre, subgradient_range
from .monge_ampere import (
    _energy_dual_grid,
    energy_dual,
    energy_quadrature,
    ma_measure,
    total_mass_identity_check,
)
from .rays import compare_rays, energy_linearity, ray_dual, ray_from_curve

_SEED = 20240817


def _record(name, measured, bound, seconds, limit):
    return {
        "name": name,
        "measured": float(measured),
        "bound": float(bound),
        "passed": bool(measured <= bound),
        "seconds": round(float(seconds), 6),
        "limit_seconds": float(limit),
    }


def check_involution(tol_scale: float = 1.0) -> dict:
    """Biconjugation restores convex data and convexifies the rest."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(_SEED)
    worst = 0.0
    bound = math.inf
    for _ in range(20):
        f = random_convex_1d(rng, nodes=257)
        dual = default_dual_grid(f)
        bound = min(bound, 2.0 * f.grid.box.diameter * dual.spacing[0])
        err = float(np.abs(biconjugate(f, dual).values - f.values).max())
        worst = max(worst, err)
    for _ in range(20):
        f = random_nonconvex_1d(rng, nodes=257)
        dual = default_dual_grid(f)
        env = lower_convex_envelope(f)
        err = float(np.abs(biconjugate(f, dual).values - env.values).max())
        worst = max(worst, err)
    return _record(
        "legendre_involution", worst, bound * tol_scale, time.perf_counter() - t0, 2.0
    )


def check_fast_vs_brute(tol_scale: float = 1.0) -> dict:
    """Fast separable transform matches brute force exactly, witnesses too."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(_SEED + 1)
    worst = 0.0
    for _ in range(10):
        f = random_nonconvex_1d(rng, nodes=513)
        dual = default_dual_grid(f)
        vf, wf = legendre(f, dual, method="fast", return_witness=True)
        vb, wb = legendre(f, dual, method="brute", return_witness=True)
        worst = max(worst, float(np.abs(vf.values - vb.values).max()))
        worst = max(worst, float(np.abs(wf - wb).max()))
    g2 = quadratic_2d(65).grid
    for _ in range(10):
        f = GridFunction(g2, rng.uniform(-1.0, 1.0, g2.shape))
        dual = default_dual_grid(f)
        vf, wf = legendre(f, dual, method="fast", return_witness=True)
        vb, wb = legendre(f, dual, method="brute", return_witness=True)
        worst = max(worst, float(np.abs(vf.values - vb.values).max()))
        worst = max(worst, float(np.abs(wf - wb).max()))
    return _record("fast_vs_brute", worst, 0.0, time.perf_counter() - t0, 5.0)


def check_total_mass(tol_scale: float = 1.0) -> dict:
    """MA total mass equals the volume of the subgradient set."""
    t0 = time.perf_counter()
    ratios = []
    for f in (quadratic_1d(257), abs_1d(257)):
        dual = default_dual_grid(f, 257)
        resid = total_mass_identity_check(f, dual)
        ratios.append(resid / (2.0 * dual.cell_volume))
    f2 = quadratic_2d(129)
    dual2 = default_dual_grid(f2)
    resid2 = total_mass_identity_check(f2, dual2)
    vol2 = subgradient_range(f2, dual2).volume
    ratios.append((resid2 / vol2) / 0.05)
    return _record(
        "ma_total_mass", max(ratios), 1.0 * tol_scale, time.perf_counter() - t0, 5.0
    )


def check_energy_dual(tol_scale: float = 1.0) -> dict:
    """Quadrature energy agrees with the dual-side formula."""
    t0 = time.perf_counter()
    f0 = quadratic_1d(257)
    f1 = ConvexGridFunction.trusted(
        GridFunction(f0.grid, f0.values + 0.25 * (1.0 - f0.grid.axis(0) ** 2))
    )
    eq = energy_quadrature(f1, f0, t_samples=11).value
    ed = energy_dual(f1, f0).value
    rel = abs(eq - ed) / max(abs(eq), abs(ed), 1e-30)
    return _record(
        "energy_dual_vs_quadrature", rel, 1e-2 * tol_scale, time.perf_counter() - t0, 2.0
    )


def check_cocycle(tol_scale: float = 1.0) -> dict:
    """E(f2,f0) = E(f2,f1) + E(f1,f0) on random equivalent triples."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(_SEED + 2)
    worst = 0.0
    for _ in range(10):
        f0 = random_convex_1d(rng, nodes=129, pin_end_slopes=True)
        f1 = random_convex_1d(rng, nodes=129, pin_end_slopes=True)
        f2 = random_convex_1d(rng, nodes=129, pin_end_slopes=True)
        dual = _energy_dual_grid(f0)
        e20 = energy_quadrature(f2, f0, dual=dual).value
        e21 = energy_quadrature(f2, f1, dual=dual).value
        e10 = energy_quadrature(f1, f0, dual=dual).value
        scale = max(abs(e20), abs(e21), abs(e10), 1e-30)
        worst = max(worst, abs(e20 - e21 - e10) / scale)
    return _record(
        "energy_cocycle", worst, 5e-2 * tol_scale, time.perf_counter() - t0, 5.0
    )


def check_contact_concentration(tol_scale: float = 1.0) -> dict:
    """MA mass of each envelope charges only the contact band."""
    t0 = time.perf_counter()
    inst = huber_instance()
    budget = 3.0 * inst.dual.cell_volume
    worst = 0.0
    for lam, s in zip(inst.curve.lambdas, inst.curve.samples):
        if lam >= inst.curve.lambda_c or s.is_identically_neg_inf:
            continue
        mu = ma_measure(s, inst.dual, region=subgradient_range(s, inst.dual))
        contact = contact_set(inst.phi, s)
        outside = float(mu.masses[~contact].sum())
        worst = max(worst, outside / budget)
    return _record(
        "contact_concentration", worst, 1.0 * tol_scale, time.perf_counter() - t0, 5.0
    )


def _hat_dual_gap(inst) -> float:
    hat = ray_from_curve(inst.curve)
    dual_ray = ray_dual(inst.phi, inst.u, hat.t_grid)
    gaps = compare_rays(hat, dual_ray)
    h = max(inst.phi.grid.spacing)
    hd = max(inst.dual.spacing)
    denom = (h + hd + inst.lambda_spacing) * (1.0 + hat.t_grid)
    return float((gaps / denom).max())


def check_ray_equality(tol_scale: float = 1.0) -> dict:
    """Envelope-supremum ray equals the conjugate-side ray; gap halves
    with the spacings."""
    t0 = time.perf_counter()
    coarse = huber_instance(nodes=129, dual_nodes=129, lambda_spacing=2.0**-5)
    fine = huber_instance(nodes=257, dual_nodes=257, lambda_spacing=2.0**-6)
    c_coarse = _hat_dual_gap(coarse)
    c_fine = _hat_dual_gap(fine)
    ratio = c_fine / max(c_coarse, 1e-30)
    # worst of: C <= 10 and the halving ratio inside [0.7, 1.3] of itself
    measured = max(c_coarse / 10.0, c_fine / 10.0, abs(ratio - 1.0) / 0.3)
    return _record(
        "ray_equality", measured, 1.0 * tol_scale, time.perf_counter() - t0, 10.0
    )


def check_energy_linearity(tol_scale: float = 1.0) -> dict:
    """Energy along the ray is linear in t with the Stieltjes slope."""
    t0 = time.perf_counter()
    worst = 0.0
    for inst in (
        constant_u_instance(),
        huber_instance(nodes=257, dual_nodes=257, lambda_spacing=2.0**-6),
    ):
        ray = ray_from_curve(inst.curve)
        rep = energy_linearity(ray, inst.phi)
        worst = max(worst, rep.max_abs_residual / (1e-2 * abs(rep.slope)))
        worst = max(
            worst, abs(rep.slope - rep.predicted_slope) / (0.02 * abs(rep.predicted_slope))
        )
    return _record(
        "energy_linearity", worst, 1.0 * tol_scale, time.perf_counter() - t0, 10.0
    )


def _standard_filtration():
    return WeightedLatticeData(np.array([[0], [1]]), np.array([0, 1]))


def _filtration_instances():
    yield _standard_filtration(), 8
    yield WeightedLatticeData(np.array([[0], [1]]), np.array([0, 0])), 8
    yield WeightedLatticeData(np.array([[0], [1], [2]]), np.array([1, 0, 2])), 6


def check_lse_sandwich(tol_scale: float = 1.0) -> dict:
    """max e_i <= (1/k) log-sum-exp <= max e_i + ln|I|/k, node-wise."""
    t0 = time.perf_counter()
    phi = filtration_base(129)
    # dual box wide enough for every instance's normalized lattice points
    dual = Grid(Box((-0.5,), (2.5,)), (129,))
    worst = -math.inf
    for data, k in _filtration_instances():
        inst = BergmanInstance(phi, dual)
        low, high = log_sum_exp_sandwich_gap(inst, data, k)
        worst = max(worst, low, high)
    return _record(
        "lse_sandwich", worst, 1e-12 * tol_scale, time.perf_counter() - t0, 1.0
    )


def check_phong_sturm(tol_scale: float = 1.0) -> dict:
    """Bergman-type ray converges to the envelope ray as k grows."""
    t0 = time.perf_counter()
    phi = filtration_base(257)
    dual = default_dual_grid(phi, 257)
    inst = BergmanInstance(phi, dual)
    data = _standard_filtration()
    k_list = [4, 8, 16, 32]
    t_grid = np.linspace(0.0, 1.0, 11)
    h = max(phi.grid.spacing)
    hd = max(dual.spacing)
    lam_sp = 1.0 / max(k_list)
    gaps = {}
    worst = 0.0
    for k in k_list:
        g = equivalence_check(inst, data, k, t_grid, k_list)
        gaps[k] = float(g.max())
        bound = math.log(k + 1.0) / k + 10.0 * (h + hd + lam_sp) * (1.0 + t_grid)
        worst = max(worst, float((g / bound).max()))
    # the gap must actually shrink from k=4 to k=32
    worst = max(worst, gaps[32] / gaps[4])
    return _record(
        "phong_sturm_equivalence", worst, 1.0 * tol_scale, time.perf_counter() - t0, 20.0
    )


def check_trivial_configuration(tol_scale: float = 1.0) -> dict:
    """Constant weights give the translated base metric back."""
    t0 = time.perf_counter()
    phi = filtration_base(257)
    inst = BergmanInstance(phi, default_dual_grid(phi, 257))
    data = WeightedLatticeData(np.array([[0], [1]]), np.array([0, 0]))
    k = 16
    ray = phong_sturm_ray(inst, data, k)
    eta = 0.0
    drift = max(
        float(np.abs(fr.values - (phi.values + t * eta)).max())
        for t, fr in zip(ray.t_grid, ray.frames)
    )
    n_sections = data.reachable(k)[1].size
    bound = math.log(n_sections) / k + phi.grid.box.diameter / (2.0 * k)
    return _record(
        "trivial_configuration",
        drift,
        bound * tol_scale,
        time.perf_counter() - t0,
        2.0,
    )


def check_moments(tol_scale: float = 1.0) -> dict:
    """Normalized weight sums match the moments of the concave transform."""
    t0 = time.perf_counter()
    data = _standard_filtration()
    k = 32
    _, w = data.reachable(k)
    m1 = abs(float((w / k).sum()) / k - 0.5)
    m2 = abs(float(((w / k) ** 2).sum()) / k - 1.0 / 3.0)
    measured = max(m1 / (1.0 / k), m2 / (2.0 / k))
    return _record(
        "concave_transform_moments",
        measured,
        1.0 * tol_scale,
        time.perf_counter() - t0,
        1.0,
    )


_CHECKS = {
    "legendre_involution": check_involution,
    "fast_vs_brute": check_fast_vs_brute,
    "ma_total_mass": check_total_mass,
    "energy_dual_vs_quadrature": check_energy_dual,
    "energy_cocycle": check_cocycle,
    "contact_concentration": check_contact_concentration,
    "ray_equality": check_ray_equality,
    "energy_linearity": check_energy_linearity,
    "lse_sandwich": check_lse_sandwich,
    "phong_sturm_equivalence": check_phong_sturm,
    "trivial_configuration": check_trivial_configuration,
    "concave_transform_moments": check_moments,
}

SUITES = {
    "core": ["legendre_involution", "fast_vs_brute"],
    "envelopes": [
        "ma_total_mass",
        "energy_dual_vs_quadrature",
        "energy_cocycle",
        "contact_concentration",
    ],
    "rays": ["ray_equality", "energy_linearity"],
    "filtration": [
        "lse_sandwich",
        "phong_sturm_equivalence",
        "trivial_configuration",
        "concave_transform_moments",
    ],
}
SUITES["all"] = sum((SUITES[s] for s in ("core", "envelopes", "rays", "filtration")), [])


def run_suite(suite: str, tol_scale: float = 1.0) -> dict:
    """Run one named suite and return {"suite", "checks", "passed"}."""
    if suite not in SUITES:
        raise KeyError(suite)
    records = [_CHECKS[name](tol_scale) for name in SUITES[suite]]
    return {
        "suite": suite,
        "checks": records,
        "passed": all(r["passed"] for r in records),
    }
