import math

import numpy as np
import pytest

from georay.errors import DomainError, ResourceError
from georay.filtration import (
    BergmanInstance,
    WeightedLatticeData,
    bergman_metric,
    concave_transform_g,
    equivalence_check,
    extremal_metric,
    limit_curve,
    log_sum_exp_sandwich_gap,
    moment_check,
    multiplicative_closure,
    phong_sturm_ray,
    weight_histogram,
)
from georay.grids import NEG_INF
from georay.instances import filtration_base
from georay.legendre import default_dual_grid


@pytest.fixture(scope="module")
def w01():
    """P1 = {0, 1} with weights (0, 1): the standard degeneration."""
    return WeightedLatticeData(np.array([[0], [1]]), np.array([0, 1]))


@pytest.fixture(scope="module")
def base_inst():
    phi = filtration_base(129)
    return BergmanInstance(phi, default_dual_grid(phi, 129))


def closure_oracle(points, weights, k):
    """Exhaustive max over all k-fold decompositions."""
    best = {}
    stack = [(tuple(np.zeros(points.shape[1], dtype=int)), 0, 0)]
    # brute-force recursion over ordered sums of k points
    def rec(acc, w, depth):
        if depth == k:
            key = tuple(acc)
            if key not in best or w > best[key]:
                best[key] = w
            return
        for p, pw in zip(points, weights):
            rec(acc + p, w + pw, depth + 1)

    rec(np.zeros(points.shape[1], dtype=int), 0, 0)
    return best


class TestClosure:
    def test_w01_linear_weights(self, w01):
        # lambda_k(j) = j for j = 0..k: take j copies of the point 1
        for k in (2, 4, 8):
            arr = w01.closure(k)
            assert np.array_equal(arr, np.arange(k + 1, dtype=float))

    def test_matches_exhaustive_oracle(self):
        pts = np.array([[0], [1], [2]])
        ws = np.array([1, 0, 2])
        data = WeightedLatticeData(pts, ws)
        for k in (2, 3):
            arr = data.closure(k)
            oracle = closure_oracle(pts, ws, k)
            for idx, val in enumerate(arr):
                key = (idx + int(k * pts.min()),)
                assert val == oracle.get(key, NEG_INF)

    def test_2d_closure(self):
        pts = np.array([[0, 0], [1, 0], [0, 1]])
        ws = np.array([0, 1, 2])
        data = WeightedLatticeData(pts, ws)
        arr = data.closure(2)
        oracle = closure_oracle(pts, ws, 2)
        it = np.ndindex(arr.shape)
        for idx in it:
            assert arr[idx] == oracle.get(tuple(np.array(idx)), NEG_INF)

    def test_superadditive(self, w01):
        # lambda_{j+k}(a+b) >= lambda_j(a) + lambda_k(b)
        a2 = w01.closure(2)
        a3 = w01.closure(3)
        a5 = w01.closure(5)
        for i in range(3):
            for j in range(4):
                assert a5[i + j] >= a2[i] + a3[j] - 1e-12

    def test_size_cap(self, w01):
        with pytest.raises(ResourceError):
            multiplicative_closure(w01, 10**7)


class TestHistogram:
    def test_w01_counts(self, w01):
        vals, counts, cum = weight_histogram(w01, 8)
        assert np.array_equal(vals, np.arange(8, -1, -1))
        assert (counts == 1).all()
        assert np.array_equal(cum, np.arange(1, 10))

    def test_cumulative_identity_random(self):
        data = WeightedLatticeData(np.array([[0], [1], [3]]), np.array([2, -1, 1]))
        vals, counts, cum = weight_histogram(data, 5)
        assert np.array_equal(np.cumsum(counts), cum)
        assert (np.diff(vals) < 0).all()


class TestSandwich:
    def test_exact_bound_every_lambda(self, base_inst, w01):
        for k in (4, 8, 16):
            for lam in (-np.inf, 0.25, 0.5):
                low, high = log_sum_exp_sandwich_gap(base_inst, w01, k, lam)
                assert low <= 1e-12
                assert high <= 1e-12

    def test_bergman_above_extremal(self, base_inst, w01):
        for lam in (0.0, 0.5):
            ext = extremal_metric(base_inst, w01, 8, lam)
            berg = bergman_metric(base_inst, w01, 8, lam)
            assert (berg.values >= ext.values - 1e-12).all()


class TestLimitCurveAndRay:
    def test_limit_curve_lambda_c(self, base_inst, w01):
        tc = limit_curve(base_inst, w01, [4, 8])
        assert tc.lambda_c == pytest.approx(1.0)

    def test_gap_decreases(self, base_inst, w01):
        ts = np.linspace(0.0, 1.0, 6)
        k_list = [4, 8, 16, 32]
        g4 = equivalence_check(base_inst, w01, 4, ts, k_list).max()
        g32 = equivalence_check(base_inst, w01, 32, ts, k_list).max()
        assert g32 < g4

    def test_trivial_weights_constant_in_t(self, base_inst):
        data = WeightedLatticeData(np.array([[0], [1]]), np.array([0, 0]))
        ray = phong_sturm_ray(base_inst, data, 8)
        first = ray.frames[0].values
        for fr in ray.frames[1:]:
            assert np.array_equal(fr.values, first)

    def test_uniform_weights_translate(self, base_inst):
        # weights identically c*k shift the ray by c*t
        data = WeightedLatticeData(np.array([[0], [1]]), np.array([2, 2]))
        ray = phong_sturm_ray(base_inst, data, 8)
        base = ray.frames[0].values
        for t, fr in zip(ray.t_grid, ray.frames):
            assert np.abs(fr.values - (base + 2 * t)).max() <= 1e-10


class TestConcaveTransformG:
    def test_w01_is_identity_on_01(self, w01):
        g = concave_transform_g(w01, 16)
        xs = np.linspace(0.0, 1.0, 11)
        assert np.abs(g(xs[:, None]) - xs).max() <= 1e-9

    def test_max_value(self, w01):
        g = concave_transform_g(w01, 8)
        assert g.max_value == pytest.approx(1.0)

    def test_moment_closed_forms(self, w01):
        k = 32
        g = concave_transform_g(w01, k)
        lhs1, rhs1 = moment_check(g, w01, k, 1)
        # sum_{j=0}^{k} (j/k) / k = (k+1)/(2k)
        assert lhs1 == pytest.approx((k + 1) / (2 * k))
        assert rhs1 == pytest.approx(0.5, abs=1e-6)
        lhs2, rhs2 = moment_check(g, w01, k, 2)
        assert lhs2 == pytest.approx((k + 1) * (2 * k + 1) / (6 * k * k))
        assert rhs2 == pytest.approx(1 / 3, abs=1e-6)
        assert abs(lhs1 - rhs1) <= 1 / k
        assert abs(lhs2 - rhs2) <= 2 / k

    def test_rejects_high_moment(self, w01):
        g = concave_transform_g(w01, 8)
        with pytest.raises(DomainError):
            moment_check(g, w01, 8, 3)
