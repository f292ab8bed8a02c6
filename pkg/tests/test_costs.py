import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maintseg.costs import CostCache, SegmentCost, cost, cost_from_label, rbf_bandwidth_median


class TestCostValues:
    def test_l2_constant_segment_is_zero(self):
        assert cost(np.full(6, 3.3), 0, 6, SegmentCost("l2")) == pytest.approx(0.0, abs=1e-12)

    def test_l2_hand_value(self):
        # mean 2, sum (x-2)^2 = 4 * 4
        assert cost(np.array([0.0, 0.0, 4.0, 4.0]), 0, 4, SegmentCost("l2")) == pytest.approx(16.0)

    def test_l1_hand_value(self):
        # median 1, sum |x - 1| = 1 + 0 + 0 + 9
        x = np.array([0.0, 1.0, 1.0, 10.0])
        assert cost(x, 0, 4, SegmentCost("l1")) == pytest.approx(10.0)

    def test_rbf_single_point_is_zero(self):
        assert cost(np.array([2.5]), 0, 1, SegmentCost("rbf", gamma=1.0)) == pytest.approx(0.0)

    def test_rbf_hand_value(self):
        # two points at distance 2, gamma=1: 2 - (2 + 2 e^-4)/2
        x = np.array([0.0, 2.0])
        expected = 2.0 - (2.0 + 2.0 * np.exp(-4.0)) / 2.0
        assert cost(x, 0, 2, SegmentCost("rbf", gamma=1.0)) == pytest.approx(expected, abs=1e-12)

    def test_normal_matches_direct_formula(self, rng):
        x = rng.normal(size=(12, 3))
        spec = SegmentCost("normal", eps=1e-6)
        got = cost(x, 2, 10, spec)
        seg = x[2:10]
        cov = np.cov(seg.T, bias=True) + 1e-6 * np.eye(3)
        expected = 8 * np.log(np.linalg.det(cov))
        assert got == pytest.approx(expected, rel=1e-9)

    def test_invalid_segments_rejected(self):
        x = np.zeros(5)
        cache = CostCache(x, SegmentCost("l2"))
        for a, b in [(2, 2), (3, 1), (-1, 2), (0, 6)]:
            with pytest.raises(ValueError):
                cache.value(a, b)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SegmentCost("huber")
        with pytest.raises(ValueError):
            SegmentCost("rbf", gamma=0.0)
        with pytest.raises(ValueError):
            SegmentCost("normal", eps=0.0)

    def test_label_round_trip(self):
        for spec in (SegmentCost("l2"), SegmentCost("l1"), SegmentCost("normal"),
                     SegmentCost("rbf"), SegmentCost("rbf", gamma=0.25)):
            assert cost_from_label(spec.label) == spec


class TestBandwidthHeuristic:
    def test_two_points_distance_two(self):
        assert rbf_bandwidth_median(np.array([0.0, 2.0])) == pytest.approx(0.25)

    def test_identical_points_fall_back_to_one(self):
        assert rbf_bandwidth_median(np.full(10, 7.0)) == 1.0

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            rbf_bandwidth_median(np.array([1.0]))

    @given(st.integers(2, 60), st.integers(0, 10_000))
    @settings(max_examples=40)
    def test_always_positive(self, n, seed):
        x = np.random.default_rng(seed).normal(size=n)
        assert rbf_bandwidth_median(x) > 0


class TestCacheAgreesWithDirectEvaluation:
    """The O(1) cached queries are checked against freshly computed costs."""

    @pytest.mark.parametrize("kind", ["l1", "l2", "normal", "rbf"])
    def test_random_segments(self, kind, rng):
        x = rng.normal(size=(40, 2))
        spec = SegmentCost(kind, gamma=0.5 if kind == "rbf" else None)
        cache = CostCache(x, spec)
        for _ in range(50):
            a = int(rng.integers(0, 39))
            b = int(rng.integers(a + 1, 41))
            direct = _direct_cost(x, a, b, spec)
            assert cache.value(a, b) == pytest.approx(direct, rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("kind", ["l2", "rbf"])
    def test_vectorized_matches_scalar(self, kind, rng):
        x = rng.normal(size=(30, 3))
        cache = CostCache(x, SegmentCost(kind))
        starts = np.arange(0, 25)
        vals = cache.values(starts, 28)
        for s, v in zip(starts, vals):
            assert v == pytest.approx(cache.value(int(s), 28), rel=1e-12)


def _direct_cost(x, a, b, spec):
    seg = x[a:b]
    if spec.kind == "l2":
        return float(((seg - seg.mean(axis=0)) ** 2).sum())
    if spec.kind == "l1":
        return float(np.abs(seg - np.median(seg, axis=0)).sum())
    if spec.kind == "normal":
        cov = np.cov(seg.T, bias=True).reshape(seg.shape[1], seg.shape[1])
        return float(len(seg) * np.log(np.linalg.det(cov + spec.eps * np.eye(seg.shape[1]))))
    gamma = spec.gamma
    d2 = ((seg[:, None, :] - seg[None, :, :]) ** 2).sum(axis=2)
    gram = np.exp(-gamma * d2)
    return float(len(seg) - gram.sum() / len(seg))


class TestCostProperties:
    @pytest.mark.parametrize("kind", ["l2", "rbf"])
    def test_splitting_never_increases_cost(self, kind, rng):
        # the additivity bound that makes penalized segmentation meaningful
        spec = SegmentCost(kind)
        for _ in range(30):
            x = rng.normal(size=(int(rng.integers(4, 30)), int(rng.integers(1, 4))))
            cache = CostCache(x, spec)
            n = x.shape[0]
            a = int(rng.integers(0, n - 2))
            b = int(rng.integers(a + 2, n + 1))
            m = int(rng.integers(a + 1, b))
            assert cache.value(a, m) + cache.value(m, b) <= cache.value(a, b) + 1e-9

    @pytest.mark.parametrize("kind", ["l1", "l2", "normal", "rbf"])
    def test_order_reversal_invariance(self, kind, rng):
        x = rng.normal(size=(15, 2))
        spec = SegmentCost(kind, gamma=1.0 if kind == "rbf" else None)
        forward = cost(x, 3, 12, spec)
        backward = cost(x[::-1], 15 - 12, 15 - 3, spec)
        assert forward == pytest.approx(backward, rel=1e-9)
