"""Segment cost functions used by the penalized segmentation detectors.

Costs are functions of a contiguous segment [a, b) of an (n, d) signal:

* ``l2``     sum of squared deviations from the segment mean,
* ``l1``     sum of absolute deviations from the coordinate-wise median,
* ``normal`` (b-a) * log det(empirical covariance + eps*I),
* ``rbf``    (b-a) - (1/(b-a)) * sum of the segment's RBF Gram entries.

For l2, rbf and normal a :class:`CostCache` answers each segment query in
O(1)/O(d^2) after an O(n)/O(n^2) precompute, which is what keeps the
dynamic programs tractable. All evaluators are invocation-local, never
shared between detector calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SegmentCost", "CostCache", "cost", "cost_from_label", "rbf_bandwidth_median"]

COST_KINDS = ("l1", "l2", "normal", "rbf")


@dataclass(frozen=True)
class SegmentCost:
    """A fully specified cost function.

    gamma is the RBF bandwidth; None selects the median heuristic per
    signal. eps regularizes the covariance diagonal of the normal cost
    (low-activity segments are exactly singular without it).
    """

    kind: str = "l2"
    gamma: float | None = None
    eps: float = 1e-6

    def __post_init__(self) -> None:
        if self.kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}, expected one of {COST_KINDS}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("rbf bandwidth gamma must be > 0 when fixed")
        if self.eps <= 0:
            raise ValueError("covariance regularization eps must be > 0")

    @property
    def label(self) -> str:
        if self.kind == "rbf" and self.gamma is not None:
            return f"rbf:{self.gamma!r}"
        return self.kind


def cost_from_label(label: str) -> SegmentCost:
    """Inverse of :attr:`SegmentCost.label`, e.g. "l2" or "rbf:0.1"."""
    if label.startswith("rbf:"):
        return SegmentCost("rbf", gamma=float(label[4:]))
    return SegmentCost(label)


def rbf_bandwidth_median(signal: np.ndarray) -> float:
    """Median-heuristic bandwidth: 1 / median pairwise squared distance.

    Distances are taken over an evenly spaced subsample capped at 1000
    points so the heuristic stays cheap and deterministic. A zero median
    (all points identical) falls back to gamma = 1.
    """
    x = _as_matrix(signal)
    n = x.shape[0]
    if n < 2:
        raise ValueError("median heuristic needs at least 2 samples")
    if n > 1000:
        idx = np.linspace(0, n - 1, 1000).astype(int)
        x = x[idx]
        n = x.shape[0]
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    med = float(np.median(d2[np.triu_indices(n, k=1)]))
    if med <= 0.0:
        return 1.0
    return 1.0 / med


def _as_matrix(signal: np.ndarray) -> np.ndarray:
    x = np.asarray(signal, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"signal must be 1-D or 2-D, got shape {x.shape}")
    return x


class CostCache:
    """Per-signal cache answering segment cost queries.

    ``value(a, b)`` returns the cost of segment [a, b); ``values(starts, b)``
    evaluates several start indices against one end, vectorized for l2 and
    rbf. Gram/prefix tables are built lazily on first use.
    """

    def __init__(self, signal: np.ndarray, spec: SegmentCost | None = None):
        self.signal = _as_matrix(signal)
        self.spec = spec or SegmentCost()
        self.n = self.signal.shape[0]
        self._d = self.signal.shape[1]
        kind = self.spec.kind
        if kind == "l2":
            x = self.signal
            self._s1 = np.vstack([np.zeros((1, self._d)), np.cumsum(x, axis=0)])
            self._s2 = np.concatenate([[0.0], np.cumsum(np.sum(x * x, axis=1))])
        elif kind == "rbf":
            gamma = self.spec.gamma
            if gamma is None:
                gamma = rbf_bandwidth_median(self.signal) if self.n >= 2 else 1.0
            self.gamma = gamma
            x = self.signal
            sq = np.sum(x * x, axis=1)
            d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
            gram = np.exp(-gamma * d2)
            # 2-D prefix sums: _p[i, j] = sum of gram[:i, :j]
            self._p = np.zeros((self.n + 1, self.n + 1))
            self._p[1:, 1:] = gram.cumsum(axis=0).cumsum(axis=1)
        elif kind == "normal":
            x = self.signal
            self._s1 = np.vstack([np.zeros((1, self._d)), np.cumsum(x, axis=0)])
            outer = x[:, :, None] * x[:, None, :]
            self._sxx = np.concatenate(
                [np.zeros((1, self._d, self._d)), np.cumsum(outer, axis=0)]
            )

    def _check(self, a: int, b: int) -> None:
        if not 0 <= a < b <= self.n:
            raise ValueError(f"invalid segment [{a}, {b}) for signal of length {self.n}")

    def value(self, a: int, b: int) -> float:
        self._check(a, b)
        kind = self.spec.kind
        if kind == "l2":
            return float(self._l2(np.array([a]), b)[0])
        if kind == "rbf":
            return float(self._rbf(np.array([a]), b)[0])
        if kind == "normal":
            return self._normal(a, b)
        return self._l1(a, b)

    def values(self, starts: np.ndarray, b: int) -> np.ndarray:
        starts = np.asarray(starts, dtype=int)
        if starts.size == 0:
            return np.empty(0)
        if starts.min() < 0 or starts.max() >= b or b > self.n:
            raise ValueError("invalid segment starts")
        kind = self.spec.kind
        if kind == "l2":
            return self._l2(starts, b)
        if kind == "rbf":
            return self._rbf(starts, b)
        return np.array([self.value(int(a), b) for a in starts])

    def _l2(self, starts: np.ndarray, b: int) -> np.ndarray:
        length = (b - starts).astype(float)
        seg_sum = self._s1[b] - self._s1[starts]
        seg_sq = self._s2[b] - self._s2[starts]
        out = seg_sq - np.sum(seg_sum * seg_sum, axis=1) / length
        return np.maximum(out, 0.0)

    def _rbf(self, starts: np.ndarray, b: int) -> np.ndarray:
        length = (b - starts).astype(float)
        p = self._p
        gram_sum = p[b, b] - p[starts, b] - p[b, starts] + p[starts, starts]
        return length - gram_sum / length

    def _normal(self, a: int, b: int) -> float:
        length = b - a
        mean = (self._s1[b] - self._s1[a]) / length
        cov = (self._sxx[b] - self._sxx[a]) / length - np.outer(mean, mean)
        cov = cov + self.spec.eps * np.eye(self._d)
        sign, logdet = np.linalg.slogdet(cov)
        if sign <= 0:
            # eps keeps this from happening except for severe cancellation
            logdet = np.log(self.spec.eps) * self._d
        return float(length * logdet)

    def _l1(self, a: int, b: int) -> float:
        seg = self.signal[a:b]
        med = np.median(seg, axis=0)
        return float(np.abs(seg - med).sum())


def cost(signal: np.ndarray, a: int, b: int, spec: SegmentCost | None = None) -> float:
    """One-shot cost of segment [a, b); see :class:`CostCache` for batches."""
    return CostCache(signal, spec).value(a, b)
