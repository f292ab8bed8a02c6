"""The five change-point detection methods behind the streaming protocol.

Three penalized segmenters (exact pruned dynamic programming, greedy binary
splitting, bottom-up merging), a kernel variant of the exact one, and the
matrix-profile / arc-curve semantic segmentation with a threshold rule.

All detectors are deterministic: ties break toward the smallest index
everywhere, and identical inputs and configs give identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DEGENERATE_STD, Window, znormalize
from .costs import CostCache, SegmentCost, cost_from_label

__all__ = [
    "METHODS",
    "CHANNEL_RULES",
    "DetectorConfig",
    "Segmentation",
    "pelt",
    "binseg",
    "bottomup",
    "kcpd",
    "matrix_profile",
    "fluss_cac",
    "fluss_alert",
    "detect",
    "detect_with_score",
]

METHODS = ("PELT", "BINSEG", "BOTTOMUP", "KCPD", "FLUSS")
SEGMENTATION_METHODS = ("PELT", "BINSEG", "BOTTOMUP", "KCPD")
CHANNEL_RULES = ("any", "sum")

_UNSET = "-"


@dataclass(frozen=True)
class Segmentation:
    """Interior breakpoints (exclusive of 0 and n) plus the penalized total cost."""

    breakpoints: tuple[int, ...]
    total_cost: float

    def __post_init__(self) -> None:
        bps = tuple(int(b) for b in self.breakpoints)
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)


@dataclass(frozen=True)
class DetectorConfig:
    """A fully specified detector.

    Exactly the fields relevant to the method are required: segmentation
    methods take a cost, a penalty and a minimum segment size; FLUSS takes
    a threshold, a subsequence length and a multivariate channel rule.
    """

    method: str
    cost: SegmentCost | None = None
    penalty: float | None = None
    threshold: float | None = None
    m: int | None = None
    min_size: int | None = None
    znorm: bool = False
    channel_rule: str | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.method == "FLUSS":
            if self.threshold is None or not 0.0 <= self.threshold < 1.0:
                raise ValueError("FLUSS needs a threshold in [0, 1)")
            if self.m is None or self.m < 3:
                raise ValueError("FLUSS needs a subsequence length m >= 3")
            rule = self.channel_rule or "any"
            if rule not in CHANNEL_RULES:
                raise ValueError(f"channel_rule must be one of {CHANNEL_RULES}")
            object.__setattr__(self, "channel_rule", rule)
            if self.cost is not None or self.penalty is not None or self.min_size is not None:
                raise ValueError("FLUSS takes no cost, penalty or min_size")
        else:
            if self.penalty is None or self.penalty < 0:
                raise ValueError(f"{self.method} needs a penalty >= 0")
            if self.threshold is not None or self.m is not None or self.channel_rule is not None:
                raise ValueError(f"{self.method} takes no threshold, m or channel_rule")
            cost = self.cost
            if self.method == "KCPD":
                cost = cost or SegmentCost("rbf")
                if cost.kind != "rbf":
                    raise ValueError("KCPD is defined for the rbf kernel cost only")
            else:
                cost = cost or SegmentCost("l2")
            object.__setattr__(self, "cost", cost)
            min_size = 2 if self.min_size is None else self.min_size
            if min_size < 1:
                raise ValueError("min_size must be >= 1")
            object.__setattr__(self, "min_size", min_size)

    @property
    def config_id(self) -> str:
        """Stable identifier "method/cost/penalty-or-threshold/min_size/m/znorm/rule"."""
        if self.method == "FLUSS":
            fields = (self.method, _UNSET, repr(float(self.threshold)), _UNSET,
                      str(self.m), str(int(self.znorm)), self.channel_rule)
        else:
            fields = (self.method, self.cost.label, repr(float(self.penalty)),
                      str(self.min_size), _UNSET, str(int(self.znorm)), _UNSET)
        return "/".join(fields)

    @classmethod
    def from_id(cls, config_id: str) -> "DetectorConfig":
        parts = config_id.split("/")
        if len(parts) != 7:
            raise ValueError(f"malformed config id {config_id!r}")
        method, cost_label, value, min_size, m, znorm, rule = parts
        znorm_flag = bool(int(znorm))
        if method == "FLUSS":
            return cls(method=method, threshold=float(value), m=int(m),
                       znorm=znorm_flag, channel_rule=rule)
        return cls(method=method, cost=cost_from_label(cost_label),
                   penalty=float(value), min_size=int(min_size), znorm=znorm_flag)


def _as_signal(signal: np.ndarray) -> np.ndarray:
    x = np.asarray(signal, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("signal must be a non-empty 1-D or 2-D array")
    return x


def pelt(signal: np.ndarray, cost: SegmentCost | None = None, penalty: float = 1.0,
         min_size: int = 1) -> Segmentation:
    """Exact minimizer of sum-of-segment-costs + penalty * (#breakpoints).

    Pruned dynamic program: a candidate start s is dropped once its partial
    cost exceeds the incumbent optimum plus the penalty, which never
    discards an optimal candidate for segment costs that do not increase
    under splitting.
    """
    if penalty < 0:
        raise ValueError("penalty must be >= 0")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    x = _as_signal(signal)
    n = x.shape[0]
    cache = CostCache(x, cost)
    if n < 2 * min_size:
        return Segmentation((), cache.value(0, n))

    # F[t] = optimal penalized cost of x[:t]; F[0] = -penalty so each segment
    # contributes +penalty and the total equals sum costs + penalty * breaks.
    F = np.full(n + 1, np.inf)
    F[0] = -penalty
    prev = np.zeros(n + 1, dtype=int)
    candidates = [0]
    for t in range(min_size, n + 1):
        starts = np.array([s for s in candidates if t - s >= min_size], dtype=int)
        vals = F[starts] + cache.values(starts, t) + penalty
        best = int(np.argmin(vals))  # first minimum -> smallest start on ties
        F[t] = vals[best]
        prev[t] = starts[best]
        keep = set(starts[vals <= F[t] + 2 * penalty])  # F[s]+C(s,t) <= F[t]+penalty
        candidates = [s for s in candidates if t - s < min_size or s in keep]
        if min_size <= t <= n - min_size:
            candidates.append(t)

    breakpoints: list[int] = []
    t = n
    while t > 0:
        s = int(prev[t])
        if s > 0:
            breakpoints.append(s)
        t = s
    breakpoints.reverse()
    return Segmentation(tuple(breakpoints), float(F[n]))


def binseg(signal: np.ndarray, cost: SegmentCost | None = None, penalty: float = 1.0,
           min_size: int = 1) -> Segmentation:
    """Greedy recursive splitting; a split is kept only if its gain exceeds the penalty."""
    if penalty < 0:
        raise ValueError("penalty must be >= 0")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    x = _as_signal(signal)
    n = x.shape[0]
    cache = CostCache(x, cost)
    breakpoints: list[int] = []
    pending = [(0, n)]
    while pending:
        a, b = pending.pop()
        if b - a < 2 * min_size:
            continue
        whole = cache.value(a, b)
        cuts = np.arange(a + min_size, b - min_size + 1)
        both = cache.values(cuts, b) + np.array([cache.value(a, int(c)) for c in cuts])
        best = int(np.argmin(both))  # smallest index on ties
        gain = whole - both[best]
        if gain > penalty:
            cut = int(cuts[best])
            breakpoints.append(cut)
            pending.append((a, cut))
            pending.append((cut, b))
    breakpoints.sort()
    total = _total_cost(cache, breakpoints, n, penalty)
    return Segmentation(tuple(breakpoints), total)


def bottomup(signal: np.ndarray, cost: SegmentCost | None = None, penalty: float = 1.0,
             min_size: int = 1) -> Segmentation:
    """Start from a dense breakpoint grid and merge the cheapest adjacent pair.

    Merging stops once every remaining merge would increase the cost
    strictly more than the penalty, so a penalty of zero keeps any grid
    whose merges all cost something.
    """
    if penalty < 0:
        raise ValueError("penalty must be >= 0")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    x = _as_signal(signal)
    n = x.shape[0]
    cache = CostCache(x, cost)
    bps = list(range(min_size, n, min_size))
    if bps and n - bps[-1] < min_size:
        bps.pop()

    def merge_delta(i: int) -> float:
        left = bps[i - 1] if i > 0 else 0
        right = bps[i + 1] if i + 1 < len(bps) else n
        b = bps[i]
        return cache.value(left, right) - cache.value(left, b) - cache.value(b, right)

    deltas = [merge_delta(i) for i in range(len(bps))]
    while bps:
        best = int(np.argmin(deltas))  # smallest breakpoint on ties
        if deltas[best] > penalty:
            break
        bps.pop(best)
        deltas.pop(best)
        # removing a breakpoint only changes its neighbors' merge costs
        for i in (best - 1, best):
            if 0 <= i < len(bps):
                deltas[i] = merge_delta(i)

    total = _total_cost(cache, bps, n, penalty)
    return Segmentation(tuple(bps), total)


def kcpd(signal: np.ndarray, penalty: float = 1.0, min_size: int = 1,
         kernel: SegmentCost | None = None) -> Segmentation:
    """Kernel change-point detection: the exact dynamic program over the rbf cost."""
    kernel = kernel or SegmentCost("rbf")
    if kernel.kind != "rbf":
        raise ValueError("kcpd is defined for the rbf kernel cost only")
    return pelt(signal, kernel, penalty, min_size)


def _total_cost(cache: CostCache, breakpoints: list[int], n: int, penalty: float) -> float:
    bounds = [0, *breakpoints, n]
    total = sum(cache.value(a, b) for a, b in zip(bounds, bounds[1:]))
    return float(total + penalty * len(breakpoints))


def matrix_profile(series: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Self-join matrix profile under z-normalized Euclidean distance.

    Returns (profile, index) of length n - m + 1 where profile[i] is the
    distance from subsequence i to its nearest neighbor outside the
    exclusion zone |i - j| <= ceil(m / 2), and index[i] is that neighbor
    (smallest index on ties). Subsequences with std below 1e-8 are treated
    as zero vectors after normalization. When n < m + 2*ceil(m/2) + 1 the
    middle subsequences have no admissible neighbor at all; their profile
    entries stay infinite.

    Computed with O(1)-updated sliding dot products along diagonals,
    O(n^2) overall.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if m < 2:
        raise ValueError("subsequence length m must be >= 2")
    excl = (m + 1) // 2  # ceil(m / 2)
    if n < m + excl + 1:
        raise ValueError(f"series of length {n} too short for m={m} "
                         f"(needs at least {m + excl + 1})")
    n_sub = n - m + 1

    # center the whole series (z-normalized distances are shift-invariant)
    # so the streaming dot products stay well conditioned, and take window
    # moments from a sliding view, which is exact where cumsums cancel.
    x = x - x.mean()
    windows = np.lib.stride_tricks.sliding_window_view(x, m)
    mu = windows.mean(axis=1)
    sigma = windows.std(axis=1)
    degen = sigma < DEGENERATE_STD

    profile = np.full(n_sub, np.inf)
    index = np.zeros(n_sub, dtype=int)
    sqrt_m = np.sqrt(m)

    for k in range(excl + 1, n_sub):
        # dot products of all subsequence pairs (i, i + k) in one cumsum
        prod = x[: n - k] * x[k:]
        cp = np.concatenate([[0.0], np.cumsum(prod)])
        qt = cp[m:] - cp[: n - k - m + 1]
        i = np.arange(n_sub - k)
        j = i + k
        ok = ~degen[i] & ~degen[j]
        d = np.empty(n_sub - k)
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = (qt - m * mu[i] * mu[j]) / (m * sigma[i] * sigma[j])
        d[ok] = np.sqrt(np.maximum(2.0 * m * (1.0 - corr[ok]), 0.0))
        one_degen = degen[i] ^ degen[j]
        d[one_degen] = sqrt_m
        d[degen[i] & degen[j]] = 0.0

        upd = d < profile[i]  # keep first (smallest) j on ties
        profile[i[upd]] = d[upd]
        index[i[upd]] = j[upd]
        upd = d <= profile[j]  # later candidates have smaller i: replace on ties
        profile[j[upd]] = d[upd]
        index[j[upd]] = i[upd]

    return profile, index


def fluss_cac(mp_index: np.ndarray, m: int, n_sub: int) -> np.ndarray:
    """Corrected arc curve: arc crossings over the idealized parabola, in [0, 1].

    Positions within 5 * m of either edge are set to 1 since the arc count
    is unreliable there.
    """
    idx = np.asarray(mp_index, dtype=int)
    pos = np.arange(idx.size)
    lo = np.minimum(pos, idx)
    hi = np.maximum(pos, idx)
    mark = np.zeros(n_sub + 1)
    np.add.at(mark, lo, 1.0)
    np.add.at(mark, hi, -1.0)
    arcs = np.cumsum(mark[:n_sub])

    p = np.arange(n_sub, dtype=float)
    ideal = 2.0 * p * (n_sub - p) / n_sub
    cac = np.ones(n_sub)
    interior = ideal > 0
    cac[interior] = np.minimum(arcs[interior] / ideal[interior], 1.0)
    edge = 5 * m
    cac[:edge] = 1.0
    cac[max(n_sub - edge, 0):] = 1.0
    return cac


def _fluss_curves(x: np.ndarray, m: int, channel_rule: str) -> list[np.ndarray]:
    """Per-channel corrected arc curves; flat channels yield an all-ones curve."""
    n_sub = x.shape[0] - m + 1
    curves = []
    for c in range(x.shape[1]):
        series = x[:, c]
        if series.std() < DEGENERATE_STD:
            curves.append(np.ones(n_sub))
            continue
        _, idx = matrix_profile(series, m)
        curves.append(fluss_cac(idx, m, n_sub))
    if channel_rule == "sum":
        return [np.mean(curves, axis=0)]
    return curves


def _fluss_best(curves: list[np.ndarray]) -> tuple[int, float]:
    best_val = np.inf
    best_pos = 0
    for curve in curves:
        pos = int(np.argmin(curve))
        if curve[pos] < best_val:
            best_val = float(curve[pos])
            best_pos = pos
    return best_pos, best_val


def fluss_alert(window: np.ndarray, m: int, threshold: float,
                channel_rule: str = "any") -> int | None:
    """Threshold rule on the arc curve: position of the CAC minimum if below threshold.

    Per channel of a multivariate window; under "any" the lowest channel
    wins, under "sum" channels' curves are averaged first. Windows too
    short for the matrix profile return no alert by design, as do flat
    channels (a constant signal has no regime structure).
    """
    if channel_rule not in CHANNEL_RULES:
        raise ValueError(f"channel_rule must be one of {CHANNEL_RULES}")
    x = _as_signal(window)
    n = x.shape[0]
    excl = (m + 1) // 2
    if n < m + excl + 1:
        return None
    pos, val = _fluss_best(_fluss_curves(x, m, channel_rule))
    if val < threshold:
        return pos
    return None


def _window_samples(window) -> np.ndarray:
    if isinstance(window, Window):
        return window.samples
    return _as_signal(window)


def detect(window, config: DetectorConfig) -> int | None:
    """Run the configured method on one window, returning a change-point index or None.

    Segmentation methods report the LAST breakpoint (the most recent
    behavior change is the actionable one); FLUSS reports its arc-curve
    argmin. Channels are z-normalized from scratch when config.znorm is on.
    """
    cp, _ = detect_with_score(window, config)
    return cp


def detect_with_score(window, config: DetectorConfig) -> tuple[int | None, float]:
    """Like :func:`detect` but also returns a per-window diagnostic score.

    For FLUSS the score is the (combined) CAC minimum; for segmentation
    methods it is the number of breakpoints found.
    """
    x = _window_samples(window)
    if config.znorm:
        x = znormalize(x)
    if config.method == "FLUSS":
        n = x.shape[0]
        excl = (config.m + 1) // 2
        if n < config.m + excl + 1:
            return None, 1.0
        pos, val = _fluss_best(_fluss_curves(x, config.m, config.channel_rule))
        return (pos if val < config.threshold else None), val
    if config.method == "PELT":
        seg = pelt(x, config.cost, config.penalty, config.min_size)
    elif config.method == "BINSEG":
        seg = binseg(x, config.cost, config.penalty, config.min_size)
    elif config.method == "BOTTOMUP":
        seg = bottomup(x, config.cost, config.penalty, config.min_size)
    else:
        seg = kcpd(x, config.penalty, config.min_size, config.cost)
    if seg.breakpoints:
        return seg.breakpoints[-1], float(len(seg.breakpoints))
    return None, 0.0
