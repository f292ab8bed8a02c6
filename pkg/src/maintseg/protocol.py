"""Streaming first-alert evaluation: grow each cycle in fixed steps, stop at
the first alert, and classify the outcome against the business intervals.

Only the first alert counts; in the field a raised alert triggers
maintenance, which makes any later alert for the same cycle worthless.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

from .core import LifeCycle, Window, prefix_windows
from .detectors import DetectorConfig, detect, detect_with_score

__all__ = ["Alert", "Verdict", "ALERT_TIMINGS", "run_streaming", "run_streaming_trace",
           "classify", "WindowTrace"]

# a = window end (the moment the system could act) by default; the
# change-point reading is one flag away.
ALERT_TIMINGS = ("window-end", "changepoint")


@dataclass(frozen=True)
class Alert:
    """The first detection for a cycle.

    ``a`` is the alert time compared against the pp/rd boundaries, in
    samples from cycle start.
    """

    step_end_index: int
    change_point_index: int
    a: int

    def __post_init__(self) -> None:
        if not 0 <= self.change_point_index < self.step_end_index:
            raise ValueError("change point must precede the window end")


class Verdict(enum.Enum):
    TP = "TP"
    FP = "FP"
    FN = "FN"
    TN = "TN"  # reserved for cycles without failure; absent from this dataset


def _make_alert(end: int, cp: int, alert_at: str) -> Alert:
    if alert_at not in ALERT_TIMINGS:
        raise ValueError(f"alert_at must be one of {ALERT_TIMINGS}")
    a = end if alert_at == "window-end" else cp
    return Alert(step_end_index=end, change_point_index=cp, a=a)


def run_streaming(cycle: LifeCycle, config: DetectorConfig, step: int = 7,
                  alert_at: str = "window-end",
                  detector: Optional[Callable[[Window, DetectorConfig], Optional[int]]] = None,
                  ) -> Optional[Alert]:
    """Evaluate growing prefix windows in order and stop at the first alert.

    Returns None when no window fires. ``detector`` replaces the default
    dispatch, for instrumentation.
    """
    run = detector or detect
    for window in prefix_windows(cycle, step):
        cp = run(window, config)
        if cp is not None:
            return _make_alert(window.end_index, int(cp), alert_at)
    return None


@dataclass(frozen=True)
class WindowTrace:
    """Diagnostics for one evaluated window of the streaming run."""

    end_index: int
    fired: bool
    change_point: Optional[int]
    score: float


def run_streaming_trace(cycle: LifeCycle, config: DetectorConfig, step: int = 7,
                        alert_at: str = "window-end",
                        ) -> tuple[Optional[Alert], list[WindowTrace]]:
    """Same first-alert semantics as :func:`run_streaming`, recording one
    trace row per evaluated window (so len(trace) = windows evaluated)."""
    trace: list[WindowTrace] = []
    for window in prefix_windows(cycle, step):
        cp, score = detect_with_score(window, config)
        trace.append(WindowTrace(window.end_index, cp is not None, cp, score))
        if cp is not None:
            return _make_alert(window.end_index, int(cp), alert_at), trace
    return None, trace


def classify(alert: Optional[Alert], n: float, pp: float, rd: float) -> Verdict:
    """Verdict for one cycle: TP if the first alert lands in
    [n-(pp+rd), n-rd), FP anywhere else, FN when no alert was raised.

    pp and rd are in samples. When n <= pp + rd the interval is clipped or
    empty and the inequalities still apply literally.
    """
    if alert is None:
        return Verdict.FN
    a = alert.a
    if n - (pp + rd) <= a < n - rd:
        return Verdict.TP
    return Verdict.FP
