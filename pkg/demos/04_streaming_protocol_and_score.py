"""
The streaming first-alert protocol and the business score
=========================================================

In production the data of a life cycle arrives as a stream, so a detector
is re-run on growing prefixes (7-day steps) and the FIRST alert triggers
maintenance; everything after it is operationally meaningless. A cycle
then earns exactly one verdict: TP if that single alert fell inside the
predictive padding before the failure, FP if it came too early or inside
the responsive duration, FN if nothing fired.

The score generalizes the verdict: 1 inside the padding, 0 inside the
responsive duration, and an exponential ramp before the padding whose
harshness is the sensibility s.
"""

from datetime import datetime, timedelta, timezone

import numpy as np

from maintseg.core import BusinessParams, LifeCycle
from maintseg.costs import SegmentCost
from maintseg.detectors import DetectorConfig
from maintseg.metrics import e_score
from maintseg.protocol import classify, run_streaming, run_streaming_trace

start = datetime(2021, 3, 1, tzinfo=timezone.utc)
n, change = 46, 36  # failure at day 46, behavior shifts 10 days before it
samples = np.abs(np.random.default_rng(4).normal(0.2, 0.05, size=(n, 1)))
samples[change:] = 3.0
cycle = LifeCycle(atm_id="demo", cycle_index=0, start_time=start,
                  end_time=start + timedelta(days=n),
                  feature_names=("error_ratio",), samples=samples)

config = DetectorConfig("PELT", cost=SegmentCost("l2"), penalty=5.0, min_size=2)
alert, trace = run_streaming_trace(cycle, config, step=7)
print(f"cycle of {n} days, regime change at day {change}")
print("windows evaluated:", [t.end_index for t in trace])
print(f"first alert: window end {alert.step_end_index}, "
      f"change point {alert.change_point_index}, a = {alert.a}")

params = BusinessParams(rd=1.0, pp=14.0, s=0.2)
rd_s, pp_s = params.to_samples(cycle.period)
verdict = classify(alert, cycle.n, pp_s, rd_s)
score = e_score(alert.a, cycle.n, pp_s, rd_s, params.s)
print(f"verdict at rd=1, pp=14: {verdict.value} (padding is "
      f"[{cycle.n - (pp_s + rd_s):.0f}, {cycle.n - rd_s:.0f}))   score {score:.3f}")

# the alternate timing rule reads the alert at the change point instead
alt = run_streaming(cycle, config, step=7, alert_at="changepoint")
print(f"alert-at=changepoint -> a = {alt.a}")

# score landscape: where an alert lands matters, and s controls the ramp
print("\nE_s over alert locations (n=100, rd=1, pp=14):")
locations = [20, 50, 70, 84, 85, 92, 98, 99]
for s in (0.05, 0.2, 1.0):
    row = "  ".join(f"{e_score(a, 100, 14, 1, s):5.3f}" for a in locations)
    print(f"  s={s:<4}  {row}")
print("  a     " + "  ".join(f"{a:5d}" for a in locations))
print("early alerts decay with s; the padding [85, 99) is always worth 1, "
      "and a >= 99 (inside rd) is worth 0")
