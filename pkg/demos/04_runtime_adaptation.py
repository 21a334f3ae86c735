"""Throughput thresholds and dynamic option switching.

Takes one architecture, derives the throughput intervals over which each
deployment option is the cheapest, then replays a fluctuating synthetic LTE
trace comparing every fixed deployment against dynamic switching.
"""

import math

import numpy as np

from splitnas import DeviceProfile, WirelessProfile, decode, sample_random
from splitnas.runtime import (
    DynamicPolicy,
    FixedPolicy,
    ThroughputTrace,
    build_dominance_map,
    enumerate_options,
    replay_trace,
)

device = DeviceProfile.default()
wireless = WirelessProfile.default("lte")

# A mid-size architecture with an actual crossing in its latency map.
spec = decode(sample_random(13), input_shape=(224, 224, 3), class_count=10)
options = enumerate_options(spec, device)

for metric in ("latency", "energy"):
    dmap = build_dominance_map(options, metric, wireless)
    print(f"{metric} dominance map:")
    for iv in dmap.intervals:
        hi = "inf" if math.isinf(iv.hi) else f"{iv.hi:.2f}"
        print(f"  t_u in [{iv.lo:.2f}, {hi}) Mbps -> {iv.winner}")

# Synthetic trace: one throughput sample every 5 minutes, drifting across
# the map's first breakpoint.
dmap = build_dominance_map(options, "energy", wireless)
breaks = [iv.hi for iv in dmap.intervals if math.isfinite(iv.hi)]
center = breaks[0] if breaks else wireless.t_u_mbps
rng = np.random.default_rng(5)
values = center * np.exp(rng.normal(0, 0.6, size=40))
trace = ThroughputTrace(
    timestamps_s=tuple(300.0 * k for k in range(40)),
    t_u_mbps=tuple(float(v) for v in values),
)

dynamic = replay_trace(trace, options, DynamicPolicy(), wireless, "energy")
print(f"\nreplaying 40-sample trace around {center:.2f} Mbps (energy):")
print(f"  dynamic switching: {dynamic.total:9.3f} J "
      f"(options used: {', '.join(sorted(set(dynamic.chosen)))})")
for option in options:
    fixed = replay_trace(trace, options, FixedPolicy(option.label), wireless, "energy")
    gain = 100.0 * (fixed.total - dynamic.total) / fixed.total
    print(f"  fixed {option.label:<10}: {fixed.total:9.3f} J   dynamic saves {gain:5.2f}%")
