"""Runtime deployment selection under varying upload throughput.

Every deployment option of a fixed architecture has a cost of the form
``constant + inv_coeff / t_u`` in the upload throughput, for both latency and
energy.  Crossings between two options are therefore solvable in closed form,
which yields a partition of (0, inf) into intervals each owned by the
cheapest option.  A deployed system tracks throughput and switches options by
a constant-time interval lookup; ``replay_trace`` compares that dynamic
policy against fixed deployments over a recorded throughput trace.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cost_models import (
    BITS_PER_BYTE,
    MBPS,
    DeviceProfile,
    WirelessProfile,
    identify_partition_candidates,
    layer_costs,
)
from .search_space import ArchitectureSpec, compute_sizes, input_bytes

LATENCY = "latency"
ENERGY = "energy"
METRICS = (LATENCY, ENERGY)

ALL_EDGE = "All-Edge"
ALL_CLOUD = "All-Cloud"


class TraceFormatError(ValueError):
    """A throughput trace file or row is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class DeploymentOption:
    """One way to deploy a fixed architecture.

    ``edge_latency_s`` / ``edge_energy_j`` are the cost of the edge-resident
    prefix; ``tx_bytes`` is the tensor shipped upward (0 for All-Edge, the
    raw input for All-Cloud).
    """

    label: str
    split_index: int
    edge_latency_s: float
    edge_energy_j: float
    tx_bytes: int


def option_label(split_index: int, layer_count: int) -> str:
    if split_index == 0:
        return ALL_CLOUD
    if split_index == layer_count:
        return ALL_EDGE
    return f"Split@{split_index}"


def enumerate_options(spec: ArchitectureSpec, device: DeviceProfile) -> list[DeploymentOption]:
    """All viable deployment options of an architecture, ascending split index."""
    ios = compute_sizes(spec, device.bytes_per_element)
    costs = layer_costs(spec, device)
    raw_bytes = input_bytes(spec, device.bytes_per_element)
    n = len(ios)
    options = []
    lat = 0.0
    energy = 0.0
    prefix = {0: (0.0, 0.0)}
    for i, cost in enumerate(costs, start=1):
        lat += cost.latency_s
        energy += cost.energy_j
        prefix[i] = (lat, energy)
    for i in identify_partition_candidates(ios, raw_bytes):
        shipped = 0 if i == n else (raw_bytes if i == 0 else ios[i - 1].output_bytes)
        options.append(
            DeploymentOption(
                label=option_label(i, n),
                split_index=i,
                edge_latency_s=prefix[i][0],
                edge_energy_j=prefix[i][1],
                tx_bytes=shipped,
            )
        )
    return options


@dataclass(frozen=True)
class CostCurve:
    """Cost as an explicit function of throughput: constant + inv_coeff / t_u."""

    constant: float
    inv_coeff: float

    def __call__(self, t_u_mbps: float) -> float:
        return self.constant + self.inv_coeff / t_u_mbps


def option_cost(option: DeploymentOption, metric: str, wireless: WirelessProfile) -> CostCurve:
    """Coefficients of an option's cost in the throughput.

    Latency: prefix + bits/(t_u * 1e6) + round-trip (offloads only).
    Energy:  prefix + (alpha * t_u + beta) * bits/(t_u * 1e6), whose alpha
    part is a throughput-independent floor; the round-trip has no energy.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    bits_per_mega = option.tx_bytes * BITS_PER_BYTE / MBPS
    if option.tx_bytes == 0:
        constant = option.edge_latency_s if metric == LATENCY else option.edge_energy_j
        return CostCurve(constant=constant, inv_coeff=0.0)
    if metric == LATENCY:
        return CostCurve(
            constant=option.edge_latency_s + wireless.l_rt_s,
            inv_coeff=bits_per_mega,
        )
    return CostCurve(
        constant=option.edge_energy_j + wireless.alpha_u * bits_per_mega,
        inv_coeff=wireless.beta_u * bits_per_mega,
    )


@dataclass(frozen=True)
class PairwiseThreshold:
    """Crossing structure of two options' cost curves over t_u > 0."""

    crossings: tuple[float, ...]
    winner_below: str | None
    winner_above: str | None
    tied: bool = False


def pairwise_threshold(
    option_a: DeploymentOption,
    option_b: DeploymentOption,
    metric: str,
    wireless: WirelessProfile,
) -> PairwiseThreshold:
    """Solve cost_a(t_u) = cost_b(t_u) analytically.

    Both curves are constant + inv_coeff/t_u, so there is at most one
    positive crossing.  Below it the smaller 1/t_u coefficient wins (less to
    transmit); above it the smaller constant wins.
    """
    ca = option_cost(option_a, metric, wireless)
    cb = option_cost(option_b, metric, wireless)
    d_const = ca.constant - cb.constant
    d_inv = ca.inv_coeff - cb.inv_coeff
    if d_const == 0.0 and d_inv == 0.0:
        return PairwiseThreshold((), None, None, tied=True)
    if d_inv == 0.0:
        winner = option_a.label if d_const < 0 else option_b.label
        return PairwiseThreshold((), winner, winner)
    below = option_a.label if d_inv < 0 else option_b.label
    if d_const == 0.0:
        return PairwiseThreshold((), below, below)
    above = option_a.label if d_const < 0 else option_b.label
    crossing = -d_inv / d_const
    if crossing <= 0 or not math.isfinite(crossing):
        # Curves ordered the same way everywhere on t_u > 0.
        winner = below if below == above else (below if crossing <= 0 else above)
        return PairwiseThreshold((), winner, winner)
    return PairwiseThreshold((crossing,), below, above)


@dataclass(frozen=True)
class DominanceInterval:
    lo: float  # inclusive
    hi: float  # exclusive; math.inf for the last interval
    winner: str


@dataclass(frozen=True)
class DominanceMap:
    """Partition of (0, inf) by throughput into cheapest-option intervals."""

    metric: str
    intervals: tuple[DominanceInterval, ...]
    options: tuple[DeploymentOption, ...]
    wireless: WirelessProfile

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric,
            "intervals": [
                {
                    "t_u_lo_mbps": iv.lo,
                    "t_u_hi_mbps": None if math.isinf(iv.hi) else iv.hi,
                    "winner": iv.winner,
                }
                for iv in self.intervals
            ],
            "wireless": {
                "tech": self.wireless.tech,
                "l_rt_s": self.wireless.l_rt_s,
                "alpha_u": self.wireless.alpha_u,
                "beta_u": self.wireless.beta_u,
            },
        }


def build_dominance_map(
    options: Sequence[DeploymentOption], metric: str, wireless: WirelessProfile
) -> DominanceMap:
    """Assemble the per-interval winners from all pairwise crossings.

    Every pairwise crossing is a potential boundary; within each open
    interval the ordering of all curves is fixed, so the winner is read off
    at the midpoint.  Adjacent intervals with the same winner merge.  Ties at
    a probe resolve to the earliest option in the list (ascending split
    index, so the most-offloaded of the tied options).
    """
    if not options:
        raise ValueError("need at least one deployment option")
    curves = [option_cost(o, metric, wireless) for o in options]
    breakpoints: set[float] = set()
    for i in range(len(options)):
        for j in range(i + 1, len(options)):
            result = pairwise_threshold(options[i], options[j], metric, wireless)
            breakpoints.update(result.crossings)
    bounds = [0.0, *sorted(breakpoints), math.inf]

    intervals: list[DominanceInterval] = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if math.isinf(hi):
            probe = 1.0 if lo == 0.0 else 2.0 * lo
        elif lo == 0.0:
            probe = hi / 2.0
        else:
            probe = (lo + hi) / 2.0
        winner = options[int(np.argmin([c(probe) for c in curves]))].label
        if intervals and intervals[-1].winner == winner:
            intervals[-1] = DominanceInterval(intervals[-1].lo, hi, winner)
        else:
            intervals.append(DominanceInterval(lo, hi, winner))
    return DominanceMap(
        metric=metric, intervals=tuple(intervals), options=tuple(options), wireless=wireless
    )


def select_option(dmap: DominanceMap, t_u_mbps: float) -> str:
    """Winner label at ``t_u_mbps``; boundaries belong to the interval they open."""
    if t_u_mbps <= 0:
        raise ValueError(f"throughput must be positive, got {t_u_mbps}")
    los = [iv.lo for iv in dmap.intervals]
    return dmap.intervals[bisect_right(los, t_u_mbps) - 1].winner


@dataclass(frozen=True)
class ThroughputTrace:
    """Sampled upload throughput over time."""

    timestamps_s: tuple[float, ...]
    t_u_mbps: tuple[float, ...]

    def __post_init__(self):
        if len(self.timestamps_s) != len(self.t_u_mbps):
            raise TraceFormatError("timestamp and throughput columns differ in length")
        for k in range(1, len(self.timestamps_s)):
            if self.timestamps_s[k] <= self.timestamps_s[k - 1]:
                raise TraceFormatError("timestamps must be strictly increasing", line=k + 2)
        for k, t_u in enumerate(self.t_u_mbps):
            if t_u <= 0:
                raise TraceFormatError(f"throughput must be positive, got {t_u}", line=k + 2)

    def __len__(self) -> int:
        return len(self.timestamps_s)

    @classmethod
    def from_csv(cls, source: str | Path | io.TextIOBase) -> "ThroughputTrace":
        if isinstance(source, (str, Path)):
            with open(source, newline="") as fh:
                return cls.from_csv(fh)
        reader = csv.reader(source)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError("empty trace file")
        if [h.strip() for h in header] != ["timestamp_s", "t_u_mbps"]:
            raise TraceFormatError(
                f"expected header 'timestamp_s,t_u_mbps', got {','.join(header)!r}", line=1
            )
        times: list[float] = []
        values: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise TraceFormatError(f"expected 2 fields, got {len(row)}", line=lineno)
            try:
                times.append(float(row[0]))
                values.append(float(row[1]))
            except ValueError:
                raise TraceFormatError(f"non-numeric row {row!r}", line=lineno)
        if not times:
            raise TraceFormatError("trace has no samples")
        return cls(timestamps_s=tuple(times), t_u_mbps=tuple(values))


@dataclass(frozen=True)
class FixedPolicy:
    option_label: str


@dataclass(frozen=True)
class DynamicPolicy:
    """Re-select the cheapest option from the dominance map at every sample."""


@dataclass(frozen=True)
class ReplayResult:
    policy_name: str
    per_sample: tuple[float, ...]
    cumulative: tuple[float, ...]
    chosen: tuple[str, ...]

    @property
    def total(self) -> float:
        return self.cumulative[-1]


def replay_trace(
    trace: ThroughputTrace,
    options: Sequence[DeploymentOption],
    policy: FixedPolicy | DynamicPolicy,
    wireless: WirelessProfile,
    metric: str,
) -> ReplayResult:
    """Accumulate one inference's cost per trace sample under a policy.

    The one-inference-per-sample rate is an assumption, flagged in emitted
    metadata; option switching itself is free (all options share weights, so
    a switch is a pointer change).
    """
    by_label = {o.label: o for o in options}
    curves = {label: option_cost(o, metric, wireless) for label, o in by_label.items()}
    if isinstance(policy, FixedPolicy):
        if policy.option_label not in by_label:
            raise ValueError(f"unknown option {policy.option_label!r}")
        chooser = lambda t_u: policy.option_label
        name = f"fixed:{policy.option_label}"
    else:
        dmap = build_dominance_map(options, metric, wireless)
        chooser = lambda t_u: select_option(dmap, t_u)
        name = "dynamic"

    per_sample: list[float] = []
    chosen: list[str] = []
    running = 0.0
    cumulative: list[float] = []
    for t_u in trace.t_u_mbps:
        label = chooser(t_u)
        cost = curves[label](t_u)
        per_sample.append(cost)
        chosen.append(label)
        running += cost
        cumulative.append(running)
    return ReplayResult(
        policy_name=name,
        per_sample=tuple(per_sample),
        cumulative=tuple(cumulative),
        chosen=tuple(chosen),
    )
