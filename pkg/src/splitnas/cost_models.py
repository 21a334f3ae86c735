"""Per-layer latency/energy prediction and optimal split-point evaluation.

An architecture can run entirely on the edge device, entirely in the cloud,
or split after some layer: the edge executes a prefix, transmits that layer's
output upward, and the cloud (treated as free) finishes the rest.  This
module prices every viable split under a wireless profile and returns the
split minimizing total latency and the split minimizing edge energy,
independently.

Split indexing convention: candidate ``i`` means "run the first ``i`` layers
on the edge".  ``i == 0`` is All-Cloud (transmit the raw input), ``i == n``
is All-Edge (transmit nothing).  Only layers whose output is smaller than the
raw input are viable interior candidates; transmitting a fatter feature map
can never beat just sending the input, since the skipped edge work costs
nonnegative time and energy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .search_space import CONV, FC, POOL, ArchitectureSpec, LayerIO, LayerSpec, compute_sizes

MBPS = 1_000_000  # bits per second per Mbps
BITS_PER_BYTE = 8


class ProfileError(ValueError):
    """A device or wireless profile is malformed or incomplete."""


@dataclass(frozen=True)
class WirelessProfile:
    """Uplink characteristics of the edge-to-cloud wireless link.

    ``alpha_u`` and ``beta_u`` are the linear radio power model: transmission
    power in watts is ``alpha_u * t_u + beta_u`` for upload throughput ``t_u``
    in Mbps, with coefficients chosen per technology.
    """

    tech: str
    t_u_mbps: float
    l_rt_s: float
    alpha_u: float
    beta_u: float

    def __post_init__(self):
        if self.t_u_mbps <= 0:
            raise ProfileError(f"t_u_mbps must be positive, got {self.t_u_mbps}")
        for name in ("l_rt_s", "alpha_u", "beta_u"):
            if getattr(self, name) < 0:
                raise ProfileError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @property
    def tx_power_w(self) -> float:
        return self.alpha_u * self.t_u_mbps + self.beta_u

    def with_throughput(self, t_u_mbps: float) -> "WirelessProfile":
        return replace(self, t_u_mbps=t_u_mbps)

    @classmethod
    def from_json_dict(cls, d: dict) -> "WirelessProfile":
        try:
            return cls(
                tech=str(d["tech"]),
                t_u_mbps=float(d["t_u_mbps"]),
                l_rt_s=float(d["l_rt_s"]),
                alpha_u=float(d["alpha_u"]),
                beta_u=float(d["beta_u"]),
            )
        except KeyError as exc:
            raise ProfileError(f"wireless profile missing field {exc.args[0]!r}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "WirelessProfile":
        return cls.from_json_dict(json.loads(Path(path).read_text()))

    @classmethod
    def default(cls, tech: str = "lte") -> "WirelessProfile":
        """Bundled profile for ``tech`` ('lte' or 'wifi')."""
        name = f"data/wireless_{tech.lower()}.json"
        text = resources.files("splitnas").joinpath(name).read_text()
        return cls.from_json_dict(json.loads(text))


# Feature names accepted per layer kind; a predictor is a weight table over
# these plus a "bias" term.
PREDICTOR_FEATURES = {
    CONV: ("per_in_elem", "per_kernel_sq", "per_filter", "per_out_elem", "per_mac"),
    POOL: ("per_in_elem", "per_out_elem"),
    FC: ("per_in_out", "per_in_elem", "per_out_elem"),
}


@dataclass(frozen=True)
class DeviceProfile:
    """Linear per-layer-kind latency and power predictors for an edge device.

    ``latency`` and ``power`` map layer kind to a weight table; prediction is
    the dot product of weights with the layer's feature vector plus the bias.
    Weight tables fitted offline against measurements drop in unchanged.
    """

    name: str
    bytes_per_element: int
    latency: dict
    power: dict

    def __post_init__(self):
        if self.bytes_per_element <= 0:
            raise ProfileError(f"bytes_per_element must be positive, got {self.bytes_per_element}")
        for table_name, table in (("latency", self.latency), ("power", self.power)):
            for kind, weights in table.items():
                if kind not in PREDICTOR_FEATURES:
                    raise ProfileError(f"{table_name} predictor for unknown layer kind {kind!r}")
                allowed = set(PREDICTOR_FEATURES[kind]) | {"bias"}
                unknown = set(weights) - allowed
                if unknown:
                    raise ProfileError(
                        f"{table_name}[{kind!r}] has unknown weights {sorted(unknown)}"
                    )

    @classmethod
    def from_json_dict(cls, d: dict) -> "DeviceProfile":
        try:
            return cls(
                name=str(d["name"]),
                bytes_per_element=int(d.get("bytes_per_element", 1)),
                latency={k: dict(v) for k, v in d["latency"].items()},
                power={k: dict(v) for k, v in d["power"].items()},
            )
        except KeyError as exc:
            raise ProfileError(f"device profile missing field {exc.args[0]!r}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "DeviceProfile":
        return cls.from_json_dict(json.loads(Path(path).read_text()))

    @classmethod
    def default(cls) -> "DeviceProfile":
        """Bundled synthetic edge-SoC profile."""
        text = resources.files("splitnas").joinpath("data/device_synthetic.json").read_text()
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class LayerCost:
    """Predicted execution cost of one layer on the edge device."""

    latency_s: float
    power_w: float
    energy_j: float  # power_w * latency_s
    output_bytes: int


@dataclass(frozen=True)
class DeploymentEvaluation:
    """Optimal split indices and minimal costs for one architecture.

    ``candidates`` lists the viable split indices in ascending order (always
    starting at 0 = All-Cloud and ending at layer count = All-Edge);
    ``latency_acc`` / ``energy_acc`` are the per-candidate totals aligned with
    it.  ``index_latency`` / ``index_energy`` point at the argmin of each.
    """

    candidates: tuple[int, ...]
    latency_acc: tuple[float, ...]
    energy_acc: tuple[float, ...]
    index_latency: int
    index_energy: int
    latency_s: float
    energy_j: float

    def accumulative(self, metric: str) -> dict[int, float]:
        table = self.latency_acc if metric == "latency" else self.energy_acc
        return dict(zip(self.candidates, table))


def tx_latency(n_bytes: int, t_u_mbps: float) -> float:
    """Seconds to upload ``n_bytes`` at ``t_u_mbps``; zero bytes take zero time."""
    if t_u_mbps <= 0:
        raise ProfileError(f"t_u_mbps must be positive, got {t_u_mbps}")
    if n_bytes < 0:
        raise ValueError(f"byte count must be nonnegative, got {n_bytes}")
    return n_bytes * BITS_PER_BYTE / (t_u_mbps * MBPS)


def tx_energy(n_bytes: int, wireless: WirelessProfile) -> float:
    """Radio energy in joules to upload ``n_bytes`` under the linear power model."""
    return wireless.tx_power_w * tx_latency(n_bytes, wireless.t_u_mbps)


def comm_latency(n_bytes: int, wireless: WirelessProfile) -> float:
    """Total communication latency: upload time plus the round-trip latency.

    Only meaningful for an actual offload; the All-Edge option incurs no
    communication at all.  Note the asymmetry with energy: the round-trip
    delay costs time but no measurable radio energy.
    """
    return tx_latency(n_bytes, wireless.t_u_mbps) + wireless.l_rt_s


def mac_count(layer: LayerSpec, io: LayerIO) -> int:
    """Multiply-accumulate count of a layer (zero for pooling)."""
    if layer.kind == CONV:
        in_channels = io.input_shape[2]
        out_h, out_w, out_c = io.output_shape
        return out_h * out_w * out_c * layer.kernel * layer.kernel * in_channels
    if layer.kind == FC:
        in_elems = 1
        for v in io.input_shape:
            in_elems *= v
        return in_elems * io.output_shape[0]
    return 0


def layer_features(layer: LayerSpec, io: LayerIO) -> dict[str, float]:
    """Feature vector consumed by the linear predictors."""
    in_elems = 1
    for v in io.input_shape:
        in_elems *= v
    out_elems = io.output_elements
    if layer.kind == CONV:
        return {
            "per_in_elem": float(in_elems),
            "per_kernel_sq": float(layer.kernel * layer.kernel),
            "per_filter": float(layer.units),
            "per_out_elem": float(out_elems),
            "per_mac": float(mac_count(layer, io)),
        }
    if layer.kind == POOL:
        return {"per_in_elem": float(in_elems), "per_out_elem": float(out_elems)}
    if layer.kind == FC:
        return {
            "per_in_out": float(in_elems * out_elems),
            "per_in_elem": float(in_elems),
            "per_out_elem": float(out_elems),
        }
    raise ProfileError(f"no feature definition for layer kind {layer.kind!r}")


def _predict(weights: dict, features: dict[str, float]) -> float:
    value = weights.get("bias", 0.0)
    for name, w in weights.items():
        if name != "bias":
            value += w * features[name]
    return value


def predict_layer(layer: LayerSpec, io: LayerIO, device: DeviceProfile) -> LayerCost:
    """Predicted latency, power, and energy of one layer on the device.

    Fused batch-norm/activation ride along at zero extra cost.
    """
    if layer.kind not in device.latency or layer.kind not in device.power:
        raise ProfileError(f"device profile {device.name!r} has no predictor for {layer.kind!r}")
    features = layer_features(layer, io)
    latency = _predict(device.latency[layer.kind], features)
    power = _predict(device.power[layer.kind], features)
    if latency <= 0:
        raise ProfileError(f"predicted nonpositive latency {latency} for {layer.kind!r} layer")
    if power <= 0:
        raise ProfileError(f"predicted nonpositive power {power} for {layer.kind!r} layer")
    return LayerCost(
        latency_s=latency,
        power_w=power,
        energy_j=power * latency,
        output_bytes=io.output_bytes,
    )


def layer_costs(spec: ArchitectureSpec, device: DeviceProfile) -> list[LayerCost]:
    """Per-layer costs for a whole architecture."""
    ios = compute_sizes(spec, device.bytes_per_element)
    return [predict_layer(layer, io, device) for layer, io in zip(spec.layers, ios)]


def identify_partition_candidates(ios: list[LayerIO], input_bytes: int) -> list[int]:
    """Viable split indices, ascending, with the two degenerate options.

    Interior index ``i`` (run layers 1..i on the edge, ship layer i's output)
    is viable only when that output is strictly smaller than the raw input;
    otherwise All-Cloud dominates it outright.  Index 0 (All-Cloud) and index
    ``len(ios)`` (All-Edge) are always included.
    """
    if not ios:
        raise ValueError("empty layer list")
    n = len(ios)
    candidates = [0]
    candidates.extend(i for i in range(1, n) if ios[i - 1].output_bytes < input_bytes)
    candidates.append(n)
    return candidates


def evaluate_deployment(
    spec: ArchitectureSpec, device: DeviceProfile, wireless: WirelessProfile
) -> DeploymentEvaluation:
    """Price every viable split and return the latency- and energy-optimal ones.

    For split ``i`` the accumulated latency is the sum of the first ``i``
    layers' latencies plus the communication latency of shipping the split
    tensor; energy replaces the communication term with radio energy (no
    round-trip component).  All-Cloud ships the raw input with no edge terms;
    All-Edge has no communication terms.  Cloud compute is treated as free.
    Ties in either argmin break toward the smaller index, i.e. more offload.
    """
    ios = compute_sizes(spec, device.bytes_per_element)
    costs = [predict_layer(layer, io, device) for layer, io in zip(spec.layers, ios)]
    raw_input_bytes = (
        spec.input_shape[0] * spec.input_shape[1] * spec.input_shape[2] * device.bytes_per_element
    )
    candidates = identify_partition_candidates(ios, raw_input_bytes)
    n = len(ios)

    lat_prefix = [0.0]
    en_prefix = [0.0]
    for c in costs:
        lat_prefix.append(lat_prefix[-1] + c.latency_s)
        en_prefix.append(en_prefix[-1] + c.energy_j)

    latency_acc = []
    energy_acc = []
    for i in candidates:
        if i == n:
            latency_acc.append(lat_prefix[n])
            energy_acc.append(en_prefix[n])
        else:
            shipped = raw_input_bytes if i == 0 else ios[i - 1].output_bytes
            latency_acc.append(lat_prefix[i] + comm_latency(shipped, wireless))
            energy_acc.append(en_prefix[i] + tx_energy(shipped, wireless))

    best_lat = min(range(len(candidates)), key=lambda k: (latency_acc[k], candidates[k]))
    best_en = min(range(len(candidates)), key=lambda k: (energy_acc[k], candidates[k]))
    return DeploymentEvaluation(
        candidates=tuple(candidates),
        latency_acc=tuple(latency_acc),
        energy_acc=tuple(energy_acc),
        index_latency=candidates[best_lat],
        index_energy=candidates[best_en],
        latency_s=latency_acc[best_lat],
        energy_j=energy_acc[best_en],
    )
