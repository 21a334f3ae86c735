import math

import numpy as np
import pytest

from splitnas.cost_models import (
    DeviceProfile,
    ProfileError,
    WirelessProfile,
    comm_latency,
    evaluate_deployment,
    identify_partition_candidates,
    layer_costs,
    mac_count,
    predict_layer,
    tx_energy,
    tx_latency,
)
from splitnas.search_space import (
    CONV,
    LayerIO,
    LayerSpec,
    compute_sizes,
    decode,
    input_bytes,
    sample_random,
)

INPUT_224_BYTES = 224 * 224 * 3  # 150,528 B = 147 KiB at one byte per element


def lte(t_u=3.0, l_rt=0.05, alpha=0.1, beta=1.0):
    return WirelessProfile(tech="LTE", t_u_mbps=t_u, l_rt_s=l_rt, alpha_u=alpha, beta_u=beta)


class TestTransmission:
    def test_zero_bytes_zero_latency(self):
        assert tx_latency(0, 17.3) == 0.0

    def test_uplink_latency_at_3mbps(self):
        # 150528 * 8 / 3e6
        assert tx_latency(INPUT_224_BYTES, 3.0) == pytest.approx(0.401408, abs=1e-12)

    def test_doubling_throughput_halves_latency(self):
        assert tx_latency(1000, 8.0) == pytest.approx(tx_latency(1000, 4.0) / 2)

    def test_invalid_throughput_rejected(self):
        with pytest.raises(ProfileError):
            tx_latency(100, 0.0)
        with pytest.raises(ProfileError):
            WirelessProfile(tech="LTE", t_u_mbps=-1, l_rt_s=0, alpha_u=0, beta_u=0)

    def test_constant_power_energy(self):
        # alpha 0, beta 1 W: energy equals transfer seconds.
        profile = lte(t_u=8.0, alpha=0.0, beta=1.0)
        one_second_bytes = 8.0 * 1e6 / 8
        assert tx_energy(int(one_second_bytes), profile) == pytest.approx(1.0)

    def test_zero_bytes_zero_energy(self):
        assert tx_energy(0, lte(alpha=3.0, beta=7.0)) == 0.0

    def test_energy_at_3mbps(self):
        # (0.1 * 3 + 1.0) * 0.401408
        assert tx_energy(INPUT_224_BYTES, lte()) == pytest.approx(0.5218304, abs=1e-9)

    def test_comm_latency_adds_round_trip(self):
        assert comm_latency(INPUT_224_BYTES, lte()) == pytest.approx(0.451408, abs=1e-12)
        assert comm_latency(1000, lte(l_rt=0.0)) == tx_latency(1000, 3.0)

    def test_comm_latency_limits_to_round_trip(self):
        assert comm_latency(1000, lte(t_u=1e9)) == pytest.approx(0.05, abs=1e-9)


MAC_ONLY_DEVICE = DeviceProfile(
    name="mac-only",
    bytes_per_element=1,
    latency={"conv": {"per_mac": 1e-9}, "pool": {"bias": 1e-9}, "fc": {"per_in_out": 1e-9}},
    power={"conv": {"bias": 1.0}, "pool": {"bias": 1.0}, "fc": {"bias": 1.0}},
)


class TestPredictors:
    def test_conv_latency_from_mac_count(self):
        layer = LayerSpec(kind=CONV, units=24, kernel=3, padding="same", activation="relu")
        io = LayerIO(
            input_shape=(32, 32, 3),
            output_shape=(32, 32, 24),
            output_elements=32 * 32 * 24,
            output_bytes=32 * 32 * 24,
        )
        # Independent count: every output element costs k*k*c_in multiplies.
        expected_macs = (32 * 32 * 24) * (3 * 3 * 3)
        assert expected_macs == 663_552
        assert mac_count(layer, io) == expected_macs
        cost = predict_layer(layer, io, MAC_ONLY_DEVICE)
        assert cost.latency_s == pytest.approx(6.63552e-4, rel=1e-12)

    def test_constant_latency_model(self, rng):
        device = DeviceProfile(
            name="flat",
            bytes_per_element=1,
            latency={k: {"bias": 0.25} for k in ("conv", "pool", "fc")},
            power={k: {"bias": 2.0} for k in ("conv", "pool", "fc")},
        )
        spec = decode(sample_random(rng))
        for cost in layer_costs(spec, device):
            assert cost.latency_s == 0.25
            assert cost.energy_j == pytest.approx(0.5)

    def test_energy_is_power_times_latency(self):
        device = DeviceProfile(
            name="half-watt",
            bytes_per_element=1,
            latency={"conv": {"bias": 0.1}, "pool": {"bias": 0.1}, "fc": {"bias": 0.1}},
            power={"conv": {"bias": 5.0}, "pool": {"bias": 5.0}, "fc": {"bias": 5.0}},
        )
        spec = decode(sample_random(3))
        for cost in layer_costs(spec, device):
            assert cost.energy_j == pytest.approx(0.5)

    def test_missing_predictor_is_profile_error(self):
        device = DeviceProfile(
            name="conv-only",
            bytes_per_element=1,
            latency={"conv": {"bias": 1.0}},
            power={"conv": {"bias": 1.0}},
        )
        spec = decode(sample_random(3))
        with pytest.raises(ProfileError):
            layer_costs(spec, device)

    def test_unknown_weight_name_rejected(self):
        with pytest.raises(ProfileError):
            DeviceProfile(
                name="typo",
                bytes_per_element=1,
                latency={"conv": {"per_amc": 1.0}},
                power={"conv": {"bias": 1.0}},
            )

    def test_nonpositive_prediction_rejected(self):
        device = DeviceProfile(
            name="negative",
            bytes_per_element=1,
            latency={"conv": {"bias": -1.0}, "pool": {"bias": 1.0}, "fc": {"bias": 1.0}},
            power={"conv": {"bias": 1.0}, "pool": {"bias": 1.0}, "fc": {"bias": 1.0}},
        )
        spec = decode(sample_random(3))
        with pytest.raises(ProfileError):
            layer_costs(spec, device)


def fake_ios(byte_sizes):
    return [
        LayerIO(input_shape=(1,), output_shape=(1,), output_elements=b, output_bytes=b)
        for b in byte_sizes
    ]


class TestPartitionCandidates:
    def test_all_fat_layers_leave_only_degenerate_options(self):
        ios = fake_ios([200_000, 300_000, 250_000])
        assert identify_partition_candidates(ios, 150_528) == [0, 3]

    def test_strictly_shrinking_architecture_keeps_every_index(self):
        ios = fake_ios([100, 50, 25])
        assert identify_partition_candidates(ios, 200) == [0, 1, 2, 3]

    def test_sizes_fat_until_late_pool(self):
        # Mimics the classic profile where feature maps exceed the input
        # until the fifth pooling layer: nothing before it is viable.
        sizes = [290_400, 186_624, 279_936, 173_056, 9_216, 4_096, 4_096, 1_000]
        candidates = identify_partition_candidates(fake_ios(sizes), 150_528)
        assert candidates == [0, 5, 6, 7, 8]
        assert all(i >= 5 or i == 0 for i in candidates)


def brute_force_minimum(spec, device, wireless):
    """Exhaustive split enumeration straight from the cost formulas."""
    ios = compute_sizes(spec, device.bytes_per_element)
    costs = layer_costs(spec, device)
    raw = input_bytes(spec, device.bytes_per_element)
    n = len(ios)
    best_lat = best_en = None
    for i in range(n + 1):
        lat = sum(c.latency_s for c in costs[:i])
        en = sum(c.energy_j for c in costs[:i])
        if i < n:
            shipped = raw if i == 0 else ios[i - 1].output_bytes
            lat += shipped * 8 / (wireless.t_u_mbps * 1e6) + wireless.l_rt_s
            en += (wireless.alpha_u * wireless.t_u_mbps + wireless.beta_u) * shipped * 8 / (
                wireless.t_u_mbps * 1e6
            )
        if best_lat is None or lat < best_lat[1]:
            best_lat = (i, lat)
        if best_en is None or en < best_en[1]:
            best_en = (i, en)
    return best_lat, best_en


class TestEvaluateDeployment:
    def test_free_communication_prefers_all_cloud(self, device):
        spec = decode(sample_random(5), (224, 224, 3))
        wireless = lte(t_u=1e9, l_rt=0.0)
        ev = evaluate_deployment(spec, device, wireless)
        assert ev.index_latency == 0
        assert ev.latency_s < 1e-2

    def test_vanishing_throughput_prefers_all_edge(self, device):
        spec = decode(sample_random(5), (224, 224, 3))
        wireless = lte(t_u=1e-9)
        ev = evaluate_deployment(spec, device, wireless)
        n = len(spec.layers)
        assert ev.index_latency == n and ev.index_energy == n

    def test_matches_brute_force_on_random_genomes(self, device, rng):
        for _ in range(200):
            spec = decode(sample_random(rng), (224, 224, 3))
            wireless = lte(t_u=float(rng.uniform(0.5, 50)))
            ev = evaluate_deployment(spec, device, wireless)
            (bl_i, bl_v), (be_i, be_v) = brute_force_minimum(spec, device, wireless)
            assert ev.index_latency == bl_i and ev.latency_s == pytest.approx(bl_v, rel=1e-12)
            assert ev.index_energy == be_i and ev.energy_j == pytest.approx(be_v, rel=1e-12)

    def test_all_edge_totals_are_exact_sums(self, device):
        spec = decode(sample_random(11), (224, 224, 3))
        ev = evaluate_deployment(spec, device, lte())
        costs = layer_costs(spec, device)
        k = ev.candidates.index(len(spec.layers))
        assert ev.latency_acc[k] == sum(c.latency_s for c in costs)
        assert ev.energy_acc[k] == sum(c.energy_j for c in costs)

    def test_all_cloud_dominates_fat_splits(self, device):
        # Any split shipping at least the input's bytes costs at least All-Cloud.
        rng = np.random.default_rng(7)
        wireless = lte()
        for _ in range(50):
            spec = decode(sample_random(rng), (224, 224, 3))
            ios = compute_sizes(spec, device.bytes_per_element)
            costs = layer_costs(spec, device)
            raw = input_bytes(spec, device.bytes_per_element)
            cloud_lat = comm_latency(raw, wireless)
            cloud_en = tx_energy(raw, wireless)
            for i in range(1, len(ios)):
                if ios[i - 1].output_bytes >= raw:
                    lat = sum(c.latency_s for c in costs[:i]) + comm_latency(
                        ios[i - 1].output_bytes, wireless
                    )
                    en = sum(c.energy_j for c in costs[:i]) + tx_energy(
                        ios[i - 1].output_bytes, wireless
                    )
                    assert lat >= cloud_lat and en >= cloud_en

    def test_latency_nonincreasing_in_throughput(self, device):
        spec = decode(sample_random(21), (224, 224, 3))
        grid = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0]
        prev = None
        for t_u in grid:
            ev = evaluate_deployment(spec, device, lte(t_u=t_u))
            table = dict(zip(ev.candidates, ev.latency_acc))
            if prev is not None:
                for i, value in table.items():
                    assert value <= prev[i] + 1e-15
            prev = table

    def test_tx_energy_approaches_alpha_asymptote(self):
        wireless = lte(t_u=1e7, alpha=0.1, beta=1.0)
        asymptote = 0.1 * INPUT_224_BYTES * 8 / 1e6
        assert tx_energy(INPUT_224_BYTES, wireless) == pytest.approx(asymptote, rel=1e-5)

    def test_deterministic(self, device):
        spec = decode(sample_random(2), (224, 224, 3))
        assert evaluate_deployment(spec, device, lte()) == evaluate_deployment(
            spec, device, lte()
        )
