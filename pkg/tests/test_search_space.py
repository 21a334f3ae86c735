import math

import numpy as np
import pytest

from splitnas.search_space import (
    CONV,
    FC,
    FC_NEURONS,
    FILTER_COUNTS,
    KERNEL_SIZES,
    POOL,
    ArchitectureGenome,
    ArchitectureSpec,
    GenomeValidationError,
    LayerSpec,
    ShapeConsistencyError,
    compute_sizes,
    decode,
    encode,
    input_bytes,
    sample_random,
    validate,
)


def make_genome(
    layers=(0, 0, 0, 0, 0),
    kernels=(0, 0, 0, 0, 0),
    filters=(0, 0, 0, 0, 0),
    pools=(True, True, True, True, True),
    fc_present=(True, False),
    fc_neurons=(0, 0),
):
    return ArchitectureGenome(
        block_layers=tuple(layers),
        block_kernels=tuple(kernels),
        block_filters=tuple(filters),
        block_pools=tuple(pools),
        fc_present=tuple(fc_present),
        fc_neurons=tuple(fc_neurons),
    )


MINIMAL = make_genome()


class TestValidate:
    def test_valid_genome_passes(self):
        assert validate(MINIMAL) == []

    def test_no_fc_flag_reported(self):
        violations = validate(make_genome(fc_present=(False, False)))
        assert any(v.startswith("fc-presence") for v in violations)

    def test_three_pools_rejected(self):
        violations = validate(make_genome(pools=(True, True, True, False, False)))
        assert any(v.startswith("pool-count") for v in violations)

    def test_all_violations_reported_together(self):
        violations = validate(
            make_genome(pools=(True, True, True, False, False), fc_present=(False, False))
        )
        kinds = {v.split(":")[0] for v in violations}
        assert {"pool-count", "fc-presence"} <= kinds

    def test_out_of_bounds_index_reported(self):
        violations = validate(make_genome(kernels=(0, 0, 0, 0, 9)))
        assert any("block_kernels[4]" in v for v in violations)


class TestDecode:
    def test_minimal_configuration_layer_count(self):
        # 5 conv + 5 pool + 1 FC + classifier head
        spec = decode(MINIMAL, (32, 32, 3), 10)
        assert len(spec.layers) == 12
        kinds = [l.kind for l in spec.layers]
        assert kinds.count(CONV) == 5 and kinds.count(POOL) == 5 and kinds.count(FC) == 2

    def test_three_layer_blocks_give_fifteen_convs(self):
        spec = decode(make_genome(layers=(2, 2, 2, 2, 2)))
        assert sum(1 for l in spec.layers if l.kind == CONV) == 15

    def test_invalid_genome_raises_named_violation(self):
        with pytest.raises(GenomeValidationError) as excinfo:
            decode(make_genome(pools=(True, True, True, False, False)))
        assert "pool-count" in str(excinfo.value)

    def test_head_is_softmax_fc(self):
        spec = decode(MINIMAL, class_count=10)
        head = spec.layers[-1]
        assert head.kind == FC and head.units == 10 and head.activation == "softmax"

    def test_deterministic(self):
        assert decode(MINIMAL) == decode(MINIMAL)

    def test_second_fc_slot_only(self):
        spec = decode(make_genome(fc_present=(False, True), fc_neurons=(0, 3)))
        fcs = [l for l in spec.layers if l.kind == FC]
        assert fcs[0].units == FC_NEURONS[3] and len(fcs) == 2


class TestComputeSizes:
    def test_same_padding_conv_preserves_spatial(self):
        spec = ArchitectureSpec(
            layers=(
                LayerSpec(kind=CONV, units=24, kernel=3, padding="same", activation="relu"),
                LayerSpec(kind=FC, units=10, activation="softmax"),
            ),
            input_shape=(32, 32, 3),
            class_count=10,
        )
        ios = compute_sizes(spec)
        assert ios[0].output_shape == (32, 32, 24)

    def test_maxpool_halves_spatial(self):
        spec = decode(MINIMAL, (32, 32, 3))
        ios = compute_sizes(spec)
        assert ios[0].output_shape == (32, 32, 24)
        assert ios[1].output_shape == (16, 16, 24)

    def test_odd_spatial_rounds_up(self):
        spec = decode(MINIMAL, (7, 7, 3))
        ios = compute_sizes(spec)
        assert ios[1].output_shape == (4, 4, 24)

    def test_input_bytes_match_reported_kib(self):
        # 224x224x3 at one byte per element is exactly 147 KiB.
        spec = decode(MINIMAL, (224, 224, 3))
        assert input_bytes(spec, 1) == 150_528
        assert input_bytes(spec, 1) / 1024 == 147.0

    def test_bytes_per_element_scales_bytes(self):
        spec = decode(MINIMAL, (32, 32, 3))
        one = compute_sizes(spec, 1)
        four = compute_sizes(spec, 4)
        assert all(b.output_bytes == 4 * a.output_bytes for a, b in zip(one, four))
        assert all(a.output_elements == b.output_elements for a, b in zip(one, four))

    def test_conv_after_fc_is_inconsistent(self):
        spec = ArchitectureSpec(
            layers=(
                LayerSpec(kind=FC, units=64, activation="relu"),
                LayerSpec(kind=CONV, units=24, kernel=3, padding="same", activation="relu"),
                LayerSpec(kind=FC, units=10, activation="softmax"),
            ),
            input_shape=(8, 8, 3),
            class_count=10,
        )
        with pytest.raises(ShapeConsistencyError) as excinfo:
            compute_sizes(spec)
        assert excinfo.value.layer_index == 1


class TestSampleRandom:
    def test_same_seed_is_reproducible(self):
        assert sample_random(42) == sample_random(42)

    def test_samples_are_valid(self, rng):
        for _ in range(1000):
            assert validate(sample_random(rng)) == []

    def test_pool_patterns_respect_constraint(self, rng):
        patterns = {sample_random(rng).block_pools for _ in range(1000)}
        assert all(sum(p) >= 4 for p in patterns)
        assert len(patterns) > 1  # not stuck on a single pattern


class TestRoundTripAndProperties:
    def test_encode_inverts_decode(self, rng):
        for _ in range(500):
            genome = sample_random(rng)
            assert encode(decode(genome)) == genome.canonical()

    def test_wire_json_round_trip(self, rng):
        for _ in range(100):
            spec = decode(sample_random(rng), (224, 224, 3))
            loaded = ArchitectureSpec.from_json(spec.to_json())
            assert [l.kind for l in loaded.layers] == [l.kind for l in spec.layers]
            assert [l.units for l in loaded.layers] == [l.units for l in spec.layers]
            assert loaded.input_shape == spec.input_shape

    def test_spatial_shrinks_after_each_pool(self, rng):
        for _ in range(200):
            spec = decode(sample_random(rng), (224, 224, 3))
            ios = compute_sizes(spec)
            for layer, io in zip(spec.layers, ios):
                if layer.kind == POOL:
                    assert io.output_shape[0] < io.input_shape[0]
                    assert io.output_shape[1] < io.input_shape[1]

    def test_final_feature_map_small_with_four_pools(self, rng):
        for _ in range(200):
            spec = decode(sample_random(rng), (224, 224, 3))
            ios = compute_sizes(spec)
            last_spatial = [io for io, l in zip(ios, spec.layers) if l.kind in (CONV, POOL)][-1]
            assert last_spatial.output_shape[0] <= 14 and last_spatial.output_shape[1] <= 14

    def test_sizes_positive_and_finite_fuzz(self):
        rng = np.random.default_rng(99)
        for _ in range(10_000):
            spec = decode(sample_random(rng), (224, 224, 3))
            for io in compute_sizes(spec):
                assert io.output_bytes > 0 and math.isfinite(io.output_bytes)
