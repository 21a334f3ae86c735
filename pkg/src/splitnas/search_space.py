"""Discrete VGG-style convolutional search space.

The space is organized as five convolutional blocks followed by up to two
fully-connected layers and a fixed softmax classifier head.  Per block the
searchable choices are the number of stacked conv layers, their kernel size,
their filter count, and whether a 2x2 max-pool closes the block.  Structural
constraints: at least four of the five pooling layers must be present (so
feature maps shrink enough for an edge/cloud split to ever pay off) and at
least one of the two optional FC layers must exist.

Genomes are index vectors over the option lists below; ``decode`` turns a
genome into an explicit layer list, ``compute_sizes`` derives per-layer tensor
shapes and byte sizes, and ``sample_random`` draws uniformly from the set of
valid genomes by rejection.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

NUM_BLOCKS = 5
LAYERS_PER_BLOCK = (1, 2, 3)
KERNEL_SIZES = (3, 5, 7)
FILTER_COUNTS = (24, 36, 64, 96, 128, 256)
FC_NEURONS = (256, 512, 1024, 2048, 4096, 8192)
NUM_FC_SLOTS = 2
MIN_POOLS = 4

CONV = "conv"
POOL = "pool"
FC = "fc"


class GenomeValidationError(ValueError):
    """An operation received a genome that violates the space constraints."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid genome: " + "; ".join(self.violations))


class ShapeConsistencyError(ValueError):
    """A layer list is dimensionally inconsistent at some layer."""

    def __init__(self, layer_index: int, message: str):
        self.layer_index = layer_index
        super().__init__(f"layer {layer_index}: {message}")


@dataclass(frozen=True)
class ArchitectureGenome:
    """Encoded point of the search space.

    All per-block fields are index tuples of length ``NUM_BLOCKS`` pointing
    into the option lists; FC fields have one entry per optional FC slot.
    ``fc_neurons`` entries for absent slots are 0 in canonical form.
    """

    block_layers: tuple[int, ...]
    block_kernels: tuple[int, ...]
    block_filters: tuple[int, ...]
    block_pools: tuple[bool, ...]
    fc_present: tuple[bool, ...]
    fc_neurons: tuple[int, ...]

    def canonical(self) -> "ArchitectureGenome":
        """Zero the neuron index of absent FC slots (the decoded model ignores them)."""
        neurons = tuple(
            n if present else 0 for present, n in zip(self.fc_present, self.fc_neurons)
        )
        if neurons == self.fc_neurons:
            return self
        return replace(self, fc_neurons=neurons)

    def to_json_dict(self) -> dict:
        return {
            "block_layers": list(self.block_layers),
            "block_kernels": list(self.block_kernels),
            "block_filters": list(self.block_filters),
            "block_pools": [int(p) for p in self.block_pools],
            "fc_present": [int(p) for p in self.fc_present],
            "fc_neurons": list(self.fc_neurons),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ArchitectureGenome":
        return cls(
            block_layers=tuple(int(v) for v in d["block_layers"]),
            block_kernels=tuple(int(v) for v in d["block_kernels"]),
            block_filters=tuple(int(v) for v in d["block_filters"]),
            block_pools=tuple(bool(v) for v in d["block_pools"]),
            fc_present=tuple(bool(v) for v in d["fc_present"]),
            fc_neurons=tuple(int(v) for v in d["fc_neurons"]),
        )


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a decoded architecture.

    Batch-norm and the activation are fused into their host layer rather than
    appearing as separate entries; they carry negligible extra cost and do not
    change tensor sizes.  ``block`` records which search block a conv/pool
    layer came from (None for FC layers); it is decoder provenance and is not
    part of the serialized wire format.
    """

    kind: str
    units: int = 0  # filter count (conv) or neuron count (fc); 0 for pool
    kernel: int | None = None  # conv only
    stride: int = 1  # fixed: 1 for conv, 2 for the 2x2 max-pool
    padding: str | None = None  # "same" for conv
    activation: str | None = None  # fused activation, None for pool
    block: int | None = None  # conv/pool: search block; fc: optional-FC slot; head: None


@dataclass(frozen=True)
class ArchitectureSpec:
    """Decoded architecture: ordered layers plus the input tensor shape.

    The final layer is always the FC softmax classifier head.
    """

    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int]
    class_count: int

    def to_json_dict(self) -> dict:
        """Wire format; the classifier head is implied by ``classes``."""
        body = []
        for layer in self.layers[:-1]:
            if layer.kind == CONV:
                body.append({"kind": CONV, "k": layer.kernel, "f": layer.units})
            elif layer.kind == POOL:
                body.append({"kind": POOL})
            else:
                body.append({"kind": FC, "n": layer.units})
        return {
            "input": list(self.input_shape),
            "layers": body,
            "classes": self.class_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "ArchitectureSpec":
        input_shape = tuple(int(v) for v in d["input"])
        if len(input_shape) != 3 or any(v <= 0 for v in input_shape):
            raise ShapeConsistencyError(-1, f"bad input shape {input_shape}")
        class_count = int(d["classes"])
        layers: list[LayerSpec] = []
        for entry in d["layers"]:
            kind = entry.get("kind")
            if kind == CONV:
                layers.append(
                    LayerSpec(
                        kind=CONV,
                        units=int(entry["f"]),
                        kernel=int(entry["k"]),
                        stride=1,
                        padding="same",
                        activation="relu",
                    )
                )
            elif kind == POOL:
                layers.append(LayerSpec(kind=POOL, stride=2))
            elif kind == FC:
                layers.append(LayerSpec(kind=FC, units=int(entry["n"]), activation="relu"))
            else:
                raise ShapeConsistencyError(len(layers), f"unknown layer kind {kind!r}")
        layers.append(LayerSpec(kind=FC, units=class_count, activation="softmax"))
        return cls(layers=tuple(layers), input_shape=input_shape, class_count=class_count)

    @classmethod
    def from_json(cls, text: str) -> "ArchitectureSpec":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class LayerIO:
    """Tensor shapes and sizes around one layer."""

    input_shape: tuple[int, ...]
    output_shape: tuple[int, ...]
    output_elements: int
    output_bytes: int


def validate(genome: ArchitectureGenome) -> list[str]:
    """Return every violated constraint (empty list means the genome is valid)."""
    violations: list[str] = []

    def _check_len(name: str, seq, expected: int) -> bool:
        if len(seq) != expected:
            violations.append(f"{name}: expected {expected} entries, got {len(seq)}")
            return False
        return True

    ok = _check_len("block_layers", genome.block_layers, NUM_BLOCKS)
    ok &= _check_len("block_kernels", genome.block_kernels, NUM_BLOCKS)
    ok &= _check_len("block_filters", genome.block_filters, NUM_BLOCKS)
    ok &= _check_len("block_pools", genome.block_pools, NUM_BLOCKS)
    ok &= _check_len("fc_present", genome.fc_present, NUM_FC_SLOTS)
    ok &= _check_len("fc_neurons", genome.fc_neurons, NUM_FC_SLOTS)
    if not ok:
        return violations

    for name, indices, options in (
        ("block_layers", genome.block_layers, LAYERS_PER_BLOCK),
        ("block_kernels", genome.block_kernels, KERNEL_SIZES),
        ("block_filters", genome.block_filters, FILTER_COUNTS),
        ("fc_neurons", genome.fc_neurons, FC_NEURONS),
    ):
        for b, idx in enumerate(indices):
            if not 0 <= idx < len(options):
                violations.append(f"index-bounds: {name}[{b}]={idx} outside 0..{len(options) - 1}")

    if sum(genome.block_pools) < MIN_POOLS:
        violations.append(f"pool-count: {sum(genome.block_pools)} pooling layers, need >= {MIN_POOLS}")
    if not any(genome.fc_present):
        violations.append("fc-presence: at least one FC layer must be present")
    return violations


def check(genome: ArchitectureGenome) -> None:
    """Raise :class:`GenomeValidationError` listing every violated constraint."""
    violations = validate(genome)
    if violations:
        raise GenomeValidationError(violations)


def decode(
    genome: ArchitectureGenome,
    input_shape: tuple[int, int, int] = (32, 32, 3),
    class_count: int = 10,
) -> ArchitectureSpec:
    """Expand a genome into its explicit layer list.

    Layer order is block 1..5 (each: its conv stack, then the optional pool),
    the present FC layers, then the softmax classifier head.  Deterministic.
    """
    check(genome)
    layers: list[LayerSpec] = []
    for b in range(NUM_BLOCKS):
        kernel = KERNEL_SIZES[genome.block_kernels[b]]
        filters = FILTER_COUNTS[genome.block_filters[b]]
        for _ in range(LAYERS_PER_BLOCK[genome.block_layers[b]]):
            layers.append(
                LayerSpec(
                    kind=CONV,
                    units=filters,
                    kernel=kernel,
                    stride=1,
                    padding="same",
                    activation="relu",
                    block=b,
                )
            )
        if genome.block_pools[b]:
            layers.append(LayerSpec(kind=POOL, stride=2, block=b))
    for slot in range(NUM_FC_SLOTS):
        if genome.fc_present[slot]:
            layers.append(
                LayerSpec(
                    kind=FC,
                    units=FC_NEURONS[genome.fc_neurons[slot]],
                    activation="relu",
                    block=slot,
                )
            )
    layers.append(LayerSpec(kind=FC, units=class_count, activation="softmax"))
    return ArchitectureSpec(layers=tuple(layers), input_shape=tuple(input_shape), class_count=class_count)


def encode(spec: ArchitectureSpec) -> ArchitectureGenome:
    """Recover the (canonical) genome of a decoded spec.

    Requires the decoder's block annotations; specs loaded from the wire
    format lose them and cannot be re-encoded.
    """
    convs: dict[int, list[LayerSpec]] = {b: [] for b in range(NUM_BLOCKS)}
    pools = [False] * NUM_BLOCKS
    fc_layers: list[LayerSpec] = []
    for layer in spec.layers[:-1]:
        if layer.kind == FC:
            fc_layers.append(layer)
            continue
        if layer.block is None:
            raise ValueError("spec lacks block annotations; cannot recover the genome")
        if layer.kind == CONV:
            convs[layer.block].append(layer)
        else:
            pools[layer.block] = True

    block_layers, block_kernels, block_filters = [], [], []
    for b in range(NUM_BLOCKS):
        stack = convs[b]
        if not stack:
            raise ValueError(f"block {b} has no conv layers")
        block_layers.append(LAYERS_PER_BLOCK.index(len(stack)))
        block_kernels.append(KERNEL_SIZES.index(stack[0].kernel))
        block_filters.append(FILTER_COUNTS.index(stack[0].units))

    if len(fc_layers) > NUM_FC_SLOTS:
        raise ValueError(f"{len(fc_layers)} FC layers exceed the {NUM_FC_SLOTS} search slots")
    fc_present = [False] * NUM_FC_SLOTS
    fc_neurons = [0] * NUM_FC_SLOTS
    for order, layer in enumerate(fc_layers):
        slot = layer.block if layer.block is not None else order
        fc_present[slot] = True
        fc_neurons[slot] = FC_NEURONS.index(layer.units)
    return ArchitectureGenome(
        block_layers=tuple(block_layers),
        block_kernels=tuple(block_kernels),
        block_filters=tuple(block_filters),
        block_pools=tuple(pools),
        fc_present=tuple(fc_present),
        fc_neurons=tuple(fc_neurons),
    )


def compute_sizes(spec: ArchitectureSpec, bytes_per_element: int = 1) -> list[LayerIO]:
    """Per-layer tensor shapes, element counts, and byte sizes.

    Same-padding convs preserve HxW and set the channel count to the filter
    count; the 2x2 stride-2 max-pool computes ceil(H/2) x ceil(W/2); an FC
    layer flattens its input.  Byte sizes are element counts times
    ``bytes_per_element`` (one unit for raw inputs and feature maps alike, so
    sizes are comparable when picking split points).
    """
    if bytes_per_element <= 0:
        raise ValueError(f"bytes_per_element must be positive, got {bytes_per_element}")
    ios: list[LayerIO] = []
    cur: tuple[int, ...] = tuple(spec.input_shape)
    for i, layer in enumerate(spec.layers):
        if layer.kind == CONV:
            if len(cur) != 3:
                raise ShapeConsistencyError(i, f"conv requires an HxWxC input, got shape {cur}")
            out = (cur[0], cur[1], layer.units)
        elif layer.kind == POOL:
            if len(cur) != 3:
                raise ShapeConsistencyError(i, f"pool requires an HxWxC input, got shape {cur}")
            out = (math.ceil(cur[0] / 2), math.ceil(cur[1] / 2), cur[2])
        elif layer.kind == FC:
            out = (layer.units,)
        else:
            raise ShapeConsistencyError(i, f"unknown layer kind {layer.kind!r}")
        if any(v <= 0 for v in out):
            raise ShapeConsistencyError(i, f"non-positive output shape {out}")
        elements = math.prod(out)
        ios.append(
            LayerIO(
                input_shape=cur,
                output_shape=out,
                output_elements=elements,
                output_bytes=elements * bytes_per_element,
            )
        )
        cur = out
    return ios


def input_bytes(spec: ArchitectureSpec, bytes_per_element: int = 1) -> int:
    """Byte size of the raw input tensor."""
    return math.prod(spec.input_shape) * bytes_per_element


def sample_many(rng: np.random.Generator | int, count: int) -> list[ArchitectureGenome]:
    """Draw ``count`` genomes i.i.d. uniformly over the set of valid genomes.

    Rejection sampling over the raw index space, drawn in batches: roughly
    one raw draw in seven survives the pooling and FC-presence constraints.
    Passing the same seed (or a generator in the same state) reproduces the
    draws.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    out: list[ArchitectureGenome] = []
    while len(out) < count:
        batch = max(64, 8 * (count - len(out)))
        layers = rng.integers(0, len(LAYERS_PER_BLOCK), (batch, NUM_BLOCKS))
        kernels = rng.integers(0, len(KERNEL_SIZES), (batch, NUM_BLOCKS))
        filters = rng.integers(0, len(FILTER_COUNTS), (batch, NUM_BLOCKS))
        pools = rng.integers(0, 2, (batch, NUM_BLOCKS)).astype(bool)
        fc_present = rng.integers(0, 2, (batch, NUM_FC_SLOTS)).astype(bool)
        fc_neurons = rng.integers(0, len(FC_NEURONS), (batch, NUM_FC_SLOTS))
        fc_neurons[~fc_present] = 0  # canonical form
        valid = (pools.sum(axis=1) >= MIN_POOLS) & fc_present.any(axis=1)
        for i in np.nonzero(valid)[0][: count - len(out)]:
            out.append(
                ArchitectureGenome(
                    block_layers=tuple(layers[i].tolist()),
                    block_kernels=tuple(kernels[i].tolist()),
                    block_filters=tuple(filters[i].tolist()),
                    block_pools=tuple(pools[i].tolist()),
                    fc_present=tuple(fc_present[i].tolist()),
                    fc_neurons=tuple(fc_neurons[i].tolist()),
                )
            )
    return out


def sample_random(rng: np.random.Generator | int) -> ArchitectureGenome:
    """Draw a single genome uniformly from the set of valid genomes."""
    return sample_many(rng, 1)[0]
