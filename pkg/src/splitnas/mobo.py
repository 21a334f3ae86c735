"""Multi-objective Bayesian optimization over the architecture space.

Three GP surrogates (test error, split-optimal latency, split-optimal energy)
are refit on all queried data each iteration.  A joint posterior sample is
drawn per objective over a fresh random candidate pool, collapsed to a single
score by a randomly weighted augmented Chebyshev scalarization, and the best
pool point becomes the next query.  Latency and energy always come from the
optimal-split evaluator, so the archive can never contain a point whose
costs a different split of the same genome would improve.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

try:  # the GP matrices are small; BLAS thread fan-out costs more than it saves
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    from contextlib import nullcontext

    def threadpool_limits(*args, **kwargs):
        return nullcontext()


from .accuracy import EvaluationFailedError
from .cost_models import DeploymentEvaluation, DeviceProfile, WirelessProfile, evaluate_deployment
from .gp import GPSurrogate, gp_fit, joint_posterior_samples
from .pareto import ArchiveEntry, ParetoArchive
from .search_space import (
    FC_NEURONS,
    FILTER_COUNTS,
    KERNEL_SIZES,
    LAYERS_PER_BLOCK,
    NUM_BLOCKS,
    NUM_FC_SLOTS,
    ArchitectureGenome,
    ArchitectureSpec,
    decode,
    sample_many,
    sample_random,
)

LOG_FORMAT_VERSION = 1

FEATURE_DIM = 4 * NUM_BLOCKS + 2 * NUM_FC_SLOTS


@dataclass(frozen=True)
class SpaceConfig:
    """Decode settings: one input shape for the deployment objectives, one for
    the accuracy objective (they may legitimately differ), and the class count."""

    perf_input: tuple[int, int, int] = (224, 224, 3)
    accuracy_input: tuple[int, int, int] = (32, 32, 3)
    class_count: int = 10

    @classmethod
    def from_json_dict(cls, d: dict) -> "SpaceConfig":
        return cls(
            perf_input=tuple(int(v) for v in d["perf_input"]),
            accuracy_input=tuple(int(v) for v in d["accuracy_input"]),
            class_count=int(d["classes"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "SpaceConfig":
        return cls.from_json_dict(json.loads(Path(path).read_text()))

    @classmethod
    def default(cls) -> "SpaceConfig":
        text = resources.files("splitnas").joinpath("data/space_default.json").read_text()
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class SearchConfig:
    """Search loop knobs."""

    c_init: int = 20
    n_iter: int = 100
    pool_size: int = 512
    seed: int = 0
    scalarization: str = "augmented-chebyshev"
    augmentation: float = 0.05
    log_scale_costs: bool = True  # latency/energy span orders of magnitude across splits
    length_scale: float = 2.0
    noise_var: float = 1e-4

    def __post_init__(self):
        if self.c_init < 2:
            raise ValueError(f"c_init must be >= 2, got {self.c_init}")
        if self.n_iter < 0:
            raise ValueError(f"n_iter must be >= 0, got {self.n_iter}")
        if self.pool_size < 1:
            raise ValueError(f"pool_size must be >= 1, got {self.pool_size}")
        if self.scalarization != "augmented-chebyshev":
            raise ValueError(f"unknown scalarization {self.scalarization!r}")


def encode_features(genome: ArchitectureGenome) -> np.ndarray:
    """Embed a genome in [0, 1]^24 for the GP surrogates.

    Per block: layer count, log kernel size, log filter count, pooling flag;
    then the FC presence flags and log neuron counts (zero when absent).
    Each dimension is min-max normalized over its option range, and distinct
    canonical genomes map to distinct vectors.
    """
    features: list[float] = []

    def _norm_log(value: float, options) -> float:
        lo, hi = math.log(options[0]), math.log(options[-1])
        return (math.log(value) - lo) / (hi - lo)

    for b in range(NUM_BLOCKS):
        layers = LAYERS_PER_BLOCK[genome.block_layers[b]]
        features.append((layers - LAYERS_PER_BLOCK[0]) / (LAYERS_PER_BLOCK[-1] - LAYERS_PER_BLOCK[0]))
        features.append(_norm_log(KERNEL_SIZES[genome.block_kernels[b]], KERNEL_SIZES))
        features.append(_norm_log(FILTER_COUNTS[genome.block_filters[b]], FILTER_COUNTS))
        features.append(1.0 if genome.block_pools[b] else 0.0)
    for slot in range(NUM_FC_SLOTS):
        features.append(1.0 if genome.fc_present[slot] else 0.0)
    for slot in range(NUM_FC_SLOTS):
        if genome.fc_present[slot]:
            features.append(_norm_log(FC_NEURONS[genome.fc_neurons[slot]], FC_NEURONS))
        else:
            features.append(0.0)
    return np.array(features)


def build_acquisition(
    objective_samples: list[np.ndarray] | np.ndarray,
    weights: np.ndarray,
    augmentation: float = 0.05,
) -> np.ndarray:
    """Per-point acquisition from one posterior sample per objective.

    Each objective's sampled values are min-max normalized over the pool
    (constant objectives normalize to zero), then collapsed by the augmented
    Chebyshev scalarization; the negated score is returned so that higher
    acquisition means more promising under minimization.
    """
    samples = np.atleast_2d(np.asarray(objective_samples, dtype=float))
    weights = np.asarray(weights, dtype=float).ravel()
    if samples.shape[0] != weights.shape[0]:
        raise ValueError(f"{samples.shape[0]} sample vectors vs {weights.shape[0]} weights")
    lo = samples.min(axis=1, keepdims=True)
    span = samples.max(axis=1, keepdims=True) - lo
    normalized = np.where(span > 0, (samples - lo) / np.where(span > 0, span, 1.0), 0.0)
    weighted = weights[:, None] * normalized
    score = weighted.max(axis=0) + augmentation * weighted.sum(axis=0)
    return -score


def argmax_acquisition(values: np.ndarray, pool: list) -> object:
    """Pool element with maximal acquisition; ties go to the lowest index."""
    if len(pool) == 0:
        raise ValueError("empty candidate pool")
    return pool[int(np.argmax(values))]


@dataclass(frozen=True)
class QueryRecord:
    """One successful evaluation in query order."""

    iteration: int
    genome: ArchitectureGenome
    error_pct: float
    latency_s: float
    energy_j: float
    index_latency: int
    index_energy: int

    @property
    def objectives(self) -> tuple[float, float, float]:
        return (self.error_pct, self.latency_s, self.energy_j)


@dataclass(frozen=True)
class FailedQuery:
    iteration: int
    genome: ArchitectureGenome
    reason: str


@dataclass
class SearchResult:
    archive: ParetoArchive
    log: list[QueryRecord]
    failures: list[FailedQuery]
    config: SearchConfig
    space: SpaceConfig

    def objectives_array(self) -> np.ndarray:
        return np.array([rec.objectives for rec in self.log], dtype=float)

    def write_log_csv(self, path: str | Path) -> None:
        """Query log: one row per evaluation, stable field formatting."""
        with open(path, "w", newline="") as fh:
            fh.write(f"# format={LOG_FORMAT_VERSION}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["iteration", "genome", "error", "latency_s", "energy_J", "index_L", "index_E"]
            )
            for rec in self.log:
                writer.writerow(
                    [
                        rec.iteration,
                        json.dumps(rec.genome.to_json_dict(), sort_keys=True, separators=(",", ":")),
                        repr(rec.error_pct),
                        repr(rec.latency_s),
                        repr(rec.energy_j),
                        rec.index_latency,
                        rec.index_energy,
                    ]
                )

    def write_archive_json(self, path: str | Path) -> None:
        entries = []
        for entry in self.archive:
            error_pct, latency_s, energy_j = entry.objectives
            entries.append(
                {
                    "genome": entry.genome.to_json_dict(),
                    "error": error_pct,
                    "latency_s": latency_s,
                    "energy_j": energy_j,
                    "index_L": entry.evaluation.index_latency,
                    "index_E": entry.evaluation.index_energy,
                }
            )
        payload = {
            "format": LOG_FORMAT_VERSION,
            "objectives": ["error_pct", "latency_s", "energy_j"],
            "entries": entries,
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _gp_targets(records: list[QueryRecord], log_scale_costs: bool) -> list[np.ndarray]:
    error = np.array([r.error_pct for r in records])
    latency = np.array([r.latency_s for r in records])
    energy = np.array([r.energy_j for r in records])
    if log_scale_costs:
        latency = np.log(latency)
        energy = np.log(energy)
    return [error, latency, energy]


def run_search(
    config: SearchConfig,
    space: SpaceConfig,
    device: DeviceProfile,
    wireless: WirelessProfile,
    evaluator: Callable[[ArchitectureSpec], float],
) -> SearchResult:
    """Full search: random initialization, then sequential MOBO queries.

    ``evaluator`` maps a decoded architecture to test error in percent and
    signals failure by raising :class:`EvaluationFailedError`; failed genomes
    are recorded and skipped without consuming extra evaluations.  Fixed seed
    implies a bit-identical query log.
    """
    rng = np.random.default_rng(config.seed)
    archive = ParetoArchive()
    log: list[QueryRecord] = []
    failures: list[FailedQuery] = []
    queried: set[ArchitectureGenome] = set()

    def _evaluate(slot: int, genome: ArchitectureGenome) -> bool:
        queried.add(genome)
        try:
            error_pct = evaluator(decode(genome, space.accuracy_input, space.class_count))
        except EvaluationFailedError as exc:
            failures.append(FailedQuery(iteration=slot, genome=genome, reason=str(exc)))
            return False
        deployment = evaluate_deployment(
            decode(genome, space.perf_input, space.class_count), device, wireless
        )
        record = QueryRecord(
            iteration=slot,
            genome=genome,
            error_pct=error_pct,
            latency_s=deployment.latency_s,
            energy_j=deployment.energy_j,
            index_latency=deployment.index_latency,
            index_energy=deployment.index_energy,
        )
        log.append(record)
        archive.update(
            ArchiveEntry(objectives=record.objectives, genome=genome, evaluation=deployment)
        )
        return True

    def _fresh_genome() -> ArchitectureGenome:
        while True:
            genome = sample_random(rng)
            if genome not in queried:
                return genome

    for slot in range(config.c_init):
        _evaluate(slot, _fresh_genome())

    with threadpool_limits(limits=1, user_api="blas"):
        _mobo_iterations(config, rng, log, queried, _evaluate, _fresh_genome)

    return SearchResult(archive=archive, log=log, failures=failures, config=config, space=space)


def _mobo_iterations(config, rng, log, queried, _evaluate, _fresh_genome) -> None:
    for n in range(config.n_iter):
        slot = config.c_init + n
        if not log:
            # Nothing evaluable yet (every init evaluation failed): keep sampling.
            _evaluate(slot, _fresh_genome())
            continue

        features = np.array([encode_features(r.genome) for r in log])
        surrogates = [
            gp_fit(
                features,
                target,
                length_scales=config.length_scale,
                noise_var=config.noise_var,
            )
            for target in _gp_targets(log, config.log_scale_costs)
        ]

        weights = rng.dirichlet(np.ones(len(surrogates)))
        pool = [g for g in sample_many(rng, config.pool_size) if g not in queried]
        if not pool:
            _evaluate(slot, _fresh_genome())
            continue

        pool_features = np.array([encode_features(g) for g in pool])
        samples = joint_posterior_samples(surrogates, pool_features, rng)
        acquisition = build_acquisition(samples, weights, config.augmentation)
        _evaluate(slot, argmax_acquisition(acquisition, pool))


def run_random_search(
    n_evals: int,
    space: SpaceConfig,
    device: DeviceProfile,
    wireless: WirelessProfile,
    evaluator: Callable[[ArchitectureSpec], float],
    seed: int = 0,
) -> SearchResult:
    """Pure random search baseline with the same evaluation pipeline."""
    config = SearchConfig(c_init=max(2, n_evals), n_iter=0, seed=seed)
    return run_search(config, space, device, wireless, evaluator)
