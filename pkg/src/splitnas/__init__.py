"""Partition-aware multi-objective neural architecture search for two-tier
edge-cloud deployments.

The library scores candidate convolutional architectures under their optimal
edge/cloud layer split given expected wireless conditions, searches the space
with GP-based multi-objective Bayesian optimization, and derives throughput
thresholds for switching deployment options at runtime.
"""

__version__ = "0.1.0"

from .accuracy import (
    EvaluationFailedError,
    EvaluatorBinding,
    ExternalEvaluator,
    ProxyConfig,
    external_error,
    parameter_count,
    proxy_error,
)
from .cost_models import (
    DeploymentEvaluation,
    DeviceProfile,
    LayerCost,
    ProfileError,
    WirelessProfile,
    comm_latency,
    evaluate_deployment,
    identify_partition_candidates,
    layer_costs,
    predict_layer,
    tx_energy,
    tx_latency,
)
from .gp import GPSurrogate, IllConditionedError, gp_fit, gp_posterior, sample_posterior_on_pool
from .mobo import (
    SearchConfig,
    SearchResult,
    SpaceConfig,
    argmax_acquisition,
    build_acquisition,
    encode_features,
    run_random_search,
    run_search,
)
from .pareto import ArchiveEntry, ParetoArchive, dominates, hypervolume
from .runtime import (
    DeploymentOption,
    DominanceMap,
    DynamicPolicy,
    FixedPolicy,
    ThroughputTrace,
    TraceFormatError,
    build_dominance_map,
    enumerate_options,
    option_cost,
    pairwise_threshold,
    replay_trace,
    select_option,
)
from .search_space import (
    ArchitectureGenome,
    ArchitectureSpec,
    GenomeValidationError,
    LayerIO,
    LayerSpec,
    ShapeConsistencyError,
    compute_sizes,
    decode,
    encode,
    sample_random,
    validate,
)
