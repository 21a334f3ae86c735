"""Command-line front end.

Subcommands: ``search`` (run the full architecture search and write its
log/archive/manifest), ``evaluate`` (price one architecture's splits),
``thresholds`` (emit throughput dominance maps), and ``replay`` (compare
fixed vs. dynamic deployment over a throughput trace).  All outputs are
plain CSV/JSON ready for external plotting; given identical flags and seed,
outputs are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .accuracy import EvaluatorBinding, make_evaluator
from .cost_models import DeviceProfile, ProfileError, WirelessProfile, evaluate_deployment, layer_costs
from .mobo import LOG_FORMAT_VERSION, SearchConfig, SpaceConfig, run_search
from .runtime import (
    METRICS,
    DynamicPolicy,
    FixedPolicy,
    ThroughputTrace,
    TraceFormatError,
    build_dominance_map,
    enumerate_options,
    replay_trace,
)
from .search_space import ArchitectureSpec, ShapeConsistencyError

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_EVALUATOR_FAILURES = 3


def default_space_path() -> Path:
    return Path(str(resources.files("splitnas").joinpath("data/space_default.json")))


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_BAD_INPUT


def _load_arch(path: str) -> ArchitectureSpec:
    return ArchitectureSpec.from_json(Path(path).read_text())


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def cmd_search(args: argparse.Namespace) -> int:
    started = _utc_now()
    try:
        space = SpaceConfig.load(args.space)
        device = DeviceProfile.load(args.device)
        wireless = WirelessProfile.load(args.wireless)
        config = SearchConfig(
            c_init=args.init, n_iter=args.iters, pool_size=args.pool, seed=args.seed
        )
        binding = EvaluatorBinding(
            mode=args.evaluator,
            command=args.trainer_cmd or "",
            timeout_s=args.timeout,
            epochs=args.epochs,
            dataset=args.dataset,
            seed=args.seed,
        )
    except (OSError, json.JSONDecodeError, ProfileError, KeyError, ValueError) as exc:
        return _fail(str(exc))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    evaluator, closer = make_evaluator(binding)
    try:
        result = run_search(config, space, device, wireless, evaluator)
    finally:
        closer()

    log_path = out_dir / "log.csv"
    archive_path = out_dir / "pareto.json"
    manifest_path = out_dir / "manifest.json"
    result.write_log_csv(log_path)
    result.write_archive_json(archive_path)

    attempted = config.c_init + config.n_iter
    failure_frac = len(result.failures) / attempted if attempted else 0.0
    manifest = {
        "format": LOG_FORMAT_VERSION,
        "command": "search",
        "config": {
            "space": str(args.space),
            "device": str(args.device),
            "wireless": str(args.wireless),
            "init": config.c_init,
            "iters": config.n_iter,
            "pool": config.pool_size,
            "evaluator": binding.mode,
        },
        "seed": config.seed,
        "outputs": {"log": log_path.name, "pareto": archive_path.name},
        "evaluations": len(result.log),
        "failures": len(result.failures),
        "archive_size": len(result.archive),
        "versions": {"splitnas": __version__, "numpy": np.__version__},
        "started_utc": started,
        "finished_utc": _utc_now(),
    }
    _write_atomic(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    print(
        f"{len(result.log)} evaluations ({len(result.failures)} failed), "
        f"archive size {len(result.archive)} -> {out_dir}"
    )
    if failure_frac > args.max_failure_frac:
        print(
            f"error: {failure_frac:.0%} of evaluations failed "
            f"(threshold {args.max_failure_frac:.0%})",
            file=sys.stderr,
        )
        return EXIT_EVALUATOR_FAILURES
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        spec = _load_arch(args.arch)
        device = DeviceProfile.load(args.device)
        wireless = WirelessProfile.load(args.wireless)
        costs = layer_costs(spec, device)
        evaluation = evaluate_deployment(spec, device, wireless)
    except (OSError, json.JSONDecodeError, ProfileError, ShapeConsistencyError, KeyError, ValueError) as exc:
        return _fail(str(exc))

    report = {
        "layers": [
            {
                "index": i + 1,
                "kind": spec.layers[i].kind,
                "latency_s": c.latency_s,
                "power_w": c.power_w,
                "energy_j": c.energy_j,
                "output_bytes": c.output_bytes,
            }
            for i, c in enumerate(costs)
        ],
        "candidates": list(evaluation.candidates),
        "index_L": evaluation.index_latency,
        "index_E": evaluation.index_energy,
        "latency_s": evaluation.latency_s,
        "energy_j": evaluation.energy_j,
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_thresholds(args: argparse.Namespace) -> int:
    try:
        spec = _load_arch(args.arch)
        device = DeviceProfile.load(args.device)
        wireless = WirelessProfile.load(args.wireless)
        options = enumerate_options(spec, device)
    except (OSError, json.JSONDecodeError, ProfileError, ShapeConsistencyError, KeyError, ValueError) as exc:
        return _fail(str(exc))

    metrics = METRICS if args.metric == "both" else (args.metric,)
    report = {
        "format": LOG_FORMAT_VERSION,
        "options": [
            {
                "label": o.label,
                "split_index": o.split_index,
                "edge_latency_s": o.edge_latency_s,
                "edge_energy_j": o.edge_energy_j,
                "tx_bytes": o.tx_bytes,
            }
            for o in options
        ],
        "maps": {
            metric: build_dominance_map(options, metric, wireless).to_json_dict()
            for metric in metrics
        },
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        spec = _load_arch(args.arch)
        device = DeviceProfile.load(args.device)
        wireless = WirelessProfile.load(args.wireless)
        trace = ThroughputTrace.from_csv(args.trace)
        options = enumerate_options(spec, device)
    except TraceFormatError as exc:
        return _fail(f"trace {args.trace}: {exc}")
    except (OSError, json.JSONDecodeError, ProfileError, ShapeConsistencyError, KeyError, ValueError) as exc:
        return _fail(str(exc))

    results = [
        replay_trace(trace, options, FixedPolicy(o.label), wireless, args.metric) for o in options
    ]
    dynamic = replay_trace(trace, options, DynamicPolicy(), wireless, args.metric)
    results.append(dynamic)

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        out.write(f"# format={LOG_FORMAT_VERSION} metric={args.metric} inferences_per_sample=1\n")
        writer = csv.writer(out, lineterminator="\n")
        names = [r.policy_name for r in results]
        writer.writerow(
            ["timestamp_s", "t_u_mbps", *names, *[f"cum_{n}" for n in names]]
        )
        for k in range(len(trace)):
            writer.writerow(
                [
                    repr(trace.timestamps_s[k]),
                    repr(trace.t_u_mbps[k]),
                    *[repr(r.per_sample[k]) for r in results],
                    *[repr(r.cumulative[k]) for r in results],
                ]
            )
    finally:
        if args.out:
            out.close()

    unit = "s" if args.metric == "latency" else "J"
    for fixed in results[:-1]:
        gain = 100.0 * (fixed.total - dynamic.total) / fixed.total
        print(
            f"dynamic vs {fixed.policy_name}: {gain:.2f}% lower accumulated {args.metric} "
            f"({dynamic.total:.6g} {unit} vs {fixed.total:.6g} {unit})"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitnas",
        description="Partition-aware multi-objective architecture search for edge-cloud pairs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run the full search and write log/archive/manifest")
    p.add_argument("--space", default=str(default_space_path()), help="space config JSON")
    p.add_argument("--device", required=True, help="device profile JSON")
    p.add_argument("--wireless", required=True, help="wireless profile JSON")
    p.add_argument("--iters", type=int, default=100, help="optimization iterations")
    p.add_argument("--init", type=int, default=20, help="random initialization count")
    p.add_argument("--pool", type=int, default=512, help="candidate pool size per iteration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--evaluator", choices=("proxy", "external"), default="proxy")
    p.add_argument("--trainer-cmd", default="", help="trainer worker command (external mode)")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--dataset", default="cifar10")
    p.add_argument("--timeout", type=float, default=600.0, help="per-evaluation timeout (s)")
    p.add_argument("--max-failure-frac", type=float, default=0.2)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="price one architecture's deployment splits")
    p.add_argument("--arch", required=True, help="architecture JSON")
    p.add_argument("--device", required=True)
    p.add_argument("--wireless", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("thresholds", help="emit throughput dominance maps")
    p.add_argument("--arch", required=True)
    p.add_argument("--device", required=True)
    p.add_argument("--wireless", required=True)
    p.add_argument("--metric", choices=(*METRICS, "both"), default="both")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("replay", help="replay a throughput trace under fixed and dynamic policies")
    p.add_argument("--trace", required=True, help="trace CSV (timestamp_s,t_u_mbps)")
    p.add_argument("--arch", required=True)
    p.add_argument("--device", required=True)
    p.add_argument("--wireless", required=True)
    p.add_argument("--metric", choices=METRICS, default="latency")
    p.add_argument("--out", default="", help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
