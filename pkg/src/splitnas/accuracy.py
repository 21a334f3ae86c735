"""Test-error objective: a deterministic synthetic proxy, and a client for an
external trainer process.

The proxy makes desk-scale searches possible without any training.  It is a
pure function of architecture statistics shaped like a learning outcome:
error falls with parameter count and depth, a small penalty discourages
mixing kernel sizes, and a hash-seeded jitter adds per-topology texture.
Real runs swap in the external client, which drives a long-lived trainer
worker over line-delimited JSON on its stdin/stdout.
"""

from __future__ import annotations

import hashlib
import json
import math
import queue
import shlex
import subprocess
import threading
from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .search_space import CONV, FC, ArchitectureSpec, compute_sizes

PROTOCOL_FORMAT = 1


class EvaluationFailedError(RuntimeError):
    """An accuracy evaluation could not produce a usable test error."""

    def __init__(self, message: str, raw_output: str = ""):
        self.raw_output = raw_output
        super().__init__(message if not raw_output else f"{message}\n--- trainer output ---\n{raw_output}")


@dataclass(frozen=True)
class ProxyConfig:
    """Constants of the synthetic error model (shipped as data, not code)."""

    scale: float = 90.0
    log_param_weight: float = 0.05
    depth_weight: float = 0.035
    kernel_diversity_weight: float = 1.5
    jitter_pct: float = 1.0
    jitter_seed: int = 0
    floor: float = 5.0
    ceiling: float = 90.0

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProxyConfig":
        return cls(
            scale=float(d["scale"]),
            log_param_weight=float(d["log_param_weight"]),
            depth_weight=float(d["depth_weight"]),
            kernel_diversity_weight=float(d["kernel_diversity_weight"]),
            jitter_pct=float(d["jitter_pct"]),
            jitter_seed=int(d["jitter_seed"]),
            floor=float(d["floor"]),
            ceiling=float(d["ceiling"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ProxyConfig":
        return cls.from_json_dict(json.loads(Path(path).read_text()))

    @classmethod
    def default(cls) -> "ProxyConfig":
        text = resources.files("splitnas").joinpath("data/proxy_default.json").read_text()
        return cls.from_json_dict(json.loads(text))


def parameter_count(spec: ArchitectureSpec) -> int:
    """Trainable weight count (conv kernels and FC matrices, plus biases)."""
    total = 0
    ios = compute_sizes(spec, bytes_per_element=1)
    for layer, io in zip(spec.layers, ios):
        if layer.kind == CONV:
            in_channels = io.input_shape[2]
            total += layer.kernel * layer.kernel * in_channels * layer.units + layer.units
        elif layer.kind == FC:
            in_elems = math.prod(io.input_shape)
            total += in_elems * layer.units + layer.units
    return total


def _topology_jitter(spec: ArchitectureSpec, config: ProxyConfig) -> float:
    """Deterministic jitter in [-jitter_pct, +jitter_pct] error points.

    Keyed on the layer topology only (kinds, kernels, pooling positions),
    never on filter or neuron counts, so errors stay strictly monotone in
    parameter count when only widths change.
    """
    key_parts = [f"seed={config.jitter_seed}", f"in={spec.input_shape}", f"classes={spec.class_count}"]
    for layer in spec.layers:
        key_parts.append(f"{layer.kind}:k={layer.kernel}")
    digest = hashlib.sha256("|".join(key_parts).encode()).digest()
    unit = int.from_bytes(digest[:8], "big") / 2**64
    return (2.0 * unit - 1.0) * config.jitter_pct


def proxy_error(spec: ArchitectureSpec, config: ProxyConfig | None = None) -> float:
    """Synthetic test error in percent for a decoded architecture.

    Deterministic and free of filesystem or clock dependence; same spec in,
    same error out.
    """
    if config is None:
        config = _default_proxy_config()
    params = parameter_count(spec)
    depth = sum(1 for layer in spec.layers if layer.kind in (CONV, FC))
    kernels = {layer.kernel for layer in spec.layers if layer.kind == CONV}
    diversity = max(0, len(kernels) - 1)
    base = config.scale * math.exp(
        -config.log_param_weight * math.log1p(params) - config.depth_weight * depth
    )
    error = base + config.kernel_diversity_weight * diversity + _topology_jitter(spec, config)
    return min(config.ceiling, max(config.floor, error))


_PROXY_DEFAULT: ProxyConfig | None = None


def _default_proxy_config() -> ProxyConfig:
    global _PROXY_DEFAULT
    if _PROXY_DEFAULT is None:
        _PROXY_DEFAULT = ProxyConfig.default()
    return _PROXY_DEFAULT


@dataclass(frozen=True)
class EvaluatorBinding:
    """How the search obtains test error for a candidate."""

    mode: str = "proxy"  # "proxy" | "external"
    command: str = ""  # trainer worker command line (external mode)
    timeout_s: float = 600.0
    epochs: int = 10
    dataset: str = "cifar10"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("proxy", "external"):
            raise ValueError(f"mode must be 'proxy' or 'external', got {self.mode!r}")
        if self.mode == "external" and not self.command.strip():
            raise ValueError("external mode requires a trainer command")
        if self.timeout_s <= 0:
            raise ValueError(f"timeout_s must be positive, got {self.timeout_s}")


class ExternalEvaluator:
    """Client for a long-lived trainer worker speaking line-delimited JSON.

    One request line per evaluation, one response line back, in order.  The
    worker stays alive across evaluations so dataset loading is paid once.
    A timeout or a broken stream tears the worker down; the next evaluation
    starts a fresh one.
    """

    def __init__(self, binding: EvaluatorBinding):
        if binding.mode != "external":
            raise ValueError("ExternalEvaluator requires an external-mode binding")
        self.binding = binding
        self._proc: subprocess.Popen | None = None
        self._stdout_queue: queue.Queue[str | None] = queue.Queue()
        self._stderr_tail: deque[str] = deque(maxlen=50)

    def __enter__(self) -> "ExternalEvaluator":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    @staticmethod
    def _pump_stdout(stream, out_queue) -> None:
        for line in stream:
            out_queue.put(line.rstrip("\n"))
        out_queue.put(None)  # EOF marker

    @staticmethod
    def _pump_stderr(stream, tail) -> None:
        for line in stream:
            tail.append(line.rstrip("\n"))

    def _ensure_worker(self) -> subprocess.Popen:
        if self._proc is not None and self._proc.poll() is None:
            return self._proc
        self._stdout_queue = queue.Queue()
        self._stderr_tail = deque(maxlen=50)
        try:
            self._proc = subprocess.Popen(
                shlex.split(self.binding.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise EvaluationFailedError(f"cannot launch trainer {self.binding.command!r}: {exc}")
        threading.Thread(
            target=self._pump_stdout, args=(self._proc.stdout, self._stdout_queue), daemon=True
        ).start()
        threading.Thread(
            target=self._pump_stderr, args=(self._proc.stderr, self._stderr_tail), daemon=True
        ).start()
        return self._proc

    def _teardown(self) -> None:
        if self._proc is None:
            return
        self._proc.kill()
        self._proc.wait()
        self._proc = None

    def close(self) -> None:
        """Signal EOF and reap the worker."""
        if self._proc is None:
            return
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()
        self._proc = None

    def _stderr_text(self) -> str:
        return "\n".join(self._stderr_tail)

    def evaluate(self, spec: ArchitectureSpec) -> float:
        """Train/evaluate ``spec`` remotely; returns test error in percent."""
        proc = self._ensure_worker()
        request = {
            "format": PROTOCOL_FORMAT,
            "arch": spec.to_json_dict(),
            "epochs": self.binding.epochs,
            "dataset": self.binding.dataset,
            "seed": self.binding.seed,
        }
        try:
            proc.stdin.write(json.dumps(request, separators=(",", ":")) + "\n")
            proc.stdin.flush()
        except (OSError, ValueError) as exc:
            self._teardown()
            raise EvaluationFailedError(f"trainer pipe broken: {exc}", self._stderr_text())

        try:
            line = self._stdout_queue.get(timeout=self.binding.timeout_s)
        except queue.Empty:
            self._teardown()
            raise EvaluationFailedError(
                f"trainer did not respond within {self.binding.timeout_s:g}s", self._stderr_text()
            )
        if line is None:
            code = proc.wait()
            self._teardown()
            raise EvaluationFailedError(f"trainer exited (code {code}) mid-request", self._stderr_text())
        return self._parse_response(line)

    def _parse_response(self, line: str) -> float:
        try:
            response = json.loads(line)
        except json.JSONDecodeError:
            raise EvaluationFailedError("trainer response is not JSON", line)
        if not isinstance(response, dict) or response.get("format") != PROTOCOL_FORMAT:
            raise EvaluationFailedError("trainer response has wrong format tag", line)
        if "error" in response:
            raise EvaluationFailedError(f"trainer reported: {response['error']}", line)
        value = response.get("test_error")
        if not isinstance(value, (int, float)) or not 0.0 <= float(value) <= 100.0:
            raise EvaluationFailedError(f"test_error out of range: {value!r}", line)
        return float(value)


def external_error(spec: ArchitectureSpec, binding: EvaluatorBinding) -> float:
    """One-shot evaluation through a fresh worker (convenience wrapper).

    Searches should hold an :class:`ExternalEvaluator` open instead, so the
    worker's startup cost is paid once.
    """
    with ExternalEvaluator(binding) as evaluator:
        return evaluator.evaluate(spec)


def make_evaluator(binding: EvaluatorBinding, proxy_config: ProxyConfig | None = None):
    """Evaluator callable (spec -> error %) plus a closer for cleanup."""
    if binding.mode == "proxy":
        return (lambda spec: proxy_error(spec, proxy_config)), (lambda: None)
    evaluator = ExternalEvaluator(binding)
    return evaluator.evaluate, evaluator.close
