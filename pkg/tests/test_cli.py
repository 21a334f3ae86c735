import json
import shutil
from pathlib import Path

import pytest

from splitnas.cli import main
from splitnas.cost_models import DeviceProfile, WirelessProfile
from splitnas.search_space import decode, sample_random

DATA = Path(__file__).parent.parent / "src" / "splitnas" / "data"


@pytest.fixture
def profiles(tmp_path):
    device = tmp_path / "device.json"
    wireless = tmp_path / "wireless.json"
    shutil.copy(DATA / "device_synthetic.json", device)
    shutil.copy(DATA / "wireless_lte.json", wireless)
    return device, wireless


@pytest.fixture
def arch_file(tmp_path):
    spec = decode(sample_random(8), (224, 224, 3), 10)
    path = tmp_path / "arch.json"
    path.write_text(spec.to_json())
    return path


def search_args(profiles, out, seed=7, extra=()):
    device, wireless = profiles
    return [
        "search",
        "--device", str(device),
        "--wireless", str(wireless),
        "--iters", "3",
        "--init", "4",
        "--pool", "16",
        "--seed", str(seed),
        "--out", str(out),
        *extra,
    ]


class TestSearchCommand:
    def test_writes_all_outputs(self, profiles, tmp_path, capsys):
        out = tmp_path / "run1"
        assert main(search_args(profiles, out)) == 0
        assert (out / "log.csv").exists()
        assert (out / "pareto.json").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        for name in manifest["outputs"].values():
            assert (out / name).exists()
        assert manifest["seed"] == 7
        archive = json.loads((out / "pareto.json").read_text())
        assert archive["format"] == 1 and archive["entries"]

    def test_missing_wireless_file_exits_2(self, profiles, tmp_path, capsys):
        device, _ = profiles
        argv = [
            "search",
            "--device", str(device),
            "--wireless", str(tmp_path / "nope.json"),
            "--out", str(tmp_path / "run"),
        ]
        assert main(argv) == 2
        assert "nope.json" in capsys.readouterr().err

    def test_same_seed_identical_log_bytes(self, profiles, tmp_path, capsys):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(search_args(profiles, out_a)) == 0
        assert main(search_args(profiles, out_b)) == 0
        assert (out_a / "log.csv").read_bytes() == (out_b / "log.csv").read_bytes()

    def test_failing_external_trainer_exits_3(self, profiles, tmp_path, capsys):
        import sys

        stub = Path(__file__).parent / "stub_trainer.py"
        out = tmp_path / "run"
        argv = search_args(
            profiles,
            out,
            extra=["--evaluator", "external", "--trainer-cmd", f"{sys.executable} {stub} report"],
        )
        assert main(argv) == 3

    def test_bad_search_config_exits_2(self, profiles, tmp_path, capsys):
        out = tmp_path / "run"
        argv = search_args(profiles, out)
        argv[argv.index("--init") + 1] = "1"  # below the minimum of 2
        assert main(argv) == 2
        assert "c_init" in capsys.readouterr().err


class TestEvaluateCommand:
    def test_reports_split_tables(self, profiles, arch_file, capsys):
        device, wireless = profiles
        assert main(["evaluate", "--arch", str(arch_file), "--device", str(device), "--wireless", str(wireless)]) == 0
        report = json.loads(capsys.readouterr().out)
        spec = decode(sample_random(8), (224, 224, 3), 10)
        assert len(report["layers"]) == len(spec.layers)
        assert report["index_L"] in report["candidates"]
        assert report["index_E"] in report["candidates"]
        assert report["latency_s"] > 0 and report["energy_j"] > 0

    def test_invalid_arch_exits_2(self, profiles, tmp_path, capsys):
        device, wireless = profiles
        bad = tmp_path / "bad.json"
        bad.write_text('{"input": [32, 32, 3], "layers": [{"kind": "warp"}], "classes": 10}')
        assert main(["evaluate", "--arch", str(bad), "--device", str(device), "--wireless", str(wireless)]) == 2


class TestThresholdsCommand:
    def test_emits_maps_for_both_metrics(self, profiles, arch_file, capsys):
        device, wireless = profiles
        assert main(["thresholds", "--arch", str(arch_file), "--device", str(device), "--wireless", str(wireless)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report["maps"]) == {"latency", "energy"}
        for dmap in report["maps"].values():
            assert dmap["intervals"][0]["t_u_lo_mbps"] == 0.0
            assert dmap["intervals"][-1]["t_u_hi_mbps"] is None

    def test_metric_filter(self, profiles, arch_file, capsys):
        device, wireless = profiles
        assert main([
            "thresholds", "--arch", str(arch_file), "--device", str(device),
            "--wireless", str(wireless), "--metric", "energy",
        ]) == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report["maps"]) == {"energy"}

    def test_metric_maps_differ_when_alpha_positive(self, tmp_path, arch_file, capsys):
        # With a nonzero alpha the energy crossing sits elsewhere than the
        # latency crossing, so the interval boundaries must differ.
        device = tmp_path / "device.json"
        shutil.copy(DATA / "device_synthetic.json", device)
        wireless = tmp_path / "wl.json"
        wireless.write_text(json.dumps({
            "tech": "LTE", "t_u_mbps": 3.0, "l_rt_s": 0.05, "alpha_u": 0.5, "beta_u": 1.0,
        }))
        assert main(["thresholds", "--arch", str(arch_file), "--device", str(device), "--wireless", str(wireless)]) == 0
        report = json.loads(capsys.readouterr().out)
        lat = [iv["t_u_hi_mbps"] for iv in report["maps"]["latency"]["intervals"]]
        en = [iv["t_u_hi_mbps"] for iv in report["maps"]["energy"]["intervals"]]
        assert lat != en


class TestReplayCommand:
    def write_trace(self, tmp_path, rows):
        path = tmp_path / "trace.csv"
        path.write_text("timestamp_s,t_u_mbps\n" + "\n".join(rows) + "\n")
        return path

    def test_constant_trace_dynamic_equals_best_fixed(self, profiles, arch_file, tmp_path, capsys):
        device, wireless = profiles
        trace = self.write_trace(tmp_path, [f"{300 * k},2.0" for k in range(10)])
        out = tmp_path / "replay.csv"
        assert main([
            "replay", "--trace", str(trace), "--arch", str(arch_file),
            "--device", str(device), "--wireless", str(wireless),
            "--metric", "energy", "--out", str(out),
        ]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# format=1")
        header = lines[1].split(",")
        rows = [line.split(",") for line in lines[2:]]
        cum = {name: float(rows[-1][i]) for i, name in enumerate(header)}
        dynamic_total = cum["cum_dynamic"]
        fixed_totals = [v for k, v in cum.items() if k.startswith("cum_fixed:")]
        assert dynamic_total == min(fixed_totals)

    def test_malformed_trace_names_line(self, profiles, arch_file, tmp_path, capsys):
        device, wireless = profiles
        trace = self.write_trace(tmp_path, ["0,3.0", "oops"])
        assert main([
            "replay", "--trace", str(trace), "--arch", str(arch_file),
            "--device", str(device), "--wireless", str(wireless),
        ]) == 2
        assert "line 3" in capsys.readouterr().err

    def test_empty_trace_exits_2(self, profiles, arch_file, tmp_path, capsys):
        device, wireless = profiles
        trace = self.write_trace(tmp_path, [])
        assert main([
            "replay", "--trace", str(trace), "--arch", str(arch_file),
            "--device", str(device), "--wireless", str(wireless),
        ]) == 2

    def test_summary_reports_improvements(self, profiles, arch_file, tmp_path, capsys):
        device, wireless = profiles
        trace = self.write_trace(tmp_path, [f"{300 * k},{(0.4, 9.0)[k % 2]}" for k in range(12)])
        assert main([
            "replay", "--trace", str(trace), "--arch", str(arch_file),
            "--device", str(device), "--wireless", str(wireless), "--metric", "latency",
            "--out", str(tmp_path / "r.csv"),
        ]) == 0
        summary = capsys.readouterr().out
        assert "dynamic vs fixed:" in summary and "% lower accumulated latency" in summary
