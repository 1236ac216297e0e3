from __future__ import annotations

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from srrt.cli import main
from srrt.evaluation import MotionSpec, generate_synthetic_sequence
from srrt.sequences import write_sequence


def make_dataset(tmp_path, specs, seed=0):
    root = tmp_path / "data"
    for name, spec in specs.items():
        seq = generate_synthetic_sequence(spec, np.random.default_rng(seed), name=name)
        write_sequence(seq, root / name)
    return root


STATIC = MotionSpec(length=12, image_size=(160, 120), target_size=(16, 16),
                    law="constant", velocity=(0, 0), texture_seed=1)
DRIFT = MotionSpec(length=12, image_size=(160, 120), target_size=(16, 16),
                   law="constant", velocity=(1, 0), texture_seed=2)


def strip_latency(path) -> list[str]:
    return [",".join(line.split(",")[:-1]) for line in path.read_text().splitlines()]


class TestTrackEval:
    def test_oracle_track_then_eval_closure(self, tmp_path, capsys):
        data = make_dataset(tmp_path, {"st": STATIC, "dr": DRIFT})
        out = tmp_path / "runs"
        assert main([
            "track", "--dataset", str(data), "--output", str(out),
            "--regulator", "oracle", "--tracker", "oracle", "--seed", "0", "--workers", "1",
        ]) == 0
        assert (out / "st.txt").exists() and (out / "dr.meta.json").exists()

        report = tmp_path / "report.json"
        assert main([
            "eval", "--dataset", str(data), "--trajectories", str(out),
            "--output", str(report),
        ]) == 0
        payload = json.loads(report.read_text())
        assert payload["mean"]["auc"] == pytest.approx(20 / 21, abs=1e-9)
        assert payload["mean"]["p"] == 1.0
        assert payload["mean"]["p_norm"] == 1.0
        assert set(payload["timing"]) == {"st", "dr"}
        assert payload["timing"]["st"]["fps"] > 0
        curves = report.with_name("report_curves.csv").read_text().splitlines()
        assert curves[0] == "threshold,success_rate"
        assert len(curves) == 22

    def test_fixed_gamma_equals_restricted_categories(self, tmp_path):
        data = make_dataset(tmp_path, {"dr": DRIFT})
        fixed_out = tmp_path / "fixed"
        restricted_out = tmp_path / "restricted"
        base = ["--dataset", str(data), "--tracker", "oracle", "--sigma", "1.0",
                "--seed", "3", "--workers", "1"]
        assert main(["track", *base, "--output", str(fixed_out), "--gamma", "4"]) == 0
        assert main(["track", *base, "--output", str(restricted_out),
                     "--regulator", "oracle", "--categories", "4"]) == 0
        assert strip_latency(fixed_out / "dr.txt") == strip_latency(restricted_out / "dr.txt")

    def test_same_seed_byte_identical_modulo_latency(self, tmp_path):
        data = make_dataset(tmp_path, {"dr": DRIFT})
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["track", "--dataset", str(data), "--regulator", "oracle",
                "--tracker", "oracle", "--sigma", "2.0", "--seed", "7", "--workers", "1"]
        assert main([*args, "--output", str(a)]) == 0
        assert main([*args, "--output", str(b)]) == 0
        assert strip_latency(a / "dr.txt") == strip_latency(b / "dr.txt")
        assert (a / "dr.meta.json").read_text() == (b / "dr.meta.json").read_text()

    def test_parallel_workers_match_serial(self, tmp_path):
        data = make_dataset(tmp_path, {"st": STATIC, "dr": DRIFT})
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        args = ["track", "--dataset", str(data), "--regulator", "oracle",
                "--tracker", "oracle", "--sigma", "1.0", "--seed", "5"]
        assert main([*args, "--output", str(serial), "--workers", "1"]) == 0
        assert main([*args, "--output", str(parallel), "--workers", "2"]) == 0
        for name in ("st.txt", "dr.txt"):
            assert strip_latency(serial / name) == strip_latency(parallel / name)


class TestStats:
    def test_static_dataset_is_pure_sr2(self, tmp_path, capsys):
        data = make_dataset(tmp_path, {"st": STATIC})
        out = tmp_path / "stats.json"
        assert main(["stats", "--dataset", str(data), "--output", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["fractions"]["SR2"] == 1.0
        assert payload["pairs"] == 11
        assert payload["skipped_pairs"] == 0


class TestSample:
    def test_sample_exports_index_and_patches(self, tmp_path, capsys):
        spec = MotionSpec(length=30, image_size=(128, 96), target_size=(12, 12),
                          law="random_walk", walk_sigma=1.0, texture_seed=4)
        data = make_dataset(tmp_path, {"walk": spec})
        out = tmp_path / "trainset"
        assert main([
            "sample", "--dataset", str(data), "--output", str(out),
            "--count", "8", "--seed", "1",
        ]) == 0
        lines = (out / "index.csv").read_text().splitlines()
        assert len(lines) == 9
        assert len(list((out / "patches").iterdir())) == 24


class TestBench:
    def test_bench_reports_categories_and_srrt(self, tmp_path, capsys):
        spec = MotionSpec(length=26, image_size=(128, 96), target_size=(16, 16),
                          law="constant", velocity=(1, 0), texture_seed=2)
        data = make_dataset(tmp_path, {"dr": spec})
        out = tmp_path / "bench.json"
        assert main([
            "bench", "--dataset", str(data), "--categories", "2,4",
            "--tracker", "oracle", "--regulator", "oracle",
            "--warmup", "5", "--output", str(out), "--seed", "0",
        ]) == 0
        payload = json.loads(out.read_text())
        assert set(payload["timing"]) == {"SR2", "SR4", "SRRT"}
        for row in payload["timing"].values():
            assert row["fps"] > 0

    def test_bench_ncc_orders_by_input_size(self, tmp_path, capsys):
        spec = MotionSpec(length=31, image_size=(200, 150), target_size=(20, 20),
                          law="constant", velocity=(1, 0), texture_seed=2)
        data = make_dataset(tmp_path, {"dr": spec})
        out = tmp_path / "bench.json"
        assert main([
            "bench", "--dataset", str(data), "--categories", "2,4,6",
            "--tracker", "ncc", "--no-srrt",
            "--warmup", "5", "--output", str(out), "--seed", "0",
        ]) == 0
        timing = json.loads(out.read_text())["timing"]
        assert set(timing) == {"SR2", "SR4", "SR6"}
        assert timing["SR2"]["median_ms"] < timing["SR4"]["median_ms"] < timing["SR6"]["median_ms"]


class TestSynth:
    def test_synth_writes_loadable_dataset(self, tmp_path, capsys):
        spec_file = tmp_path / "motion.cfg"
        spec_file.write_text(
            "name = tele\nlength = 8\nwidth = 96\nheight = 64\n"
            "target_w = 12\ntarget_h = 12\nlaw = scripted\njumps = 4:20:0\n"
        )
        out = tmp_path / "synthetic"
        assert main(["synth", "--spec", str(spec_file), "--output", str(out), "--seed", "2"]) == 0
        assert main(["stats", "--dataset", str(out)]) == 0
        gt = (out / "tele" / "groundtruth.txt").read_text().splitlines()
        assert len(gt) == 8

    def test_synth_determinism(self, tmp_path):
        spec_file = tmp_path / "motion.cfg"
        spec_file.write_text("name = s\nlength = 4\nwidth = 64\nheight = 48\n"
                             "target_w = 8\ntarget_h = 8\nlaw = random_walk\nwalk_sigma = 1.5\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", "--spec", str(spec_file), "--output", str(a), "--seed", "4"]) == 0
        assert main(["synth", "--spec", str(spec_file), "--output", str(b), "--seed", "4"]) == 0
        for name in ("groundtruth.txt",):
            assert (a / "s" / name).read_bytes() == (b / "s" / name).read_bytes()
        for frame in sorted((a / "s" / "img").iterdir()):
            assert frame.read_bytes() == (b / "s" / "img" / frame.name).read_bytes()


class TestErrorSurface:
    def test_missing_dataset_is_single_line_error(self, tmp_path, capsys):
        assert main(["stats", "--dataset", str(tmp_path / "nope")]) == 1
        err = capsys.readouterr().err.strip()
        assert err.startswith("error: ")
        assert "\n" not in err

    def test_unknown_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["transmogrify"])
        assert exc.value.code == 2

    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["stats", "--bogus"])
        assert exc.value.code == 2

    def test_console_entry_point(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "srrt.cli", "--help"], capture_output=True, text=True
        )
        assert result.returncode == 0
        assert "track" in result.stdout

    def test_log_verbosity_env(self, tmp_path):
        data = make_dataset(tmp_path, {"st": STATIC})
        args = [sys.executable, "-m", "srrt.cli", "track",
                "--dataset", str(data), "--output", str(tmp_path / "runs"),
                "--regulator", "oracle", "--tracker", "oracle", "--workers", "1"]
        quiet = subprocess.run(args, capture_output=True, text=True,
                               env={**os.environ, "SRRT_LOG": "warning"})
        chatty = subprocess.run(args, capture_output=True, text=True,
                                env={**os.environ, "SRRT_LOG": "info"})
        assert quiet.returncode == 0 and chatty.returncode == 0
        assert "tracked st" not in quiet.stderr
        assert "tracked st" in chatty.stderr
