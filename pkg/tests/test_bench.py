"""Tests for instance I/O, the CLI, and report determinism."""

import json
import os
from pathlib import Path

import pytest

from nashanneal import InputError
from nashanneal.bench import (
    ExperimentConfig,
    bench_command,
    crossbar_config_for,
    emit_instance,
    enumerate_command,
    load_instance,
    parse_instance,
    solve_command,
    sweep_command,
)
from nashanneal.cli import main

from conftest import INSTANCES

BOS_PATH = INSTANCES / "battle_of_the_sexes.json"


class TestInstanceIO:
    def test_load_shipped_instance(self):
        inst = load_instance(BOS_PATH)
        assert inst.game.M == ((2, 0), (0, 1))
        assert inst.game.N == ((1, 0), (0, 2))
        assert inst.transform.is_identity

    def test_roundtrip(self, tmp_path):
        inst = load_instance(BOS_PATH)
        out = tmp_path / "copy.json"
        emit_instance(inst, out)
        again = load_instance(out)
        assert again.raw_m == inst.raw_m
        assert again.raw_n == inst.raw_n
        assert again.name == inst.name

    def test_rational_strings(self):
        inst = parse_instance({"name": "r", "M": [["1/2", "-1/3"]], "N": [[0, 1]]})
        # lcm of denominators is 6; scaled M = (3, -2), shifted up by 2
        assert inst.game.M == ((5, 0),)
        assert inst.game.N == ((0, 6),)
        assert inst.transform.scale == 6
        assert inst.transform.to_raw_m(inst.game.M[0][0]) == pytest.approx(0.5)

    def test_rejects_inexact_floats(self):
        with pytest.raises(InputError):
            parse_instance({"M": [[0.3]], "N": [[1]]})

    def test_accepts_integral_floats(self):
        inst = parse_instance({"M": [[2.0]], "N": [[1]]})
        assert inst.game.M == ((2,),)

    def test_missing_matrix(self):
        with pytest.raises(InputError):
            parse_instance({"M": [[1]]})

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_instance(tmp_path / "nope.json")


class TestCrossbarConfigMapping:
    def test_file_keys_map(self):
        cfg = ExperimentConfig(instance=BOS_PATH, intervals=8)
        cfg.cim = {"cells_per_element_t": 4, "cell_sigma": 0.1, "t_read_ns": 5.0}
        inst = load_instance(BOS_PATH)
        hw = crossbar_config_for(cfg, inst.game)
        assert hw.intervals == 8
        assert hw.cells_per_element == 4
        assert hw.cell_sigma == 0.1
        assert hw.t_read_ns == 5.0

    def test_interval_conflict_rejected(self):
        cfg = ExperimentConfig(instance=BOS_PATH, intervals=8)
        cfg.cim = {"interval_I": 6}
        inst = load_instance(BOS_PATH)
        with pytest.raises(InputError):
            crossbar_config_for(cfg, inst.game)

    def test_unknown_key_rejected(self):
        cfg = ExperimentConfig(instance=BOS_PATH)
        cfg.cim = {"bogus": 1}
        inst = load_instance(BOS_PATH)
        with pytest.raises(InputError):
            crossbar_config_for(cfg, inst.game)

    def test_default_cells_cover_max_payoff(self):
        cfg = ExperimentConfig(instance=BOS_PATH)
        inst = load_instance(BOS_PATH)
        assert crossbar_config_for(cfg, inst.game).cells_per_element == 2


class TestSolveCommand:
    def test_seeded_solve_finds_oracle_solution(self, tmp_path):
        config = ExperimentConfig(
            instance=BOS_PATH, intervals=12, iterations=10000, runs=1, seed=7, outdir=tmp_path
        )
        artifact = solve_command(config, out=lambda *_: None)
        assert artifact["result"]["succeeded"] is True
        best = artifact["result"]["best_profile"]
        # seed 7 lands on the coordinate-1 pure equilibrium (frozen golden run)
        assert (best["p_counts"], best["q_counts"]) == ([12, 0], [12, 0])

    def test_one_by_one_game_succeeds_immediately(self, tmp_path):
        path = tmp_path / "solo.json"
        path.write_text(json.dumps({"name": "solo", "M": [[3]], "N": [[1]]}))
        config = ExperimentConfig(instance=path, intervals=4, iterations=10, runs=1, seed=0)
        artifact = solve_command(config, out=lambda *_: None)
        assert artifact["result"]["succeeded"] is True
        assert artifact["result"]["best_f"] == "0"


class TestBenchCommand:
    def test_bos_reports(self, tmp_path):
        config = ExperimentConfig(
            instance=BOS_PATH,
            intervals=12,
            iterations=4000,
            runs=40,
            seed=0,
            threads=2,
            outdir=tmp_path,
        )
        summary = bench_command(config, out=lambda *_: None)
        assert summary["success_rate"] >= 0.9
        assert summary["coverage"]["reachable"] == 3
        stem = "battle_of_the_sexes_max-qubo_exact"
        for suffix in ("_summary.json", "_solutions.csv", "_coverage.csv"):
            assert (tmp_path / f"{stem}{suffix}").exists()
        parsed = json.loads((tmp_path / f"{stem}_summary.json").read_text())
        assert parsed == summary  # artifact round-trips

    def test_s_qubo_coverage_counts_only_pure(self, tmp_path):
        config = ExperimentConfig(
            instance=BOS_PATH,
            objective="s-qubo",
            intervals=12,
            iterations=1500,
            runs=10,
            seed=1,
            outdir=tmp_path,
        )
        summary = bench_command(config, out=lambda *_: None)
        # the binary search space cannot represent the mixed equilibrium
        assert summary["coverage"]["reachable"] == 3
        assert summary["coverage"]["found_reachable"] <= 2

    def test_cim_backend_bench(self, tmp_path):
        config = ExperimentConfig(
            instance=BOS_PATH,
            backend="cim",
            intervals=6,
            iterations=400,
            runs=6,
            seed=2,
            threads=2,
            outdir=tmp_path,
        )
        config.cim = {"cell_sigma": 0.05, "wta_offset": 0.0025}
        summary = bench_command(config, out=lambda *_: None)
        assert 0.0 <= summary["success_rate"] <= 1.0

    def test_validation_errors(self, tmp_path):
        config = ExperimentConfig(instance=BOS_PATH, runs=0, outdir=tmp_path)
        with pytest.raises(InputError):
            bench_command(config, out=lambda *_: None)


class TestEnumerateCommand:
    def test_bos_listing(self, capsys):
        result = enumerate_command(BOS_PATH)
        captured = capsys.readouterr().out
        assert result["count"] == 3
        assert captured.count("pure") == 2
        assert captured.count("mixed") == 1

    def test_degenerate_flag_printed(self, tmp_path, capsys):
        path = tmp_path / "flat.json"
        path.write_text(json.dumps({"name": "flat", "M": [[2, 2], [2, 2]], "N": [[2, 2], [2, 2]]}))
        enumerate_command(path)
        assert "degenerate" in capsys.readouterr().out

    def test_one_by_one(self, tmp_path, capsys):
        path = tmp_path / "solo.json"
        path.write_text(json.dumps({"name": "solo", "M": [[1]], "N": [[1]]}))
        result = enumerate_command(path)
        assert result["count"] == 1


class TestCli:
    def test_solve_exit_zero(self, tmp_path, capsys):
        code = main([
            "solve", "--instance", str(BOS_PATH), "-I", "12",
            "--iters", "2000", "--seed", "7", "--out", str(tmp_path),
        ])
        assert code == 0
        assert (tmp_path / "battle_of_the_sexes_solve.json").exists()

    def test_missing_instance_exits_two(self, tmp_path, capsys):
        code = main(["solve", "--instance", str(tmp_path / "missing.json")])
        assert code == 2

    def test_zero_runs_exits_two(self, tmp_path, capsys):
        code = main([
            "bench", "--instance", str(BOS_PATH), "--runs", "0", "--out", str(tmp_path),
        ])
        assert code == 2

    def test_env_var_overrides_seed(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("NASH_ANNEAL_SEED", "7")
        code = main([
            "solve", "--instance", str(BOS_PATH), "-I", "12",
            "--iters", "10000", "--seed", "3", "--out", str(tmp_path),
        ])
        assert code == 0
        artifact = json.loads((tmp_path / "battle_of_the_sexes_solve.json").read_text())
        assert artifact["config"]["seed"] == 7
        assert artifact["result"]["best_profile"]["p_counts"] == [12, 0]

    def test_config_file_flags_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("iterations: 500\nintervals: 6\nseed: 4\ncim:\n  cell_sigma: 0.0\n  wta_offset: 0.0\n")
        code = main([
            "bench", "--instance", str(BOS_PATH), "--config", str(cfg),
            "--runs", "4", "--iters", "800", "--out", str(tmp_path / "r"),
        ])
        assert code == 0
        summary = json.loads((tmp_path / "r" / "battle_of_the_sexes_max-qubo_exact_summary.json").read_text())
        assert summary["config"]["iterations"] == 800  # flag wins
        assert summary["config"]["intervals"] == 6  # file value survives

    def test_sweep_writes_grid_csv(self, tmp_path, capsys):
        code = main([
            "sweep", "--instance", str(BOS_PATH),
            "--intervals-grid", "6,12", "--iterations-grid", "500",
            "--runs", "6", "--seed", "0", "--out", str(tmp_path),
        ])
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 3  # header + 2 grid cells


class TestDeterminism:
    def test_bench_outputs_byte_identical(self, tmp_path):
        def run(outdir: Path, threads: int):
            config = ExperimentConfig(
                instance=BOS_PATH,
                intervals=12,
                iterations=3000,
                runs=30,
                seed=9,
                threads=threads,
                outdir=outdir,
            )
            bench_command(config, out=lambda *_: None)

        run(tmp_path / "a", threads=1)
        run(tmp_path / "b", threads=4)
        files_a = sorted(p.name for p in (tmp_path / "a").iterdir())
        files_b = sorted(p.name for p in (tmp_path / "b").iterdir())
        assert files_a == files_b
        for name in files_a:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
