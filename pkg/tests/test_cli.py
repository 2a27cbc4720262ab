"""Command line behavior: exit codes, document shapes, file outputs.

Everything drives main(argv) in process; parse failures surface as
SystemExit(1) from argparse, handler failures as plain return codes.
"""
import os

import numpy as np
import pytest
import yaml

from batchplan import fileio
from batchplan.bench import gen_dual_enclosure, gen_random_world, run_trial
from batchplan.cli import main
from batchplan.geometry import path_cost


@pytest.fixture()
def problem_file(tmp_path):
    path = tmp_path / "enclosure.yaml"
    fileio.save_scenario(path, gen_dual_enclosure(2))
    return str(path)


class TestPlan:
    def test_solves_and_writes_document(self, problem_file, tmp_path):
        out = tmp_path / "plan.yaml"
        rc = main(["plan", problem_file, "--planner", "bitstar", "--budget-s", "1.0",
                   "--seed", "3", "--out", str(out)])
        assert rc == 0
        doc = yaml.safe_load(out.read_text())
        assert set(doc) == {"planner", "seed", "solved", "cost", "waypoints",
                            "events", "counters"}
        assert doc["planner"] == "bitstar" and doc["seed"] == 3 and doc["solved"]
        problem = fileio.load_problem(problem_file)
        path = np.array(doc["waypoints"])
        assert path_cost(problem, path) == pytest.approx(doc["cost"], rel=1e-9)
        assert doc["events"] and doc["events"][-1][1] == pytest.approx(doc["cost"])

    def test_stdout_document_parses(self, problem_file, capsys):
        rc = main(["plan", problem_file, "--planner", "rrt_connect",
                   "--budget-s", "2.0"])
        assert rc == 0
        doc = yaml.safe_load(capsys.readouterr().out)
        assert doc["solved"] and doc["planner"] == "rrt_connect"

    def test_no_solution_is_exit_two(self, problem_file):
        # a microscopic budget cannot solve the enclosure world
        rc = main(["plan", problem_file, "--planner", "rrt", "--budget-s", "0.001"])
        assert rc == 2

    def test_unknown_planner_is_exit_one(self, problem_file):
        assert main(["plan", problem_file, "--planner", "dstar"]) == 1

    def test_nonpositive_budget_is_exit_one(self, problem_file):
        assert main(["plan", problem_file, "--budget-s", "0"]) == 1

    def test_missing_file_is_exit_one(self, tmp_path):
        assert main(["plan", str(tmp_path / "absent.yaml")]) == 1

    def test_malformed_yaml_is_exit_one(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("bounds: [not, a, mapping\n")
        assert main(["plan", str(bad)]) == 1

    def test_wrong_shape_document_is_exit_one(self, tmp_path):
        bad = tmp_path / "short.yaml"
        bad.write_text("start: [0.0, 0.0]\ngoals: [[1.0, 1.0]]\n")
        assert main(["plan", str(bad)]) == 1

    def test_planner_flags_reach_the_planner(self, problem_file, capsys):
        rc = main(["plan", problem_file, "--planner", "bitstar", "--budget-s", "1.0",
                   "--batch-size", "37", "--no-delayed-rewiring", "--jit"])
        assert rc == 0
        doc = yaml.safe_load(capsys.readouterr().out)
        assert doc["counters"]["jit_samples"] > 0
        # in just-in-time mode every draw comes through the shell sampler
        assert doc["counters"]["samples_drawn"] == doc["counters"]["jit_samples"]


class TestParseErrors:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["replan"])
        assert exc.value.code == 1

    def test_missing_required_argument(self):
        with pytest.raises(SystemExit) as exc:
            main(["gen", "--family", "dual_enclosure"])
        assert exc.value.code == 1

    def test_bad_family_choice(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["gen", "--family", "spiral", "--dimension", "2",
                  "--out", str(tmp_path / "x.yaml")])
        assert exc.value.code == 1


class TestGen:
    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.yaml", tmp_path / "b.yaml"
        argv = ["gen", "--family", "random_world", "--dimension", "2",
                "--world-seed", "9"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_gen_then_plan_pipeline(self, tmp_path):
        sc = tmp_path / "world.yaml"
        assert main(["gen", "--family", "random_world", "--dimension", "2",
                     "--world-seed", "4", "--out", str(sc)]) == 0
        out = tmp_path / "result.yaml"
        rc = main(["plan", str(sc), "--planner", "rrt_connect", "--budget-s", "3.0",
                   "--out", str(out)])
        assert rc == 0
        assert yaml.safe_load(out.read_text())["solved"]

    def test_scenario_round_trip(self, tmp_path):
        sc = gen_random_world(2, 11)
        path = tmp_path / "sc.yaml"
        fileio.save_scenario(path, sc)
        back = fileio.load_scenario(path)
        assert back.name == sc.name and back.family == sc.family
        assert back.world_seed == sc.world_seed
        assert np.array_equal(back.problem.start, sc.problem.start)
        assert len(back.problem.obstacles) == len(sc.problem.obstacles)
        for x, y in zip(back.problem.obstacles, sc.problem.obstacles):
            assert np.array_equal(x.lower, y.lower) and np.array_equal(x.upper, y.upper)


class TestBench:
    def test_output_files(self, problem_file, tmp_path):
        outdir = tmp_path / "bench"
        rc = main(["bench", problem_file, "--planner", "rrt,rrt_connect",
                   "--trials", "3", "--budget-s", "1.5", "--seed", "10",
                   "--out", str(outdir), "--period-s", "0.1", "--stop-on-solve"])
        assert rc == 0
        names = sorted(os.listdir(outdir))
        expected = sorted(
            [f"{p}_aggregate.csv" for p in ("rrt", "rrt_connect")]
            + [f"{p}_trial_{s:05d}.yaml" for p in ("rrt", "rrt_connect")
               for s in (10, 11, 12)])
        assert names == expected
        with open(outdir / "rrt_aggregate.csv") as fh:
            assert fh.readline().strip() == "time,median_cost,ci_lo,ci_hi,success_fraction"
        trial = fileio.load_trial(outdir / "rrt_trial_00011.yaml")
        assert trial.planner == "rrt" and trial.seed == 11

    def test_unknown_planner_in_list(self, problem_file, tmp_path):
        rc = main(["bench", problem_file, "--planner", "rrt,teleport",
                   "--trials", "1", "--budget-s", "0.1", "--out", str(tmp_path / "b")])
        assert rc == 1

    def test_bad_trials(self, problem_file, tmp_path):
        rc = main(["bench", problem_file, "--trials", "0", "--budget-s", "0.1",
                   "--out", str(tmp_path / "b")])
        assert rc == 1


class TestInspect:
    def test_problem_document(self, problem_file, capsys):
        assert main(["inspect", problem_file]) == 0
        text = capsys.readouterr().out
        assert "2-D" in text and "blocked" in text

    def test_trial_document(self, tmp_path, capsys):
        prob = gen_dual_enclosure(2).problem
        tr = run_trial(prob, "bitstar", seed=0, budget_s=0.5)
        path = tmp_path / "trial.yaml"
        fileio.save_trial(path, tr)
        assert main(["inspect", str(path)]) == 0
        assert "planner=bitstar" in capsys.readouterr().out

    def test_trial_round_trip_preserves_fields(self, tmp_path):
        prob = gen_dual_enclosure(2).problem
        tr = run_trial(prob, "bitstar", seed=7, budget_s=0.5)
        path = tmp_path / "trial.yaml"
        fileio.save_trial(path, tr)
        back = fileio.load_trial(path)
        assert back.planner == tr.planner and back.seed == tr.seed
        assert back.solved == tr.solved
        assert back.final_cost == pytest.approx(tr.final_cost, rel=1e-12)
        assert len(back.events) == len(tr.events)
        for (t1, c1, w1), (t2, c2, w2) in zip(back.events, tr.events):
            assert t1 == pytest.approx(t2, rel=1e-12)
            assert c1 == pytest.approx(c2, rel=1e-12)
            assert w1 == w2
        assert np.allclose(back.path, tr.path)
