"""Command line front end.

Subcommands: plan (one problem, one planner), bench (trials x planners with
aggregate tables), gen (write a scenario file), inspect (summarize a problem
or trial file). Exit codes: 0 success, 1 usage or file error, 2 planner found
no solution within budget. All randomness comes from --seed / --world-seed.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np
import yaml

from . import bench as bench_mod
from . import fileio
from .baselines import PLANNERS
from .bench import aggregate, generate_scenario, run_trial, straight_line_blocked, write_aggregate_csv
from .geometry import is_state_valid, path_cost
from .sampling import make_rng, sample_uniform_box


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are exit code 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="batchplan", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def planner_flags(sp, multi: bool):
        help_names = ", ".join(sorted(PLANNERS))
        if multi:
            sp.add_argument("--planner", default="bitstar",
                            help=f"comma-separated planner names ({help_names})")
        else:
            sp.add_argument("--planner", default="bitstar", help=f"one of: {help_names}")
        sp.add_argument("--budget-s", type=float, default=1.0, help="wall-clock budget per run, seconds")
        sp.add_argument("--seed", type=int, default=0, help="base random seed")
        sp.add_argument("--batch-size", type=int, default=100, help="samples per batch (batch planners)")
        sp.add_argument("--delayed-rewiring", action=argparse.BooleanOptionalAction, default=True,
                        help="defer rewiring edges until a solution exists")
        sp.add_argument("--jit", action=argparse.BooleanOptionalAction, default=False,
                        help="just-in-time sampling instead of full batches")
        sp.add_argument("--sample-removal", action=argparse.BooleanOptionalAction, default=False,
                        help="drop unconnected samples at batch boundaries")

    sp = sub.add_parser("plan", help="plan one problem with one planner")
    sp.add_argument("problem", help="problem or scenario file")
    planner_flags(sp, multi=False)
    sp.add_argument("--out", default=None, help="write the plan result here (default: stdout)")

    sb = sub.add_parser("bench", help="run seeded trials and write aggregates")
    sb.add_argument("problem", help="problem or scenario file")
    planner_flags(sb, multi=True)
    sb.add_argument("--trials", type=int, default=100, help="trials per planner")
    sb.add_argument("--out", default="bench_out", help="output directory")
    sb.add_argument("--period-s", type=float, default=1e-4, help="aggregate grid period, seconds")
    sb.add_argument("--stop-on-solve", action="store_true",
                    help="stop each trial at its first solution (deterministic event lists)")
    sb.add_argument("--jobs", type=int, default=1, help="parallel trial workers")

    sg = sub.add_parser("gen", help="generate a scenario file")
    sg.add_argument("--family", required=True, choices=list(bench_mod.FAMILIES))
    sg.add_argument("--dimension", type=int, required=True)
    sg.add_argument("--world-seed", type=int, default=0, help="generation seed (random_world)")
    sg.add_argument("--gap-ratio", type=float, default=1.0, help="gap/obstacle width ratio (homotopy_grid)")
    sg.add_argument("--out", required=True, help="scenario file to write")

    si = sub.add_parser("inspect", help="summarize a problem, scenario, or trial file")
    si.add_argument("file")
    return p


def _planner_options(args) -> dict:
    return {
        "batch_size": args.batch_size,
        "delayed_rewiring": args.delayed_rewiring,
        "jit_sampling": args.jit,
        "sample_removal": args.sample_removal,
    }


def _load_problem_arg(path: str):
    if not os.path.exists(path):
        raise fileio.FileFormatError(f"no such file: {path}")
    return fileio.load_problem(path)


def cmd_plan(args) -> int:
    problem = _load_problem_arg(args.problem)
    if args.planner not in PLANNERS:
        print(f"unknown planner {args.planner!r}; valid: {', '.join(sorted(PLANNERS))}", file=sys.stderr)
        return 1
    if args.budget_s <= 0:
        print("--budget-s must be positive", file=sys.stderr)
        return 1
    trial = run_trial(problem, args.planner, args.seed, args.budget_s,
                      planner_options=_planner_options(args))
    doc = {
        "planner": trial.planner,
        "seed": trial.seed,
        "solved": bool(trial.solved),
        "cost": float(trial.final_cost),
        "waypoints": None if trial.path is None else np.asarray(trial.path).tolist(),
        "events": [[float(t), float(c), int(w)] for t, c, w in trial.events],
        "counters": {k: int(v) for k, v in trial.counters.items()},
    }
    if args.out:
        fileio.save_yaml(args.out, doc)
    else:
        yaml.safe_dump(doc, sys.stdout, sort_keys=False, default_flow_style=None)
    if trial.solved:
        print(f"solved: cost {trial.final_cost:.6f} after {trial.events[-1][0]:.3f} s "
              f"({len(trial.events)} improvements)", file=sys.stderr)
        return 0
    print("no solution within budget", file=sys.stderr)
    return 2


def cmd_bench(args) -> int:
    scenario = fileio.scenario_from_dict(fileio.load_yaml(args.problem))
    names = [s.strip() for s in args.planner.split(",") if s.strip()]
    for name in names:
        if name not in PLANNERS:
            print(f"unknown planner {name!r}; valid: {', '.join(sorted(PLANNERS))}", file=sys.stderr)
            return 1
    if args.trials < 1:
        print("--trials must be >= 1", file=sys.stderr)
        return 1
    if args.budget_s <= 0:
        print("--budget-s must be positive", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    results = bench_mod.run_bench(
        scenario, names, args.trials, args.budget_s, seed_base=args.seed,
        period_s=args.period_s, stop_on_first_solution=args.stop_on_solve,
        planner_options=_planner_options(args), jobs=args.jobs,
    )
    for name, (trials, series) in results.items():
        write_aggregate_csv(os.path.join(args.out, f"{name}_aggregate.csv"), series)
        for tr in trials:
            fileio.save_trial(os.path.join(args.out, f"{name}_trial_{tr.seed:05d}.yaml"), tr)
        n_solved = sum(tr.solved for tr in trials)
        print(f"{name}: {n_solved}/{len(trials)} solved within {args.budget_s} s", file=sys.stderr)
    return 0


def cmd_gen(args) -> int:
    scenario = generate_scenario(args.family, args.dimension,
                                 world_seed=args.world_seed, gap_ratio=args.gap_ratio)
    fileio.save_scenario(args.out, scenario)
    print(f"wrote {args.out}: {scenario.name}, {len(scenario.problem.obstacles)} obstacles",
          file=sys.stderr)
    return 0


def _free_space_estimate(problem, n_points: int = 20000) -> float:
    rng = make_rng(0)
    hits = sum(is_state_valid(problem, sample_uniform_box(rng, problem.bounds))
               for _ in range(n_points))
    return problem.space_measure() * hits / n_points


def cmd_inspect(args) -> int:
    doc = fileio.load_yaml(args.file)
    if "planner" in doc and "events" in doc:
        trial = fileio.trial_from_dict(doc)
        print(f"trial: planner={trial.planner} seed={trial.seed} solved={trial.solved}")
        print(f"  events: {len(trial.events)} improvements, final cost {trial.final_cost}")
        if trial.path is not None:
            print(f"  path: {len(trial.path)} waypoints")
        return 0
    problem = fileio.problem_from_dict(doc)
    name = doc.get("name", os.path.basename(args.file))
    direct = "blocked" if straight_line_blocked(problem) else "free"
    print(f"problem: {name} ({problem.dimension}-D, {len(problem.obstacles)} obstacles)")
    print(f"  space measure {problem.space_measure():.6g}, "
          f"free-space estimate {_free_space_estimate(problem):.6g}")
    print(f"  straight start-goal segment: {direct}")
    for i, g in enumerate(problem.goals):
        ok = is_state_valid(problem, g)
        print(f"  goal[{i}] valid: {ok}")
    print(f"  start valid: {is_state_valid(problem, problem.start)}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"plan": cmd_plan, "bench": cmd_bench, "gen": cmd_gen, "inspect": cmd_inspect}
    try:
        return handlers[args.subcommand](args)
    except fileio.FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
