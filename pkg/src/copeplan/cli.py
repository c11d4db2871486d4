"""Command-line front end for the solvers, planner, generator, and benchmarks.

Settings resolve in priority order: explicit flag, then a COPEPLAN_<FLAG>
environment variable, then the config file named by --config (a benchmark
document), then the built-in default. Exit codes: 0 success, 2 parse or
config error, 3 model violation (wrong document kind, invalid plan).
"""

import argparse
import json
import math
import os
import sys
from dataclasses import replace

from . import fileio
from .cope import CopeInstance, solve_kidcope
from .copem import CopemInstance, solve00, solve11
from .harness import (
    BenchmarkConfig,
    GeneratorParams,
    plot_svg,
    generate_instance,
    rows_to_csv,
    rows_to_jsonl,
    run_benchmark,
)
from .kds import KdsInstance, solve_kds_dp
from .planner import DispatchParams, Task, run_search, validate_plan

ENV_PREFIX = "COPEPLAN_"

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_MODEL = 3


def _bool(text) -> bool:
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _setting(args, name, cast, config_value=None, default=None):
    """flag > COPEPLAN_<NAME> > config file > default; None stays None.

    Only raw strings (env values, list-like flags) are cast; values that
    arrive already typed pass through untouched.
    """
    value = getattr(args, name, None)
    if value is None:
        env = os.environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            value = env
    if value is None:
        value = config_value
    if value is None:
        return default
    return cast(value) if isinstance(value, str) else value


def _expect(obj, kinds, label):
    if not isinstance(obj, kinds):
        raise TypeError(f"expected a {label} document, found {type(obj).__name__}")
    return obj


def _load_config(args) -> BenchmarkConfig | None:
    path = getattr(args, "config", None) or os.environ.get(ENV_PREFIX + "CONFIG")
    if path is None:
        return None
    return _expect(fileio.load(path), BenchmarkConfig, "benchmark config")


def _fmt_time(t: float) -> str:
    return f"{t:.6f}" if math.isfinite(t) else "-"


# -- solve -------------------------------------------------------------------

def _print_blocks(blocks):
    for b in blocks:
        print(f"block process {b.process + 1} start {b.start} length {b.length}")


def cmd_solve(args) -> int:
    obj = fileio.load(args.file)
    if args.kind == "kds":
        sol = solve_kds_dp(_expect(obj, KdsInstance, "kds"))
        print(f"value {sol.value:.7f}")
        _print_blocks(sol.blocks)
    elif args.kind == "kidcope":
        inst = _expect(obj, (CopeInstance, CopemInstance), "cope")
        value, f, sol = solve_kidcope(inst)
        print(f"value {value:.7f}")
        if f.chosen_process is None:
            print("no initiation")
        else:
            prefix = inst.processes[f.chosen_process].prefix
            times = ", ".join(
                f"{a.action_id} at {f.start_times[a.action_id]}" for a in prefix)
            print(f"initiate process {f.chosen_process + 1}: {times}")
        _print_blocks(sol.blocks)
    elif args.kind == "copem00":
        value, decision = solve00(_expect(obj, CopemInstance, "copem"))
        print(f"value {value:.7f}")
        if decision is None:
            print("no dispatch")
        else:
            print(f"dispatch process {decision + 1}")
    else:
        policy = solve11(_expect(obj, CopemInstance, "copem"))
        print(f"value {policy.value:.7f}")
        kind, who = policy.first_step
        print(f"first {kind} process {who + 1}")
        if policy.compute_after_dispatch is not None:
            print(f"measure process {policy.compute_after_dispatch + 1}")
        for o, branch in sorted(policy.second_step.items()):
            tail = ("no dispatch" if branch.dispatch is None
                    else f"dispatch process {branch.dispatch + 1}")
            print(f"observe {o}: value {branch.value:.7f}, {tail}")
    return EXIT_OK


# -- plan ----------------------------------------------------------------------

def _dispatch_settings(args, cfg):
    dt = _setting(args, "dt", float, cfg and cfg.dt, 0.1)
    sft = _setting(args, "sft", float, cfg and cfg.sft)
    t_wait = _setting(args, "t_wait", int, cfg and cfg.t_wait, 10)
    if _setting(args, "sft_1", _bool, cfg and cfg.sft_1, False):
        sft = 1.0
    minimum = 10
    if _setting(args, "frontier_min_1", _bool, cfg and cfg.frontier_min_1, False):
        minimum = 1
    return DispatchParams(dt=dt, sft=sft, min_subtree_expansions=minimum,
                          min_sim_open=minimum, t_wait=t_wait)


def cmd_plan(args) -> int:
    task = _expect(fileio.load(args.task), Task, "task")
    cfg = _load_config(args)
    mode = _setting(args, "mode", str, cfg and cfg.modes[0], "disp")
    speed = _setting(args, "speed", float, cfg and sorted(cfg.speeds)[0], 10.0)
    seed = _setting(args, "seed", int, cfg and cfg.seed, 0)
    max_exp = _setting(args, "max_expansions", int,
                       cfg and cfg.max_expansions, 8000)
    params = _dispatch_settings(args, cfg)
    echo = {"mode": mode, "speed": speed, "dt": params.dt, "sft": params.sft,
            "t_wait": params.t_wait, "seed": seed, "max_expansions": max_exp}
    print("# config " + json.dumps(echo, sort_keys=True))
    result = run_search(task, mode=mode, speed=speed, dispatch_params=params,
                        max_expansions=max_exp)
    for decided, action, scheduled in result.records:
        print(f"decide {decided:.6f} start {action} at {scheduled:.6f}")
    print(f"solved {str(result.solved).lower()}"
          f" expansions {result.expansions}"
          f" dispatches {result.dispatches}"
          f" first_dispatch {_fmt_time(result.first_dispatch_time)}"
          f" completion {_fmt_time(result.completion_time)}"
          f" reason {result.reason}")
    if args.plan_out:
        with open(args.plan_out, "w", encoding="utf-8") as fh:
            fh.write(fileio.happenings_to_text(result.happenings))
    return EXIT_OK


# -- bench ---------------------------------------------------------------------

def _effective_bench_config(args) -> BenchmarkConfig:
    cfg = _expect(fileio.load(args.config), BenchmarkConfig, "benchmark config")
    gen = cfg.generator
    gen = replace(
        gen,
        goals=_setting(args, "goals", int, gen.goals),
        width=_setting(args, "width", int, gen.width),
        tau=_setting(args, "tau", float, gen.tau),
    )
    speeds = _setting(args, "speeds",
                      lambda s: tuple(float(x) for x in str(s).split(",")),
                      cfg.speeds)
    modes = _setting(args, "modes",
                     lambda s: tuple(str(s).split(",")), cfg.modes)
    return BenchmarkConfig(
        speeds=tuple(speeds),
        modes=tuple(modes),
        instances=_setting(args, "instances", int, cfg.instances),
        dt=_setting(args, "dt", float, cfg.dt),
        sft=_setting(args, "sft", float, cfg.sft),
        t_wait=_setting(args, "t_wait", int, cfg.t_wait),
        frontier_min_1=_setting(args, "frontier_min_1", _bool, cfg.frontier_min_1),
        sft_1=_setting(args, "sft_1", _bool, cfg.sft_1),
        seed=_setting(args, "seed", int, cfg.seed),
        max_expansions=_setting(args, "max_expansions", int, cfg.max_expansions),
        generator=gen,
    )


def cmd_bench(args) -> int:
    try:
        cfg = _effective_bench_config(args)
    except (ValueError, TypeError) as exc:
        # a bad config is a usage problem, not a model violation
        raise fileio.FormatError(str(exc)) from exc
    rows = run_benchmark(cfg)
    echo = json.dumps(cfg.to_dict(), sort_keys=True)
    csv_text = "# config " + echo + "\n" + rows_to_csv(rows)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    if args.jsonl:
        with open(args.jsonl, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"config": cfg.to_dict()}, sort_keys=True) + "\n")
            fh.write(rows_to_jsonl(rows))
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(plot_svg(rows, desc=echo))
    return EXIT_OK


# -- gen -----------------------------------------------------------------------

def cmd_gen(args) -> int:
    cfg = _load_config(args)
    gen = cfg.generator if cfg else GeneratorParams()
    lo = _setting(args, "duration_lo", float, gen.duration_range[0])
    hi = _setting(args, "duration_hi", float, gen.duration_range[1])
    params = GeneratorParams(
        goals=_setting(args, "goals", int, gen.goals),
        duration_range=(lo, hi),
        tau=_setting(args, "tau", float, gen.tau),
        width=_setting(args, "width", int, gen.width),
        seed=_setting(args, "seed", int, cfg.seed if cfg else None, 0),
    )
    text = fileio.dumps(generate_instance(params))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- validate --------------------------------------------------------------------

def cmd_validate(args) -> int:
    task = _expect(fileio.load(args.task), Task, "task")
    with open(args.plan, encoding="utf-8") as fh:
        happenings = fileio.happenings_from_text(fh.read())
    ok, msg = validate_plan(task, happenings)
    if ok:
        print("valid")
        return EXIT_OK
    print(f"invalid: {msg}")
    return EXIT_MODEL


# -- parser ----------------------------------------------------------------------

def _add_dispatch_flags(sub):
    sub.add_argument("--dt", type=float, help="dispatch threshold")
    sub.add_argument("--sft", type=float, help="subtree focus threshold (default dt/2)")
    sub.add_argument("--t-wait", dest="t_wait", type=int,
                     help="expansions per decision cycle")
    sub.add_argument("--frontier-min-1", dest="frontier_min_1",
                     action="store_true", default=None,
                     help="ablation: drop dispatch evidence minimums to 1")
    sub.add_argument("--sft-1", dest="sft_1", action="store_true", default=None,
                     help="ablation: force the focus threshold to 1")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--max-expansions", dest="max_expansions", type=int,
                     help="search budget per run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copeplan",
        description="Deadline-aware metareasoning solvers and a planner "
                    "that can dispatch actions while it searches.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an abstract instance file")
    p.add_argument("kind", choices=("kds", "kidcope", "copem00", "copem11"))
    p.add_argument("file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("plan", help="run the planner on a task file")
    p.add_argument("task")
    p.add_argument("--mode", choices=("disp", "nodisp"))
    p.add_argument("--speed", type=float, help="expansions per second")
    p.add_argument("--config", help="benchmark document supplying defaults")
    p.add_argument("--plan-out", dest="plan_out",
                   help="write the happenings stream to this file")
    _add_dispatch_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run a benchmark config")
    p.add_argument("config")
    p.add_argument("--csv", help="write the table here instead of stdout")
    p.add_argument("--jsonl", help="also write rows as JSON lines")
    p.add_argument("--svg", help="also write a solved-counts plot")
    p.add_argument("--speeds", help="comma-separated speed overrides")
    p.add_argument("--modes", help="comma-separated mode overrides")
    p.add_argument("--instances", type=int)
    p.add_argument("--goals", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--tau", type=float)
    _add_dispatch_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate a deadline task file")
    p.add_argument("--goals", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--duration-lo", dest="duration_lo", type=float)
    p.add_argument("--duration-hi", dest="duration_hi", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="benchmark document supplying defaults")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="check a plan file against a task")
    p.add_argument("task")
    p.add_argument("plan")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except fileio.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
