"""Command-line frontend: ``rrrp gen | solve | simulate | bench``.

Exit codes: 0 on success, 2 when the instance admits no budget-feasible
schedule, 1 on any other error (bad input, missing file, ...).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .bench import DEFAULT_SIZES, FAMILIES, bench_csv, mean_gap, run_bench, runtime_exponent
from .bicriteria import bicriteria_solve, run_pipeline
from .generators import random_instance
from .geometry import budget_for
from .lagrangian import InfeasibleInstance
from .model import InstanceError, RendezvousInstance, capacity_violations, cost, is_feasible, ugv_loads, weight
from .oracle import OracleInfeasible, OracleTooLarge, PartitionInstance, exact_solve, reduce_evenodd
from .scenario import default_scenario, dump_scenario, load_scenario, with_config
from .sim import RRRPPolicy, parse_policy, rows_to_csv, run_study, summarize, summary_csv

log = logging.getLogger("rrrp")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class CLIError(Exception):
    pass


# -- output helpers ---------------------------------------------------------

def write_atomic(path: str | Path, data: str | bytes) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def sha256(data: str | bytes) -> str:
    return hashlib.sha256(data.encode() if isinstance(data, str) else data).hexdigest()


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def make_manifest(subcommand: str, inputs: dict[str, str], params: dict, seed, out_dir) -> dict:
    """Run description whose ``config_hash`` pins every input and parameter."""
    core = {"subcommand": subcommand, "inputs": inputs, "params": params, "seed": seed,
            "version": __version__}
    return {**core, "output_dir": str(out_dir) if out_dir else None, "config_hash": sha256(_canonical(core)),
            "artifacts": {}}


def _record(manifest: dict, out_dir: Path, path: Path):
    manifest["artifacts"][str(path.relative_to(out_dir))] = sha256(path.read_bytes())


def threads_cap() -> int | None:
    env = os.environ.get("RRRP_THREADS")
    if not env:
        return None
    try:
        n = int(env)
    except ValueError:
        raise CLIError(f"RRRP_THREADS must be an integer, got {env!r}")
    return max(1, n)


def _read_json(path: str) -> tuple[dict, str]:
    p = Path(path)
    if not p.is_file():
        raise CLIError(f"no such file: {path}")
    text = p.read_text()
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise CLIError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


# -- gen --------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.kind == "evenodd":
        if not args.list:
            raise CLIError("gen evenodd needs --list")
        text = reduce_evenodd(PartitionInstance(tuple(args.list))).dumps()
    elif args.kind == "random":
        inst = random_instance(args.seed, n_groups=args.groups, n_nodes=args.nodes, deps_per_group=args.deps,
                               density=args.density, capacity=args.capacity, grid=args.grid,
                               max_edges=args.max_edges)
        text = inst.dumps()
    else:
        text = dump_scenario(with_config(default_scenario(), seed=args.seed))
    _emit(text + "\n", args.output)
    return EXIT_OK


def _emit(text: str, output: str | None):
    if output:
        write_atomic(output, text)
    else:
        sys.stdout.write(text)


# -- solve ------------------------------------------------------------------

def solve_instance(inst: RendezvousInstance, algo: str, eps: float = 1.0, dlambda_min: float | None = None,
                   fallback: bool = True) -> dict:
    """Run one solver; the returned dict is the solution document."""
    t0 = time.perf_counter()
    gap = 0.0
    used_fallback = False
    if algo == "bicriteria":
        res = bicriteria_solve(inst, eps, dlambda_min, fallback_on_violation=fallback)
        sched, gap, used_fallback = res.schedule, res.gap, res.used_fallback
    elif algo == "feasible":
        res = run_pipeline(inst, dlambda_min)
        sched, gap = res.feasible, res.gap
    elif algo == "exact":
        sched = exact_solve(inst)
    else:
        raise CLIError(f"unknown algorithm {algo!r}")
    ms = (time.perf_counter() - t0) * 1e3
    viol = capacity_violations(sched, inst)
    return {
        "algo": algo,
        "schedule": sorted(int(k) for k in sched.edges),
        "cost": cost(sched, inst),
        "weight": weight(sched, inst),
        "budget": inst.budget,
        "violation_count": sum(n - 1 for n in viol.values()),
        "max_load": max(ugv_loads(sched, inst).values(), default=0),
        "feasible": bool(is_feasible(sched, inst)),
        "used_fallback": used_fallback,
        "gap": gap,
        "wall_time_ms": ms,
    }


SOLUTION_CSV = ("algo", "cost", "weight", "budget", "violation_count", "gap", "wall_time_ms", "schedule")


def cmd_solve(args) -> int:
    doc, text = _read_json(args.instance)
    try:
        inst = RendezvousInstance.from_dict(doc)
    except InstanceError as exc:
        raise CLIError(f"{args.instance}: {exc}")
    if args.rho_override is not None:
        inst = inst.with_budget(budget_for(args.rho_override))
    manifest = make_manifest("solve", {args.instance: sha256(text)},
                             {"algo": args.algo, "epsilon": args.epsilon, "rho_override": args.rho_override,
                              "dlambda_min": args.dlambda_min, "fallback": args.fallback}, args.seed, None)
    try:
        sol = solve_instance(inst, args.algo, args.epsilon, args.dlambda_min, args.fallback)
    except (InfeasibleInstance, OracleInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OracleTooLarge as exc:
        raise CLIError(str(exc))
    sol["manifest"] = manifest["config_hash"]
    if args.format == "json":
        out = json.dumps(sol, indent=1) + "\n"
    else:
        row = {**sol, "schedule": " ".join(map(str, sol["schedule"]))}
        out = ",".join(SOLUTION_CSV) + "\n" + ",".join(str(row[c]) for c in SOLUTION_CSV) + "\n"
    _emit(out, args.output)
    print(f"{args.algo}: cost={sol['cost']:.6g} weight={sol['weight']:.6g} budget={sol['budget']:.6g} "
          f"violations={sol['violation_count']} gap={sol['gap']:.3g} time={sol['wall_time_ms']:.1f}ms",
          file=sys.stderr if not args.output else sys.stdout)
    return EXIT_OK


# -- simulate ---------------------------------------------------------------

def _policies(specs: list[str], args):
    out = []
    for spec in specs:
        for part in spec.split(","):
            if not part.strip():
                continue
            try:
                pol = parse_policy(part)
            except ValueError as exc:
                raise CLIError(str(exc))
            if isinstance(pol, RRRPPolicy):
                pol = RRRPPolicy(eps=args.epsilon, solver=pol.solver, fallback_on_violation=args.fallback,
                                 dlambda_min=args.dlambda_min)
            out.append(pol)
    return out


def cmd_simulate(args) -> int:
    if args.scenario == "default":
        sc, text = default_scenario(), None
    else:
        _, text = _read_json(args.scenario)
        try:
            sc = load_scenario(args.scenario)
        except (ValueError, TypeError) as exc:
            raise CLIError(f"{args.scenario}: {exc}")
    changes = {}
    if args.max_time is not None:
        changes["max_time_s"] = args.max_time
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        sc = with_config(sc, **changes)
    pols = _policies(args.policy or ["rrrp"], args)
    trials = args.trials or sc.config.trials
    workers = args.workers
    cap = threads_cap()
    if cap is not None:
        workers = min(workers, cap)
    out = Path(args.out)
    inputs = {args.scenario: sha256(text) if text is not None else sha256(dump_scenario(sc))}
    manifest = make_manifest("simulate", inputs,
                             {"policies": [p.name for p in pols], "rho": args.rho, "trials": trials,
                              "max_time": sc.config.max_time_s, "epsilon": args.epsilon,
                              "fallback": args.fallback, "dlambda_min": args.dlambda_min},
                             sc.config.seed, out)
    logs = {} if args.events else None
    rows = run_study(sc, pols, args.rho, trials, sc.config.seed, workers, logs)
    out.mkdir(parents=True, exist_ok=True)
    paths = [write_atomic(out / "metrics.csv", rows_to_csv(rows))]
    sums = summarize(rows)
    paths.append(write_atomic(out / "summary.csv", summary_csv(sums)))
    if logs is not None:
        head = json.dumps({"manifest": manifest["config_hash"]}, sort_keys=True) + "\n"
        for (name, rho, seed), text_log in logs.items():
            tag = name if rho is None else f"{name}_rho{rho:g}"
            paths.append(write_atomic(out / "events" / f"{tag}_seed{seed}.ndjson", head + text_log))
    if args.plots:
        from .plotting import plot_scenario, plot_study
        paths.append(plot_study(sums, out / "figures" / "study.png"))
        paths.append(plot_scenario(sc, out / "figures" / "scenario.png"))
    for p in paths:
        _record(manifest, out, p)
    write_atomic(out / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    for s in sums:
        rho = "" if s.rho is None else f" rho={s.rho:g}"
        print(f"{s.policy}{rho}: n={s.n} ttff={s.mean['ttff_s']:.0f}s overhead={s.mean['overhead']:.3f} "
              f"nodes={s.mean['nodes']:.1f} rdv/T={s.mean['rdv_per_horizon']:.2f}")
    return EXIT_OK


# -- bench ------------------------------------------------------------------

def cmd_bench(args) -> int:
    out = Path(args.out)
    manifest = make_manifest("bench", {}, {"sizes": args.sizes, "trials": args.trials, "family": args.family,
                                           "oracle_max_edges": args.oracle_max_edges}, args.seed, out)

    def progress(row):
        log.info("size %d trial %d: %d edges, %.1f ms", row.size, row.trial, row.edges, row.alg_ms)

    rows = run_bench(args.sizes, args.trials, args.seed, args.oracle_max_edges, progress=progress,
                     family=args.family)
    paths = [write_atomic(out / "bench.csv", bench_csv(rows))]
    if args.plots:
        from .plotting import plot_bench
        paths += list(plot_bench([r.as_dict() for r in rows], out / "figures" / "gap.png",
                                 out / "figures" / "runtime.png"))
    for p in paths:
        _record(manifest, out, p)
    write_atomic(out / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    gap = mean_gap(rows)
    slowest = max(r.alg_ms for r in rows) if rows else math.nan
    print(f"{len(rows)} instances; mean gap (binding budgets) {'n/a' if gap is None else f'{gap:.2f}%'}; "
          f"runtime exponent {runtime_exponent(rows):.2f}; slowest {slowest / 1e3:.2f}s")
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _add_solver_flags(p):
    p.add_argument("--epsilon", type=float, default=1.0, help="accuracy of the high-cost guess (0, 1]")
    p.add_argument("--dlambda-min", type=float, default=None, help="bisection tolerance on the multiplier")
    p.add_argument("--fallback-on-violation", dest="fallback", action=argparse.BooleanOptionalAction,
                   default=True, help="replace capacity-violating schedules by the feasible one")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rrrp", description="Risk-aware UAV recharging rendezvous scheduling.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write an instance or scenario file")
    g.add_argument("kind", choices=["evenodd", "random", "scenario"])
    g.add_argument("--list", type=_int_list, help="partition integers for evenodd")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--groups", type=int, default=4)
    g.add_argument("--nodes", type=int, default=4)
    g.add_argument("--deps", type=int, default=2)
    g.add_argument("--density", type=float, default=0.5)
    g.add_argument("--capacity", type=int, default=1)
    g.add_argument("--grid", action="store_true", help="integer costs, dyadic weights")
    g.add_argument("--max-edges", type=int, default=None)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("instance")
    s.add_argument("--algo", choices=["bicriteria", "feasible", "exact"], default="bicriteria")
    _add_solver_flags(s)
    s.add_argument("--rho-override", type=float, default=None,
                   help="required joint success probability; replaces the budget by ln(1/rho)")
    s.add_argument("--seed", type=int, default=0, help="recorded in the manifest; solvers are deterministic")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="run a receding-horizon study")
    m.add_argument("scenario", help="scenario JSON file, or 'default' for the built-in layout")
    m.add_argument("--policy", action="append",
                   help="rrrp, rrrp:feasible, rrrp:exact, greedy:0.3, greedy-50 (repeatable, comma lists)")
    m.add_argument("--rho", type=_float_list, default=None, help="failure tolerances for rrrp policies")
    m.add_argument("--trials", type=int, default=None)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--max-time", type=float, default=None, help="simulated seconds per trial")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--events", action=argparse.BooleanOptionalAction, default=True,
                   help="write per-trial event logs")
    m.add_argument("--plots", action=argparse.BooleanOptionalAction, default=True)
    m.add_argument("--out", default="sim_out")
    _add_solver_flags(m)
    m.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="runtime and objective gap against the exact solver")
    b.add_argument("--sizes", type=_int_list, default=list(DEFAULT_SIZES))
    b.add_argument("--trials", type=int, default=20)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--family", choices=FAMILIES, default="geometric",
                   help="instances from random monitoring layouts or the abstract generator")
    b.add_argument("--oracle-max-edges", type=int, default=200)
    b.add_argument("--plots", action=argparse.BooleanOptionalAction, default=True)
    b.add_argument("--out", default="bench_out")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, InstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
