"""Command-line entry point.

Subcommands:

* ``topology``: build one cycle-with-chords graph, write DOT and JSON.
* ``simulate``: one explicit simulate-train-score pass, no optimization.
* ``optimize``: the two-level genetic search, optionally sweeping step
  sizes (short task) or tau values (long task).
* ``replay``: re-run a recorded manifest; in deterministic mode (no
  wall-clock budgets) the outputs are byte-identical.

Configuration comes from flags or a plain ``key = value`` file given with
``--config``; flags win. The default output directory can be set with the
``CHEMRC_OUT`` environment variable. Every run writes a ``manifest.json``
holding the full configuration so it can be replayed exactly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .evolver import (
    GAConfig,
    OuterResult,
    ParamsGenome,
    TopologyGenome,
    run_outer_ga,
)
from .inflow import generate_step_signal, signal_to_csv
from .readout import fit_ridge, nrmse, split_train_test
from .rng import derive_seed
from .ssa import NetworkParams, simulate, trajectory_to_csv
from .tasks import (
    LongTermTask,
    ShortTermTask,
    assemble_dataset,
    dataset_to_csv,
    target_series_to_csv,
)
from .topology import TopologySpec, build_topology, export_dot, topology_to_json

log = logging.getLogger(__name__)

ENV_OUT = "CHEMRC_OUT"


def _default_out() -> str:
    return os.environ.get(ENV_OUT, "runs")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _json_ready(obj):
    """Recursively convert to JSON-safe values; non-finite floats become None."""
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    return obj


def _write_json(path: Path, obj) -> None:
    _write(path, json.dumps(_json_ready(obj), indent=2) + "\n")


def _fmt(x) -> str:
    return repr(float(x))


def _task_from(kind: str, tau: int | None):
    if kind == "short":
        return ShortTermTask()
    if kind == "long":
        if tau is None:
            raise ValueError("the long task needs --tau")
        return LongTermTask(tau=tau)
    raise ValueError(f"unknown task kind {kind!r}")


# ---------------------------------------------------------------------------
# topology


def cmd_topology(args) -> int:
    missing = [n for n in ("nodes", "chord_length", "chord_step")
               if getattr(args, n) is None]
    if missing:
        raise ValueError(f"missing required settings: {', '.join(missing)}")
    spec = TopologySpec(
        num_nodes=args.nodes,
        chord_length=args.chord_length,
        chord_step=args.chord_step,
    )
    topo = build_topology(spec)
    out = Path(args.out)
    _write(out / "topology.dot", export_dot(topo))
    _write(out / "topology.json", topology_to_json(topo))
    print(f"wrote {out / 'topology.dot'} and {out / 'topology.json'}")
    return 0


# ---------------------------------------------------------------------------
# simulate


def _expand_rates(raw: str, n_edges: int) -> tuple[float, ...]:
    vals = [float(v) for v in raw.split(",") if v.strip() != ""]
    if len(vals) == 1:
        return tuple(vals * n_edges)
    if len(vals) != n_edges:
        raise ValueError(
            f"--reaction-rates needs 1 or {n_edges} comma-separated values, got {len(vals)}"
        )
    return tuple(vals)


def _run_simulate(cfg: dict, out: Path) -> None:
    spec = TopologySpec(
        num_nodes=cfg["nodes"],
        chord_length=cfg["chord_length"],
        chord_step=cfg["chord_step"],
    )
    topo = build_topology(spec)
    params = NetworkParams(
        reaction_rates=tuple(cfg["reaction_rates"]),
        outflow_rate=cfg["outflow_rate"],
        input_rate_scaling=cfg["input_scaling"],
        reaction_rate_scaling=cfg["reaction_scaling"],
    )
    master = cfg["seed"]
    signal_seed = derive_seed(master, rngmod.SIGNAL_STREAM)
    sim_seed = derive_seed(master, rngmod.SIM_STREAM)
    signal = generate_step_signal(
        total_time=cfg["total_time"],
        step_size=cfg["step_size"],
        inflow_amount=cfg["inflow_amount"],
        seed=signal_seed,
    )
    traj = simulate(topo, params, signal, cfg["total_time"], sim_seed)
    task = _task_from(cfg["task"], cfg.get("tau"))
    series = task.target(signal, traj.sample_times)
    dataset = assemble_dataset(traj, series, input_node=topo.input_node)
    train, test = split_train_test(dataset)
    model = fit_ridge(train, cfg["ridge_lambda"])
    train_pred = model.predict(train.features)
    test_pred = model.predict(test.features)
    metrics = {
        "train_nrmse": nrmse(train_pred, train.targets),
        "test_nrmse": nrmse(test_pred, test.targets),
        "n_train": train.num_rows,
        "n_test": test.num_rows,
        "ridge_lambda": cfg["ridge_lambda"],
    }

    _write(out / "signal.csv", signal_to_csv(signal))
    _write(out / "trajectory.csv", trajectory_to_csv(traj))
    _write(out / "targets.csv", target_series_to_csv(series, traj.sample_times))
    _write(out / "dataset.csv", dataset_to_csv(dataset))
    buf = io.StringIO()
    buf.write("t,target,prediction\n")
    for t, y, p in zip(train.times, train.targets, train_pred):
        buf.write(f"{int(t)},{_fmt(y)},{_fmt(p)}\n")
    for t, y, p in zip(test.times, test.targets, test_pred):
        buf.write(f"{int(t)},{_fmt(y)},{_fmt(p)}\n")
    _write(out / "predictions.csv", buf.getvalue())
    _write_json(out / "metrics.json", metrics)
    _write_json(
        out / "model.json",
        {
            "weights": list(model.weights),
            "intercept": model.intercept,
            "ridge_lambda": model.ridge_lambda,
            "train_nrmse": metrics["train_nrmse"],
            "test_nrmse": metrics["test_nrmse"],
        },
    )
    _write_json(
        out / "manifest.json",
        {
            "kind": "simulate",
            "config": cfg,
            "derived_seeds": {"signal": signal_seed, "simulation": sim_seed},
        },
    )


def cmd_simulate(args) -> int:
    spec = TopologySpec(args.nodes, args.chord_length, args.chord_step)
    n_edges = build_topology(spec).num_edges
    cfg = {
        "nodes": args.nodes,
        "chord_length": args.chord_length,
        "chord_step": args.chord_step,
        "inflow_amount": args.inflow_amount,
        "step_size": args.step_size,
        "total_time": args.total_time,
        "reaction_rates": list(_expand_rates(args.reaction_rates, n_edges)),
        "outflow_rate": args.outflow_rate,
        "input_scaling": args.input_scaling,
        "reaction_scaling": args.reaction_scaling,
        "task": args.task,
        "tau": args.tau,
        "ridge_lambda": args.ridge_lambda,
        "seed": args.seed,
    }
    out = Path(args.out)
    _run_simulate(cfg, out)
    print(f"wrote simulation outputs under {out}")
    return 0


# ---------------------------------------------------------------------------
# optimize


def _genome_dict(g) -> dict:
    if isinstance(g, TopologyGenome):
        return {
            "num_nodes": g.num_nodes,
            "inflow_amount": g.inflow_amount,
            "chord_length": g.chord_length,
            "chord_step": g.chord_step,
        }
    if isinstance(g, ParamsGenome):
        return {
            "outflow_rate": g.outflow_rate,
            "input_rate_scaling": g.input_rate_scaling,
            "reaction_rate_scaling": g.reaction_rate_scaling,
            "reaction_rates": list(g.reaction_rates),
        }
    raise TypeError(f"not a genome: {g!r}")


def _outer_log_csv(result: OuterResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["generation", "individual_index", "num_nodes", "inflow_amount",
         "chord_length", "chord_step", "nrmse"]
    )
    for rec in result.outer.log:
        g = rec.genome
        w.writerow(
            [rec.generation, rec.index, g.num_nodes, g.inflow_amount,
             g.chord_length, g.chord_step, _fmt(rec.fitness)]
        )
    return buf.getvalue()


def _inner_logs_csv(result: OuterResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["outer_generation", "outer_index", "generation", "individual_index",
         "outflow_rate", "input_rate_scaling", "reaction_rate_scaling",
         "reaction_rates", "nrmse"]
    )
    for outer_gen, outer_idx, run in result.inner_runs:
        for rec in run.log:
            g = rec.genome
            rates = ";".join(_fmt(r) for r in g.reaction_rates)
            w.writerow(
                [outer_gen, outer_idx, rec.generation, rec.index,
                 _fmt(g.outflow_rate), _fmt(g.input_rate_scaling),
                 _fmt(g.reaction_rate_scaling), rates, _fmt(rec.fitness)]
            )
    return buf.getvalue()


def _curve_csv(curve: list[float]) -> str:
    buf = io.StringIO()
    buf.write("generation,min_nrmse\n")
    for g, v in enumerate(curve):
        buf.write(f"{g},{_fmt(v)}\n")
    return buf.getvalue()


def _run_optimize(cfg: dict, out: Path) -> list[dict]:
    task_kind = cfg["task"]
    ga = GAConfig(
        population_size=cfg["population_size"],
        elite_size=cfg["elite_size"],
        tournament_size=cfg["tournament_size"],
        indpb=cfg["indpb"],
        outer_generations=cfg["generations"],
        inner_generations=cfg["inner_generations"],
        outer_budget_seconds=cfg["budget_seconds"],
        inner_budget_seconds=cfg["inner_budget_seconds"],
        master_seed=cfg["seed"],
    )
    sweep = cfg["taus"] if task_kind == "long" else cfg["step_sizes"]
    label = "tau" if task_kind == "long" else "step_size"
    summary = []
    for value in sweep:
        if task_kind == "long":
            task = LongTermTask(tau=value)
            step_size = cfg["step_sizes"][0]
        else:
            task = ShortTermTask()
            step_size = value
        result = run_outer_ga(
            task,
            ga,
            step_size=step_size,
            total_time=cfg["total_time"],
            ridge_lambda=cfg["ridge_lambda"],
            jobs=cfg["jobs"],
        )
        run_dir = out / f"{label}_{value}"
        _write(run_dir / "outer_fitness.csv", _outer_log_csv(result))
        _write(run_dir / "inner_fitness.csv", _inner_logs_csv(result))
        _write(run_dir / "outer_min_curve.csv", _curve_csv(result.outer.min_fitness_curve()))
        best_run = result.outer.best_payload
        if best_run is not None:
            _write(run_dir / "best_inner_min_curve.csv", _curve_csv(best_run.min_fitness_curve()))
        _write_json(
            run_dir / "best_genome.json",
            {
                "topology": _genome_dict(result.best_topology),
                "params": _genome_dict(result.best_params) if result.best_params else None,
                "test_nrmse": result.best_fitness,
            },
        )
        summary.append({label: value, "nrmse": result.best_fitness})

    buf = io.StringIO()
    buf.write(f"{label},nrmse\n")
    for row in summary:
        buf.write(f"{row[label]},{_fmt(row['nrmse'])}\n")
    _write(out / "summary.csv", buf.getvalue())
    _write_json(out / "manifest.json", {"kind": "optimize", "config": cfg})
    return summary


def cmd_optimize(args) -> int:
    step_sizes = (
        [args.step_size] if args.step_size is not None
        else [float(v) for v in args.step_sizes.split(",")]
    )
    taus = [args.tau] if args.tau is not None else (
        [int(v) for v in args.taus.split(",")] if args.taus else []
    )
    if args.task == "long" and not taus:
        raise ValueError("the long task needs --tau or --taus")
    cfg = {
        "task": args.task,
        "step_sizes": step_sizes,
        "taus": taus,
        "total_time": args.total_time,
        "ridge_lambda": args.ridge_lambda,
        "seed": args.seed,
        "generations": args.generations,
        "inner_generations": args.inner_generations,
        "budget_seconds": args.budget_seconds,
        "inner_budget_seconds": args.inner_budget_seconds,
        "population_size": args.population_size,
        "elite_size": args.elite_size,
        "tournament_size": args.tournament_size,
        "indpb": args.indpb,
        "jobs": args.jobs,
    }
    out = Path(args.out)
    summary = _run_optimize(cfg, out)
    for row in summary:
        print(", ".join(f"{k}={v}" for k, v in row.items()))
    print(f"wrote optimization outputs under {out}")
    return 0


# ---------------------------------------------------------------------------
# replay


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    kind = manifest.get("kind")
    cfg = manifest.get("config", {})
    out = Path(args.out)
    if kind == "simulate":
        _run_simulate(cfg, out)
    elif kind == "optimize":
        _run_optimize(cfg, out)
    else:
        raise ValueError(f"manifest kind {kind!r} is not replayable")
    print(f"replayed {kind} run into {out}")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def _load_config_file(path: str) -> dict:
    """Parse a plain `key = value` file; '#' starts a comment."""
    values = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


def _budget(value: str) -> float | None:
    return None if value.lower() in ("none", "off") else float(value)


_CONFIG_COERCERS = {
    "nodes": int, "chord_length": int, "chord_step": int,
    "inflow_amount": float, "step_size": float, "total_time": int,
    "outflow_rate": float, "input_scaling": float, "reaction_scaling": float,
    "ridge_lambda": float, "seed": int, "tau": int,
    "generations": int, "inner_generations": int,
    "budget_seconds": _budget, "inner_budget_seconds": _budget,
    "population_size": int, "elite_size": int, "tournament_size": int,
    "indpb": float, "jobs": int,
}


def _apply_config_file(parser, subargv):
    """Pull --config out of argv and install its values as parser defaults."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(subargv)
    if not known.config:
        return
    raw = _load_config_file(known.config)
    coerced = {key: _CONFIG_COERCERS.get(key, str)(val) for key, val in raw.items()}
    parser.set_defaults(**coerced)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemrc",
        description="Cycle-reservoir reaction networks: simulate, train, optimize.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology", help="build one topology, write DOT and JSON")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--nodes", type=int)
    p.add_argument("--chord-length", type=int)
    p.add_argument("--chord-step", type=int)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_topology)

    p = sub.add_parser("simulate", help="one simulate-train-score pass")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--nodes", type=int, default=30)
    p.add_argument("--chord-length", type=int, default=10)
    p.add_argument("--chord-step", type=int, default=5)
    p.add_argument("--inflow-amount", type=float, default=100.0)
    p.add_argument("--step-size", type=float, default=2.0)
    p.add_argument("--total-time", type=int, default=50)
    p.add_argument("--reaction-rates", default="0.5",
                   help="one value for all edges, or a full comma-separated vector")
    p.add_argument("--outflow-rate", type=float, default=0.5)
    p.add_argument("--input-scaling", type=float, default=1.0)
    p.add_argument("--reaction-scaling", type=float, default=1.0)
    p.add_argument("--task", choices=("short", "long"), default="short")
    p.add_argument("--tau", type=int)
    p.add_argument("--ridge-lambda", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="two-level genetic search")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--task", choices=("short", "long"), default="short")
    p.add_argument("--step-size", type=float,
                   help="single inflow step size (also the signal step for --task long)")
    p.add_argument("--step-sizes", default="2",
                   help="comma-separated step sizes to sweep (short task)")
    p.add_argument("--tau", type=int, help="single past lag for the long task")
    p.add_argument("--taus", default="",
                   help="comma-separated tau values to sweep (long task)")
    p.add_argument("--total-time", type=int, default=50)
    p.add_argument("--ridge-lambda", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--generations", type=int, default=10,
                   help="outer generation cap")
    p.add_argument("--inner-generations", type=int, default=10)
    p.add_argument("--budget-seconds", type=_budget, default=10_000.0,
                   help="outer wall-clock budget; 'none' disables")
    p.add_argument("--inner-budget-seconds", type=_budget, default=500.0)
    p.add_argument("--population-size", type=int, default=4)
    p.add_argument("--elite-size", type=int, default=2)
    p.add_argument("--tournament-size", type=int, default=3)
    p.add_argument("--indpb", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1,
                   help="max concurrent inner-GA evaluations")
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("replay", help="re-run a recorded manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_replay)

    parser.subcommands = dict(sub.choices)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if argv and argv[0] in parser.subcommands:
        _apply_config_file(parser.subcommands[argv[0]], argv[1:])
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
