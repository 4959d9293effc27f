"""Command-line front end: gen, run, oracle, attack, sweep, report.

Every stochastic subcommand takes ``--seed``; any option can also come from a
TOML config file (``--config``), with explicit flags winning over the file
and the file winning over built-in defaults.  Paths of produced artifacts go
to stdout, one per line; progress and summaries go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .adversaries import ATTACK_FAMILIES, family_lower_bound, run_attack
from .algorithms import ALGORITHMS
from .core import (
    PredictionSet,
    ValidationError,
    instance_from_json,
    instance_to_json,
    normalize_instance,
    sim_result_to_json,
)
from .engine import HORIZON, competitive_ratio, simulate_instance
from .experiments import (
    Curve,
    DEFAULT_COUNT,
    ETA_GRID,
    GenParams,
    Grid,
    PCT_GRID,
    SWEEP_ALGOS,
    SweepTable,
    draw_mould,
    gen_instance,
    joint_error_grid,
    max_ratio_curve,
    percentile_grid,
    render,
    sweep,
)
from .oracle import opt_dp
from .predictions import apply_mould


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as f:
        doc = tomllib.load(f)
    if not isinstance(doc, dict):
        raise ValidationError("config file must be a TOML table")
    return doc


def _fill(args: argparse.Namespace, defaults: dict) -> None:
    """Resolve each option as flag > config file > built-in default."""
    config = _load_config(getattr(args, "config", None))
    unknown = set(config) - set(defaults)
    if unknown:
        raise ValidationError(f"config keys not used by this subcommand: {sorted(unknown)}")
    for key, fallback in defaults.items():
        if getattr(args, key) is None:
            setattr(args, key, config.get(key, fallback))


def _floats(value) -> list[float]:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
        return [float(p) for p in parts]
    return [float(v) for v in value]


def _names(value) -> list[str]:
    if isinstance(value, str):
        return [p.strip() for p in value.split(",") if p.strip()]
    return [str(v) for v in value]


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2))


# ---------------------------------------------------------------------------
# Subcommands.

_GEN_DEFAULTS = dict(
    seed=0, n_max=20, c=2.0, r_max=6.0, variant="open", eta=None, final_label=None, out=None
)


def _cmd_gen(args: argparse.Namespace) -> int:
    _fill(args, _GEN_DEFAULTS)
    params = GenParams(n_max=args.n_max, c=args.c, r_max=args.r_max, seed=args.seed)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(params.seed)))
    inst = gen_instance(params, rng)
    if args.eta is not None:
        mould = draw_mould(inst, rng)
        preds = apply_mould(inst, mould, float(args.eta))
        if args.final_label is not None:
            preds = PredictionSet(preds.positions, int(args.final_label))
        inst = inst.with_predictions(preds)
    elif args.final_label is not None:
        raise ValidationError("--final-label needs --eta (use --eta 0 for exact predictions)")
    inst = normalize_instance(inst.with_variant(args.variant))
    text = instance_to_json(inst)
    if args.out is None:
        print(text)
    else:
        Path(args.out).write_text(text + "\n")
        print(args.out)
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    _fill(args, dict(horizon=HORIZON, out=None))
    inst = instance_from_json(Path(args.instance).read_text())
    sim = simulate_instance(inst, args.algo, horizon=float(args.horizon))
    orc = opt_dp(inst)
    _emit(
        {
            "algorithm": args.algo,
            "variant": inst.variant.value,
            "makespan": sim.makespan,
            "t_serve": sim.t_serve,
            "opt": orc.opt_makespan,
            "ratio": competitive_ratio(sim, orc),
        }
    )
    if args.out is not None:
        Path(args.out).write_text(sim_result_to_json(sim) + "\n")
        print(args.out)
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    inst = instance_from_json(Path(args.instance).read_text())
    orc = opt_dp(inst)
    _emit(
        {
            "variant": inst.variant.value,
            "opt_makespan": orc.opt_makespan,
            "optimal_order": list(orc.optimal_order),
            "ender_set": sorted(orc.ender_set),
        }
    )
    return 0


def _cmd_attack(args: argparse.Namespace) -> int:
    _fill(args, dict(n=None, horizon=HORIZON, out=None))
    rank = None if args.n is None else int(args.n)
    outcome = run_attack(args.family, args.algo, rank_n=rank, horizon=float(args.horizon))
    alpha = 0.0 if rank is None else 2.0 / (rank - 1)
    doc = {
        "family": args.family,
        "algorithm": args.algo,
        "rank_n": rank,
        "ratio": outcome.ratio,
        "opt": outcome.oracle.opt_makespan,
        "makespan": outcome.sim.makespan,
        "family_lower_bound": family_lower_bound(args.family, alpha),
        "transcript": json.loads(instance_to_json(outcome.instance)),
    }
    state = getattr(outcome.source, "state", None)
    if state is not None and getattr(state, "t_commit", None) is not None:
        doc["t_commit"] = state.t_commit
        doc["committed_side"] = state.committed_side
    _emit(doc)
    if args.out is not None:
        Path(args.out).write_text(instance_to_json(outcome.instance) + "\n")
        print(args.out)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    _fill(
        args,
        dict(
            seed=0,
            count=DEFAULT_COUNT,
            n_max=20,
            c=2.0,
            r_max=6.0,
            etas=list(ETA_GRID),
            algos=list(SWEEP_ALGOS),
            out="sweep_rows.csv",
        ),
    )
    params = GenParams(n_max=args.n_max, c=args.c, r_max=args.r_max, seed=args.seed)
    count = int(args.count)
    step = max(1, count // 20)

    def progress(done: int, total: int) -> None:
        if done % step == 0 or done == total:
            print(f"{done}/{total} instances", file=sys.stderr)

    table = sweep(
        params,
        count=count,
        etas=_floats(args.etas),
        algos=_names(args.algos),
        progress=progress,
    )
    path = table.to_csv(args.out)
    bad = table.theorem_violations()
    print(
        f"rows={len(table)} sims={table.sims_total} checked={table.sims_checked} "
        f"bound_violations={bad.size}",
        file=sys.stderr,
    )
    print(path)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    _fill(args, dict(out="."))
    table = SweepTable.from_csv(args.rows)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    produced: list[Path] = []
    for algo in SWEEP_ALGOS:
        sub = table.filter(algorithm=algo)
        if len(sub) == 0:
            continue
        curve = Curve(points=tuple(max_ratio_curve(sub)), xlabel="eta")
        produced.append(render(curve, "csv", outdir / f"{algo}_max_ratio.csv"))
        produced.append(render(curve, "svg", outdir / f"{algo}_max_ratio.svg"))
        if algo == "pivot":
            grid = Grid(
                values=joint_error_grid(sub, ETA_GRID, ETA_GRID),
                x=ETA_GRID,
                y=ETA_GRID,
                xlabel="delta",
                ylabel="eta",
            )
        else:
            grid = Grid(
                values=percentile_grid(sub, ETA_GRID, PCT_GRID),
                x=ETA_GRID,
                y=PCT_GRID,
                xlabel="eta",
                ylabel="best_pct",
            )
        produced.append(render(grid, "csv", outdir / f"{algo}_grid.csv"))
        produced.append(render(grid, "svg", outdir / f"{algo}_grid.svg"))
    if not produced:
        raise ValidationError("sweep CSV holds no rows for any known algorithm")
    for p in produced:
        print(p)
    return 0


# ---------------------------------------------------------------------------
# Parser assembly.


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linetsp",
        description="Simulate, attack, and benchmark online TSP algorithms on the real line.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML file of option defaults", default=None)

    p = sub.add_parser("gen", help="generate a random instance as JSON")
    add_config(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--r-max", dest="r_max", type=float, default=None)
    p.add_argument("--variant", choices=["open", "closed"], default=None)
    p.add_argument("--eta", type=float, default=None, help="attach mould predictions at this error")
    p.add_argument("--final-label", dest="final_label", type=int, default=None)
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="simulate an algorithm on an instance file")
    add_config(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--out", default=None, help="also write the full simulation JSON here")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("oracle", help="price an instance file with the exact oracle")
    add_config(p)
    p.add_argument("--instance", required=True)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("attack", help="run an adaptive adversary against an algorithm")
    add_config(p)
    p.add_argument("--family", required=True, choices=sorted(ATTACK_FAMILIES))
    p.add_argument("--n", type=int, default=None, help="rank of the ranked families")
    p.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--out", default=None, help="also write the transcript instance JSON here")
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("sweep", help="random error sweep; writes the row CSV")
    add_config(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--r-max", dest="r_max", type=float, default=None)
    p.add_argument("--etas", default=None, help="comma-separated error targets")
    p.add_argument("--algos", default=None, help="comma-separated subset of " + ",".join(SWEEP_ALGOS))
    p.add_argument("--out", default=None, help="row CSV path (default sweep_rows.csv)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="render curves and grids from a sweep CSV")
    add_config(p)
    p.add_argument("--rows", required=True, help="sweep row CSV")
    p.add_argument("--out", default=None, help="output directory (default .)")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
