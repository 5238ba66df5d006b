"""Command-line entry point: ``deepfcnn {train,simulate,table1,energy,shapes}``.

Exit codes: 0 success, 1 usage or configuration error, 2 training did not
converge, 3 blow-up in a run that was expected to stay stable.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .diagnostics import series_to_csv, table1_harness, table_to_csv
from .fcnn import POLY_ORDER, ModelFormatError, fcnn_rollout, load_model, save_model
from .fdm import (
    DT_LARGE,
    DT_SMALL,
    EquationKind,
    EquationParams,
    TimeStepping,
    export_trajectory,
    fdm_rollout,
    stability_threshold,
    steps_for,
)
from .grid import GridSpec
from .initcond import SHAPES, eps_m, make_shape, random_uniform
from .io import SnapshotFormatError, load_field, save_field, save_pgm
from .training import TrainConfig, init_model, make_training_pair, train, write_train_log

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_BLOWUP = 0, 1, 2, 3
ENERGY_TIMES = (0.0, 0.0018, 0.003, 0.006)

log = logging.getLogger("deepfcnn")


class UsageError(Exception):
    pass


def _grid(args) -> GridSpec:
    return GridSpec(0.0, args.nx * args.h, 0.0, args.nx * args.h, args.nx, args.nx)


def _equation(args) -> EquationParams:
    eq = EquationParams.default(args.eq)
    alpha = eq.alpha if args.alpha is None else args.alpha
    beta = eq.beta if args.beta is None else args.beta
    return EquationParams(eq.kind, alpha, beta)


def cmd_train(args) -> int:
    eq = _equation(args)
    order = POLY_ORDER[eq.kind] if args.poly_order is None else args.poly_order
    if order != POLY_ORDER[eq.kind]:
        raise UsageError(f"{eq.kind.value} is configured with polynomial order {POLY_ORDER[eq.kind]}, got {order}")
    cfg = TrainConfig(
        k=args.k,
        dt_s=args.dt_s,
        epsilon=args.epsilon,
        max_iters=args.max_iters,
        learning_rate=args.lr,
        seed=args.seed,
        depth=args.depth,
        init=args.init,
        fine_snapshots=args.fine_snapshots,
    )
    spec = _grid(args)
    pair = make_training_pair(eq, spec, cfg)
    model = init_model(eq, cfg, spec.h, order)
    result = train(model, pair, cfg, log_every=args.log_every)
    result.model.meta.update(seed=args.seed)
    out = Path(args.out)
    save_model(out, result.model)
    log_path = Path(args.log) if args.log else out.with_name("train_log.csv")
    write_train_log(log_path, result)
    print(f"final loss {result.final_loss:.3e} after {result.updates} updates -> {out}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _initial_field(args):
    if args.input:
        return load_field(args.input)
    if args.shape == "random":
        return random_uniform(_grid(args), args.seed)
    return make_shape(args.shape, _grid(args))


def cmd_simulate(args) -> int:
    f0 = _initial_field(args)
    if args.method == "fcnn":
        if not args.model:
            raise UsageError("--method fcnn needs --model")
        model = load_model(args.model)
        dt = args.dt if args.dt is not None else DT_LARGE
        traj = fcnn_rollout(model, f0, steps_for(args.t, dt), dt, args.record_every)
        stable_expected = True
    else:
        eq = _equation(args)
        dt = args.dt if args.dt is not None else DT_SMALL
        traj = fdm_rollout(f0, eq, TimeStepping(dt, steps_for(args.t, dt), args.record_every))
        stable_expected = dt <= stability_threshold(f0.spec.h, eq.alpha)
    export_trajectory(traj, args.out_dir, pgm=not args.no_pgm, fixed_range=args.fixed_range)
    if traj.blown_up:
        print(f"blow-up at step {traj.blowup_step} (t={traj.times[-1]:g})")
        return EXIT_BLOWUP if stable_expected else EXIT_OK
    print(f"{len(traj)} snapshots -> {args.out_dir}")
    return EXIT_OK


def cmd_table1(args) -> int:
    models = {}
    for item in args.model or []:
        if "=" not in item:
            raise UsageError(f"--model expects EQ=PATH, got {item!r}")
        name, path = item.split("=", 1)
        models[EquationKind.parse(name)] = load_model(path)
    eqs = [EquationKind.parse(e) for e in args.eqs]
    rows = table1_harness(eqs, args.shapes, models, _grid(args), args.dt_s, args.dt_L, workers=args.workers)
    text = table_to_csv(rows, args.out)
    print(text, end="")
    return EXIT_OK


def cmd_energy(args) -> int:
    eq = EquationParams.default(EquationKind.ALLEN_CAHN)
    spec = _grid(args)
    f0 = random_uniform(spec, args.seed)
    if args.method == "fcnn":
        if not args.model:
            raise UsageError("--method fcnn needs --model")
        model = load_model(args.model)
        dt = DT_LARGE if args.dt is None else args.dt
        traj = fcnn_rollout(model, f0, steps_for(args.t, dt), dt)
    else:
        dt = DT_SMALL if args.dt is None else args.dt
        traj = fdm_rollout(f0, eq, TimeStepping(dt, steps_for(args.t, dt)))
    out = Path(args.out_dir)
    series_to_csv(traj, eps_m(spec.h, args.m), out / "energy.csv")
    for t in ENERGY_TIMES:
        n = round(t / dt)
        if n in traj.steps:
            f = traj.fields[traj.steps.index(n)]
            save_pgm(out / f"surf_t{t:g}.pgm", f, fixed_range=True)
            save_field(out / f"surf_t{t:g}.fsn", f)
    if traj.blown_up:
        print(f"blow-up at step {traj.blowup_step}")
        return EXIT_BLOWUP
    print(f"energy series ({len(traj)} points) -> {out / 'energy.csv'}")
    return EXIT_OK


def cmd_shapes(args) -> int:
    out = Path(args.out_dir)
    spec = _grid(args)
    for name in SHAPES:
        f = make_shape(name, spec)
        save_field(out / f"{name}.fsn", f)
        save_pgm(out / f"{name}.pgm", f, fixed_range=True)
    print(f"{len(SHAPES)} shapes -> {out}")
    return EXIT_OK


def _add_grid(p):
    p.add_argument("--nx", type=int, default=100, help="nodes per side (default 100)")
    p.add_argument("--h", type=float, default=0.01, help="mesh size (default 0.01)")


def _add_eq(p, required=True):
    p.add_argument("--eq", required=required, help="heat|fisher|allen_cahn (or he|fe|ac)")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deepfcnn", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file; its values become flag defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a deep FCNN to one snapshot pair")
    _add_eq(p)
    _add_grid(p)
    p.add_argument("--out", required=True, help="FCN1 model path")
    p.add_argument("--log", help="training log CSV (default: train_log.csv beside --out)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--poly-order", type=int, default=None)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--dt-s", type=float, default=DT_SMALL)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=200_000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--init", choices=("uniform", "fdm"), default="uniform")
    p.add_argument("--fine-snapshots", action="store_true", help="generate phi_k with dt_s/100 steps")
    p.add_argument("--log-every", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="roll out FDM or a trained FCNN")
    _add_eq(p, required=False)
    _add_grid(p)
    p.add_argument("--method", choices=("fdm", "fcnn"), default="fdm")
    p.add_argument("--shape", default="circle", help=f"{'|'.join(SHAPES)}|random")
    p.add_argument("--input", help="start from an FSN1 snapshot instead of --shape")
    p.add_argument("--model", help="FCN1 model (for --method fcnn)")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t", type=float, default=0.006)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--record-every", type=int, default=10)
    p.add_argument("--out-dir", default="run")
    p.add_argument("--no-pgm", action="store_true")
    p.add_argument("--fixed-range", action="store_true", help="map [-1, 1] to grey levels")
    p.set_defaults(func=cmd_simulate, eq="heat")

    p = sub.add_parser("table1", help="relative L2 error table over equations x shapes")
    _add_grid(p)
    p.add_argument("--model", action="append", help="EQ=PATH, repeatable")
    p.add_argument("--eqs", nargs="+", default=["heat", "fisher", "allen_cahn"])
    p.add_argument("--shapes", nargs="+", default=list(SHAPES), choices=list(SHAPES))
    p.add_argument("--dt-s", type=float, default=DT_SMALL)
    p.add_argument("--dt-L", type=float, default=DT_LARGE)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="table1.csv")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("energy", help="Allen-Cahn energy and min/max from a random start")
    _add_grid(p)
    p.add_argument("--method", choices=("fdm", "fcnn"), default="fdm")
    p.add_argument("--model")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t", type=float, default=0.006)
    p.add_argument("--m", type=float, default=5, help="interface width in cells for eps_m")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="energy")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("shapes", help="write the six benchmark shapes as FSN1 + PGM")
    _add_grid(p)
    p.add_argument("--out-dir", default="shapes")
    p.set_defaults(func=cmd_shapes)
    return parser


def read_config(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config(parser, argv, config: dict):
    """Re-parse with config values as defaults so explicit flags still win."""
    args = parser.parse_args(argv)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in config.items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.nargs in ("+", "*") or isinstance(action, argparse._AppendAction):
            defaults[key] = raw.split()
        else:
            defaults[key] = action.type(raw) if action.type else raw
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.config:
            args = _apply_config(parser, argv, read_config(args.config))
        return args.func(args)
    except (UsageError, ValueError, ModelFormatError, SnapshotFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
