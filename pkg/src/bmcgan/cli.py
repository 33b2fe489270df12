"""Command-line interface.

Exit codes: 0 success (a recorded divergence is still a success), 2 invalid
configuration or arguments, 3 internal numerical error.
"""
import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig
from .controller import BmcParams
from .dynamics import gradient_field, get_family
from .errors import ControllerOverflowError, IntegrationDivergedError, TrainingDivergedError, UnboundedObjectiveError
from .integrator import integrate_batch
from .stability import check_condition, detect_convergence, empirical_rate, unbounded_report
from .sweep import run_sweep
from .toygan import save_snapshots, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _dump(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _theory(cfg_params, spec, epsilon):
    params = cfg_params
    if not params.guaranteed:
        return unbounded_report(params)
    return check_condition(params, spec.family.alpha, spec.c, epsilon)


def cmd_simulate(args):
    cfg = RunConfig.load(args.config)
    spec, params, sde = cfg.system(), cfg.controller(), cfg.sde()
    try:
        report = _theory(params, spec, cfg.epsilon)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    [(traj, err)] = integrate_batch(spec, params, sde, [sde.seed])
    out = Path(args.out)
    _write(out / "trajectory.csv", traj.to_csv())
    diverged = err is not None or traj.terminated_early is not None
    if not diverged:
        report.converge_step = detect_convergence(traj, cfg.criterion())
    if len(traj) >= 2:
        try:
            report.empirical_rate = empirical_rate(traj, cfg.tail_fraction)
        except ValueError:
            pass
    doc = {
        "stability": report.to_dict(),
        "diverged": diverged,
        "terminated_early": traj.terminated_early,
        "nonfinite_step": None if err is None else err.step,
        "n_recorded": len(traj),
        "final_step": int(traj.steps[-1]),
        "final_norm": float(traj.norms[-1]),
        "config": cfg.raw,
    }
    _write(out / "report.json", _dump(doc))
    _write(out / "config.json", cfg.to_json())
    return EXIT_OK


def cmd_field(args):
    cfg = RunConfig.load(args.config)
    try:
        field = gradient_field(cfg.system(), tuple(args.x_range), tuple(args.y_range), args.resolution)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    lines = ["x,y,dx,dy"]
    lines += [",".join(repr(v) for v in row) for row in field.rows()]
    out = Path(args.out)
    _write(out / "field.csv", "\n".join(lines) + "\n")
    resolved = dict(cfg.raw)
    resolved["field"] = {"x_range": list(args.x_range), "y_range": list(args.y_range), "resolution": args.resolution}
    _write(out / "config.json", _dump(resolved))
    return EXIT_OK


def cmd_sweep(args):
    cfg = RunConfig.load(args.config)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    table = run_sweep(cfg.system(), cfg.sweep_grid(), threads=args.threads)
    out = Path(args.out)
    _write(out / "rows.csv", table.rows_csv())
    agg = table.aggregates()
    agg["config"] = cfg.raw
    _write(out / "aggregates.json", _dump(agg))
    _write(out / "config.json", cfg.to_json())
    return EXIT_OK


def cmd_phi(args):
    if args.alpha is not None:
        alphas = tuple(args.alpha)
    else:
        alphas = get_family(args.family).alpha
    try:
        params = BmcParams(args.rho1, args.rho2, args.beta)
        report = check_condition(params, alphas, args.c, args.epsilon)
    except (ValueError, UnboundedObjectiveError) as exc:
        raise ConfigError(str(exc)) from None
    doc = report.to_dict()
    doc["inputs"] = {"rho1": args.rho1, "rho2": args.rho2, "beta": args.beta, "alpha": list(alphas), "c": args.c}
    sys.stdout.write(_dump(doc))
    return EXIT_OK


def cmd_toygan(args):
    cfg = RunConfig.load(args.config)
    result = train(cfg.toygan())
    out = Path(args.out)
    _write(out / "log.csv", result.log_csv())
    if cfg.save_snapshots:
        save_snapshots(result, out / "snapshots")
    summary = {"tail_shifting_difference": result.tail_shifting() if result.shifting else None,
               "final_loss_d": result.log[-1]["loss_d"], "final_loss_g": result.log[-1]["loss_g"],
               "config": cfg.raw}
    _write(out / "summary.json", _dump(summary))
    _write(out / "config.json", cfg.to_json())
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="bmcgan", description="Brownian motion controller experiments on Dirac-GAN "
                                "dynamics and a small neural GAN.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", metavar="JSON", default=None,
                        help="run configuration file; omitted sections use built-in defaults")
        sp.add_argument("--out", metavar="DIR", required=True, help="output directory (created if missing)")

    sp = sub.add_parser("simulate", help="integrate one trajectory; writes trajectory.csv, report.json, config.json")
    with_config(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("field", help="sample the drift on a grid; writes field.csv (x,y,dx,dy) and config.json")
    with_config(sp)
    sp.add_argument("--x-range", nargs=2, type=float, default=[-1.0, 1.0], metavar=("LO", "HI"),
                    help="disc_param range (default -1 1)")
    sp.add_argument("--y-range", nargs=2, type=float, default=[-1.0, 1.0], metavar=("LO", "HI"),
                    help="gen_param range (default -1 1)")
    sp.add_argument("--resolution", type=int, default=21, help="grid points per axis, >= 2 (default 21)")
    sp.set_defaults(func=cmd_field)

    sp = sub.add_parser("sweep", help="grid sweep over rho1 x rho2 x beta; writes rows.csv, aggregates.json")
    with_config(sp)
    sp.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it (default 1)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("phi", help="print the stability bound and condition as JSON")
    sp.add_argument("--rho1", type=float, required=True, help="coefficient of the linear noise term")
    sp.add_argument("--rho2", type=float, required=True, help="coefficient of the higher-order noise term, > 0")
    sp.add_argument("--beta", type=float, default=2.0, help="noise order exponent, > 1 (default 2)")
    sp.add_argument("--c", type=float, default=1.0, help="data location constant (default 1)")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--alpha", type=float, nargs=3, metavar=("A1", "A2", "A3"),
                     help="Lipschitz constants of h1', h2', h3'")
    grp.add_argument("--family", default="wgan_linear", help="take the constants from a shipped family "
                     "(wgan_linear or gan_logsigmoid; default wgan_linear)")
    sp.add_argument("--epsilon", type=float, default=None,
                    help="slack in the rate bound; default min(0.1 * margin, 1e-3)")
    sp.set_defaults(func=cmd_phi)

    sp = sub.add_parser("toygan", help="train the small GAN; writes log.csv, snapshots/, summary.json")
    with_config(sp)
    sp.set_defaults(func=cmd_toygan)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"bmcgan: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationDivergedError, TrainingDivergedError, ControllerOverflowError, FloatingPointError) as exc:
        print(f"bmcgan: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
