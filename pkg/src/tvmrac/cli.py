"""Command-line entry point: ``tvmrac {feasibility,simulate,montecarlo,scenario}``."""
import argparse
import os
import sys

from .errors import BarrierBreach, NonFiniteState, ParseError, TvmracError, ValidationError
from .estimator import ConstrainedMRAC
from .scenarios import BUILTINS, dumps, load_scenario

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_BREACH = 2
EXIT_INFEASIBLE = 3


def _out_dir(path):
    path = path or os.environ.get("TVMRAC_OUT", ".")
    os.makedirs(path, exist_ok=True)
    return path


def _fit(args, disturbed=False):
    sc = load_scenario(args.scenario)
    return ConstrainedMRAC(grid_step=getattr(args, "grid_step", 0.01), disturbed=disturbed).fit(sc)


def cmd_feasibility(args):
    est = _fit(args, disturbed=args.disturbed)
    print(est.validation_report())
    print(est.report_.summary())
    path = os.path.join(_out_dir(args.out), "feasibility.csv")
    est.report_.to_csv(path)
    print(f"csv: {path}")
    if not est.report_.feasible:
        print("warning: the constraint pair is not certified feasible", file=sys.stderr)
        if args.strict:
            return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_simulate(args):
    est = _fit(args)
    path = os.path.join(_out_dir(args.out), "simlog.csv")
    try:
        log = est.simulate(oracle=args.oracle)
    except (BarrierBreach, NonFiniteState) as exc:
        if exc.log is not None:
            exc.log.to_csv(path)
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_BREACH
    log.to_csv(path)
    print(f"max e_norm/phi_e: {float((log.e_norm / log.phi_e).max()):.16e}")
    print(f"max u_norm/phi_u: {float((log.u_norm / log.phi_u).max()):.16e}")
    print(f"csv: {path}")
    return EXIT_OK


def cmd_montecarlo(args):
    est = _fit(args)
    noise = est.scenario_.noise
    sigma2 = args.sigma2 if args.sigma2 is not None else (noise.sigma2 if noise else None)
    if sigma2 is None:
        raise ValidationError("--sigma2 is required when the scenario has no [noise] section")
    seed = args.seed if args.seed is not None else (noise.seed if noise else 0)
    window = tuple(args.window) if args.window else (noise.window if noise else None)
    report = est.monte_carlo(N=args.trials, sigma2=sigma2, master_seed=seed, window=window)
    path = os.path.join(_out_dir(args.out), "montecarlo.csv")
    report.to_csv(path)
    print(report.summary())
    print(f"csv: {path}")
    return EXIT_OK


def cmd_scenario(args):
    if args.action == "list":
        for name, factory in BUILTINS.items():
            print(f"{name}: {factory.__doc__.strip().splitlines()[0]}")
        return EXIT_OK
    if not args.name:
        raise ParseError("scenario show needs a NAME")
    sys.stdout.write(dumps(load_scenario(args.name)))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="tvmrac", description="Constrained MRAC certification and simulation")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("feasibility", help="certify a (state, input) constraint pair")
    f.add_argument("--scenario", required=True, help="built-in name or scenario file")
    f.add_argument("--grid-step", type=float, default=0.01)
    f.add_argument("--disturbed", action="store_true", help="include the disturbance bound")
    f.add_argument("--strict", action="store_true", help="exit 3 when infeasible")
    f.add_argument("--out", default=None)
    f.set_defaults(func=cmd_feasibility)

    s = sub.add_parser("simulate", help="run one closed-loop simulation")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", default=None)
    s.add_argument("--oracle", action="store_true", help="log the total Lyapunov function (needs true gains)")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("montecarlo", help="measurement-noise Monte-Carlo study")
    m.add_argument("--scenario", required=True)
    m.add_argument("--sigma2", type=float, default=None)
    m.add_argument("--trials", type=int, default=1000)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--window", type=float, nargs=2, metavar=("T_A", "T_B"), default=None)
    m.add_argument("--out", default=None)
    m.set_defaults(func=cmd_montecarlo)

    c = sub.add_parser("scenario", help="list or print built-in scenarios")
    c.add_argument("action", choices=["list", "show"])
    c.add_argument("name", nargs="?")
    c.set_defaults(func=cmd_scenario)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TvmracError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
