"""Command-line entry point.

Subcommands: simulate, diffusion-map, diffusion-line, profile, impact,
decay, imbalance, theory.  Configuration comes from a TOML file (--config);
--seed, --replicas, --threads and --out override it.  Exit status 0 on
success, 2 on configuration errors, 1 on runtime failures; errors are
reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import experiments, theory
from .config import ExperimentConfig, load_config
from .errors import ConfigError, LatentBookError
from .io_utils import f17


def _add_common(sp):
    sp.add_argument("--config", help="TOML experiment configuration")
    sp.add_argument("--seed", type=int, help="override master seed")
    sp.add_argument("--replicas", type=int, help="override replica count")
    sp.add_argument("--threads", type=int, help="cap worker parallelism")
    sp.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentbook",
        description="Latent order book simulator and experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("simulate", "diffusion-map", "profile", "impact", "decay",
                 "imbalance"):
        sp = sub.add_parser(name)
        _add_common(sp)

    sp = sub.add_parser("diffusion-line")
    _add_common(sp)
    sp.add_argument("--gamma", type=float, action="append",
                    help="sign-autocorrelation exponent (repeatable)")
    sp.add_argument("--tolerance", type=float, default=0.02)

    sp = sub.add_parser("theory")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.5)
    sp.add_argument("--nu", type=float, default=1e-4)
    sp.add_argument("--D", dest="d_step", type=float, required=True,
                    help="measured price variance per step")
    sp.add_argument("--u-max", type=float, default=None)
    sp.add_argument("--cells", type=int, default=2000)
    sp.add_argument("--out", default=".")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.replicas is not None:
        cfg.replicas = args.replicas
    if args.threads is not None:
        cfg.threads = args.threads
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def _run_theory(args) -> int:
    rho_inf = args.lam / args.nu
    u_star = math.sqrt(args.d_step / (2.0 * args.nu))
    j = 0.5 * args.d_step * rho_inf / u_star
    b = rho_inf / u_star
    print(f"rho_inf = {f17(rho_inf)}")
    print(f"u_star  = {f17(u_star)}")
    print(f"J       = {f17(j)}")
    print(f"b       = {f17(b)}")
    os.makedirs(args.out, exist_ok=True)
    u_max = args.u_max if args.u_max is not None else 12.0 * u_star
    coeffs = theory.ProfileCoefficients(d=args.d_step, lam=args.lam, nu=args.nu)
    u, rho = theory.solve_stationary_numeric(coeffs, u_max, args.cells)
    closed = theory.stationary_profile_closed_form(u, args.lam, args.nu,
                                                   args.d_step)
    theory.export_profile(
        os.path.join(args.out, "theory_profile.csv"), u, closed,
        {"lambda": args.lam, "nu": args.nu, "d_step": args.d_step,
         "rho_inf": rho_inf, "u_star": u_star, "b": b},
        os.path.join(args.out, "theory_profile.json"))
    theory.export_profile(
        os.path.join(args.out, "theory_profile_numeric.csv"), u, rho,
        {"lambda": args.lam, "nu": args.nu, "d_step": args.d_step})
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "theory":
            return _run_theory(args)
        cfg = _load(args)
        outdir = cfg.output_dir
        if args.command == "simulate":
            experiments.run_simulate(cfg, outdir)
        elif args.command == "diffusion-map":
            experiments.run_diffusion_map(cfg, outdir)
        elif args.command == "diffusion-line":
            if args.gamma:
                cfg.sweep.gamma = args.gamma
            experiments.find_diffusion_line(cfg, tolerance=args.tolerance,
                                            outdir=outdir)
        elif args.command == "profile":
            experiments.run_profile_experiment(cfg, outdir)
        elif args.command == "impact":
            experiments.run_impact_experiment(cfg, outdir)
        elif args.command == "decay":
            experiments.run_decay_experiment(cfg, outdir)
        elif args.command == "imbalance":
            experiments.run_imbalance_experiment(cfg, outdir)
        return 0
    except ConfigError as exc:
        json.dump({"error": "config", "message": str(exc), "keys": exc.keys},
                  sys.stderr)
        sys.stderr.write("\n")
        return 2
    except LatentBookError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
