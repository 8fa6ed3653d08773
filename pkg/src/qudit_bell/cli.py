"""Batch command line front-end.

Commands: ``sweep-bell``, ``simulate-experiment``, ``tomography``,
``optimize``.  Exit status is 0 on success, 2 for configuration errors and
3 when an optimizer or reconstruction reports numerical degradation.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from .config import ConfigError, RunConfig, load_config, parse_grid
from .experiments import derive_seed, run_tomography, simulate_experiment, sweep_bell
from .optimize import OptimizationConfig, horodecki_bound, optimize_bell, optimize_bell_restricted
from .states import make_gamma_state, pure_density
from .tomography import bar_rows, decompose

log = logging.getLogger("qudit_bell")

EXIT_OK, EXIT_CONFIG, EXIT_DEGRADED = 0, 2, 3
SWEEP_RESTARTS = 2


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.9g}"


def write_csv(path: str, header: list[str], rows, cfg: RunConfig, command: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# command={command} config_hash={cfg.digest()} seed={cfg.seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path: str, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _restarts(cfg: RunConfig, default: int) -> int:
    return cfg.optimizer.restarts if cfg.optimizer.restarts is not None else default


def cmd_sweep_bell(cfg: RunConfig) -> int:
    points = sweep_bell(cfg.dim, cfg.gamma_grid, cfg.lam, _restarts(cfg, SWEEP_RESTARTS), cfg.seed,
                        cfg.optimizer.tolerance, cfg.optimizer.max_evals)
    rows = [(p.gamma, p.full.best_value, p.restricted.best_value, p.horodecki, p.scaled, p.status)
            for p in points]
    write_csv(os.path.join(cfg.out, "sweep_bell.csv"),
              ["gamma", "i_full", "i_restricted", "i_horodecki", "i_scaled", "status"],
              rows, cfg, "sweep-bell")
    write_json(os.path.join(cfg.out, "sweep_bell_settings.json"), {
        "dim": cfg.dim, "lambda": cfg.lam, "seed": cfg.seed,
        "points": [{"gamma": p.gamma, "full": p.full.to_json(), "restricted": p.restricted.to_json()}
                   for p in points],
    })
    best = max(points, key=lambda p: p.full.best_value)
    log.info("max I_%d = %.6f at gamma = %.4f", cfg.dim, best.full.best_value, best.gamma)
    return EXIT_DEGRADED if any(p.status != "ok" for p in points) else EXIT_OK


def cmd_simulate_experiment(cfg: RunConfig) -> int:
    sp = cfg.spectral
    exp, points = simulate_experiment(
        cfg.dim, cfg.gamma_grid, sp.pump_width, sp.pm_width, sp.pump_center, sp.bin_first,
        sp.bin_spacing, sp.bin_width, _restarts(cfg, SWEEP_RESTARTS), cfg.seed,
        cfg.optimizer.tolerance, cfg.optimizer.max_evals)
    rows = [(p.gamma, p.simulated, p.ideal, p.deviation, p.state_fidelity, p.projector_evals,
             "degraded" if p.settings.degraded else "ok") for p in points]
    write_csv(os.path.join(cfg.out, "simulate_experiment.csv"),
              ["gamma", "i_simulated", "i_ideal", "deviation", "state_fidelity", "projector_evals",
               "status"], rows, cfg, "simulate-experiment")
    raw = exp.raw_state().raw
    write_csv(os.path.join(cfg.out, "cjk_raw.csv"), ["j", "k", "re", "im"],
              [(j, k, raw[j, k].real, raw[j, k].imag)
               for j in range(cfg.dim) for k in range(cfg.dim)], cfg, "simulate-experiment")
    write_json(os.path.join(cfg.out, "simulate_experiment.json"), {
        "dim": cfg.dim, "seed": cfg.seed,
        "points": [{"gamma": p.gamma, "settings": p.settings.to_json(),
                    "cjk": [[[z.real, z.imag] for z in row] for row in p.raw]} for p in points],
    })
    return EXIT_DEGRADED if any(p.settings.degraded for p in points) else EXIT_OK


def cmd_tomography(cfg: RunConfig) -> int:
    tomo = cfg.tomography
    rows, degraded = [], False
    for i, gamma in enumerate(cfg.gamma_grid):
        run = run_tomography(cfg.dim, gamma, cfg.lam, tomo.shots, tomo.trials, cfg.seed, i,
                             tomo.poisson, tomo.background, tomo.tolerance)
        tag = f"gamma{gamma:.4f}"
        write_json(os.path.join(cfg.out, f"rho_{tag}.json"), {
            "dim": cfg.dim, "gamma": gamma, "lambda": cfg.lam, "shots": tomo.shots,
            "converged": run.mle.converged, "rho": run.mle.rho.to_json(),
            "r_kl": decompose(run.mle.rho, cfg.dim).tolist(),
        })
        write_csv(os.path.join(cfg.out, f"rho_{tag}_bars.csv"), ["row", "col", "re", "im"],
                  bar_rows(run.mle.rho, cfg.dim), cfg, "tomography")
        status = "ok" if run.mle.converged else "not-converged"
        degraded |= not run.mle.converged
        rows.append((gamma, cfg.lam, run.fidelity, run.mc_mean, run.two_sigma, status))
        log.info("gamma=%.3f F=%.4f +/- %.4f (2 sigma)", gamma, run.fidelity, run.two_sigma)
    write_csv(os.path.join(cfg.out, "tomography.csv"),
              ["gamma", "lambda", "fidelity", "mc_mean_fidelity", "two_sigma", "status"],
              rows, cfg, "tomography")
    return EXIT_DEGRADED if degraded else EXIT_OK


def cmd_optimize(cfg: RunConfig, restricted: bool = False) -> int:
    degraded = False
    results = []
    for i, gamma in enumerate(cfg.gamma_grid):
        state = make_gamma_state(cfg.dim, gamma)
        oc = OptimizationConfig(_restarts(cfg, OptimizationConfig.default(cfg.dim).restarts),
                                cfg.optimizer.tolerance, cfg.optimizer.max_evals,
                                derive_seed(cfg.seed, "optimize", i))
        fn = optimize_bell_restricted if restricted else optimize_bell
        res = fn(state, cfg.dim, oc)
        degraded |= res.degraded
        entry = {"gamma": gamma, **res.to_json()}
        if cfg.dim == 2:
            entry["horodecki"] = horodecki_bound(pure_density(state))
        results.append(entry)
        print(f"d={cfg.dim} gamma={gamma:.6g} family={res.family} I_max={res.best_value:.9f} "
              f"converged={res.restarts_converged}/{len(res.values)} evals={res.evals_used}")
    write_json(os.path.join(cfg.out, "optimize.json"), {"dim": cfg.dim, "results": results})
    return EXIT_DEGRADED if degraded else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qudit-bell", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("sweep-bell", "simulate-experiment", "tomography", "optimize"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="sectioned key-value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--dim", type=int, choices=(2, 3))
        p.add_argument("--gamma-grid", help="start:stop:steps or comma list")
        p.add_argument("--gamma", type=float, help="single gamma value")
        p.add_argument("--lambda", dest="lam", type=float, help="white-noise mixing parameter")
        p.add_argument("--shots", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--restarts", type=int)
        p.add_argument("--restricted", action="store_true",
                       help="optimize over multiport-beamsplitter settings only")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.dim is not None:
        cfg.dim = args.dim
    if args.gamma_grid is not None:
        cfg.gamma_grid = parse_grid(args.gamma_grid)
    if args.gamma is not None:
        cfg.gamma_grid = [args.gamma]
    if args.lam is not None:
        cfg.lam = args.lam
    if args.shots is not None:
        cfg.tomography.shots = args.shots
    if args.trials is not None:
        cfg.tomography.trials = args.trials
    if args.restarts is not None:
        cfg.optimizer.restarts = args.restarts
    return cfg.validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "sweep-bell":
        return cmd_sweep_bell(cfg)
    if args.command == "simulate-experiment":
        return cmd_simulate_experiment(cfg)
    if args.command == "tomography":
        return cmd_tomography(cfg)
    return cmd_optimize(cfg, restricted=args.restricted)


if __name__ == "__main__":
    sys.exit(main())
