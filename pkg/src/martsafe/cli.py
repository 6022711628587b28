"""Command-line entry point.

Subcommands: ``bound`` (single-shot bound evaluation, JSON on stdout),
``run`` (execute a config of scenarios), and the single-scenario aliases
``compare``, ``issf`` and ``hlip``.  Result data goes to files; progress and
errors go to stderr; stdout is reserved for ``bound``'s JSON.

Exit codes: 0 success, 2 invalid flags or config, 3 property-suite failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bounds import CMart, DTCBF, SafetySpec, freedman_bound, ville_bound
from .config import ConfigError, RunConfig, load_config
from .experiments import (
    Scenario,
    bound_grid,
    default_epsilon_grid,
    hlip_case,
    issf_compare,
)
from .properties import property_suite
from .systems import GaitParams, Obstacle
from .tables import write_manifest

__all__ = ["main"]

OUT_DIR_ENV = "MARTSAFE_OUT"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROPERTY_FAILURE = 3
EXIT_IO = 4


def _log(msg: str):
    print(msg, file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="martsafe",
        description="Finite-horizon safety probability bounds and their "
        "Monte Carlo verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser("bound", help="evaluate the closed-form bounds once")
    p_bound.add_argument("--mode", choices=["dtcbf", "cmart"], required=True)
    p_bound.add_argument("--alpha", type=float, help="contraction factor (dtcbf)")
    p_bound.add_argument("--c", type=float, help="per-step drop (cmart)")
    p_bound.add_argument("--K", type=int, required=True, help="horizon, steps")
    p_bound.add_argument("--h0", type=float, required=True, help="initial barrier value")
    p_bound.add_argument("--delta", type=float, required=True, help="worst predictable drop")
    p_bound.add_argument("--sigma", type=float, required=True, help="conditional std bound")
    p_bound.add_argument("--B", type=float, help="barrier upper bound (enables the Ville-style bound)")

    p_run = sub.add_parser("run", help="run every scenario in a config file")
    p_run.add_argument("config", help="path to a JSON run config")
    p_run.add_argument("--trials", type=int, help="override trial counts")
    p_run.add_argument("--seed", type=int, help="override the global seed")
    p_run.add_argument("--out", help="output directory")

    p_cmp = sub.add_parser("compare", help="bound-comparison grid only")
    p_cmp.add_argument("--B", type=float, default=10.0)
    p_cmp.add_argument("--K", type=int, default=100)
    p_cmp.add_argument("--delta", type=float, default=1.0)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--out", help="output directory")

    p_issf = sub.add_parser("issf", help="level-set expansion comparison only")
    p_issf.add_argument("--alpha", type=float, default=0.99)
    p_issf.add_argument("--delta", type=float, default=1.0)
    p_issf.add_argument("--sigma", type=float, default=1.0 / 3.0)
    p_issf.add_argument("--h0", type=float, default=10.0)
    p_issf.add_argument("--K", default="1,100,200,300,400",
                        help="comma-separated horizons")
    p_issf.add_argument("--trials", type=int, default=1000)
    p_issf.add_argument("--epsilon-max", type=float, default=120.0)
    p_issf.add_argument("--epsilon-count", type=int, default=20)
    p_issf.add_argument("--seed", type=int, default=0)
    p_issf.add_argument("--out", help="output directory")

    p_hlip = sub.add_parser("hlip", help="walker case study only")
    p_hlip.add_argument("--dmax", default="0.0,0.03,0.06", help="comma-separated d_max values")
    p_hlip.add_argument("--alpha", default="0.9,0.99", help="comma-separated filter alphas")
    p_hlip.add_argument("--trials", type=int, default=5000)
    p_hlip.add_argument("--duration", type=float, default=20.0)
    p_hlip.add_argument("--steps-per-second", type=float, default=3.0)
    p_hlip.add_argument("--seed", type=int, default=0)
    p_hlip.add_argument("--out", help="output directory")
    return parser


def _out_dir(flag_value) -> Path:
    raw = flag_value or os.environ.get(OUT_DIR_ENV) or "results"
    path = Path(raw)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_bound(args) -> int:
    if args.mode == "dtcbf":
        if args.alpha is None:
            _log("error: --mode dtcbf requires --alpha")
            return EXIT_USAGE
        mode = DTCBF(alpha=args.alpha)
    else:
        if args.c is None:
            _log("error: --mode cmart requires --c")
            return EXIT_USAGE
        mode = CMart(c=args.c)
    try:
        spec = SafetySpec(
            mode=mode, K=args.K, h0=args.h0, delta=args.delta, sigma=args.sigma, B=args.B
        )
        freedman = freedman_bound(spec)
        doc = {
            "raw": freedman.raw,
            "clamped": freedman.clamped,
            "vacuous": freedman.vacuous,
        }
        if args.B is not None:
            ville = ville_bound(spec)
            doc["ville"] = {
                "raw": ville.raw,
                "clamped": ville.clamped,
                "vacuous": ville.vacuous,
            }
    except ValueError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def _execute_scenario(sc: Scenario, workers: int = 1) -> tuple[list, bool]:
    """Run one scenario; returns ([(table, stem), ...], any_property_failed)."""
    p = dict(sc.parameters)
    if sc.kind == "bound_grid":
        lam_grid = None
        if {"lambda_min", "lambda_max", "lambda_count"} & p.keys():
            lam_grid = np.linspace(
                p.get("lambda_min", 0.0), p.get("lambda_max", p.get("B", 10.0)),
                p.get("lambda_count", 101),
            )
        sig_grid = None
        if {"sigma_min", "sigma_max", "sigma_count"} & p.keys():
            sig_grid = np.linspace(
                p.get("sigma_min", 0.01), p.get("sigma_max", 1.0),
                p.get("sigma_count", 100),
            )
        table = bound_grid(
            B=p.get("B", 10.0), K=p.get("K", 100), delta=p.get("delta", 1.0),
            lambda_grid=lam_grid, sigma_grid=sig_grid,
            scenario_id=sc.id, seed=sc.seed,
        )
        return [(table, sc.id)], False
    if sc.kind == "issf_compare":
        eps = default_epsilon_grid(
            n=p.get("epsilon_count", 20), top=p.get("epsilon_max", 120.0)
        )
        if "epsilon_min" in p:
            eps = np.linspace(p["epsilon_min"], p.get("epsilon_max", 120.0),
                              p.get("epsilon_count", 20))
        table = issf_compare(
            alpha=p.get("alpha", 0.99),
            delta=p.get("delta", 1.0),
            sigma=p.get("sigma", 1.0 / 3.0),
            h0=p.get("h0", 10.0),
            K_list=tuple(p.get("K_list", (1, 100, 200, 300, 400))),
            epsilon_grid=eps,
            distributions=tuple(p.get("distributions",
                                      ("uniform", "truncgauss", "categorical"))),
            trials=sc.trials,
            scenario_id=sc.id,
            seed=sc.seed,
        )
        return [(table, sc.id)], False
    if sc.kind == "hlip_case":
        gait = None
        if {"z0", "t_ssp", "t_dsp"} & p.keys():
            period = 1.0 / p.get("steps_per_second", 3.0)
            gait = GaitParams(
                z0=p.get("z0", 0.8),
                t_ssp=p.get("t_ssp", 0.75 * period),
                t_dsp=p.get("t_dsp", 0.25 * period),
            )
        geometry = {}
        if "obstacle_rho" in p or "obstacle_r" in p:
            geometry["obstacle"] = Obstacle(
                rho=np.asarray(p.get("obstacle_rho", [2.0, 1.9]), dtype=float),
                r=p.get("obstacle_r", 0.5),
            )
        if "v_des" in p:
            geometry["v_des"] = tuple(p["v_des"])
        if "x0" in p:
            geometry["x0"] = np.asarray(p["x0"], dtype=float)
        if "u_cap" in p:
            geometry["u_cap"] = p["u_cap"]
        matrices = None
        if "A" in p and "B" in p:
            matrices = (np.asarray(p["A"], dtype=float), np.asarray(p["B"], dtype=float))
        table, traj = hlip_case(
            d_max_list=tuple(p.get("d_max_list", (0.0, 0.03, 0.06))),
            alpha_list=tuple(p.get("alpha_list", (0.9, 0.99))),
            trials=sc.trials,
            steps_per_second=p.get("steps_per_second", 3.0),
            duration=p.get("duration", 20.0),
            gait=gait,
            geometry=geometry or None,
            matrices=matrices,
            keep_trajectories=p.get("keep_trajectories", 50),
            scenario_id=sc.id,
            seed=sc.seed,
            workers=workers,
        )
        return [(table, sc.id), (traj, sc.id + "_trajectories")], False
    # property_suite
    table = property_suite(scenario_id=sc.id, seed=sc.seed)
    failed = not all(table.column("passed"))
    return [(table, sc.id)], failed


def _run_scenarios(config: RunConfig, out_dir: Path) -> int:
    entries = []
    any_failed = False
    workers = config.parallelism or 1
    try:
        for sc in config.scenarios:
            _log(f"running scenario '{sc.id}' ({sc.kind})")
            tables, failed = _execute_scenario(sc, workers=workers)
            any_failed |= failed
            for table, stem in tables:
                for name in table.write(out_dir, stem):
                    entries.append(
                        {"file": name, "scenario": sc.id, "kind": sc.kind, "seed": sc.seed}
                    )
        write_manifest(out_dir, entries, config.seed)
    except OSError as exc:
        _log(f"error: I/O failure: {exc}")
        return EXIT_IO
    _log(f"wrote {len(entries) + 1} files to {out_dir}")
    if any_failed:
        _log("error: property suite reported failures")
        return EXIT_PROPERTY_FAILURE
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    if args.seed is not None:
        config = RunConfig(
            seed=args.seed,
            out_dir=config.out_dir,
            trials=config.trials,
            parallelism=config.parallelism,
            scenarios=[
                Scenario(id=s.id, kind=s.kind, parameters=s.parameters,
                         seed=args.seed, trials=s.trials)
                for s in config.scenarios
            ],
        )
    if args.trials is not None:
        config.scenarios = [
            Scenario(id=s.id, kind=s.kind, parameters=s.parameters,
                     seed=s.seed, trials=args.trials)
            for s in config.scenarios
        ]
    out_dir = _out_dir(args.out or config.out_dir)
    return _run_scenarios(config, out_dir)


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _single(table_stems, seed: int, out) -> int:
    out_dir = _out_dir(out)
    entries = []
    try:
        for table, stem in table_stems:
            for name in table.write(out_dir, stem):
                entries.append({"file": name, "scenario": stem, "seed": seed})
        write_manifest(out_dir, entries, seed)
    except OSError as exc:
        _log(f"error: I/O failure: {exc}")
        return EXIT_IO
    _log(f"wrote {len(entries) + 1} files to {out_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bound":
            return _cmd_bound(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            table = bound_grid(B=args.B, K=args.K, delta=args.delta,
                               scenario_id="bound_grid", seed=args.seed)
            return _single([(table, "bound_grid")], args.seed, args.out)
        if args.command == "issf":
            try:
                k_list = _parse_int_list(args.K)
            except ValueError:
                _log(f"error: cannot parse --K list: {args.K!r}")
                return EXIT_USAGE
            eps = np.linspace(0.0, args.epsilon_max, args.epsilon_count)
            table = issf_compare(
                alpha=args.alpha, delta=args.delta, sigma=args.sigma, h0=args.h0,
                K_list=k_list, epsilon_grid=eps, trials=args.trials,
                scenario_id="issf_compare", seed=args.seed,
            )
            return _single([(table, "issf_compare")], args.seed, args.out)
        if args.command == "hlip":
            try:
                dmaxes = _parse_float_list(args.dmax)
                alphas = _parse_float_list(args.alpha)
            except ValueError:
                _log("error: cannot parse --dmax/--alpha lists")
                return EXIT_USAGE
            table, traj = hlip_case(
                d_max_list=dmaxes, alpha_list=alphas, trials=args.trials,
                steps_per_second=args.steps_per_second, duration=args.duration,
                scenario_id="hlip_case", seed=args.seed,
            )
            return _single(
                [(table, "hlip_case"), (traj, "hlip_case_trajectories")],
                args.seed, args.out,
            )
    except ValueError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    parser.error("unknown command")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
