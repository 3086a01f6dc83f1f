"""
Command-line entry point: check, simulate, picard, optimize, example, show-config.

Reports go to JSON, time series to CSV, status lines to stderr. A failing
subcommand removes the files it already wrote and exits with status 1.
"""

import argparse
import logging
import os
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
from pydantic import ValidationError

from .config import (
    ScenarioConfig,
    SimulationConfig,
    build_admissible,
    build_grid,
    build_initial_control,
    build_lipschitz,
    build_problem,
    build_running_cost,
    build_spsa_settings,
    dump_config,
    load_config,
)
from .control import optimize
from .dynamics import monte_carlo, simulate_path
from .errors import ConfigError, ImpulsiveSEEError
from .export import ArtifactWriter, write_control, write_ensemble, write_history, write_path, write_picard
from .parallel import DEFAULT_THREADS
from .picard import contraction_ratio, picard_solve
from .presets import PRESETS, get_preset
from .qwiener import sample_increments
from .wellposedness import audit_problem, check_all, max_certified_horizon, theorem2_check

load_dotenv()

logger = logging.getLogger(__name__)

THREADS_ENV = "IMPULSIVE_SEE_THREADS"
LOG_LEVEL_ENV = "IMPULSIVE_SEE_LOG_LEVEL"
DEFAULT_PRESET = "dirichlet_heat_impulse"
DEFAULT_OUTPUT_DIR = "impulsive-see-out"


def _status(mark: str, message: str) -> None:
    print(f"{mark} {message}", file=sys.stderr)


def _apply_overrides(
    config: ScenarioConfig, seed: int | None, paths: int | None, dt: float | None
) -> ScenarioConfig:
    updates: dict[str, Any] = {}
    if seed is not None:
        updates["seed"] = seed
    if paths is not None:
        updates["n_paths"] = paths
        updates["picard_paths"] = paths
    if dt is not None:
        updates["dt"] = dt
    if not updates:
        return config
    try:
        simulation = SimulationConfig.model_validate({**config.simulation.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigError(
            "Invalid command-line override",
            [f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()],
        ) from e
    return config.model_copy(update={"simulation": simulation})


# Subcommands. Each writes its artifacts and returns a JSON-ready summary.


def _check(config: ScenarioConfig, writer: ArtifactWriter, threads: int) -> dict[str, Any]:
    spec = build_problem(config)
    lb = build_lipschitz(config)
    sim = config.simulation
    report = check_all(spec, lb)
    audits = audit_problem(spec, lb, sim.audit_samples, sim.audit_radius, sim.seed)
    audit_summary = {
        name: {
            "claimed": a.claimed,
            "samples": a.samples,
            "max_observed_ratio": a.max_observed_ratio,
            "violations": len(a.violations),
            "passed": a.passed,
        }
        for name, a in audits.items()
    }
    writer.write_json(
        "constants.json",
        {
            "scenario": config.name,
            "report": report.model_dump(mode="json"),
            "max_certified_horizon_thm2": max_certified_horizon(spec, lb),
            "audits": audit_summary,
        },
    )
    for violation in report.violations:
        _status("⚠", f"Sufficient condition not met: {violation}")
    for name, a in audits.items():
        if not a.passed:
            _status("⚠", f"Audit {name}: {len(a.violations)} samples exceed the claimed {a.claimed:g}")
    return {
        "verdict_thm1": report.verdict_thm1,
        "verdict_thm2": report.verdict_thm2,
        "k1": report.k1,
        "k2": report.k2,
        "binding_constraint": report.binding_constraint,
    }


def _simulate(config: ScenarioConfig, writer: ArtifactWriter, threads: int) -> dict[str, Any]:
    spec = build_problem(config)
    grid = build_grid(config)
    control = build_initial_control(config)
    sim = config.simulation
    write_path(writer, simulate_path(spec, control, sample_increments(spec.noise, grid, sim.seed, 0)))
    report = monte_carlo(spec, control, sim.n_paths, sim.seed, grid, threads)
    write_ensemble(writer, report)
    summary = {
        "n_paths": sim.n_paths,
        "seed": sim.seed,
        "steps": int(grid.size - 1),
        "sup_mean_sq_norm": report.sup_mean_sq_norm,
        "final_mean_sq_norm": float(report.mean_sq_norm[-1]),
        "plus_mean_sq_norm": report.plus_mean_sq_norm,
    }
    writer.write_json("simulate.json", summary)
    return summary


def _picard(config: ScenarioConfig, writer: ArtifactWriter, threads: int) -> dict[str, Any]:
    spec = build_problem(config)
    grid = build_grid(config)
    sim = config.simulation
    noises = [sample_increments(spec.noise, grid, sim.seed, i) for i in range(sim.picard_paths)]
    result = picard_solve(
        spec, build_initial_control(config), noises, sim.picard_tol, sim.picard_max_iter, threads
    )
    write_picard(writer, result)
    tail = contraction_ratio(result.iterate_distances).tail_max if result.iterations >= 3 else None
    certificate = theorem2_check(spec, build_lipschitz(config))
    summary = {
        "converged": result.converged,
        "iterations": result.iterations,
        "final_distance": result.iterate_distances[-1],
        "contraction_tail_max": tail,
        "k_thm2": certificate.k_thm2,
        "verdict_thm2": certificate.verdict_thm2,
    }
    writer.write_json("picard.json", summary)
    if not result.converged:
        _status("⚠", f"Picard iteration stopped after {result.iterations} sweeps without converging")
    return summary


def _optimize(config: ScenarioConfig, writer: ArtifactWriter, threads: int) -> dict[str, Any]:
    result = optimize(
        build_problem(config),
        build_running_cost(config),
        build_admissible(config),
        build_initial_control(config),
        config.optimizer.budget,
        config.simulation.seed,
        build_grid(config),
        build_spsa_settings(config),
        threads,
    )
    write_history(writer, result.history)
    write_control(writer, result.u_star)
    summary = {
        "J_init": result.history[0].J_current,
        "J_star": result.J_star,
        "J_star_standard_error": result.J_star_standard_error,
        "evaluations": result.evaluations,
    }
    writer.write_json("optimize.json", summary)
    return summary


def _example(config: ScenarioConfig, writer: ArtifactWriter, threads: int) -> dict[str, Any]:
    """check, simulate and optimize in one output directory; main() always passes the application preset."""
    summary = {
        "scenario": config.name,
        "n_paths": config.simulation.n_paths,
        "budget": config.optimizer.budget,
        "check": _check(config, writer, threads),
        "simulate": _simulate(config, writer, threads),
        "optimize": _optimize(config, writer, threads),
    }
    writer.write_json("summary.json", summary)
    return summary


SUBCOMMANDS: dict[str, Callable[[ScenarioConfig, ArtifactWriter, int], dict[str, Any]]] = {
    "check": _check,
    "simulate": _simulate,
    "picard": _picard,
    "optimize": _optimize,
    "example": _example,
}


def run_subcommand(
    cmd: str,
    config: ScenarioConfig,
    output_dir: str | Path,
    seed: int | None = None,
    paths: int | None = None,
    dt: float | None = None,
    threads: int = DEFAULT_THREADS,
) -> int:
    """
    Run one subcommand and write its artifacts into output_dir.

    Returns:
        0 on success, 1 when anything raised (partial outputs removed),
        2 for an unknown subcommand
    """
    handler = SUBCOMMANDS.get(cmd)
    if handler is None:
        _status("✗", f"Unknown subcommand '{cmd}' (expected one of: {', '.join(SUBCOMMANDS)})")
        return 2
    writer = ArtifactWriter(output_dir)
    try:
        config = _apply_overrides(config, seed, paths, dt)
        logger.info("Running %s on scenario '%s'", cmd, config.name)
        handler(config, writer, threads)
    except ImpulsiveSEEError as e:
        writer.rollback()
        _status("✗", f"{cmd} failed: {e}")
        return 1
    except Exception as e:
        # Output-directory errors, numpy errors and failing user callbacks
        logger.debug("%s raised", cmd, exc_info=True)
        writer.rollback()
        _status("✗", f"{cmd} failed with {type(e).__name__}: {e}")
        return 1
    _status("✓", f"{cmd} finished, {len(writer.written)} files in {writer.output_dir}")
    return 0


def _default_threads() -> int:
    raw = os.getenv(THREADS_ENV)
    if raw is None:
        return DEFAULT_THREADS
    try:
        return max(1, int(raw))
    except ValueError:
        _status("⚠", f"Ignoring {THREADS_ENV}={raw!r}: not an integer")
        return DEFAULT_THREADS


def _configure_logging() -> None:
    name = os.getenv(LOG_LEVEL_ENV, "INFO").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        level = logging.INFO
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impulsive-see",
        description="Simulate, certify and control impulsive stochastic evolution equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    help_text = {
        "check": "compute the well-posedness constants and audit g and h",
        "simulate": "simulate one path and a Monte-Carlo ensemble",
        "picard": "run the Picard iteration and report its contraction",
        "optimize": "minimize the cost over admissible controls",
        "example": "check, simulate (10^4 paths) and optimize (budget 500) the application example",
        "show-config": "print the resolved scenario as JSON",
    }
    for name, text in help_text.items():
        p = sub.add_parser(name, help=text)
        if name != "example":
            source = p.add_mutually_exclusive_group()
            source.add_argument("--config", type=Path, help="scenario JSON file")
            source.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
        if name == "show-config":
            continue
        p.add_argument("--out", type=Path, default=Path(DEFAULT_OUTPUT_DIR), help="output directory")
        p.add_argument("--seed", type=int, help="override simulation.seed")
        p.add_argument("--paths", type=int, help="override the number of Monte-Carlo paths")
        p.add_argument("--dt", type=float, help="override simulation.dt")
        p.add_argument(
            "--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or {DEFAULT_THREADS})"
        )
    return parser


def _resolve_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> ScenarioConfig:
    if args.command == "example":
        return get_preset(DEFAULT_PRESET)
    if args.config is not None:
        return load_config(args.config)
    if args.preset is not None:
        return get_preset(args.preset)
    if args.command == "show-config":
        return get_preset(DEFAULT_PRESET)
    parser.error(f"{args.command} needs --config or --preset")


def main(argv: list[str] | None = None) -> None:
    """Main entry point for the impulsive-see command"""
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args, parser)
    except ConfigError as e:
        _status("✗", str(e))
        sys.exit(1)

    if args.command == "show-config":
        print(dump_config(config))
        sys.exit(0)

    threads = args.threads if args.threads is not None else _default_threads()
    sys.exit(
        run_subcommand(
            args.command,
            config,
            args.out,
            seed=args.seed,
            paths=args.paths,
            dt=args.dt,
            threads=max(1, threads),
        )
    )


if __name__ == "__main__":
    main()
