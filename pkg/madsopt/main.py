"""
Command-line entry point for madsopt.

    madsopt solve <paramfile> [--seed S] [--threads N] [--cache FILE] [--csv DIR]
    madsopt bench <suite> [--solvers a,b] [--seeds K] [--tau T] [--budget B] [--jobs J] [--csv DIR]

Exit codes: 0 on a clean stop, 2 on parameter errors, 3 on fatal I/O errors.
"""

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from madsopt.bench.problems import get_suite
from madsopt.bench.records import data_profile
from madsopt.bench.runner import SOLVERS, run_suite, write_bench_outputs
from madsopt.cli.solve import solve_file
from madsopt.errors import BlackboxSpawnError, NoEvaluableStart, OutputError, ParamFileError, ProblemError
from madsopt.settings import settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARAMS = 2
EXIT_IO = 3


def configure_logging() -> None:
    """Stream handler on stdout at the configured level."""
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format=settings.log_format,
        handlers=[
            logging.StreamHandler(sys.stdout)
        ]
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="madsopt", description="Mesh adaptive direct search blackbox optimizer")
    commands = parser.add_subparsers(dest="command", required=True)
    
    solve = commands.add_parser("solve", help="Solve the problem of a parameter file")
    solve.add_argument("paramfile", help="Parameter file")
    solve.add_argument("--seed", type=int, help="Override SEED")
    solve.add_argument("--threads", type=int, help="Override NB_THREADS")
    solve.add_argument("--cache", help="Override CACHE_FILE")
    solve.add_argument("--csv", help="Directory of history.csv when HISTORY_FILE is not set")
    
    bench = commands.add_parser("bench", help="Benchmark solvers on a problem suite")
    bench.add_argument("suite", help="Suite name or comma-separated problem names")
    bench.add_argument("--solvers", default="mads", help=f"Comma-separated tags among {', '.join(SOLVERS)}")
    bench.add_argument("--seeds", type=int, default=1, help="Seeds per problem")
    bench.add_argument("--tau", type=float, default=1e-2, help="Data profile tolerance")
    bench.add_argument("--budget", type=int, help="Evaluation budget (standard budgets by default)")
    bench.add_argument("--jobs", type=int, default=1, help="Instances solved concurrently")
    bench.add_argument("--csv", help="Output directory of the history, profile, envelope and speedup CSVs")
    return parser


def _solve(args: argparse.Namespace) -> int:
    result = solve_file(
        args.paramfile,
        seed=args.seed,
        threads=args.threads,
        cache_file=args.cache,
        csv_dir=args.csv,
        handle_signals=True,
    )
    logger.info("Stopped: %s after %d evaluations", result.stop_reason.value if result.stop_reason else None, result.eval_count)
    return EXIT_OK


def _bench(args: argparse.Namespace) -> int:
    problems = get_suite(args.suite)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    records = run_suite(problems, solvers, range(args.seeds), budget=args.budget, jobs=args.jobs)
    known = {p.name: p.f_best for p in problems if p.f_best is not None}
    for solver, profile in data_profile(records, args.tau, known=known).items():
        print(f"{solver}: fraction solved {profile.fraction[-1]:.3f} (tau={args.tau})")
    if args.csv:
        for path in write_bench_outputs(args.csv, records, args.tau, known=known):
            logger.info("Wrote %s", path)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        if args.command == "solve":
            return _solve(args)
        return _bench(args)
    except (ParamFileError, ProblemError, ValidationError, KeyError) as exc:
        logger.error("Invalid parameters: %s", exc)
        return EXIT_PARAMS
    except NoEvaluableStart as exc:
        logger.error("%s", exc)
        return EXIT_PARAMS
    except (OutputError, BlackboxSpawnError) as exc:
        logger.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
