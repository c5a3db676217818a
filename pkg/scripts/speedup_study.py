#!/usr/bin/env python3
"""
Wall-clock speedup study on a slowed-down bench problem.

Runs Mads with MegaSearchPoll on a problem whose evaluations sleep for a fixed
delay, once per worker count, and reports the wall-clock ratio to the
single-worker run.

Usage:
    python scripts/speedup_study.py [--problem sphere5] [--delay 0.05] [--budget 400]
                                    [--workers 1,2,4,8] [--csv speedup.csv]
"""

import argparse
import logging
import sys
from pathlib import Path

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from madsopt.bench.problems import get_problem, synthetic_slow_blackbox
from madsopt.bench.records import speedup_curve
from madsopt.bench.runner import run_instance, write_speedup_csv
from madsopt.main import configure_logging

logger = logging.getLogger("speedup_study")


def main():
    """Run the study and print one ratio per worker count."""
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--problem", default="sphere5")
    parser.add_argument("--delay", type=float, default=0.05, help="Seconds per evaluation")
    parser.add_argument("--budget", type=int, default=400)
    parser.add_argument("--workers", default="1,2,4,8", help="Comma-separated worker counts")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", help="Write elapsed time per evaluation to this CSV")
    args = parser.parse_args()
    configure_logging()
    
    try:
        problem = synthetic_slow_blackbox(get_problem(args.problem), args.delay)
    except (KeyError, ValueError) as e:
        print(f"Error: {e}")
        sys.exit(2)
    
    workers = [int(w) for w in args.workers.split(",")]
    records = []
    for n_workers in workers:
        record, _ = run_instance(problem, "mads-mega", args.seed, args.budget, n_workers=n_workers)
        records.append(record.model_copy(update={"solver": f"mads-mega-{n_workers}"}))
    
    baseline = records[0].elapsed[-1] if records[0].elapsed else 0.0
    print(f"{problem.name}: {args.budget} evaluations, {args.delay}s each")
    for n_workers, record in zip(workers, records):
        wall = record.elapsed[-1] if record.elapsed else 0.0
        ratio = wall / baseline if baseline else float("nan")
        print(f"  {n_workers:>3} workers: {wall:8.2f}s  ratio {ratio:.3f}  best f {record.final_f:.6g}")
    
    if args.csv:
        write_speedup_csv(Path(args.csv), speedup_curve(records))
        print(f"Wrote {args.csv}")


if __name__ == "__main__":
    main()
