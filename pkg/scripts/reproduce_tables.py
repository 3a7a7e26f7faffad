#!/usr/bin/env python
"""Monte Carlo estimation, level/power and constancy studies over the simulation designs.

Runs each study over the error cases and quantile levels and writes one CSV
per study:

- mse.csv: MSE and bias of beta-hat, PLVC vs LCC, under both truths
- beta_tests.csv: rejection rates of QRS, QRS_delta and Wald for H0: beta = 0
- constancy_tests.csv: rejection rates of the constancy tests for alpha_1

Usage:
    python scripts/reproduce_tables.py --all --reps 500
    python scripts/reproduce_tables.py --study beta --n 30 --reps 200 --threads 8
    python scripts/reproduce_tables.py --study mse --cases 1 --taus 0.5 --output ./results
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import pandas as pd

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from plvc_quantile.models.inference import TestMethod
from plvc_quantile.models.simulation import SimulationConfig, StudyTest
from plvc_quantile.services.simulation import mc_mse, mc_power_curve

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

BETA_VALUES = [0.0, 0.5, 1.0]
ETA_VALUES = [0.0, 0.75, 1.5]


def mse_study(
    base: SimulationConfig, cases: list[int], taus: list[float], n_jobs: int
) -> pd.DataFrame:
    """MSE of beta-hat for both estimators under the PLVC and LCC truths."""
    rows = []
    for truth in ("plvc", "lcc"):
        for case in cases:
            for tau in taus:
                config = base.model_copy(update={"truth": truth, "case": case, "tau": tau})
                logger.info(f"MSE study: truth={truth} case={case} tau={tau}")
                rows.extend(mc_mse(config, n_jobs=n_jobs).to_csv_rows())
    return pd.DataFrame(rows)


def _sweep(
    base: SimulationConfig,
    cases: list[int],
    taus: list[float],
    test: StudyTest,
    target: str,
    values: list[float],
    n_jobs: int,
) -> pd.DataFrame:
    rows = []
    for case in cases:
        for tau in taus:
            config = base.model_copy(update={"case": case, "tau": tau})
            logger.info(f"{target} sweep: case={case} tau={tau}")
            for report in mc_power_curve(config, test, target, values, n_jobs=n_jobs):
                rows.extend({"value": report.value, **r} for r in report.to_csv_rows())
    return pd.DataFrame(rows)


def beta_study(
    base: SimulationConfig, cases: list[int], taus: list[float], n_jobs: int
) -> pd.DataFrame:
    """Level and power of the three beta tests over a beta sweep."""
    test = StudyTest(methods=[TestMethod.QRS, TestMethod.QRS_DELTA, TestMethod.WALD])
    return _sweep(base, cases, taus, test, "beta", BETA_VALUES, n_jobs)


def constancy_study(
    base: SimulationConfig, cases: list[int], taus: list[float], n_jobs: int
) -> pd.DataFrame:
    """Level and power of the alpha_1 constancy tests over an eta sweep."""
    test = StudyTest(hypothesis="constancy", methods=[TestMethod.QRS, TestMethod.QRS_DELTA])
    return _sweep(base, cases, taus, test, "constancy", ETA_VALUES, n_jobs)


STUDIES = {
    "mse": ("mse.csv", mse_study),
    "beta": ("beta_tests.csv", beta_study),
    "constancy": ("constancy_tests.csv", constancy_study),
}


def _floats(value: str) -> list[float]:
    return [float(v) for v in value.split(",") if v.strip()]


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(
        description="Run the Monte Carlo simulation studies",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument("--all", action="store_true", help="Run every study")
    parser.add_argument(
        "--study", choices=sorted(STUDIES), action="append", help="Study to run (repeatable)"
    )
    parser.add_argument("--n", type=int, default=100, help="Subjects per replicate")
    parser.add_argument("--reps", type=int, default=500, help="Replicates per cell")
    parser.add_argument("--seed", type=int, default=0, help="Root seed")
    parser.add_argument("--cases", default="1,2,3", help="Error cases to run")
    parser.add_argument("--taus", default="0.25,0.5,0.75", help="Quantile levels to run")
    parser.add_argument("--knots", type=int, help="Fixed internal knots (default: SIC)")
    parser.add_argument("--threads", type=int, default=-1, help="Worker processes")
    parser.add_argument(
        "--output", type=Path, default=Path("./results"), help="Directory for the CSV tables"
    )

    args = parser.parse_args()
    selected = list(STUDIES) if args.all else list(dict.fromkeys(args.study or []))
    if not selected:
        parser.print_help()
        print("\nError: No study specified. Use --all or --study NAME.")
        sys.exit(1)

    base = SimulationConfig(n=args.n, reps=args.reps, seed=args.seed, knots=args.knots)
    cases = [int(c) for c in _floats(args.cases)]
    taus = _floats(args.taus)
    args.output.mkdir(parents=True, exist_ok=True)

    summary = {}
    for name in selected:
        filename, study = STUDIES[name]
        started = time.perf_counter()
        frame = study(base, cases, taus, args.threads)
        path = args.output / filename
        frame.to_csv(path, index=False, lineterminator="\n")
        summary[name] = {
            "rows": len(frame),
            "seconds": round(time.perf_counter() - started, 1),
            "path": str(path),
        }
        logger.info(f"Wrote {path}")

    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
