#!/usr/bin/env python3
"""Run the full simulation study across scenarios 1A/1B/2A/2B.

Writes one report directory per scenario (replications.csv, summary.csv,
selection_proportions.csv, config.json).  At the published scale this is
1000 replications per scenario; use --replications for a desk-scale run.

Example:
    python scripts/run_study.py --out results/ --replications 200 --threads 4
"""

import argparse
import time
from pathlib import Path

from oaenet import ExperimentConfig, builtin_scenario, run_experiment, write_report

SCENARIOS = ("1A", "1B", "2A", "2B")
DEFAULT_METHODS = "OAENet,OLas,Targ,Conf,PotConf"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="base output directory")
    parser.add_argument("--replications", type=int, default=1000)
    parser.add_argument("--scenarios", default=",".join(SCENARIOS))
    parser.add_argument("--methods", default=DEFAULT_METHODS)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--gamma", type=float, default=3.0)
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    base = Path(args.out)
    for label in args.scenarios.split(","):
        label = label.strip()
        config = ExperimentConfig(
            scenario=builtin_scenario(label, n=args.n),
            replications=args.replications,
            methods=tuple(m.strip() for m in args.methods.split(",")),
            gamma=args.gamma,
            k_folds=args.folds,
            root_seed=args.seed,
            workers=args.threads,
        )
        t0 = time.time()
        report = run_experiment(config)
        out_dir = base / f"scenario_{label}"
        write_report(report, out_dir)
        print(f"scenario {label} ({args.replications} replications, {time.time() - t0:.0f}s)")
        for s in report.summaries:
            print(
                f"  {s.method:8s} mean_att={s.mean_att:8.4f} bias={s.bias:+.4f} "
                f"variance={s.variance:9.5f} failures={s.failures}"
            )
        print(f"  -> {out_dir}")


if __name__ == "__main__":
    main()
