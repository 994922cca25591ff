"""Run the full configuration grid against the structural oracle and print both tables."""

import argparse
import time
from pathlib import Path

from reqslice.experiment import load_plan, render_report, run_experiment, write_reports

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--plan", default=str(HERE / "plan_oracle.json"))
    ap.add_argument("--out", default=None, help="directory for reports and slices")
    args = ap.parse_args()

    t0 = time.perf_counter()
    report = run_experiment(load_plan(args.plan), out_dir=args.out)
    if args.out:
        write_reports(report, args.out)
    print(render_report(report, "accuracy"))
    print()
    print(render_report(report, "size"))
    print(f"\n{report.slice_count} slices in {time.perf_counter() - t0:.1f}s,"
          f" mean accurate size {report.mean_accurate_size():.1f} of {report.model_size}")


if __name__ == "__main__":
    main()
