"""Synthesize a cassette of noisy replies, replay it through the grid twice and compare the CSVs."""

import argparse
import json
import tempfile
from pathlib import Path

from reqslice.cli import main as cli_main
from reqslice.data import data_path
from reqslice.experiment import ExperimentPlan, synthesize_cassette


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=21)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        doc = {
            "model": str(data_path("tustin.json")),
            "requirements": str(data_path("tustin_requirements.json")),
            "training_examples": str(data_path("training_examples.json")),
            "repetitions": args.reps,
            "seed": args.seed,
            "backend": {"kind": "replay", "cassette": "cassette.jsonl"},
        }
        (tmp / "plan.json").write_text(json.dumps(doc))
        n = synthesize_cassette(ExperimentPlan.from_dict(doc, tmp), tmp / "cassette.jsonl", seed=args.seed)
        print(f"cassette: {n} replies")
        for run in ("a", "b"):
            code = cli_main(["experiment", str(tmp / "plan.json"), "--out", str(tmp / run)])
            print(f"run {run}: exit {code}")
        same = all((tmp / "a" / f).read_bytes() == (tmp / "b" / f).read_bytes()
                   for f in ("report_accuracy.csv", "report_size.csv"))
        print("identical CSVs:", same)
        print((tmp / "a" / "report_accuracy.md").read_text())


if __name__ == "__main__":
    main()
