"""Build a slice from a hand-written block list and show how it was repaired.

The list keeps the output Switch and the clipping logic but leaves out the
Goto sources feeding From 141 and From 142, so both From blocks are pulled in
and their Goto inputs are fed by constants.
"""

import argparse

from reqslice.backend import BlockList
from reqslice.data import data_path
from reqslice.evaluate import generate_test_suite, load_requirements, verdict
from reqslice.model import load_model
from reqslice.slicer import build_slice


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--tests", type=int, default=40)
    args = ap.parse_args()

    model = load_model(data_path("tustin.json"))
    reqs = {r.id: r for r in load_requirements(data_path("tustin_requirements.json"))}
    suite = generate_test_suite(model, args.tests, seed=args.seed)

    bl = BlockList((89, 90, 96, 132, 140, 93, 99))
    s = build_slice(model, bl, suite[0])
    print("listed:     ", sorted(s.kept_sids))
    print("edge cases: ", sorted(s.edge_case_sids))
    for f in s.constant_fixes:
        via = f" (reaches From {', '.join(map(str, f.feeds))})" if f.feeds else ""
        print(f"constant {f.sid} = {f.value:g} -> {f.endpoint}{via}")
    print(f"slice size {s.size} of {len(model.blocks)}")

    for rid in sorted(reqs):
        v = verdict(model, s, reqs[rid], suite)
        print(f"{rid}: {v.outcome.name.lower()}")


if __name__ == "__main__":
    main()
