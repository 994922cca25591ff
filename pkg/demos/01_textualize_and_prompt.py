"""Render the integrator excerpt at each verbosity and assemble one prompt."""

import argparse

from reqslice.data import data_path
from reqslice.evaluate import load_requirements
from reqslice.model import load_model
from reqslice.prompt import PromptConfig, Strategy, build_prompt, load_training_examples
from reqslice.textualize import Verbosity, textualize, token_count


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--req", default="R1")
    ap.add_argument("--strategy", default="NS")
    args = ap.parse_args()

    excerpt = load_model(data_path("tustin_limits_excerpt.json"))
    for v in Verbosity:
        text = textualize(excerpt, v)
        print(f"--- {v.name.lower()} ({token_count(text)} tokens)")
        print(text)

    model = load_model(data_path("tustin.json"))
    req = next(r for r in load_requirements(data_path("tustin_requirements.json")) if r.id == args.req)
    strategy = Strategy.parse(args.strategy)
    n = 0 if strategy is Strategy.ZERO_SHOT else 1
    cfg = PromptConfig(Verbosity.MEDIUM, strategy, n)
    examples = load_training_examples(data_path("training_examples.json"), cfg.verbosity)[:n]
    p = build_prompt(textualize(model, cfg.verbosity), req.text, cfg, examples)
    print(f"--- prompt {cfg.code} for {req.id}: ~{p.token_estimate} tokens")
    print(p.text[:600] + "\n[...]\n" + p.text[-400:])


if __name__ == "__main__":
    main()
