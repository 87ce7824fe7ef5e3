#!/usr/bin/env python3
"""Fixture -> tagger + sense training -> evaluation -> parsing, all through the CLI.

Run from the repository root. Outputs land under runs/.
"""
import sys

from intradisc.cli import main

STEPS = [
    ["fixture", "--config", "configs/fixture.yaml"],
    ["fixture", "--config", "configs/sense_fixture.yaml"],
    ["dataset", "--config", "configs/tagger.yaml", "--out", "runs/dataset"],
    ["train", "--config", "configs/tagger.yaml"],
    ["train", "--config", "configs/sense.yaml"],
    ["eval", "--config", "configs/tagger.yaml", "--out", "runs/eval",
     "--checkpoint", "runs/models/tagger.ckpt", "--checkpoint", "runs/models/sense.ckpt"],
    ["parse", "--config", "configs/tagger.yaml", "--out", "runs/parse",
     "--checkpoint", "runs/models/tagger.ckpt", "--checkpoint", "runs/models/sense.ckpt"],
]

if __name__ == "__main__":
    for step in STEPS:
        print("$ intradisc " + " ".join(step), flush=True)
        code = main(step + sys.argv[1:])
        if code:
            sys.exit(code)
