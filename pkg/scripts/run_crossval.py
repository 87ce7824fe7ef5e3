#!/usr/bin/env python3
"""k-fold cross-validation of the tagger on the synthetic fixture (run from the repository root)."""
import sys

from intradisc.cli import main

if __name__ == "__main__":
    code = main(["fixture", "--config", "configs/fixture.yaml"])
    sys.exit(code or main(["crossval", "--config", "configs/crossval.yaml", *sys.argv[1:]]))
