#!/usr/bin/env python3
"""Run every bundled experiment config and the geometry report.

Writes CSV tables under results/ (created if missing). Equivalent to calling
the proxflow CLI once per config; kept as a script so the full benchmark set
is one command.
"""

import os
import pathlib
import sys

from proxflow.cli import main

HERE = pathlib.Path(__file__).resolve().parent
CONFIGS = [
    ("converge-propagation", "propagation_scalar.json"),
    ("converge-propagation", "propagation_general_2d.json"),
    ("converge-filter", "filter_scalar.json"),
    ("compare-filters", "compare_scalar.json"),
]


def run() -> int:
    os.chdir(HERE.parent)  # config output paths are repo-root relative
    (HERE.parent / "results").mkdir(exist_ok=True)
    for command, name in CONFIGS:
        cfg = HERE / "configs" / name
        print(f"== {command} {name}")
        rc = main([command, "--config", str(cfg)])
        if rc != 0:
            return rc
    print("== lemma-checks")
    return main(
        ["lemma-checks", "--trials", "1000", "--dims", "1-5", "--seed", "0",
         "--out", "results/lemma_checks.csv"]
    )


if __name__ == "__main__":
    sys.exit(run())
