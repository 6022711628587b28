#!/usr/bin/env python3
"""Run the bundled default experiment config end to end.

Usage: python scripts/run_experiments.py [OUT_DIR] [--trials N]
Desk-scale note: the default config uses the full trial counts; pass
--trials to shrink everything for a quick look.
"""

import sys
from pathlib import Path

from martsafe.cli import main

REPO = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    argv = sys.argv[1:]
    out = argv[0] if argv and not argv[0].startswith("-") else "results"
    rest = argv[1:] if argv and not argv[0].startswith("-") else argv
    sys.exit(main(["run", str(REPO / "configs" / "default.json"), "--out", out, *rest]))
