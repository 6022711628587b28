#!/usr/bin/env python3
"""Run the acceptance suite with per-criterion pass/fail lines."""

import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(
        subprocess.call(
            [sys.executable, "-m", "pytest",
             str(REPO / "tests" / "test_acceptance.py"), "-v", "-s"]
        )
    )
