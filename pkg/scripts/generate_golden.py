#!/usr/bin/env python3
"""Regenerate the golden reproduction report used by the test suite.

Run after a deliberate change to an example or to the JSON encoder, then review the diff.

Usage:
    python scripts/generate_golden.py [--check]
"""

import argparse
from pathlib import Path

from lawcollapse.formats import dump_json
from lawcollapse.services.repro import report_payload, repro

GOLDEN_PATH = Path(__file__).parent.parent / "tests" / "golden" / "repro_all.json"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--check", action="store_true", help="compare instead of writing")
    args = parser.parse_args()

    text = dump_json(report_payload(repro("all")))
    if args.check:
        if GOLDEN_PATH.read_text(encoding="utf-8") != text:
            print(f"Golden file is out of date: {GOLDEN_PATH}")
            raise SystemExit(1)
        print("Golden file is current.")
        return

    GOLDEN_PATH.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN_PATH.write_text(text, encoding="utf-8")
    print(f"  Wrote: {GOLDEN_PATH}")


if __name__ == "__main__":
    main()
