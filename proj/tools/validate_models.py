#!/usr/bin/env python3
"""Validate model documents against docs/model.schema.json."""

import argparse
import json
import sys
from pathlib import Path

import jsonschema


def main():
    root = Path(__file__).resolve().parent.parent
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("files", nargs="*", type=Path, help="model files (default: models/*.json)")
    ap.add_argument("--schema", type=Path, default=root / "docs" / "model.schema.json")
    args = ap.parse_args()

    validator = jsonschema.Draft202012Validator(json.loads(args.schema.read_text()))
    files = args.files or sorted((root / "models").glob("*.json"))
    bad = 0
    for path in files:
        errors = sorted(validator.iter_errors(json.loads(path.read_text())), key=lambda e: list(e.path))
        for e in errors:
            print(f"{path.name}: /{'/'.join(map(str, e.path))}: {e.message}")
        print(f"{path.name}: {'ok' if not errors else 'invalid'}")
        bad += bool(errors)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
