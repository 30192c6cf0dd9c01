#!/usr/bin/env python3
import argparse
import json
import sys
from pathlib import Path


def differences(left, right, path="$"):
    """
    Paths at which two parsed reports differ.
    """
    if isinstance(left, dict) and isinstance(right, dict):
        found = []
        for key in sorted(set(left) | set(right)):
            if key not in left or key not in right:
                found.append(f"{path}.{key}")
            else:
                found.extend(differences(left[key], right[key], f"{path}.{key}"))
        return found
    if isinstance(left, list) and isinstance(right, list):
        if len(left) != len(right):
            return [f"{path} (length {len(left)} != {len(right)})"]
        found = []
        for idx, (a, b) in enumerate(zip(left, right)):
            found.extend(differences(a, b, f"{path}[{idx}]"))
        return found
    return [] if left == right else [path]


def main():
    parser = argparse.ArgumentParser(description="Compare two kolmo JSON reports")
    parser.add_argument("first", help="Path to the first report")
    parser.add_argument("second", help="Path to the second report")

    args = parser.parse_args()

    reports = []
    for name in (args.first, args.second):
        path = Path(name)
        if not path.exists():
            print(f"Error: File {path} not found", file=sys.stderr)
            sys.exit(2)
        try:
            with open(path, "r", encoding="utf-8") as f:
                reports.append(json.load(f))
        except json.JSONDecodeError as e:
            print(f"Error parsing {path}: {e}", file=sys.stderr)
            sys.exit(2)

    found = differences(*reports)
    if found:
        for line in found:
            print(line)
        sys.exit(1)
    print("Reports match")


if __name__ == "__main__":
    main()
