"""Canonical JSON rendering: stable key order and formatting for golden files."""

import json


def canonical_json(obj):
    """Serialize with sorted keys and a trailing newline; byte-stable per input."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(obj))


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
