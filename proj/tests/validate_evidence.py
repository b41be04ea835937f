#!/usr/bin/env python3
"""Validate evidence bundles against the evidence-v1 schemas.

usage: validate_evidence.py SCHEMA_DIR PATH...

Each PATH holds one bundle (.json), one bundle per line (.jsonl), or is a
directory whose *.bundle.json files are checked.
"""
import json
import pathlib
import sys

from jsonschema import Draft202012Validator
from referencing import Registry, Resource


def load_registry(schema_dir):
    resources = []
    for path in sorted(pathlib.Path(schema_dir).glob("*.schema.json")):
        schema = json.loads(path.read_text())
        Draft202012Validator.check_schema(schema)
        resources.append((schema["$id"], Resource.from_contents(schema)))
    return Registry().with_resources(resources)


def documents(path):
    text = pathlib.Path(path).read_text()
    if path.endswith(".jsonl"):
        for n, line in enumerate(text.splitlines(), 1):
            if line.strip():
                yield f"{path}:{n}", json.loads(line)
    else:
        yield path, json.loads(text)


def main(argv):
    if len(argv) < 3:
        print(__doc__, file=sys.stderr)
        return 2
    registry = load_registry(argv[1])
    bundle = registry.contents("urn:datacheck:evidence-v1:bundle")
    validator = Draft202012Validator(bundle, registry=registry)
    failures = 0
    checked = 0
    paths = []
    for arg in argv[2:]:
        p = pathlib.Path(arg)
        paths += [str(f) for f in sorted(p.glob("*.bundle.json"))] if p.is_dir() else [arg]
    for path in paths:
        for name, doc in documents(path):
            checked += 1
            errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
            for e in errors[:5]:
                print(f"{name}: {'/'.join(map(str, e.absolute_path))}: {e.message}", file=sys.stderr)
            failures += bool(errors)
    print(f"{checked - failures}/{checked} bundles valid")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
