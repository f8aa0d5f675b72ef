#!/usr/bin/env python3
"""Run the CLI once per document kind and validate the JSON it writes."""

import argparse
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("synthctl")
    ap.add_argument("--root", default=pathlib.Path(__file__).resolve().parent.parent, type=pathlib.Path)
    args = ap.parse_args()

    data = args.root / "data"
    schemas = {p.name.split(".")[0]: json.loads(p.read_text()) for p in (args.root / "schemas").glob("*.schema.json")}
    panel = ["--input", str(data / "toy_panel.csv"), "--treated", "treated", "--t0", "40"]

    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp)
        runs = {
            "fit": (["fit", *panel, "--method", "d2mscm", "--output", str(out / "fit.json")], out / "fit.json"),
            "conformal": (["conformal", *panel, "--output", str(out / "ci.json")], out / "ci.json"),
            "dte": (["dte", *panel, "--L", "300", "--mmd", "--permutations", "19", "--output", str(out / "dte.json")],
                    out / "dte.json"),
            "study": (["simulate", "--replications", "2", "--t1", "10", "--j", "3", "--compute-mmd", "--mmd-draws", "20",
                       "--output-dir", str(out / "sim")], out / "sim" / "aggregates.json"),
            "theorem1": (["simulate", "--preset", "theorem1", "--replications", "1", "--t0", "2000",
                          "--output-dir", str(out / "thm")], out / "thm" / "theorem1.json"),
            "truth": (["generate", "--kind", "shifted", "--j", "3", "--t0", "20", "--output", str(out / "g.csv"),
                       "--truth", str(out / "truth.json")], out / "truth.json"),
        }
        for kind, (cmd, path) in runs.items():
            proc = subprocess.run([args.synthctl, *cmd], capture_output=True, text=True)
            if proc.returncode != 0:
                print(f"FAIL {kind}: exit {proc.returncode}: {proc.stderr.strip()}")
                failures += 1
                continue
            doc = json.loads(path.read_text())
            try:
                jsonschema.validate(doc, schemas[kind])
                print(f"ok   {kind}")
            except jsonschema.ValidationError as e:
                print(f"FAIL {kind}: {e.message} at {list(e.absolute_path)}")
                failures += 1
        missing = set(schemas) - set(runs)
        for kind in sorted(missing):
            print(f"FAIL {kind}: schema without a producing command")
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
