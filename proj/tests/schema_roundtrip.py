"""Validates shipped scenarios and emitted reports against `tonelli schema`.

usage: schema_roundtrip.py <tonelli binary> <scenario dir>
"""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def main() -> int:
    cli, scenario_dir = str(pathlib.Path(sys.argv[1]).resolve()), pathlib.Path(sys.argv[2])
    schema = json.loads(subprocess.run([cli, "schema"], check=True, capture_output=True, text=True).stdout)
    jsonschema.Draft7Validator.check_schema(schema)
    validator = jsonschema.Draft7Validator(schema)
    defs = schema["definitions"]
    failures = 0

    for path in sorted(scenario_dir.glob("*.json")):
        errors = list(validator.iter_errors(json.loads(path.read_text())))
        expect_invalid = path.name == "invalid_horizon.json"
        if bool(errors) != expect_invalid:
            print(f"FAIL {path.name}: {[e.message for e in errors] or 'unexpectedly valid'}")
            failures += 1
        else:
            print(f"ok   {path.name}")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        runs = {
            "dilation_hessian.json": ("table_report", {"output": {"prefix": "table", "format": "json"}}),
            "curvature_grid.json": ("table_report", {"output": {"prefix": "grid", "format": "json"}}),
            "perturb_conformal3.json": (
                "perturb_report",
                {"output": {"prefix": "perturb"}, "numeric": {"samples": 500, "calibration_samples": 200}},
            ),
            "caustic.json": ("error_report", {}),
            "invalid_horizon.json": ("error_report", {}),
        }
        for name, (definition, patch) in runs.items():
            scenario = json.loads((scenario_dir / name).read_text())
            for key, value in patch.items():
                scenario.setdefault(key, {}).update(value)
            file = tmp / name
            file.write_text(json.dumps(scenario))
            proc = subprocess.run([cli, "run", str(file)], cwd=tmp, capture_output=True, text=True)
            if definition == "error_report":
                report = json.loads(proc.stderr)
            else:
                report = json.loads((tmp / json.loads(proc.stdout)["outputs"][0]).read_text())
            sub = jsonschema.Draft7Validator(defs[definition])
            errors = list(sub.iter_errors(report))
            if errors:
                print(f"FAIL {name} report: {errors[0].message}")
                failures += 1
            else:
                print(f"ok   {name} report ({definition}, exit {proc.returncode})")

    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
