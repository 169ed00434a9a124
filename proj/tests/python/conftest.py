import json
import os
import pathlib
import subprocess

import jsonschema
import pytest

REPO = pathlib.Path(__file__).resolve().parents[2]
SCHEMAS = pathlib.Path(os.environ.get("JDIAG_SCHEMAS", REPO / "schemas"))
CLI = os.environ.get("JDIAG_CLI", str(REPO / "build" / "jdiag"))


def _schema(name):
    return json.loads((SCHEMAS / name).read_text())


@pytest.fixture(scope="session")
def collection_schema():
    return _schema("collection.schema.json")


@pytest.fixture(scope="session")
def report_schema():
    return _schema("run_report.schema.json")


@pytest.fixture
def run(report_schema):
    """Run the CLI; returns (exit code, parsed report or None, stderr)."""

    def _run(*args):
        proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=600)
        report = None
        if proc.stdout.strip():
            report = json.loads(proc.stdout)
            jsonschema.validate(report, report_schema)
        return proc.returncode, report, proc.stderr

    return _run


@pytest.fixture
def write_collection(tmp_path):
    def _write(name, matrices, field="real"):
        n = len(matrices[0])
        doc = {"schema_version": 1, "field": field, "n": n, "k": len(matrices), "matrices": matrices}
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return path

    return _write
