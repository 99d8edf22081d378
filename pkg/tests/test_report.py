import json
from pathlib import Path

import jsonschema

from election_forensics.report import (
    CAVEAT,
    REPORT_SCHEMA,
    build_report,
    input_digest,
    render_report,
    validate_report,
    write_report,
)


def _sample(tmp_path: Path) -> dict:
    source = tmp_path / "in.csv"
    source.write_text("x\n1\n")
    return build_report(
        command="validate",
        config={"seed": 3, "alpha": 0.01},
        inputs=[input_digest(source)],
        results={"records": 1},
    )


def test_report_carries_caveat_and_validates(tmp_path):
    report = _sample(tmp_path)
    assert report["caveat"] == CAVEAT
    assert validate_report(report) == []
    jsonschema.validate(report, REPORT_SCHEMA)


def test_packaged_schema_matches_in_code_schema():
    packaged = json.loads(
        (Path(__file__).parent.parent / "src/election_forensics/schemas/report.schema.json").read_text()
    )
    assert packaged == REPORT_SCHEMA


def test_validate_report_catches_missing_caveat(tmp_path):
    report = _sample(tmp_path)
    report["caveat"] = "trust me"
    assert any("caveat" in p for p in validate_report(report))


def test_write_report_is_atomic_and_deterministic(tmp_path):
    report = _sample(tmp_path)
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    write_report(out1, report)
    write_report(out2, report)
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert not list(out1.glob("*.tmp"))
    meta = json.loads((out1 / "report.meta.json").read_text())
    assert "written_at_unix" in meta


def test_render_report_stable_key_order(tmp_path):
    report = _sample(tmp_path)
    text = render_report(report)
    assert text == render_report(dict(reversed(list(report.items()))))
    assert text.endswith("\n")


def test_input_digest_matches_manual_hash(tmp_path):
    import hashlib

    f = tmp_path / "data.bin"
    f.write_bytes(b"abc123")
    assert input_digest(f)["sha256"] == hashlib.sha256(b"abc123").hexdigest()
