import json
from pathlib import Path

import pytest

from election_forensics.cli import main
from election_forensics.report import validate_report

PRECINCTS = (
    "precinct_id,region,territory,registered,ballots_cast,invalid,machine_counted,votes_A,votes_B\n"
    "p1,R,T1,1000,500,10,0,300,190\n"
    "p2,R,T1,800,400,0,1,150,250\n"
    "p3,R,T2,1200,900,20,0,600,280\n"
)


@pytest.fixture
def precincts_csv(tmp_path) -> Path:
    path = tmp_path / "precincts.csv"
    path.write_text(PRECINCTS)
    return path


def _report(out_dir: Path) -> dict:
    return json.loads((out_dir / "report.json").read_text())


def test_unknown_subcommand_exits_one(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_validate_happy_path(precincts_csv, tmp_path):
    out = tmp_path / "out"
    assert main(["validate", "--in", str(precincts_csv), "--leader", "A", "--out", str(out)]) == 0
    report = _report(out)
    assert validate_report(report) == []
    assert report["results"]["records"] == 3
    assert report["results"]["parties"] == ["A", "B"]


def test_validate_invariant_violation_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(
        "precinct_id,region,territory,registered,ballots_cast,invalid,machine_counted,votes_A,votes_B\n"
        "p1,R,T,100,90,0,0,80,20\n"
    )
    rc = main(["validate", "--in", str(bad), "--leader", "A", "--out", str(tmp_path / "o")])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("ERROR INVARIANT_VIOLATION:")


def test_missing_input_file_exits_two(tmp_path, capsys):
    rc = main(["validate", "--in", str(tmp_path / "nope.csv"), "--leader", "A", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert capsys.readouterr().err.startswith("ERROR IO:")


def test_scatter_writes_points_and_svg(precincts_csv, tmp_path):
    out = tmp_path / "out"
    rc = main([
        "scatter", "--in", str(precincts_csv), "--leader", "A",
        "--parties", "A,others", "--out", str(out),
    ])
    assert rc == 0
    points = (out / "scatter_A.csv").read_text().splitlines()
    assert points[0] == "precinct_id,x,y,weight"
    assert len(points) == 4
    assert (out / "scatter.svg").exists()
    assert "fits" in _report(out)["results"]


def test_hist_and_bins_outputs(precincts_csv, tmp_path):
    out_h = tmp_path / "h"
    assert main(["hist", "--in", str(precincts_csv), "--leader", "A", "--quantity", "turnout",
                 "--out", str(out_h)]) == 0
    lines = (out_h / "hist.csv").read_text().splitlines()
    assert lines[0] == "quantity,bin,weight"
    assert len(lines) == 102

    out_b = tmp_path / "b"
    assert main(["bins", "--in", str(precincts_csv), "--leader", "A", "--bin-width", "0.05",
                 "--out", str(out_b)]) == 0
    header = (out_b / "bins.csv").read_text().splitlines()[0]
    assert header == "bin_lo,bin_hi,party,votes,precincts"


def test_peaks_requires_seed(precincts_csv, tmp_path, capsys):
    rc = main(["peaks", "--in", str(precincts_csv), "--leader", "A", "--out", str(tmp_path / "o")])
    assert rc == 1


def test_peaks_on_shipped_fixture_flags_all_four_targets(fixtures_dir, tmp_path):
    out = tmp_path / "out"
    rc = main([
        "peaks", "--in", str(fixtures_dir / "round_targets_precincts.csv"),
        "--leader", "UNITY", "--seed", "7", "--replicates", "400", "--out", str(out),
        "--no-plots",
    ])
    assert rc == 0
    report = _report(out)
    assert set(report["results"]["flagged_targets"]) >= {70, 75, 80, 85}
    assert validate_report(report) == []


def test_delta_on_shipped_district_fixture(fixtures_dir, tmp_path):
    out = tmp_path / "out"
    rc = main(["delta", "--in", str(fixtures_dir / "nn_districts_2007_2011.csv"), "--out", str(out)])
    assert rc == 0
    rows = {r["unit"]: r for r in _report(out)["results"]["rows"]}
    assert rows["Kanavinsky"]["d_share"] == "-3.68"
    assert rows["Kanavinsky"]["d_turnout"] == "19.82"
    assert rows["Moskovsky"]["d_share"] == "-14.30"


def test_contrast_by_machine(precincts_csv, tmp_path):
    out = tmp_path / "out"
    rc = main(["contrast", "--in", str(precincts_csv), "--leader", "A", "--by", "machine",
               "--out", str(out)])
    assert rc == 0
    results = _report(out)["results"]
    assert results["labels"] == ["machine_counted", "hand_counted"]


def test_protocol_diff_and_paired_scan(tmp_path):
    protocols = tmp_path / "protocols.csv"
    protocols.write_text(
        "precinct_id,source,registered,ballots_cast,invalid,votes_A,votes_B\n"
        "u1,observer,1200,1000,0,482,518\n"
        "u1,official,1200,1000,0,617,383\n"
    )
    out = tmp_path / "pd"
    rc = main(["protocol-diff", "--in", str(protocols), "--leader", "A", "--out", str(out)])
    assert rc == 0
    results = _report(out)["results"]
    assert results["mean_d_leader_share"] == pytest.approx(0.135)

    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text(PRECINCTS)
    b.write_text(PRECINCTS.replace("600,280", "100,280"))
    out2 = tmp_path / "ps"
    rc = main(["paired-scan", "--in-a", str(a), "--in-b", str(b), "--leader", "A",
               "--threshold", "300", "--out", str(out2)])
    assert rc == 0
    results = _report(out2)["results"]
    assert results["counts"] == {"a_over_b": 1, "b_over_a": 0}


def test_hyperactive_cli(precincts_csv, tmp_path):
    series = tmp_path / "intraday.csv"
    series.write_text(
        "precinct_id,time,cumulative_voted\n"
        "p1,10:00,100\np1,18:00,200\n"
        "p2,10:00,100\np2,18:00,390\n"
        "p3,10:00,300\np3,18:00,880\n"
    )
    out = tmp_path / "out"
    rc = main(["hyperactive", "--in", str(precincts_csv), "--leader", "A",
               "--series", str(series), "--threshold", "0.13", "--out", str(out)])
    assert rc == 0
    results = _report(out)["results"]
    assert results["flagged"] == ["p1"]  # (500-200)/1000 = 0.30 > 0.13


def test_prob_subcommands(tmp_path, capsys):
    assert main(["prob", "odds", "0.9", "1e-6", "0.1", "1e-3", "--exact"]) == 0
    out = capsys.readouterr().out
    assert "111.11111111111111" in out and "1000/9" in out
    assert main(["prob", "run", "0.5", "20"]) == 0
    assert "9.5367431640625e-07" in capsys.readouterr().out
    assert main(["prob", "coincidence", "42", "6", "6"]) == 0
    assert main(["prob", "sigma", "0.5", "1000"]) == 0


def test_synth_cli_writes_dataset_and_truth(fixtures_dir, tmp_path):
    out = tmp_path / "synth"
    rc = main([
        "synth", "--model", str(fixtures_dir / "round_targets_model.json"),
        "--scenario", str(fixtures_dir / "round_targets_scenario.json"),
        "--seed", "5", "--out", str(out),
    ])
    assert rc == 0
    assert (out / "precincts.csv").exists()
    assert (out / "ground_truth.csv").exists()
    report = _report(out)
    assert report["results"]["total_rounding_delta"] != 0


def test_reports_validate_against_packaged_schema(precincts_csv, tmp_path):
    import jsonschema

    schema = json.loads(
        (Path(__file__).parent.parent / "src/election_forensics/schemas/report.schema.json").read_text()
    )
    out = tmp_path / "out"
    main(["validate", "--in", str(precincts_csv), "--leader", "A", "--out", str(out)])
    jsonschema.validate(_report(out), schema)
