import csv
import json

import pytest

from lrising.cli import RunConfig, main


def test_config_roundtrip():
    cfg = RunConfig(alpha=0.25, beta=1.5, bigJ=7.0, L=12, m=-0.2,
                    dynamics="fixed-exchange", seed=99)
    text = cfg.emit()
    back = RunConfig.parse(text)
    assert back == cfg
    assert RunConfig.parse(back.emit()) == back


def test_config_rejects_unknown_key():
    with pytest.raises(ValueError):
        RunConfig.parse("frobnicate=1\n")


def test_geometry_command(tmp_path):
    src = tmp_path / "spins.txt"
    src.write_text("+++++\n++-++\n+--+-\n")
    out = tmp_path / "geo.jsonl"
    rc = main([
        "geometry", "--input", str(src), "--out", str(out),
        "--alpha", "0.3", "--L", "2",
    ])
    assert rc == 0
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(recs) == 3
    assert recs[0]["triangles"] == []
    assert recs[1]["triangles"][0]["mass"] == 1
    assert all(r["invariants_ok"] for r in recs)


def test_geometry_rejects_malformed(tmp_path, capsys):
    src = tmp_path / "bad.txt"
    src.write_text("+++\n+*+\n")
    rc = main(["geometry", "--input", str(src), "--out", "-"])
    assert rc == 2
    assert "line 2" in capsys.readouterr().err


def test_check_unknown_suite():
    assert main(["check", "--suite", "nope"]) == 2


def test_check_entropy_passes(tmp_path):
    out = tmp_path / "report.json"
    rc = main(["check", "--suite", "entropy", "--out", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["passed"]


def test_enumerate_command(tmp_path):
    out = tmp_path / "oracle.csv"
    rc = main([
        "enumerate", "--L", "4", "--alpha", "0.3", "--beta", "1.0",
        "--bigJ", "4", "--events", "all;window:m=0,eps0=0.3",
        "--out", str(out),
    ])
    assert rc == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["event", "observable", "value", "configs"]
    assert any(r[1] == "logZ" for r in rows)
    assert out.with_suffix(".csv.config").exists()


def test_sample_reproducible(tmp_path):
    args = [
        "sample", "--alpha", "0.3", "--beta", "1.0", "--bigJ", "5",
        "--L", "6", "--m", "0.0", "--sweeps", "60", "--replicas", "2",
        "--dynamics", "fixed-exchange", "--thin", "10", "--seed", "5",
    ]
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert (out1 / "droplets.jsonl").read_bytes() == (
        out2 / "droplets.jsonl"
    ).read_bytes()
    assert (out1 / "summary.csv").read_bytes() == (out2 / "summary.csv").read_bytes()
    # rerun from the echoed config file: byte-identical again
    cfg_path = out1 / "droplets.jsonl.config"
    out3 = tmp_path / "run3"
    assert main(["sample", "--config", str(cfg_path), "--out", str(out3)]) == 0
    assert (out3 / "droplets.jsonl").read_bytes() == (
        out1 / "droplets.jsonl"
    ).read_bytes()


def test_cluster_command(tmp_path):
    out = tmp_path / "envelopes.csv"
    rc = main([
        "cluster", "--L", "6", "--alpha", "0.3", "--beta", "1.2",
        "--bigJ", "5", "--out", str(out),
    ])
    assert rc == 0
    rows = list(csv.reader(out.open()))
    names = [r[0] for r in rows[1:]]
    assert "logZ" in names and "m_beta" in names
    logz_row = rows[[r[0] for r in rows].index("logZ")]
    assert logz_row[5] == "True"
