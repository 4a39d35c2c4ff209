#!/usr/bin/env python3
"""
End-to-end tests for the qroute command line
"""
import csv
import json
import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from main import EXIT_ERROR, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, cli_dispatch
from services.bench_service import REPORT_COLUMNS

DATA_DIR = Path(__file__).parent / "data"
CIRCUIT = str(DATA_DIR / "two_swap_circuit.json")
RING5 = str(DATA_DIR / "ring5.json")


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("QROUTE_SEED", raising=False)
    monkeypatch.delenv("QROUTE_WORKERS", raising=False)


def test_gen_ghz(tmp_path):
    out = tmp_path / "ghz.json"
    assert cli_dispatch(["gen", "--kind", "ghz", "--qubits", "5", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data == {"num_qubits": 5, "gates": [[0, 1], [1, 2], [2, 3], [3, 4]]}


def test_gen_to_stdout(capsys):
    assert cli_dispatch(["gen", "--kind", "random", "--qubits", "4", "--gates", "7", "--seed", "3"]) == EXIT_OK
    assert len(json.loads(capsys.readouterr().out)["gates"]) == 7


def test_route_oracle_two_swaps(tmp_path):
    out = tmp_path / "routed.json"
    code = cli_dispatch(["route", "--circuit", CIRCUIT, "--topology", RING5, "--router", "oracle",
                         "--mapping", "trivial", "--out", str(out)])
    assert code == EXIT_OK
    assert '"swap_count":2' in out.read_text()


def test_route_preset_topology_with_verify(capsys):
    code = cli_dispatch(["route", "--circuit", CIRCUIT, "--topology", "ring5", "--router", "sabre", "--verify"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["swap_count"] >= 2


def test_verify_subcommand(tmp_path):
    routed = tmp_path / "routed.json"
    assert cli_dispatch(["route", "--circuit", CIRCUIT, "--topology", RING5, "--router", "basic",
                         "--out", str(routed)]) == EXIT_OK
    assert cli_dispatch(["verify", "--circuit", CIRCUIT, "--topology", RING5, "--routed", str(routed)]) == EXIT_OK

    tampered = json.loads(routed.read_text())
    tampered["swap_count"] += 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(tampered))
    assert cli_dispatch(["verify", "--circuit", CIRCUIT, "--topology", RING5, "--routed", str(bad)]) == EXIT_VERIFY


def test_usage_errors():
    assert cli_dispatch([]) == EXIT_USAGE
    assert cli_dispatch(["route", "--circuit", CIRCUIT]) == EXIT_USAGE
    assert cli_dispatch(["gen", "--kind", "nope", "--qubits", "5"]) == EXIT_USAGE


def test_domain_and_io_errors(tmp_path):
    missing = str(tmp_path / "missing.json")
    assert cli_dispatch(["route", "--circuit", missing, "--topology", RING5]) == EXIT_ERROR
    assert cli_dispatch(["gen", "--kind", "ghz", "--qubits", "1"]) == EXIT_ERROR
    assert cli_dispatch(["route", "--circuit", CIRCUIT, "--topology", RING5, "--router", "agent"]) == EXIT_ERROR
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert cli_dispatch(["route", "--circuit", str(broken), "--topology", RING5]) == EXIT_ERROR


def test_bench_outputs(tmp_path):
    report, table = tmp_path / "bench.json", tmp_path / "bench.csv"
    args = ["bench", "--suite", "ghz,random", "--topology", "grid3x4", "--routers", "basic,sabre",
            "--seeds", "2", "--gates", "12", "--out", str(report), "--csv", str(table)]
    assert cli_dispatch(args) == EXIT_OK
    rows = json.loads(report.read_text())["rows"]
    assert [(r["benchmark"], r["router"]) for r in rows] == [
        ("ghz", "basic"), ("ghz", "sabre"), ("random", "basic"), ("random", "sabre"),
    ]
    with open(table, newline="") as f:
        reader = csv.DictReader(f)
        assert reader.fieldnames == REPORT_COLUMNS
        assert len(list(reader)) == 4

    first = report.read_bytes()
    assert cli_dispatch(args) == EXIT_OK
    assert report.read_bytes() == first


def test_bench_plot_data(tmp_path):
    series_path = tmp_path / "series.json"
    args = ["bench", "--suite", "random", "--topology", "ring5", "--routers", "sabre", "--seeds", "2",
            "--gates", "8", "--out", str(tmp_path / "bench.json"), "--plot-data", str(series_path),
            "--sizes", "10,20,30"]
    assert cli_dispatch(args) == EXIT_OK
    series = json.loads(series_path.read_text())
    assert [p["gates"] for p in series["series"]["sabre"]["points"]] == [10, 20, 30]


def test_train_and_route_with_agent(tmp_path):
    checkpoint, log = tmp_path / "agent.ckpt", tmp_path / "train.jsonl"
    args = ["train", "--topology", "ring5", "--gates", "6", "--circuits", "2", "--episodes", "3",
            "--rollouts", "5", "--batch-size", "2", "--threshold", "2", "--capacity", "20",
            "--lookahead", "8", "--out", str(checkpoint), "--log", str(log)]
    assert cli_dispatch(args) == EXIT_OK
    assert len(log.read_text().splitlines()) == 3
    first = checkpoint.read_bytes()
    assert cli_dispatch(args) == EXIT_OK
    assert checkpoint.read_bytes() == first

    routed = tmp_path / "routed.json"
    code = cli_dispatch(["route", "--circuit", CIRCUIT, "--topology", RING5, "--router", "agent",
                         "--checkpoint", str(checkpoint), "--verify", "--out", str(routed)])
    assert code == EXIT_OK
    assert json.loads(routed.read_text())["swap_count"] >= 2


def test_verify_circuit_wider_than_topology(tmp_path, capsys):
    wide = tmp_path / "wide.json"
    wide.write_text('{"num_qubits":6,"gates":[[0,5]]}')
    routed = tmp_path / "routed.json"
    routed.write_text('{"initial_mapping":[0,1,2,3,4],"ops":[{"exec":{"gate":0,"phys":[0,4]}}],"swap_count":0}')
    code = cli_dispatch(["verify", "--circuit", str(wide), "--topology", RING5, "--routed", str(routed)])
    assert code == EXIT_VERIFY
    assert "[width]" in capsys.readouterr().err
