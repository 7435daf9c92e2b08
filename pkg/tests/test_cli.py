import json
import threading
from fractions import Fraction
from pathlib import Path

import pytest
import uvicorn

from ealab.cli import main
from ealab.instance_files import save_instance
from ealab.problems import build_onemax, build_plateau, build_worst_midk


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_oracle_efht_hand_solved(capsys):
    code, out, err = run_cli(
        capsys, ["oracle-efht", "--kind", "deletion-onemax", "--n", "1", "--k", "1", "--d", "0"]
    )
    assert code == 0
    assert "mean_evaluations=3/2" in out
    assert err == ""


def test_oracle_efht_table_output(capsys):
    code, out, _ = run_cli(
        capsys,
        ["oracle-efht", "--kind", "accept-all", "--n", "6", "--d", "2", "--table"],
    )
    assert code == 0
    assert out.startswith("state,efht")
    assert len(out.strip().split("\n")) == 8


def test_run_with_instance_file(capsys, tmp_path):
    path = tmp_path / "plateau.json"
    save_instance(build_plateau(10, 4), path)
    code, out, _ = run_cli(
        capsys,
        ["run", "--instance", str(path), "--seed", "2", "--trials", "20",
         "--max-evals", "200000"],
    )
    assert code == 0
    assert out.startswith("family=plateau n=10 k=5 d=4")
    mean = Fraction(out.split("mean=")[1].split()[0])
    assert mean >= 63  # the k-ones plateau dominates the hitting time


def test_run_family_shorthand_csv(capsys):
    code, out, _ = run_cli(
        capsys,
        ["run", "--family", "onemax", "--n", "10", "--k", "5", "--d", "1",
         "--seed", "4", "--trials", "3", "--max-evals", "100000", "--csv"],
    )
    assert code == 0
    header, row = out.strip().split("\n")
    assert header.startswith("family,n,k,d,")
    assert row.startswith("onemax,10,5,1,")


def test_run_identical_invocations_identical_output(capsys):
    argv = ["run", "--family", "onemax", "--n", "12", "--k", "6", "--d", "2",
            "--seed", "11", "--trials", "6", "--max-evals", "100000", "--csv"]
    _, first, _ = run_cli(capsys, argv)
    _, second, _ = run_cli(capsys, argv)
    assert first == second


def test_sweep_to_file_and_worker_invariance(capsys, tmp_path):
    spec = {
        "family": "onemax",
        "cells": [{"n": 10, "k": 5, "d": 1}, {"n": 12, "k": 5, "d": 1}],
        "trials": 10,
        "master_seed": 3,
        "max_evaluations": 100000,
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    code_a, _, err_a = run_cli(
        capsys, ["sweep", "--spec", str(spec_path), "--out", str(out_a), "--workers", "1"]
    )
    code_b, _, _ = run_cli(
        capsys, ["sweep", "--spec", str(spec_path), "--out", str(out_b), "--workers", "4"]
    )
    assert code_a == code_b == 0
    assert "wrote 2 rows" in err_a
    assert out_a.read_bytes() == out_b.read_bytes()


def test_sweep_skip_diagnostics_go_to_stderr(capsys, tmp_path):
    spec = {
        "family": "onemax",
        "cells": [{"n": 10, "k": 5, "d": 5}],
        "trials": 2,
        "master_seed": 1,
        "max_evaluations": 1000,
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    code, out, err = run_cli(capsys, ["sweep", "--spec", str(spec_path), "--out", "-"])
    assert code == 0
    assert "skipped" in err
    assert out.count("\n") == 1  # header only


def test_oracle_brute_subcommand(capsys, tmp_path):
    path = tmp_path / "midk.json"
    save_instance(build_worst_midk(12, 3, 2), path)
    code, out, _ = run_cli(capsys, ["oracle-brute", "--instance", str(path), "--optimum"])
    assert code == 0
    assert out.strip() == "optimum=19/2 stored=19/2 match=1"

    onemax_path = tmp_path / "onemax.json"
    save_instance(build_onemax(10, 6, 2), onemax_path)
    code, out, _ = run_cli(capsys, ["oracle-brute", "--instance", str(onemax_path), "--check-F"])
    assert code == 0
    assert out.strip() == f"checked={1 << 10} agree=1"


def test_drift_subcommand_csv(capsys):
    code, out, err = run_cli(
        capsys,
        ["drift", "--family", "walk-linear", "--params", "n=16,d=2", "--states", "ones:0..2",
         "--samples", "2000", "--kind", "additive", "--c", "1/256", "--seed", "3"],
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("state,ones,distance,")
    assert len(lines) == 4
    assert "all_pass=1" in err


def test_usage_errors_exit_one(capsys):
    assert main(["nope-command"]) == 1
    capsys.readouterr()
    assert main(["run"]) == 1  # missing required source
    capsys.readouterr()
    code, _, err = run_cli(capsys, ["run", "--family", "onemax", "--n", "8"])
    assert code == 1
    assert "missing field" in err


def test_malformed_instance_file_exits_one(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    code, _, err = run_cli(capsys, ["run", "--instance", str(bad)])
    assert code == 1
    assert "not valid JSON" in err


def test_verify_subcommand_quick_subset(capsys):
    code, out, _ = run_cli(capsys, ["verify", "--quick", "--criteria", "9"])
    assert code == 0
    assert out.startswith("PASS criterion 9")


def test_drift_param_parsing_errors(capsys):
    code, _, err = run_cli(
        capsys,
        ["drift", "--family", "walk-linear", "--params", "n=16,d", "--states", "ones:0..2",
         "--samples", "10"],
    )
    assert code == 1
    assert "malformed parameter" in err


@pytest.fixture(scope="module")
def live_server():
    config = uvicorn.Config(
        "ealab.service.app:app", host="127.0.0.1", port=8765, log_level="error"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    import time

    deadline = time.time() + 10
    import httpx

    while time.time() < deadline:
        try:
            if httpx.get("http://127.0.0.1:8765/health").status_code == 200:
                break
        except httpx.TransportError:
            time.sleep(0.05)
    else:
        raise RuntimeError("test server did not come up")
    yield "http://127.0.0.1:8765"
    server.should_exit = True
    thread.join(timeout=5)


def test_cli_against_live_server(capsys, live_server):
    code, out, _ = run_cli(
        capsys,
        ["--server", live_server, "oracle-efht", "--kind", "deletion-onemax",
         "--n", "1", "--k", "1", "--d", "0"],
    )
    assert code == 0
    assert "mean_evaluations=3/2" in out

    code, out, _ = run_cli(
        capsys,
        ["--server", live_server, "run", "--family", "onemax", "--n", "10", "--k", "5",
         "--d", "1", "--seed", "4", "--trials", "3", "--max-evals", "100000", "--csv"],
    )
    assert code == 0
    assert out.startswith("family,n,k,d,")

    code, _, err = run_cli(
        capsys,
        ["--server", live_server, "run", "--family", "onemax", "--n", "8", "--k", "9",
         "--d", "1"],
    )
    assert code == 1
    assert "422" in err
