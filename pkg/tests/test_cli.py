"""Tests for CLI."""

import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from rankprecond import structured
from rankprecond.cli import cli, exit_code
from rankprecond.errors import (
    ConfigError,
    DenseCapExceeded,
    NotConverged,
    UnsupportedCombination,
)
from rankprecond.explicit import precond_KMS
from rankprecond.solvers import cluster_report
from rankprecond.util import vector_from_json

KMS = {"symbol": {"variant": "kms", "lam": 0.5}}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def campaign(tmp_path):
    def write(**fields):
        obj = {"schema": 1}
        obj.update(fields)
        path = tmp_path / "campaign.json"
        path.write_text(json.dumps(obj))
        return str(path)

    return write


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_build_identity(runner, campaign, tmp_path):
    out = str(tmp_path / "pr.json")
    result = runner.invoke(cli, ["build", "-c", campaign(sizes=[4]), "-o", out])
    assert result.exit_code == 0
    with open(out) as f:
        obj = json.load(f)
    assert obj["schema"] == 1
    assert obj["algebra"] == "circ:1,0"
    assert obj["preconditioners"][0]["achieved_rank"] == 0


def test_build_kms(runner, campaign, tmp_path):
    out = str(tmp_path / "pr.json")
    path = campaign(matrix=KMS, sizes=[8], method="explicit:kms")
    result = runner.invoke(cli, ["build", "-c", path, "-o", out])
    assert result.exit_code == 0
    with open(out) as f:
        obj = json.load(f)["preconditioners"][0]
    assert obj["achieved_rank"] == 2
    np.testing.assert_allclose(
        vector_from_json(obj["d"]), precond_KMS(8, 0.5).d, atol=1e-12
    )


def test_bench_identity(runner, campaign, tmp_path):
    out = str(tmp_path / "bench.csv")
    result = runner.invoke(cli, ["bench", "-c", campaign(sizes=[4]), "-o", out, "-q"])
    assert result.exit_code == 0
    rows = _rows(out)
    assert len(rows) == 1
    assert rows[0]["n"] == "4"
    assert rows[0]["iterations"] == "1"
    assert rows[0]["converged"] == "1"
    assert rows[0]["wall_time"] == ""


def test_bench_is_deterministic(runner, campaign, tmp_path):
    path = campaign(matrix=KMS, sizes=[32, 16], control=True)
    outputs = []
    for threads in ("1", "2"):
        out = str(tmp_path / f"bench{threads}.csv")
        result = runner.invoke(
            cli, ["bench", "-c", path, "-o", out, "-q", "-t", threads]
        )
        assert result.exit_code == 0
        with open(out) as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]
    rows = _rows(str(tmp_path / "bench1.csv"))
    assert [(r["n"], r["method"]) for r in rows] == [
        ("16", "blackdot"),
        ("16", "none"),
        ("32", "blackdot"),
        ("32", "none"),
    ]
    assert int(rows[0]["iterations"]) < int(rows[1]["iterations"])
    assert rows[1]["achieved_rank"] == ""


def test_bench_seed_changes_history(runner, campaign, tmp_path):
    path = campaign(matrix=KMS, sizes=[16], method="none")
    histories = []
    for seed in ("0", "1"):
        history = str(tmp_path / f"history{seed}.csv")
        result = runner.invoke(
            cli,
            [
                "bench",
                "-c",
                path,
                "-o",
                str(tmp_path / "b.csv"),
                "-q",
                "--seed",
                seed,
                "--history",
                history,
            ],
        )
        assert result.exit_code == 0
        histories.append(_rows(history))
    assert histories[0][0]["iteration"] == "0"
    assert float(histories[0][0]["residual"]) == pytest.approx(1.0)
    first, second = ([h["residual"] for h in rows] for rows in histories)
    assert first != second


def test_bench_stored_preconditioners(runner, campaign, tmp_path):
    path = campaign(matrix=KMS, sizes=[8, 16], method="explicit")
    stored = str(tmp_path / "pr.json")
    assert runner.invoke(cli, ["build", "-c", path, "-o", stored]).exit_code == 0
    fresh, loaded = str(tmp_path / "fresh.csv"), str(tmp_path / "loaded.csv")
    assert runner.invoke(cli, ["bench", "-c", path, "-o", fresh, "-q"]).exit_code == 0
    result = runner.invoke(cli, ["bench", "-c", path, "-o", loaded, "-q", "-p", stored])
    assert result.exit_code == 0
    assert _rows(fresh) == _rows(loaded)


def test_bench_timings(runner, campaign, tmp_path):
    out = str(tmp_path / "bench.csv")
    result = runner.invoke(
        cli, ["bench", "-c", campaign(sizes=[4]), "-o", out, "-q", "--timings"]
    )
    assert result.exit_code == 0
    assert float(_rows(out)[0]["wall_time"]) >= 0


def test_bench_not_converged(runner, campaign, tmp_path):
    out = str(tmp_path / "bench.csv")
    path = campaign(
        matrix={"symbol": {"variant": "kms", "lam": 0.95}},
        sizes=[64],
        method="none",
        maxit=2,
    )
    result = runner.invoke(cli, ["bench", "-c", path, "-o", out, "-q"])
    assert result.exit_code == 1
    assert _rows(out)[0]["converged"] == "0"


def test_spectrum_of_exact_splitting(runner, campaign, tmp_path):
    out = str(tmp_path / "spectrum.csv")
    path = campaign(matrix=KMS, sizes=[8], method="explicit:kms")
    result = runner.invoke(cli, ["spectrum", "-c", path, "-o", out])
    assert result.exit_code == 0
    rows = _rows(out)
    assert len(rows) == 8
    np.testing.assert_allclose([float(r["re"]) for r in rows], 1.0, atol=1e-10)
    np.testing.assert_allclose([float(r["im"]) for r in rows], 0.0, atol=1e-10)
    assert {r["outlier"] for r in rows} == {"0"}


def test_spectrum_marks_outliers(runner, campaign, tmp_path):
    out = str(tmp_path / "spectrum.csv")
    path = campaign(matrix=KMS, sizes=[8], method="none")
    args = ["spectrum", "-c", path, "-o", out, "--epsilon", "0.01"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0
    rows = _rows(out)
    z = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    flags = [int(r["outlier"]) for r in rows]
    assert flags == [int(x) for x in np.abs(z - 1) > 0.01]
    assert sum(flags) > 0
    assert sum(flags) == cluster_report(structured.kms(8, 0.5), None, 0.01)[0]


def test_exit_codes(runner, campaign, tmp_path):
    path = campaign(matrix=KMS, sizes=[8], method="explicit:zeta")
    result = runner.invoke(cli, ["build", "-c", path])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["build", "-c", str(tmp_path / "missing.json")])
    assert result.exit_code == 3
    path = campaign(sizes=[8])
    result = runner.invoke(cli, ["spectrum", "-c", path, "--dense-cap", "4"])
    assert result.exit_code == 3
    path = campaign(sizes=[8], method="none")
    result = runner.invoke(cli, ["build", "-c", path])
    assert result.exit_code == 2


def test_exit_code_mapping():
    assert exit_code(NotConverged("x")) == 1
    assert exit_code(ConfigError("x")) == 3
    assert exit_code(DenseCapExceeded("x")) == 3
    assert exit_code(UnsupportedCombination("x")) == 2
    assert exit_code(ValueError("x")) == 2


def test_info(runner):
    result = runner.invoke(cli, ["info", "circ:-1,0", "-n", "4"])
    assert result.exit_code == 0
    summary = json.loads(result.output)
    assert summary["family"] == "circ"
    assert len(summary["eigenvalues"]) == 4
    result = runner.invoke(cli, ["info", "trig:DCT9"])
    assert result.exit_code == 2
