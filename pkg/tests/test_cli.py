import csv
import io
import statistics
import subprocess
import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest

from qgsf import cli
from qgsf.experiment import PlanError, default_plan, load_plan, plan_from_dict
from qgsf.verify import Check, Report

QUEUE_SMALL = textwrap.dedent(
    """
    [optimizer]
    algorithm = "nqsf2"
    beta = 0.1
    outer_iterations = {M}
    inner_iterations = 20

    [system]
    kind = "queue"

    [sweep]
    algorithm = ["nqsf2", "gqsf2"]
    q = [0.6, 1.0]
    replications = {reps}
    """
)


def write(tmp_path, text, name="plan.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_default_plan_matches_published_settings():
    plan = default_plan()
    b = plan.base
    assert (b.outer_iterations, b.inner_iterations, b.spec.beta, b.c_exponent) == (5000, 100, 0.1, 0.65)
    assert plan.replications == 20 and plan.base.pd_policy.epsilon == 0.1
    assert plan.problem.lambda1 == 0.2 and plan.problem.lambda2 == 0.1 and plan.problem.feedback_p == 0.4
    np.testing.assert_array_equal(plan.initial_theta, np.full(20, 0.6))
    np.testing.assert_array_equal(plan.target, np.full(20, 0.3))


def test_run_sweep_csv_is_byte_identical(tmp_path):
    cfg = write(tmp_path, QUEUE_SMALL.format(M=30, reps=2))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["run-sweep", "--config", cfg, "--output", str(a)]) == 0
    assert cli.main(["run-sweep", "--config", cfg, "--output", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.timing.csv").exists()
    header = a.read_text().splitlines()[0]
    assert header == "kind,algorithm,q,beta,gamma,seed,runs,final_distance,sd"


def test_aggregates_recompute_exactly(tmp_path):
    cfg = write(tmp_path, QUEUE_SMALL.format(M=20, reps=3))
    out = tmp_path / "r.csv"
    assert cli.main(["run-sweep", "--config", cfg, "-o", str(out)]) == 0
    rows = read_rows(out)
    reps = [r for r in rows if r["kind"] == "replication"]
    aggs = [r for r in rows if r["kind"] == "aggregate"]
    assert len(reps) == 12 and len(aggs) == 4
    for agg in aggs:
        key = (agg["algorithm"], agg["q"], agg["beta"], agg["gamma"])
        vals = [float(r["final_distance"]) for r in reps if (r["algorithm"], r["q"], r["beta"], r["gamma"]) == key]
        assert sorted(int(r["seed"]) for r in reps if (r["algorithm"], r["q"], r["beta"], r["gamma"]) == key) == [0, 1, 2]
        assert float(agg["final_distance"]) == statistics.fmean(vals)
        assert float(agg["sd"]) == statistics.stdev(vals)
        assert int(agg["runs"]) == 3


def test_zero_updates_keep_initial_distance(tmp_path):
    cfg = write(tmp_path, QUEUE_SMALL.format(M=0, reps=1))
    out = tmp_path / "r.csv"
    assert cli.main(["run-sweep", "--config", cfg, "-o", str(out)]) == 0
    for r in read_rows(out):
        assert float(r["final_distance"]) == pytest.approx(1.3416, abs=1e-4)


def test_seed_override(tmp_path, capsys):
    cfg = write(tmp_path, QUEUE_SMALL.format(M=10, reps=1))
    assert cli.main(["run-sweep", "--config", cfg, "--seed-base", "7"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert {r["seed"] for r in rows if r["kind"] == "replication"} == {"7"}


def test_export_trajectory_rows_and_first_distance(tmp_path):
    cfg = write(tmp_path, QUEUE_SMALL.format(M=5000, reps=1).replace("inner_iterations = 20", "inner_iterations = 1"))
    out = tmp_path / "t.csv"
    assert cli.main(["export-trajectory", "--config", cfg, "--output", str(out), "--seed", "3"]) == 0
    rows = read_rows(out)
    assert list(rows[0]) == ["n", "distance", "z_norm", "w_norm"]
    assert len(rows) == 5001
    assert [int(r["n"]) for r in rows] == list(range(5001))
    assert float(rows[0]["distance"]) == pytest.approx(np.sqrt(20 * 0.09), rel=1e-12)


def test_export_trajectory_quadratic(tmp_path, capsys):
    from importlib import resources

    cfg = resources.files("qgsf.profiles").joinpath("quadratic.toml")
    assert cli.main(["export-trajectory", "--config", str(cfg)]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    dist = np.array([float(r["distance"]) for r in rows])
    assert len(rows) == 501
    assert dist[0] == pytest.approx(np.sqrt(0.72))
    assert dist[-1] < 0.05
    # trending down: each tenth of the run ends below where the previous began
    tenths = dist[:: len(dist) // 10]
    assert np.all(np.diff(tenths) < 0)


class TestVerify:
    def test_moments_single_case(self, capsys):
        assert cli.main(["verify", "moments", "--dim", "5", "--q", "1.2"]) == 0
        out = capsys.readouterr().out
        assert "E[1/rho]" in out and "target=0.5" in out

    def test_projections(self):
        assert cli.main(["verify", "projections"]) == 0

    def test_failure_exit_status(self, monkeypatch, capsys):
        failing = lambda **kw: Report("moments", [Check("forced", 1.0, 2.0, tol=0.1)])
        monkeypatch.setitem(cli.SUITES, "moments", failing)
        assert cli.main(["verify", "moments"]) == 1
        assert "[FAIL] forced" in capsys.readouterr().out

    def test_dim_without_q(self):
        assert cli.main(["verify", "moments", "--dim", "5"]) == 2

    def test_unknown_suite(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["verify", "nonsense"])
        assert exc.value.code == 2


class TestInvalidConfig:
    @pytest.mark.parametrize(
        "text",
        [
            '[optimizer]\nalgorithm = "nqsf2"\nq = 0.0\n',
            '[optimizer]\nbeta = 0.1\n[sweep]\nalgorithm = ["gqsf2", "nqsf2"]\nq = [-1.0]\n',
            "[sweep]\nq = [1.2]\n",  # q >= 1 + 2/N for N = 20
            "[sweep]\nreplications = 0\n",
            "[optimizer]\nouter_iterations = 10\nbogus = 1\n",
            "[queue]\ninitial_theta = 0.9\n",
            '[system]\nkind = "torus"\n',
            "[optimizer\n",
        ],
    )
    def test_exit_code(self, tmp_path, text):
        assert cli.main(["run-sweep", "--config", write(tmp_path, text)]) == 2

    def test_missing_file(self, tmp_path):
        assert cli.main(["run-sweep", "--config", str(tmp_path / "nope.toml")]) == 2

    def test_rejected_before_any_run(self, monkeypatch):
        import qgsf.experiment as ex

        monkeypatch.setattr(ex, "run", lambda *a, **k: pytest.fail("a run started"))
        with pytest.raises(PlanError):
            plan_from_dict({"sweep": {"algorithm": ["gqsf2", "nqsf2"], "q": [0.5, -0.5]}})

    def test_bad_replications_override(self, tmp_path):
        cfg = write(tmp_path, QUEUE_SMALL.format(M=5, reps=1))
        assert cli.main(["run-sweep", "--config", cfg, "--replications", "0"]) == 2


def test_gqsf2_accepts_nonpositive_q(tmp_path):
    plan = load_plan(write(tmp_path, '[optimizer]\nalgorithm = "gqsf2"\n[sweep]\nq = [-1.0, 0.0, 0.5]\n'))
    assert len(plan.configs()) == 3 * 20


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qgsf", "verify", "moments", "--dim", "1", "--q", "0.5"],
        capture_output=True, text=True, timeout=300,
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "moments:" in proc.stdout
