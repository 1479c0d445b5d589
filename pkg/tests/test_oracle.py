from __future__ import annotations

import os
import stat
import sys
import textwrap

import pytest

from datacause.errors import (
    OracleFailureError,
    OracleProtocolError,
    OracleTimeoutError,
)
from datacause.oracle import CallableOracle, ExternalOracleSpec, SubprocessOracle
from datacause.synth import build_builtin_oracle
from datacause.tabular import ColumnType, from_columns


def dataset_with_target(values):
    return from_columns([("target", ColumnType.CATEGORICAL, values)])


def write_script(tmp_path, body, name="oracle.py"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body))
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return path


def spec_for(tmp_path, body, timeout=20.0, name="oracle.py"):
    script = write_script(tmp_path, body, name=name)
    return ExternalOracleSpec((sys.executable, str(script), "{dataset}"), timeout=timeout)


# --- built-in scorers --------------------------------------------------------


def test_domain_remap_builtin_scores():
    oracle = build_builtin_oracle("domain-remap", {"domain": "target"})
    good = dataset_with_target(["-1", "1", "-1", "1"])
    bad = dataset_with_target(["0", "4", "0", "4"])
    assert oracle.evaluate(good) == 0.0
    assert oracle.evaluate(bad) == 1.0


def test_callable_oracle_cache_single_invocation():
    calls = []

    def scorer(dataset):
        calls.append(dataset.fingerprint)
        return 0.5

    oracle = CallableOracle(scorer)
    d = dataset_with_target(["1", "-1"])
    assert oracle.evaluate(d) == 0.5
    assert oracle.evaluate(d) == 0.5
    assert oracle.invocation_count == 1
    assert len(calls) == 1


def test_intervention_count_excludes_baselines():
    oracle = CallableOracle(lambda d: 0.25)
    d_pass = dataset_with_target(["1"])
    d_fail = dataset_with_target(["0"])
    assert oracle.intervention_count() == 0
    oracle.evaluate(d_pass, baseline=True)
    oracle.evaluate(d_fail, baseline=True)
    assert oracle.intervention_count() == 0
    novel = dataset_with_target(["4"])
    oracle.evaluate(novel)
    assert oracle.intervention_count() == 1
    oracle.evaluate(novel)
    oracle.evaluate(novel)
    assert oracle.intervention_count() == 1
    assert oracle.invocation_count == 3


def test_out_of_range_score_rejected():
    oracle = CallableOracle(lambda d: 1.5)
    with pytest.raises(OracleProtocolError):
        oracle.evaluate(dataset_with_target(["1"]))


# --- subprocess protocol --------------------------------------------------------


def test_subprocess_round_trip(tmp_path):
    spec = spec_for(tmp_path, """\
        import csv, sys
        with open(sys.argv[1], newline="") as fh:
            rows = list(csv.DictReader(fh))
        bad = sum(1 for row in rows if row["target"] not in ("-1", "1"))
        print("debug chatter")
        print(bad / len(rows))
        """)
    oracle = SubprocessOracle(spec, seed=7)
    assert oracle.evaluate(dataset_with_target(["0", "4", "1", "-1"])) == 0.5
    assert oracle.evaluate(dataset_with_target(["-1", "1"])) == 0.0


def test_subprocess_cache_counts_invocations(tmp_path):
    marker = tmp_path / "calls.txt"
    spec = spec_for(tmp_path, f"""\
        import sys
        with open({str(marker)!r}, "a") as fh:
            fh.write("x")
        print(0.0)
        """)
    oracle = SubprocessOracle(spec)
    d = dataset_with_target(["1"])
    oracle.evaluate(d)
    oracle.evaluate(d)
    oracle.evaluate(d)
    assert marker.read_text() == "x"
    assert oracle.invocation_count == 1


def test_subprocess_seed_env(tmp_path):
    spec = spec_for(tmp_path, """\
        import os
        print(0.25 if os.environ.get("DATAEXPOSER_SEED") == "123" else 0.75)
        """)
    oracle = SubprocessOracle(spec, seed=123)
    assert oracle.evaluate(dataset_with_target(["1"])) == 0.25


def test_subprocess_timeout(tmp_path):
    spec = spec_for(tmp_path, """\
        import time
        time.sleep(5)
        print(0.0)
        """, timeout=0.4)
    oracle = SubprocessOracle(spec)
    with pytest.raises(OracleTimeoutError):
        oracle.evaluate(dataset_with_target(["1"]))


def test_subprocess_nonzero_exit(tmp_path):
    spec = spec_for(tmp_path, """\
        import sys
        sys.exit(3)
        """)
    oracle = SubprocessOracle(spec)
    with pytest.raises(OracleFailureError):
        oracle.evaluate(dataset_with_target(["1"]))


def test_subprocess_unparsable_output(tmp_path):
    spec = spec_for(tmp_path, """\
        print("not a score")
        """)
    oracle = SubprocessOracle(spec)
    with pytest.raises(OracleProtocolError):
        oracle.evaluate(dataset_with_target(["1"]))


def test_subprocess_out_of_range(tmp_path):
    spec = spec_for(tmp_path, """\
        print(7.5)
        """)
    oracle = SubprocessOracle(spec)
    with pytest.raises(OracleProtocolError):
        oracle.evaluate(dataset_with_target(["1"]))


def test_command_template_placeholder_validation():
    with pytest.raises(OracleProtocolError):
        ExternalOracleSpec(("python3", "oracle.py"))
    with pytest.raises(OracleProtocolError):
        ExternalOracleSpec(("python3", "{dataset}", "{dataset}"))


def test_subprocess_workdir(tmp_path):
    workdir = tmp_path / "wd"
    workdir.mkdir()
    (workdir / "threshold.txt").write_text("0.25")
    script = write_script(tmp_path, """\
        print(open("threshold.txt").read().strip())
        """)
    spec = ExternalOracleSpec((sys.executable, str(script), "{dataset}"),
                              timeout=20.0, workdir=str(workdir))
    oracle = SubprocessOracle(spec)
    assert oracle.evaluate(dataset_with_target(["1"])) == 0.25
