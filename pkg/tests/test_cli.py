import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from swnc.channel import ChannelError, ChannelProfile
from swnc.cli import main
from swnc.io import ConfigError, atomic_write, load_config, read_trace, write_trace

GE_INI = """\
[run]
schemes = arq, rrlnc, fswrlnc, aswrlnc
experiences = {exp}
seed = 3

[channel]
s = 0.17
q = 0.019
rtt_slots = 16
"""


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_trace_round_trip(tmp_path):
    p = ChannelProfile([7200, 7650, 450], [0, 1, 0], slot_us=450, label="MCS 5")
    f = tmp_path / "t.csv"
    write_trace(p, f)
    assert f.read_text().splitlines()[:3] == ["# slot_us=450 label=MCS 5", "slot,rtt_us,lost",
                                              "0,7200,0"]
    assert read_trace(f) == p


@pytest.mark.parametrize("body,msg", [
    ("slot,rtt,lost\n0,1,0\n", "expected header"),
    ("slot,rtt_us,lost\n0,1,2\n", "lost must be 0 or 1"),
    ("slot,rtt_us,lost\n1,1,0\n", "out of sequence"),
    ("slot,rtt_us,lost\n0,x,0\n", "non-integer"),
    ("slot,rtt_us,lost\n", "no slots"),
    ("slot,rtt_us,lost\n0,0,0\n", "positive RTT"),
])
def test_bad_traces(tmp_path, body, msg):
    with pytest.raises(ChannelError, match=msg):
        read_trace(write(tmp_path / "bad.csv", body))


def test_atomic_write_leaves_no_temp(tmp_path):
    atomic_write(tmp_path / "a" / "x.txt", "hi")
    assert [p.name for p in (tmp_path / "a").iterdir()] == ["x.txt"]


def test_load_config(tmp_path):
    ini = write(tmp_path / "r.ini", GE_INI.format(exp=2) + "[aswrlnc]\nalpha = 3\nth = 0.1\n")
    plan = load_config(ini)
    assert [c.scheme for c in plan.configs] == ["arq", "rrlnc", "fswrlnc", "aswrlnc"]
    assert all(c.asw_alpha == 3.0 and c.experiences == 2 for c in plan.configs)
    assert plan.configs[0].ge.q == 0.019


@pytest.mark.parametrize("text,msg", [
    ("[run]\nschemes=arq\n", "missing \\[channel\\]"),
    ("[run]\nschemes=\n[channel]\ns=0.1\nq=0.1\n", "at least one scheme"),
    ("[run]\nschemes=tcp\n[channel]\ns=0.1\nq=0.1\n", "unknown schemes"),
    ("[run]\nschemes=arq\nbogus=1\n[channel]\ns=0.1\nq=0.1\n", "unknown key"),
    ("[run]\nschemes=arq\n[channel]\ns=0.1\n", "needs trace"),
    ("[run]\nschemes=arq\n[channel]\ns=abc\nq=0.1\n", "not a valid float"),
    ("[run]\nschemes=arq\n[channel]\ns=2\nq=0.1\n", "outside"),
    ("[run]\nschemes=arq\nn_packets=0\n[channel]\ns=0.1\nq=0.1\n", "n_packets"),
    ("[run]\nschemes=arq\n[channel]\ns=0.1\nq=0.1\n[udp]\nx=1\n", "unknown sections"),
    ("not an ini", "section"),
])
def test_config_errors(tmp_path, text, msg):
    with pytest.raises(ConfigError, match=msg):
        load_config(write(tmp_path / "c.ini", text))


def test_simulate_writes_reports(tmp_path, capsys):
    ini = write(tmp_path / "r.ini", GE_INI.format(exp=3))
    out = tmp_path / "out"
    assert main(["simulate", str(ini), "-o", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "summary.csv")))
    assert len(rows) == 12
    assert list(rows[0]) == ["mode", "algorithm", "metric", "mean", "stdev", "p99"]
    assert {r["algorithm"] for r in rows} == {"arq", "rrlnc", "fswrlnc", "aswrlnc"}
    assert all(float(r[k]) >= 0 for r in rows for k in ("mean", "stdev", "p99"))
    exps = json.loads((out / "experiences.json").read_text())
    assert len(exps) == 12 and "max_inorder_delay_ms" in exps[0]
    man = json.loads((out / "manifest.json").read_text())
    assert man["seeds"] == [3, 4, 5]
    assert str(ini) in man["inputs"] and len(man["inputs"][str(ini)]) == 64
    assert man["outputs"] == [str(out / "summary.csv"), str(out / "experiences.json")]
    assert main(["report", str(out / "experiences.json"), "--cdf", str(tmp_path / "cdf.csv")]) == 0
    text = capsys.readouterr().out
    assert "aswrlnc" in text and "tags" in text
    assert (tmp_path / "cdf.csv").read_text().startswith("mode,algorithm,metric,x,value")


def test_simulate_is_byte_identical_and_worker_independent(tmp_path):
    ini = write(tmp_path / "r.ini", GE_INI.format(exp=2))
    outs = []
    for i, workers in enumerate(("1", "1", "4")):
        out = tmp_path / f"o{i}"
        assert main(["simulate", str(ini), "-o", str(out), "-j", workers]) == 0
        outs.append(out)
    for name in ("summary.csv", "experiences.json"):
        blobs = {(o / name).read_bytes() for o in outs}
        assert len(blobs) == 1


def test_simulate_missing_trace_fails_cleanly(tmp_path, capsys):
    ini = write(tmp_path / "r.ini", "[run]\nschemes=arq\n[channel]\ntrace=nope.csv\n")
    out = tmp_path / "out"
    assert main(["simulate", str(ini), "-o", str(out)]) != 0
    assert "trace file not found" in capsys.readouterr().err
    assert not out.exists()


def test_simulate_on_trace_with_exhaustion_warns(tmp_path, caplog):
    lost = np.zeros(300, bool)
    write_trace(ChannelProfile(np.full(300, 7200), lost, label="short"), tmp_path / "t.csv")
    ini = write(tmp_path / "r.ini",
                "[run]\nschemes=aswrlnc\nexperiences=5\n[channel]\ntrace=t.csv\n")
    assert main(["simulate", str(ini), "-o", str(tmp_path / "out")]) == 0
    assert "report is partial" in caplog.text
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert any(k.endswith("t.csv") for k in man["inputs"])


def test_simulate_all_runs_failing_writes_nothing(tmp_path):
    write_trace(ChannelProfile(np.full(20, 7200), np.zeros(20, bool)), tmp_path / "t.csv")
    ini = write(tmp_path / "r.ini", "[run]\nschemes=arq\n[channel]\ntrace=t.csv\n")
    assert main(["simulate", str(ini), "-o", str(tmp_path / "out")]) != 0
    assert not (tmp_path / "out").exists()


def test_gen_trace_then_fit(tmp_path, capsys):
    f = tmp_path / "ge.csv"
    assert main(["gen-trace", "--s", "0.17", "--q", "0.019", "--slots", "100000", "--seed", "1",
                 "-o", str(f)]) == 0
    first = f.read_bytes()
    assert main(["gen-trace", "--s", "0.17", "--q", "0.019", "--slots", "100000", "--seed", "1",
                 "-o", str(f)]) == 0
    assert f.read_bytes() == first
    assert (tmp_path / "ge.csv.manifest.json").exists()
    capsys.readouterr()
    assert main(["fit", str(f)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["s"] == pytest.approx(0.17, abs=0.02)
    assert rep["eps_mean"] == pytest.approx(0.1, abs=0.01)
    assert set(rep) >= {"s", "q", "eps_mean", "pi_G", "mean_burst"}


def test_gen_trace_eps_b_zero_is_clear(tmp_path):
    f = tmp_path / "c.csv"
    assert main(["gen-trace", "--s", "0.17", "--q", "0.019", "--eps-b", "0", "--slots", "500",
                 "-o", str(f)]) == 0
    assert not read_trace(f).lost.any()


@pytest.mark.parametrize("argv", [
    ["gen-trace", "--s", "1.5", "--q", "0.1", "-o", "x.csv"],
    ["gen-trace", "--s", "0", "--q", "0", "-o", "x.csv"],
    ["gen-trace", "--s", "0.1", "--q", "0.1", "--slots", "0", "-o", "x.csv"],
    ["bounds", "--s", "0"],
    ["bounds", "--s", "1.2"],
])
def test_invalid_params_exit_nonzero(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    assert main(argv) != 0
    assert list(tmp_path.iterdir()) == []


def test_fit_degenerate_trace(tmp_path, capsys):
    f = tmp_path / "c.csv"
    write_trace(ChannelProfile(np.full(10, 7200), np.zeros(10, bool)), f)
    assert main(["fit", str(f)]) != 0
    assert "no lost slots" in capsys.readouterr().err


def test_bounds_csv(tmp_path):
    f = tmp_path / "b.csv"
    assert main(["bounds", "-o", str(f)]) == 0
    rows = list(csv.DictReader(open(f)))
    assert list(rows[0]) == ["alpha", "x", "value"]
    curves = {}
    for r in rows:
        curves.setdefault(r["alpha"], []).append(float(r["value"]))
    assert sorted(curves) == ["0", "1", "2", "3"]
    assert all((np.diff(v) >= 0).all() for v in curves.values())
    assert all(a <= b for a, b in zip(curves["0"], curves["1"]))
    anchor = [float(r["value"]) for r in rows if r["alpha"] == "3" and r["x"] == "0.300000"]
    assert len(anchor) == 1 and 60 <= anchor[0] <= 90


def test_report_errors(tmp_path):
    assert main(["report", str(tmp_path / "missing.json")]) != 0
    assert main(["report", str(write(tmp_path / "bad.json", "{"))]) != 0
    assert main(["report", str(write(tmp_path / "empty.json", "[]"))]) != 0


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "swnc.cli", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and r.stdout.startswith("swnc ")
