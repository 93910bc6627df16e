import json
import subprocess
import sys

import numpy as np
import pytest

from thermocircuit.circuit import SourceValues, build_dae
from thermocircuit.cli import EXIT_MODEL, EXIT_NUMERIC, EXIT_OK, EXIT_PARSE, EXIT_USAGE, main
from thermocircuit.datasets import data_path
from thermocircuit.building import build_model, parse_building
from thermocircuit.simulate import steady_state
from thermocircuit.tsio import ingest_timeseries

RC = """\
[elements.rc]
kind = "circuit"
nodes = [{ name = "n", capacity = 1000.0, output = true }]
branches = [{ name = "q", to = "n", conductance = 2.0, temp_source = true }]

[bindings]
T = ["rc.q"]

[outputs]
theta = "rc.n"
"""


def write_inputs(path, channels, n, dt=600.0):
    names = list(channels)
    lines = ["time," + ",".join(names)]
    for k in range(n):
        lines.append(",".join([repr(k * dt)] + [repr(float(channels[c])) for c in names]))
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def rc_case(tmp_path):
    cfg = tmp_path / "rc.tc"
    cfg.write_text(RC)
    inputs = write_inputs(tmp_path / "in.csv", {"T": 1.0}, 20)
    return cfg, inputs, tmp_path / "out.csv"


def test_figure1_unit_sources_reach_steady_state(tmp_path):
    inputs = write_inputs(tmp_path / "in.csv", {"T_out": 1.0, "Q_1": 1.0, "Q_3": 1.0}, 400)
    out = tmp_path / "out.csv"
    rc = main(["--config", str(data_path("figure1.tc")), "--inputs", str(inputs), "--output", str(out)])
    assert rc == EXIT_OK
    traj = ingest_timeseries(out)
    model = build_model(parse_building(data_path("figure1.tc")))
    theta = steady_state(build_dae(model.circuit), SourceValues([1.0, 1.0], [1.0, 1.0]))
    got = np.array([traj[c][-1] for c in ("theta1", "theta2", "theta3")])
    assert np.allclose(got, theta, rtol=1e-9)
    # the run starts from steady state under the first sample
    assert np.allclose([traj[c][0] for c in ("theta1", "theta2", "theta3")], theta, rtol=1e-12)


def test_report_eigen_single_rc(rc_case):
    cfg, inputs, out = rc_case
    assert main(["--config", str(cfg), "--inputs", str(inputs), "--output", str(out), "--report-eigen"]) == EXIT_OK
    text = (out.parent / "out.csv.eigen.txt").read_text()
    assert "dominant time constant: 500 s" in text
    assert "-2.00000000e-03" in text


def test_reports_without_inputs(rc_case):
    cfg, _, out = rc_case
    assert main(["--config", str(cfg), "--output", str(out), "--dump-statespace"]) == EXIT_OK
    doc = json.loads((out.parent / "out.csv.statespace.json").read_text())
    assert doc["A"] == [[-0.002]] and doc["B"] == [[0.002]]
    assert doc["channels"] == ["T"]
    assert not out.exists()


def test_self_compare_is_zero(rc_case):
    cfg, inputs, out = rc_case
    assert main(["--config", str(cfg), "--inputs", str(inputs), "--output", str(out)]) == EXIT_OK
    measured = out.parent / "measured.csv"
    measured.write_bytes(out.read_bytes())
    out2 = out.parent / "out2.csv"
    assert main(["--config", str(cfg), "--inputs", str(inputs), "--output", str(out2), "--compare", str(measured)]) == 0
    stats = json.loads((out.parent / "out2.csv.compare.json").read_text())["theta"]
    assert stats["mean"] == 0.0 and stats["std"] == 0.0 and stats["n"] == 20


def test_rerun_is_byte_identical(tmp_path):
    inputs = write_inputs(tmp_path / "in.csv", {"T_out": -3.0, "Q_1": 250.0, "Q_3": 0.0}, 50)
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}.csv"
        assert main(["--config", str(data_path("figure1.tc")), "--inputs", str(inputs), "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_stdout_when_no_output(rc_case, capsys):
    cfg, inputs, _ = rc_case
    assert main(["--config", str(cfg), "--inputs", str(inputs)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("time,theta\n0.0,1.0\n")


def test_exit_codes(tmp_path, rc_case, capsys):
    cfg, inputs, out = rc_case
    assert main(["--inputs", str(inputs)]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["--bogus"])
    assert exc.value.code == EXIT_USAGE
    assert main(["--config", str(cfg), "--inputs", str(inputs), "--dt", "-1"]) == EXIT_USAGE
    assert main(["--config", str(cfg), "--inputs", str(inputs), "--dt", "700"]) == EXIT_USAGE

    empty = tmp_path / "empty.tc"
    empty.write_text("")
    assert main(["--config", str(empty), "--inputs", str(inputs)]) == EXIT_PARSE
    assert "no circuits declared" in capsys.readouterr().err

    bad_inputs = write_inputs(tmp_path / "bad.csv", {"X": 1.0}, 3)
    assert main(["--config", str(cfg), "--inputs", str(bad_inputs)]) == EXIT_PARSE

    floating = tmp_path / "floating.tc"
    floating.write_text(RC.replace('to = "n", ', ""))
    assert main(["--config", str(floating), "--inputs", str(inputs)]) == EXIT_MODEL

    fast = tmp_path / "fast.tc"
    fast.write_text(RC.replace("capacity = 1000.0", "capacity = 100.0"))
    args = ["--config", str(fast), "--inputs", str(inputs), "--method", "explicit-euler"]
    assert main(args) == EXIT_NUMERIC
    assert "[simulator]" in capsys.readouterr().err


def test_unbound_flag(tmp_path):
    cfg = tmp_path / "u.tc"
    cfg.write_text(RC.replace('T = ["rc.q"]', ""))
    inputs = write_inputs(tmp_path / "in.csv", {"other": 0.0}, 3)
    assert main(["--config", str(cfg), "--inputs", str(inputs)]) == EXIT_PARSE
    assert main(["--config", str(cfg), "--inputs", str(inputs), "--allow-unbound"]) == EXIT_OK


def test_batch(tmp_path, capsys):
    root = tmp_path / "runs"
    for name, T in (("a", 1.0), ("b", 2.0)):
        d = root / name
        d.mkdir(parents=True)
        (d / "rc.tc").write_text(RC)
        write_inputs(d / "inputs.csv", {"T": T}, 5)
    bad = root / "c"
    bad.mkdir()
    (bad / "x.tc").write_text("")
    write_inputs(bad / "inputs.csv", {"T": 1.0}, 5)
    (root / "b" / "measured.csv").write_text("time,theta\n0,2\n600,2\n")

    rc = main(["--batch", str(root), "--jobs", "2"])
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["a: ok", "b: ok", f"c: failed (exit {EXIT_PARSE})"]
    assert rc == EXIT_PARSE
    assert ingest_timeseries(root / "b" / "output.csv")["theta"][-1] == 2.0
    assert json.loads((root / "b" / "output.csv.compare.json").read_text())["theta"]["mean"] == 0.0
    assert not (root / "a" / "output.csv.compare.json").exists()


def test_batch_argument_errors(tmp_path):
    assert main(["--batch", str(tmp_path / "missing")]) == EXIT_USAGE
    assert main(["--batch", str(tmp_path)]) == EXIT_USAGE
    assert main(["--batch", str(tmp_path), "--config", "x.tc"]) == EXIT_USAGE


def test_console_entry_point(rc_case):
    cfg, inputs, out = rc_case
    proc = subprocess.run(
        [sys.executable, "-m", "thermocircuit.cli", "--config", str(cfg), "--inputs", str(inputs)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "time,theta"
