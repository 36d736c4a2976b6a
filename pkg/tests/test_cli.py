import os
import pathlib
import signal
import subprocess
import sys
import time

import pytest

from motorfault import cli
from motorfault.dataset import read_csv

GOLDEN = pathlib.Path(__file__).parent / "golden" / "table1.csv"
SUBCOMMANDS = ["table1", "gen", "train", "eval", "classify", "serve", "replay"]


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """gen -> train on paper-scale seed 1, shared by the tests below."""
    d = tmp_path_factory.mktemp("cli")
    assert run("gen", "--paper-scale", "--seed", 1, "--train", d / "train.csv", "--test", d / "test.csv") == 0
    assert run("train", "--train", d / "train.csv", "--model", d / "model.txt", "--seed", 1) == 0
    return d


def test_table1_golden(capsys):
    assert run("table1") == 0
    out = capsys.readouterr().out
    assert out == GOLDEN.read_text()
    assert len(out.splitlines()) == 15


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help_exits_zero_without_side_effects(sub, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "motorfault.cli", sub, "--help"],
                          cwd=tmp_path, capture_output=True, text=True)
    assert proc.returncode == 0 and "usage:" in proc.stdout
    assert "exit status" in proc.stdout
    assert list(tmp_path.iterdir()) == []


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exc:
        run("table1", "--bogus")
    assert exc.value.code == cli.EXIT_USAGE


def test_gen_counts_and_split(tmp_path):
    assert run("gen", "--counts", "5,5,5,5,5,5,10", "--seed", 3, "--train", tmp_path / "a.csv",
               "--test", tmp_path / "b.csv", "--test-fraction", 0.2) == 0
    assert read_csv(tmp_path / "a.csv").class_counts() == [4, 4, 4, 4, 4, 4, 8]
    assert read_csv(tmp_path / "b.csv").class_counts() == [1, 1, 1, 1, 1, 1, 2]


def test_pipeline_accuracy(workdir, capsys):
    assert run("eval", "--test", workdir / "test.csv", "--model", workdir / "model.txt",
               "--train", workdir / "train.csv", "--out", workdir / "eval") == 0
    out = capsys.readouterr().out
    acc = float(next(l for l in out.splitlines() if l.startswith("accuracy:")).split()[1])
    assert acc >= 0.99
    for name in ("confusion.csv", "report.txt", "regression.csv"):
        assert (workdir / "eval" / name).stat().st_size > 0
    assert (workdir / "model.txt.loss.csv").read_text().startswith("epoch,loss\n")


def test_pipeline_deterministic(workdir, tmp_path):
    run("gen", "--paper-scale", "--seed", 1, "--train", tmp_path / "train.csv", "--test", tmp_path / "test.csv")
    run("train", "--train", tmp_path / "train.csv", "--model", tmp_path / "model.txt", "--seed", 1)
    for name in ("train.csv", "test.csv", "model.txt", "model.txt.loss.csv"):
        assert (tmp_path / name).read_bytes() == (workdir / name).read_bytes()


def test_classify_locked_rotor_row(workdir, capsys):
    row = "1.874796,1.855089,1.874878,0.286777,0.287052,0.281013"
    assert run("classify", "--model", workdir / "model.txt", "--row", row) == 0
    assert capsys.readouterr().out.splitlines()[0] == "LockedRotor (4)"


def test_classify_flags(workdir, capsys):
    values = dict(zip(["--v1", "--v2", "--v3", "--i1", "--i2", "--i3"],
                      [2.657179, 2.613409, 2.687374, 1.671357, 1.650515, 1.668712]))
    argv = ["classify", "--model", workdir / "model.txt"]
    for k, v in values.items():
        argv += [k, v]
    assert run(*argv) == 0
    assert capsys.readouterr().out.startswith("SinglePhasingUnderVoltage (6)")


def test_classify_needs_sample(workdir):
    assert run("classify", "--model", workdir / "model.txt", "--v1", 1) == cli.EXIT_USAGE


def test_missing_file_status(tmp_path):
    assert run("train", "--train", tmp_path / "nope.csv", "--model", tmp_path / "m") == cli.EXIT_IO


def test_parse_error_status(tmp_path):
    (tmp_path / "bad.csv").write_text("class,v1\n")
    assert run("train", "--train", tmp_path / "bad.csv", "--model", tmp_path / "m") == cli.EXIT_PARSE
    (tmp_path / "model.txt").write_text("motorfault-model 1\n")
    (tmp_path / "t.csv").write_text(GOLDEN.read_text())
    assert run("eval", "--test", tmp_path / "t.csv", "--model", tmp_path / "model.txt") == cli.EXIT_PARSE


def test_divergence_status(tmp_path):
    (tmp_path / "big.csv").write_text("class,v1,v2,v3,i1,i2,i3\n1,1e300,1e300,1e300,1e300,1e300,1e300\n")
    assert run("train", "--train", tmp_path / "big.csv", "--model", tmp_path / "m",
               "--lr", "1e300", "--epochs", 2) == cli.EXIT_DIVERGED


def test_replay_refused_status(tmp_path):
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    (tmp_path / "t.csv").write_text(GOLDEN.read_text())
    assert run("replay", tmp_path / "t.csv", "--port", port) == cli.EXIT_CONNECTION


def _free_port():
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve_and_replay_subprocess(workdir, tmp_path):
    port = _free_port()
    log = tmp_path / "events.log"
    env = {**os.environ, "PYTHONUNBUFFERED": "1"}
    srv = subprocess.Popen(
        [sys.executable, "-m", "motorfault.cli", "serve", "--model", str(workdir / "model.txt"),
         "--port", str(port), "--event-log", str(log)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, env=env,
    )
    try:
        assert srv.stdout.readline().startswith(f"listening on 127.0.0.1:{port}")
        # 4 single-phasing frames then recovery
        rows = ["2.657179,2.613409,2.687374,1.671357,1.650515,1.668712"] * 4
        rows += ["2.661025,2.624276,2.701274,0.490768,0.478549,0.493368"] * 2
        (tmp_path / "trace.log").write_text("".join(f"{i * 100},m1,{r}\n" for i, r in enumerate(rows)))
        rep = subprocess.run(
            [sys.executable, "-m", "motorfault.cli", "replay", str(tmp_path / "trace.log"),
             "--port", str(port), "--rate", "200"],
            capture_output=True, text=True, env=env,
        )
        assert rep.returncode == 0, rep.stderr
        codes = [l.split()[2] for l in rep.stdout.splitlines() if " OK " in l]
        assert codes == ["6"] * 4 + ["1"] * 2
    finally:
        time.sleep(0.2)
        srv.send_signal(signal.SIGINT)
        out, err = srv.communicate(timeout=10)
    assert srv.returncode == 0, err
    assert log.read_text() == "200,m1,6,3\n"
    assert "1 fault event(s)" in out
    assert "FAULT SinglePhasingUnderVoltage (6)" in out


def test_serve_port_in_use(workdir):
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        s.listen()
        port = s.getsockname()[1]
        assert run("serve", "--model", workdir / "model.txt", "--port", port,
                   "--event-log", workdir / "ev.log") == cli.EXIT_CONNECTION
