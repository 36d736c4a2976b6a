"""Exit criteria. Each test prints one PASS/FAIL line; run with ``pytest -s`` to see them inline."""
import io
import pathlib
import time

import numpy as np
import pytest

from motorfault import cli, neuralnet
from motorfault.dataset import read_csv, to_csv
from motorfault.evaluation import ARGMAX, classify, evaluate, frequency_report, regression_fit
from motorfault.faultgen import GeneratorSpec, default_signatures, generate
from motorfault.neuralnet import NetworkConfig, backprop_gradients, forward, init_weights, load_model, save_model
from motorfault.stream import EventSink, SensorFrame, StreamConfig, StreamServer, frames_from_text, replay

from test_neuralnet import XOR, max_rel_error, numeric_gradients

GOLDEN = pathlib.Path(__file__).parent / "golden" / "table1.csv"
TABLE2_COUNTS = (11, 12, 15, 17, 3, 3, 5)
TABLE2_TOTAL = 67  # as printed; the counts above add up to 66
SEEDS = range(1, 6)


def verdict(request, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {request.node.name}: {detail}"
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line(line)
    else:
        print(line)
    assert ok, detail


@pytest.fixture(scope="module")
def cli_runs(tmp_path_factory):
    """`gen --paper-scale` -> `train` -> `eval` through the CLI for seeds 1..5."""
    runs = {}
    for seed in SEEDS:
        d = tmp_path_factory.mktemp(f"seed{seed}")
        start = time.perf_counter()
        assert cli.main(["gen", "--paper-scale", "--seed", str(seed),
                         "--train", str(d / "train.csv"), "--test", str(d / "test.csv")]) == 0
        assert cli.main(["train", "--train", str(d / "train.csv"), "--model", str(d / "model.txt"),
                         "--hidden", "10", "--lr", "0.1", "--epochs", "2000", "--target-loss", "1e-3",
                         "--seed", str(seed)]) == 0
        assert cli.main(["eval", "--test", str(d / "test.csv"), "--model", str(d / "model.txt"),
                         "--train", str(d / "train.csv"), "--rule", "argmax", "--out", str(d / "eval")]) == 0
        elapsed = time.perf_counter() - start
        report = (d / "eval" / "report.txt").read_text()
        acc = float(next(l for l in report.splitlines() if l.startswith("accuracy:")).split()[1])
        runs[seed] = {"dir": d, "accuracy": acc, "seconds": elapsed}
    return runs


def _perfect_seed(cli_runs):
    return next(s for s in SEEDS if cli_runs[s]["accuracy"] == 1.0)


def test_c1_paper_scale_accuracy(request, cli_runs):
    accs = [cli_runs[s]["accuracy"] for s in SEEDS]
    first = cli_runs[1]
    ok = first["accuracy"] >= 0.99 and first["seconds"] < 30 and np.mean(accs) >= 0.99
    verdict(request, ok, f"seed1 acc={first['accuracy']:.4f} in {first['seconds']:.1f}s; "
                         f"seeds1-5 acc={accs} mean={np.mean(accs):.4f} (need >=0.99, <30s)")


def _table2_eval(cli_runs):
    d = cli_runs[_perfect_seed(cli_runs)]["dir"]
    net = load_model((d / "model.txt").read_bytes())
    cm, acc = evaluate(net, read_csv(d / "test.csv"), ARGMAX)
    return cm, acc, frequency_report(cm)


def test_c2_table2_frequencies(request, cli_runs):
    cm, acc, rep = _table2_eval(cli_runs)
    diagonal = np.count_nonzero(cm.counts - np.diag(np.diag(cm.counts))) == 0
    ok = acc == 1.0 and rep.counts == TABLE2_COUNTS and diagonal
    verdict(request, ok, f"frequencies={rep.counts} diagonal={diagonal} (want {TABLE2_COUNTS})")


def test_c2_table2_total(request, cli_runs):
    _, _, rep = _table2_eval(cli_runs)
    verdict(request, rep.total == TABLE2_TOTAL,
            f"total={rep.total} (want {TABLE2_TOTAL}; the Table 2 class counts sum to {sum(TABLE2_COUNTS)})")


def test_c3_regression_fit(request, cli_runs):
    d = cli_runs[_perfect_seed(cli_runs)]["dir"]
    fit = regression_fit(load_model((d / "model.txt").read_bytes()), read_csv(d / "train.csv"))
    verdict(request, fit.r >= 0.99 and not fit.degenerate, f"Pearson r={fit.r:.6f} over {len(fit.points)} points")


def test_c4_gradient_oracle(request):
    rng = np.random.default_rng(2024)
    worst, pairs = 0.0, 0
    for trial in range(120):
        depth = int(rng.integers(1, 4))
        hidden = tuple(int(w) for w in rng.integers(1, 9, size=depth))
        dims = (6, 7) if trial % 2 == 0 else tuple(int(v) for v in rng.integers(1, 8, size=2))
        cfg = NetworkConfig(hidden_layers=hidden, input_dim=dims[0], output_dim=dims[1], seed=trial)
        net = neuralnet.with_weights(init_weights(cfg), [
            (l.weights, rng.normal(0, 0.5, l.bias.shape)) for l in init_weights(cfg).layers])
        x = rng.uniform(0, 3, cfg.input_dim)
        t = rng.uniform(0, 1, cfg.output_dim) if trial % 3 else np.eye(cfg.output_dim)[0]
        worst = max(worst, max_rel_error(backprop_gradients(net, x, t), numeric_gradients(net, x, t)))
        pairs += 1
    verdict(request, worst <= 1e-5, f"{pairs} pairs, max relative error {worst:.2e} (h=1e-5, need <=1e-5)")


def test_c5_xor(request):
    cfg = NetworkConfig(hidden_layers=(4,), input_dim=2, output_dim=1, learning_rate=0.5,
                        max_epochs=20000, target_loss=0.0, seed=7)
    net, report = neuralnet.train(cfg, XOR)
    preds = [round(float(net.predict(x)[0])) for x in XOR[0]]
    ok = report.final_loss < 0.05 and preds == [0, 1, 1, 0]
    verdict(request, ok, f"loss={report.final_loss:.5f} after {report.epochs_run} epochs, predictions={preds}")


def test_c6_determinism_and_persistence(request, cli_runs, tmp_path):
    d = cli_runs[1]["dir"]
    assert cli.main(["train", "--train", str(d / "train.csv"), "--model", str(tmp_path / "again.txt"),
                     "--seed", "1"]) == 0
    same_file = (tmp_path / "again.txt").read_bytes() == (d / "model.txt").read_bytes()
    net = load_model((d / "model.txt").read_bytes())
    again = load_model(save_model(net))
    inputs = np.random.default_rng(6).uniform(0, 3, size=(100, 6))
    bit_exact = all(np.array_equal(forward(net, x)[-1], forward(again, x)[-1]) for x in inputs)
    verdict(request, same_file and bit_exact,
            f"retrained model byte-identical={same_file}; save/load forward bit-exact on 100 inputs={bit_exact}")


def test_c7_stream_batch_equivalence(request, cli_runs, tmp_path):
    d = cli_runs[1]["dir"]
    net = load_model((d / "model.txt").read_bytes())
    test = read_csv(d / "test.csv")
    batch = [classify(net, s.sample, ARGMAX).code for s in test]

    sink = EventSink(tmp_path / "events.log", io.StringIO())
    srv = StreamServer(net, StreamConfig(port=0, debounce_frames=3), sink)
    srv.start()
    try:
        streamed = replay(frames_from_text(to_csv(test), rate_hz=1000), srv.address, rate_hz=1000)
        equivalent = streamed.errors == [] and streamed.predicted_codes() == batch

        sp = default_signatures()[5].centroid
        ok_c = default_signatures()[0].centroid
        from motorfault.dataset import PhaseSample
        trace = [SensorFrame(i, "trace", PhaseSample(*sp)) for i in range(4)]
        trace += [SensorFrame(4 + i, "trace", PhaseSample(*ok_c)) for i in range(3)]
        before = len(sink.events)
        replay(trace, srv.address, rate_hz=1000)
        events = sink.events[before:]
    finally:
        srv.stop()
    one_event = len(events) == 1 and events[0].predicted.value == 6 and events[0].timestamp == 2
    verdict(request, equivalent and one_event,
            f"{len(streamed.responses)} frames, stream==batch {equivalent}; "
            f"fault trace events={[e.log_line() for e in events]}")


def test_c8_fixture_fidelity(request, capsys):
    assert cli.main(["table1"]) == 0
    out = capsys.readouterr().out
    golden = out == GOLDEN.read_text()
    sigs = default_signatures(0.0)
    data = generate(GeneratorSpec(sigs, (5,) * 7, seed=8))
    exact = all(tuple(s.sample.__dict__.values()) == sigs[s.label.index].centroid for s in data)
    centroid_values = (sigs[0].centroid[0], sigs[2].centroid[0])
    derived = centroid_values == ((2.661025 + 2.660319) / 2, (0.919570 + 0.919852) / 2)
    verdict(request, golden and exact and derived,
            f"table1 golden match={golden}; zero-noise samples equal centroids={exact}; "
            f"centroids v1 class1/class3={centroid_values}")
