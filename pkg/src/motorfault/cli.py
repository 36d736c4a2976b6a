"""Command-line entry point: ``motorfault <subcommand> [flags]``."""
import argparse
import os
import sys

from . import _backend, faultgen, neuralnet
from .dataset import TABLE1_TEXT, FaultClass, PhaseSample, parse_number, read_csv, split, write_csv
from .errors import DivergenceError, ParseError, UsageError
from .evaluation import DecisionRule, classify, evaluate, frequency_report, regression_fit
from .neuralnet import NetworkConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_DIVERGED = 5
EXIT_CONNECTION = 6
EXIT_PROTOCOL = 7

EXIT_HELP = """\
exit status:
  0 success          1 unexpected error   2 bad usage
  3 file I/O error   4 parse error        5 training diverged
  6 connection error 7 server answered ERR during replay
"""


def _widths(text):
    try:
        widths = tuple(int(w) for w in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not widths or min(widths) < 1:
        raise argparse.ArgumentTypeError("layer widths must be >= 1")
    return widths


def _counts(text):
    try:
        counts = tuple(int(c) for c in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 7 comma-separated integers, got {text!r}") from None
    if len(counts) != 7 or min(counts) < 0:
        raise argparse.ArgumentTypeError("expected 7 non-negative counts")
    return counts


def _add_rule(p):
    p.add_argument("--rule", choices=["argmax", "threshold"], default="argmax")
    p.add_argument("--threshold", type=float, default=0.5, help="threshold rule cut-off (default 0.5)")


def _rule(args):
    return DecisionRule(args.rule, args.threshold)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="motorfault",
        description="Induction motor fault classification workflow.",
        epilog=EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_text):
        return sub.add_parser(
            name, help=help_text, description=help_text, epilog=EXIT_HELP,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    p = add("table1", "print the embedded Table 1 sample database as CSV")
    p.add_argument("--out", metavar="PATH", help="write to PATH instead of stdout")

    p = add("gen", "generate synthetic labeled CSV data")
    p.add_argument("--train", metavar="PATH", required=True, help="output CSV (training part)")
    p.add_argument("--test", metavar="PATH", help="output CSV for the test part")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--paper-scale", action="store_true", help="800 training rows, 67 test rows in the Table 2 mix")
    p.add_argument("--counts", type=_counts, metavar="C1,...,C7", default=faultgen.even_counts(800))
    p.add_argument("--noise", type=float, default=faultgen.DEFAULT_RELATIVE_NOISE, help="relative noise (default 0.01)")
    p.add_argument("--test-fraction", type=float, default=0.2, help="stratified test share when --test is given")
    p.add_argument("--two-component", action="store_true", help="sample around either Table 1 row per class")

    p = add("train", "train a network on a CSV dataset")
    p.add_argument("--train", metavar="PATH", required=True)
    p.add_argument("--model", metavar="PATH", required=True, help="where to write the model file")
    p.add_argument("--report", metavar="PATH", help="loss history CSV (default: MODEL.loss.csv)")
    p.add_argument("--hidden", type=_widths, default=(10,), metavar="W[,W...]")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--target-loss", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--no-shuffle", action="store_true", help="keep file order every epoch")
    p.add_argument("--scale", action="store_true", help="min-max scale inputs (scaler is stored in the model)")
    p.add_argument("--backend", choices=["cython", "python"], help="kernel implementation (default: fastest available)")

    p = add("eval", "evaluate a model on a test CSV")
    p.add_argument("--test", metavar="PATH", required=True)
    p.add_argument("--model", metavar="PATH", required=True)
    p.add_argument("--train", metavar="PATH", help="data for the regression fit (default: the test set)")
    p.add_argument("--out", metavar="DIR", help="write confusion.csv, report.txt and regression.csv here")
    _add_rule(p)

    p = add("classify", "classify one sample")
    p.add_argument("--model", metavar="PATH", required=True)
    p.add_argument("--row", metavar="CSV", help="v1,v2,v3,i1,i2,i3 or a full dataset row with a leading class")
    for name in ("v1", "v2", "v3", "i1", "i2", "i3"):
        p.add_argument(f"--{name}", type=float)
    _add_rule(p)

    p = add("serve", "run the streaming classification server")
    p.add_argument("--model", metavar="PATH", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7878)
    p.add_argument("--debounce", type=int, default=3)
    p.add_argument("--max-connections", type=int, default=8)
    p.add_argument("--event-log", metavar="PATH", default="events.log")
    _add_rule(p)

    p = add("replay", "send a dataset CSV or frame log to a running server")
    p.add_argument("input", metavar="FILE")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7878)
    p.add_argument("--rate", type=float, default=10.0, help="frames per second")
    p.add_argument("--source", default="replay", help="source_id for dataset rows")
    return parser


def _read_text(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def _load(path):
    with open(path, "rb") as fh:
        return neuralnet.load_model(fh.read())


def cmd_table1(args):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(TABLE1_TEXT)
    else:
        sys.stdout.write(TABLE1_TEXT)
    return EXIT_OK


def cmd_gen(args):
    if args.paper_scale:
        if not args.test:
            raise UsageError("--paper-scale needs --test PATH")
        train, test = faultgen.generate_paper_scale(args.seed, args.noise)
    else:
        spec = faultgen.GeneratorSpec(
            faultgen.default_signatures(args.noise), args.counts, seed=args.seed,
            two_component=args.two_component,
        )
        train, test = faultgen.generate(spec), None
        if args.test:
            train, test = split(train, args.test_fraction, args.seed)
    write_csv(train, args.train)
    print(f"wrote {len(train)} rows to {args.train}")
    if test is not None:
        write_csv(test, args.test)
        print(f"wrote {len(test)} rows to {args.test}")
    return EXIT_OK


def cmd_train(args):
    data = read_csv(args.train)
    config = NetworkConfig(
        hidden_layers=args.hidden, learning_rate=args.lr, max_epochs=args.epochs,
        target_loss=args.target_loss, seed=args.seed, shuffle_each_epoch=not args.no_shuffle,
    )
    net, report = neuralnet.train(config, data, scale=args.scale, backend=args.backend)
    with open(args.model, "wb") as fh:
        fh.write(neuralnet.save_model(net))
    report_path = args.report or args.model + ".loss.csv"
    with open(report_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(report.loss_history, start=1):
            fh.write(f"{epoch},{loss!r}\n")
    print(
        f"trained {'-'.join(map(str, config.sizes))} on {len(data)} samples "
        f"[{args.backend or _backend.NAME}]: epochs={report.epochs_run} "
        f"final_loss={report.final_loss:.6g} stopped_early={str(report.stopped_early).lower()}"
    )
    print(f"model: {args.model}\nloss history: {report_path}")
    return EXIT_OK


def cmd_eval(args):
    net = _load(args.model)
    test = read_csv(args.test)
    cm, acc = evaluate(net, test, _rule(args))
    freq = frequency_report(cm)
    fit_data = read_csv(args.train) if args.train else test
    fit = regression_fit(net, fit_data)
    text = freq.render() + f"accuracy: {acc:.6f}\nregression r: {fit.r:.6f}\n"
    sys.stdout.write("confusion matrix (rows = true class, columns = predicted):\n")
    sys.stdout.write(cm.to_csv())
    sys.stdout.write(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for name, body in (("confusion.csv", cm.to_csv()), ("report.txt", text), ("regression.csv", fit.to_csv())):
            with open(os.path.join(args.out, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(body)
    return EXIT_OK


def cmd_classify(args):
    if args.row is not None:
        fields = args.row.strip().split(",")
        if len(fields) == 7:
            fields = fields[1:]
        if len(fields) != 6:
            raise UsageError("--row needs 6 values (or 7 with a leading class)")
        try:
            values = [parse_number(f) for f in fields]
        except ValueError as exc:
            raise ParseError(str(exc)) from None
    else:
        values = [getattr(args, n) for n in ("v1", "v2", "v3", "i1", "i2", "i3")]
        if any(v is None for v in values):
            raise UsageError("give --row or all of --v1 --v2 --v3 --i1 --i2 --i3")
    try:
        sample = PhaseSample(*values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = classify(_load(args.model), sample, _rule(args))
    print("Rejected (0)" if result.rejected else str(result.predicted))
    for label, value in zip(FaultClass, result.outputs):
        print(f"  {label.value} {label.name:<26} {value:.6f}")
    return EXIT_OK


def cmd_serve(args):
    from .stream import StreamConfig, serve

    net = _load(args.model)
    cfg = StreamConfig(args.host, args.port, args.debounce, _rule(args), args.max_connections)

    def ready(addr):
        print(f"listening on {addr[0]}:{addr[1]}", flush=True)

    try:
        events = serve(net, cfg, log_path=args.event_log, ready=ready)
    except OSError as exc:
        if isinstance(exc, FileNotFoundError | PermissionError):
            raise
        raise ConnectionError(f"cannot listen on {args.host}:{args.port}: {exc}") from None
    print(f"shutdown: {len(events)} fault event(s) logged to {args.event_log}", flush=True)
    return EXIT_OK


def cmd_replay(args):
    from .stream import frames_from_text, replay

    frames = frames_from_text(_read_text(args.input), args.rate, args.source)
    result = replay(frames, (args.host, args.port), args.rate,
                    on_response=lambda frame, resp: print(f"{frame.timestamp} {resp}", flush=True))
    errors = len(result.errors)
    print(f"sent {len(frames)} frames, {len(result.responses) - errors} OK, {errors} ERR")
    return EXIT_PROTOCOL if errors else EXIT_OK


COMMANDS = {
    "table1": cmd_table1, "gen": cmd_gen, "train": cmd_train, "eval": cmd_eval,
    "classify": cmd_classify, "serve": cmd_serve, "replay": cmd_replay,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        code, msg = EXIT_USAGE, f"usage error: {exc}"
    except ParseError as exc:
        code, msg = EXIT_PARSE, f"parse error: {exc}"
    except DivergenceError as exc:
        code, msg = EXIT_DIVERGED, f"training diverged: {exc}"
    except (ConnectionError, TimeoutError) as exc:
        code, msg = EXIT_CONNECTION, f"connection error: {exc}"
    except OSError as exc:
        code, msg = EXIT_IO, f"I/O error: {exc}"
    print(f"motorfault {args.command}: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
