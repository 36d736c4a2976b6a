"""Line-oriented TCP pipeline: sensor frames in, classifications and fault events out.

Wire protocol, one record per line (``\\n`` or ``\\r\\n``)::

    request   timestamp,source_id,v1,v2,v3,i1,i2,i3
    response  OK <class_code> <max_activation>     (code 0 = rejected by a threshold rule)
              ERR <reason>

Event log: one line per fault episode, ``timestamp,source_id,class_code,consecutive_count``.
"""
from dataclasses import dataclass
import logging
import re
import signal
import socket
import socketserver
import sys
import threading
import time

from .dataset import CSV_HEADER, FaultClass, PhaseSample, parse_csv, parse_number, to_input_vector
from .errors import ParseError, ProtocolError, UsageError
from .evaluation import ARGMAX, classify

log = logging.getLogger(__name__)

MAX_LINE = 4096
_SOURCE_ID = re.compile(r"[A-Za-z0-9_.:-]{1,64}")
_TIMESTAMP = re.compile(r"[0-9]{1,19}")


@dataclass(frozen=True)
class SensorFrame:
    timestamp: int
    source_id: str
    sample: PhaseSample

    def encode(self):
        values = ",".join(repr(v) for v in to_input_vector(self.sample))
        return f"{self.timestamp},{self.source_id},{values}\n".encode("ascii")


@dataclass(frozen=True)
class FaultEvent:
    timestamp: int
    source_id: str
    predicted: FaultClass
    consecutive_count: int
    outputs: tuple

    def log_line(self):
        return f"{self.timestamp},{self.source_id},{self.predicted.value},{self.consecutive_count}"


@dataclass(frozen=True)
class StreamConfig:
    host: str = "127.0.0.1"
    port: int = 7878
    debounce_frames: int = 3
    rule: object = ARGMAX
    max_connections: int = 8

    def __post_init__(self):
        if self.debounce_frames < 1:
            raise UsageError("debounce_frames must be >= 1")
        if self.max_connections < 1:
            raise UsageError("max_connections must be >= 1")
        if not 0 <= self.port <= 65535:
            raise UsageError("port out of range")


def parse_frame(line):
    """Parse one wire record. Raises :class:`ProtocolError` with a short reason."""
    if isinstance(line, (bytes, bytearray)):
        try:
            line = bytes(line).decode("ascii")
        except UnicodeDecodeError:
            raise ProtocolError("non-ASCII bytes") from None
    if line.endswith("\n"):
        line = line[:-1]
        if line.endswith("\r"):
            line = line[:-1]
    fields = line.split(",")
    if len(fields) != 8:
        raise ProtocolError(f"expected 8 fields, got {len(fields)}")
    ts, source, *values = fields
    if not _TIMESTAMP.fullmatch(ts):
        raise ProtocolError(f"bad timestamp {ts!r}")
    if not _SOURCE_ID.fullmatch(source):
        raise ProtocolError(f"bad source_id {source!r}")
    try:
        sample = PhaseSample(*(parse_number(v) for v in values))
    except ValueError as exc:
        raise ProtocolError(str(exc)) from None
    return SensorFrame(int(ts), source, sample)


class Debouncer:
    """Per-source run counter; yields one event per stable fault run of length ``frames``."""

    def __init__(self, frames):
        self.frames = frames
        self._state = {}

    def update(self, frame, result):
        cls, count = self._state.get(frame.source_id, (None, 0))
        p = result.predicted
        if p is None or p is FaultClass.NoFault:
            cls, count = None, 0
        elif p is cls:
            count += 1
        else:
            cls, count = p, 1
        self._state[frame.source_id] = (cls, count)
        if cls is not None and count == self.frames:
            return FaultEvent(frame.timestamp, frame.source_id, cls, count, result.outputs)
        return None


class EventSink:
    """Serialized writer to a text stream and an append-only log file."""

    def __init__(self, log_path=None, out=None):
        self._lock = threading.Lock()
        self._out = out
        self._fh = open(log_path, "a", encoding="utf-8") if log_path else None
        self.events = []

    def emit(self, event):
        with self._lock:
            self.events.append(event)
            if self._out is not None:
                self._out.write(
                    f"FAULT {event.predicted.name} ({event.predicted.value}) source={event.source_id} "
                    f"t={event.timestamp} frames={event.consecutive_count}\n"
                )
                self._out.flush()
            if self._fh is not None:
                self._fh.write(event.log_line() + "\n")
                self._fh.flush()

    def close(self):
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        srv = self.server
        if not srv.acquire_slot():
            self.wfile.write(b"ERR too many connections\n")
            return
        try:
            self._serve_lines(srv)
        except OSError as exc:
            log.info("connection %s closed: %s", self.client_address, exc)
        finally:
            srv.release_slot()

    def _serve_lines(self, srv):
        debouncer = Debouncer(srv.config.debounce_frames)
        while True:
            raw = self.rfile.readline(MAX_LINE + 1)
            if not raw:
                return
            if len(raw) > MAX_LINE and not raw.endswith(b"\n"):
                self.wfile.write(b"ERR line too long\n")
                self.rfile.readline()  # drop the rest of the record
                continue
            if not raw.strip():
                continue
            try:
                frame = parse_frame(raw)
            except ProtocolError as exc:
                self.wfile.write(f"ERR {exc}\n".encode("ascii", "replace"))
                continue
            result = classify(srv.net, frame.sample, srv.config.rule)
            event = debouncer.update(frame, result)
            if event is not None:
                srv.sink.emit(event)
            self.wfile.write(f"OK {result.code} {max(result.outputs)!r}\n".encode("ascii"))


class StreamServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, net, config, sink):
        self.net = net
        self.config = config
        self.sink = sink
        self._active = 0
        self._slots = threading.Lock()
        super().__init__((config.host, config.port), _Handler)

    @property
    def address(self):
        return self.server_address[:2]

    def acquire_slot(self):
        with self._slots:
            if self._active >= self.config.max_connections:
                return False
            self._active += 1
            return True

    def release_slot(self):
        with self._slots:
            self._active -= 1

    def start(self):
        """Serve from a background thread; returns the thread."""
        t = threading.Thread(target=self.serve_forever, name="motorfault-serve", daemon=True)
        t.start()
        return t

    def stop(self):
        self.shutdown()
        self.server_close()
        self.sink.close()


def serve(net, config, log_path=None, out=sys.stdout, ready=None):
    """Run until SIGINT/SIGTERM, then flush the event log and return.

    ``ready`` is called with the bound ``(host, port)`` once listening.
    """
    sink = EventSink(log_path, out)
    try:
        server = StreamServer(net, config, sink)
    except OSError:
        sink.close()
        raise
    stop = threading.Event()
    previous = {}
    for sig in (signal.SIGINT, signal.SIGTERM):
        previous[sig] = signal.signal(sig, lambda *_: stop.set())
    try:
        server.start()
        if ready is not None:
            ready(server.address)
        while not stop.wait(0.2):
            pass
    finally:
        server.stop()
        for sig, handler in previous.items():
            signal.signal(sig, handler)
    return sink.events


# -- replay client -----------------------------------------------------------


@dataclass
class ReplayResult:
    frames: list
    responses: list

    @property
    def errors(self):
        return [r for r in self.responses if not r.startswith("OK ")]

    def predicted_codes(self):
        return [int(r.split()[1]) for r in self.responses if r.startswith("OK ")]


def frames_from_text(text, rate_hz=10.0, source_id="replay"):
    """Dataset CSV rows become frames at ``1/rate_hz`` spacing; a frame log is taken as-is."""
    if rate_hz <= 0:
        raise UsageError("rate_hz must be positive")
    lines = text.splitlines()
    if lines and lines[0] == CSV_HEADER:
        data = parse_csv(text)
        step = 1000.0 / rate_hz
        return [SensorFrame(int(round(i * step)), source_id, s.sample) for i, s in enumerate(data.samples)]
    frames = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            frames.append(parse_frame(line))
        except ProtocolError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return frames


def replay(frames, endpoint, rate_hz=10.0, timeout=10.0, on_response=None):
    """Send ``frames`` in order at ``rate_hz`` and collect one response line per frame."""
    if rate_hz <= 0:
        raise UsageError("rate_hz must be positive")
    host, port = endpoint
    period = 1.0 / rate_hz
    responses = []
    with socket.create_connection((host, port), timeout=timeout) as sock:
        reader = sock.makefile("rb")
        start = time.monotonic()
        for i, frame in enumerate(frames):
            delay = start + i * period - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            sock.sendall(frame.encode())
            line = reader.readline()
            if not line:
                raise ConnectionError("server closed the connection")
            resp = line.decode("ascii").rstrip("\r\n")
            responses.append(resp)
            if on_response is not None:
                on_response(frame, resp)
    return ReplayResult(list(frames), responses)
