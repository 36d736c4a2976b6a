"""Labeled three-phase samples, CSV I/O, splitting and the Table 1 fixture."""
from dataclasses import dataclass
from enum import IntEnum
import math
import re

import numpy as np

from ._rng import SplitMix64
from .errors import ParseError, UsageError

CSV_HEADER = "class,v1,v2,v3,i1,i2,i3"

# unsigned decimal, optional fraction and exponent; no whitespace, signs, nan or inf
_NUMBER = re.compile(r"[0-9]+(\.[0-9]*)?([eE][+-]?[0-9]+)?|\.[0-9]+([eE][+-]?[0-9]+)?")


class FaultClass(IntEnum):
    NoFault = 1
    Overload = 2
    GroundFault = 3
    LockedRotor = 4
    UnbalancedVoltage = 5
    SinglePhasingUnderVoltage = 6
    Overvoltage = 7

    @property
    def index(self):
        return self.value - 1

    def __str__(self):
        return f"{self.name} ({self.value})"


@dataclass(frozen=True)
class PhaseSample:
    v1: float
    v2: float
    v3: float
    i1: float
    i2: float
    i3: float

    def __post_init__(self):
        for name in ("v1", "v2", "v3", "i1", "i2", "i3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")

    @classmethod
    def from_vector(cls, values):
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class LabeledSample:
    sample: PhaseSample
    label: FaultClass


@dataclass(frozen=True)
class Dataset:
    samples: tuple
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def class_counts(self):
        counts = [0] * len(FaultClass)
        for s in self.samples:
            counts[s.label.index] += 1
        return counts

    def arrays(self):
        """``(X, Y)`` as float arrays of shape ``(n, 6)`` and ``(n, 7)``."""
        X = np.array([to_input_vector(s.sample) for s in self.samples], dtype=np.float64).reshape(-1, 6)
        Y = np.array([one_hot(s.label) for s in self.samples], dtype=np.float64).reshape(-1, 7)
        return X, Y


def parse_number(field):
    """Strict decimal parse shared by the CSV reader and the wire protocol."""
    if not _NUMBER.fullmatch(field):
        raise ValueError(f"not a decimal number: {field!r}")
    value = float(field)
    if not math.isfinite(value):
        raise ValueError(f"number out of range: {field!r}")
    return value


def parse_csv(text):
    """Parse the ``class,v1,v2,v3,i1,i2,i3`` format into a :class:`Dataset`."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]
    if not lines or lines[0] != CSV_HEADER:
        raise ParseError(f"expected header {CSV_HEADER!r}", line=1)
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 7:
            raise ParseError(f"expected 7 fields, found {len(fields)}", line=lineno)
        if not re.fullmatch(r"[0-9]+", fields[0]) or not 1 <= int(fields[0]) <= 7:
            raise ParseError(f"class must be an integer 1-7, found {fields[0]!r}", line=lineno)
        try:
            values = [parse_number(f) for f in fields[1:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        samples.append(LabeledSample(PhaseSample(*values), FaultClass(int(fields[0]))))
    return Dataset(samples)


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        data = parse_csv(fh.read())
    return Dataset(data.samples, provenance=str(path))


def to_csv(data):
    """Serialize with ``repr`` floats so ``parse_csv`` restores identical values."""
    out = [CSV_HEADER]
    for s in data.samples:
        out.append(",".join([str(s.label.value), *(repr(v) for v in to_input_vector(s.sample))]))
    return "\n".join(out) + "\n"


def write_csv(data, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(data))


# Table 1 rows, verbatim, as printed (six decimals kept as text)
TABLE1_TEXT = """\
class,v1,v2,v3,i1,i2,i3
1,2.661025,2.624276,2.701274,0.490768,0.478549,0.493368
1,2.660319,2.624661,2.700700,0.491114,0.478722,0.492584
2,2.647625,2.598815,2.671626,0.006194,0.643518,0.640217
2,2.650816,2.601661,2.673722,0.006123,0.641548,0.638553
3,0.919570,2.621412,2.626511,0.172113,0.772419,0.662758
3,0.919852,2.621627,2.625342,0.172072,0.772106,0.662653
4,1.874796,1.855089,1.874878,0.286777,0.287052,0.281013
4,1.452803,1.449902,1.441935,0.245231,0.249739,0.234152
5,2.865128,2.871906,2.855436,0.482896,0.499206,0.496894
5,2.868791,2.875877,2.860353,0.483453,0.499363,0.496879
6,2.657179,2.613409,2.687374,1.671357,1.650515,1.668712
6,2.661374,2.613395,2.688907,1.416786,1.397752,1.411372
7,2.637658,2.600486,2.673771,0.803147,0.782514,0.797477
7,2.650468,2.608143,2.682578,0.857336,0.837601,0.847664
"""


def table1_fixture():
    return Dataset(parse_csv(TABLE1_TEXT).samples, provenance="table1")


def split(data, test_fraction, seed):
    """Stratified split; per class, round-half-up ``n * test_fraction`` go to test.

    Each class keeps its relative order in both halves.
    """
    if not 0 < test_fraction < 1:
        raise UsageError("test_fraction must lie in (0, 1)")
    if len(data) == 0:
        raise UsageError("cannot split an empty dataset")
    rng = SplitMix64(seed)
    by_class = {}
    for idx, s in enumerate(data.samples):
        by_class.setdefault(s.label, []).append(idx)
    test_idx = set()
    for label in sorted(by_class):
        members = by_class[label]
        n = len(members)
        k = math.floor(n * test_fraction + 0.5)
        if n >= 2:
            k = max(k, 1)
        picked = rng.shuffle(list(members))[:k]
        test_idx.update(picked)
    train = [s for i, s in enumerate(data.samples) if i not in test_idx]
    test = [s for i, s in enumerate(data.samples) if i in test_idx]
    tag = data.provenance or "data"
    return (
        Dataset(train, provenance=f"{tag}[train seed={seed}]"),
        Dataset(test, provenance=f"{tag}[test seed={seed}]"),
    )


def one_hot(label):
    vec = [0.0] * len(FaultClass)
    vec[FaultClass(label).index] = 1.0
    return vec


def to_input_vector(s):
    return [s.v1, s.v2, s.v3, s.i1, s.i2, s.i3]
