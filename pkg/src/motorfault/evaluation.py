"""Decision rules, confusion matrices, the frequency report and regression fit."""
from dataclasses import dataclass, field
from enum import Enum
import io

import numpy as np

from .dataset import FaultClass, one_hot, to_input_vector
from .errors import StructuralError, UsageError

N_CLASSES = len(FaultClass)


class Mode(Enum):
    ARGMAX = "argmax"
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class DecisionRule:
    mode: Mode = Mode.ARGMAX
    threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 < self.threshold < 1:
            raise UsageError("threshold must lie in (0, 1)")


ARGMAX = DecisionRule()


@dataclass(frozen=True)
class ClassificationResult:
    predicted: FaultClass  # None when rejected
    outputs: tuple
    margin: float

    @property
    def rejected(self):
        return self.predicted is None

    @property
    def code(self):
        """Class code, or 0 for a rejected sample."""
        return 0 if self.predicted is None else self.predicted.value


def decide(outputs, rule=ARGMAX):
    """Apply ``rule`` to a 7-vector of activations."""
    out = np.asarray(outputs, dtype=np.float64)
    if out.shape != (N_CLASSES,):
        raise StructuralError(f"expected {N_CLASSES} outputs, got shape {out.shape}")
    top2 = np.sort(out)[-2:]
    margin = float(top2[1] - top2[0])
    if rule.mode is Mode.ARGMAX:
        predicted = FaultClass(int(np.argmax(out)) + 1)  # argmax returns the first maximum
    else:
        hits = np.flatnonzero(out >= rule.threshold)
        predicted = FaultClass(int(hits[0]) + 1) if hits.size else None
    return ClassificationResult(predicted, tuple(out.tolist()), margin)


def classify(net, sample, rule=ARGMAX):
    if net.config.output_dim != N_CLASSES or net.config.input_dim != 6:
        raise StructuralError(
            f"classifier needs a 6->{N_CLASSES} network, got {net.config.input_dim}->{net.config.output_dim}"
        )
    return decide(net.predict(to_input_vector(sample)), rule)


@dataclass
class ConfusionMatrix:
    counts: np.ndarray = field(default_factory=lambda: np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64))
    rejected: np.ndarray = field(default_factory=lambda: np.zeros(N_CLASSES, dtype=np.int64))

    def add(self, true_label, predicted):
        if predicted is None:
            self.rejected[true_label.index] += 1
        else:
            self.counts[true_label.index, predicted.index] += 1

    @property
    def total(self):
        return int(self.counts.sum() + self.rejected.sum())

    def accuracy(self):
        return int(np.trace(self.counts)) / self.total

    def to_csv(self):
        return "".join(",".join(str(int(c)) for c in row) + "\n" for row in self.counts)


def evaluate(net, test, rule=ARGMAX):
    """Classify every test sample; returns ``(ConfusionMatrix, accuracy)``."""
    if len(test) == 0:
        raise UsageError("cannot evaluate on an empty test set")
    cm = ConfusionMatrix()
    for s in test.samples:
        cm.add(s.label, classify(net, s.sample, rule).predicted)
    return cm, cm.accuracy()


def predictions(net, data, rule=ARGMAX):
    return [classify(net, s.sample, rule) for s in data.samples]


@dataclass(frozen=True)
class FrequencyReport:
    counts: tuple
    total: int
    rejected: int = 0

    def render(self):
        buf = io.StringIO()
        width = max(len(f"{_pretty(c)} ({c.value})") for c in FaultClass) + 2
        buf.write(f"{'Fault':<{width}}Frequency of classification\n")
        for label, n in zip(FaultClass, self.counts):
            buf.write(f"{f'{_pretty(label)} ({label.value})':<{width}}{n}\n")
        if self.rejected:
            buf.write(f"{'Rejected':<{width}}{self.rejected}\n")
        buf.write(f"{'Total':<{width}}{self.total}\n")
        return buf.getvalue()


_PRETTY = {
    FaultClass.NoFault: "No fault",
    FaultClass.Overload: "Overload",
    FaultClass.GroundFault: "Ground fault",
    FaultClass.LockedRotor: "Locked rotor",
    FaultClass.UnbalancedVoltage: "Unbalanced voltage",
    FaultClass.SinglePhasingUnderVoltage: "Single phasing, under voltage",
    FaultClass.Overvoltage: "Overvoltage",
}


def _pretty(label):
    return _PRETTY[label]


def frequency_report(cm):
    """Column sums of the confusion matrix, i.e. how often each class was predicted."""
    cols = tuple(int(v) for v in cm.counts.sum(axis=0))
    return FrequencyReport(cols, sum(cols), int(cm.rejected.sum()))


@dataclass(frozen=True)
class RegressionFit:
    points: tuple  # (target, output) pairs
    r: float
    degenerate: bool = False

    def to_csv(self):
        return "target,output\n" + "".join(f"{t!r},{o!r}\n" for t, o in self.points)


def pearson(xs, ys):
    """Pearson r; returns ``(0.0, True)`` when either side has zero variance."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return 0.0, True
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r))), False


def regression_fit(net, data):
    if len(data) == 0:
        raise UsageError("cannot fit on an empty dataset")
    points = []
    for s in data.samples:
        out = net.predict(to_input_vector(s.sample))
        points.extend(zip(one_hot(s.label), out.tolist()))
    r, degenerate = pearson([p[0] for p in points], [p[1] for p in points])
    return RegressionFit(tuple(points), r, degenerate)
