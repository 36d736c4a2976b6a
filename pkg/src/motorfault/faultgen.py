"""Synthetic labeled data anchored to the per-class Table 1 signatures.

Each class is a Gaussian cloud around its centroid with independent
per-channel noise. Draws come from :class:`~motorfault._rng.SplitMix64`
in a fixed order (class code order, then sample, then channel v1..i3),
so a given GeneratorSpec always yields the same dataset.
"""
from dataclasses import dataclass, field

import numpy as np

from ._rng import SplitMix64, derive_seed
from .dataset import Dataset, FaultClass, LabeledSample, PhaseSample, table1_fixture, to_input_vector
from .errors import UsageError

DEFAULT_RELATIVE_NOISE = 0.01
REFERENCE_TEST_COUNTS = (11, 12, 15, 17, 3, 3, 5)
REFERENCE_TRAIN_TOTAL = 800


@dataclass(frozen=True)
class ClassSignature:
    label: FaultClass
    centroid: tuple
    sigma: tuple
    # alternative centres for two-component sampling (the raw Table 1 rows)
    modes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "centroid", tuple(float(v) for v in self.centroid))
        object.__setattr__(self, "sigma", tuple(float(v) for v in self.sigma))
        object.__setattr__(self, "modes", tuple(tuple(float(v) for v in m) for m in self.modes))
        if len(self.centroid) != 6 or len(self.sigma) != 6:
            raise UsageError("centroid and sigma need 6 entries")
        if min(self.centroid) < 0 or min(self.sigma) < 0:
            raise UsageError("centroid and sigma entries must be >= 0")


@dataclass(frozen=True)
class GeneratorSpec:
    signatures: tuple
    counts: tuple
    seed: int = 0
    clamp_negative: bool = True
    two_component: bool = False

    def __post_init__(self):
        object.__setattr__(self, "signatures", tuple(self.signatures))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        labels = sorted(sig.label for sig in self.signatures)
        if labels != list(FaultClass):
            raise UsageError("need exactly one signature per fault class")
        if len(self.counts) != len(FaultClass) or min(self.counts) < 0:
            raise UsageError("counts must be 7 non-negative integers")
        if self.two_component and any(not sig.modes for sig in self.signatures):
            raise UsageError("two-component sampling needs modes on every signature")


def default_signatures(relative_noise=DEFAULT_RELATIVE_NOISE):
    """Centroid = mean of the two Table 1 rows per class; sigma = relative_noise * centroid."""
    if relative_noise < 0:
        raise UsageError("relative_noise must be >= 0")
    rows = {}
    for s in table1_fixture().samples:
        rows.setdefault(s.label, []).append(to_input_vector(s.sample))
    sigs = []
    for label in FaultClass:
        group = rows[label]
        centroid = [sum(col) / len(group) for col in zip(*group)]
        sigs.append(ClassSignature(label, centroid, [relative_noise * c for c in centroid], modes=group))
    return sigs


def generate(spec):
    rng = SplitMix64(spec.seed)
    by_label = {sig.label: sig for sig in spec.signatures}
    samples = []
    for label, count in zip(FaultClass, spec.counts):
        sig = by_label[label]
        for _ in range(count):
            centre = sig.centroid
            if spec.two_component:
                centre = sig.modes[0] if rng.uniform() < 0.5 else sig.modes[1]
            values = []
            for mu, sd in zip(centre, sig.sigma):
                v = mu + sd * rng.normal() if sd > 0 else mu
                if v < 0:
                    if not spec.clamp_negative:
                        raise UsageError(f"negative value {v!r} drawn for {label.name}; enable clamp_negative")
                    v = 0.0
                values.append(v)
            samples.append(LabeledSample(PhaseSample(*values), label))
    return Dataset(samples, provenance=f"faultgen seed={spec.seed} counts={list(spec.counts)}")


def even_counts(total):
    """Spread ``total`` over the 7 classes; the remainder goes to the lowest codes."""
    base, extra = divmod(total, len(FaultClass))
    return tuple(base + (1 if i < extra else 0) for i in range(len(FaultClass)))


def generate_paper_scale(seed, relative_noise=DEFAULT_RELATIVE_NOISE):
    """800 near-balanced training samples and a 67-sample test set with the Table 2 mix."""
    sigs = default_signatures(relative_noise)
    train = generate(GeneratorSpec(sigs, even_counts(REFERENCE_TRAIN_TOTAL), seed=derive_seed(seed, 1)))
    test = generate(GeneratorSpec(sigs, REFERENCE_TEST_COUNTS, seed=derive_seed(seed, 2)))
    return (
        Dataset(train.samples, provenance=f"paper-scale train seed={seed}"),
        Dataset(test.samples, provenance=f"paper-scale test seed={seed}"),
    )


def centroid_array(signatures=None):
    sigs = signatures if signatures is not None else default_signatures()
    return np.array([s.centroid for s in sorted(sigs, key=lambda s: s.label)])
