"""Probability tables and the error types shared by both engines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

UNREACHABLE_TOL = 1e-14
ILL_POSED_IMAG_TOL = 1e-8
NEGATIVE_TOL = 1e-10


class ExpselError(Exception):
    pass


class ConditionUnreachable(ExpselError):
    """Total unnormalized weight of all experiences vanishes."""


class IllPosedSelection(ExpselError):
    """Selection weights produced a non-positive or complex-valued table."""


class PathCapExceeded(ExpselError):
    pass


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    labels: tuple[Hashable, ...]
    probabilities: np.ndarray
    normalization: float

    def __getitem__(self, label) -> float:
        try:
            k = self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None
        return float(self.probabilities[k])

    def __len__(self) -> int:
        return len(self.labels)

    def as_dict(self) -> dict:
        return {label: float(p) for label, p in zip(self.labels, self.probabilities)}


def normalize(labels: Sequence[Hashable], weights) -> ProbabilityTable:
    """Turn unnormalized experience weights into a table with sum one.

    ``weights`` may be complex; imaginary parts of magnitude >= 1e-8 signal an
    ill-posed selection, as do normalized entries below -1e-10. Entries are
    clamped to [0, 1] afterwards.
    """
    w = np.asarray(weights, dtype=np.complex128)
    labels = tuple(labels)
    if not labels:
        raise ValueError("at least one experience label is required")
    if len(labels) != w.size:
        raise ValueError("label count does not match weight count")
    bad = np.abs(w.imag) >= ILL_POSED_IMAG_TOL
    if bad.any():
        label = labels[int(np.argmax(bad))]
        raise IllPosedSelection(f"weight for {label!r} has imaginary part {w.imag[bad][0]:.3e}")
    total = float(w.real.sum())
    if total < UNREACHABLE_TOL:
        raise ConditionUnreachable(f"condition unreachable: total weight {total:.3e}")
    n = 1.0 / total
    p = w.real * n
    if p.min() < -NEGATIVE_TOL:
        raise IllPosedSelection(f"negative probability {p.min():.3e}")
    p = np.clip(p, 0.0, 1.0)
    p = p / p.sum()
    p.setflags(write=False)
    return ProbabilityTable(labels, p, n)
