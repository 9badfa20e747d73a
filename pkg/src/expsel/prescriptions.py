"""Alternative selection prescriptions, for comparison with the minimal one.

``minimal``         select for the designated experience only.
``joint``           also select for one chosen outcome of every auxiliary event.
``coherent_sum``    sum amplitudes over all auxiliary outcomes, then square.
``incoherent_sum``  sum squared weights over all auxiliary outcomes.

Normalization is always over the designated labels. Auxiliary outcome tuples
are folded in lexicographic order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable

import numpy as np

from .experience import (
    CONDITION,
    EXPERIENCE,
    EvolutionSchedule,
    ProjectorEvent,
    chain_operator,
    chain_weight,
    heisenberg_weights,
)
from .hilbert import STRUCT_TOL, is_complete
from .tables import ProbabilityTable, normalize

MINIMAL = "minimal"
JOINT = "joint"
COHERENT_SUM = "coherent_sum"
INCOHERENT_SUM = "incoherent_sum"
KINDS = (MINIMAL, JOINT, COHERENT_SUM, INCOHERENT_SUM)


@dataclass(frozen=True, eq=False)
class PrescriptionSpec:
    kind: str
    designated: ProjectorEvent
    auxiliary: tuple[ProjectorEvent, ...] = ()
    #: joint only: the selected label of each auxiliary event
    outcomes: tuple[Hashable, ...] = ()

    def __post_init__(self):
        aux = tuple(self.auxiliary)
        outcomes = tuple(self.outcomes)
        object.__setattr__(self, "auxiliary", aux)
        object.__setattr__(self, "outcomes", outcomes)
        if self.kind not in KINDS:
            raise ValueError(f"unknown prescription kind {self.kind!r}")
        if self.designated.kind != EXPERIENCE:
            raise ValueError("designated event must be an experience event")
        for k, ev in enumerate(aux):
            if ev.kind != EXPERIENCE:
                raise ValueError(f"auxiliary event {k} must be an experience event")
            if ev.time == self.designated.time:
                raise ValueError(
                    f"auxiliary event {k} coincides with the designated time t={ev.time}"
                )
        if self.kind == MINIMAL and aux:
            raise ValueError("minimal prescription takes no auxiliary events")
        if self.kind in (COHERENT_SUM, INCOHERENT_SUM):
            for k, ev in enumerate(aux):
                if not is_complete(ev.ops, STRUCT_TOL):
                    raise ValueError(f"auxiliary event {k} is not a complete projector set")
        if self.kind == JOINT:
            if not aux:
                raise ValueError("joint prescription needs at least one auxiliary event")
            if len(outcomes) != len(aux):
                raise ValueError("joint prescription needs one chosen outcome per auxiliary event")
            for k, (ev, label) in enumerate(zip(aux, outcomes)):
                if label not in ev.labels:
                    raise ValueError(f"outcome {label!r} not among auxiliary event {k} labels")
        elif outcomes:
            raise ValueError("outcomes are only meaningful for the joint prescription")


def _inserts(condition: ProjectorEvent, aux_ops, aux_events, t_d: int, q: np.ndarray):
    out = [(condition.time, condition.ops[0])]
    out += [(ev.time, op) for ev, op in zip(aux_events, aux_ops)]
    out.append((t_d, q))
    return out


def weights(
    schedule: EvolutionSchedule, condition: ProjectorEvent | None, spec: PrescriptionSpec
) -> np.ndarray:
    """Unnormalized weight of each designated label under ``spec``."""
    if condition is None:
        condition = ProjectorEvent.condition(schedule.t_I, np.eye(schedule.dim))
    if condition.kind != CONDITION:
        raise ValueError("condition event must have kind 'condition'")
    if spec.kind == MINIMAL:
        return heisenberg_weights(schedule, condition, spec.designated)

    for ev in spec.auxiliary:
        schedule.check_time(ev.time)
    schedule.check_time(condition.time)
    schedule.check_time(spec.designated.time)
    if condition.time > spec.designated.time:
        raise ValueError("condition is later than the designated experience")

    t_d = spec.designated.time
    aux = spec.auxiliary
    out = []
    for q in spec.designated.ops:
        if spec.kind == JOINT:
            ops = [ev[label] for ev, label in zip(aux, spec.outcomes)]
            w = chain_weight(schedule, chain_operator(schedule, _inserts(condition, ops, aux, t_d, q)))
        elif spec.kind == COHERENT_SUM:
            amp = np.zeros((schedule.dim, schedule.dim), dtype=np.complex128)
            for ops in itertools.product(*(ev.ops for ev in aux)):
                amp = amp + chain_operator(schedule, _inserts(condition, ops, aux, t_d, q))
            w = chain_weight(schedule, amp)
        else:
            w = 0.0 + 0.0j
            for ops in itertools.product(*(ev.ops for ev in aux)):
                w += chain_weight(schedule, chain_operator(schedule, _inserts(condition, ops, aux, t_d, q)))
        out.append(w)
    return np.array(out)


def evaluate(
    schedule: EvolutionSchedule, condition: ProjectorEvent | None, spec: PrescriptionSpec
) -> ProbabilityTable:
    return normalize(spec.designated.labels, weights(schedule, condition, spec))


@dataclass(frozen=True)
class DivergenceReport:
    max_abs_diff: float
    total_variation: float
    per_label: tuple[tuple[Hashable, float, float], ...]


def compare(a: ProbabilityTable, b: ProbabilityTable) -> DivergenceReport:
    if list(a.labels) != list(b.labels):
        raise ValueError(f"label mismatch: {a.labels} vs {b.labels}")
    pa = np.asarray(a.probabilities, dtype=float)
    pb = np.asarray(b.probabilities, dtype=float)
    diff = np.abs(pa - pb)
    return DivergenceReport(
        max_abs_diff=float(diff.max()),
        total_variation=float(0.5 * diff.sum()),
        per_label=tuple((label, float(x), float(y)) for label, x, y in zip(a.labels, pa, pb)),
    )
