"""Operator engine: experience probabilities under a unitary schedule.

The schedule carries a factorized boundary condition (``rho_I`` at the first
time stamp, ``rho_F`` at the last) and a list of unitary steps tiling the time
range. Conditions and experiences are projectors inserted at time stamps; the
weight of experience ``i`` is

    Tr[rho_F U(t_F, t_1) Q_i U(t_1, t_1') P U(t_1', t_I) rho_I (...)^dagger]

and the table is normalized over ``i``. Time stamps are abstract integers; an
event must sit on a step boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, NamedTuple, Sequence

import numpy as np

from .hilbert import (
    STRUCT_TOL,
    CompositeSpace,
    dagger,
    density_operator,
    operator,
    pure_density,
    validate_projector_set,
    validate_unitary,
)
from .tables import ProbabilityTable, normalize

CONDITION = "condition"
EXPERIENCE = "experience"


@dataclass(frozen=True, eq=False)
class Step:
    t_a: int
    t_b: int
    U: np.ndarray


@dataclass(frozen=True, eq=False)
class EvolutionSchedule:
    space: CompositeSpace
    steps: tuple[Step, ...]
    rho_I: np.ndarray
    rho_F: np.ndarray | None = None

    def __post_init__(self):
        steps = tuple(s if isinstance(s, Step) else Step(*s) for s in self.steps)
        if not steps:
            raise ValueError("schedule needs at least one step")
        dim = self.space.dim
        clean = []
        for k, s in enumerate(steps):
            if s.t_b <= s.t_a:
                raise ValueError(f"step {k} has empty or reversed interval [{s.t_a}, {s.t_b}]")
            if k and s.t_a != steps[k - 1].t_b:
                raise ValueError(f"step {k} starts at {s.t_a}, previous ends at {steps[k - 1].t_b}")
            u = operator(s.U)
            if u.shape != (dim, dim):
                raise ValueError(f"step {k} has shape {u.shape}, space dimension is {dim}")
            if not validate_unitary(u, STRUCT_TOL):
                raise ValueError(f"step {k} is not unitary")
            clean.append(Step(int(s.t_a), int(s.t_b), u))
        object.__setattr__(self, "steps", tuple(clean))
        rho_i = density_operator(self.rho_I)
        rho_f = density_operator(np.eye(dim) if self.rho_F is None else self.rho_F)
        for name, rho in (("rho_I", rho_i), ("rho_F", rho_f)):
            if rho.shape != (dim, dim):
                raise ValueError(f"{name} has shape {rho.shape}, space dimension is {dim}")
        object.__setattr__(self, "rho_I", rho_i)
        object.__setattr__(self, "rho_F", rho_f)

    @property
    def t_I(self) -> int:
        return self.steps[0].t_a

    @property
    def t_F(self) -> int:
        return self.steps[-1].t_b

    @property
    def times(self) -> tuple[int, ...]:
        return (self.t_I,) + tuple(s.t_b for s in self.steps)

    @property
    def dim(self) -> int:
        return self.space.dim

    def check_time(self, t: int) -> None:
        if not self.t_I <= t <= self.t_F:
            raise ValueError(f"time {t} outside schedule range [{self.t_I}, {self.t_F}]")
        if t not in self.times:
            raise ValueError(f"time {t} is not a step boundary {self.times}")


@dataclass(frozen=True, eq=False)
class ProjectorEvent:
    """Labelled projectors at one time stamp.

    Condition events carry exactly one projector, experience events one or
    more. The set must be mutually orthogonal; completeness is optional.
    """

    time: int
    kind: str
    projectors: tuple[tuple[Hashable, np.ndarray], ...]

    def __post_init__(self):
        items = self.projectors
        if isinstance(items, Mapping):
            items = items.items()
        items = tuple((label, operator(p)) for label, p in items)
        if self.kind not in (CONDITION, EXPERIENCE):
            raise ValueError(f"event kind must be 'condition' or 'experience', got {self.kind!r}")
        if self.kind == CONDITION and len(items) != 1:
            raise ValueError("a condition event carries exactly one projector")
        if not items:
            raise ValueError("an experience event carries at least one projector")
        labels = [label for label, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate projector labels {labels}")
        if not validate_projector_set([p for _, p in items], STRUCT_TOL):
            raise ValueError(f"{self.kind} event at t={self.time} is not an orthogonal projector set")
        object.__setattr__(self, "projectors", items)

    @classmethod
    def condition(cls, time: int, projector: np.ndarray, label: Hashable = "c") -> "ProjectorEvent":
        return cls(time, CONDITION, ((label, projector),))

    @classmethod
    def experience(cls, time: int, projectors) -> "ProjectorEvent":
        return cls(time, EXPERIENCE, projectors)

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _ in self.projectors)

    @property
    def ops(self) -> tuple[np.ndarray, ...]:
        return tuple(p for _, p in self.projectors)

    def __getitem__(self, label) -> np.ndarray:
        return dict(self.projectors)[label]


def evolve(schedule: EvolutionSchedule, t_a: int, t_b: int) -> np.ndarray:
    """``U(t_b, t_a)``: ordered product of the steps inside [t_a, t_b], later on the left."""
    if t_a > t_b:
        raise ValueError(f"evolve needs t_a <= t_b, got {t_a} > {t_b}")
    schedule.check_time(t_a)
    schedule.check_time(t_b)
    u = np.eye(schedule.dim, dtype=np.complex128)
    for s in schedule.steps:
        if t_a <= s.t_a and s.t_b <= t_b:
            u = s.U @ u
    return u


def _propagate(schedule: EvolutionSchedule, t: int, t0: int) -> np.ndarray:
    """U(t, t0) for either ordering; backward transport is the adjoint."""
    if t >= t0:
        return evolve(schedule, t0, t)
    return dagger(evolve(schedule, t, t0))


def heisenberg_operator(schedule: EvolutionSchedule, op: np.ndarray, t: int, t0: int) -> np.ndarray:
    u = _propagate(schedule, t, t0)
    return dagger(u) @ np.asarray(op, dtype=np.complex128) @ u


def chain_operator(schedule: EvolutionSchedule, inserts: Sequence[tuple[int, np.ndarray]]) -> np.ndarray:
    """Schrödinger-picture operator ``U(t_F, t_n) X_n ... X_1 U(t_1, t_I)``.

    ``inserts`` lists (time, operator) in application order; it is stably
    sorted by time, so entries sharing a time stamp keep their given order.
    """
    ordered = sorted(inserts, key=lambda item: item[0])
    a = np.eye(schedule.dim, dtype=np.complex128)
    t_prev = schedule.t_I
    for t, x in ordered:
        a = x @ evolve(schedule, t_prev, t) @ a
        t_prev = t
    return evolve(schedule, t_prev, schedule.t_F) @ a


def chain_weight(schedule: EvolutionSchedule, a: np.ndarray) -> complex:
    return complex(np.trace(schedule.rho_F @ a @ schedule.rho_I @ dagger(a)))


def _identity_condition(schedule: EvolutionSchedule) -> ProjectorEvent:
    return ProjectorEvent.condition(schedule.t_I, np.eye(schedule.dim))


def _check_events(schedule, condition, experiences):
    if condition is None:
        condition = _identity_condition(schedule)
    if condition.kind != CONDITION:
        raise ValueError("condition event must have kind 'condition'")
    if experiences.kind != EXPERIENCE:
        raise ValueError("experience event must have kind 'experience'")
    schedule.check_time(condition.time)
    schedule.check_time(experiences.time)
    if condition.time > experiences.time:
        raise ValueError(
            f"condition at t={condition.time} is later than experiences at t={experiences.time}"
        )
    for event in (condition, experiences):
        if event.ops[0].shape != (schedule.dim, schedule.dim):
            raise ValueError(f"{event.kind} projectors do not match the schedule dimension")
    return condition


def schrodinger_weights(schedule, condition, experiences) -> np.ndarray:
    condition = _check_events(schedule, condition, experiences)
    p = condition.ops[0]
    return np.array([
        chain_weight(schedule, chain_operator(schedule, [(condition.time, p), (experiences.time, q)]))
        for q in experiences.ops
    ])


def probability_schrodinger(
    schedule: EvolutionSchedule,
    condition: ProjectorEvent | None,
    experiences: ProjectorEvent,
) -> ProbabilityTable:
    """Minimal-prescription table in the Schrödinger picture.

    ``condition=None`` means the identity projector at ``t_I``.
    """
    return normalize(experiences.labels, schrodinger_weights(schedule, condition, experiences))


def heisenberg_weights(schedule, condition, experiences) -> np.ndarray:
    condition = _check_events(schedule, condition, experiences)
    t_i = schedule.t_I
    p = heisenberg_operator(schedule, condition.ops[0], condition.time, t_i)
    rho_f = heisenberg_operator(schedule, schedule.rho_F, schedule.t_F, t_i)
    out = []
    for q in experiences.ops:
        qh = heisenberg_operator(schedule, q, experiences.time, t_i)
        out.append(np.trace(rho_f @ qh @ p @ schedule.rho_I @ p @ qh))
    return np.array(out)


def probability_heisenberg(
    schedule: EvolutionSchedule,
    condition: ProjectorEvent | None,
    experiences: ProjectorEvent,
) -> ProbabilityTable:
    """Same table as :func:`probability_schrodinger`, from time-dependent operators
    referred to ``t_I``."""
    return normalize(experiences.labels, heisenberg_weights(schedule, condition, experiences))


class MemoryChain(NamedTuple):
    """Prior history encoded as memory: condition ``P`` at ``condition_time``,
    experienced ``Q_j`` at ``experience_time`` and a further condition ``P''``
    at ``further_time``. Projectors are given in the Schrödinger picture."""

    condition: np.ndarray
    condition_time: int
    experience: np.ndarray
    experience_time: int
    further: np.ndarray
    further_time: int


def _chain_heisenberg(schedule: EvolutionSchedule, chain: MemoryChain) -> np.ndarray:
    if not chain.condition_time <= chain.experience_time <= chain.further_time:
        raise ValueError("memory chain times must satisfy t1' <= t1 <= t2'")
    t_i = schedule.t_I
    p = heisenberg_operator(schedule, chain.condition, chain.condition_time, t_i)
    q = heisenberg_operator(schedule, chain.experience, chain.experience_time, t_i)
    p2 = heisenberg_operator(schedule, chain.further, chain.further_time, t_i)
    return p2 @ q @ p


def memory_condition(schedule: EvolutionSchedule, psi, chain: MemoryChain) -> np.ndarray:
    """Unnormalized ``P''(t2') Q_j(t1) P(t1') |psi>`` in the Heisenberg picture.

    A zero vector means the remembered history is impossible.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    return _chain_heisenberg(schedule, chain) @ psi


def chained_probability(
    schedule: EvolutionSchedule, chain: MemoryChain, experiences: ProjectorEvent
) -> ProbabilityTable:
    if experiences.kind != EXPERIENCE:
        raise ValueError("experience event must have kind 'experience'")
    for t in (chain.condition_time, chain.experience_time, chain.further_time, experiences.time):
        schedule.check_time(t)
    if chain.further_time > experiences.time:
        raise ValueError("further condition must not be later than the experiences")
    t_i = schedule.t_I
    m = _chain_heisenberg(schedule, chain)
    rho_f = heisenberg_operator(schedule, schedule.rho_F, schedule.t_F, t_i)
    inner = m @ schedule.rho_I @ dagger(m)
    weights = []
    for q in experiences.ops:
        qh = heisenberg_operator(schedule, q, experiences.time, t_i)
        weights.append(np.trace(rho_f @ qh @ inner @ qh))
    return normalize(experiences.labels, weights)


def memory_projector(schedule: EvolutionSchedule, psi_j, time: int) -> np.ndarray:
    """Schrödinger-picture form at ``time`` of the Heisenberg projector onto ``psi_j``."""
    v = np.asarray(psi_j, dtype=np.complex128)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("cannot build a memory projector from the zero vector")
    u = _propagate(schedule, time, schedule.t_I)
    return u @ pure_density(v / norm) @ dagger(u)
