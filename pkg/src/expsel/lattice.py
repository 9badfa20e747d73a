"""Compile an operator schedule into a lattice model for the path-sum engine.

Each step boundary becomes a slice. A slice's configurations are the vectors
of an orthonormal basis in which every projector used at that time is
diagonal; the projectors then become sharp 0/1 selections, and each unitary
step becomes the transfer matrix ``B_{t+1}^dagger U B_t``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import pathsum
from .experience import EvolutionSchedule, ProjectorEvent
from .hilbert import STRUCT_TOL, dagger
from .pathsum import BoundaryCondition, LatticeModel, SelectionEvent
from .prescriptions import COHERENT_SUM, INCOHERENT_SUM, JOINT, MINIMAL, PrescriptionSpec
from .tables import ProbabilityTable, normalize


def diagonalizing_basis(projectors: Sequence[np.ndarray], dim: int) -> np.ndarray:
    """Orthonormal basis (columns) diagonalizing a set of commuting projectors.

    Eigenvectors of ``sum_k 2^k P_k`` work: distinct joint eigenspaces get
    distinct eigenvalues because the coefficients are powers of two.
    """
    if not projectors:
        return np.eye(dim, dtype=np.complex128)
    h = sum((2.0**k) * np.asarray(p) for k, p in enumerate(projectors))
    _, basis = np.linalg.eigh(0.5 * (h + dagger(h)))
    for k, p in enumerate(projectors):
        d = dagger(basis) @ p @ basis
        off = d - np.diag(np.diag(d))
        if np.max(np.abs(off)) > STRUCT_TOL:
            raise ValueError(f"projector {k} does not commute with the others on its slice")
    return basis


@dataclass(frozen=True, eq=False)
class CompiledSchedule:
    model: LatticeModel
    boundary: BoundaryCondition
    times: tuple[int, ...]
    bases: tuple[np.ndarray, ...]

    def selection(self, time: int, projector: np.ndarray) -> SelectionEvent:
        t = self.times.index(time)
        b = self.bases[t]
        diag = np.real(np.diag(dagger(b) @ projector @ b))
        if np.max(np.abs(diag * (1 - diag))) > STRUCT_TOL:
            raise ValueError(f"projector at t={time} is not diagonal in the slice basis")
        keep = [q for q, v in zip(self.model.slice_configs[t], diag) if v > 0.5]
        return SelectionEvent.keep(t, keep)

    def weighted_selection(self, time: int, operator: np.ndarray) -> SelectionEvent:
        """Unsharp selection from the diagonal of a diagonal operator."""
        t = self.times.index(time)
        b = self.bases[t]
        diag = np.diag(dagger(b) @ operator @ b)
        configs = self.model.slice_configs[t]
        return SelectionEvent(t, {q: complex(v) for q, v in zip(configs, diag)})


def compile_schedule(schedule: EvolutionSchedule, events: Sequence[ProjectorEvent]) -> CompiledSchedule:
    times = schedule.times
    per_slice: list[list[np.ndarray]] = [[] for _ in times]
    for ev in events:
        schedule.check_time(ev.time)
        per_slice[times.index(ev.time)].extend(ev.ops)
    bases = [diagonalizing_basis(ops, schedule.dim) for ops in per_slice]
    mats = [dagger(bases[k + 1]) @ step.U @ bases[k] for k, step in enumerate(schedule.steps)]
    model = LatticeModel.from_transfer_matrices(mats)
    rho_i = dagger(bases[0]) @ schedule.rho_I @ bases[0]
    rho_f = dagger(bases[-1]) @ schedule.rho_F @ bases[-1]
    boundary = BoundaryCondition(0.5 * (rho_i + dagger(rho_i)), 0.5 * (rho_f + dagger(rho_f)))
    return CompiledSchedule(model, boundary, times, tuple(bases))


def _condition(schedule, condition):
    if condition is None:
        return ProjectorEvent.condition(schedule.t_I, np.eye(schedule.dim))
    return condition


def pathsum_probability(
    schedule: EvolutionSchedule,
    condition: ProjectorEvent | None,
    experiences: ProjectorEvent,
    **kwargs,
) -> ProbabilityTable:
    """Minimal-prescription table computed by the brute-force doubled path sum."""
    condition = _condition(schedule, condition)
    if condition.time > experiences.time:
        raise ValueError("condition is later than the experiences")
    compiled = compile_schedule(schedule, [condition, experiences])
    cond_sel = [compiled.selection(condition.time, condition.ops[0])]
    exp_sel = {
        label: [compiled.selection(experiences.time, q)] for label, q in experiences.projectors
    }
    return pathsum.minimal_probability(compiled.model, compiled.boundary, cond_sel, exp_sel, **kwargs)


def pathsum_prescription(
    schedule: EvolutionSchedule,
    condition: ProjectorEvent | None,
    spec: PrescriptionSpec,
    **kwargs,
) -> ProbabilityTable:
    """Any prescription kind evaluated with the path-sum engine."""
    condition = _condition(schedule, condition)
    if spec.kind == MINIMAL:
        return pathsum_probability(schedule, condition, spec.designated, **kwargs)
    compiled = compile_schedule(schedule, [condition, spec.designated, *spec.auxiliary])
    base = [compiled.selection(condition.time, condition.ops[0])]
    aux = spec.auxiliary
    weights = []
    for q in spec.designated.ops:
        designated = compiled.selection(spec.designated.time, q)
        if spec.kind == JOINT:
            sel = base + [compiled.selection(ev.time, ev[o]) for ev, o in zip(aux, spec.outcomes)]
            w = pathsum.double_path_functional(compiled.model, compiled.boundary, sel + [designated], **kwargs)
        elif spec.kind == COHERENT_SUM:
            # amplitude sum over outcome tuples factorizes into per-event weight sums
            sel = base + [compiled.weighted_selection(ev.time, sum(ev.ops)) for ev in aux]
            w = pathsum.double_path_functional(compiled.model, compiled.boundary, sel + [designated], **kwargs)
        elif spec.kind == INCOHERENT_SUM:
            w = 0.0 + 0.0j
            for ops in itertools.product(*(ev.ops for ev in aux)):
                sel = base + [compiled.selection(ev.time, op) for ev, op in zip(aux, ops)]
                w += pathsum.double_path_functional(
                    compiled.model, compiled.boundary, sel + [designated], **kwargs
                )
        else:  # pragma: no cover - guarded by PrescriptionSpec
            raise ValueError(spec.kind)
        weights.append(w)
    return normalize(spec.designated.labels, weights)
