import numpy as np
import pytest

from expsel import lattice, pathsum
from expsel import prescriptions as pr
from expsel.acceptance import random_experiences, random_schedule
from expsel.experience import EvolutionSchedule, ProjectorEvent, probability_schrodinger
from expsel.hilbert import CompositeSpace, dagger, ket, projector, pure_density, random_projector_set

QUBIT = CompositeSpace((("A", 2),))
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
Z = {0: np.diag([1.0, 0.0]), 1: np.diag([0.0, 1.0])}
X_BASIS = {"+": projector(H @ ket(0, 2)), "-": projector(H @ ket(1, 2))}


def test_diagonalizing_basis_commuting_set(rng):
    ops = random_projector_set(6, [2, 1, 3], rng)
    b = lattice.diagonalizing_basis(ops, 6)
    assert np.allclose(dagger(b) @ b, np.eye(6), atol=1e-12)
    for p in ops:
        d = dagger(b) @ p @ b
        assert np.allclose(d, np.diag(np.diag(d)), atol=1e-10)


def test_diagonalizing_basis_rejects_noncommuting():
    with pytest.raises(ValueError, match="commute"):
        lattice.diagonalizing_basis([Z[0], X_BASIS["+"]], 2)


def test_compiled_transfer_product_is_schedule_unitary(rng):
    sched = random_schedule(rng, min_steps=2)
    events = [random_experiences(rng, sched, t) for t in sched.times]
    compiled = lattice.compile_schedule(sched, events)
    k = pathsum.propagator(compiled.model)
    b0, bt = compiled.bases[0], compiled.bases[-1]
    u = np.eye(sched.dim)
    for step in sched.steps:
        u = step.U @ u
    assert np.allclose(bt @ k @ dagger(b0), u, atol=1e-10)


def test_noncommuting_events_on_one_slice_rejected():
    sched = EvolutionSchedule(QUBIT, [(0, 1, H)], pure_density(ket(0, 2)))
    cond = ProjectorEvent.condition(1, X_BASIS["+"])
    with pytest.raises(ValueError, match="commute"):
        lattice.pathsum_probability(sched, cond, ProjectorEvent.experience(1, Z))


def test_pathsum_matches_operator_with_rotated_basis():
    sched = EvolutionSchedule(QUBIT, [(0, 1, H), (1, 2, np.eye(2))], pure_density(ket(0, 2)))
    for exps in (ProjectorEvent.experience(2, Z), ProjectorEvent.experience(1, X_BASIS)):
        a = probability_schrodinger(sched, None, exps)
        b = lattice.pathsum_probability(sched, None, exps)
        assert np.max(np.abs(a.probabilities - b.probabilities)) < 1e-12
    assert np.allclose(
        lattice.pathsum_probability(sched, None, ProjectorEvent.experience(1, X_BASIS)).probabilities,
        [1, 0], atol=1e-12,
    )


@pytest.mark.parametrize("kind", pr.KINDS)
def test_every_prescription_agrees_across_engines(kind):
    sched = EvolutionSchedule(QUBIT, [(0, 1, H), (1, 2, H)], pure_density(ket(0, 2)))
    designated = ProjectorEvent.experience(2, Z)
    aux = () if kind == pr.MINIMAL else (ProjectorEvent.experience(1, Z),)
    outcomes = (0,) if kind == pr.JOINT else ()
    spec = pr.PrescriptionSpec(kind, designated, aux, outcomes)
    a = pr.evaluate(sched, None, spec)
    b = lattice.pathsum_prescription(sched, None, spec)
    assert np.max(np.abs(a.probabilities - b.probabilities)) < 1e-12


def test_engine_rejects_late_condition():
    sched = EvolutionSchedule(QUBIT, [(0, 1, H), (1, 2, H)], pure_density(ket(0, 2)))
    with pytest.raises(ValueError):
        lattice.pathsum_probability(
            sched, ProjectorEvent.condition(2, Z[0]), ProjectorEvent.experience(1, Z)
        )
