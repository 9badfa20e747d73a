"""Acceptance criteria, runnable from ``expsel selftest`` and from pytest.

Every criterion is a function ``(ctx) -> (passed, detail)``. The detail text
is deterministic (no timings), so repeated runs produce identical reports.
Randomized suites use fixed seeds.
"""

from __future__ import annotations

import hashlib
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from . import _kernels, experience, lattice, pathsum, prescriptions, wignerfriend
from .experience import EvolutionSchedule, MemoryChain, ProjectorEvent
from .hilbert import CompositeSpace, pure_density, random_density, random_projector_set, random_unitary
from .tables import ConditionUnreachable, ProbabilityTable

GRID = 9

_SPACES = [(2,), (3,), (2, 2), (2, 3), (4, 2), (2, 2, 2), (4, 4), (2, 2, 2, 2), (2, 2, 3), (16,)]


@dataclass
class Context:
    workers: int = 1
    tables: list = field(default_factory=list)

    def keep(self, table: ProbabilityTable) -> ProbabilityTable:
        self.tables.append(table)
        return table


# ---------------------------------------------------------------- generators

def random_schedule(rng: np.random.Generator, min_steps: int = 1, pure: bool = False) -> EvolutionSchedule:
    dims = _SPACES[rng.integers(len(_SPACES))]
    space = CompositeSpace(tuple((f"f{k}", d) for k, d in enumerate(dims)))
    d = space.dim
    n_steps = int(rng.integers(min_steps, 5))
    steps, t = [], int(rng.integers(-2, 3))
    for _ in range(n_steps):
        dt = int(rng.integers(1, 3))
        steps.append((t, t + dt, random_unitary(d, rng)))
        t += dt
    if pure:
        psi = random_unitary(d, rng)[:, 0]
        rho_i = pure_density(psi)
    else:
        rho_i = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    rho_f = None if rng.random() < 0.5 else random_density(d, rng) * d
    return EvolutionSchedule(space, tuple(steps), rho_i, rho_f)


def random_ranks(rng: np.random.Generator, d: int, complete: bool) -> list[int]:
    total = d if complete else int(rng.integers(1, d + 1))
    n = int(rng.integers(1, total + 1))
    cuts = np.sort(rng.choice(np.arange(1, total), size=n - 1, replace=False)) if n > 1 else []
    edges = [0, *cuts, total]
    return [int(b - a) for a, b in zip(edges[:-1], edges[1:])]


def random_experiences(rng, schedule, time, complete=None) -> ProjectorEvent:
    complete = bool(rng.random() < 0.5) if complete is None else complete
    ops = random_projector_set(schedule.dim, random_ranks(rng, schedule.dim, complete), rng)
    return ProjectorEvent.experience(time, {k: p for k, p in enumerate(ops)})


def random_condition(rng, schedule, time) -> ProjectorEvent:
    d = schedule.dim
    (p,) = random_projector_set(d, [int(rng.integers(1, d + 1))], rng)
    return ProjectorEvent.condition(time, p)


def random_lattice(rng: np.random.Generator, sizes) -> pathsum.LatticeModel:
    mats = []
    for a, b in zip(sizes[:-1], sizes[1:]):
        g = rng.standard_normal((b, a)) + 1j * rng.standard_normal((b, a))
        mats.append(g / np.sqrt(2 * max(a, b)))
    return pathsum.LatticeModel.from_transfer_matrices(mats)


def _lattice_suite(rng: np.random.Generator) -> list[tuple[int, ...]]:
    shapes = [(2, 2), (2, 3, 2), (5, 1, 5), (3, 3, 3, 3), (10, 10, 10, 10, 10, 10), (1, 7, 1)]
    while len(shapes) < 20:
        n = int(rng.integers(2, 8))
        sizes = tuple(int(s) for s in rng.integers(1, 9, size=n))
        if np.prod(sizes) <= 10**6:
            shapes.append(sizes)
    return shapes


def _transfer_product(model: pathsum.LatticeModel) -> np.ndarray:
    k = np.eye(model.sizes[0], dtype=np.complex128)
    for t in range(model.n_steps):
        k = pathsum.transfer_matrix(model, t) @ k
    return k


# ---------------------------------------------------------------- analytic targets

def alpha_sq(theta: float, i: int) -> float:
    """|<w|i>|^2 straight from the parametrization of Wigner's basis."""
    return float(np.cos(theta) ** 2 if i == 0 else np.sin(theta) ** 2)


def beta_sq(theta: float, i: int) -> float:
    return float(np.sin(theta) ** 2 if i == 0 else np.cos(theta) ** 2)


def _grid():
    return wignerfriend.grid(GRID, GRID)


# ---------------------------------------------------------------- criteria

def c0_psi2_compatibility(ctx):
    worst = 0.0
    for th, ph in _grid():
        scn = wignerfriend.build_scenario(th, ph)
        worst = max(worst, max(wignerfriend.scenario_checks(scn).values()))
    return worst < 1e-10, f"max residual of V U psi0 = psi2 and unitarity {worst:.1e} (tol 1e-10)"


def _wigner_grid(ctx, t, target):
    worst, skipped, bad_skip = 0.0, 0, 0
    for th, ph in _grid():
        scn = wignerfriend.build_scenario(th, ph)
        for i in (0, 1):
            try:
                table = ctx.keep(wignerfriend.wigner_table(scn, t, i))
            except ConditionUnreachable:
                skipped += 1
                bad_skip += alpha_sq(th, i) >= 1e-14
                continue
            expected = target(th, i)
            worst = max(worst, float(np.max(np.abs(table.probabilities - expected))))
    return worst, skipped, bad_skip


def c1_wigner_t1(ctx):
    worst, skipped, bad = _wigner_grid(ctx, 1, lambda th, i: np.eye(2)[i])
    ok = worst < 1e-12 and bad == 0
    return ok, f"max |p(j|i) - delta_ij| = {worst:.1e} (tol 1e-12); {skipped} undefined points"


def c2_wigner_t2(ctx):
    worst, skipped, bad = _wigner_grid(
        ctx, 2, lambda th, i: np.array([alpha_sq(th, i), beta_sq(th, i)])
    )
    ok = worst < 1e-10 and bad == 0
    return ok, f"max |p - (|alpha|^2, |beta|^2)| = {worst:.1e} (tol 1e-10); {skipped} undefined points"


def c3_picture_equivalence(ctx):
    rng = np.random.default_rng(3)
    worst, trials = 0.0, 0
    while trials < 120:
        sch = random_schedule(rng)
        times = sch.times
        t_c = int(rng.choice(times))
        t_e = int(rng.choice([t for t in times if t >= t_c]))
        cond = random_condition(rng, sch, t_c)
        exps = random_experiences(rng, sch, t_e)
        a = ctx.keep(experience.probability_schrodinger(sch, cond, exps))
        b = ctx.keep(experience.probability_heisenberg(sch, cond, exps))
        worst = max(worst, float(np.max(np.abs(a.probabilities - b.probabilities))))
        trials += 1
    return worst < 1e-10, f"{trials} random schedules, max entry difference {worst:.1e} (tol 1e-10)"


def c4_pathsum_oracle(ctx):
    rng = np.random.default_rng(4)
    worst, largest = 0.0, 0
    shapes = _lattice_suite(rng)
    for sizes in shapes:
        model = random_lattice(rng, sizes)
        k = pathsum.propagator(model, workers=ctx.workers)
        worst = max(worst, float(np.max(np.abs(k - _transfer_product(model)))))
        largest = max(largest, model.n_paths)
    return worst < 1e-9, (
        f"{len(shapes)} lattices up to {largest} paths, max entry difference {worst:.1e} (tol 1e-9)"
    )


def _cross_tables(scn, engine, **kwargs):
    out = []
    for t in (1, 2):
        for i in (0, 1):
            try:
                out.append(wignerfriend.wigner_table(scn, t, i, engine=engine, **kwargs))
            except ConditionUnreachable:
                out.append(None)
    out.append(wignerfriend.friend_table(scn, 1, engine=engine, **kwargs))
    for i in (0, 1):
        out.append(wignerfriend.friend_table(scn, 2, i, engine=engine, **kwargs))
    return out


def c5_cross_formulation(ctx):
    worst, compared, mismatched = 0.0, 0, 0
    for th, ph in _grid():
        scn = wignerfriend.build_scenario(th, ph)
        ops = _cross_tables(scn, "operator")
        paths = _cross_tables(scn, "pathsum", workers=ctx.workers)
        for a, b in zip(ops, paths):
            if (a is None) != (b is None):
                mismatched += 1
                continue
            if a is None:
                continue
            ctx.keep(a)
            ctx.keep(b)
            worst = max(worst, float(np.max(np.abs(a.probabilities - b.probabilities))))
            compared += 1
    ok = worst < 1e-9 and mismatched == 0
    return ok, f"{compared} tables, max entry difference {worst:.1e} (tol 1e-9); {mismatched} reachability mismatches"


def c6_coherent_sum(ctx):
    rng = np.random.default_rng(6)
    worst, trials = 0.0, 0
    while trials < 60:
        sch = random_schedule(rng, min_steps=2)
        times = sch.times
        t_d = int(rng.choice(times[1:]))
        cond = random_condition(rng, sch, int(rng.choice([t for t in times if t <= t_d])))
        others = [t for t in times if t != t_d]
        n_aux = int(rng.integers(1, min(2, len(others)) + 1))
        aux_times = rng.choice(others, size=n_aux, replace=False)
        aux = tuple(random_experiences(rng, sch, int(t), complete=True) for t in aux_times)
        designated = random_experiences(rng, sch, t_d)
        minimal = prescriptions.PrescriptionSpec(prescriptions.MINIMAL, designated)
        coherent = prescriptions.PrescriptionSpec(prescriptions.COHERENT_SUM, designated, aux)
        a = ctx.keep(prescriptions.evaluate(sch, cond, minimal))
        b = ctx.keep(prescriptions.evaluate(sch, cond, coherent))
        worst = max(worst, float(np.max(np.abs(a.probabilities - b.probabilities))))
        trials += 1
    return worst < 1e-10, f"{trials} random scenarios, max entry difference {worst:.1e} (tol 1e-10)"


def c7_interference_witness(ctx):
    worst = 0.0
    for th, ph in _grid():
        minimal, collapsed = wignerfriend.collapse_comparator(wignerfriend.build_scenario(th, ph))
        ctx.keep(minimal)
        ctx.keep(collapsed)
        tv = prescriptions.compare(minimal, collapsed).total_variation
        worst = max(
            worst,
            float(np.max(np.abs(minimal.probabilities - [1.0, 0.0]))),
            float(np.max(np.abs(collapsed.probabilities - [0.5, 0.5]))),
            abs(tv - 0.5),
        )
    return worst < 1e-10, f"minimal (1,0), incoherent (1/2,1/2), TV 1/2: max deviation {worst:.1e} (tol 1e-10)"


def c8_memory_chain(ctx):
    rng = np.random.default_rng(8)
    worst, trials = 0.0, 0
    while trials < 60:
        sch = random_schedule(rng, pure=True)
        psi = np.linalg.eigh(sch.rho_I)[1][:, -1]
        t1p, t1, t2p, t2 = sorted(int(t) for t in rng.choice(sch.times, size=4))
        d = sch.dim
        (p,) = random_projector_set(d, [int(rng.integers(1, d + 1))], rng)
        (q,) = random_projector_set(d, [int(rng.integers(1, d + 1))], rng)
        chain = MemoryChain(p, t1p, q, t1, np.eye(d), t2p)
        psi_j = experience.memory_condition(sch, psi, chain)
        if np.linalg.norm(psi_j) < 1e-6:
            continue
        exps = random_experiences(rng, sch, t2)
        a = ctx.keep(experience.chained_probability(sch, chain, exps))
        substituted = EvolutionSchedule(sch.space, sch.steps, pure_density(psi_j / np.linalg.norm(psi_j)), sch.rho_F)
        b = ctx.keep(experience.probability_heisenberg(substituted, None, exps))
        worst = max(worst, float(np.max(np.abs(a.probabilities - b.probabilities))))
        trials += 1
    return worst < 1e-10, f"{trials} random pure scenarios, max entry difference {worst:.1e} (tol 1e-10)"


def c9_normalization(ctx):
    bad = 0
    for table in ctx.tables:
        p = np.asarray(table.probabilities)
        if abs(p.sum() - 1.0) >= 1e-12 or p.min() < 0.0 or p.max() > 1.0:
            bad += 1
    sch = wignerfriend.build_scenario(0.3, 0.2).schedule
    zero = ProjectorEvent.condition(0, np.zeros((8, 8)))
    exps = ProjectorEvent.experience(1, wignerfriend.friend_projectors())
    fired = []
    for fn in (
        lambda: experience.probability_schrodinger(sch, zero, exps),
        lambda: experience.probability_heisenberg(sch, zero, exps),
        lambda: lattice.pathsum_probability(sch, zero, exps, workers=ctx.workers),
    ):
        try:
            fn()
            fired.append(False)
        except ConditionUnreachable:
            fired.append(True)
    ok = bad == 0 and all(fired) and len(ctx.tables) > 0
    return ok, (
        f"{len(ctx.tables)} tables checked, {bad} violations; "
        f"zero-weight condition raises unreachable in {sum(fired)}/3 engines"
    )


def determinism_digest(workers: int) -> str:
    """Hash of a fixed battery of worker-partitioned path sums."""
    rng = np.random.default_rng(10)
    h = hashlib.sha256()
    for sizes in [(6, 5, 4, 6), (8, 3, 3, 3, 8), (5, 5, 5, 5, 5, 5)]:
        model = random_lattice(rng, sizes)
        h.update(pathsum.propagator(model, workers=workers).tobytes())
    model = random_lattice(rng, (6, 4, 4, 6))
    rho = random_density(6, rng)
    value = pathsum.double_path_functional(model, pathsum.BoundaryCondition(rho), workers=workers)
    h.update(np.array([value]).tobytes())
    for th, ph in [(0.0, 0.0), (0.4, 0.7), (1.2, 5.0)]:
        scn = wignerfriend.build_scenario(th, ph)
        for table in _cross_tables(scn, "pathsum", workers=workers):
            if table is not None:
                h.update(np.asarray(table.probabilities).tobytes())
    return h.hexdigest()


def c10_determinism(ctx):
    digests = {(w, rep): determinism_digest(w) for w in (1, 4, 8) for rep in (0, 1)}
    ok = len(set(digests.values())) == 1
    return ok, f"{len(digests)} runs over workers 1/4/8, {len(set(digests.values()))} distinct digest(s)"


@dataclass(frozen=True)
class Criterion:
    key: str
    title: str
    limit_s: float
    check: Callable


CRITERIA = (
    Criterion("C0", "psi2-compatibility (V U psi0 = psi2)", 1.0, c0_psi2_compatibility),
    Criterion("C1", "wigner-t1 delta table", 1.0, c1_wigner_t1),
    Criterion("C2", "wigner-t2 alpha/beta table", 1.0, c2_wigner_t2),
    Criterion("C3", "picture equivalence", 10.0, c3_picture_equivalence),
    Criterion("C4", "path-sum vs transfer-matrix oracle", 30.0, c4_pathsum_oracle),
    Criterion("C5", "cross-formulation (pathsum vs operator)", 30.0, c5_cross_formulation),
    Criterion("C6", "coherent-sum identity", 10.0, c6_coherent_sum),
    Criterion("C7", "interference witness", 1.0, c7_interference_witness),
    Criterion("C8", "memory-chain identity", 10.0, c8_memory_chain),
    Criterion("C9", "normalization", 1.0, c9_normalization),
    Criterion("C10", "determinism across worker counts", 120.0, c10_determinism),
)


def run_criterion(crit: Criterion, ctx: Context) -> tuple[bool, str]:
    start = time.perf_counter()
    try:
        ok, detail = crit.check(ctx)
    except Exception as exc:  # report, do not abort the suite
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    in_time = time.perf_counter() - start < crit.limit_s
    status = "PASS" if ok and in_time else "FAIL"
    runtime = f"runtime<{crit.limit_s:g}s {'ok' if in_time else 'EXCEEDED'}"
    return ok and in_time, f"{status} {crit.key:<3} {crit.title}: {detail}; {runtime}"


def run_all(workers: int = 1, stream: TextIO = sys.stdout) -> bool:
    ctx = Context(workers=workers)
    print(f"expsel selftest (kernels={_kernels.backend().name})", file=stream)
    failed = []
    for crit in CRITERIA:
        ok, line = run_criterion(crit, ctx)
        print(line, file=stream)
        if not ok:
            failed.append(crit.key)
    summary = "all criteria passed" if not failed else "failed: " + ", ".join(failed)
    print(summary, file=stream)
    return not failed
