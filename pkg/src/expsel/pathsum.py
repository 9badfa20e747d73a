"""Brute-force path sums over a finite lattice of configurations.

A :class:`LatticeModel` is a list of time slices, each with a finite set of
configuration labels, plus a step rule giving the (already exponentiated)
amplitude ``exp(i S_step / hbar)`` for going from one configuration to the
next. Everything here is an exact finite sum over every path; the transfer
matrices are only used to tabulate the step rule before the kernels run.

Large sums are split by the slice-0 configuration. Each partition is computed
independently and the partial sums are folded in ascending partition order,
so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterator, Mapping, Sequence

import numpy as np

from . import _kernels
from .hilbert import density_operator
from .tables import PathCapExceeded, ProbabilityTable, normalize

DEFAULT_PATH_CAP = 10**7


def path_cap() -> int:
    """Enumeration cap, overridable through ``EXPSEL_PATH_CAP``."""
    raw = os.environ.get("EXPSEL_PATH_CAP")
    if raw is None:
        return DEFAULT_PATH_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"EXPSEL_PATH_CAP must be a positive integer, got {raw!r}") from None
    if cap < 1:
        raise ValueError(f"EXPSEL_PATH_CAP must be a positive integer, got {raw!r}")
    return cap


def default_workers() -> int:
    return max(1, int(os.environ.get("EXPSEL_WORKERS", "1")))


@dataclass(frozen=True)
class LatticeModel:
    slice_configs: tuple[tuple[Hashable, ...], ...]
    step_amplitude: Callable[[int, Any, Any], complex] = field(compare=False)

    def __post_init__(self):
        slices = tuple(tuple(s) for s in self.slice_configs)
        if len(slices) < 2:
            raise ValueError("a lattice model needs at least two slices (T >= 1)")
        for t, s in enumerate(slices):
            if not s:
                raise ValueError(f"slice {t} has no configurations")
            if len(set(s)) != len(s):
                raise ValueError(f"slice {t} has duplicate configuration labels")
        object.__setattr__(self, "slice_configs", slices)
        object.__setattr__(
            self, "_index", tuple({q: k for k, q in enumerate(s)} for s in slices)
        )

    @property
    def n_steps(self) -> int:
        return len(self.slice_configs) - 1

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.slice_configs)

    @property
    def n_paths(self) -> int:
        return math.prod(self.sizes)

    def index(self, t: int, config) -> int:
        return self._index[t][config]

    @classmethod
    def from_transfer_matrices(cls, matrices: Sequence, labels: Sequence[Sequence] | None = None):
        """Model whose step ``t`` amplitudes are ``matrices[t][next, prev]``."""
        mats = [np.asarray(m, dtype=np.complex128) for m in matrices]
        if not mats:
            raise ValueError("need at least one transfer matrix")
        if labels is None:
            labels = [tuple(range(mats[0].shape[1]))] + [tuple(range(m.shape[0])) for m in mats]
        labels = [tuple(s) for s in labels]
        index = [{q: k for k, q in enumerate(s)} for s in labels]
        for t, m in enumerate(mats):
            if m.shape != (len(labels[t + 1]), len(labels[t])):
                raise ValueError(f"transfer matrix {t} has shape {m.shape}, slices disagree")

        def step(t, a, b):
            return mats[t][index[t + 1][b], index[t][a]]

        return cls(tuple(labels), step)


@dataclass(frozen=True)
class Path:
    configs: tuple

    def __post_init__(self):
        object.__setattr__(self, "configs", tuple(self.configs))


@dataclass(frozen=True, eq=False)
class SelectionEvent:
    """Weight applied to the configurations of one slice.

    ``weight`` is either a callable ``config -> complex`` or a mapping (absent
    configurations get weight zero). ``sharp=True`` asserts 0/1 values.
    """

    time: int
    weight: Callable[[Any], complex] | Mapping
    sharp: bool = False

    @classmethod
    def keep(cls, time: int, configs) -> "SelectionEvent":
        return cls(time, {q: 1.0 for q in configs}, sharp=True)

    def values(self, model: LatticeModel) -> np.ndarray:
        if not 0 <= self.time <= model.n_steps:
            raise ValueError(f"selection time {self.time} outside slices 0..{model.n_steps}")
        if isinstance(self.weight, Mapping):
            get = lambda q: self.weight.get(q, 0.0)  # noqa: E731
        else:
            get = self.weight
        v = np.array([complex(get(q)) for q in model.slice_configs[self.time]])
        if self.sharp and not np.all((v == 0) | (v == 1)):
            raise ValueError(f"sharp selection at slice {self.time} has non 0/1 weights")
        return v


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    """Factorized boundary operator: ``initial`` on slice 0, ``final`` on slice T.

    ``final=None`` means the identity.
    """

    initial: np.ndarray
    final: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "initial", density_operator(self.initial))
        if self.final is not None:
            object.__setattr__(self, "final", density_operator(self.final))

    def matrices(self, model: LatticeModel) -> tuple[np.ndarray, np.ndarray]:
        n0, nT = model.sizes[0], model.sizes[-1]
        if self.initial.shape != (n0, n0):
            raise ValueError(f"initial boundary has shape {self.initial.shape}, slice 0 has {n0}")
        final = np.eye(nT, dtype=np.complex128) if self.final is None else self.final
        if final.shape != (nT, nT):
            raise ValueError(f"final boundary has shape {final.shape}, slice T has {nT}")
        return np.ascontiguousarray(self.initial), np.ascontiguousarray(final)


def transfer_matrix(model: LatticeModel, t: int) -> np.ndarray:
    """``M[j, i]`` = step amplitude from configuration i at slice t to j at t+1."""
    prev, nxt = model.slice_configs[t], model.slice_configs[t + 1]
    m = np.array([[complex(model.step_amplitude(t, a, b)) for a in prev] for b in nxt])
    if not np.all(np.isfinite(m)):
        raise ValueError(f"step {t} produced non-finite amplitudes")
    return m


def _tables(model: LatticeModel) -> tuple[np.ndarray, np.ndarray]:
    sizes = np.array(model.sizes, dtype=np.int64)
    d = int(sizes.max())
    tables = np.zeros((model.n_steps, d, d), dtype=np.complex128)
    for t in range(model.n_steps):
        m = transfer_matrix(model, t)
        tables[t, : m.shape[0], : m.shape[1]] = m
    return tables, sizes


def _weights(model: LatticeModel, selections: Sequence[SelectionEvent]) -> np.ndarray:
    d = max(model.sizes)
    w = np.zeros((model.n_steps + 1, d), dtype=np.complex128)
    for t, n in enumerate(model.sizes):
        w[t, :n] = 1.0
    # shared slices compose by pointwise multiplication
    for sel in selections:
        v = sel.values(model)
        w[sel.time, : v.size] *= v
    return w


def _check_cap(n: int, cap: int | None, what: str) -> None:
    cap = path_cap() if cap is None else cap
    if n > cap:
        raise PathCapExceeded(f"{what} has {n} terms, exceeding the enumeration cap of {cap}")


def _map_partitions(fn, n: int, workers: int | None) -> list:
    workers = default_workers() if workers is None else workers
    if workers <= 1 or n <= 1:
        return [fn(k) for k in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def enumerate_paths(model: LatticeModel, cap: int | None = None) -> Iterator[Path]:
    """Every path exactly once, lexicographic in configuration indices.

    Raises :class:`PathCapExceeded` up front rather than truncating.
    """
    _check_cap(model.n_paths, cap, "path space")
    for configs in itertools.product(*model.slice_configs):
        yield Path(configs)


def path_amplitude(model: LatticeModel, path: Path) -> complex:
    q = path.configs
    if len(q) != model.n_steps + 1:
        raise ValueError(f"path has {len(q)} configurations, model has {model.n_steps + 1} slices")
    for t, c in enumerate(q):
        if c not in model._index[t]:
            raise ValueError(f"configuration {c!r} is not on slice {t}")
    amp = 1.0 + 0.0j
    for t in range(model.n_steps):
        amp *= complex(model.step_amplitude(t, q[t], q[t + 1]))
    return amp


def propagator(
    model: LatticeModel,
    selections: Sequence[SelectionEvent] = (),
    *,
    cap: int | None = None,
    workers: int | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """Sum of selected path amplitudes, ``K[q_T, q_0]``, by exhaustive enumeration."""
    _check_cap(model.n_paths, cap, "path space")
    kern = _kernels.backend(backend)
    tables, sizes = _tables(model)
    weights = _weights(model, selections)
    cols = _map_partitions(
        lambda q0: kern.path_sum_row(tables, sizes, weights, q0), model.sizes[0], workers
    )
    return np.stack(cols, axis=1)


def double_path_functional(
    model: LatticeModel,
    boundary: BoundaryCondition,
    selections: Sequence[SelectionEvent] = (),
    *,
    cap: int | None = None,
    workers: int | None = None,
    backend: str | None = None,
) -> complex:
    """Doubled path sum over pairs (q, q').

    Each pair contributes ``amp(q) conj(amp(q')) rho_I[q_0, q'_0]
    rho_F[q'_T, q_T]`` with the same selections applied in both branches
    (conjugated in the primed one).
    """
    n = model.n_paths
    _check_cap(n * n, cap, "doubled path space")
    kern = _kernels.backend(backend)
    rho_i, rho_f = boundary.matrices(model)
    tables, sizes = _tables(model)
    weights = _weights(model, selections)
    amps, first, last = kern.path_amplitudes(tables, sizes, weights)
    block = n // model.sizes[0]

    def partial(q0):
        return kern.double_sum_block(amps, first, last, rho_i, rho_f, q0 * block, (q0 + 1) * block)

    total = 0.0 + 0.0j
    for part in _map_partitions(partial, model.sizes[0], workers):
        total += part
    return complex(total)


def minimal_probability(
    model: LatticeModel,
    boundary: BoundaryCondition,
    condition: Sequence[SelectionEvent],
    experiences: Mapping[Hashable, Sequence[SelectionEvent]],
    **kwargs,
) -> ProbabilityTable:
    """Select for the condition and one experience at a time, then normalize.

    Raises ``ConditionUnreachable`` when every experience has zero weight and
    ``IllPosedSelection`` when a weight comes out complex or negative.
    """
    if not experiences:
        raise ValueError("at least one experience label is required")
    labels = list(experiences)
    weights = [
        double_path_functional(model, boundary, [*condition, *experiences[label]], **kwargs)
        for label in labels
    ]
    return normalize(labels, weights)
