"""Dense finite-dimensional linear algebra: states, operators, composite spaces.

States and operators are plain complex ``numpy`` arrays. The constructors here
validate their input and hand back read-only copies, so a value that passed
validation cannot be mutated afterwards.

Basis convention: computational basis, tensor products in row-major order with
the leftmost factor most significant (``numpy.kron`` order).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

#: default tolerance for equality comparisons
EQ_TOL = 1e-10
#: default tolerance for structural validation (unitarity, projectors)
STRUCT_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def state_vector(amplitudes, normalized: bool = False, tol: float = EQ_TOL) -> np.ndarray:
    """Validate a ket and return it as a read-only complex vector.

    With ``normalized=True`` the vector must have unit norm within ``tol``.
    """
    psi = np.asarray(amplitudes, dtype=np.complex128)
    if psi.ndim != 1 or psi.size == 0:
        raise ValueError(f"state vector must be 1-d and non-empty, got shape {psi.shape}")
    if normalized and abs(np.linalg.norm(psi) - 1.0) >= tol:
        raise ValueError(f"state vector is not normalized: norm={np.linalg.norm(psi)!r}")
    return _frozen(psi)


def operator(entries) -> np.ndarray:
    m = np.asarray(entries, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"operator must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    return _frozen(m)


def density_operator(entries, tol: float = EQ_TOL) -> np.ndarray:
    """Validate a (possibly unnormalized) density operator.

    Requirements: Hermitian entrywise within ``tol``, eigenvalues >= -tol and a
    positive trace. Trace one is not required; the identity is a valid final
    boundary condition.
    """
    rho = operator(entries)
    if np.max(np.abs(rho - rho.conj().T)) >= tol:
        raise ValueError("density operator is not Hermitian")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -tol:
        raise ValueError(f"density operator has negative eigenvalue {evals.min():.3e}")
    if np.trace(rho).real <= 0:
        raise ValueError("density operator has non-positive trace")
    return rho


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    """|v><v| for a normalized copy of ``vec``."""
    v = np.asarray(vec, dtype=np.complex128)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def pure_density(psi) -> np.ndarray:
    """|psi><psi| without renormalizing."""
    v = np.asarray(psi, dtype=np.complex128)
    return np.outer(v, v.conj())


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor-product space, e.g. ``CompositeSpace((("S", 2), ("F", 2)))``."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        if not factors:
            raise ValueError("composite space needs at least one factor")
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate factor labels in {labels}")
        for label, dim in factors:
            if dim < 1:
                raise ValueError(f"factor {label!r} has non-positive dimension {dim}")
        object.__setattr__(self, "factors", factors)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown factor label {label!r}; space has {self.labels}") from None


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a``'s indices outermost."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def embed(op: np.ndarray, target: str, space: CompositeSpace) -> np.ndarray:
    """Lift ``op`` acting on factor ``target`` to the whole space (identity elsewhere)."""
    op = np.asarray(op, dtype=np.complex128)
    pos = space.position(target)
    dim = space.dims[pos]
    if op.shape != (dim, dim):
        raise ValueError(
            f"operator shape {op.shape} does not match factor {target!r} of dimension {dim}"
        )
    left = int(np.prod(space.dims[:pos], dtype=np.int64))
    right = int(np.prod(space.dims[pos + 1:], dtype=np.int64))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def validate_unitary(op: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    op = np.asarray(op, dtype=np.complex128)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        return False
    err = op.conj().T @ op - np.eye(op.shape[0])
    return bool(np.max(np.abs(err)) < tol)


def validate_projector_set(ops: Sequence[np.ndarray], tol: float = STRUCT_TOL) -> bool:
    """True iff every element is an orthogonal projector and distinct elements
    are mutually orthogonal. Completeness is checked by :func:`is_complete`."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    ops = [np.asarray(p, dtype=np.complex128) for p in ops]
    if not ops:
        raise ValueError("empty projector set")
    shape = ops[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(p.shape != shape for p in ops):
        raise ValueError("projectors must be square and share one dimension")
    for p in ops:
        if np.max(np.abs(p @ p - p)) >= tol or np.max(np.abs(p.conj().T - p)) >= tol:
            return False
    for a in range(len(ops)):
        for b in range(a + 1, len(ops)):
            if np.max(np.abs(ops[a] @ ops[b])) >= tol:
                return False
    return True


def is_complete(ops: Sequence[np.ndarray], tol: float = STRUCT_TOL) -> bool:
    total = sum(np.asarray(p, dtype=np.complex128) for p in ops)
    return bool(np.max(np.abs(total - np.eye(total.shape[0]))) < tol)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_projector_set(
    dim: int, sizes: Sequence[int], rng: np.random.Generator
) -> list[np.ndarray]:
    """Mutually orthogonal projectors of the given ranks in a random basis.

    The set is complete exactly when ``sum(sizes) == dim``.
    """
    if sum(sizes) > dim:
        raise ValueError("total rank exceeds dimension")
    basis = random_unitary(dim, rng)
    out, start = [], 0
    for k in sizes:
        cols = basis[:, start:start + k]
        out.append(cols @ cols.conj().T)
        start += k
    return out


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
