"""Wigner's-friend scenario on S (system) x F (Friend) x W (Wigner), qubits each.

Computational basis of W is ``{|w>, |w_perp>}``. Wigner's experience basis is
rotated by two angles::

    |0>_W =  cos(theta) |w> + exp(i phi) sin(theta) |w_perp>
    |1>_W = -exp(-i phi) sin(theta) |w> + cos(theta) |w_perp>

so ``alpha_i = <w|i>`` and ``beta_i = <w_perp|i>``. Friend starts in
``|f> = |0>_F`` and ``U`` is the controlled copy S -> F. ``V`` is defined on
the Bell basis of S x F: it writes ``|0>_W`` / ``|1>_W`` depending on whether
SF is in ``|Phi>`` and whether W started in ``|w>`` or ``|w_perp>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lattice
from .experience import EvolutionSchedule, ProjectorEvent, probability_schrodinger
from .hilbert import EQ_TOL, CompositeSpace, embed, ket, projector, pure_density, validate_unitary
from .prescriptions import INCOHERENT_SUM, MINIMAL, PrescriptionSpec, evaluate
from .tables import ProbabilityTable

SPACE = CompositeSpace((("S", 2), ("F", 2), ("W", 2)))
SQRT2 = np.sqrt(2.0)

PHI = np.array([1, 0, 0, 1], dtype=np.complex128) / SQRT2
# the other three Bell vectors; any orthonormal completion gives the same V
BELL_COMPLETION = (
    np.array([1, 0, 0, -1], dtype=np.complex128) / SQRT2,
    np.array([0, 1, 1, 0], dtype=np.complex128) / SQRT2,
    np.array([0, 1, -1, 0], dtype=np.complex128) / SQRT2,
)

W = ket(0, 2)
W_PERP = ket(1, 2)
F0 = ket(0, 2)


def w_basis(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    zero = np.cos(theta) * W + np.exp(1j * phi) * np.sin(theta) * W_PERP
    one = -np.exp(-1j * phi) * np.sin(theta) * W + np.cos(theta) * W_PERP
    return zero, one


def controlled_copy() -> np.ndarray:
    """CNOT with S as control and F as target, identity on W."""
    cnot = np.eye(4, dtype=np.complex128)[[0, 1, 3, 2]]
    return np.kron(cnot, np.eye(2))


def build_V(theta: float, phi: float, completion: Sequence[np.ndarray] = BELL_COMPLETION) -> np.ndarray:
    zero, one = w_basis(theta, phi)

    def term(sf, w_out, w_in):
        return np.outer(np.kron(sf, w_out), np.kron(sf, w_in).conj())

    v = term(PHI, zero, W) + term(PHI, one, W_PERP)
    for b in completion:
        v = v + term(b, one, W) + term(b, zero, W_PERP)
    return v


@dataclass(frozen=True, eq=False)
class WignerFriendScenario:
    theta: float
    phi: float
    U: np.ndarray
    V: np.ndarray
    psi0: np.ndarray
    schedule: EvolutionSchedule = field(repr=False)

    @property
    def zero_W(self) -> np.ndarray:
        return w_basis(self.theta, self.phi)[0]

    @property
    def one_W(self) -> np.ndarray:
        return w_basis(self.theta, self.phi)[1]

    @property
    def alphas(self) -> tuple[complex, complex]:
        return complex(self.zero_W[0]), complex(self.one_W[0])

    @property
    def betas(self) -> tuple[complex, complex]:
        return complex(self.zero_W[1]), complex(self.one_W[1])

    @property
    def psi1(self) -> np.ndarray:
        """Expected state after ``U``: ``|Phi> |w>``."""
        return np.kron(PHI, W)

    @property
    def psi2(self) -> np.ndarray:
        """Expected state after ``V``: ``|Phi> |0>_W``."""
        return np.kron(PHI, self.zero_W)


def initial_state() -> np.ndarray:
    s = (ket(0, 2) + ket(1, 2)) / SQRT2
    return np.kron(np.kron(s, F0), W)


def build_scenario(
    theta: float, phi: float, completion: Sequence[np.ndarray] = BELL_COMPLETION
) -> WignerFriendScenario:
    u = controlled_copy()
    v = build_V(theta, phi, completion)
    for name, op in (("U", u), ("V", v)):
        if not validate_unitary(op, EQ_TOL):
            raise ValueError(f"scenario step {name} is not unitary")
    psi0 = initial_state()
    schedule = EvolutionSchedule(SPACE, ((0, 1, u), (1, 2, v)), pure_density(psi0))
    return WignerFriendScenario(float(theta), float(phi), u, v, psi0, schedule)


def scenario_checks(scn: WignerFriendScenario) -> dict[str, float]:
    """Residuals of the scenario's defining relations (all should be ~0)."""
    zero, one = scn.zero_W, scn.one_W
    return {
        "w_basis_orthogonality": float(abs(np.vdot(zero, one))),
        "U_unitarity": float(np.max(np.abs(scn.U.conj().T @ scn.U - np.eye(8)))),
        "V_unitarity": float(np.max(np.abs(scn.V.conj().T @ scn.V - np.eye(8)))),
        "U_psi0_to_psi1": float(np.max(np.abs(scn.U @ scn.psi0 - scn.psi1))),
        "V_psi1_to_psi2": float(np.max(np.abs(scn.V @ scn.psi1 - scn.psi2))),
    }


def w_projectors(theta: float, phi: float) -> dict[int, np.ndarray]:
    """Wigner's experience projectors ``1_SF x |i><i|_W``."""
    zero, one = w_basis(theta, phi)
    return {0: embed(projector(zero), "W", SPACE), 1: embed(projector(one), "W", SPACE)}


def wigner_projectors(scn: WignerFriendScenario) -> dict[int, np.ndarray]:
    return w_projectors(scn.theta, scn.phi)


def friend_projectors() -> dict[int, np.ndarray]:
    return {j: embed(projector(ket(j, 2)), "F", SPACE) for j in (0, 1)}


def phi_test() -> dict[str, np.ndarray]:
    p = np.kron(projector(PHI), np.eye(2))
    return {"Phi": p, "perp": np.eye(8) - p}


def _table(scn, condition, experiences, engine, **kwargs):
    if engine == "operator":
        return probability_schrodinger(scn.schedule, condition, experiences)
    if engine == "pathsum":
        return lattice.pathsum_probability(scn.schedule, condition, experiences, **kwargs)
    raise ValueError(f"unknown engine {engine!r}")


def _check_t(t):
    if t not in (1, 2):
        raise ValueError(f"t must be 1 or 2, got {t!r}")


def wigner_table(
    scn: WignerFriendScenario, t: int, i: int, engine: str = "operator", **kwargs
) -> ProbabilityTable:
    """Wigner's table over j at time ``t``, remembering experience ``i`` at ``t - 1``."""
    _check_t(t)
    if i not in (0, 1):
        raise ValueError(f"prior label must be 0 or 1, got {i!r}")
    q = wigner_projectors(scn)
    condition = ProjectorEvent.condition(t - 1, q[i], label=i)
    return _table(scn, condition, ProjectorEvent.experience(t, q), engine, **kwargs)


def friend_table(
    scn: WignerFriendScenario, t: int, i: int | None = None, engine: str = "operator", **kwargs
) -> ProbabilityTable:
    """Friend's table at ``t``; at ``t=1`` there is no prior label (identity condition)."""
    _check_t(t)
    r = friend_projectors()
    if t == 1:
        if i is not None:
            raise ValueError("friend_table at t=1 takes no prior label")
        condition = None
    else:
        if i not in (0, 1):
            raise ValueError(f"prior label must be 0 or 1, got {i!r}")
        condition = ProjectorEvent.condition(1, r[i], label=i)
    return _table(scn, condition, ProjectorEvent.experience(t, r), engine, **kwargs)


def comparator_specs(scn: WignerFriendScenario) -> tuple[PrescriptionSpec, PrescriptionSpec]:
    designated = ProjectorEvent.experience(2, phi_test())
    friend = ProjectorEvent.experience(1, friend_projectors())
    return (
        PrescriptionSpec(MINIMAL, designated),
        PrescriptionSpec(INCOHERENT_SUM, designated, (friend,)),
    )


def collapse_comparator(scn: WignerFriendScenario) -> tuple[ProbabilityTable, ProbabilityTable]:
    """Wigner's Phi-test table: minimal prescription vs. Friend decohered at t=1."""
    minimal, collapsed = comparator_specs(scn)
    return evaluate(scn.schedule, None, minimal), evaluate(scn.schedule, None, collapsed)


def grid(theta_steps: int, phi_steps: int) -> list[tuple[float, float]]:
    """Row-major (theta, phi) points: theta over [0, pi/2], phi over [0, 2 pi)."""
    if theta_steps < 1 or phi_steps < 1:
        raise ValueError("grid needs at least one step per axis")
    thetas = np.linspace(0.0, np.pi / 2, theta_steps) if theta_steps > 1 else np.array([0.0])
    phis = 2 * np.pi * np.arange(phi_steps) / phi_steps
    return [(float(th), float(ph)) for th in thetas for ph in phis]
