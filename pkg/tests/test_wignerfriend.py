import numpy as np
import pytest

from expsel import lattice
from expsel import wignerfriend as wf
from expsel.hilbert import ket, validate_projector_set, validate_unitary
from expsel.tables import ConditionUnreachable


def assert_table_normalized(table):
    p = np.asarray(table.probabilities)
    assert abs(p.sum() - 1.0) < 1e-12
    assert p.min() >= 0.0 and p.max() <= 1.0


def bell(k):
    """|00>+|11>, |00>-|11>, |01>+|10>, |01>-|10> (normalized)."""
    a, b = [(0, 3), (0, 3), (1, 2), (1, 2)][k]
    sign = 1 if k in (0, 2) else -1
    return (ket(a, 4) + sign * ket(b, 4)) / np.sqrt(2)


def test_u_takes_psi0_to_psi1(scn):
    assert np.allclose(scn.U @ scn.psi0, scn.psi1, atol=1e-14)
    assert np.allclose(scn.psi1, np.kron(bell(0), wf.W))


def test_v_takes_psi1_to_psi2(scn):
    assert np.allclose(scn.V @ scn.psi1, scn.psi2, atol=1e-14)
    assert max(wf.scenario_checks(scn).values()) < 1e-12


def test_alpha_beta_at_theta_zero():
    scn = wf.build_scenario(0.0, 1.1)
    assert scn.alphas == pytest.approx((1.0, 0.0))
    assert abs(scn.betas[0]) < 1e-15 and scn.betas[1] == pytest.approx(1.0)


def test_alpha_phase_convention():
    theta, phi = 0.6, 0.9
    scn = wf.build_scenario(theta, phi)
    assert scn.alphas[0] == pytest.approx(np.cos(theta))
    assert scn.alphas[1] == pytest.approx(-np.exp(-1j * phi) * np.sin(theta))
    assert abs(np.vdot(scn.zero_W, scn.one_W)) < 1e-15


def test_v_on_bell_partner_swaps_record():
    # V |Phi->|w> = |Phi->|1>_W: the orthogonal Bell states get the other W state
    scn = wf.build_scenario(0.5, 0.2)
    out = scn.V @ np.kron(bell(1), wf.W)
    assert np.allclose(out, np.kron(bell(1), scn.one_W), atol=1e-14)


@pytest.mark.parametrize("theta,phi", [(0.0, 0.0), (0.4, 0.7), (np.pi / 2, 3.0), (1.1, 5.5)])
def test_scenario_operators_are_unitary(theta, phi):
    scn = wf.build_scenario(theta, phi)
    assert validate_unitary(scn.U, 1e-10) and validate_unitary(scn.V, 1e-10)
    assert validate_projector_set(list(wf.wigner_projectors(scn).values()))


def test_completion_choice_does_not_change_tables():
    # V sees the completion only through the projector onto its span, 1 - |Phi><Phi|
    c = np.cos(0.3)
    s = np.sin(0.3)
    rotated = (c * bell(1) + s * bell(2), -s * bell(1) + c * bell(2), 1j * bell(3))
    a = wf.build_scenario(0.8, 0.3)
    b = wf.build_scenario(0.8, 0.3, completion=rotated)
    assert np.allclose(a.V, b.V, atol=1e-14)
    for t, i in [(1, 0), (2, 0), (2, 1)]:
        ta, tb = wf.wigner_table(a, t, i), wf.wigner_table(b, t, i)
        assert np.allclose(ta.probabilities, tb.probabilities, atol=1e-12)


def test_nonunitary_completion_rejected():
    bad = (bell(1), bell(1), bell(3))
    with pytest.raises(ValueError, match="not unitary"):
        wf.build_scenario(0.4, 0.7, completion=bad)


@pytest.mark.parametrize("theta", [0.0, 0.3, np.pi / 4, 1.2])
def test_wigner_t2_table(theta):
    scn = wf.build_scenario(theta, 2.0)
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    t0 = wf.wigner_table(scn, 2, 0)
    assert_table_normalized(t0)
    assert np.allclose(t0.probabilities, [c2, s2], atol=1e-10)
    if theta > 0:
        t1 = wf.wigner_table(scn, 2, 1)
        assert np.allclose(t1.probabilities, [s2, c2], atol=1e-10)


@pytest.mark.parametrize("i", [0, 1])
def test_wigner_t1_table_is_delta(i):
    scn = wf.build_scenario(0.7, 0.1)
    table = wf.wigner_table(scn, 1, i)
    expected = [1.0, 0.0] if i == 0 else [0.0, 1.0]
    assert np.allclose(table.probabilities, expected, atol=1e-10)


def test_wigner_t1_unreachable_where_alpha_vanishes():
    with pytest.raises(ConditionUnreachable):
        wf.wigner_table(wf.build_scenario(np.pi / 2, 0.0), 1, 0)
    with pytest.raises(ConditionUnreachable):
        wf.wigner_table(wf.build_scenario(0.0, 0.0), 1, 1)


def test_friend_tables(scn):
    assert np.allclose(wf.friend_table(scn, 1).probabilities, [0.5, 0.5], atol=1e-12)
    for i in (0, 1):
        assert np.allclose(wf.friend_table(scn, 2, i).probabilities, [0.5, 0.5], atol=1e-12)


def test_friend_t2_by_hand(scn):
    # R_j at t=1 leaves |jj>|w>; V maps it to (|Phi>|0_W> +- |Phi->|1_W>)/sqrt2,
    # where |jj> = (|Phi> +- |Phi->)/sqrt2; R_k then finds each |kk> with weight 1/2
    for j in (0, 1):
        sign = 1 if j == 0 else -1
        vec = (np.kron(bell(0), scn.zero_W) + sign * np.kron(bell(1), scn.one_W)) / np.sqrt(2)
        assert np.allclose(scn.V @ np.kron(ket(3 * j, 4), wf.W), vec, atol=1e-14)
        weights = [np.linalg.norm(wf.friend_projectors()[k] @ vec) ** 2 for k in (0, 1)]
        assert np.allclose(weights, [0.5, 0.5], atol=1e-14)


def test_friend_table_argument_checks(scn):
    with pytest.raises(ValueError):
        wf.friend_table(scn, 1, 0)
    with pytest.raises(ValueError):
        wf.friend_table(scn, 2)
    with pytest.raises(ValueError):
        wf.wigner_table(scn, 3, 0)
    with pytest.raises(ValueError):
        wf.wigner_table(scn, 2, 2)


@pytest.mark.parametrize("engine", ["operator", "pathsum"])
def test_collapse_comparator(scn, engine):
    if engine == "operator":
        minimal, collapsed = wf.collapse_comparator(scn)
    else:
        specs = wf.comparator_specs(scn)
        minimal, collapsed = (lattice.pathsum_prescription(scn.schedule, None, s) for s in specs)
    assert minimal.labels == ("Phi", "perp")
    assert np.allclose(minimal.probabilities, [1, 0], atol=1e-12)
    assert np.allclose(collapsed.probabilities, [0.5, 0.5], atol=1e-12)


def test_pathsum_engine_matches_operator(scn):
    for t, i in [(1, 0), (2, 0), (2, 1)]:
        a = wf.wigner_table(scn, t, i)
        b = wf.wigner_table(scn, t, i, engine="pathsum")
        assert np.max(np.abs(a.probabilities - b.probabilities)) < 1e-10


def test_grid_shape():
    pts = wf.grid(3, 4)
    assert len(pts) == 12
    assert pts[0] == (0.0, 0.0)
    assert pts[-1][0] == pytest.approx(np.pi / 2)
    assert pts[1][1] == pytest.approx(np.pi / 2)
    assert wf.grid(1, 1) == [(0.0, 0.0)]
    with pytest.raises(ValueError):
        wf.grid(0, 3)
