import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gptverify import convex, nogo
from gptverify import linalg as la
from gptverify.decoherence import (
    DecoherenceCandidate,
    dephasing_map,
    identity_candidate,
    postclassical_counterexample,
    unitary_candidate,
)
from gptverify.errors import PreconditionError
from gptverify.theory import QUANTUM, ProcessRep, bell_state, compose_par, compose_seq, identity, max_mixed

import oracles


def q(d):
    return QUANTUM.system(d)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_local_invariance_identity_and_dephasing(d):
    assert nogo.verify_local_invariance(identity_candidate(QUANTUM, q(d)), d).passed
    assert nogo.verify_local_invariance(dephasing_map(d), d, mode="subtheory").passed
    bad = nogo.verify_local_invariance(dephasing_map(d), d, expected="fail")
    assert not bad.passed and bad.ok
    assert bad.witness["state"] == "bell"


def test_local_invariance_dephasing_residual_on_bell():
    # dephasing one side of the Bell state removes the off-diagonal coherences
    d = 2
    b = oracles.bell_density(d)
    out = b.copy()
    for i in range(d):
        for j in range(d):
            if i != j:
                out[i * d:(i + 1) * d, j * d:(j + 1) * d] = 0
    c = nogo.verify_local_invariance(dephasing_map(d), d, n_samples=0, expected="fail")
    expected = la.residual(QUANTUM.state_from_matrix(out, (q(d), q(d))).vector, bell_state(d).vector)
    assert abs(c.residual - expected) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 5])
def test_bell_marginals(d):
    assert nogo.verify_bell_marginals(d).passed
    pert = nogo.verify_bell_marginals(d, perturb=0.1, expected="fail")
    assert not pert.passed and pert.ok
    with pytest.raises(ValueError):
        nogo.verify_bell_marginals(1)


@pytest.mark.parametrize("d", [2, 3])
def test_mu_invariance(d):
    rep = nogo.verify_mu_invariance(d, 30, seed=d)
    assert rep.passed, rep.table()
    # T is conjugation by the transpose of the unitary
    assert rep[f"mu_invariance.d{d}.purification_route"].witness["T_minus_transpose_conjugation"] < 1e-8


@pytest.mark.parametrize("d", [2, 3, 4])
def test_any_state_decomposition(d):
    rep = nogo.verify_any_state_decomposition(d, 30, seed=d)
    assert rep.passed, rep.table()


def test_any_state_decomposition_against_oracle(rng):
    d = 3
    ket = oracles.haar(d, rng)[:, 0]
    phi = np.outer(ket, ket.conj())
    sigma = (np.eye(d) / d - phi / d) / (1 - 1 / d)
    assert np.linalg.eigvalsh(sigma).min() > -1e-12
    got = convex.decompose_against(max_mixed(q(d)), QUANTUM.state_from_matrix(phi, q(d)), 1 / d)
    assert la.residual(QUANTUM.operator(got), sigma) < 1e-12


@pytest.mark.parametrize("d", [2, 3])
def test_steering(d):
    rep = nogo.verify_steering(d, 10, seed=d)
    assert rep.passed, rep.table()


def test_steering_plus_gives_minus():
    plus = QUANTUM.state_from_ket(np.array([1, 1]) / np.sqrt(2), q(2))
    sigma = convex.decompose_against(max_mixed(q(2)), plus, 0.5)
    minus = QUANTUM.state_from_ket(np.array([1, -1]) / np.sqrt(2), q(2))
    assert la.residual(sigma.vector, minus.vector) < 1e-12
    e = nogo.steering_effect(plus)
    steered = compose_seq(bell_state(2), compose_par(identity(q(2)), e))
    assert la.residual(2 * steered.vector, plus.vector) < 1e-12


def test_steering_effect_of_complex_state_uses_transpose():
    ket = np.array([1, 1j]) / np.sqrt(2)
    phi = QUANTUM.state_from_ket(ket, q(2))
    e = nogo.steering_effect(phi)
    # Tr(phi^T phi) = |<psi*|psi>|^2 = 0 for this ket
    assert abs((e.matrix @ phi.vector)[0]) < 1e-12
    steered = compose_seq(bell_state(2), compose_par(identity(q(2)), e))
    assert la.residual(2 * steered.vector, phi.vector) < 1e-12


@pytest.mark.parametrize("d", [2, 3])
def test_hyperdec_identity_accepts_identity(d):
    rep = nogo.verify_hyperdec_identity(identity_candidate(QUANTUM, q(d)), d, 5, seed=1)
    assert rep.passed, rep.table()


def test_spanning_pure_states_span():
    for d in (2, 3):
        vs = np.array([s.vector for s in nogo.spanning_pure_states(d)])
        assert len(vs) == d * d and np.linalg.matrix_rank(vs) == d * d


def test_hyperdec_identity_rejections():
    with pytest.raises(PreconditionError) as exc:
        nogo.verify_hyperdec_identity(dephasing_map(2), 2)
    assert exc.value.item == "local_invariance"
    with pytest.raises(PreconditionError) as exc:
        nogo.verify_hyperdec_identity(unitary_candidate(la.random_unitary(2, 3), q(2)), 2)
    assert exc.value.item == "idempotent"
    scaled = DecoherenceCandidate(QUANTUM.id, {q(2): ProcessRep(0.5 * np.eye(4), (q(2),), (q(2),))}, "half")
    with pytest.raises(PreconditionError) as exc:
        nogo.verify_hyperdec_identity(scaled, 2)
    assert exc.value.item == "causal"


def test_rejection_check():
    assert nogo.rejection_check(dephasing_map(2), 2, "local_invariance").passed
    wrong = nogo.rejection_check(dephasing_map(2), 2, "idempotent")
    assert not wrong.passed and wrong.witness["failed_item"] == "local_invariance"
    assert not nogo.rejection_check(identity_candidate(QUANTUM, q(2)), 2, "causal").passed


@pytest.mark.parametrize("d", [2, 3, 4])
def test_twirl_matches_oracle(d, rng):
    tw = nogo.twirl_channel(d)
    for _ in range(5):
        rho = oracles.random_rho(d, rng)
        got = QUANTUM.apply(tw, rho)
        assert la.residual(got, oracles.pauli_twirl(rho)) < 1e-12
        assert la.residual(got, np.eye(d) / d) < 1e-12


def test_weyl_operators_are_unitary_and_orthogonal():
    ws = nogo.weyl_operators(3)
    gram = np.array([[np.trace(a.conj().T @ b) for b in ws] for a in ws])
    assert la.residual(gram, 3 * np.eye(9)) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_info_counting_checks(d):
    rep = nogo.verify_info_counting(d, seed=d, n_samples=10, n_effects=30, witness=False)
    assert rep.passed, rep.table()
    assert rep[f"info_counting.d{d}.pstar"].witness["pstar"] == pytest.approx(1 / d)


def test_postclassical_witness():
    rep = nogo.postclassical_witness(2)
    assert rep.passed, rep.table()
    w = rep["info_counting.postclassical_n2.pstar"].witness
    assert w["p"] == pytest.approx(0.5) and w["pstar"] == pytest.approx(0.25)
    assert rep["info_counting.postclassical_n2.info_dim"].witness == {"parent": 4, "subtheory": 2}
    assert rep["info_counting.postclassical_n2.witness_distinguishable"].witness["n_states"] == 3


def test_postclassical_witness_states_are_the_expected_ones():
    rep = nogo.postclassical_witness(2)
    states = np.array(rep["info_counting.postclassical_n2.witness_distinguishable"].witness["states"])
    c = postclassical_counterexample(2, [0.5, 0.5])
    d10 = c.map(c.systems[0]).matrix @ np.eye(4)[2]
    np.testing.assert_allclose(states, [np.eye(4)[0], np.eye(4)[1], d10], atol=1e-12)


def test_suite_small_is_ok_and_deterministic():
    a = nogo.run_nogo_suite([2], seed=5, n_samples=4)
    b = nogo.run_nogo_suite([2], seed=5, n_samples=4)
    assert a.ok, a.table()
    assert not a.passed  # negative controls are part of the report
    assert a.to_json_lines() == b.to_json_lines()
    names = [c.name for c in a]
    assert names == sorted(names) and len(set(names)) == len(names)
    assert any(c.expected == "fail" for c in a)


def test_suite_rejects_bad_dims():
    with pytest.raises(ValueError):
        nogo.run_nogo_suite([])
    with pytest.raises(ValueError):
        nogo.run_nogo_suite([1, 2])


@settings(max_examples=10)
@given(st.integers(2, 4), st.integers(0, 2**31))
def test_random_pure_state_weight_is_one_over_d(d, seed):
    phi = QUANTUM.state_from_ket(la.random_ket(d, np.random.default_rng(seed)), q(d))
    assert abs(convex.max_weight(QUANTUM, max_mixed(q(d)), phi) - 1 / d) < 1e-10
