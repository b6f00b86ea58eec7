import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gptverify import decoherence as dc
from gptverify import linalg as la
from gptverify.errors import PreconditionError, ValidationError
from gptverify.theory import CLASSICAL, QUANTUM, compose_seq, joint_type

from oracles import dephase, random_rho

seeds = st.integers(0, 2**32 - 1)


def fingerprint(rep):
    return [c.passed for c in rep]


@given(seeds, st.integers(2, 4))
def test_dephasing_matches_diagonal_oracle(seed, d):
    rho = random_rho(d, np.random.default_rng(seed))
    t = QUANTUM.system(d)
    out = QUANTUM.operator(compose_seq(QUANTUM.state_from_matrix(rho, t), dc.dephasing_map(d).map()))
    assert la.residual(out, dephase(rho)) < 1e-12


def test_dephasing_examples():
    t = QUANTUM.system(2)
    plus = QUANTUM.state_from_ket(np.ones(2) / np.sqrt(2), t)
    out = compose_seq(plus, dc.dephasing_map(2).map())
    assert la.residual(QUANTUM.operator(out), np.eye(2) / 2) < 1e-12
    diag = QUANTUM.state_from_matrix(np.diag([0.3, 0.7]), t)
    assert la.residual(compose_seq(diag, dc.dephasing_map(2).map()).vector, diag.vector) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 4])
def test_dephasing_from_environment(d):
    assert la.residual(dc.environment_dephasing(d).matrix, dc.dephasing_map(d).map().matrix) < 1e-10


def test_dephasing_in_other_basis():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    c = dc.dephasing_map(2, h)
    plus = QUANTUM.state_from_ket(h[:, 0], QUANTUM.system(2))
    assert la.residual(compose_seq(plus, c.map()).vector, plus.vector) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_dephasing_passes_all_four(d):
    rep = dc.check_candidate(dc.dephasing_map(d))
    assert len(rep) == 4
    assert rep.passed
    assert all(c.residual < 1e-10 for c in rep)


def test_identity_candidate_is_trivial_and_passes():
    c = dc.identity_candidate(QUANTUM, QUANTUM.system(2))
    assert dc.check_candidate(c).passed
    assert dc.classify(c) == "trivial"
    sub = dc.build_subtheory(c)
    assert sub.effective_dim == 4


def test_classify_nontrivial():
    assert dc.classify(dc.dephasing_map(2)) == "nontrivial"
    assert dc.classify(dc.postclassical_counterexample(2, [0.5, 0.5])) == "nontrivial"


def test_postclassical_map_action():
    c = dc.postclassical_counterexample(2, [0.5, 0.5])
    t = c.systems[0]
    for a in range(2):
        for b in range(2):
            out = compose_seq(CLASSICAL.point_mass(2 * a + b, t), c.map())
            want = np.kron(np.eye(2)[a], [0.5, 0.5])
            assert la.residual(out.vector, want) < 1e-15


@pytest.mark.parametrize("cand", [
    dc.postclassical_counterexample(2, [0.5, 0.5]),
    dc.postclassical_counterexample(3, [0.2, 0.3, 0.5]),
    dc.postquantum_counterexample(2, np.eye(2) / 2),
])
def test_counterexample_fingerprint(cand):
    rep = dc.check_candidate(cand)
    assert fingerprint(rep) == [True, True, False, False]
    wit = rep.checks[2].witness
    assert wit["decomposition_residual"] < 1e-9
    assert len(wit["decomposition"].components) >= 2


def test_counterexample_info_dimensions():
    rep = dc.check_candidate(dc.postclassical_counterexample(2, [0.5, 0.5]))
    assert rep.checks[3].witness == {"parent": 4, "subtheory": 2}
    rep = dc.check_candidate(dc.postquantum_counterexample(2, np.eye(2) / 2))
    assert rep.checks[3].witness == {"parent": 4, "subtheory": 2}


def test_postquantum_witness_is_basis_state_times_q():
    rep = dc.check_candidate(dc.postquantum_counterexample(2, np.eye(2) / 2))
    t = QUANTUM.system(2)
    want = QUANTUM.state_from_matrix(np.kron(np.diag([1.0, 0.0]), np.eye(2) / 2), (t, t))
    assert la.residual(rep.checks[2].witness["state"], want.vector) < 1e-9


def test_postquantum_images_are_products_with_q(rng):
    q = random_rho(2, rng)
    c = dc.postquantum_counterexample(2, q)
    t = QUANTUM.system(2)
    rho = QUANTUM.sample_state((t, t), rng)
    out = QUANTUM.operator(compose_seq(rho, c.map()))
    marg = la.partial_trace(QUANTUM.operator(rho), [2, 2], [0])
    assert la.residual(out, np.kron(marg, q)) < 1e-12


def test_counterexample_validation():
    with pytest.raises(ValidationError):
        dc.postclassical_counterexample(2, [1.0, 0.0])
    with pytest.raises(ValidationError):
        dc.postclassical_counterexample(2, [0.7, 0.7])
    with pytest.raises(ValidationError):
        dc.postquantum_counterexample(2, np.diag([1.0, 0.0]))
    with pytest.raises(ValidationError):
        dc.postquantum_counterexample(2, np.diag([1.5, -0.5]))


def test_non_idempotent_candidate():
    u = la.random_unitary(2, 3)
    c = dc.unitary_candidate(u, QUANTUM.system(2))
    rep = dc.check_candidate(c)
    assert rep.checks[0].passed and not rep.checks[1].passed
    with pytest.raises(PreconditionError) as exc:
        dc.build_subtheory(c)
    assert exc.value.item == "idempotent"


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_dephasing_subtheory_is_classical(d):
    sub = dc.build_subtheory(dc.dephasing_map(d))
    assert sub.effective_dim == d
    iso = sub.classical_isomorphism()
    assert iso.classical_type == CLASSICAL.system(d)
    res = iso.residuals(20, seed=d)
    assert max(res.values()) < 1e-10
    ext = sub.extreme_points()
    assert len(ext) == d
    for x in ext:
        rho = QUANTUM.operator(x)
        assert la.residual(rho, np.diag(np.diag(rho))) < 1e-10


def test_postclassical_subtheory_is_classical():
    sub = dc.build_subtheory(dc.postclassical_counterexample(2, [0.5, 0.5]))
    iso = sub.classical_isomorphism()
    assert iso.classical_type == CLASSICAL.system(2)
    assert max(iso.residuals(20, seed=0).values()) < 1e-10


def test_subtheory_fixed_point_and_closure(rng):
    c = dc.dephasing_map(3)
    sub = dc.build_subtheory(c)
    for _ in range(10):
        s = sub.state(QUANTUM.sample_state(QUANTUM.system(3), rng))
        assert sub.contains_state(s)
        assert sub.fixed_residual(s) < 1e-10
    assert sub.closure_residual(20, seed=1) < 1e-9
    raw = QUANTUM.sample_state(QUANTUM.system(3), rng)
    assert not sub.contains_state(raw)


def test_subtheory_purity_is_exact():
    sub = dc.build_subtheory(dc.dephasing_map(2))
    t = QUANTUM.system(2)
    zero = sub.state(QUANTUM.state_from_ket([1, 0], t))
    assert sub.purity(zero).pure
    mixed = sub.state(QUANTUM.state_from_matrix(np.diag([0.3, 0.7]), t))
    pur = sub.purity(mixed)
    assert not pur.pure
    assert pur.witness.residual(mixed) < 1e-12
    assert all(sub.contains_state(x) for x in pur.witness.components)
    # in the postclassical image a sub-theory-pure state is parent-mixed
    sub2 = dc.build_subtheory(dc.postclassical_counterexample(2, [0.5, 0.5]))
    s = sub2.state(CLASSICAL.point_mass(0, sub2.system))
    assert sub2.purity(s).pure


@given(seeds)
def test_projected_states_descend_to_image_extremes(seed):
    sub = dc.build_subtheory(dc.dephasing_map(3))
    s = QUANTUM.sample_state(QUANTUM.system(3), np.random.default_rng(seed))
    x = sub.descend(s)
    rho = QUANTUM.operator(x)
    assert sub.purity(x).pure
    assert sorted(np.round(np.diag(rho).real, 9)) == [0, 0, 1]


def test_candidate_json_round_trip():
    c = dc.postclassical_counterexample(2, [0.5, 0.5])
    data = json.loads(json.dumps({"candidate": {"system": "c2*c2", "matrix": c.map().matrix.tolist()}}))
    back = dc.DecoherenceCandidate.from_json(data)
    assert back.systems[0] == joint_type([CLASSICAL.system(2)] * 2)
    assert la.residual(back.map().matrix, c.map().matrix) == 0
    with pytest.raises(ValidationError):
        q2, q3 = QUANTUM.system(2), QUANTUM.system(3)
        dc.DecoherenceCandidate("quantum", {q2: QUANTUM.sample_transformation(q2, q3, np.random.default_rng(0))})
