import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gptverify import diagram as dg
from gptverify import linalg as la
from gptverify.errors import (
    ArityError,
    CycleError,
    DanglingPort,
    DslSyntaxError,
    OpenDiagramError,
    TypeMismatch,
    UnknownIdentifier,
)
from gptverify.theory import CLASSICAL, QUANTUM, compose_par, compose_seq, identity, max_mixed

Q2, Q3 = QUANTUM.system(2), QUANTUM.system(3)
seeds = st.integers(0, 2**32 - 1)


def node(i, p, label=""):
    return dg.Node(i, p, label)


def test_bell_marginal_example():
    d = dg.parse("bell(2) ; (id(q2) * discard(q2))")
    ins, outs = dg.typecheck(d)
    assert ins == () and outs == (Q2,)
    assert la.residual(dg.evaluate(d).vector, max_mixed(Q2).vector) < 1e-12


def test_closed_diagram_example():
    d = dg.parse("state0(q2) ; discard(q2)")
    assert dg.typecheck(d) == ((), ())
    assert abs(dg.probability(d) - 1) < 1e-12


def test_seam_type_mismatch():
    with pytest.raises(TypeMismatch) as exc:
        dg.parse("bell(2) ; id(q3)")
    assert (exc.value.line, exc.value.col) == (1, 9)
    assert "q3" in str(exc.value)


@pytest.mark.parametrize("src,p", [
    ("state0(q2) ; effect0(q2)", 1.0),
    ("state0(q2) ; effect1(q2)", 0.0),
    ("plus(q2) ; effect0(q2)", 0.5),
    ("state1(c3) ; effect1(c3)", 1.0),
    ("maxmix(c2) ; stochastic(c2, 0.9, 0.2, 0.1, 0.8) ; effect0(c2)", 0.55),
    ("plus(q2) ; unitary(q2, H) ; effect0(q2)", 1.0),
    ("plus(q2) ; dephase(q2) ; unitary(q2, H) ; effect0(q2)", 0.5),
    ("(state1(q2) * state0(q2)) ; swap(q2, q2) ; (effect0(q2) * effect1(q2))", 1.0),
    ("(state1(q2) * state0(q2)) ; unitary(q2*q2, CNOT) ; (effect1(q2) * effect1(q2))", 1.0),
    ("maxmix(gbit) ; discard(gbit)", 1.0),
])
def test_probabilities(src, p):
    assert abs(dg.probability(dg.parse(src)) - p) < 1e-12


def test_probability_clamped_and_open_error():
    assert dg.probability(dg.parse("state0(q2) ; effect1(q2)"), clamp=True) == 0.0
    with pytest.raises(OpenDiagramError):
        dg.probability(dg.parse("bell(2)"))


def test_single_node_evaluates_to_itself(rng):
    f = QUANTUM.sample_transformation(Q2, Q3, rng)
    assert la.residual(dg.evaluate(dg.Diagram.single(f)).matrix, f.matrix) == 0


def figure_processes(rng):
    # f: A -> B C, g: C A -> (), h: D -> A, i: () -> D with A=q2, B=q3, C=q2, D=q3
    f = QUANTUM.sample_transformation(Q2, (Q3, Q2), rng)
    g = QUANTUM.sample_effect((Q2, Q2), rng)
    h = QUANTUM.sample_transformation(Q3, Q2, rng)
    i = QUANTUM.sample_state(Q3, rng)
    return f, g, h, i


def test_figure_example_typechecks_and_matches_algebra(rng):
    f, g, h, i = figure_processes(rng)
    d = dg.Diagram(
        [node(0, f, "f"), node(1, g, "g"), node(2, h, "h"), node(3, i, "i")],
        [dg.Wire((3, 0), (2, 0)), dg.Wire((0, 1), (1, 0)), dg.Wire((2, 0), (1, 1))],
        free_inputs=[(0, 0)],
        free_outputs=[(0, 0)],
    )
    assert dg.typecheck(d) == ((Q2,), (Q3,))
    algebra = compose_seq(
        compose_seq(compose_par(identity(Q2), i), compose_par(f, h)),
        compose_par(identity(Q3), g),
    )
    assert la.residual(dg.evaluate(d).matrix, algebra.matrix) < 1e-12
    dsl = dg.parse("(id(q2) * i) ; (f * h) ; (id(q3) * g)", {"f": f, "g": g, "h": h, "i": i})
    assert la.residual(dg.evaluate(dsl).matrix, algebra.matrix) < 1e-12


def test_self_loop_is_cycle(rng):
    f = QUANTUM.sample_transformation(Q2, Q2, rng)
    d = dg.Diagram([node(0, f)], [dg.Wire((0, 0), (0, 0))])
    with pytest.raises(CycleError):
        dg.typecheck(d)


def test_two_node_cycle(rng):
    f = QUANTUM.sample_transformation(Q2, Q2, rng)
    d = dg.Diagram([node(0, f), node(1, f)], [dg.Wire((0, 0), (1, 0)), dg.Wire((1, 0), (0, 0))])
    with pytest.raises(CycleError):
        dg.typecheck(d)


def test_two_wires_into_one_port():
    s = QUANTUM.max_mixed(Q2)
    e = QUANTUM.unit_effect(Q2)
    d = dg.Diagram([node(0, s), node(1, s), node(2, e)], [dg.Wire((0, 0), (2, 0)), dg.Wire((1, 0), (2, 0))])
    with pytest.raises(DanglingPort):
        dg.typecheck(d)


def test_unconnected_port():
    d = dg.Diagram([node(0, QUANTUM.max_mixed(Q2))])
    with pytest.raises(DanglingPort):
        dg.typecheck(d)


def test_wire_type_mismatch():
    d = dg.Diagram([node(0, QUANTUM.max_mixed(Q2)), node(1, QUANTUM.unit_effect(Q3))], [dg.Wire((0, 0), (1, 0))])
    with pytest.raises(TypeMismatch):
        dg.typecheck(d)


def six_node_diagram(rng):
    a = QUANTUM.sample_state(Q2, rng)
    b = QUANTUM.sample_state((Q2, Q3), rng)
    f = QUANTUM.sample_transformation((Q2, Q2), (Q3, Q2), rng)
    g = QUANTUM.sample_transformation(Q3, Q3, rng)
    h = QUANTUM.sample_transformation((Q3, Q3), Q2, rng)
    e = QUANTUM.sample_effect(Q2, rng)
    nodes = [node(0, a), node(1, b), node(2, f), node(3, g), node(4, h), node(5, e)]
    wires = [dg.Wire((0, 0), (2, 1)), dg.Wire((1, 0), (2, 0)), dg.Wire((1, 1), (3, 0)),
             dg.Wire((2, 0), (4, 1)), dg.Wire((3, 0), (4, 0)), dg.Wire((2, 1), (5, 0))]
    return dg.Diagram(nodes, wires, [], [(4, 0)])


@given(seeds, seeds)
def test_evaluation_order_does_not_matter(s1, s2):
    d = six_node_diagram(np.random.default_rng(0))
    a = dg.evaluate(d, seed=s1)
    b = dg.evaluate(d, seed=s2)
    assert la.residual(a.matrix, b.matrix) < 1e-12


def test_orders_really_differ():
    d = six_node_diagram(np.random.default_rng(0))
    orders = {tuple(dg.topological_order(d, np.random.default_rng(s))) for s in range(30)}
    assert len(orders) > 1


@given(seeds)
def test_interchange_law_in_dsl(seed):
    r = np.random.default_rng(seed)
    b = {
        "f": QUANTUM.sample_transformation(Q2, Q3, r),
        "k": QUANTUM.sample_transformation(Q3, Q2, r),
        "u": QUANTUM.sample_state(Q2, r),
        "e": QUANTUM.sample_state(Q3, r),
    }
    # u, e prepare; f, k act: (u * e) ; (f * k) == (u ; f) * (e ; k)
    lhs = dg.evaluate(dg.parse("(u * e) ; (f * k)", b))
    rhs = dg.evaluate(dg.parse("(u ; f) * (e ; k)", b))
    assert la.residual(lhs.matrix, rhs.matrix) < 1e-12


@given(seeds)
def test_tomography_with_spanning_effects(seed):
    r = np.random.default_rng(seed)
    s1 = QUANTUM.sample_state(Q2, r)
    s2 = QUANTUM.sample_state(Q2, r)
    basis = la.herm_basis(2).elements
    effs = [QUANTUM.effect_from_matrix((np.eye(2) + b) / 2, Q2) for b in basis]

    def probs(s):
        return np.array([dg.probability(dg.parse("s ; e", {"s": s, "e": e})) for e in effs])

    same = probs(s1) - probs(s1)
    assert np.abs(same).max() < 1e-10
    differ = np.abs(probs(s1) - probs(s2)).max() > 1e-10
    assert differ == (la.residual(s1.vector, s2.vector) > 1e-10)


@given(seeds, st.floats(0, 1))
def test_probability_is_convex(seed, lam):
    r = np.random.default_rng(seed)
    s1, s2 = QUANTUM.sample_state(Q3, r), QUANTUM.sample_state(Q3, r)
    e = QUANTUM.sample_effect(Q3, r)
    mix = QUANTUM.state(lam * s1.vector + (1 - lam) * s2.vector, Q3)
    p = lambda s: dg.probability(dg.parse("s ; e", {"s": s, "e": e}))  # noqa: E731
    assert abs(p(mix) - lam * p(s1) - (1 - lam) * p(s2)) < 1e-12


def test_let_comments_and_newlines():
    src = """
# prepare a plus state
let p = plus(q2)

let m = (
    id(q2)
    ; unitary(q2, H)
)
p ; m ; effect0(q2)   # back to |0>
"""
    assert abs(dg.probability(dg.parse(src)) - 1) < 1e-12


def test_let_reuse_instantiates_fresh_nodes():
    d = dg.parse("let s = state0(q2)\n(s * s) ; (effect0(q2) * effect0(q2))")
    assert len(d.nodes) == 4
    assert abs(dg.probability(d) - 1) < 1e-12


@pytest.mark.parametrize("src,err,loc", [
    ("foo", UnknownIdentifier, (1, 1)),
    ("state0(q2) ;\n  effect9(q2)", UnknownIdentifier, (2, 3)),
    ("id(q2", DslSyntaxError, (1, 6)),
    ("id(q2))", DslSyntaxError, (1, 7)),
    ("bell(2, 3)", ArityError, (1, 9)),
    ("id()", ArityError, (1, 1)),
    ("discard", ArityError, (1, 8)),
    ("state0(z5)", UnknownIdentifier, (1, 8)),
    ("dephase(c2)", TypeMismatch, (1, 1)),
    ("unitary(q3, H)", TypeMismatch, (1, 1)),
    ("stochastic(c2, 1, 0)", ArityError, (1, 1)),
    ("state0(q2) $ effect0(q2)", DslSyntaxError, (1, 12)),
    ("let = id(q2)\nid(q2)", DslSyntaxError, (1, 5)),
    ("let id = id(q2)\nid(q2)", DslSyntaxError, (1, 5)),
    ("# nothing\n", DslSyntaxError, (2, 1)),
])
def test_diagnostics(src, err, loc):
    with pytest.raises(err) as exc:
        dg.parse(src, filename="t.gpt")
    assert (exc.value.line, exc.value.col) == loc
    assert exc.value.format().startswith(f"t.gpt:{loc[0]}:{loc[1]}: ")


def test_parse_file_and_json_export(tmp_path):
    path = tmp_path / "bell_marginal.gpt"
    path.write_text("bell(2) ; (id(q2) * discard(q2))\n", encoding="utf-8")
    p = dg.evaluate(dg.parse_file(path))
    data = json.loads(dg.dumps_result(p))
    assert data["outputs"] == ["q2"] and data["inputs"] == []
    assert np.allclose(np.array(data["matrix"]).ravel(), max_mixed(Q2).vector)
    closed = json.loads(dg.dumps_result(dg.evaluate(dg.parse("plus(q2) ; effect0(q2)"))))
    assert closed["probability"] == 0.5


def test_builtins_match_direct_constructions():
    zero = dg.evaluate(dg.parse("state0(c3)"))
    assert la.residual(zero.vector, CLASSICAL.point_mass(0, CLASSICAL.system(3)).vector) == 0
    u = dg.evaluate(dg.parse("unitary(q2, 5)"))
    assert la.residual(u.matrix, QUANTUM.unitary_channel(la.random_unitary(2, 5), Q2).matrix) == 0
