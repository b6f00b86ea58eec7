"""Numerical certification of the no-hyperdecoherence argument on quantum instances.

Each ``verify_*`` function replays one step of the argument on concrete
matrices and returns named checks with residuals.  Negative controls are
checks whose ``expected`` status is ``"fail"``; a report is ``ok`` when every
check lands on its expected status.
"""
from __future__ import annotations

import numpy as np

from . import convex
from . import linalg as la
from .decoherence import (
    DecoherenceCandidate,
    check_candidate,
    dephasing_map,
    identity_candidate,
    idempotence_residual,
    postclassical_counterexample,
    postquantum_counterexample,
    unitary_candidate,
)
from .errors import PreconditionError
from .report import Check, VerificationReport
from .theory import (
    CLASSICAL,
    GBIT,
    QUANTUM,
    bell_state,
    causality_residual,
    check_purification_principle,
    compose_par,
    compose_seq,
    connect_purifications,
    identity,
    joint_type,
    permutation,
    purify,
)

CONSTRUCTION_TOL = 1e-9
RECOVERED_TOL = 1e-8
EXACT_TOL = 1e-12


def _q(d):
    return QUANTUM.system(d)


def _mu(d):
    return QUANTUM.max_mixed(_q(d))


def _pure(d, rng):
    return QUANTUM.state_from_ket(la.random_ket(d, rng), _q(d))


def _prob(e, s) -> float:
    return float((e.matrix @ s.vector)[0])


def _unitary_to(ket) -> np.ndarray:
    """A unitary whose first column is ``ket``."""
    d = len(ket)
    m = np.eye(d, dtype=complex)
    m[:, 0] = ket
    # put a nonzero column of the identity aside so the rest completes a basis
    k = int(np.argmax(np.abs(ket)))
    if k != 0:
        m[:, k] = np.eye(d)[:, 0]
    q, r = np.linalg.qr(m)
    return q * (r[0, 0] / abs(r[0, 0]))


# ---------------------------------------------------------------------------
# main argument
# ---------------------------------------------------------------------------


def verify_local_invariance(candidate: DecoherenceCandidate, d: int | None = None, n_samples: int = 20,
                            seed=42, mode: str = "full", expected: str = "pass") -> Check:
    """``(1 x D) psi = psi`` on bipartite states.

    ``mode="full"`` samples arbitrary states of the parent theory (the Bell
    state first); ``mode="subtheory"`` samples ``(D x D) psi``, i.e. the
    bipartite states of the sub-theory.
    """
    dmap = candidate.map(_q(d) if d is not None else None)
    t = joint_type(dmap.in_types)
    theory = candidate.theory
    rng = la.as_rng(seed)
    both = compose_par(dmap, dmap)
    local = compose_par(identity(t), dmap)
    states = []
    if theory is QUANTUM and len(t.atoms) == 1:
        states.append(("bell", bell_state(QUANTUM.hilbert_dim(t))))
    tt = joint_type([t, t])
    states += [(f"sample{k}", theory.sample_state(tt, rng)) for k in range(n_samples)]
    worst, witness = 0.0, None
    for name, psi in states:
        if mode == "subtheory":
            psi = compose_seq(psi, both)
        r = la.residual(compose_seq(psi, local).vector, psi.vector)
        if r > worst:
            worst, witness = r, {"state": name, "vector": psi.vector}
    tag = "" if mode == "full" else f".{mode}"
    return Check(f"local_invariance.{candidate.label}{tag}", "local invariance (1 x D) psi = psi",
                 worst, CONSTRUCTION_TOL, witness=witness if worst > CONSTRUCTION_TOL else None,
                 expected=expected)


def verify_bell_marginals(d: int, perturb: float = 0.0, expected: str = "pass") -> Check:
    """Both marginals of the Bell state are ``I/d``; ``perturb`` mixes in ``|00><00|``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    b = bell_state(d)
    if perturb:
        z = QUANTUM.state_from_ket(np.eye(d * d)[0], b.out_types)
        b = QUANTUM.state((1 - perturb) * b.vector + perturb * z.vector, b.out_types)
    mu = _mu(d).vector
    res = max(la.residual(QUANTUM.marginal(b, [k]).vector, mu) for k in (0, 1))
    tag = f".perturbed{perturb:g}" if perturb else ""
    return Check(f"bell_marginals.d{d}{tag}", "Bell marginals are maximally mixed", res, EXACT_TOL,
                 expected=expected)


def verify_mu_invariance(d: int, n_unitaries: int = 100, seed=42) -> VerificationReport:
    """``G(I/d) = I/d`` directly and through the purification route."""
    rng = la.as_rng(seed)
    q = _q(d)
    mu, b = _mu(d), bell_state(d)
    rep = VerificationReport(seed=seed, dims=[d])
    worst = worst_route = worst_marg = worst_t = 0.0
    for k in range(n_unitaries):
        u = np.eye(d) if k == 0 else la.random_unitary(d, rng)
        g = QUANTUM.unitary_channel(u, q)
        worst = max(worst, la.residual(compose_seq(mu, g).vector, mu.vector))
        gb = compose_seq(b, compose_par(g, identity(q)))
        t = connect_purifications(gb, b)
        tb = compose_seq(b, compose_par(identity(q), t))
        worst_route = max(worst_route, la.residual(tb.vector, gb.vector))
        # marginal identity: G(mu) = Tr_2[(G x 1) B] = Tr_2[(1 x T) B] = mu
        worst_marg = max(worst_marg, la.residual(QUANTUM.marginal(tb, [0]).vector, mu.vector))
        worst_t = max(worst_t, la.residual(t.matrix, QUANTUM.unitary_channel(u.T, q).matrix))
    rep.add(Check(f"mu_invariance.d{d}", "reversible maps fix the maximally mixed state", worst, 1e-10))
    rep.add(Check(f"mu_invariance.d{d}.purification_route", "(G x 1) Bell = (1 x T) Bell",
                  max(worst_route, worst_marg), RECOVERED_TOL,
                  witness={"T_minus_transpose_conjugation": worst_t}))
    return rep


def verify_any_state_decomposition(d: int, n_samples: int = 50, seed=42) -> VerificationReport:
    """Every pure state appears in a decomposition of ``I/d`` with weight ``1/d``."""
    rng = la.as_rng(seed)
    mu = _mu(d)
    rep = VerificationReport(seed=seed, dims=[d])
    worst = worst_map = 0.0
    zero = QUANTUM.state_from_ket(np.eye(d)[0], _q(d))
    for _ in range(n_samples):
        ket = la.random_ket(d, rng)
        phi = QUANTUM.state_from_ket(ket, _q(d))
        sigma = convex.decompose_against(mu, phi, 1 / d)
        if sigma is None:
            worst = np.inf
            continue
        rec = la.residual(phi.vector / d + (1 - 1 / d) * sigma.vector, mu.vector)
        worst = max(worst, -la.psd_floor(QUANTUM.operator(sigma)), rec)
        # transitivity: a reversible map sends |0><0| to phi
        g = QUANTUM.unitary_channel(_unitary_to(ket), _q(d))
        worst_map = max(worst_map, la.residual(compose_seq(zero, g).vector, phi.vector))
    rep.add(Check(f"any_state_decomposition.d{d}", "mu = phi/d + (1 - 1/d) sigma", worst, CONSTRUCTION_TOL))
    rep.add(Check(f"any_state_decomposition.d{d}.transitivity", "reversible map between pure states",
                  worst_map, CONSTRUCTION_TOL))
    # just above the largest admissible weight no valid remainder exists
    over = convex.decompose_against(mu, zero, (1 / d) * (1 + 1e-6))
    rep.add(Check(f"any_state_decomposition.d{d}.boundary", "weight above 1/d admits no decomposition",
                  0.0 if over is None else 1.0, 0.0))
    return rep


def steering_effect(phi) -> "object":
    """The effect ``Tr(phi^T .)``."""
    d = QUANTUM.hilbert_dim(phi.out_types)
    return QUANTUM.effect_from_matrix(QUANTUM.operator(phi).T, _q(d))


def _steer(b, e):
    q = b.out_types[0]
    return compose_seq(b, compose_par(identity(q), e))


def purification_route_effect(phi, seed=None):
    """Steering effect recovered by purifying ``phi/d |0><0| + (1 - 1/d) sigma |1><1|``."""
    d = QUANTUM.hilbert_dim(phi.out_types)
    q, f = _q(d), _q(2)
    mu = _mu(d)
    sigma = convex.decompose_against(mu, phi, 1 / d)
    flag0 = QUANTUM.state_from_ket([1, 0], f)
    flag1 = QUANTUM.state_from_ket([0, 1], f)
    s = QUANTUM.state(compose_par(phi, flag0).vector / d + (1 - 1 / d) * compose_par(sigma, flag1).vector, (q, f))
    # purify on (A F A' F') then regroup wires as (A A' F F')
    psi = compose_seq(purify(s), permutation((q, f, q, f), [0, 2, 1, 3]))
    chi = QUANTUM.state_from_ket(np.eye(4)[0], (f, f))
    ref = compose_par(bell_state(d), chi)
    u = connect_purifications(psi, ref)
    e0 = QUANTUM.effect_from_matrix(np.diag([1.0, 0.0]), f)
    readout = compose_par(compose_par(QUANTUM.unit_effect(q), e0), QUANTUM.unit_effect(f))
    # effect on the second Bell wire: rho -> readout(u(rho x chi))
    eff = compose_seq(compose_par(identity(q), chi), compose_seq(u, readout))
    return eff, {"state_psd_floor": la.psd_floor(QUANTUM.operator(s)),
                 "marginal_residual": la.residual(QUANTUM.marginal(s, [0]).vector, mu.vector)}


def verify_steering(d: int, n_samples: int = 50, seed=42) -> VerificationReport:
    """``d (1 x e_phi) Bell = phi``, directly and through the purification route."""
    rng = la.as_rng(seed)
    b = bell_state(d)
    rep = VerificationReport(seed=seed, dims=[d])
    direct = route = agree = 0.0
    for _ in range(n_samples):
        phi = _pure(d, rng)
        e = steering_effect(phi)
        direct = max(direct, la.residual(d * _steer(b, e).vector, phi.vector))
        eff, info = purification_route_effect(phi)
        route = max(route, la.residual(d * _steer(b, eff).vector, phi.vector), info["marginal_residual"])
        agree = max(agree, la.residual(eff.vector, e.vector))
    rep.add(Check(f"steering.d{d}.direct", "Bell steering with e_phi = Tr(phi^T .)", direct, CONSTRUCTION_TOL))
    rep.add(Check(f"steering.d{d}.purification_route", "steering through purification", route,
                  CONSTRUCTION_TOL))
    rep.add(Check(f"steering.d{d}.route_agreement", "both routes give the same effect", agree, RECOVERED_TOL))
    return rep


def spanning_pure_states(d: int) -> list:
    """``d**2`` pure states whose real vectors span the Hermitian operators."""
    kets = [np.eye(d)[i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            kets.append((np.eye(d)[i] + np.eye(d)[j]) / np.sqrt(2))
            kets.append((np.eye(d)[i] + 1j * np.eye(d)[j]) / np.sqrt(2))
    return [QUANTUM.state_from_ket(k, _q(d)) for k in kets]


def verify_hyperdec_identity(candidate: DecoherenceCandidate, d: int, n_samples: int = 20,
                             seed=42) -> VerificationReport:
    """Replay ``D phi = d (D x e_phi) Bell = d (1 x e_phi) Bell = phi`` and conclude ``D = 1``.

    Raises :class:`PreconditionError` naming the first requirement the
    candidate violates: ``causal``, ``idempotent`` or ``local_invariance``.
    """
    q = _q(d)
    dmap = candidate.map(q)
    if causality_residual(dmap) > 1e-10:
        raise PreconditionError("candidate is not causal", "causal")
    if idempotence_residual(dmap) > 1e-10:
        raise PreconditionError("candidate is not idempotent", "idempotent")
    loc = verify_local_invariance(candidate, d, n_samples, seed)
    if not loc.passed:
        raise PreconditionError(
            f"local invariance fails (residual {loc.residual:.3g}): the sub-theory is not the full quantum theory",
            "local_invariance")
    b = bell_state(d)
    chain = 0.0
    for phi in spanning_pure_states(d):
        e = steering_effect(phi)
        lhs = compose_seq(phi, dmap).vector
        step1 = d * compose_seq(b, compose_par(dmap, e)).vector
        step2 = d * _steer(b, e).vector
        chain = max(chain, la.residual(lhs, step1), la.residual(step1, step2), la.residual(step2, phi.vector))
    rep = VerificationReport(seed=seed, dims=[d])
    rep.add(Check(f"hyperdec_identity.{candidate.label}.chain", "D phi = d (D x e_phi) B = d (1 x e_phi) B = phi",
                  chain, CONSTRUCTION_TOL))
    rep.add(Check(f"hyperdec_identity.{candidate.label}.identity", "D equals the identity",
                  la.residual(dmap.matrix, np.eye(len(dmap.matrix))), CONSTRUCTION_TOL))
    return rep


def rejection_check(candidate: DecoherenceCandidate, d: int, item: str, seed=42) -> Check:
    """Pass iff :func:`verify_hyperdec_identity` rejects the candidate at ``item``."""
    try:
        verify_hyperdec_identity(candidate, d, seed=seed)
        got = None
    except PreconditionError as e:
        got = e.item
    return Check(f"hyperdec_identity.{candidate.label}.rejected", f"precondition fails at {item}",
                 0.0 if got == item else 1.0, 0.0, witness={"failed_item": got})


# ---------------------------------------------------------------------------
# lemmas of the information-dimension argument
# ---------------------------------------------------------------------------


def weyl_operators(d: int) -> list:
    """The ``d**2`` operators ``X^a Z^b`` of the Heisenberg-Weyl group."""
    x = np.roll(np.eye(d), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return [np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b) for a in range(d) for b in range(d)]


def twirl_channel(d: int):
    ws = weyl_operators(d)
    return QUANTUM.channel(lambda r: sum(w @ r @ w.conj().T for w in ws) / len(ws), _q(d))


def verify_info_counting(d: int, seed=42, n_samples: int = 50, n_effects: int = 100,
                      witness: bool = True) -> VerificationReport:
    """Checks behind the distinguishability count: twirl, product of ``I/d``, weight ``1/d`` of pure effects.

    ``witness`` adds the explicit bit-pair example with ``d_Q + 1`` distinguishable states.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = la.as_rng(seed)
    q = _q(d)
    mu = _mu(d)
    rep = VerificationReport(seed=seed, dims=[d])
    tag = f"info_counting.d{d}"

    tw = twirl_channel(d)
    out = 0.0
    for _ in range(n_samples):
        rho = la.random_density(d, seed=rng) * rng.uniform(0.1, 2.0)
        res = QUANTUM.apply(tw, rho)
        out = max(out, la.residual(res, np.trace(rho) * np.eye(d) / d))
    rep.add(Check(f"{tag}.twirl_output", "twirl gives Tr(rho) I/d", out, EXACT_TOL))
    fixed = la.null_space(tw.matrix - np.eye(len(tw.matrix))).shape[1]
    rep.add(Check(f"{tag}.twirl_fixed_dim", "unique invariant state", abs(fixed - 1), 0.0,
                  witness={"fixed_space_dim": fixed}))
    choi_floor = la.psd_floor(QUANTUM.choi(tw))
    rep.add(Check(f"{tag}.twirl_channel", "twirl is causal and completely positive",
                  max(causality_residual(tw), -choi_floor, 0.0), CONSTRUCTION_TOL))

    prod = max(la.residual(compose_par(mu, _mu(k)).vector, QUANTUM.max_mixed((q, _q(k))).vector) for k in (2, d))
    rep.add(Check(f"{tag}.mu_product", "mu_A x mu_B = mu_AB", prod, EXACT_TOL))

    pure_eff = pstar = cor = 0.0
    for k in range(max(n_effects, n_samples)):
        a = la.projector(la.random_ket(d, rng))
        e = QUANTUM.effect_from_matrix(a, q)
        s = QUANTUM.state_from_matrix(a, q)
        # projectors are the extreme points of the quantum effect set
        if k < n_samples:
            pure_eff = max(pure_eff, la.residual(a @ a, a), abs(_prob(e, s) - 1))
            alpha = convex.decompose_against(mu, s, 1 / d)
            cor = np.inf if alpha is None else max(cor, -la.psd_floor(QUANTUM.operator(alpha)))
        if k < n_effects:
            pstar = max(pstar, abs(_prob(e, mu) - 1 / d))
    rep.add(Check(f"{tag}.pure_effect", "pure effect with e[a] = 1", pure_eff, 1e-10))
    rep.add(Check(f"{tag}.pstar", "every pure effect gives 1/d on mu", pstar, EXACT_TOL,
                  witness={"pstar": 1 / d}))
    rep.add(Check(f"{tag}.mu_decomposition", "mu = p* a + (1 - p*) alpha", cor, CONSTRUCTION_TOL))
    if witness:
        rep.extend(postclassical_witness())
    return rep


def postclassical_witness(n: int = 2) -> VerificationReport:
    """Instantiate the distinguishability count on the bit-pair counterexample."""
    c = postclassical_counterexample(n, np.full(n, 1 / n))
    t = c.systems[0]
    dm = c.map(t)
    tag = f"info_counting.postclassical_n{n}"
    rep = VerificationReport(dims=[t.label])
    zero_q = compose_seq(CLASSICAL.point_mass(0, t), dm)  # sub-theory |0> state
    s = CLASSICAL.point_mass(0, t)
    p = convex.max_weight(CLASSICAL, zero_q, s)
    sigma = convex.decompose_against(zero_q, s, p)
    others = [compose_seq(CLASSICAL.point_mass(i * n, t), dm) for i in range(1, n)]
    mu = CLASSICAL.max_mixed(t)
    pstar = convex.max_weight(CLASSICAL, mu, s)
    rep.add(Check(f"{tag}.pstar", "p* = p / d_Q", abs(pstar - p / n), EXACT_TOL,
                  witness={"p": p, "pstar": pstar, "d_Q": n}))
    e = CLASSICAL.effect(s.vector, t)  # pure effect with e[s] = 1
    vanish = max([abs(_prob(e, x)) for x in [sigma] + others] + [abs(_prob(e, s) - 1)])
    rep.add(Check(f"{tag}.effect_vanishes", "e[s] = 1, e[sigma] = e[i] = 0", vanish, EXACT_TOL))
    states = [s, sigma] + others
    m = convex.perfectly_distinguishable(CLASSICAL, states)
    res = np.inf if m is None else la.residual(m.table(states), np.eye(len(states)))
    rep.add(Check(f"{tag}.witness_distinguishable", "d_Q + 1 pairwise distinguishable states", res,
                  convex.DISTINGUISH_TOL, witness={"n_states": len(states), "states": [x.vector for x in states]}))
    parent = convex.info_dimension(CLASSICAL, t).value
    sub = convex.info_dimension(CLASSICAL, candidates=[compose_seq(CLASSICAL.point_mass(i, t), dm)
                                                       for i in range(t.vec_dim)]).value
    rep.add(Check(f"{tag}.info_dim", "information dimension n^2 vs n", abs(parent - n * n) + abs(sub - n), 0.0,
                  witness={"parent": parent, "subtheory": sub}))
    return rep


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------


def _expect_fingerprint(rep: VerificationReport) -> VerificationReport:
    for c in rep:
        if c.name.endswith(("3_purity_preservation", "4_dimension_preservation")):
            c.expected = "fail"
    return rep


def run_nogo_suite(dims, seed=42, n_samples: int = 20) -> VerificationReport:
    """Every check of the argument over ``dims``, plus controls and counterexamples."""
    dims = [int(d) for d in dims]
    if not dims:
        raise ValueError("dims must not be empty")
    if min(dims) < 2:
        raise ValueError("every dimension must be at least 2")
    rep = VerificationReport(seed=seed, dims=list(dims))
    for i, d in enumerate(dims):
        s = seed + 1000 * d
        q = _q(d)
        ident = identity_candidate(QUANTUM, q)
        deph = dephasing_map(d)
        rep.add(verify_local_invariance(ident, d, n_samples, s))
        rep.add(verify_local_invariance(deph, d, n_samples, s, mode="subtheory"))
        rep.add(verify_local_invariance(deph, d, n_samples, s, expected="fail"))
        rep.add(verify_bell_marginals(d))
        rep.add(verify_bell_marginals(d, perturb=0.1, expected="fail"))
        rep.extend(verify_mu_invariance(d, 100, s))
        rep.extend(verify_any_state_decomposition(d, 50, s))
        rep.extend(verify_steering(d, 50, s))
        rep.extend(verify_hyperdec_identity(ident, d, n_samples, s))
        rep.add(rejection_check(deph, d, "local_invariance", s))
        rep.add(rejection_check(unitary_candidate(la.random_unitary(d, s), q), d, "idempotent", s))
        rep.extend(verify_info_counting(d, s, witness=(i == 0)))
        rep.extend(check_candidate(deph, seed=s))
        rep.extend(check_purification_principle(QUANTUM, q, 50, s))
    for th, t in ((CLASSICAL, CLASSICAL.system(2)), (GBIT, GBIT.system())):
        for c in check_purification_principle(th, t, seed=seed):
            c.expected = "fail"
            rep.add(c)
    rep.extend(_expect_fingerprint(check_candidate(postclassical_counterexample(2, [0.5, 0.5]), seed=seed)))
    rep.extend(_expect_fingerprint(check_candidate(postquantum_counterexample(2, np.eye(2) / 2), seed=seed)))
    return rep.sorted()
