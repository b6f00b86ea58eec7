"""Decoherence and hyperdecoherence candidates, their sub-theories, and the counterexamples.

A candidate is a family of endomorphisms, one per system type, that is meant
to restrict a theory to a sub-theory.  :func:`check_candidate` tests the four
defining requirements:

1. causal         -- discarding after the map equals discarding;
2. idempotent     -- applying the map twice equals applying it once;
3. purity         -- every state that is pure *within the sub-theory* is pure
                     in the parent theory;
4. dimension      -- the sub-theory has the same information dimension.

Sub-theory purity is decided exactly.  Because the map is an idempotent
channel, its image is the intersection of the parent state set with the
fixed-point subspace.  A point of that intersection is extreme iff no
direction inside both its parent face and the fixed subspace exists, which is
a finite linear-algebra question.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import convex
from . import linalg as la
from .errors import PreconditionError, ValidationError
from .report import Check, VerificationReport
from .theory import (
    CLASSICAL,
    QUANTUM,
    PolytopeTheory,
    ProcessRep,
    QuantumTheory,
    SystemType,
    causality_residual,
    compose_par,
    compose_seq,
    get_theory,
    joint_type,
    system_from_label,
)

FIXED_TOL = 1e-10
CLOSURE_TOL = 1e-9


@dataclass
class DecoherenceCandidate:
    theory_id: str
    maps: dict
    label: str = "candidate"

    def __post_init__(self):
        for t, p in self.maps.items():
            if p.in_types != t.atoms or p.out_types != t.atoms:
                raise ValidationError(f"map for {t.label} must be an endomorphism of {t.label}")

    @property
    def theory(self):
        return get_theory(self.theory_id)

    @property
    def systems(self) -> list:
        return list(self.maps)

    def map(self, t: SystemType | None = None) -> ProcessRep:
        if t is None:
            return next(iter(self.maps.values()))
        return self.maps[joint_type(t.atoms)]

    def to_json(self) -> dict:
        t, p = next(iter(self.maps.items()))
        return {"candidate": {"system": t.label, "matrix": p.matrix, "label": self.label,
                              "theory": self.theory_id}}

    @classmethod
    def from_json(cls, data, theory=None) -> "DecoherenceCandidate":
        if isinstance(data, str):
            data = json.loads(data)
        body = data["candidate"]
        t = system_from_label(body["system"], theory)
        m = np.asarray(body["matrix"], dtype=float)
        return cls(t.theory_id, {t: ProcessRep(m, t.atoms, t.atoms)}, body.get("label", "candidate"))


def _single(theory, t, matrix, label) -> DecoherenceCandidate:
    t = joint_type(t.atoms)
    return DecoherenceCandidate(theory.id, {t: ProcessRep(matrix, t.atoms, t.atoms, False, theory.id)}, label)


def dephasing_map(d: int, basis=None) -> DecoherenceCandidate:
    """``rho -> sum_i <b_i|rho|b_i> |b_i><b_i|`` for the columns ``b_i`` of ``basis``."""
    if d < 2:
        raise ValidationError("dephasing needs d >= 2")
    b = np.eye(d) if basis is None else np.asarray(basis)
    projs = [np.outer(b[:, i], b[:, i].conj()) for i in range(d)]
    q = QUANTUM.system(d)
    ch = QUANTUM.channel(lambda x: sum(p @ x @ p for p in projs), q)
    return _single(QUANTUM, q, ch.matrix, f"dephasing(q{d})")


def environment_dephasing(d: int) -> ProcessRep:
    """``Tr_E(U (rho x |0><0|) U^dag)`` with ``U = sum_i |i><i| x X^i``."""
    shift = np.roll(np.eye(d), 1, axis=0)  # |k> -> |k+1>
    u = sum(np.kron(np.diag(np.eye(d)[i]), np.linalg.matrix_power(shift, i)) for i in range(d))
    env0 = np.zeros((d, d))
    env0[0, 0] = 1

    def fn(rho):
        return la.partial_trace(u @ np.kron(rho, env0) @ u.conj().T, [d, d], [0])

    return QUANTUM.channel(fn, QUANTUM.system(d))


def identity_candidate(theory, t) -> DecoherenceCandidate:
    return _single(theory, t, np.eye(t.vec_dim), f"identity({t.label})")


def unitary_candidate(u, t) -> DecoherenceCandidate:
    return _single(QUANTUM, t, QUANTUM.unitary_channel(u, t).matrix, f"unitary({t.label})")


def postclassical_counterexample(n: int, q) -> DecoherenceCandidate:
    """``1 x (q o discard)`` on two ``n``-outcome classical systems."""
    q = np.asarray(q, dtype=float)
    if q.shape != (n,) or q.min() < 0 or abs(q.sum() - 1) > 1e-9:
        raise ValidationError("q must be a probability vector of length n")
    if np.sum(q > 0) < 2:
        raise ValidationError("q must have at least two strictly positive entries")
    c = CLASSICAL.system(n)
    t = joint_type([c, c])
    return _single(CLASSICAL, t, np.kron(np.eye(n), np.outer(q, np.ones(n))), f"postclassical(n={n})")


def postquantum_counterexample(d: int, q) -> DecoherenceCandidate:
    """``1 x (q o trace)`` on two ``d``-level quantum systems; ``q`` must be mixed."""
    q = np.asarray(q, dtype=complex)
    qs = QUANTUM.system(d)
    rep = QUANTUM.state_from_matrix(q, qs)
    if not QUANTUM.is_state(rep):
        raise ValidationError("q must be a density matrix")
    w = np.linalg.eigvalsh(q)
    if w[-2] <= 1e-9:
        raise ValidationError("q must be a mixed state")
    t = joint_type([qs, qs])
    repl = np.outer(rep.vector, QUANTUM.unit_vector(qs))
    return _single(QUANTUM, t, np.kron(np.eye(qs.vec_dim), repl), f"postquantum(d={d})")


def classify(c: DecoherenceCandidate, tol: float = FIXED_TOL) -> str:
    """``"trivial"`` iff every map is the identity within ``tol``."""
    for p in c.maps.values():
        if la.residual(p.matrix, np.eye(len(p.matrix))) > tol:
            return "nontrivial"
    return "trivial"


def idempotence_residual(p: ProcessRep) -> float:
    return la.residual(p.matrix @ p.matrix, p.matrix)


# ---------------------------------------------------------------------------
# sub-theories
# ---------------------------------------------------------------------------


@dataclass
class SubPurity:
    pure: bool
    direction: np.ndarray | None = None
    witness: convex.MixtureDecomposition | None = None

    def __bool__(self):
        return self.pure


@dataclass
class SubTheory:
    """Image of a candidate: states ``D s``, transformations ``D T D``, effects ``e D``."""

    parent: object
    candidate: DecoherenceCandidate
    system: SystemType
    _extremes: list | None = field(default=None, repr=False)

    @property
    def projector(self) -> np.ndarray:
        return self.candidate.map(self.system).matrix

    def fixed_space(self) -> np.ndarray:
        """Orthonormal columns spanning the fixed points of the map."""
        return la.null_space(self.projector - np.eye(len(self.projector)))

    @property
    def effective_dim(self) -> int:
        return self.fixed_space().shape[1]

    # images

    def state(self, s: ProcessRep) -> ProcessRep:
        return compose_seq(s, self.candidate.map(self.system))

    def transformation(self, t: ProcessRep) -> ProcessRep:
        d = self.candidate.map(self.system)
        return compose_seq(compose_seq(d, t), d)

    def effect(self, e: ProcessRep) -> ProcessRep:
        return compose_seq(self.candidate.map(self.system), e)

    # membership

    def fixed_residual(self, s: ProcessRep) -> float:
        return la.residual(self.projector @ s.vector, s.vector)

    def contains_state(self, s: ProcessRep, tol: float = FIXED_TOL) -> bool:
        return self.parent.is_state(s, normalized=False) and self.fixed_residual(s) <= tol

    def contains_transformation(self, t: ProcessRep, tol: float = CLOSURE_TOL) -> bool:
        d = self.projector
        return la.residual(d @ t.matrix @ d, t.matrix) <= tol

    # purity inside the image

    def purity(self, s: ProcessRep) -> SubPurity:
        """Exact extremality of ``s`` within the image set."""
        faces = convex.face_directions(self.parent, s)
        if faces.shape[1] == 0:
            return SubPurity(True)
        kernel = la.null_space((self.projector - np.eye(len(self.projector))) @ faces, 1e-9)
        if kernel.shape[1] == 0:
            return SubPurity(True)
        delta = faces @ kernel[:, 0]
        delta = delta / np.linalg.norm(delta)
        up = convex.max_step(self.parent, s, delta)
        down = convex.max_step(self.parent, s, -delta)
        plus = self.parent.state(s.vector + up * delta, s.out_types)
        minus = self.parent.state(s.vector - down * delta, s.out_types)
        wit = convex.MixtureDecomposition(np.array([down, up]) / (up + down), [plus, minus])
        return SubPurity(False, delta, wit)

    def descend(self, s: ProcessRep, max_iter: int | None = None) -> ProcessRep:
        """Walk from an image point to an extreme point of the image."""
        s = self.state(s)
        for _ in range(max_iter or len(s.vector) + 1):
            pur = self.purity(s)
            if pur.pure:
                return s
            step = convex.max_step(self.parent, s, pur.direction)
            s = self.state(self.parent.state(s.vector + step * pur.direction, s.out_types))
        return s

    def extreme_points(self, budget: int = 20, seed=42) -> list:
        """Distinct extreme points reached from the images of parent candidates."""
        if self._extremes is not None:
            return self._extremes
        cands = convex.default_candidates(self.parent, self.system, budget, seed)
        if isinstance(self.parent, QuantumTheory):
            d = self.parent.hilbert_dim(self.system)
            cands = [self.parent.state_from_ket(np.eye(d)[i], self.system) for i in range(d)] + cands
        found: list = []
        for c in cands:
            x = self.descend(c)
            if all(la.residual(x.vector, y.vector) > 1e-7 for y in found):
                found.append(x)
        self._extremes = found
        return found

    def info_dimension(self, budget: int = 20, seed=42) -> convex.InfoDimension:
        # sub-theory measurements {e_i o D} act on image states exactly like {e_i}
        return convex.info_dimension(self.parent, candidates=self.extreme_points(budget, seed))

    def closure_residual(self, n_samples: int = 20, seed=42) -> float:
        """Largest deviation from closure under sequential and parallel composition."""
        rng = la.as_rng(seed)
        t = self.system
        d = self.candidate.map(t)
        dd = compose_par(d, d)
        worst = 0.0
        for _ in range(n_samples):
            t1 = self.transformation(self.parent.sample_transformation(t, t, rng))
            t2 = self.transformation(self.parent.sample_transformation(t, t, rng))
            s = self.state(self.parent.sample_state(t, rng))
            seq = compose_seq(t1, t2)
            worst = max(worst, la.residual(d.matrix @ seq.matrix @ d.matrix, seq.matrix))
            out = compose_seq(s, seq)
            worst = max(worst, self.fixed_residual(out))
            par = compose_par(t1, t2)
            worst = max(worst, la.residual(dd.matrix @ par.matrix @ dd.matrix, par.matrix))
        return worst

    def classical_isomorphism(self, budget: int = 20, seed=42) -> "ClassicalIsomorphism":
        """Coordinates identifying the image with a classical system, if it is a simplex."""
        ext = self.extreme_points(budget, seed)
        n = len(ext)
        e = np.array([x.vector for x in ext]).T
        if n != self.effective_dim or np.linalg.matrix_rank(e, tol=1e-8) != n:
            raise PreconditionError("image is not a simplex", "simplex")
        j = np.linalg.pinv(e) @ self.projector
        return ClassicalIsomorphism(self, j, e, CLASSICAL.system(n))


@dataclass
class ClassicalIsomorphism:
    """``to_classical`` (n x D) and ``from_classical`` (D x n) between image and simplex."""

    sub: SubTheory
    to_classical: np.ndarray
    from_classical: np.ndarray
    classical_type: SystemType

    def stochastic(self, t: ProcessRep) -> np.ndarray:
        return self.to_classical @ t.matrix @ self.from_classical

    def residuals(self, n_samples: int = 20, seed=42) -> dict:
        rng = la.as_rng(seed)
        sub, parent, t = self.sub, self.sub.parent, self.sub.system
        j, e = self.to_classical, self.from_classical
        res = {"round_trip": la.residual(j @ e, np.eye(len(j))), "states": 0.0,
               "sequential": 0.0, "parallel": 0.0, "stochastic": 0.0}
        for _ in range(n_samples):
            s = sub.state(parent.sample_state(t, rng))
            p = j @ s.vector
            res["states"] = max(res["states"], la.residual(e @ p, s.vector), max(0.0, -p.min()),
                                abs(p.sum() - 1))
            t1 = sub.transformation(parent.sample_transformation(t, t, rng))
            t2 = sub.transformation(parent.sample_transformation(t, t, rng))
            s1, s2 = self.stochastic(t1), self.stochastic(t2)
            res["stochastic"] = max(res["stochastic"], max(0.0, -s1.min()), np.abs(s1.sum(axis=0) - 1).max())
            res["sequential"] = max(res["sequential"], la.residual(self.stochastic(compose_seq(t1, t2)), s2 @ s1))
            par = np.kron(j, j) @ np.kron(t1.matrix, t2.matrix) @ np.kron(e, e)
            res["parallel"] = max(res["parallel"], la.residual(par, np.kron(s1, s2)))
        return res


def build_subtheory(c: DecoherenceCandidate, t: SystemType | None = None) -> SubTheory:
    p = c.map(t)
    if idempotence_residual(p) > FIXED_TOL:
        raise PreconditionError("candidate is not idempotent", "idempotent")
    return SubTheory(c.theory, c, joint_type(p.in_types))


# ---------------------------------------------------------------------------
# the four requirements
# ---------------------------------------------------------------------------


def _impurity(theory, s, witness) -> float:
    if isinstance(theory, QuantumTheory):
        rho = theory.operator(s)
        return float(1 - np.linalg.eigvalsh(rho)[-1] / np.trace(rho).real)
    return float(1 - max(witness.weights)) if witness is not None else 0.0


def check_candidate(c: DecoherenceCandidate, budget: int = 20, seed=42) -> VerificationReport:
    """Causality, idempotence, purity preservation and dimension preservation."""
    rep = VerificationReport(seed=seed)
    theory = c.theory
    for t, p in c.maps.items():
        tag = f"{c.label}"
        rep.dims.append(t.label)
        rep.add(Check(f"{tag}.1_causal", "hyperdecoherence item 1: causal", causality_residual(p), FIXED_TOL))
        idem = idempotence_residual(p)
        rep.add(Check(f"{tag}.2_idempotent", "hyperdecoherence item 2: idempotent", idem, FIXED_TOL))
        if idem > FIXED_TOL:
            rep.add(Check(f"{tag}.3_purity_preservation", "hyperdecoherence item 3: sub-theory pure states are pure",
                          np.inf, 1e-9, witness="not idempotent; sub-theory undefined"))
            rep.add(Check(f"{tag}.4_dimension_preservation", "information dimension preserved",
                          np.inf, 0.0, witness="not idempotent; sub-theory undefined"))
            continue
        sub = SubTheory(theory, c, t)
        worst, witness = 0.0, None
        for x in sub.extreme_points(budget, seed):
            pur = convex.is_pure(theory, x)
            if pur.pure:
                continue
            # only report failures backed by a verified decomposition
            if pur.witness.residual(x) > 1e-9 or len(pur.witness.components) < 2:
                continue
            imp = _impurity(theory, x, pur.witness)
            if imp > worst + 1e-12:  # ties keep the first state found
                worst = imp
                witness = {"state": x.vector, "decomposition": pur.witness,
                           "decomposition_residual": pur.witness.residual(x)}
        rep.add(Check(f"{tag}.3_purity_preservation", "hyperdecoherence item 3: sub-theory pure states are pure",
                      worst, 1e-9, witness=witness))
        parent_dim = convex.info_dimension(theory, t, budget=budget, seed=seed)
        sub_dim = sub.info_dimension(budget, seed)
        rep.add(Check(f"{tag}.4_dimension_preservation", "information dimension preserved",
                      abs(parent_dim.value - sub_dim.value), 0.0,
                      witness={"parent": parent_dim.value, "subtheory": sub_dim.value}))
    return rep
