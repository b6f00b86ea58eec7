"""Purity, perfect distinguishability, information dimension, mixture decompositions."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from . import linalg as la
from .errors import BudgetError, StateError
from .theory import QUANTUM, PolytopeTheory, ProcessRep, QuantumTheory, Theory, joint_type

DISTINGUISH_TOL = 1e-7
UNIT_TOL = 1e-8
RANK_TOL = 1e-8


@dataclass
class Measurement:
    effects: list

    def __len__(self):
        return len(self.effects)

    def unit_residual(self, theory: Theory) -> float:
        t = self.effects[0].in_types
        total = sum(e.vector for e in self.effects)
        return la.residual(total, theory.unit_effect(t).vector)

    def table(self, states) -> np.ndarray:
        """Matrix of outcome probabilities ``e_i(rho_j)``."""
        return np.array([[e.vector @ s.vector for s in states] for e in self.effects])

    def to_json(self):
        return [e.vector for e in self.effects]


@dataclass
class MixtureDecomposition:
    weights: np.ndarray
    components: list

    def reconstruct(self) -> np.ndarray:
        return sum(w * c.vector for w, c in zip(self.weights, self.components))

    def residual(self, target: ProcessRep) -> float:
        return la.residual(self.reconstruct(), target.vector)

    def to_json(self):
        return {"weights": self.weights, "components": [c.vector for c in self.components]}


@dataclass
class PurityResult:
    pure: bool
    witness: MixtureDecomposition | None = None

    def __bool__(self):
        return self.pure


def _check_state(theory, s):
    if not theory.is_state(s, normalized=False):
        raise StateError("not a valid state of the theory")


def is_pure(theory: Theory, s: ProcessRep) -> PurityResult:
    """Decide whether ``s`` is an extreme point of the state set.

    Mixed states come back with a verified convex decomposition into distinct
    states as witness.
    """
    _check_state(theory, s)
    t = s.out_types
    if isinstance(theory, QuantumTheory):
        w, v = np.linalg.eigh(theory.operator(s))
        if w[-2] < RANK_TOL * w[-1]:
            return PurityResult(True)
        keep = w > RANK_TOL * w[-1]
        comps = [theory.state_from_ket(v[:, i], t) for i in np.flatnonzero(keep)]
        weights = w[keep]
        return PurityResult(False, MixtureDecomposition(weights, comps))
    if isinstance(theory, PolytopeTheory):
        ext = theory.extreme_states(t)
        x = s.vector
        norm = theory.unit_vector(joint_type(t)) @ x
        dist = np.linalg.norm(ext * norm - x, axis=1)
        if dist.min() < 1e-9:
            return PurityResult(True)
        res = linprog(np.zeros(len(ext)), A_eq=ext.T, b_eq=x, bounds=(0, None), method="highs")
        lam = res.x
        keep = lam > 1e-12
        comps = [theory.state(ext[i], t) for i in np.flatnonzero(keep)]
        weights = lam[keep]
        return PurityResult(False, MixtureDecomposition(weights, comps))
    raise StateError(f"purity test not available for {theory!r}")


# ---------------------------------------------------------------------------
# perfect distinguishability
# ---------------------------------------------------------------------------


def _support(rho, tol=RANK_TOL):
    w, v = np.linalg.eigh(rho)
    return v[:, w > tol * max(w[-1], 1e-300)]


def _quantum_distinguishing(theory: QuantumTheory, states, tol):
    # perfect discrimination <=> pairwise orthogonal supports; the projectors
    # onto the supports (plus the leftover on the first one) then do the job
    t = states[0].out_types
    d = theory.hilbert_dim(t)
    supports = [_support(theory.operator(s)) for s in states]
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            if np.linalg.norm(supports[i].conj().T @ supports[j]) > np.sqrt(tol):
                return None
    projs = [q @ q.conj().T for q in supports]
    projs[0] = projs[0] + np.eye(d) - sum(projs)
    return [theory.effect_from_matrix((p + p.conj().T) / 2, t) for p in projs]


def _polytope_distinguishing(theory: PolytopeTheory, states, tol):
    t = joint_type(states[0].out_types)
    gens = theory.effect_generators(t)
    unit = theory.unit_vector(t)
    m, k, dim = len(states), len(gens), t.vec_dim
    values = np.array([gens @ s.vector for s in states])  # (m, k)
    a_eq, b_eq = [], []
    for i in range(m):
        for j in range(m):
            row = np.zeros(m * k)
            row[i * k:(i + 1) * k] = values[j]
            a_eq.append(row)
            b_eq.append(1.0 if i == j else 0.0)
    for c in range(dim):
        row = np.zeros(m * k)
        for i in range(m):
            row[i * k:(i + 1) * k] = gens[:, c]
        a_eq.append(row)
        b_eq.append(unit[c])
    res = linprog(np.zeros(m * k), A_eq=np.array(a_eq), b_eq=np.array(b_eq),
                  bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    lam = res.x.reshape(m, k)
    return [theory.effect(lam[i] @ gens, t) for i in range(m)]


def perfectly_distinguishable(theory: Theory, states, tol: float = DISTINGUISH_TOL) -> Measurement | None:
    """A measurement ``{e_i}`` with ``e_i(rho_j) = delta_ij`` or ``None``.

    Quantum states are distinguishable exactly when their supports are
    mutually orthogonal, which gives the measurement in closed form.
    Polytope theories solve a linear feasibility program over the effect-cone
    generators.  Any measurement returned has been checked against ``tol``
    and against the unit effect.
    """
    states = list(states)
    if len(states) < 2:
        raise ValueError("need at least two states")
    if isinstance(theory, QuantumTheory):
        effects = _quantum_distinguishing(theory, states, tol)
    elif isinstance(theory, PolytopeTheory):
        effects = _polytope_distinguishing(theory, states, tol)
    else:
        raise StateError(f"distinguishability not available for {theory!r}")
    if effects is None:
        return None
    meas = Measurement(effects)
    if np.abs(meas.table(states) - np.eye(len(states))).max() > tol:
        return None
    if meas.unit_residual(theory) > UNIT_TOL or not all(theory.is_effect(e, tol) for e in effects):
        return None
    return meas


# ---------------------------------------------------------------------------
# information dimension
# ---------------------------------------------------------------------------


def max_clique(adj) -> list:
    """Maximum clique by branch and bound; ties go to the lexicographically first."""
    adj = np.asarray(adj, dtype=bool)
    best: list = []

    def expand(clique, cand):
        nonlocal best
        if not cand:
            if len(clique) > len(best):
                best = clique
            return
        for idx, v in enumerate(cand):
            if len(clique) + len(cand) - idx <= len(best):
                return
            expand(clique + [v], [w for w in cand[idx + 1:] if adj[v, w]])

    expand([], list(range(len(adj))))
    return best


@dataclass
class InfoDimension:
    value: int
    witness: list
    states: list = field(repr=False, default_factory=list)
    jointly_distinguishable: bool | None = None
    measurement: Measurement | None = field(repr=False, default=None)
    joint_value: int | None = None

    def __int__(self):
        return self.value

    def __eq__(self, other):
        if isinstance(other, int):
            return self.value == other
        return NotImplemented

    def to_json(self):
        return {"value": self.value, "witness": self.witness,
                "witness_states": [self.states[i].vector for i in self.witness],
                "jointly_distinguishable": self.jointly_distinguishable,
                "joint_value": self.joint_value}


def default_candidates(theory: Theory, t, budget: int = 20, seed=42) -> list:
    if isinstance(theory, QuantumTheory):
        d = theory.hilbert_dim(t)
        rng = la.as_rng(seed)
        basis = [theory.state_from_ket(np.eye(d)[i], t) for i in range(d)]
        return basis + [theory.sample_pure(t, rng) for _ in range(budget)]
    if isinstance(theory, PolytopeTheory):
        return [theory.state(v, t) for v in theory.extreme_states(t)]
    raise StateError(f"no default candidates for {theory!r}")


def distinguishability_graph(theory: Theory, states, tol: float = DISTINGUISH_TOL) -> np.ndarray:
    n = len(states)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            adj[i, j] = adj[j, i] = perfectly_distinguishable(theory, [states[i], states[j]], tol) is not None
    return adj


def info_dimension(theory: Theory, t=None, candidates=None, budget: int = 20, seed=42,
                   max_candidates: int = 256) -> InfoDimension:
    """Largest pairwise perfectly distinguishable subset of the candidate states.

    The answer is exact for the candidate set (a lower bound for the system
    itself unless the candidates include a maximal set).  The witness clique
    is also tested for joint distinguishability; the outcome is recorded in
    ``jointly_distinguishable`` rather than merged into the count.
    """
    if candidates is None:
        candidates = default_candidates(theory, t, budget, seed)
    candidates = list(candidates)
    if len(candidates) > max_candidates:
        raise BudgetError(f"{len(candidates)} candidates exceed the budget of {max_candidates}")
    if len(candidates) == 1:
        return InfoDimension(1, [0], candidates, True)
    adj = distinguishability_graph(theory, candidates)
    clique = max_clique(adj)
    if len(clique) < 2:
        return InfoDimension(1, clique[:1] or [0], candidates, True, joint_value=1)
    meas = perfectly_distinguishable(theory, [candidates[i] for i in clique])
    joint = len(clique) if meas is not None else _joint_search(theory, candidates, adj, len(clique) - 1)
    return InfoDimension(len(clique), clique, candidates, meas is not None, meas, joint)


def _joint_search(theory, states, adj, start, limit=20000):
    """Largest jointly distinguishable set of size <= start, among pairwise cliques."""
    n = len(states)
    for k in range(start, 1, -1):
        tried = 0
        for combo in combinations(range(n), k):
            if not all(adj[a, b] for a, b in combinations(combo, 2)):
                continue
            tried += 1
            if tried > limit:
                raise BudgetError("joint distinguishability search exceeded its budget")
            if perfectly_distinguishable(theory, [states[i] for i in combo]) is not None:
                return k
    return 1


def decompose_against(mu: ProcessRep, phi: ProcessRep, p: float) -> ProcessRep | None:
    """``sigma`` with ``mu = p phi + (1 - p) sigma`` if it is a valid state, else ``None``."""
    if not 0 < p < 1:
        raise ValueError("weight must lie strictly between 0 and 1")
    theory = mu.theory
    sigma = theory.state((mu.vector - p * phi.vector) / (1 - p), mu.out_types)
    return sigma if theory.is_state(sigma) else None


# ---------------------------------------------------------------------------
# faces of the state set
# ---------------------------------------------------------------------------


def face_directions(theory: Theory, s: ProcessRep) -> np.ndarray:
    """Columns span the directions ``delta`` with ``s +/- eps delta`` normalized states.

    Quantum: traceless Hermitian operators supported on the range of ``s``.
    Polytope: the null space of the facet functionals vanishing at ``s``.
    """
    t = s.out_types
    if isinstance(theory, QuantumTheory):
        q = _support(theory.operator(s), 1e-9)
        r = q.shape[1]
        basis = theory.basis(t)
        small = la.herm_basis(r).elements[1:]  # traceless part
        cols = [la.to_real(q @ h @ q.conj().T, basis) for h in small]
        return np.array(cols).T if cols else np.zeros((len(s.vector), 0))
    if isinstance(theory, PolytopeTheory):
        tt = joint_type(t)
        gens = theory.effect_generators(tt)
        active = gens[np.abs(gens @ s.vector) <= 1e-10]
        return la.null_space(np.vstack([active, theory.unit_vector(tt)]))
    raise StateError(f"faces not available for {theory!r}")


def max_step(theory: Theory, s: ProcessRep, delta: np.ndarray) -> float:
    """Largest ``t`` with ``s + t delta`` still a state."""
    t = s.out_types
    if isinstance(theory, QuantumTheory):
        q = _support(theory.operator(s), 1e-9)
        x = q.conj().T @ theory.operator(s) @ q
        dm = q.conj().T @ la.from_real(delta, theory.basis(t)) @ q
        w, v = np.linalg.eigh(x)
        xm = v @ np.diag(w ** -0.5) @ v.conj().T
        lam = np.linalg.eigvalsh(xm @ dm @ xm)
        return np.inf if lam[0] >= 0 else float(-1 / lam[0])
    gens = theory.effect_generators(joint_type(t))
    rate = gens @ delta
    val = gens @ s.vector
    neg = rate < -1e-14
    return float(np.min(val[neg] / -rate[neg])) if neg.any() else np.inf


def max_weight(theory: Theory, mu: ProcessRep, s: ProcessRep) -> float:
    """Largest ``p`` such that ``mu = p s + (1 - p) sigma`` for some state ``sigma``."""
    if isinstance(theory, QuantumTheory):
        rho, x = theory.operator(mu), theory.operator(s)
        q = _support(rho, 1e-12)
        if la.residual(q @ q.conj().T @ x @ q @ q.conj().T, x) > 1e-9:
            return 0.0
        w, v = np.linalg.eigh(q.conj().T @ rho @ q)
        rm = v @ np.diag(w ** -0.5) @ v.conj().T
        return float(min(1.0, 1 / np.linalg.eigvalsh(rm @ q.conj().T @ x @ q @ rm)[-1]))
    gens = theory.effect_generators(joint_type(s.out_types))
    gs, gm = gens @ s.vector, gens @ mu.vector
    pos = gs > 1e-14
    return float(min(1.0, np.min(gm[pos] / gs[pos]))) if pos.any() else 1.0
