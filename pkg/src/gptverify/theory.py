"""Operational theories: system types, processes, and their composition.

Every process is a real matrix acting on the real vector space spanned by a
system's states.  States are processes with no inputs (a single column),
effects are processes with no outputs (a single row) and closed diagrams are
1x1 matrices holding a probability.

Three families are built in:

* ``quantum``   -- Hilbert dimension ``d``, real dimension ``d**2``; states are
  stored in the Hermitian basis of :mod:`gptverify.linalg`.
* ``classical`` -- ``n`` outcomes, states are probability vectors.
* ``gbit``      -- the square state space of a single Boxworld system.

Further polytopic theories can be loaded from a JSON description with
:func:`load_theory_spec`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import linalg as la
from .errors import (
    CompositionError,
    DimensionError,
    NotCopurifyingError,
    StateError,
    TheoryMismatchError,
    UnsupportedError,
    ValidationError,
)
from .report import Check, VerificationReport

PSD_TOL = 1e-9


# ---------------------------------------------------------------------------
# types and processes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemType:
    theory_id: str
    label: str
    vec_dim: int
    info_dim_hint: int | None = None
    factors: tuple = ()

    @property
    def atoms(self) -> tuple:
        return self.factors if self.factors else (self,)

    def __str__(self):
        return self.label


def joint_type(types: Iterable[SystemType]) -> SystemType | None:
    """Composite of the given types (flattened); ``None`` for no types."""
    atoms = tuple(a for t in types for a in t.atoms)
    if not atoms:
        return None
    if len(atoms) == 1:
        return atoms[0]
    ids = {a.theory_id for a in atoms}
    if len(ids) != 1:
        raise TheoryMismatchError(f"cannot compose systems from theories {sorted(ids)}")
    hints = [a.info_dim_hint for a in atoms]
    hint = int(np.prod(hints)) if all(h is not None for h in hints) else None
    return SystemType(
        atoms[0].theory_id,
        "*".join(a.label for a in atoms),
        int(np.prod([a.vec_dim for a in atoms])),
        hint,
        atoms,
    )


def _atoms(types) -> tuple:
    if isinstance(types, SystemType):
        return types.atoms
    return tuple(a for t in types for a in t.atoms)


def _dim(types: tuple) -> int:
    return int(np.prod([t.vec_dim for t in types])) if types else 1


@dataclass(frozen=True, eq=False)
class ProcessRep:
    """A real linear map between the state spaces of ordered system lists."""

    matrix: np.ndarray
    in_types: tuple = ()
    out_types: tuple = ()
    reversible: bool = False
    theory_id: str | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        ins, outs = _atoms(self.in_types), _atoms(self.out_types)
        if m.ndim == 1:
            m = m.reshape(-1, 1) if not ins else m.reshape(1, -1)
        expected = (_dim(outs), _dim(ins))
        if m.shape != expected:
            raise DimensionError(f"matrix shape {m.shape} does not match types (expected {expected})")
        if not np.all(np.isfinite(m)):
            raise ValidationError("process matrix has non-finite entries")
        ids = {t.theory_id for t in ins + outs}
        if len(ids) > 1:
            raise TheoryMismatchError(f"process mixes theories {sorted(ids)}")
        tid = self.theory_id if self.theory_id is not None else (ids.pop() if ids else None)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "in_types", ins)
        object.__setattr__(self, "out_types", outs)
        object.__setattr__(self, "theory_id", tid)

    @property
    def is_state(self) -> bool:
        return not self.in_types and bool(self.out_types)

    @property
    def is_effect(self) -> bool:
        return bool(self.in_types) and not self.out_types

    @property
    def is_scalar(self) -> bool:
        return not self.in_types and not self.out_types

    @property
    def vector(self) -> np.ndarray:
        """Flattened matrix, convenient for states and effects."""
        return self.matrix.reshape(-1)

    @property
    def in_type(self) -> SystemType | None:
        return joint_type(self.in_types)

    @property
    def out_type(self) -> SystemType | None:
        return joint_type(self.out_types)

    @property
    def theory(self) -> "Theory":
        return get_theory(self.theory_id)

    def __call__(self, other: "ProcessRep") -> "ProcessRep":
        return compose_seq(other, self)

    def __matmul__(self, other: "ProcessRep") -> "ProcessRep":
        return compose_par(self, other)

    def __repr__(self):
        ins = ",".join(t.label for t in self.in_types) or "-"
        outs = ",".join(t.label for t in self.out_types) or "-"
        return f"ProcessRep({ins} -> {outs}, shape={self.matrix.shape})"


def compose_seq(f: ProcessRep, g: ProcessRep) -> ProcessRep:
    """``g`` after ``f``."""
    if f.out_types != g.in_types:
        raise CompositionError(
            f"output types {[t.label for t in f.out_types]} do not match "
            f"input types {[t.label for t in g.in_types]}"
        )
    tid = f.theory_id or g.theory_id
    if f.theory_id and g.theory_id and f.theory_id != g.theory_id:
        raise TheoryMismatchError(f"{f.theory_id} vs {g.theory_id}")
    return ProcessRep(g.matrix @ f.matrix, f.in_types, g.out_types, f.reversible and g.reversible, tid)


def compose_par(f: ProcessRep, g: ProcessRep) -> ProcessRep:
    if f.theory_id and g.theory_id and f.theory_id != g.theory_id:
        raise TheoryMismatchError(f"cannot compose {f.theory_id} with {g.theory_id} in parallel")
    return ProcessRep(
        np.kron(f.matrix, g.matrix),
        f.in_types + g.in_types,
        f.out_types + g.out_types,
        f.reversible and g.reversible,
        f.theory_id or g.theory_id,
    )


def scalar(p: ProcessRep) -> float:
    if not p.is_scalar:
        raise CompositionError("process is not a closed diagram")
    return float(p.matrix[0, 0])


def identity(t) -> ProcessRep:
    atoms = _atoms(t)
    return ProcessRep(np.eye(_dim(atoms)), atoms, atoms, True)


def swap(a: SystemType, b: SystemType) -> ProcessRep:
    """Exchange two wires: ``a b -> b a``."""
    ins = _atoms(a) + _atoms(b)
    na = len(_atoms(a))
    perm = list(range(na, len(ins))) + list(range(na))
    return permutation(ins, perm)


def permutation(types, perm: Sequence[int]) -> ProcessRep:
    """Wire permutation putting input wire ``perm[k]`` at output position ``k``."""
    ins = _atoms(types)
    m = la.permutation_matrix([t.vec_dim for t in ins], perm)
    return ProcessRep(m, ins, tuple(ins[p] for p in perm), True)


# ---------------------------------------------------------------------------
# theories
# ---------------------------------------------------------------------------

_REGISTRY: dict = {}


def register(theory: "Theory") -> "Theory":
    _REGISTRY[theory.id] = theory
    return theory


def get_theory(theory_id: str) -> "Theory":
    try:
        return _REGISTRY[theory_id]
    except KeyError:
        raise UnsupportedError(f"unknown theory {theory_id!r}") from None


class Theory:
    """Common interface of an operational theory.

    Subclasses supply membership tests and unit effects; composition itself
    is theory independent (:func:`compose_seq`, :func:`compose_par`).
    """

    id: str = "abstract"

    def system(self, spec) -> SystemType:
        raise NotImplementedError

    def compose(self, *types: SystemType) -> SystemType:
        return joint_type(types)

    def unit_vector(self, t: SystemType) -> np.ndarray:
        return reduce(np.kron, [self._atom_unit(a) for a in t.atoms])

    def _atom_unit(self, a: SystemType) -> np.ndarray:
        raise NotImplementedError

    def unit_effect(self, t) -> ProcessRep:
        t = joint_type(_atoms(t))
        return ProcessRep(self.unit_vector(t).reshape(1, -1), t.atoms, (), False, self.id)

    def state(self, vec, t) -> ProcessRep:
        return ProcessRep(np.asarray(vec, dtype=float).reshape(-1, 1), (), _atoms(t), False, self.id)

    def effect(self, vec, t) -> ProcessRep:
        return ProcessRep(np.asarray(vec, dtype=float).reshape(1, -1), _atoms(t), (), False, self.id)

    def max_mixed(self, t) -> ProcessRep:
        raise UnsupportedError(f"no maximally mixed state for theory {self.id!r}")

    def is_state(self, p: ProcessRep, normalized: bool = True, tol: float = PSD_TOL) -> bool:
        raise NotImplementedError

    def is_effect(self, p: ProcessRep, tol: float = PSD_TOL) -> bool:
        raise NotImplementedError

    def is_transformation(self, p: ProcessRep, tol: float = PSD_TOL) -> bool:
        raise NotImplementedError

    def marginal(self, p: ProcessRep, keep: Iterable[int]) -> ProcessRep:
        """Discard every output wire not in ``keep`` with the unit effect."""
        keep = sorted(set(keep))
        outs = p.out_types
        parts = [identity(a) if i in keep else self.unit_effect(a) for i, a in enumerate(outs)]
        local = reduce(compose_par, parts)
        return compose_seq(p, local)

    def sample_state(self, t, rng) -> ProcessRep:
        raise NotImplementedError

    def sample_effect(self, t, rng) -> ProcessRep:
        raise NotImplementedError

    def sample_transformation(self, tin, tout, rng) -> ProcessRep:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.id}>"


class QuantumTheory(Theory):
    """Finite-dimensional quantum theory in real Hermitian-basis coordinates."""

    id = "quantum"

    def system(self, d) -> SystemType:
        d = int(d)
        if d < 1:
            raise DimensionError("Hilbert dimension must be positive")
        return SystemType(self.id, f"q{d}", d * d, d)

    def hilbert_dims(self, t) -> tuple:
        return tuple(a.info_dim_hint for a in _atoms(t))

    def hilbert_dim(self, t) -> int:
        return int(np.prod(self.hilbert_dims(t))) if _atoms(t) else 1

    def basis(self, t) -> la.HermBasis:
        return la.product_basis(self.hilbert_dims(t))

    def _atom_unit(self, a):
        return la.to_real(np.eye(a.info_dim_hint), self.basis(a))

    # conversions between complex operators and real coordinates

    def state_from_matrix(self, rho, t) -> ProcessRep:
        return self.state(la.to_real(rho, self.basis(t)), t)

    def state_from_ket(self, ket, t) -> ProcessRep:
        return self.state_from_matrix(la.projector(ket), t)

    def effect_from_matrix(self, e, t) -> ProcessRep:
        return self.effect(la.to_real(e, self.basis(t)), t)

    def operator(self, p: ProcessRep) -> np.ndarray:
        """Density matrix of a state or operator of an effect."""
        if p.is_state:
            return la.from_real(p.vector, self.basis(p.out_types))
        if p.is_effect:
            return la.from_real(p.vector, self.basis(p.in_types))
        raise CompositionError("operator() needs a state or an effect")

    def channel(self, fn, tin, tout=None) -> ProcessRep:
        tout = tin if tout is None else tout
        m = la.superop_to_real(fn, self.basis(tin), self.basis(tout))
        return ProcessRep(m, _atoms(tin), _atoms(tout), False, self.id)

    def kraus_channel(self, kraus, tin, tout=None) -> ProcessRep:
        kraus = [np.asarray(k) for k in kraus]
        return self.channel(lambda x: sum(k @ x @ k.conj().T for k in kraus), tin, tout)

    def unitary_channel(self, u, t) -> ProcessRep:
        u = np.asarray(u)
        p = self.kraus_channel([u], t)
        return ProcessRep(p.matrix, p.in_types, p.out_types, True, self.id)

    def apply(self, p: ProcessRep, x) -> np.ndarray:
        """Apply a transformation to a complex operator (complex-linear extension)."""
        c = la.to_coords(x, self.basis(p.in_types))
        return np.einsum("k,kij->ij", p.matrix @ c, self.basis(p.out_types).elements)

    def choi(self, p: ProcessRep) -> np.ndarray:
        din = self.hilbert_dim(p.in_types)
        dout = self.hilbert_dim(p.out_types)
        c = np.zeros((din * dout, din * dout), dtype=complex)
        for i in range(din):
            for j in range(din):
                e = np.zeros((din, din))
                e[i, j] = 1
                c += np.kron(e, self.apply(p, e))
        return c

    # membership

    def max_mixed(self, t) -> ProcessRep:
        d = self.hilbert_dim(t)
        return self.state_from_matrix(np.eye(d) / d, t)

    def is_state(self, p, normalized=True, tol=PSD_TOL):
        if not p.is_state or p.theory_id != self.id:
            return False
        rho = self.operator(p)
        tr = np.trace(rho).real
        if la.psd_floor(rho) < -tol:
            return False
        return abs(tr - 1) <= tol if normalized else tr <= 1 + tol

    def is_effect(self, p, tol=PSD_TOL):
        if not p.is_effect or p.theory_id != self.id:
            return False
        w = np.linalg.eigvalsh(self.operator(p))
        return w[0] >= -tol and w[-1] <= 1 + tol

    def is_transformation(self, p, tol=PSD_TOL):
        if not p.in_types or not p.out_types or p.theory_id != self.id:
            return False
        c = self.choi(p)
        if la.psd_floor(c) < -tol:
            return False
        din = self.hilbert_dim(p.in_types)
        dout = self.hilbert_dim(p.out_types)
        tr_out = la.partial_trace(c, [din, dout], [0])
        return np.linalg.eigvalsh(tr_out)[-1] <= 1 + tol

    # sampling

    def sample_state(self, t, rng, rank=None):
        return self.state_from_matrix(la.random_density(self.hilbert_dim(t), rank, rng), t)

    def sample_pure(self, t, rng):
        return self.state_from_ket(la.random_ket(self.hilbert_dim(t), rng), t)

    def sample_effect(self, t, rng):
        d = self.hilbert_dim(t)
        u = la.random_unitary(d, rng)
        return self.effect_from_matrix(u @ np.diag(rng.uniform(0, 1, d)) @ u.conj().T, t)

    def sample_transformation(self, tin, tout, rng, n_kraus=2):
        din, dout = self.hilbert_dim(tin), self.hilbert_dim(tout)
        n_kraus = max(n_kraus, -(-din // dout))
        v = la.random_unitary(dout * n_kraus, rng)[:, :din]
        kraus = [v[k * dout:(k + 1) * dout] for k in range(n_kraus)]
        return self.kraus_channel(kraus, tin, tout)


class PolytopeTheory(Theory):
    """Theory whose single-system state spaces are polytopes.

    Each system is described by its extreme states, the generators of its
    effect cone (taken to be the facet functionals, i.e. every mathematically
    valid effect is allowed) and its unit effect.  Composite systems are only
    supported where a subclass defines them.
    """

    def __init__(self, name: str, systems: dict):
        self.id = name
        self._systems = {}
        for label, s in systems.items():
            ext = np.atleast_2d(np.asarray(s["extreme_states"], dtype=float))
            gens = np.atleast_2d(np.asarray(s["effect_generators"], dtype=float))
            unit = np.asarray(s["unit_effect"], dtype=float)
            dim = int(s.get("vec_dim", len(unit)))
            if ext.shape[1] != dim or gens.shape[1] != dim or unit.shape != (dim,):
                raise ValidationError(f"system {label!r}: inconsistent vector dimensions")
            if np.abs(ext @ unit - 1).max() > 1e-9:
                raise ValidationError(f"system {label!r}: unit effect is not 1 on every extreme state")
            t = SystemType(name, label, dim, s.get("info_dim_hint"))
            self._systems[label] = (t, ext, gens, unit)

    def system(self, label=None) -> SystemType:
        if label is None and len(self._systems) == 1:
            label = next(iter(self._systems))
        try:
            return self._systems[str(label)][0]
        except KeyError:
            raise UnsupportedError(f"theory {self.id!r} has no system {label!r}") from None

    @property
    def systems(self) -> list:
        return [v[0] for v in self._systems.values()]

    def _lookup(self, t):
        atoms = _atoms(t)
        if len(atoms) != 1:
            raise UnsupportedError(f"theory {self.id!r} does not define composite systems")
        return self._systems[atoms[0].label]

    def _atom_unit(self, a):
        return self._lookup(a)[3]

    def extreme_states(self, t) -> np.ndarray:
        """Rows are the extreme states."""
        return self._lookup(t)[1]

    def effect_generators(self, t) -> np.ndarray:
        """Rows generate the effect cone; they double as facet normals."""
        return self._lookup(t)[2]

    def centroid(self, t) -> ProcessRep:
        return self.state(self.extreme_states(t).mean(axis=0), t)

    def is_state(self, p, normalized=True, tol=PSD_TOL):
        if not p.is_state or p.theory_id != self.id:
            return False
        t = joint_type(p.out_types)
        x = p.vector
        if (self.effect_generators(t) @ x).min() < -tol:
            return False
        norm = self.unit_vector(t) @ x
        return abs(norm - 1) <= tol if normalized else norm <= 1 + tol

    def is_effect(self, p, tol=PSD_TOL):
        if not p.is_effect or p.theory_id != self.id:
            return False
        vals = self.extreme_states(joint_type(p.in_types)) @ p.vector
        return vals.min() >= -tol and vals.max() <= 1 + tol

    def is_transformation(self, p, tol=PSD_TOL):
        if not p.in_types or not p.out_types or p.theory_id != self.id:
            return False
        tin, tout = joint_type(p.in_types), joint_type(p.out_types)
        images = self.extreme_states(tin) @ p.matrix.T
        if (images @ self.effect_generators(tout).T).min() < -tol:
            return False
        return (images @ self.unit_vector(tout)).max() <= 1 + tol

    def sample_state(self, t, rng):
        ext = self.extreme_states(t)
        return self.state(rng.dirichlet(np.ones(len(ext))) @ ext, t)

    def sample_effect(self, t, rng):
        # a random convex mix of the unit effect, the zero effect and the
        # normalized generators stays inside the effect set
        gens = self.effect_generators(t)
        ext = self.extreme_states(t)
        scaled = [g / max((ext @ g).max(), 1e-12) for g in gens]
        pool = np.array(scaled + [self.unit_vector(t), np.zeros(t.vec_dim)])
        return self.effect(rng.dirichlet(np.ones(len(pool))) @ pool, t)

    def sample_transformation(self, tin, tout, rng):
        # mixture of identity (if types agree) and replacement channels
        target = self.sample_state(tout, rng).vector
        replace = np.outer(target, self.unit_vector(joint_type(_atoms(tin))))
        if _atoms(tin) == _atoms(tout):
            lam = rng.uniform()
            m = lam * np.eye(joint_type(_atoms(tin)).vec_dim) + (1 - lam) * replace
        else:
            m = replace
        return ProcessRep(m, _atoms(tin), _atoms(tout), False, self.id)


class ClassicalTheory(PolytopeTheory):
    """Probability vectors and substochastic maps, composites included."""

    id = "classical"

    def __init__(self):
        self._systems = {}

    def system(self, n) -> SystemType:
        n = int(n)
        if n < 1:
            raise DimensionError("number of outcomes must be positive")
        return SystemType(self.id, f"c{n}", n, n)

    def _atom_unit(self, a):
        return np.ones(a.vec_dim)

    def extreme_states(self, t):
        return np.eye(joint_type(_atoms(t)).vec_dim)

    def effect_generators(self, t):
        return np.eye(joint_type(_atoms(t)).vec_dim)

    def point_mass(self, i: int, t) -> ProcessRep:
        v = np.zeros(joint_type(_atoms(t)).vec_dim)
        v[i] = 1
        return self.state(v, t)

    def max_mixed(self, t):
        n = joint_type(_atoms(t)).vec_dim
        return self.state(np.full(n, 1 / n), t)

    def stochastic(self, m, tin, tout=None) -> ProcessRep:
        tout = tin if tout is None else tout
        return ProcessRep(np.asarray(m, dtype=float), _atoms(tin), _atoms(tout), False, self.id)

    def sample_transformation(self, tin, tout, rng):
        nin, nout = joint_type(_atoms(tin)).vec_dim, joint_type(_atoms(tout)).vec_dim
        return self.stochastic(rng.dirichlet(np.ones(nout), size=nin).T, tin, tout)

    def sample_effect(self, t, rng):
        return self.effect(rng.uniform(0, 1, joint_type(_atoms(t)).vec_dim), t)


def _gbit_spec() -> dict:
    ext = [[1, x, y] for x in (1, -1) for y in (1, -1)]
    gens = [[0.5, 0.5, 0], [0.5, -0.5, 0], [0.5, 0, 0.5], [0.5, 0, -0.5]]
    return {"gbit": {"vec_dim": 3, "extreme_states": ext, "effect_generators": gens,
                     "unit_effect": [1, 0, 0], "info_dim_hint": 2}}


QUANTUM = register(QuantumTheory())
CLASSICAL = register(ClassicalTheory())
GBIT = register(PolytopeTheory("gbit", _gbit_spec()))


def load_theory_spec(source) -> PolytopeTheory:
    """Build and register a polytope theory from a JSON file path, string, or dict.

    Schema::

        {"name": str, "kind": "polytope",
         "systems": [{"label": str, "vec_dim": int, "extreme_states": [[real]],
                      "effect_generators": [[real]], "unit_effect": [real]}]}
    """
    if isinstance(source, dict):
        data = source
    elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        data = json.loads(Path(source).read_text())
    else:
        data = json.loads(source)
    if data.get("kind", "polytope") != "polytope":
        raise UnsupportedError(f"unsupported theory kind {data.get('kind')!r}")
    if data["name"] in ("quantum", "classical"):
        raise ValidationError(f"theory name {data['name']!r} is reserved")
    systems = {s["label"]: s for s in data["systems"]}
    return register(PolytopeTheory(data["name"], systems))


def resolve(name: str) -> tuple:
    """Map ``"quantum:d"``, ``"classical:n"``, ``"gbit"`` or a JSON path to ``(theory, type)``."""
    kind, _, arg = name.partition(":")
    if kind == "quantum":
        return QUANTUM, QUANTUM.system(int(arg or 2))
    if kind == "classical":
        return CLASSICAL, CLASSICAL.system(int(arg or 2))
    if kind in _REGISTRY and not arg:
        th = _REGISTRY[kind]
        return th, th.system()
    if kind in _REGISTRY:
        th = _REGISTRY[kind]
        return th, th.system(arg)
    path = Path(name)
    if path.exists():
        th = load_theory_spec(path)
        return th, th.systems[0]
    raise UnsupportedError(f"unknown theory {name!r}")


# ---------------------------------------------------------------------------
# helpers that look up the theory from the type
# ---------------------------------------------------------------------------


def unit_effect(t) -> ProcessRep:
    return get_theory(_atoms(t)[0].theory_id).unit_effect(t)


def is_causal(p: ProcessRep, tol: float = la.MATRIX_TOL) -> bool:
    """True iff discarding the output equals discarding the input."""
    return causality_residual(p) <= tol


def causality_residual(p: ProcessRep) -> float:
    th = get_theory(p.theory_id)
    lhs = compose_seq(p, th.unit_effect(p.out_types)) if p.out_types else p
    rhs = th.unit_effect(p.in_types)
    return la.residual(lhs.matrix, rhs.matrix)


def max_mixed(t) -> ProcessRep:
    return get_theory(_atoms(t)[0].theory_id).max_mixed(t)


def bell_state(d: int) -> ProcessRep:
    """The state ``(1/d) sum_ij |ii><jj|`` on two ``d``-level quantum systems."""
    if d < 2:
        raise DimensionError("Bell state needs d >= 2")
    q = QUANTUM.system(d)
    return QUANTUM.state_from_ket(la.bell_ket(d), (q, q))


def purification_ket(rho) -> np.ndarray:
    """``sum_i sqrt(p_i) |v_i>|i>`` for ``rho = sum_i p_i |v_i><v_i|``."""
    rho = np.asarray(rho)
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    # eigenvalues at rounding level would become 1e-8 amplitudes under the square root
    w = np.where(w > 1e-13 * max(w.max(), 1e-300), w, 0.0)
    w = w / w.sum()
    d = len(w)
    return np.einsum("ai,i,ib->ab", v, np.sqrt(w), np.eye(d)).reshape(-1)


def purify(rho: ProcessRep) -> ProcessRep:
    """Pure state on ``A A'`` whose marginal on ``A`` is ``rho``."""
    if not QUANTUM.is_state(rho):
        raise StateError("purify needs a normalized quantum state")
    t = rho.out_types
    return QUANTUM.state_from_ket(purification_ket(QUANTUM.operator(rho)), t + t)


def connect_purification_kets(psi, psi2, dims: tuple) -> np.ndarray:
    """Unitary ``U`` on the second factor with ``(1 x U) psi2 ~ psi`` up to a global phase.

    Solved as an orthogonal Procrustes problem: with ``Psi`` the ``dA x dB``
    coefficient matrix of ``psi``, minimize ``||Psi2 X - Psi||`` over unitaries
    ``X = U^T``.  When the two states purify the same marginal an exact
    solution exists and the Procrustes optimum reaches it, degenerate
    Schmidt spectra included.
    """
    da, db = dims
    a = np.asarray(psi).reshape(da, db)
    b = np.asarray(psi2).reshape(da, db)
    w, _, zh = np.linalg.svd(b.conj().T @ a)
    x = w @ zh
    return x.T


def connect_purifications(psi: ProcessRep, psi2: ProcessRep, split: int = 1,
                          tol: float = la.MATRIX_TOL) -> ProcessRep:
    """Reversible map ``R`` on the purifying wires with ``(1 x R) psi2 = psi``.

    ``split`` is the number of leading wires forming the purified system.
    """
    if psi.out_types != psi2.out_types or psi.theory_id != QUANTUM.id:
        raise NotCopurifyingError("both states must be quantum states on the same systems")
    ta, tb = psi.out_types[:split], psi.out_types[split:]
    if not ta or not tb:
        raise NotCopurifyingError("split must leave both sides nonempty")
    da, db = QUANTUM.hilbert_dim(ta), QUANTUM.hilbert_dim(tb)
    rhos = [QUANTUM.operator(p) for p in (psi, psi2)]
    for rho in rhos:
        w = np.linalg.eigvalsh(rho)
        if w[-2] > 1e-8 * max(w[-1], 1e-300):
            raise NotCopurifyingError("input state is not pure")
    marg = [la.partial_trace(r, [da, db], [0]) for r in rhos]
    if la.residual(*marg) > tol:
        raise NotCopurifyingError(f"marginals differ by {la.residual(*marg):.3g}")
    kets = [la.top_ket(r) for r in rhos]
    u = connect_purification_kets(kets[0], kets[1], (da, db))
    return QUANTUM.unitary_channel(u, tb)


# ---------------------------------------------------------------------------
# theory-level checks
# ---------------------------------------------------------------------------


def _classical_like_purification(theory, t, extremes, target, label) -> VerificationReport:
    """Exhaustive search for a pure bipartite state (product of extreme points) marginalizing to target."""
    unit = theory.unit_vector(t)
    best, best_pair = np.inf, None
    for i, a in enumerate(extremes):
        for j, b in enumerate(extremes):
            # discard the second factor of a (x) b
            marg = a * float(unit @ b)
            r = la.residual(marg, target)
            if r < best:
                best, best_pair = r, (i, j)
    rep = VerificationReport()
    rep.add(Check(
        f"purification.{label}", "purification principle", best, la.MATRIX_TOL,
        witness={"target": target, "n_pure_bipartite": len(extremes) ** 2,
                 "closest_pure_bipartite": best_pair,
                 "reason": "every pure bipartite state is a product of extreme states, so its marginal is pure"},
    ))
    return rep


def check_purification_principle(theory: Theory, t: SystemType, n_samples: int = 50,
                                 seed=42) -> VerificationReport:
    """Test the purification principle on ``t``.

    Quantum: purify sampled mixed states and confirm marginal and purity.
    Classical and gbit: the pure bipartite states are exactly the products
    of extreme states, so a mixed single-system state has no purification;
    the check fails with the maximally mixed state as witness.
    """
    rng = la.as_rng(seed)
    if theory is QUANTUM:
        worst, worst_rank = 0.0, 0.0
        for _ in range(n_samples):
            rho = theory.sample_state(t, rng)
            psi = purify(rho)
            back = theory.marginal(psi, range(len(t.atoms)))
            worst = max(worst, la.residual(back.vector, rho.vector))
            w = np.linalg.eigvalsh(theory.operator(psi))
            worst_rank = max(worst_rank, w[-2] / w[-1])
        rep = VerificationReport(seed=seed, dims=[theory.hilbert_dim(t)])
        rep.add(Check(f"purification.{t.label}.marginal", "purification principle", worst, 1e-10))
        rep.add(Check(f"purification.{t.label}.pure", "purification principle", worst_rank, 1e-8))
        return rep
    if isinstance(theory, PolytopeTheory):
        ext = theory.extreme_states(t)
        target = ext.mean(axis=0)
        rep = _classical_like_purification(theory, t, ext, target, t.label)
        rep.seed = seed
        return rep
    raise UnsupportedError(f"purification check not available for {theory!r}")


def check_theory(theory: Theory, t: SystemType, n_samples: int = 50, seed=42,
                 tol: float = la.MATRIX_TOL) -> VerificationReport:
    """Unit-effect normalization, convexity and closure on sampled processes."""
    rng = la.as_rng(seed)
    rep = VerificationReport(seed=seed, dims=[t.label])
    u = theory.unit_effect(t)
    states = [theory.sample_state(t, rng) for _ in range(n_samples)]
    norm = max(abs(scalar(compose_seq(s, u)) - 1) for s in states)
    rep.add(Check(f"theory.{t.label}.unit_effect", "causality: unique deterministic effect", norm, tol))

    bad = 0
    for _ in range(n_samples):
        i, j = rng.integers(len(states), size=2)
        lam = rng.uniform()
        mix = theory.state(lam * states[i].vector + (1 - lam) * states[j].vector, t)
        e = theory.sample_effect(t, rng)
        p_mix = scalar(compose_seq(mix, e))
        p_sep = lam * scalar(compose_seq(states[i], e)) + (1 - lam) * scalar(compose_seq(states[j], e))
        bad = max(bad, abs(p_mix - p_sep), 0.0 if theory.is_state(mix) else 1.0)
    rep.add(Check(f"theory.{t.label}.convexity", "convexity of states", bad, tol))

    worst = 0.0
    for _ in range(n_samples):
        f = theory.sample_transformation(t, t, rng)
        g = theory.sample_transformation(t, t, rng)
        h = compose_seq(f, g)
        s = compose_seq(states[int(rng.integers(len(states)))], h)
        if not (theory.is_transformation(h) and theory.is_state(s, normalized=False)):
            worst = 1.0
        p = scalar(compose_seq(s, theory.sample_effect(t, rng)))
        worst = max(worst, max(-p, p - 1, 0.0))
    rep.add(Check(f"theory.{t.label}.closure", "closure under composition", worst, tol))
    return rep


def system_from_label(label: str, theory: Theory | None = None) -> SystemType:
    """Parse ``"q2"``, ``"c3"``, ``"gbit"`` or composites such as ``"q2*q2"``."""
    atoms = []
    for part in label.split("*"):
        part = part.strip()
        if part[:1] == "q" and part[1:].isdigit():
            atoms.append(QUANTUM.system(int(part[1:])))
        elif part[:1] == "c" and part[1:].isdigit():
            atoms.append(CLASSICAL.system(int(part[1:])))
        elif theory is not None and isinstance(theory, PolytopeTheory):
            atoms.append(theory.system(part))
        elif part in _REGISTRY and isinstance(_REGISTRY[part], PolytopeTheory):
            atoms.append(_REGISTRY[part].system(part))
        else:
            raise UnsupportedError(f"unknown system type {part!r}")
    return joint_type(atoms)
