"""Circuit DSL, wiring diagrams and their evaluation.

Grammar::

    program := (decl NEWLINE)* expr
    decl    := "let" ID "=" expr
    expr    := term (";" term)*          # sequential, left happens first
    term    := factor ("*" factor)*      # parallel
    factor  := ID | BUILTIN "(" args ")" | "(" expr ")"

Newlines only separate declarations at parenthesis depth zero; ``#`` starts a
comment.  Type arguments are written ``q2``, ``c3``, ``gbit`` or composites
such as ``q2*q2``.

A :class:`Diagram` only records connectivity: nodes, wires between output and
input ports, and the ordered free ports.  Evaluation sweeps nodes in a
topological order, keeping a frontier of open wires and inserting explicit
permutation matrices, so any valid order gives the same matrix.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg as la
from .errors import (
    ArityError,
    CycleError,
    DanglingPort,
    DiagramError,
    DslSyntaxError,
    GPTError,
    OpenDiagramError,
    TypeMismatch,
    UnknownIdentifier,
)
from .theory import (
    CLASSICAL,
    QUANTUM,
    ClassicalTheory,
    ProcessRep,
    QuantumTheory,
    bell_state,
    compose_par,
    compose_seq,
    get_theory,
    identity,
    joint_type,
    permutation,
    swap,
    system_from_label,
)


@dataclass(frozen=True)
class Node:
    id: int
    process: ProcessRep
    label: str = ""


@dataclass(frozen=True)
class Wire:
    src: tuple  # (node id, output port)
    dst: tuple  # (node id, input port)


@dataclass
class Diagram:
    nodes: list
    wires: list = field(default_factory=list)
    free_inputs: list = field(default_factory=list)
    free_outputs: list = field(default_factory=list)

    def node(self, nid: int) -> Node:
        for n in self.nodes:
            if n.id == nid:
                return n
        raise DanglingPort(f"no node with id {nid}")

    @classmethod
    def single(cls, process: ProcessRep, label: str = "") -> "Diagram":
        return cls([Node(0, process, label)], [],
                   [(0, i) for i in range(len(process.in_types))],
                   [(0, i) for i in range(len(process.out_types))])


# ---------------------------------------------------------------------------
# type checking and evaluation
# ---------------------------------------------------------------------------


def typecheck(d: Diagram) -> tuple:
    """Return ``(input types, output types)`` or raise a diagnostic."""
    nodes = {n.id: n for n in d.nodes}
    if len(nodes) != len(d.nodes):
        raise DanglingPort("duplicate node ids")

    def port_type(port, side):
        nid, k = port
        if nid not in nodes:
            raise DanglingPort(f"port {port} refers to unknown node")
        types = nodes[nid].process.out_types if side == "out" else nodes[nid].process.in_types
        if not 0 <= k < len(types):
            raise DanglingPort(f"node {nid} ({nodes[nid].label}) has no {side}put port {k}")
        return types[k]

    used_in: dict = {}
    used_out: dict = {}
    for w in d.wires:
        a, b = port_type(w.src, "out"), port_type(w.dst, "in")
        if a != b:
            raise TypeMismatch(f"wire {w.src} -> {w.dst} connects {a.label} to {b.label}")
        used_out[w.src] = used_out.get(w.src, 0) + 1
        used_in[w.dst] = used_in.get(w.dst, 0) + 1
    for p in d.free_inputs:
        port_type(p, "in")
        used_in[p] = used_in.get(p, 0) + 1
    for p in d.free_outputs:
        port_type(p, "out")
        used_out[p] = used_out.get(p, 0) + 1
    for n in d.nodes:
        for k in range(len(n.process.in_types)):
            c = used_in.get((n.id, k), 0)
            if c != 1:
                raise DanglingPort(f"input port {k} of node {n.id} ({n.label}) is used {c} times")
        for k in range(len(n.process.out_types)):
            c = used_out.get((n.id, k), 0)
            if c != 1:
                raise DanglingPort(f"output port {k} of node {n.id} ({n.label}) is used {c} times")
    topological_order(d)
    return (tuple(port_type(p, "in") for p in d.free_inputs),
            tuple(port_type(p, "out") for p in d.free_outputs))


def topological_order(d: Diagram, rng=None) -> list:
    """Kahn's algorithm; with ``rng`` the ready node is picked at random."""
    preds = {n.id: set() for n in d.nodes}
    for w in d.wires:
        if w.src[0] == w.dst[0]:
            raise CycleError(f"node {w.src[0]} is wired to itself")
        preds[w.dst[0]].add(w.src[0])
    order = []
    ready = sorted(k for k, v in preds.items() if not v)
    remaining = {k: set(v) for k, v in preds.items()}
    while ready:
        i = int(rng.integers(len(ready))) if rng is not None else 0
        nid = ready.pop(i)
        order.append(nid)
        del remaining[nid]
        for k, v in remaining.items():
            if nid in v:
                v.discard(nid)
                if not v:
                    ready.append(k)
        ready.sort()
    if remaining:
        raise CycleError(f"wiring contains a cycle through nodes {sorted(remaining)}")
    return order


def evaluate(d: Diagram, order: list | None = None, seed=None) -> ProcessRep:
    """Compose the diagram into one process.

    ``order`` fixes the node sweep; otherwise a seeded random topological
    order is used (the default sweep when ``seed`` is None).
    """
    in_types, out_types = typecheck(d)
    if order is None:
        order = topological_order(d, la.as_rng(seed) if seed is not None else None)
    nodes = {n.id: n for n in d.nodes}
    dest = {w.src: w.dst for w in d.wires}
    for j, p in enumerate(d.free_outputs):
        dest[p] = ("out", j)

    # frontier labels name the port each open wire will feed
    frontier = list(d.free_inputs)
    types = list(in_types)
    acc = identity(in_types) if in_types else None
    tid = next((n.process.theory_id for n in d.nodes if n.process.theory_id), None)
    for nid in order:
        node = nodes[nid]
        k = len(node.process.in_types)
        front = [frontier.index((nid, i)) for i in range(k)]
        rest = [i for i in range(len(frontier)) if i not in front]
        perm = front + rest
        if acc is not None and perm != list(range(len(perm))):
            acc = compose_seq(acc, permutation(types, perm))
        rest_types = [types[i] for i in rest]
        step = node.process
        if rest_types:
            step = compose_par(step, identity(rest_types))
        acc = compose_seq(acc, step) if acc is not None else step
        frontier = [dest[(nid, i)] for i in range(len(node.process.out_types))] + [frontier[i] for i in rest]
        types = list(node.process.out_types) + rest_types
    if acc is None:
        return ProcessRep(np.ones((1, 1)), (), (), True, tid)
    perm = [frontier.index(("out", j)) for j in range(len(out_types))]
    if perm != list(range(len(perm))):
        acc = compose_seq(acc, permutation(types, perm))
    if acc.theory_id is None and tid is not None:
        acc = ProcessRep(acc.matrix, acc.in_types, acc.out_types, acc.reversible, tid)
    return acc


def probability(d: Diagram, clamp: bool = False) -> float:
    """Value of a closed diagram; ``clamp`` restricts it to [0, 1] for reports."""
    if d.free_inputs or d.free_outputs:
        raise OpenDiagramError(
            f"diagram has {len(d.free_inputs)} free inputs and {len(d.free_outputs)} free outputs")
    p = float(evaluate(d).matrix[0, 0])
    return min(1.0, max(0.0, p)) if clamp else p


# ---------------------------------------------------------------------------
# combinators used by the parser
# ---------------------------------------------------------------------------


def _renumber(d: Diagram, offset: int) -> Diagram:
    m = lambda p: (p[0] + offset, p[1])  # noqa: E731
    return Diagram([Node(n.id + offset, n.process, n.label) for n in d.nodes],
                   [Wire(m(w.src), m(w.dst)) for w in d.wires],
                   [m(p) for p in d.free_inputs], [m(p) for p in d.free_outputs])


def _next_id(d: Diagram) -> int:
    return max((n.id for n in d.nodes), default=-1) + 1


def _port_types(d: Diagram, ports, side) -> list:
    nodes = {n.id: n for n in d.nodes}
    attr = "out_types" if side == "out" else "in_types"
    return [getattr(nodes[i].process, attr)[k] for i, k in ports]


def seq(a: Diagram, b: Diagram, where=None) -> Diagram:
    """``a`` then ``b``: free outputs of ``a`` feed free inputs of ``b`` in order."""
    b = _renumber(b, _next_id(a))
    ta, tb = _port_types(a, a.free_outputs, "out"), _port_types(b, b.free_inputs, "in")
    if [t.label for t in ta] != [t.label for t in tb] or ta != tb:
        msg = (f"type mismatch at ';': left side outputs [{', '.join(t.label for t in ta)}] "
               f"but right side expects [{', '.join(t.label for t in tb)}]")
        raise TypeMismatch(msg, *(where or (None, None, None)))
    wires = a.wires + b.wires + [Wire(s, t) for s, t in zip(a.free_outputs, b.free_inputs)]
    return Diagram(a.nodes + b.nodes, wires, a.free_inputs, b.free_outputs)


def par(a: Diagram, b: Diagram) -> Diagram:
    b = _renumber(b, _next_id(a))
    return Diagram(a.nodes + b.nodes, a.wires + b.wires,
                   a.free_inputs + b.free_inputs, a.free_outputs + b.free_outputs)


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

_NAMED_UNITARIES = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]).astype(complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


def _quantum(t, name):
    if t.theory_id != QUANTUM.id:
        raise TypeMismatch(f"{name} needs a quantum type, got {t.label}")
    return QUANTUM.hilbert_dim(t)


def _basis_state(t, i, name):
    th = get_theory(t.theory_id)
    if isinstance(th, QuantumTheory):
        return th.state_from_ket(np.eye(th.hilbert_dim(t))[i], t)
    if isinstance(th, ClassicalTheory):
        return th.point_mass(i, t)
    raise TypeMismatch(f"{name} is not defined for {t.label}")


def _basis_effect(t, i, name):
    th = get_theory(t.theory_id)
    if isinstance(th, QuantumTheory):
        return th.effect_from_matrix(la.projector(np.eye(th.hilbert_dim(t))[i]), t)
    if isinstance(th, ClassicalTheory):
        return th.effect(np.eye(t.vec_dim)[i], t)
    raise TypeMismatch(f"{name} is not defined for {t.label}")


def _b_dephase(t):
    d = _quantum(t, "dephase")
    projs = [la.projector(np.eye(d)[i]) for i in range(d)]
    return QUANTUM.channel(lambda x: sum(p @ x @ p for p in projs), t)


def _b_plus(t):
    d = _quantum(t, "plus")
    return QUANTUM.state_from_ket(np.ones(d) / np.sqrt(d), t)


def _b_unitary(t, spec):
    d = _quantum(t, "unitary")
    if isinstance(spec, int):
        u = la.random_unitary(d, spec)
    elif spec in _NAMED_UNITARIES:
        u = _NAMED_UNITARIES[spec]
        if u.shape[0] != d:
            raise TypeMismatch(f"unitary {spec} acts on dimension {u.shape[0]}, not {d}")
    else:
        raise UnknownIdentifier(f"unknown unitary {spec!r}")
    return QUANTUM.unitary_channel(u, t)


def _b_stochastic(t, *entries):
    n = t.vec_dim
    if t.theory_id != CLASSICAL.id:
        raise TypeMismatch(f"stochastic needs a classical type, got {t.label}")
    if len(entries) != n * n:
        raise ArityError(f"stochastic({t.label}) needs {n * n} entries, got {len(entries)}")
    return CLASSICAL.stochastic(np.array(entries, dtype=float).reshape(n, n), t)


def _b_maxmix(t):
    th = get_theory(t.theory_id)
    try:
        return th.max_mixed(t)
    except GPTError:
        return th.centroid(t)


# name -> (argument kinds, constructor); kinds: T type, d int, s int-or-name, x number
BUILTINS = {
    "id": ("T", lambda t: identity(t)),
    "discard": ("T", lambda t: get_theory(t.theory_id).unit_effect(t)),
    "bell": ("d", lambda d: bell_state(d)),
    "maxmix": ("T", _b_maxmix),
    "state0": ("T", lambda t: _basis_state(t, 0, "state0")),
    "state1": ("T", lambda t: _basis_state(t, 1, "state1")),
    "plus": ("T", _b_plus),
    "effect0": ("T", lambda t: _basis_effect(t, 0, "effect0")),
    "effect1": ("T", lambda t: _basis_effect(t, 1, "effect1")),
    "dephase": ("T", _b_dephase),
    "unitary": ("Ts", _b_unitary),
    "stochastic": ("Tx*", _b_stochastic),
    "swap": ("TT", lambda a, b: swap(a, b)),
}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DslSource:
    text: str
    filename: str = "<input>"

    @classmethod
    def from_file(cls, path) -> "DslSource":
        path = Path(path)
        return cls(path.read_text(encoding="utf-8"), str(path))


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<comment>\#[^\n]*) | (?P<nl>\n)
  | (?P<num>-?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|-?\.\d+(?:[eE][-+]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*) | (?P<op>[;*(),=])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: DslSource) -> list:
    toks, pos, line, start = [], 0, 1, 0
    text = src.text
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", src.filename, line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            toks.append(Tok("nl", "\n", line, pos - start + 1))
            line, start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            toks.append(Tok(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - start + 1))
    return toks


class _Parser:
    def __init__(self, src: DslSource, bindings: dict):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0
        self.depth = 0
        self.env = {k: (v if isinstance(v, Diagram) else Diagram.single(v, k)) for k, v in bindings.items()}

    # token helpers; newlines are invisible inside parentheses
    def peek(self) -> Tok:
        while self.depth > 0 and self.toks[self.i].kind == "nl":
            self.i += 1
        return self.toks[self.i]

    def next(self) -> Tok:
        t = self.peek()
        self.i += 1
        return t

    def loc(self, t: Tok) -> tuple:
        return self.src.filename, t.line, t.col

    def expect(self, text: str) -> Tok:
        t = self.next()
        if t.text != text:
            got = "end of input" if t.kind == "eof" else repr(t.text) if t.kind != "nl" else "newline"
            raise DslSyntaxError(f"expected {text!r}, got {got}", *self.loc(t))
        return t

    def skip_newlines(self):
        while self.peek().kind == "nl":
            self.i += 1

    def program(self) -> Diagram:
        self.skip_newlines()
        while self.peek().text == "let":
            self.next()
            name = self.next()
            if name.kind != "id":
                raise DslSyntaxError("expected identifier after 'let'", *self.loc(name))
            if name.text in BUILTINS:
                raise DslSyntaxError(f"cannot rebind builtin {name.text!r}", *self.loc(name))
            self.expect("=")
            self.env[name.text] = self.expr()
            t = self.peek()
            if t.kind != "nl":
                raise DslSyntaxError("expected newline after declaration", *self.loc(t))
            self.skip_newlines()
        if self.peek().kind == "eof":
            raise DslSyntaxError("program has no expression", *self.loc(self.peek()))
        d = self.expr()
        self.skip_newlines()
        t = self.peek()
        if t.kind != "eof":
            raise DslSyntaxError(f"unexpected {t.text!r} after expression", *self.loc(t))
        return d

    def expr(self) -> Diagram:
        d = self.term()
        while self.peek().text == ";":
            op = self.next()
            self.skip_newlines()  # a trailing operator continues the line
            d = seq(d, self.term(), self.loc(op))
        return d

    def term(self) -> Diagram:
        d = self.factor()
        while self.peek().text == "*":
            self.next()
            self.skip_newlines()
            d = par(d, self.factor())
        return d

    def factor(self) -> Diagram:
        t = self.next()
        if t.text == "(":
            self.depth += 1
            d = self.expr()
            self.expect(")")
            self.depth -= 1
            return d
        if t.kind != "id":
            got = "end of input" if t.kind == "eof" else "newline" if t.kind == "nl" else repr(t.text)
            raise DslSyntaxError(f"expected a process, got {got}", *self.loc(t))
        if t.text in BUILTINS:
            return self.builtin(t)
        if t.text in self.env:
            return self.env[t.text]
        raise UnknownIdentifier(f"unknown identifier {t.text!r}", *self.loc(t))

    def type_arg(self) -> object:
        parts = [self.next()]
        while self.peek().text == "*":
            self.next()
            parts.append(self.next())
        label = "*".join(p.text for p in parts)
        try:
            return system_from_label(label)
        except GPTError as e:
            raise UnknownIdentifier(f"unknown type {label!r}", *self.loc(parts[0])) from e

    def argument(self, fname: str, kind: str):
        if kind == "T":
            return self.type_arg()
        tok = self.next()
        if kind == "s" and tok.kind in ("id", "num"):
            return int(tok.text) if tok.kind == "num" else tok.text
        if tok.kind != "num":
            raise DslSyntaxError(f"{fname} expects a number, got {tok.text!r}", *self.loc(tok))
        if kind == "x":
            return float(tok.text)
        if not tok.text.lstrip("-").isdigit():
            raise DslSyntaxError(f"{fname} expects an integer", *self.loc(tok))
        return int(tok.text)

    def builtin(self, name: Tok) -> Diagram:
        kinds, ctor = BUILTINS[name.text]
        t = self.peek()
        if t.text != "(":
            raise ArityError(f"{name.text} needs arguments in parentheses", *self.loc(t))
        self.next()
        self.depth += 1
        repeat = kinds.endswith("*")
        base = kinds.rstrip("*")
        args = []
        while self.peek().text != ")":
            if args:
                self.expect("," if self.peek().text == "," else ")")
            tok = self.peek()
            if len(args) < len(base):
                kind = base[len(args)]
            elif repeat:
                kind = base[-1]
            else:
                raise ArityError(f"{name.text} takes {len(base)} argument(s)", *self.loc(tok))
            args.append(self.argument(name.text, kind))
        self.expect(")")
        self.depth -= 1
        least = len(base) - 1 if repeat else len(base)
        if len(args) < least or (not repeat and len(args) != len(base)):
            raise ArityError(f"{name.text} takes {len(base)} argument(s), got {len(args)}", *self.loc(name))
        try:
            proc = ctor(*args)
        except DiagramError as e:
            if e.line is None:
                raise type(e)(e.message, *self.loc(name)) from e
            raise
        except GPTError as e:
            raise TypeMismatch(f"{name.text}: {e}", *self.loc(name)) from e
        return Diagram.single(proc, name.text)


def parse(src, bindings: dict | None = None, filename: str = "<input>") -> Diagram:
    """Parse DSL text (or a :class:`DslSource`) into a diagram.

    ``bindings`` maps identifiers to processes or diagrams usable in the text.
    """
    if isinstance(src, str):
        src = DslSource(src, filename)
    return _Parser(src, bindings or {}).program()


def parse_file(path, bindings: dict | None = None) -> Diagram:
    return parse(DslSource.from_file(path), bindings)


def result_json(p: ProcessRep) -> dict:
    """JSON-ready description of an evaluated diagram."""
    out = {
        "inputs": [t.label for t in p.in_types],
        "outputs": [t.label for t in p.out_types],
        "theory": p.theory_id,
        "matrix": p.matrix,
    }
    if p.is_scalar:
        out["probability"] = float(p.matrix[0, 0])
    return out


def dumps_result(p: ProcessRep) -> str:
    from .report import jsonable

    return json.dumps(jsonable(result_json(p)), sort_keys=True)
