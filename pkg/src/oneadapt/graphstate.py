"""Circuits over the {J(angle), CZ} gate set and their graph-state form.

A J gate measures the current wire node and extends the wire by one fresh
node; CZ adds an edge between the two current wire heads. Measurement-order
constraints are captured in a dependency DAG derived from the wire-successor
map (byproduct corrections flow to the successor and its graph neighbors).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction


class TranslationError(Exception):
    pass


class BenchmarkError(Exception):
    pass


class DependencyError(Exception):
    pass


# Random angles are quantized onto this denominator so every angle stays an
# exact rational (in pi units) through serialization.
_ANGLE_DEN = 2048


def _as_angle(a) -> Fraction:
    if isinstance(a, Fraction):
        return a
    if isinstance(a, int):
        return Fraction(a)
    if isinstance(a, float):
        return Fraction(a).limit_denominator(_ANGLE_DEN)
    raise TranslationError(f"unsupported angle {a!r}")


@dataclass(frozen=True)
class JGate:
    qubit: int
    angle: Fraction


@dataclass(frozen=True)
class CZGate:
    q1: int
    q2: int


@dataclass
class Circuit:
    """A gate list over {J, CZ} on num_qubits wires."""

    num_qubits: int
    gates: list[JGate | CZGate] = field(default_factory=list)

    def j(self, q: int, angle) -> "Circuit":
        self._check_wire(q)
        self.gates.append(JGate(q, _as_angle(angle)))
        return self

    def cz(self, a: int, b: int) -> "Circuit":
        self._check_wire(a)
        self._check_wire(b)
        if a == b:
            raise TranslationError("CZ needs two distinct wires")
        self.gates.append(CZGate(a, b))
        return self

    # Standard gates in the native set: H = J(0), Rz(a) = [J(a), J(0)],
    # Rx(a) = [J(0), J(a)], CNOT = H_t CZ H_t.
    def h(self, q: int) -> "Circuit":
        return self.j(q, 0)

    def rz(self, q: int, angle) -> "Circuit":
        return self.j(q, angle).j(q, 0)

    def rx(self, q: int, angle) -> "Circuit":
        return self.j(q, 0).j(q, angle)

    def ry(self, q: int, angle) -> "Circuit":
        return self.rz(q, Fraction(-1, 2)).rx(q, angle).rz(q, Fraction(1, 2))

    def cnot(self, ctrl: int, tgt: int) -> "Circuit":
        return self.h(tgt).cz(ctrl, tgt).h(tgt)

    def zz(self, a: int, b: int, angle) -> "Circuit":
        return self.cnot(a, b).rz(b, angle).cnot(a, b)

    def t(self, q: int) -> "Circuit":
        return self.rz(q, Fraction(1, 4))

    def tdg(self, q: int) -> "Circuit":
        return self.rz(q, Fraction(-1, 4))

    def toffoli(self, a: int, b: int, tgt: int) -> "Circuit":
        # 7-T decomposition
        self.h(tgt)
        self.cnot(b, tgt).tdg(tgt).cnot(a, tgt).t(tgt)
        self.cnot(b, tgt).tdg(tgt).cnot(a, tgt).t(tgt)
        self.t(b).h(tgt)
        self.cnot(a, b).t(a).tdg(b).cnot(a, b)
        return self

    def _check_wire(self, q: int) -> None:
        if not 0 <= q < self.num_qubits:
            raise TranslationError(f"wire {q} out of range")

    def j_count(self) -> int:
        return sum(1 for g in self.gates if isinstance(g, JGate))

    def to_json(self) -> str:
        gates = []
        for g in self.gates:
            if isinstance(g, JGate):
                gates.append({"op": "J", "q": g.qubit, "angle": [g.angle.numerator, g.angle.denominator]})
            else:
                gates.append({"op": "CZ", "q1": g.q1, "q2": g.q2})
        return json.dumps({"n": self.num_qubits, "gates": gates}, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        try:
            data = json.loads(text)
            circ = cls(int(data["n"]))
            for g in data["gates"]:
                if g["op"] == "J":
                    num, den = g["angle"]
                    circ.j(int(g["q"]), Fraction(int(num), int(den)))
                elif g["op"] == "CZ":
                    circ.cz(int(g["q1"]), int(g["q2"]))
                else:
                    raise TranslationError(f"unknown op {g['op']!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise TranslationError(f"malformed circuit: {exc}") from exc
        return circ


@dataclass
class GraphStateProgram:
    """Graph state plus measurement bookkeeping.

    `angle` has an entry for every measured node; output nodes carry none.
    `wire_successor` is injective: it maps each measured wire node to the
    node its state teleports onto.
    """

    nodes: set[int]
    edges: set[tuple[int, int]]
    angle: dict[int, Fraction]
    inputs: set[int]
    outputs: set[int]
    wire_successor: dict[int, int]

    def neighbors(self, v: int) -> set[int]:
        out = set()
        for a, b in self.edges:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return out

    def neighbor_map(self) -> dict[int, set[int]]:
        nbr: dict[int, set[int]] = {v: set() for v in self.nodes}
        for a, b in self.edges:
            nbr[a].add(b)
            nbr[b].add(a)
        return nbr

    def node_edges(self, v: int) -> set[tuple[int, int]]:
        return {e for e in self.edges if v in e}

    def check(self) -> None:
        for a, b in self.edges:
            if a == b:
                raise TranslationError("self-loop edge")
            if a not in self.nodes or b not in self.nodes:
                raise TranslationError("edge endpoint outside node set")
        if len(set(self.wire_successor.values())) != len(self.wire_successor):
            raise TranslationError("wire_successor not injective")
        for v in self.outputs:
            if v in self.angle:
                raise TranslationError(f"output {v} carries an angle")

    def to_json(self) -> str:
        nodes = []
        for v in sorted(self.nodes):
            a = self.angle.get(v)
            nodes.append({"id": v, "angle": None if a is None else [a.numerator, a.denominator]})
        dag = build_dag(self)
        deps = sorted((u, v) for u, vs in dag.succ.items() for v in vs)
        payload = {
            "nodes": nodes,
            "edges": sorted(map(list, self.edges)),
            "inputs": sorted(self.inputs),
            "outputs": sorted(self.outputs),
            "flow": sorted(map(list, self.wire_successor.items())),
            "deps": [list(d) for d in deps],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "GraphStateProgram":
        try:
            data = json.loads(text)
            angle = {}
            nodes = set()
            for rec in data["nodes"]:
                v = int(rec["id"])
                nodes.add(v)
                if rec["angle"] is not None:
                    num, den = rec["angle"]
                    angle[v] = Fraction(int(num), int(den))
            gs = cls(
                nodes=nodes,
                edges={_canon(int(a), int(b)) for a, b in data["edges"]},
                angle=angle,
                inputs={int(v) for v in data["inputs"]},
                outputs={int(v) for v in data["outputs"]},
                wire_successor={int(u): int(v) for u, v in data["flow"]},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TranslationError(f"malformed graph-state program: {exc}") from exc
        gs.check()
        return gs


def _canon(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def translate_circuit(circuit: Circuit) -> GraphStateProgram:
    """Replay the gate list into a graph state with wire-successor flow."""
    nq = circuit.num_qubits
    if nq < 1:
        raise TranslationError("circuit needs at least one wire")
    wire = list(range(nq))
    nodes = set(wire)
    edges: set[tuple[int, int]] = set()
    angle: dict[int, Fraction] = {}
    succ: dict[int, int] = {}
    nxt = nq
    for g in circuit.gates:
        if isinstance(g, JGate):
            u = wire[g.qubit]
            v = nxt
            nxt += 1
            nodes.add(v)
            angle[u] = g.angle
            succ[u] = v
            edges.add(_canon(u, v))
            wire[g.qubit] = v
        elif isinstance(g, CZGate):
            e = _canon(wire[g.q1], wire[g.q2])
            # CZ is an edge toggle; a repeated CZ on the same pair cancels
            edges.symmetric_difference_update({e})
        else:
            raise TranslationError(f"unsupported gate {g!r}")
    gs = GraphStateProgram(
        nodes=nodes,
        edges=edges,
        angle=angle,
        inputs=set(range(nq)),
        outputs=set(wire),
        wire_successor=succ,
    )
    gs.check()
    return gs


@dataclass
class DepDag:
    """Measurement dependency DAG over graph-state nodes."""

    nodes: set[int]
    succ: dict[int, set[int]]
    pred: dict[int, set[int]]
    complete: set[int] = field(default_factory=set)

    def in_degree(self, v: int) -> int:
        """Predecessors still outstanding (complete ones no longer count)."""
        return len(self.pred[v] - self.complete)


def build_dag(gs: GraphStateProgram) -> DepDag:
    """Derive measurement ordering: u precedes f(u) and f(u)'s neighbors."""
    succ: dict[int, set[int]] = {v: set() for v in gs.nodes}
    pred: dict[int, set[int]] = {v: set() for v in gs.nodes}
    nbr = gs.neighbor_map()
    for u, fu in gs.wire_successor.items():
        targets = {fu} | (nbr[fu] - {u})
        for w in targets:
            succ[u].add(w)
            pred[w].add(u)
    # Kahn pass to reject cycles
    indeg = {v: len(pred[v]) for v in gs.nodes}
    ready = [v for v in gs.nodes if indeg[v] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if seen != len(gs.nodes):
        raise DependencyError("dependency graph has a cycle")
    return DepDag(nodes=set(gs.nodes), succ=succ, pred=pred)


def front_layer(dag: DepDag) -> set[int]:
    """Non-complete nodes whose every predecessor is complete."""
    return {
        v
        for v in dag.nodes
        if v not in dag.complete and dag.pred[v] <= dag.complete
    }


def update_dag(dag: DepDag, ir, gs: GraphStateProgram) -> DepDag:
    """Recompute completeness from the edges the IR has realized."""
    from . import ir as irmod

    realized = irmod.realized_edges(ir)
    complete = {v for v in dag.nodes if gs.node_edges(v) <= realized}
    return DepDag(nodes=set(dag.nodes), succ=dag.succ, pred=dag.pred, complete=complete)


def _random_regular_graph(n: int, degree: int, rng: random.Random) -> list[tuple[int, int]]:
    """Configuration model with rejection until simple."""
    while True:
        stubs = [v for v in range(n) for _ in range(degree)]
        rng.shuffle(stubs)
        edges: set[tuple[int, int]] = set()
        ok = True
        for i in range(0, len(stubs), 2):
            a, b = stubs[i], stubs[i + 1]
            if a == b or _canon(a, b) in edges:
                ok = False
                break
            edges.add(_canon(a, b))
        if ok:
            return sorted(edges)


def _rand_angle(rng: random.Random) -> Fraction:
    return Fraction(rng.randrange(1, _ANGLE_DEN), _ANGLE_DEN)


def gen_benchmark(kind: str, n: int, seed: int) -> Circuit:
    """Seeded benchmark circuits: QAOA, RCA (Cuccaro), VQE."""
    kind = kind.upper()
    rng = random.Random(seed)
    if kind == "QAOA":
        if n < 4 or n % 2:
            raise BenchmarkError("QAOA needs even n >= 4 (3-regular graph)")
        circ = Circuit(n)
        gamma = _rand_angle(rng)
        beta = _rand_angle(rng)
        for a, b in _random_regular_graph(n, 3, rng):
            circ.zz(a, b, gamma)
        for q in range(n):
            circ.rx(q, beta)
        return circ
    if kind == "RCA":
        if n < 4:
            raise BenchmarkError("RCA needs n >= 4 (two registers plus carries)")
        k = (n - 2) // 2
        cin = 0
        a = list(range(1, 1 + k))
        b = list(range(1 + k, 1 + 2 * k))
        cout = 1 + 2 * k
        circ = Circuit(n)

        def maj(x, y, z):
            circ.cnot(z, y).cnot(z, x).toffoli(x, y, z)

        def uma(x, y, z):
            circ.toffoli(x, y, z).cnot(z, x).cnot(x, y)

        maj(cin, b[0], a[0])
        for i in range(1, k):
            maj(a[i - 1], b[i], a[i])
        circ.cnot(a[k - 1], cout)
        for i in range(k - 1, 0, -1):
            uma(a[i - 1], b[i], a[i])
        uma(cin, b[0], a[0])
        return circ
    if kind == "VQE":
        if n < 2:
            raise BenchmarkError("VQE needs n >= 2")
        circ = Circuit(n)
        for q in range(n):
            circ.ry(q, _rand_angle(rng))
        for i in range(n):
            for jq in range(i + 1, n):
                circ.cnot(i, jq)
        return circ
    raise BenchmarkError(f"unknown benchmark {kind!r}")


# --- logical-level programs for the patch scheduler ---


@dataclass(frozen=True)
class CnotSurgery:
    ctrl: int
    tgt: int


@dataclass(frozen=True)
class TOp:
    qubit: int


@dataclass(frozen=True)
class IdleOp:
    pass


@dataclass
class LogicalProgram:
    """Patch-occupancy program: CNOT surgeries, T injections, idles."""

    num_algorithmic: int
    ops: list[CnotSurgery | TOp | IdleOp] = field(default_factory=list)

    def to_json(self) -> str:
        ops = []
        for op in self.ops:
            if isinstance(op, CnotSurgery):
                ops.append({"op": "CNOT", "c": op.ctrl, "t": op.tgt})
            elif isinstance(op, TOp):
                ops.append({"op": "T", "q": op.qubit})
            else:
                ops.append({"op": "IDLE"})
        return json.dumps({"n": self.num_algorithmic, "ops": ops}, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "LogicalProgram":
        try:
            data = json.loads(text)
            prog = cls(int(data["n"]))
            for rec in data["ops"]:
                if rec["op"] == "CNOT":
                    prog.ops.append(CnotSurgery(int(rec["c"]), int(rec["t"])))
                elif rec["op"] == "T":
                    prog.ops.append(TOp(int(rec["q"])))
                elif rec["op"] == "IDLE":
                    prog.ops.append(IdleOp())
                else:
                    raise BenchmarkError(f"unknown op {rec['op']!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise BenchmarkError(f"malformed logical program: {exc}") from exc
        return prog


def _ccz(prog: LogicalProgram, a: int, b: int, c: int) -> None:
    # 7 T + 6 CNOT; local Cliffords are free at this granularity
    ops = prog.ops
    ops.append(CnotSurgery(b, c))
    ops.append(TOp(c))
    ops.append(CnotSurgery(a, c))
    ops.append(TOp(c))
    ops.append(CnotSurgery(b, c))
    ops.append(TOp(c))
    ops.append(CnotSurgery(a, c))
    ops.append(TOp(c))
    ops.append(TOp(b))
    ops.append(CnotSurgery(a, b))
    ops.append(TOp(a))
    ops.append(TOp(b))
    ops.append(CnotSurgery(a, b))


def _multi_cz(prog: LogicalProgram, n: int) -> None:
    """Phase flip on the all-ones subspace, as patch occupancy."""
    if n == 2:
        prog.ops.append(CnotSurgery(0, 1))
        return
    # staircase of CCZs; an occupancy model, not an exact unitary
    _ccz(prog, 0, 1, 2)
    for q in range(3, n):
        _ccz(prog, q - 2, q - 1, q)


def gen_ft_program(kind: str, n: int, seed: int) -> LogicalProgram:
    """Seeded fault-tolerant workloads: QFT, Grover, QSIM (XXZ chain)."""
    kind = kind.upper()
    if n < 2:
        raise BenchmarkError("FT programs need n >= 2")
    prog = LogicalProgram(n)
    if kind == "QFT":
        # H is free; each controlled-phase = 3 rotations + 2 CNOTs, one T per
        # rotation under the fixed per-rotation T-count rule
        for i in range(n):
            for jq in range(i + 1, n):
                prog.ops.append(TOp(jq))
                prog.ops.append(TOp(i))
                prog.ops.append(CnotSurgery(jq, i))
                prog.ops.append(TOp(i))
                prog.ops.append(CnotSurgery(jq, i))
        return prog
    if kind == "GROVER":
        iters = max(1, math.floor(math.pi / 4 * math.sqrt(2**n)))
        for _ in range(iters):
            _multi_cz(prog, n)  # oracle (X frames free)
            _multi_cz(prog, n)  # diffusion (H/X frames free)
        return prog
    if kind == "QSIM":
        # one Trotter step of the XXZ chain: XX, YY, ZZ per edge, each
        # basis change (free) + [CNOT, T, CNOT]
        for i in range(n - 1):
            for _term in range(3):
                prog.ops.append(CnotSurgery(i, i + 1))
                prog.ops.append(TOp(i + 1))
                prog.ops.append(CnotSurgery(i, i + 1))
        return prog
    raise BenchmarkError(f"unknown FT benchmark {kind!r}")
