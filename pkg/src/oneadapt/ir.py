"""Layered lattice IR with bounded temporal edges.

A program is a stack of 2D layers. Cells hold node incarnations or routing
segments; temporal edges tie incarnations across layers, either to continue
a node's storage (Refreshing) or to realize a graph edge (Computing).
Temporal edges are limited to the configured length bound and to a 2D skew
of at most one cell.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class PatternError(Exception):
    pass


class ContractError(Exception):
    pass


REFRESHING = "R"
COMPUTING = "C"

# cell contents
EMPTY = None


@dataclass(frozen=True)
class IntraPath:
    """Routed intra-layer connection; cells run endpoint to endpoint."""

    nodes: tuple[int, int]
    cells: tuple[tuple[int, int], ...]


@dataclass
class Layer:
    """One 2D layer: a cell grid plus its routed connections."""

    width: int
    height: int
    grid: list[list[object]]
    paths: list[IntraPath] = field(default_factory=list)

    @classmethod
    def empty(cls, width: int, height: int) -> "Layer":
        return cls(width, height, [[EMPTY] * width for _ in range(height)])

    def cell(self, x: int, y: int):
        return self.grid[y][x]

    def put_node(self, x: int, y: int, node: int) -> None:
        self.grid[y][x] = ("node", node)

    def put_route(self, x: int, y: int, path_id: int) -> None:
        self.grid[y][x] = ("route", path_id)

    def clear(self, x: int, y: int) -> None:
        self.grid[y][x] = EMPTY

    def node_at(self, x: int, y: int) -> int | None:
        c = self.grid[y][x]
        if isinstance(c, tuple) and c[0] == "node":
            return c[1]
        return None

    def free_cells(self) -> list[tuple[int, int]]:
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.grid[y][x] is EMPTY
        ]


@dataclass(frozen=True)
class TemporalEdge:
    src: tuple[int, int, int]  # (layer, x, y)
    dst: tuple[int, int, int]
    kind: str  # REFRESHING | COMPUTING

    @property
    def length(self) -> int:
        return self.dst[0] - self.src[0]

    @property
    def skew(self) -> int:
        return abs(self.dst[1] - self.src[1]) + abs(self.dst[2] - self.src[2])


@dataclass
class IRProgram:
    width: int
    height: int
    layers: list[Layer] = field(default_factory=list)
    temporal_edges: list[TemporalEdge] = field(default_factory=list)
    # node -> [(layer, x, y), ...] in strictly increasing layer order
    incarnations: dict[int, list[tuple[int, int, int]]] = field(default_factory=dict)

    def node_at(self, layer: int, x: int, y: int) -> int | None:
        if 0 <= layer < len(self.layers):
            return self.layers[layer].node_at(x, y)
        return None


@dataclass
class Metrics:
    depth_1d: int
    size_2d: tuple[int, int]
    max_temporal_len: int
    max_meas_wait: int
    volume_3d: int


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def _canon(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def validate(ir: IRProgram, gs, limit_df: int, skew_enabled: bool = True) -> ValidationReport:
    """Enumerate every violation; an empty report means the IR is legal."""
    bad: list[Violation] = []

    def oob(x: int, y: int) -> bool:
        return not (0 <= x < ir.width and 0 <= y < ir.height)

    # incarnation bookkeeping vs the grids
    node_cells: dict[tuple[int, int, int], int] = {}
    for v, incs in sorted(ir.incarnations.items()):
        prev = -1
        for (l, x, y) in incs:
            if l <= prev:
                bad.append(Violation("incarnation", f"node {v} layers not strictly increasing"))
            prev = l
            if oob(x, y) or not 0 <= l < len(ir.layers):
                bad.append(Violation("bounds", f"node {v} incarnation at ({l},{x},{y})"))
                continue
            if ir.layers[l].node_at(x, y) != v:
                bad.append(Violation("incarnation", f"node {v} not on grid at ({l},{x},{y})"))
            node_cells[(l, x, y)] = v

    for l, layer in enumerate(ir.layers):
        if layer.width != ir.width or layer.height != ir.height:
            bad.append(Violation("bounds", f"layer {l} grid is {layer.width}x{layer.height}"))
            continue
        for y in range(layer.height):
            for x in range(layer.width):
                c = layer.grid[y][x]
                if c is not EMPTY and c[0] == "node" and (l, x, y) not in node_cells:
                    bad.append(Violation("incarnation", f"grid node {c[1]} at ({l},{x},{y}) missing from incarnations"))

        # paths: connectivity, endpoints, pairwise disjointness
        cell_owner: dict[tuple[int, int], list[int]] = {}
        for pid, path in enumerate(layer.paths):
            cells = path.cells
            if len(cells) < 2:
                bad.append(Violation("path", f"layer {l} path {pid} shorter than 2 cells"))
                continue
            if any(oob(x, y) for x, y in cells):
                bad.append(Violation("bounds", f"layer {l} path {pid} leaves the grid"))
                continue
            for (x1, y1), (x2, y2) in zip(cells, cells[1:]):
                if abs(x1 - x2) + abs(y1 - y2) != 1:
                    bad.append(Violation("path", f"layer {l} path {pid} not 4-adjacent at ({x1},{y1})"))
            a, b = path.nodes
            if layer.node_at(*cells[0]) != a or layer.node_at(*cells[-1]) != b:
                bad.append(Violation("path", f"layer {l} path {pid} endpoints do not match nodes {a},{b}"))
            for (x, y) in cells[1:-1]:
                if layer.node_at(x, y) is not None:
                    bad.append(Violation("exclusivity", f"layer {l} path {pid} interior crosses a node at ({x},{y})"))
            for (x, y) in cells:
                cell_owner.setdefault((x, y), []).append(pid)
        for (x, y), owners in sorted(cell_owner.items()):
            if len(owners) > 1:
                # sharing is fine only at a node cell that is an endpoint of
                # every path meeting there
                node_here = layer.node_at(x, y)
                all_endpoint = all(
                    (x, y) in (layer.paths[p].cells[0], layer.paths[p].cells[-1]) for p in owners
                )
                if node_here is None or not all_endpoint:
                    bad.append(Violation("exclusivity", f"layer {l} paths {owners} share cell ({x},{y})"))

    for e in ir.temporal_edges:
        (l1, x1, y1), (l2, x2, y2) = e.src, e.dst
        if oob(x1, y1) or oob(x2, y2) or not 0 <= l1 < len(ir.layers) or not 0 <= l2 < len(ir.layers):
            bad.append(Violation("bounds", f"temporal edge {e.src}->{e.dst}"))
            continue
        if l2 <= l1:
            bad.append(Violation("temporal-order", f"edge {e.src}->{e.dst} does not move forward"))
            continue
        if e.length > limit_df:
            bad.append(Violation("temporal-length", f"edge {e.src}->{e.dst} length {e.length} > {limit_df}"))
        skew = e.skew
        if skew > 1 or (not skew_enabled and skew != 0):
            bad.append(Violation("temporal-skew", f"edge {e.src}->{e.dst} skew {skew}"))
        a = ir.node_at(l1, x1, y1)
        b = ir.node_at(l2, x2, y2)
        if a is None or b is None:
            bad.append(Violation("temporal-endpoint", f"edge {e.src}->{e.dst} endpoint is not a node cell"))
            continue
        if e.kind == REFRESHING:
            if a != b:
                bad.append(Violation("refresh-endpoint", f"refreshing edge joins nodes {a} and {b}"))
            else:
                incs = ir.incarnations.get(a, [])
                try:
                    i = incs.index((l1, x1, y1))
                except ValueError:
                    i = -1
                if i < 0 or i + 1 >= len(incs) or incs[i + 1] != (l2, x2, y2):
                    bad.append(Violation("refresh-endpoint", f"refreshing edge on node {a} skips incarnations"))
        elif e.kind == COMPUTING:
            if a == b:
                bad.append(Violation("computing-edge", f"computing edge loops on node {a}"))
            elif gs is not None and _canon(a, b) not in gs.edges:
                bad.append(Violation("computing-edge", f"computing edge {a}-{b} has no graph edge"))
        else:
            bad.append(Violation("temporal-kind", f"unknown kind {e.kind!r}"))

    return ValidationReport(bad)


def realized_edges(ir: IRProgram) -> set[tuple[int, int]]:
    """Graph edges the IR realizes: routed connections + computing edges."""
    out: set[tuple[int, int]] = set()
    for layer in ir.layers:
        for path in layer.paths:
            out.add(_canon(*path.nodes))
    for e in ir.temporal_edges:
        if e.kind == COMPUTING:
            a = ir.node_at(*e.src)
            b = ir.node_at(*e.dst)
            if a is not None and b is not None and a != b:
                out.add(_canon(a, b))
    return out


def contract_refresh(ir: IRProgram) -> set[tuple[int, int]]:
    """Merge incarnations per node; the result is the realized edge set."""
    for e in ir.temporal_edges:
        if e.kind == REFRESHING:
            a = ir.node_at(*e.src)
            b = ir.node_at(*e.dst)
            if a is None or b is None or a != b:
                raise ContractError(f"refreshing edge {e.src}->{e.dst} joins nodes {a} and {b}")
    return realized_edges(ir)


def _edge_layers(ir: IRProgram) -> dict[tuple[int, int], int]:
    """Layer at which each realized edge first materializes."""
    when: dict[tuple[int, int], int] = {}
    for l, layer in enumerate(ir.layers):
        for path in layer.paths:
            key = _canon(*path.nodes)
            when[key] = min(when.get(key, l), l)
    for e in ir.temporal_edges:
        if e.kind == COMPUTING:
            a = ir.node_at(*e.src)
            b = ir.node_at(*e.dst)
            if a is None or b is None or a == b:
                continue
            key = _canon(a, b)
            when[key] = min(when.get(key, e.dst[0]), e.dst[0])
    return when


def metrics(ir: IRProgram, dag, exclude: frozenset[int] = frozenset()) -> Metrics:
    """Depth, footprint, longest temporal edge, and worst measurement wait.

    `exclude` lists nodes without a measurement (outputs); they contribute
    completion layers for their successors but no wait of their own.
    """
    depth = len(ir.layers)
    max_len = max((e.length for e in ir.temporal_edges), default=0)
    when = _edge_layers(ir)
    completion: dict[int, int] = {}
    for (a, b), l in when.items():
        completion[a] = max(completion.get(a, -1), l)
        completion[b] = max(completion.get(b, -1), l)
    for v, incs in ir.incarnations.items():
        if v not in completion:
            completion[v] = incs[0][0] if incs else 0
    wait = 0
    if dag is not None:
        for v, incs in ir.incarnations.items():
            if v in exclude or not incs:
                continue
            preds = dag.pred.get(v, set())
            if not preds:
                continue
            det = max(completion.get(u, 0) for u in preds)
            wait = max(wait, det - incs[-1][0])
    return Metrics(
        depth_1d=depth,
        size_2d=(ir.width, ir.height),
        max_temporal_len=max_len,
        max_meas_wait=max(0, wait),
        volume_3d=ir.width * ir.height * depth,
    )


def refresh_basis_pattern(path_len: int) -> str:
    """Fixed measurement bases that make a refresh chain an identity wire."""
    if path_len < 2:
        raise PatternError(f"no identity pattern for a chain of {path_len}")
    if path_len % 2 == 0:
        return "X" * path_len
    return "X" * (path_len - 3) + "YYY"


# --- serialization ---


def _rle_encode(layer: Layer) -> list:
    runs: list = []
    for y in range(layer.height):
        for x in range(layer.width):
            c = layer.grid[y][x]
            if c is EMPTY:
                tok = "."
            elif c[0] == "node":
                tok = f"n{c[1]}"
            else:
                tok = f"r{c[1]}"
            if runs and runs[-1][1] == tok:
                runs[-1][0] += 1
            else:
                runs.append([1, tok])
    return runs


def _rle_decode(runs: list, width: int, height: int) -> Layer:
    layer = Layer.empty(width, height)
    i = 0
    for count, tok in runs:
        for _ in range(count):
            y, x = divmod(i, width)
            i += 1
            if tok == ".":
                continue
            if tok.startswith("n"):
                layer.put_node(x, y, int(tok[1:]))
            elif tok.startswith("r"):
                layer.put_route(x, y, int(tok[1:]))
            else:
                raise ContractError(f"bad cell token {tok!r}")
    if i != width * height:
        raise ContractError("cell run length does not fill the grid")
    return layer


def to_json(ir: IRProgram) -> str:
    layers = []
    for layer in ir.layers:
        paths = [
            {"nodes": list(p.nodes), "cells": [list(c) for c in p.cells]}
            for p in sorted(layer.paths, key=lambda p: p.cells)
        ]
        layers.append({"cells": _rle_encode(layer), "paths": paths})
    temporal = [
        {"from": list(e.src), "to": list(e.dst), "kind": e.kind}
        for e in sorted(ir.temporal_edges, key=lambda e: (e.src[0], e.src[2], e.src[1], e.dst))
    ]
    incs = [[v, [list(c) for c in cells]] for v, cells in sorted(ir.incarnations.items())]
    payload = {
        "width": ir.width,
        "height": ir.height,
        "layers": layers,
        "temporal": temporal,
        "incarnations": incs,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> IRProgram:
    try:
        data = json.loads(text)
        width = int(data["width"])
        height = int(data["height"])
        layers = []
        for rec in data["layers"]:
            layer = _rle_decode(rec["cells"], width, height)
            for p in rec["paths"]:
                a, b = p["nodes"]
                cells = tuple((int(x), int(y)) for x, y in p["cells"])
                layer.paths.append(IntraPath((int(a), int(b)), cells))
                for (x, y) in cells[1:-1]:
                    layer.put_route(x, y, len(layer.paths) - 1)
            layers.append(layer)
        edges = [
            TemporalEdge(tuple(e["from"]), tuple(e["to"]), e["kind"])
            for e in data["temporal"]
        ]
        incs = {int(v): [tuple(c) for c in cells] for v, cells in data["incarnations"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractError(f"malformed IR: {exc}") from exc
    return IRProgram(width, height, layers, edges, incs)
