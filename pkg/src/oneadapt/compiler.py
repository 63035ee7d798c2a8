"""Layer-by-layer mapper from graph states onto the bounded-temporal IR.

Each layer runs: refresh selection/placement for stored nodes, routing
among refreshed nodes, input spill, then new-node mapping rounds. Stored
nodes are refreshed before their storage age can exceed the temporal
length bound, so every temporal edge the dynamic mode emits is within the
bound by construction. A guard defers any edge realization that would
fix a node's measurement basis later than its final incarnation, which
pins the worst-case measurement wait at zero.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import NamedTuple

from .graphstate import GraphStateProgram, build_dag
from .ir import (
    COMPUTING,
    EMPTY,
    IntraPath,
    IRProgram,
    Layer,
    Metrics,
    REFRESHING,
    TemporalEdge,
    metrics as ir_metrics,
    validate,
)


class CompileError(Exception):
    pass


class InfeasibleRefresh(CompileError):
    pass


class CongestionError(CompileError):
    pass


class CongestionStuck(CongestionError):
    pass


DYNAMIC = "dynamic"
PERIODIC = "periodic"

# quiet layers before a full-store recovery refresh kicks in
_RECOVERY_STALL = 8


@dataclass
class CompilerConfig:
    width: int
    height: int
    limit_df: int
    p: float = 0.4
    skew_enabled: bool = True
    refresh_mode: str = DYNAMIC
    max_rounds: int = 4
    congestion_limit: int = 50
    seed: int = 0

    def check(self) -> None:
        if self.width < 1 or self.height < 1:
            raise CompileError("grid must be at least 1x1")
        if self.limit_df < 1:
            raise CompileError("temporal length bound must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise CompileError("refresh budget fraction must be in [0, 1]")
        if self.refresh_mode not in (DYNAMIC, PERIODIC):
            raise CompileError(f"unknown refresh mode {self.refresh_mode!r}")
        if self.max_rounds < 1 or self.congestion_limit < 1:
            raise CompileError("max_rounds and congestion_limit must be >= 1")

    @property
    def cells(self) -> int:
        return self.width * self.height


class DelayEntry(NamedTuple):
    """Where a stored node last materialized."""

    layer: int
    pos: tuple[int, int]


@dataclass
class RefreshSelection:
    mandatory: list[int]
    optional: list[int]


def compute_refresh_bound(m_last: int, cells: int, p: float) -> float:
    """Fraction of cells to spend on refresh this layer."""
    return min(m_last / cells + p, 1.0)


def node_age(entry: DelayEntry, current_layer: int) -> int:
    return current_layer - entry.layer


def select_refresh(
    store: dict[int, DelayEntry],
    unrealized: dict[int, set[int]],
    mapped: set[int],
    current_layer: int,
    bound: float,
    limit_df: int,
    cells: int,
) -> RefreshSelection:
    """Mandatory refreshes by age, then optional by category within budget.

    Optional priority: partners of a mandatory node, then nodes with a
    stored partner, then nodes whose every partner is still unmapped;
    each category by descending age, ties by ascending node id.
    """
    mandatory = sorted(
        v for v, e in store.items() if node_age(e, current_layer) >= limit_df
    )
    if len(mandatory) > cells:
        raise InfeasibleRefresh(
            f"{len(mandatory)} mandatory refreshes exceed {cells} cells"
        )
    slots = int(bound * cells) - len(mandatory)
    optional: list[int] = []
    if slots > 0:
        mset = set(mandatory)
        cats: tuple[list[int], ...] = ([], [], [])
        for v in sorted(store):
            if v in mset:
                continue
            partners = unrealized[v]
            if not partners:
                continue
            if partners & mset:
                cats[0].append(v)
            elif any(p in store for p in partners):
                cats[1].append(v)
            elif all(p not in mapped for p in partners):
                cats[2].append(v)
        for cat in cats:
            cat.sort(key=lambda v: (-node_age(store[v], current_layer), v))
        optional = (cats[0] + cats[1] + cats[2])[:slots]
    return RefreshSelection(mandatory, optional)


def _near(pos: tuple[int, int], width: int, height: int, skew: bool) -> list[tuple[int, int]]:
    x, y = pos
    cells = [(x, y)]
    if skew:
        cells += [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]
    return [(cx, cy) for cx, cy in cells if 0 <= cx < width and 0 <= cy < height]


def _openness(cell: tuple[int, int], layer: Layer) -> int:
    return sum(
        1
        for c in _near(cell, layer.width, layer.height, True)
        if c != cell and layer.cell(*c) is EMPTY
    )


def place_refresh(
    selection: RefreshSelection,
    layer: Layer,
    store: dict[int, DelayEntry],
    unrealized: dict[int, set[int]],
    skew_enabled: bool,
    alias: dict[int, int] | None = None,
    jitter: dict[tuple[int, int], float] | None = None,
) -> tuple[dict[int, tuple[int, int]], list[int]]:
    """Place selected nodes near their stored position, mandatory first.

    Connected nodes pull toward their stored partners' positions; the rest
    maximize open neighborhood. A mandatory node with no free near-cell
    raises; blocked optionals are dropped. `alias` substitutes the grid id
    actually placed (pending-neighbor replacement).
    """
    alias = alias or {}

    def chained(block: list[int]) -> list[int]:
        # lay partner-connected runs back-to-back so the second of a pair
        # can snap next to the first before displacement chains intervene
        block_set = set(block)
        seen: set[int] = set()
        out: list[int] = []
        for root in block:
            if root in seen:
                continue
            seen.add(root)
            queue = [root]
            while queue:
                v = queue.pop(0)
                out.append(v)
                for nb in sorted(unrealized[v]):
                    if nb in block_set and nb not in seen:
                        seen.add(nb)
                        queue.append(nb)
        return out

    order = chained(selection.mandatory) + chained(selection.optional)
    placements: dict[int, tuple[int, int]] = {}
    occupant: dict[tuple[int, int], int] = {}
    dropped: list[int] = []
    n_mand = len(selection.mandatory)

    def ranked(v: int) -> list[tuple[int, int]]:
        cands = _near(store[v].pos, layer.width, layer.height, skew_enabled)
        # pull toward every stored partner, co-selected or not: landing next
        # to a dormant partner's cell realizes the edge through time, which
        # is the only way out when refresh waves are phase-locked
    def cost(v: int, c: tuple[int, int]) -> float:
        partners = [
            placements.get(nb, store[nb].pos)
            for nb in sorted(unrealized[v])
            if nb in store
        ]
        if partners:
            # adjacency is the goal: sitting on a partner's cell blocks it,
            # so distance 1 beats distance 0
            return sum(
                abs(abs(c[0] - px) + abs(c[1] - py) - 1) for px, py in partners
            )
        return -_openness(c, layer)

    def ranked(v: int) -> list[tuple[int, int]]:
        cands = _near(store[v].pos, layer.width, layer.height, skew_enabled)
        # deadlocked placements repeat verbatim without a tiebreak shuffle
        tie = (lambda c: (jitter[c],)) if jitter else (lambda c: (c[1], c[0]))
        return sorted(cands, key=lambda c: (cost(v, c),) + tie(c))

    def settle(
        v: int, visited: set[tuple[int, int]], strict: bool
    ) -> tuple[int, int] | None:
        # augmenting assignment: take the best-ranked cell, displacing an
        # earlier placement into its own reach if needed; the visited set
        # keeps full cohorts (limit_df=1 remaps the whole grid) polynomial
        limit = cost(v, placements[v]) if strict and v in placements else None
        for c in ranked(v):
            if limit is not None and cost(v, c) > limit:
                return None  # ranked is cost-sorted: everything after is worse
            if c in visited:
                continue
            visited.add(c)
            u = occupant.get(c)
            if u is None:
                if layer.cell(*c) is EMPTY:
                    return c
                continue  # taken by something not movable this phase
            spot = settle(u, visited, strict)
            if spot is not None:
                layer.clear(*c)
                layer.put_node(spot[0], spot[1], alias.get(u, u))
                occupant[spot] = u
                placements[u] = spot
                del occupant[c]
                return c
        return None

    for rank, v in enumerate(order):
        # displacing a settled node to a cell worse for its own pulls breaks
        # adjacencies other pairs rely on, so try cost-preserving moves
        # first; feasibility for a mandatory node still overrides quality
        cell = settle(v, set(), True)
        if cell is None and rank < n_mand:
            cell = settle(v, set(), False)
        if cell is None:
            if rank < n_mand:
                raise CongestionError(f"no free cell to refresh node {v}")
            dropped.append(v)
            continue
        layer.put_node(cell[0], cell[1], alias.get(v, v))
        occupant[cell] = v
        placements[v] = cell
    return placements, dropped


def _shortest_route(
    layer: Layer, src: tuple[int, int], dst: tuple[int, int]
) -> list[tuple[int, int]] | None:
    """Dijkstra through empty cells; endpoints exempt, ties prefer (y, x)."""
    if abs(src[0] - dst[0]) + abs(src[1] - dst[1]) == 1:
        return [src, dst]
    dist: dict[tuple[int, int], int] = {src: 0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    heap: list[tuple[int, int, int]] = [(0, src[1], src[0])]
    while heap:
        d, y, x = heapq.heappop(heap)
        if dist.get((x, y), -1) != d:
            continue  # stale entry
        for ny, nx in sorted(((y - 1, x), (y, x - 1), (y, x + 1), (y + 1, x))):
            if not (0 <= nx < layer.width and 0 <= ny < layer.height):
                continue
            if (nx, ny) in dist:
                continue
            if (nx, ny) == dst:
                path = [dst, (x, y)]
                while path[-1] != src:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            if layer.cell(nx, ny) is EMPTY:
                dist[(nx, ny)] = d + 1
                parent[(nx, ny)] = (x, y)
                heapq.heappush(heap, (d + 1, ny, nx))
    return None


def route_on_layer(
    layer: Layer,
    pairs: list[tuple[int, int]],
    pos: dict[int, tuple[int, int]],
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Route each pair in order, claiming interior cells; unroutable pairs
    are skipped, not fatal."""
    done: list[tuple[int, int]] = []
    skipped: list[tuple[int, int]] = []
    for a, b in pairs:
        path = _shortest_route(layer, pos[a], pos[b])
        if path is None:
            skipped.append((a, b))
            continue
        pid = len(layer.paths)
        layer.paths.append(IntraPath((a, b), tuple(path)))
        for x, y in path[1:-1]:
            layer.put_route(x, y, pid)
        done.append((a, b))
    return done, skipped


def _canon(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


class _Run:
    """One compilation: all mutable state for the layer loop."""

    def __init__(self, gs: GraphStateProgram, cfg: CompilerConfig):
        cfg.check()
        gs.check()
        self.gs = gs
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.dag = build_dag(gs)
        self.nbr = gs.neighbor_map()
        self.unrealized = {v: set(ps) for v, ps in self.nbr.items()}
        self.realized: set[tuple[int, int]] = set()
        self.complete: set[int] = {v for v in gs.nodes if not self.nbr[v]}
        self.completion_layer: dict[int, int] = {v: 0 for v in self.complete}
        self.unmeasured = frozenset(v for v in gs.nodes if v not in gs.angle)
        self.store: dict[int, DelayEntry] = {}
        self.mapped: set[int] = set()
        self.subs: dict[int, int] = {}
        self.input_queue: list[int] = sorted(gs.inputs)
        self.ir = IRProgram(cfg.width, cfg.height)
        self.m_last = 0
        self.quiet = 0
        # periodic-mode round state
        self.round_pending: list[int] | None = None
        self.last_round_end = 0

    # --- shared bookkeeping ---

    def _place(self, v: int, cell: tuple[int, int], t: int, layer: Layer) -> None:
        layer.put_node(cell[0], cell[1], v)
        self.ir.incarnations.setdefault(v, []).append((t, cell[0], cell[1]))
        self.mapped.add(v)
        if v not in self.complete:
            self.store[v] = DelayEntry(t, cell)
        self.pos[v] = cell

    def _unplace(self, v: int, t: int, layer: Layer) -> None:
        cell = self.pos.pop(v)
        layer.clear(*cell)
        incs = self.ir.incarnations[v]
        assert incs[-1] == (t, cell[0], cell[1])
        incs.pop()
        if not incs:
            del self.ir.incarnations[v]
            self.mapped.discard(v)
        self.store.pop(v, None)

    def _edge_guard(self, a: int, la: int, b: int, lb: int) -> bool:
        """Allow a realization only if it cannot create measurement wait.

        A measured node's basis is fixed once its last edge realizes; that
        moment must not land after the layer of its final incarnation.
        """
        for node, bound, other, other_completes in (
            (a, la, b, self.unrealized[b] == {a}),
            (b, lb, a, self.unrealized[a] == {b}),
        ):
            if node in self.unmeasured or self.unrealized[node] != {other}:
                continue
            for p in self.dag.pred[node]:
                if p in self.complete:
                    if self.completion_layer[p] > bound:
                        return False
                elif p == other and other_completes:
                    if self.t > bound:
                        return False
                else:
                    return False
        return True

    def _realize(self, a: int, b: int, on_layer: tuple[int, ...]) -> None:
        self.realized.add(_canon(a, b))
        self.unrealized[a].discard(b)
        self.unrealized[b].discard(a)
        self.connected.update(on_layer)
        for v in (a, b):
            if not self.unrealized[v] and v not in self.complete:
                self.complete.add(v)
                self.completion_layer[v] = self.t
                self.store.pop(v, None)
                self.subs.pop(v, None)
        self.edges_done += 1

    def _emit_temporal(self, v: int, cell: tuple[int, int], layer_bound: int | None) -> None:
        """Realize edges to stored partners whose position aligns in skew."""
        t = self.t
        allow = 1 if self.cfg.skew_enabled else 0
        for nb in sorted(self.unrealized[v]):
            e = self.store.get(nb)
            if e is None or e.layer >= t:
                continue
            if layer_bound is not None and t - e.layer > layer_bound:
                continue
            if abs(e.pos[0] - cell[0]) + abs(e.pos[1] - cell[1]) > allow:
                continue
            if not self._edge_guard(nb, e.layer, v, t):
                continue
            self.ir.temporal_edges.append(
                TemporalEdge((e.layer, e.pos[0], e.pos[1]), (t, cell[0], cell[1]), COMPUTING)
            )
            self._realize(nb, v, (v,))

    def _batch_guard(self, cand: list[tuple[int, int]]) -> list[tuple[int, int]]:
        """Largest subset of on-layer pairs that may realize together.

        Nodes completing this layer may lean on each other: a dependency
        that completes in the same batch determines the basis on the same
        layer the node last materializes, which is still zero wait.
        The chains this admits cannot unravel one edge at a time.
        """
        valid = set(cand)
        while True:
            would: dict[int, bool] = {}

            def completes(v: int) -> bool:
                if v not in would:
                    would[v] = v not in self.complete and all(
                        _canon(v, q) in valid for q in self.unrealized[v]
                    )
                return would[v]

            cut = None
            for e in sorted(valid):
                for v in e:
                    if v in self.unmeasured or not completes(v):
                        continue
                    for p in self.dag.pred[v]:
                        if p in self.complete or completes(p):
                            continue
                        cut = e
                        break
                    if cut:
                        break
                if cut:
                    break
            if cut is None:
                return sorted(valid)
            valid.discard(cut)

    def _completion_batch(self) -> list[int] | None:
        """Smallest co-refresh cohort that finishes at least one stored node.

        A long-range edge can close a cycle in the completion order, so a
        whole knot of nodes may only finish on a shared layer. Growing a
        closure from each stored node tells the true price of finishing
        it: partners whose last edge this is must finish too, finishing a
        measured node drags in its undetermined dependencies, and every
        edge needs both ends on the layer. Returns the cheapest cohort
        that fits the grid, or None.
        """
        best: list[int] | None = None
        for seed in sorted(self.store):
            group = {seed}
            extras: set[int] = set()
            queue = [seed]
            feasible = True
            while queue and feasible:
                v = queue.pop()
                if v not in self.store:
                    feasible = False
                    break
                for w in self.unrealized[v]:
                    if w not in self.store:
                        feasible = False
                        break
                    if w in group:
                        continue
                    if self.unrealized[w] == {v} and w not in self.unmeasured:
                        group.add(w)
                        extras.discard(w)
                        queue.append(w)
                    else:
                        extras.add(w)
                if not feasible or v in self.unmeasured:
                    continue
                for p in self.dag.pred[v]:
                    if p not in self.complete and p not in group:
                        group.add(p)
                        extras.discard(p)
                        queue.append(p)
            if not feasible:
                continue
            cohort = sorted(group | extras)
            if len(cohort) > self.cfg.cells:
                continue
            if best is None or (len(cohort), cohort) < (len(best), best):
                best = cohort
        return best

    def _route_pairs(self, layer: Layer) -> None:
        """Route the admissible unrealized pairs present on this layer."""
        banned: set[tuple[int, int]] = set()
        while True:
            cand = sorted(
                {
                    _canon(a, b)
                    for a in self.pos
                    for b in self.unrealized[a]
                    if b in self.pos
                }
                - self.realized
                - banned
            )
            valid = self._batch_guard(cand)
            routed: list[tuple[tuple[int, int], list[tuple[int, int]]]] = []
            failed = None
            for a, b in valid:
                path = _shortest_route(layer, self.pos[a], self.pos[b])
                if path is None:
                    failed = (a, b)
                    break
                pid = len(layer.paths)
                layer.paths.append(IntraPath((a, b), tuple(path)))
                for x, y in path[1:-1]:
                    layer.put_route(x, y, pid)
                routed.append(((a, b), path))
            if failed is None:
                for (a, b), _path in routed:
                    self._realize(a, b, (a, b))
                return
            # an unroutable pair may have been load-bearing for the batch:
            # unwind this attempt and re-solve without it
            for (_e, path) in reversed(routed):
                layer.paths.pop()
                for x, y in path[1:-1]:
                    layer.clear(x, y)
            banned.add(failed)

    # --- per-layer phases ---

    def _refresh_phase(self, layer: Layer) -> tuple[dict[int, tuple[int, int]], RefreshSelection]:
        t = self.t
        cfg = self.cfg
        if cfg.refresh_mode == DYNAMIC:
            bound = compute_refresh_bound(self.m_last, cfg.cells, cfg.p)
            sel = select_refresh(
                self.store, self.unrealized, self.mapped, t, bound, cfg.limit_df, cfg.cells
            )
            jitter = None
            if self.quiet >= _RECOVERY_STALL:
                # the budget can starve a cluster that only completes as a
                # whole; after a quiet stretch co-select one ready cluster
                # (everything stored, failing that), let it claim cells
                # before the crowd walls it in, and shuffle placement ties
                # so retries explore new configurations
                batch = self._completion_batch()
                pool = batch or self.store
                mand = set(sel.mandatory)
                lead = set(batch or ())
                mandatory = sorted(sel.mandatory, key=lambda v: (v not in lead, v))
                extra = sorted(
                    (v for v in pool if v not in mand),
                    key=lambda v: (-node_age(self.store[v], t), v),
                )
                sel = RefreshSelection(mandatory, extra)
                jitter = {
                    (x, y): self.rng.random()
                    for y in range(cfg.height)
                    for x in range(cfg.width)
                }
        else:
            jitter = None
            if self.round_pending is None and self.store and t - self.last_round_end >= cfg.limit_df:
                self.round_pending = sorted(self.store)
            if self.round_pending is not None:
                pending = [v for v in self.round_pending if v in self.store]
                sel = RefreshSelection([], pending)
            else:
                sel = RefreshSelection([], [])

        alias: dict[int, int] = {}
        taken: set[int] = set()
        for u in sel.mandatory + sel.optional:
            w = self.subs.get(u)
            if w is None:
                continue
            if w in taken:
                continue  # another refresh claims the same target this layer
            if (
                w not in self.mapped
                and self.unrealized[u] == {w}
                and self._edge_guard(u, self.store[u].layer, w, t)
            ):
                alias[u] = w
                taken.add(w)
            else:
                del self.subs[u]

        prev_entries = {v: self.store[v] for v in sel.mandatory + sel.optional}
        placements, _dropped = place_refresh(
            sel, layer, self.store, self.unrealized, cfg.skew_enabled, alias, jitter
        )
        if cfg.refresh_mode == PERIODIC and self.round_pending is not None:
            if not placements and prev_entries:
                raise CongestionError("refresh round cannot place any node")

        for u, cell in placements.items():
            if u in self.complete:
                # a co-refreshed partner's emission already finished u:
                # drop the now-pointless placement, freeing the cell
                layer.clear(*cell)
                continue
            old = prev_entries[u]
            if u in alias:
                w = alias[u]
                # the stored node hands its wire edge to the fresh neighbor
                self.ir.incarnations.setdefault(w, []).append((t, cell[0], cell[1]))
                self.mapped.add(w)
                self.store[w] = DelayEntry(t, cell)
                self.pos[w] = cell
                self.first_mapped += 1
                self.ir.temporal_edges.append(
                    TemporalEdge((old.layer, old.pos[0], old.pos[1]), (t, cell[0], cell[1]), COMPUTING)
                )
                del self.subs[u]
                self._realize(u, w, (w,))
                self._emit_temporal(w, cell, cfg.limit_df if cfg.refresh_mode == DYNAMIC else None)
            else:
                self.ir.incarnations[u].append((t, cell[0], cell[1]))
                self.store[u] = DelayEntry(t, cell)
                self.pos[u] = cell
                self.ir.temporal_edges.append(
                    TemporalEdge((old.layer, old.pos[0], old.pos[1]), (t, cell[0], cell[1]), REFRESHING)
                )
                self._emit_temporal(u, cell, cfg.limit_df if cfg.refresh_mode == DYNAMIC else None)

        self._prev_entries = prev_entries
        return placements, sel

    def _prune_isolated_optionals(
        self, layer: Layer, placements: dict[int, tuple[int, int]], sel: RefreshSelection
    ) -> None:
        if self.cfg.refresh_mode == PERIODIC:
            return  # round remaps are keepers
        mand = set(sel.mandatory)
        for v in sel.optional:
            if v not in placements or v not in self.store:
                continue  # dropped, substituted away, or completed
            if v in mand or v in self.connected:
                continue
            if self.pos.get(v) != placements[v]:
                continue
            # revert: the refresh bought nothing on this layer
            self._unplace(v, self.t, layer)
            self.store[v] = self._prev_entries[v]
            for i in range(len(self.ir.temporal_edges) - 1, -1, -1):
                e = self.ir.temporal_edges[i]
                if e.kind == REFRESHING and e.dst == (self.t, placements[v][0], placements[v][1]):
                    del self.ir.temporal_edges[i]
                    break

    def _input_phase(self, layer: Layer) -> None:
        t = self.t
        bound = self.cfg.limit_df if self.cfg.refresh_mode == DYNAMIC else None
        while self.input_queue:
            free = sorted(layer.free_cells(), key=lambda c: (c[1], c[0]))
            if not free:
                break
            v = self.input_queue.pop(0)
            cell = free[0]
            self._place(v, cell, t, layer)
            self.first_mapped += 1
            self._emit_temporal(v, cell, bound)
        self._route_pairs(layer)

    def _eligible_unmapped(self) -> list[int]:
        """Unmapped nodes safe and useful to map now.

        Classic front-layer nodes (all dependencies complete) always
        qualify. A node whose dependencies are merely on the lattice
        qualifies only when it has a stored partner to pair with:
        registers deadlock without this (their successors depend on
        them), while unrestricted lookahead floods the store. The
        realization guard keeps wait at zero either way.
        """
        out = []
        for v in self.gs.nodes:
            if v in self.complete or v in self.mapped:
                continue
            preds = self.dag.pred[v]
            if preds <= self.complete:
                out.append(v)
            elif all(p in self.complete or p in self.mapped for p in preds) and any(
                p in self.store for p in self.unrealized[v]
            ):
                out.append(v)
        return out

    def _attach_loop(self, layer: Layer) -> int:
        """Place front nodes adjacent to their on-layer partners."""
        t = self.t
        bound = self.cfg.limit_df if self.cfg.refresh_mode == DYNAMIC else None
        placed = 0
        while True:
            progress = False
            for v in self._eligible_unmapped():
                if len(self.store) >= self.cfg.cells:
                    # an unserviceable backlog of stored nodes starves the
                    # refresh cohorts; growing the frontier deepens the hole
                    return placed
                partners = [p for p in sorted(self.unrealized[v]) if p in self.pos]
                if not partners:
                    continue
                cands: set[tuple[int, int]] = set()
                for p in partners:
                    px, py = self.pos[p]
                    for c in ((px + 1, py), (px - 1, py), (px, py + 1), (px, py - 1)):
                        if 0 <= c[0] < layer.width and 0 <= c[1] < layer.height and layer.cell(*c) is EMPTY:
                            cands.add(c)
                if not cands:
                    continue
                best = min(
                    cands,
                    key=lambda c: (
                        sum(
                            abs(c[0] - self.pos[p][0]) + abs(c[1] - self.pos[p][1])
                            for p in partners
                        ),
                        c[1],
                        c[0],
                    ),
                )
                self._place(v, best, t, layer)
                self.first_mapped += 1
                self._emit_temporal(v, best, bound)
                placed += 1
                progress = True
            if not progress:
                return placed

    def _new_node_phase(self, layer: Layer) -> None:
        t = self.t
        bound = self.cfg.limit_df if self.cfg.refresh_mode == DYNAMIC else None
        placed = self._attach_loop(layer)
        if placed:
            self._route_pairs(layer)
        for _ in range(self.cfg.max_rounds):
            if len(self.store) >= self.cfg.cells:
                return  # refresh pressure saturated, seeding only clogs
            free = sorted(layer.free_cells(), key=lambda c: (c[1], c[0]))
            pool = self._eligible_unmapped()
            if not free or not pool:
                return
            k = max(1, len(free) // 4)
            seeds = self.rng.sample(pool, min(k, len(pool)))
            seeded: list[int] = []
            for s in seeds:
                free = sorted(layer.free_cells(), key=lambda c: (c[1], c[0]))
                if not free:
                    break
                cell = self.rng.choice(free)
                self._place(s, cell, t, layer)
                self.first_mapped += 1
                self._emit_temporal(s, cell, bound)
                seeded.append(s)
            attached = self._attach_loop(layer)
            self._route_pairs(layer)
            kept = attached
            for s in seeded:
                if s in self.connected:
                    kept += 1
                    continue
                self._unplace(s, t, layer)
                self.first_mapped -= 1
            if not kept:
                return

    def _postprocess(self) -> None:
        for v in sorted(self.pos):
            if v in self.complete:
                continue
            rest = self.unrealized[v]
            if len(rest) == 1:
                (w,) = rest
                if w not in self.mapped:
                    self.subs[v] = w

    def _do_layer(self) -> bool:
        layer = Layer.empty(self.cfg.width, self.cfg.height)
        self.ir.layers.append(layer)
        self.pos: dict[int, tuple[int, int]] = {}
        self.connected: set[int] = set()
        self.first_mapped = 0
        self.edges_done = 0

        placements, sel = self._refresh_phase(layer)
        self._route_pairs(layer)
        self._prune_isolated_optionals(layer, placements, sel)

        in_round = self.cfg.refresh_mode == PERIODIC and self.round_pending is not None
        if in_round:
            still = [v for v in self.round_pending if v in self.store and v not in placements]
            if still:
                self.round_pending = still
            else:
                self.round_pending = None
                self.last_round_end = self.t + 1
        else:
            self._input_phase(layer)
            if not self.input_queue:
                self._new_node_phase(layer)

        self._postprocess()
        if self.cfg.refresh_mode == DYNAMIC:
            self.m_last = len(sel.mandatory)
        return self.first_mapped > 0 or self.edges_done > 0

    def run(self) -> tuple[IRProgram, Metrics]:
        stall = 0
        self.t = 0
        while self.input_queue or self.complete != self.gs.nodes:
            if self._do_layer():
                stall = 0
            else:
                stall += 1
                if stall >= self.cfg.congestion_limit:
                    raise CongestionStuck(
                        f"{stall} layers without progress at layer {self.t}"
                    )
            self.quiet = stall
            self.t += 1
        limit = self.cfg.limit_df
        if self.cfg.refresh_mode == PERIODIC:
            limit = max(
                [limit] + [e.length for e in self.ir.temporal_edges]
            )
        report = validate(self.ir, self.gs, limit, self.cfg.skew_enabled)
        if not report.ok:
            raise CompileError(f"compiled IR is invalid: {report.violations[:3]}")
        return self.ir, ir_metrics(self.ir, self.dag, self.unmeasured)


def compile(gs: GraphStateProgram, config: CompilerConfig) -> tuple[IRProgram, Metrics]:
    """Map a graph-state program onto the lattice IR."""
    return _Run(gs, config).run()
