"""Place-and-route over the half-port graph of a mesh.

A search state is the port through which light enters a TBU together with
the set of TBUs already used. From there the light leaves through the
opposite end, on the same side (bar) or the other side (cross), and
enters the neighbour behind that port. Routes never revisit a TBU.

The search is A* with an exact heuristic: the shortest distance in the same
graph with the no-revisit rule dropped. Per-TBU costs are converted to
``Fraction``s and scaled to integers, so equal-cost routes compare equal and
the tie-break (smallest TBU id sequence, then smallest entry-port sequence)
is exact.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .errors import MeshError, MultiRouteError, NoPathError, RouteConflictError
from .mesh import Mesh, Program, port_index, port_name, port_tbu
from .tbu import BAR, CROSS, DEFAULT_LOSS_DB, TBUMode

MODES = ("bar", "cross")


@dataclass(frozen=True)
class CostWeights:
    """Routing cost per TBU: ``hop + loss * insertion_loss_db + power * powered``.

    ``powered_modes`` lists the states that need an active phase shifter;
    with the TBU convention used here the bar state does (arm difference
    pi) and the cross state does not.
    """

    loss: float = 1.0
    power: float = 0.0
    hop: float = 0.0
    insertion_loss_db: float = DEFAULT_LOSS_DB
    powered_modes: FrozenSet[str] = frozenset({"bar"})

    def __post_init__(self):
        ws = (self.loss, self.power, self.hop)
        if any(w < 0 for w in ws) or not any(w > 0 for w in ws):
            raise ValueError("weights must be >= 0 and not all zero")
        if self.insertion_loss_db < 0:
            raise ValueError("insertion loss must be >= 0")
        object.__setattr__(self, "powered_modes", frozenset(self.powered_modes))

    def mode_cost(self, mode: str) -> Fraction:
        c = Fraction(self.hop) + Fraction(self.loss) * Fraction(self.insertion_loss_db)
        if mode in self.powered_modes:
            c += Fraction(self.power)
        return c


@dataclass(frozen=True)
class RoutingRequest:
    source: object
    destination: object
    blocked: FrozenSet[int] = frozenset()
    weights: CostWeights = field(default_factory=CostWeights)

    def __post_init__(self):
        if self.source == self.destination:
            raise ValueError("source and destination must differ")
        object.__setattr__(self, "blocked", frozenset(self.blocked))


@dataclass(frozen=True)
class Hop:
    tbu: int
    mode: str
    entry: int
    exit: int


@dataclass(frozen=True)
class Route:
    hops: Tuple[Hop, ...]
    cost: float
    loss_db: float
    source: Optional[int] = None
    destination: Optional[int] = None

    @property
    def tbus(self) -> Tuple[int, ...]:
        return tuple(h.tbu for h in self.hops)

    def modes(self) -> Dict[int, TBUMode]:
        return {h.tbu: (BAR if h.mode == "bar" else CROSS) for h in self.hops}

    def report(self) -> dict:
        return {
            "cost": self.cost,
            "loss_db": self.loss_db,
            "hops": [{"tbu_id": h.tbu, "mode": h.mode} for h in self.hops],
        }


def exit_port(entry: int, mode: str) -> int:
    """Port through which light entering at ``entry`` leaves in ``mode``."""
    t = port_tbu(entry)
    end = (entry // 2) % 2
    side = entry % 2
    return port_index(t, 1 - end, side if mode == "bar" else 1 - side)


def _edges(mesh: Mesh):
    """``(entry, mode, exit, next entry or None)`` for every port and mode, cached per mesh."""
    cached = mesh.__dict__.get("_route_edges")
    if cached is None:
        cached = []
        for p in range(4 * mesh.tbu_count):
            for mode in MODES:
                e = exit_port(p, mode)
                cached.append((p, mode, e, mesh.partner(e)))
        cached = tuple(cached)
        object.__setattr__(mesh, "_route_edges", cached)
    return cached


def _integer_costs(weights: CostWeights) -> Dict[str, int]:
    """Per-mode costs scaled by a common denominator to exact integers."""
    costs = {m: weights.mode_cost(m) for m in MODES}
    scale = math.lcm(*(c.denominator for c in costs.values()))
    return {m: int(c * scale) for m, c in costs.items()}


def _heuristic(mesh: Mesh, goals: FrozenSet[int], blocked: FrozenSet[int],
               costs: Dict[str, int]) -> Dict[int, int]:
    """Exact cost-to-goal from every entry port, revisits allowed."""
    # Reverse edges: entry p reaches entry partner(exit(p, m)) or a goal.
    preds: Dict[Optional[int], List[Tuple[int, int]]] = {}
    for p, mode, e, q in _edges(mesh):
        if p // 4 in blocked:
            continue
        if e in goals:
            preds.setdefault(None, []).append((p, costs[mode]))
        if q is not None and q // 4 not in blocked:
            preds.setdefault(q, []).append((p, costs[mode]))
    dist: Dict[int, int] = {}
    heap: list = []
    for p, c in preds.get(None, []):
        heapq.heappush(heap, (c, p))
    while heap:
        d, p = heapq.heappop(heap)
        if p in dist:
            continue
        dist[p] = d
        for r, c in preds.get(p, []):
            if r not in dist:
                heapq.heappush(heap, (d + c, r))
    return dist


def search(mesh: Mesh, starts: Iterable[int], goals: Iterable[int],
           blocked: Iterable[int] = (), weights: Optional[CostWeights] = None) -> Optional[List[Hop]]:
    """Cheapest TBU-simple path from any entry port in ``starts`` to leaving
    through any port in ``goals``; ``None`` if there is none."""
    weights = weights or CostWeights()
    blocked = frozenset(blocked)
    goals = frozenset(goals)
    costs = _integer_costs(weights)
    h = _heuristic(mesh, goals, blocked, costs)

    counter = itertools.count()
    heap = []
    for s in sorted(set(starts)):
        if port_tbu(s) in blocked or s not in h:
            continue
        heapq.heappush(heap, (h[s], (), (), 0, next(counter), s, frozenset(), None))
    closed = set()
    while heap:
        f, tseq, pseq, g, _, port, used, hops = heapq.heappop(heap)
        if port is None:
            out = []
            while hops is not None:
                hops, hop = hops
                out.append(hop)
            return out[::-1]
        key = (port, used)
        if key in closed:
            continue
        closed.add(key)
        t = port_tbu(port)
        used2 = used | {t}
        for mode in MODES:
            e = exit_port(port, mode)
            g2 = g + costs[mode]
            link = (hops, Hop(t, mode, port, e))
            if e in goals:
                heapq.heappush(heap, (g2, tseq + (t,), pseq + (port,), g2, next(counter), None, used2, link))
            q = mesh.partner(e)
            if q is None:
                continue
            tq = port_tbu(q)
            if tq in used2 or tq in blocked or q not in h:
                continue
            if (q, used2) in closed:
                continue
            heapq.heappush(heap, (g2 + h[q], tseq + (t,), pseq + (port,), g2, next(counter), q, used2, link))
    return None


def _make_route(hops: Sequence[Hop], weights: CostWeights, source=None, destination=None) -> Route:
    cost = sum((weights.mode_cost(h.mode) for h in hops), Fraction(0))
    return Route(tuple(hops), float(cost), len(hops) * weights.insertion_loss_db, source, destination)


def route(mesh: Mesh, request: RoutingRequest) -> Route:
    """Cheapest route between two external ports.

    Ties go to the lexicographically smallest TBU id sequence.
    """
    src = mesh.resolve_port(request.source)
    dst = mesh.resolve_port(request.destination)
    for p, what in ((src, "source"), (dst, "destination")):
        if not mesh.is_external(p):
            raise MeshError(f"{what} {port_name(p)} is not an external port")
    if src == dst:
        raise ValueError("source and destination must differ")
    for t in request.blocked:
        if not 0 <= t < mesh.tbu_count:
            raise MeshError(f"blocked TBU {t} does not exist")
    hops = search(mesh, [src], [dst], request.blocked, request.weights)
    if hops is None:
        raise NoPathError(f"no route from {mesh.external_name(src)} to {mesh.external_name(dst)}")
    return _make_route(hops, request.weights, src, dst)


def apply_route(program: Program, r: Route) -> Program:
    for h in r.hops:
        if not program.mode(h.tbu).is_off:
            raise RouteConflictError(h.tbu)
    return program.with_modes(r.modes())


def multi_route(mesh: Mesh, requests: Sequence[RoutingRequest],
                program: Optional[Program] = None) -> Tuple[Program, List[Route]]:
    """Route requests in order; each one avoids the TBUs of those before it."""
    if not requests:
        raise ValueError("multi_route needs at least one request")
    program = Program() if program is None else program
    taken = set(program.active_tbus())
    routes = []
    for k, req in enumerate(requests):
        try:
            r = route(mesh, RoutingRequest(req.source, req.destination,
                                           req.blocked | taken, req.weights))
        except NoPathError as exc:
            raise MultiRouteError(k, exc) from None
        routes.append(r)
        taken.update(r.tbus)
        program = apply_route(program, r)
    return program, routes
