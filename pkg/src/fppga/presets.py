"""Canonical mesh programs: ring filter, Vernier pair, 2x4 hybrid, transceiver.

Phase conventions. A TBU in the bar state has transfer ``j e^{j m}
diag(1, -1)`` (``m`` the common arm phase), so choosing ``m = -pi/2`` on
side 0 or ``m = +pi/2`` on side 1 makes the element seen by the light
exactly 1. Rings use this for the five loop TBUs, so the round trip is a
pure propagation factor. The coupler's common phase is chosen the same way
for its outer rail, which makes the filter the textbook all-pass response

    H = -p (t - p^6) / (1 - t p^6)

with ``p`` the per-TBU field factor (loss and propagation) and
``t = sqrt(1 - kappa)``.

Every preset returns an analytic reference ``reference(params, freqs)`` of
shape ``(F, n_out, n_in)`` for its designated ports. It is built from
per-TBU closed forms, not from the network solver.
"""

from __future__ import annotations

import cmath
import dataclasses
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import gates
from .errors import NoPathError, PresetError
from .mesh import Mesh, Program, port_end, port_index, port_side, port_tbu
from .netsolve import WaveguideParams
from .router import Hop, search
from .tbu import BAR, CROSS, TBUMode, TBUSettings, mode_settings, settings_for_coupling, tbu_transfer

RING_TBUS = 6

# Target 90-degree hybrid; column 0 is the signal, column 1 the local oscillator.
HYBRID_TARGET = 0.5 * np.array([[1, 1], [1, 1j], [1, -1], [1, -1j]], dtype=complex)

Reference = Callable[[WaveguideParams, np.ndarray], np.ndarray]
Path = Tuple[Tuple[int, int, int], ...]  # (tbu, entry port, exit port) per hop


@dataclass(frozen=True)
class PresetResult:
    """A programmed circuit and its designated external ports.

    ``reference`` returns the expected transfer between ``inputs`` and
    ``outputs``; ``target`` holds a frequency-independent target matrix for
    presets that have one. ``parts`` maps sub-circuit names to their TBUs.
    """

    name: str
    program: Program
    used_tbus: Tuple[int, ...]
    inputs: Tuple[int, ...]
    outputs: Tuple[int, ...]
    reference: Optional[Reference] = None
    target: Optional[np.ndarray] = None
    parts: Mapping[str, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if tuple(sorted(self.program.active_tbus())) != tuple(sorted(self.used_tbus)):
            raise PresetError("used TBUs disagree with the program")


# -- shared helpers ------------------------------------------------------------

def _hop_factor(modes: Mapping[int, TBUMode], hop, params: WaveguideParams, prop: np.ndarray) -> np.ndarray:
    t, entry, exit_ = hop
    T = tbu_transfer(mode_settings(modes[t]), params.tbu_loss_db)
    return T[port_side(exit_), port_side(entry)] * prop


def _path_gain(modes, path: Path, params: WaveguideParams, freqs) -> np.ndarray:
    prop = np.atleast_1d(params.propagation(np.asarray(freqs, dtype=float)))
    g = np.ones_like(prop, dtype=complex)
    for hop in path:
        g = g * _hop_factor(modes, hop, params, prop)
    return g


def _hops_path(hops: Sequence[Hop]) -> Path:
    return tuple((h.tbu, h.entry, h.exit) for h in hops)


def _route_modes(hops: Sequence[Hop]) -> Dict[int, TBUMode]:
    return {h.tbu: (BAR if h.mode == "bar" else CROSS) for h in hops}


def _shift(modes: Dict[int, TBUMode], tbu: int, phase: float) -> None:
    """Add ``phase`` to both arms of ``tbu`` (a pure phase on its outputs)."""
    modes[tbu] = TBUMode.tunable(mode_settings(modes[tbu]).shifted(phase))


def _wrap(x: float) -> float:
    return math.remainder(x, 2 * math.pi)


def _externals(mesh: Mesh) -> List[int]:
    return list(mesh.external_ports)


def _feed(mesh: Mesh, port: int, blocked) -> Optional[List[Hop]]:
    """Route from an external port to entering ``port``; [] if ``port`` is external."""
    if mesh.is_external(port):
        return []
    return search(mesh, _externals(mesh), [mesh.partner(port)], blocked)


def _drain(mesh: Mesh, port: int, blocked) -> Optional[List[Hop]]:
    """Route from leaving through ``port`` to any external port."""
    if mesh.is_external(port):
        return []
    return search(mesh, [mesh.partner(port)], _externals(mesh), blocked)


def _link(mesh: Mesh, out_port: int, in_port: int, blocked) -> Optional[List[Hop]]:
    """Route from leaving through ``out_port`` to entering ``in_port``."""
    q = mesh.partner(out_port)
    if q is None or mesh.partner(in_port) is None:
        return None
    if q == in_port:
        return []
    return search(mesh, [q], [mesh.partner(in_port)], blocked)


def _path_ports(mesh: Mesh, hops: Sequence[Hop], first_entry: int, last_exit: int) -> Tuple[int, int]:
    """External ports at the two ends of an access chain."""
    return (hops[0].entry if hops else first_entry, hops[-1].exit if hops else last_exit)


# -- ring filter -----------------------------------------------------------------

def allpass_response(params: WaveguideParams, freqs, kappa: float, loop_tbus: int = RING_TBUS) -> np.ndarray:
    """Closed-form through response of a ring of ``loop_tbus`` TBUs."""
    alpha = 10.0 ** (-params.tbu_loss_db / 20.0)
    p = alpha * np.atleast_1d(params.propagation(np.asarray(freqs, dtype=float)))
    t = math.sqrt(1.0 - kappa)
    G = p ** loop_tbus
    return -p * (t - G) / (1.0 - t * G)


@dataclass(frozen=True)
class _Ring:
    modes: Dict[int, TBUMode]
    tbus: Tuple[int, ...]
    coupler: int
    entry: int  # coupler port where light enters
    exit: int   # coupler port where light leaves
    kappa: float


def _ring_modes(mesh: Mesh, key, kappa: float, coupler_index: int, reverse: bool) -> _Ring:
    cell = mesh.cells[key]
    modes: Dict[int, TBUMode] = {}
    for k, (t, inner) in enumerate(zip(cell.tbus, cell.inner_sides)):
        if k == coupler_index:
            outer = 1 - inner
            common = math.pi / 2 if outer == 0 else -math.pi / 2
            modes[t] = TBUMode.tunable(settings_for_coupling(kappa, common))
        else:
            common = -math.pi / 2 if inner == 0 else math.pi / 2
            modes[t] = TBUMode.tunable(settings_for_coupling(0.0, common))
    t = cell.tbus[coupler_index]
    outer = 1 - cell.inner_sides[coupler_index]
    a, b = port_index(t, 0, outer), port_index(t, 1, outer)
    if reverse:
        a, b = b, a
    return _Ring(modes, tuple(cell.tbus), t, a, b, kappa)


def _check_cell(mesh: Mesh, key) -> Tuple[int, int]:
    if mesh.topology != "hexagonal":
        raise PresetError("ring presets need a hexagonal mesh")
    key = tuple(key)
    if key not in mesh.cells:
        raise PresetError(f"cell {key} is outside the {mesh.m}x{mesh.n} mesh")
    return key


def _check_kappa(kappa: float) -> None:
    if not (0.0 < kappa <= 1.0):
        raise PresetError(f"kappa must be in (0, 1] to form a ring, got {kappa!r}")


def _place_ring(mesh: Mesh, key, kappa: float, blocked: set, need_input=True, need_output=True):
    """Choose a coupler and access routes; returns (ring, feed hops, drain hops)."""
    cell = mesh.cells[key]
    if blocked & set(cell.tbus):
        raise PresetError(f"cell {key} overlaps TBUs already in use")
    order = sorted(range(len(cell.tbus)), key=lambda k: cell.tbus[k])
    for k in order:
        for reverse in (False, True):
            ring = _ring_modes(mesh, key, kappa, k, reverse)
            taken = blocked | set(ring.tbus)
            feed = _feed(mesh, ring.entry, taken) if need_input else []
            if feed is None:
                continue
            taken2 = taken | {h.tbu for h in feed}
            drain = _drain(mesh, ring.exit, taken2) if need_output else []
            if drain is None:
                continue
            return ring, feed, drain
    raise PresetError(f"no coupler of cell {key} can be reached from the mesh edge")


def ring_filter(mesh: Mesh, cell, kappa: float, blocked: Iterable[int] = ()) -> PresetResult:
    """Single-cell ring cavity: one TBU couples at ``kappa``, five close the loop.

    If the chosen coupler does not sit on the mesh edge, bar/cross access
    routes connect it to external ports; their factors are part of the
    reference.
    """
    key = _check_cell(mesh, cell)
    _check_kappa(kappa)
    ring, feed, drain = _place_ring(mesh, key, kappa, set(blocked))
    modes = dict(ring.modes)
    modes.update(_route_modes(feed))
    modes.update(_route_modes(drain))
    src, _ = _path_ports(mesh, feed, ring.entry, None)
    _, dst = _path_ports(mesh, drain, None, ring.exit)
    access = _hops_path(feed) + _hops_path(drain)
    snapshot = dict(modes)

    def reference(params: WaveguideParams, freqs) -> np.ndarray:
        h = allpass_response(params, freqs, kappa) * _path_gain(snapshot, access, params, freqs)
        return h[:, None, None]

    program = Program(modes, label="ring", metadata={"cell": list(key), "kappa": kappa})
    return PresetResult("ring", program, tuple(sorted(modes)), (src,), (dst,), reference,
                        parts={"ring": ring.tbus, "access": tuple(h[0] for h in access)})


def vernier_pair(mesh: Mesh, cell_a, cell_b, kappa_a: float, kappa_b: float,
                 blocked: Iterable[int] = ()) -> PresetResult:
    """Two ring filters in series, joined by a bar/cross route."""
    ka, kb = _check_cell(mesh, cell_a), _check_cell(mesh, cell_b)
    _check_kappa(kappa_a)
    _check_kappa(kappa_b)
    ta, tb = set(mesh.cells[ka].tbus), set(mesh.cells[kb].tbus)
    if ka == kb or ta & tb:
        raise PresetError(f"cells {ka} and {kb} overlap")
    blocked = set(blocked)
    if blocked & (ta | tb):
        raise PresetError("a Vernier cell uses TBUs that are already occupied")
    for k1 in _coupler_order(mesh, ka):
        for r1 in (False, True):
            ring_a = _ring_modes(mesh, ka, kappa_a, k1, r1)
            base = blocked | ta | tb
            feed = _feed(mesh, ring_a.entry, base)
            if feed is None:
                continue
            for k2 in _coupler_order(mesh, kb):
                for r2 in (False, True):
                    ring_b = _ring_modes(mesh, kb, kappa_b, k2, r2)
                    taken = base | {h.tbu for h in feed}
                    link = _link(mesh, ring_a.exit, ring_b.entry, taken)
                    if link is None:
                        continue
                    drain = _drain(mesh, ring_b.exit, taken | {h.tbu for h in link})
                    if drain is None:
                        continue
                    return _vernier_result(mesh, ka, kb, ring_a, ring_b, feed, link, drain)
    raise PresetError(f"cells {ka} and {kb} cannot be chained through free TBUs")


def _coupler_order(mesh: Mesh, key) -> List[int]:
    cell = mesh.cells[key]
    return sorted(range(len(cell.tbus)), key=lambda k: cell.tbus[k])


def _vernier_result(mesh, ka, kb, ring_a, ring_b, feed, link, drain) -> PresetResult:
    modes = dict(ring_a.modes)
    modes.update(ring_b.modes)
    for hops in (feed, link, drain):
        modes.update(_route_modes(hops))
    src, _ = _path_ports(mesh, feed, ring_a.entry, None)
    _, dst = _path_ports(mesh, drain, None, ring_b.exit)
    access = _hops_path(feed) + _hops_path(link) + _hops_path(drain)
    snapshot = dict(modes)

    def reference(params: WaveguideParams, freqs) -> np.ndarray:
        h = (allpass_response(params, freqs, ring_a.kappa) * allpass_response(params, freqs, ring_b.kappa)
             * _path_gain(snapshot, access, params, freqs))
        return h[:, None, None]

    program = Program(modes, label="vernier",
                      metadata={"cells": [list(ka), list(kb)], "kappas": [ring_a.kappa, ring_b.kappa]})
    return PresetResult("vernier", program, tuple(sorted(modes)), (src,), (dst,), reference,
                        parts={"ring_a": ring_a.tbus, "ring_b": ring_b.tbus,
                               "access": tuple(h[0] for h in access)})


# -- 2x4 hybrid ----------------------------------------------------------------

_BALANCED = settings_for_coupling(0.5)
# Same splitting with the sign of the sine term flipped: moves the minus sign
# of the 2x2 transfer from row 1 to row 0.
_BALANCED_FLIPPED = TBUSettings(-_BALANCED.theta_upper, -_BALANCED.theta_lower)


@dataclass
class _HybridLayout:
    splitters: Tuple[Tuple[int, int], Tuple[int, int]]  # (tbu, entry port) for signal, LO
    combiners: Tuple[Tuple[int, int], Tuple[int, int]]  # (tbu, input end)
    feeds: List[List[Hop]]                  # per input
    links: Dict[Tuple[int, int], List[Hop]]  # (input, combiner) -> hops
    link_ports: Dict[Tuple[int, int], Tuple[int, int]]  # splitter exit, combiner entry
    drains: List[List[Hop]]                 # per physical output row
    used: set = field(default_factory=set)


def _forward_distance(mesh: Mesh, start: int, blocked) -> Dict[int, int]:
    """Hop count from entering ``start`` to entering each TBU (revisits allowed)."""
    dist = {port_tbu(start): 0}
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        p, d = queue.popleft()
        t = port_tbu(p)
        for side in (0, 1):
            q = mesh.partner(port_index(t, 1 - port_end(p), side))
            if q is None or q in seen or port_tbu(q) in blocked:
                continue
            seen.add(q)
            dist.setdefault(port_tbu(q), d + 1)
            queue.append((q, d + 1))
    return dist


class _Budget:
    def __init__(self, limit: int):
        self.left = limit

    def spend(self) -> bool:
        self.left -= 1
        return self.left >= 0


def _splitter_options(mesh: Mesh, free: set) -> List[Tuple[int, int]]:
    """(tbu, entry port) pairs whose two outputs stay inside the mesh."""
    out = []
    for t in sorted(free):
        for end in (0, 1):
            if all(mesh.partner(port_index(t, 1 - end, s)) is not None for s in (0, 1)):
                for s in (0, 1):
                    out.append((t, port_index(t, end, s)))
    return out


def _combiner_options(mesh: Mesh, free: set) -> List[Tuple[int, int]]:
    """(tbu, input end) pairs whose two inputs can be reached from inside."""
    return [(t, end) for t in sorted(free) for end in (0, 1)
            if all(mesh.partner(port_index(t, end, s)) is not None for s in (0, 1))]


def _search_layout(mesh: Mesh, free: set, budget: _Budget, verify) -> Optional[_HybridLayout]:
    splitters = _splitter_options(mesh, free)
    combiners = _combiner_options(mesh, free)
    blocked_all = set(range(mesh.tbu_count)) - free

    def branch_ports(entry):
        t = port_tbu(entry)
        return [port_index(t, 1 - port_end(entry), s) for s in (0, 1)]

    for s_tbu, s_entry in splitters:
        if not budget.spend():
            return None
        taken = blocked_all | {s_tbu}
        feed_s = _feed(mesh, s_entry, taken)
        if feed_s is None:
            continue
        taken_s = taken | {h.tbu for h in feed_s}
        b0, b1 = branch_ports(s_entry)
        near0 = _forward_distance(mesh, mesh.partner(b0), taken_s)
        near1 = _forward_distance(mesh, mesh.partner(b1), taken_s)
        c_opts = [c for c in combiners if c[0] not in taken_s]
        order1 = sorted((c for c in c_opts if c[0] in near0), key=lambda c: (near0[c[0]], c))
        order2 = sorted((c for c in c_opts if c[0] in near1), key=lambda c: (near1[c[0]], c))
        for c1 in order1[:8]:
            for c2 in order2[:8]:
                if c1[0] == c2[0]:
                    continue
                for j1 in (0, 1):
                    for j2 in (0, 1):
                        if not budget.spend():
                            return None
                        layout = _try_layout(mesh, free, taken_s | {c1[0], c2[0]}, (s_tbu, s_entry), feed_s,
                                             (b0, b1), c1, c2, j1, j2, splitters, budget, verify)
                        if layout is not None:
                            return layout
    return None


def _try_layout(mesh, free, taken, splitter_s, feed_s, branches, c1, c2, j1, j2, splitters, budget, verify):
    cin = {0: port_index(c1[0], c1[1], j1), 1: port_index(c2[0], c2[1], j2)}
    l0 = _link(mesh, branches[0], cin[0], taken)
    if l0 is None:
        return None
    taken = taken | {h.tbu for h in l0}
    l1 = _link(mesh, branches[1], cin[1], taken)
    if l1 is None:
        return None
    taken = taken | {h.tbu for h in l1}
    lo_in = {0: port_index(c1[0], c1[1], 1 - j1), 1: port_index(c2[0], c2[1], 1 - j2)}
    for l_tbu, l_entry in splitters:
        if l_tbu in taken:
            continue
        if not budget.spend():
            return None
        t2 = taken | {l_tbu}
        feed_l = _feed(mesh, l_entry, t2)
        if feed_l is None:
            continue
        t3 = t2 | {h.tbu for h in feed_l}
        lb = [port_index(l_tbu, 1 - port_end(l_entry), s) for s in (0, 1)]
        for first in (0, 1):
            m0 = _link(mesh, lb[first], lo_in[0], t3)
            if m0 is None:
                continue
            t4 = t3 | {h.tbu for h in m0}
            m1 = _link(mesh, lb[1 - first], lo_in[1], t4)
            if m1 is None:
                continue
            t5 = t4 | {h.tbu for h in m1}
            drains = []
            for c in (c1, c2):
                for s in (0, 1):
                    d = _drain(mesh, port_index(c[0], 1 - c[1], s), t5)
                    if d is None:
                        break
                    drains.append(d)
                    t5 = t5 | {h.tbu for h in d}
                else:
                    continue
                break
            if len(drains) != 4:
                continue
            layout = _HybridLayout(
                splitters=(splitter_s, (l_tbu, l_entry)),
                combiners=(c1, c2),
                feeds=[feed_s, feed_l],
                links={(0, 0): l0, (0, 1): l1, (1, 0): m0, (1, 1): m1},
                link_ports={(0, 0): (branches[0], cin[0]), (0, 1): (branches[1], cin[1]),
                            (1, 0): (lb[first], lo_in[0]), (1, 1): (lb[1 - first], lo_in[1])},
                drains=drains,
            )
            result = verify(layout)
            if result is not None:
                return result
    return None


def _hybrid_paths(layout: _HybridLayout) -> Dict[Tuple[int, int], Path]:
    """Hop list for every (physical output row, input) pair."""
    paths = {}
    for i in (0, 1):
        s_tbu, s_entry = layout.splitters[i]
        for c in (0, 1):
            c_tbu, c_end = layout.combiners[c]
            split_exit, comb_entry = layout.link_ports[(i, c)]
            for s in (0, 1):
                row = 2 * c + s
                c_exit = port_index(c_tbu, 1 - c_end, s)
                paths[(row, i)] = (_hops_path(layout.feeds[i]) + ((s_tbu, s_entry, split_exit),)
                                   + _hops_path(layout.links[(i, c)]) + ((c_tbu, comb_entry, c_exit),)
                                   + _hops_path(layout.drains[row]))
    return paths


def _gain_matrix(modes, paths, params, f0) -> np.ndarray:
    g = np.zeros((4, 2), dtype=complex)
    for (row, i), path in paths.items():
        g[row, i] = _path_gain(modes, path, params, [f0])[0]
    return g


# Physical rows (combiner 0 side 0, side 1, combiner 1 side 0, side 1) -> target rows.
_ROW_TO_TARGET = (0, 2, 1, 3)


def _phase_correct(modes: Dict[int, TBUMode], layout: _HybridLayout, params, f0) -> np.ndarray:
    """Set the route phases so the gain matrix matches the target; returns it."""
    paths = _hybrid_paths(layout)
    target = HYBRID_TARGET[list(_ROW_TO_TARGET)]
    g = _gain_matrix(modes, paths, params, f0)
    for c in (0, 1):
        r = 2 * c
        # LO-relative-to-signal phase needed at this combiner. As a gate on the
        # (signal, LO) pair it is exp(j d/2) Rz(d) = diag(1, exp(j d)).
        d = _wrap(cmath.phase(target[r, 1] / target[r, 0]) - cmath.phase(g[r, 1] / g[r, 0]))
        gate = cmath.exp(0.5j * d) * gates.rotation("z", d)
        lo_route, sig_route = layout.links[(1, c)], layout.links[(0, c)]
        if lo_route:
            _shift(modes, lo_route[0].tbu, cmath.phase(gate[1, 1]))
        elif sig_route:
            _shift(modes, sig_route[0].tbu, -cmath.phase(gate[1, 1]))
        else:
            return g
    g = _gain_matrix(modes, paths, params, f0)
    ref = cmath.phase(g[0, 0])
    eps = [_wrap(ref - cmath.phase(g[r, 0])) for r in range(4)]
    for c in (0, 1):
        rows = (2 * c, 2 * c + 1)
        routes = [layout.drains[r] for r in rows]
        comb = layout.combiners[c][0]
        if routes[0] and routes[1]:
            _shift(modes, routes[0][0].tbu, eps[rows[0]])
            _shift(modes, routes[1][0].tbu, eps[rows[1]])
        elif routes[1]:
            _shift(modes, comb, eps[rows[0]])
            _shift(modes, routes[1][0].tbu, _wrap(eps[rows[1]] - eps[rows[0]]))
        elif routes[0]:
            _shift(modes, comb, eps[rows[1]])
            _shift(modes, routes[0][0].tbu, _wrap(eps[rows[0]] - eps[rows[1]]))
        else:
            _shift(modes, comb, eps[rows[0]])
    return _gain_matrix(modes, paths, params, f0)


def match_up_to_scalar(measured: np.ndarray, target: np.ndarray) -> Tuple[complex, float]:
    """Best complex factor ``k`` with ``measured ~ k * target`` and the max residual
    relative to ``|k|``."""
    k = np.vdot(target, measured) / np.vdot(target, target)
    if k == 0:
        return 0j, math.inf
    return complex(k), float(np.max(np.abs(measured - k * target)) / abs(k))


def hybrid_2x4(mesh: Mesh, region: Optional[Iterable[int]] = None, params: Optional[WaveguideParams] = None,
               f0: Optional[float] = None, blocked: Iterable[int] = (), max_attempts: int = 20000,
               tol: float = 1e-9) -> PresetResult:
    """Programmed 90-degree hybrid: two balanced splitters feed two balanced
    combiners, and route phases are set so that the 4x2 transfer equals
    ``HYBRID_TARGET`` up to one complex factor at ``f0``.

    ``region`` restricts the TBUs the preset may use (default: all). Inputs
    are ordered (signal, LO); outputs follow the target rows.
    """
    params = params or WaveguideParams()
    f0 = params.f_ref_hz if f0 is None else float(f0)
    # Loss is a real factor per TBU, so phases are designed without it.
    design = dataclasses.replace(params, propagation_loss_db_per_cm=0.0, tbu_loss_db=0.0)
    free = set(range(mesh.tbu_count)) if region is None else set(region)
    bad = [t for t in free if not 0 <= t < mesh.tbu_count]
    if bad:
        raise PresetError(f"region references unknown TBU {min(bad)}")
    free -= set(blocked)

    def verify(layout: _HybridLayout):
        modes: Dict[int, TBUMode] = {}
        for hops in (*layout.feeds, *layout.links.values(), *layout.drains):
            modes.update(_route_modes(hops))
        for t, _ in layout.splitters:
            modes[t] = TBUMode.tunable(_BALANCED)
        for c, (t, end) in enumerate(layout.combiners):
            _, comb_entry = layout.link_ports[(0, c)]
            # Keep the signal column equal on both rows of the combiner.
            modes[t] = TBUMode.tunable(_BALANCED if port_side(comb_entry) == 0 else _BALANCED_FLIPPED)
        g = _phase_correct(modes, layout, design, f0)
        _, err = match_up_to_scalar(g, HYBRID_TARGET[list(_ROW_TO_TARGET)])
        if err > tol:
            return None
        return layout, modes

    found = _search_layout(mesh, free, _Budget(max_attempts), verify)
    if found is None:
        raise PresetError("region too small for a 2x4 hybrid: needs two splitters, two combiners "
                          "and eight disjoint connecting routes")
    layout, modes = found
    return _hybrid_result(mesh, layout, modes)


def _hybrid_result(mesh: Mesh, layout: _HybridLayout, modes: Dict[int, TBUMode]) -> PresetResult:
    paths = _hybrid_paths(layout)
    inputs = tuple(paths[(0, i)][0][1] for i in (0, 1))
    physical_out = [paths[(r, 0)][-1][2] for r in range(4)]
    outputs = tuple(physical_out[_ROW_TO_TARGET.index(k)] for k in range(4))
    snapshot = dict(modes)
    ordered = {(k, i): paths[(_ROW_TO_TARGET.index(k), i)] for k in range(4) for i in (0, 1)}

    def reference(params: WaveguideParams, freqs) -> np.ndarray:
        freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
        out = np.zeros((len(freqs), 4, 2), dtype=complex)
        for (k, i), path in ordered.items():
            out[:, k, i] = _path_gain(snapshot, path, params, freqs)
        return out

    parts = {
        "splitters": tuple(t for t, _ in layout.splitters),
        "combiners": tuple(t for t, _ in layout.combiners),
        "routes": tuple(sorted({h.tbu for hops in (*layout.feeds, *layout.links.values(), *layout.drains)
                                for h in hops})),
    }
    program = Program(modes, label="hybrid24")
    return PresetResult("hybrid24", program, tuple(sorted(modes)), inputs, outputs, reference,
                        target=HYBRID_TARGET.copy(), parts=parts)


# -- transceiver ---------------------------------------------------------------

def transceiver_demo(mesh: Mesh, kappa: float = 0.5, params: Optional[WaveguideParams] = None) -> PresetResult:
    """Ring-filtered transmit path plus a 2x4 hybrid receive path on one mesh.

    Inputs are (TX laser, RX signal, RX LO); outputs are (TX out, hybrid
    outputs 0..3). The laser and modulator blocks are plain external ports.
    Each ring cell is tried in order and the hybrid is placed on the TBUs
    left free. The smallest hexagonal mesh that fits is 3x3.
    """
    if mesh.topology != "hexagonal":
        raise PresetError("the transceiver demo needs a hexagonal mesh")
    _check_kappa(kappa)
    for key in sorted(mesh.cells):
        try:
            tx = ring_filter(mesh, key, kappa)
            rx = hybrid_2x4(mesh, blocked=tx.used_tbus, params=params)
        except PresetError:
            continue
        modes = dict(tx.program.modes)
        modes.update(rx.program.modes)

        def reference(p: WaveguideParams, freqs, tx=tx, rx=rx) -> np.ndarray:
            a, b = tx.reference(p, freqs), rx.reference(p, freqs)
            out = np.zeros((a.shape[0], 5, 3), dtype=complex)
            out[:, :1, :1] = a
            out[:, 1:, 1:] = b
            return out

        program = Program(modes, label="transceiver", metadata={"ring_cell": list(key), "kappa": kappa})
        return PresetResult(
            "transceiver", program, tuple(sorted(modes)), tx.inputs + rx.inputs, tx.outputs + rx.outputs,
            reference, parts={"tx": tx.used_tbus, "rx": rx.used_tbus},
        )
    raise PresetError(f"mesh {mesh.m}x{mesh.n} is too small for the transceiver demo; "
                      "a hexagonal 3x3 mesh is the smallest that fits")


PRESETS = ("ring", "vernier", "hybrid24", "transceiver")
