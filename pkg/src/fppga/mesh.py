"""Waveguide mesh topologies, programs and their JSON document form.

A mesh is built from cells (squares, triangles or hexagons). Every cell side
is one TBU. A TBU runs from vertex ``u`` (end ``A``) to vertex ``v`` (end
``B``) with ``u < v`` in integer lattice coordinates, and owns four ports:
one per end on each side of the waveguide pair. Side 0 is on the left
when looking from ``u`` to ``v`` and side 1 on the right; the side index is
also the rail index of the TBU transfer matrix.

Wiring rule: at every vertex of every cell, the two cell sides meeting
there are joined through the ports that face into that cell. Ports facing
no cell are external. External ports are numbered ``P0, P1, ...`` by a
clockwise walk around the perimeter that starts at the lowest-numbered
boundary TBU.

Port indices are ``4 * tbu + 2 * end + side`` (``end`` 0 = A, 1 = B).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .errors import MeshError, SchemaVersionError
from .tbu import MODE_KINDS, OFF, TBUMode, TBUSettings

TOPOLOGIES = ("square", "triangular", "hexagonal")
VERTEX_DEGREE = {"square": 4, "triangular": 6, "hexagonal": 3}
SCHEMA_VERSION = 1

Vertex = Tuple[int, int]


def port_index(tbu: int, end: int, side: int) -> int:
    return 4 * tbu + 2 * end + side


def port_tbu(port: int) -> int:
    return port // 4


def port_end(port: int) -> int:
    return (port // 2) % 2


def port_side(port: int) -> int:
    return port % 2


def port_name(port: int) -> str:
    return f"T{port // 4}.{'AB'[port_end(port)]}{port_side(port)}"


def parse_port_name(name: str) -> int:
    try:
        head, tail = name.split(".")
        if not head.startswith("T") or len(tail) != 2 or tail[0] not in "AB" or tail[1] not in "01":
            raise ValueError
        return port_index(int(head[1:]), "AB".index(tail[0]), int(tail[1]))
    except ValueError:
        raise MeshError(f"malformed port id {name!r}") from None


# -- lattice geometry -------------------------------------------------------

# Flat-topped hexagon corners, x scaled by 2 and y by 2/sqrt(3) so that all
# coordinates are integers; listed counter-clockwise.
_HEX_CORNERS = ((2, 0), (1, 1), (-1, 1), (-2, 0), (-1, -1), (1, -1))


def _cells(topology: str, m: int, n: int) -> List[Tuple[Tuple[int, int], Tuple[Vertex, ...]]]:
    """Cell polygons (counter-clockwise vertex cycles) keyed by (row, col)."""
    cells = []
    for r in range(m):
        for c in range(n):
            if topology == "square":
                poly = ((c, r), (c + 1, r), (c + 1, r + 1), (c, r + 1))
            elif topology == "hexagonal":
                cx, cy = 3 * c, 2 * r + (c % 2)
                poly = tuple((cx + dx, cy + dy) for dx, dy in _HEX_CORNERS)
            else:
                # A triangular cell is a rhombus split into an up and a down
                # triangle, keyed (r, 2c) and (r, 2c + 1). Lattice point
                # (a, b) sits at x = 2a + b, y = b.
                def pt(i, j):
                    return (2 * i + j, j)
                cells.append(((r, 2 * c), (pt(c, r), pt(c + 1, r), pt(c, r + 1))))
                cells.append(((r, 2 * c + 1), (pt(c + 1, r), pt(c + 1, r + 1), pt(c, r + 1))))
                continue
            cells.append(((r, c), poly))
    return cells


def _cross(o: Vertex, a: Vertex, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class Cell:
    """A closed loop of TBUs around one mesh cell.

    ``tbus[k]`` is traversed counter-clockwise; ``inner_sides[k]`` is the side
    of that TBU facing into the cell and ``forward[k]`` tells whether the
    counter-clockwise direction runs from end A to end B.
    """

    key: Tuple[int, int]
    tbus: Tuple[int, ...]
    inner_sides: Tuple[int, ...]
    forward: Tuple[bool, ...]


@dataclass(frozen=True, eq=False)
class Mesh:
    topology: str
    m: int
    n: int
    tbu_vertices: Tuple[Tuple[Vertex, Vertex], ...]
    connections: Tuple[Tuple[int, int], ...]
    external_ports: Tuple[int, ...]
    cells: Mapping[Tuple[int, int], Cell] = field(repr=False)

    def __post_init__(self):
        partner: Dict[int, int] = {}
        for p, q in self.connections:
            for a, b in ((p, q), (q, p)):
                if a in partner:
                    raise MeshError(f"port {port_name(a)} appears in two connections")
                partner[a] = b
        ext = set(self.external_ports)
        if len(ext) != len(self.external_ports):
            raise MeshError("duplicate external port")
        for port in range(4 * self.tbu_count):
            if (port in partner) == (port in ext):
                raise MeshError(f"port {port_name(port)} must be internal xor external")
        object.__setattr__(self, "_partner", partner)
        object.__setattr__(self, "_ext_index", {p: k for k, p in enumerate(self.external_ports)})

    @property
    def tbu_count(self) -> int:
        return len(self.tbu_vertices)

    @property
    def tbus(self) -> range:
        return range(self.tbu_count)

    def ports_of(self, tbu: int) -> Tuple[int, int, int, int]:
        return tuple(range(4 * tbu, 4 * tbu + 4))

    def partner(self, port: int) -> Optional[int]:
        """Port on the other side of the connection, None if external."""
        return self._partner.get(port)

    def is_external(self, port: int) -> bool:
        return port in self._ext_index

    def external_name(self, port: int) -> str:
        return f"P{self._ext_index[port]}"

    def external_position(self, port: int) -> int:
        return self._ext_index[port]

    def resolve_port(self, name) -> int:
        """Accept ``P<k>``, ``T<t>.<end><side>`` or a raw port index."""
        if isinstance(name, int):
            port = name
        elif isinstance(name, str) and name.startswith("P"):
            try:
                port = self.external_ports[int(name[1:])]
            except (ValueError, IndexError):
                raise MeshError(f"unknown external port {name!r}") from None
        else:
            port = parse_port_name(name)
        if not 0 <= port < 4 * self.tbu_count:
            raise MeshError(f"port {name!r} does not exist")
        return port

    def tbu_neighbors(self, tbu: int) -> List[int]:
        out = set()
        for p in self.ports_of(tbu):
            q = self._partner.get(p)
            if q is not None:
                out.add(port_tbu(q))
        return sorted(out)

    def boundary_tbus(self) -> List[int]:
        return sorted({port_tbu(p) for p in self.external_ports})

    def summary(self) -> Dict[str, int]:
        return {
            "tbus": self.tbu_count,
            "connections": len(self.connections),
            "external_ports": len(self.external_ports),
        }

    def structure(self):
        """Hashable structural fingerprint used for equality."""
        return (self.topology, self.m, self.n, self.tbu_vertices, self.connections, self.external_ports)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return self.structure() == other.structure()

    def __hash__(self):
        return hash(self.structure())


def generate(topology: str, m: int, n: int) -> Mesh:
    """Build an ``m`` x ``n`` cell mesh.

    A triangular cell is a rhombus of two triangles, so an ``m`` x ``n``
    triangular mesh has ``2mn`` triangles. Every boundary TBU contributes
    two external ports (the outer side at both ends). For example, a square
    1x1 mesh has 4 TBUs and a hexagonal 1x1 mesh has 6 TBUs with 12
    external ports; ``Mesh.summary()`` reports the counts.
    """
    if topology not in TOPOLOGIES:
        raise MeshError(f"unsupported topology {topology!r}; expected one of {TOPOLOGIES}")
    for name, val in (("m", m), ("n", n)):
        if isinstance(val, bool) or not isinstance(val, int) or val < 1:
            raise MeshError(f"{name} must be a positive integer, got {val!r}")

    cells = _cells(topology, m, n)
    edge_faces: Dict[Tuple[Vertex, Vertex], List[int]] = {}
    for fi, (_, poly) in enumerate(cells):
        k = len(poly)
        for i in range(k):
            a, b = poly[i], poly[(i + 1) % k]
            edge_faces.setdefault((min(a, b), max(a, b)), []).append(fi)
    edges = sorted(edge_faces)
    tbu_of = {e: t for t, e in enumerate(edges)}

    centroids = []
    for _, poly in cells:
        centroids.append((sum(p[0] for p in poly) / len(poly), sum(p[1] for p in poly) / len(poly)))

    def face_side(edge, fi):
        u, v = edge
        return 0 if _cross(u, v, centroids[fi]) > 0 else 1

    connections = []
    cell_map = {}
    for fi, (key, poly) in enumerate(cells):
        k = len(poly)
        ring, sides, fwd = [], [], []
        for i in range(k):
            a, b = poly[i], poly[(i + 1) % k]
            e = (min(a, b), max(a, b))
            ring.append(tbu_of[e])
            sides.append(face_side(e, fi))
            fwd.append(a == e[0])
        cell_map[key] = Cell(key, tuple(ring), tuple(sides), tuple(fwd))
        for i in range(k):
            # Vertex poly[i] joins the incoming side i-1 and outgoing side i.
            w = poly[i]
            joined = []
            for j in (i - 1, i):
                t, s = ring[j % k], sides[j % k]
                end = 0 if edges[t][0] == w else 1
                joined.append(port_index(t, end, s))
            connections.append(tuple(sorted(joined)))
    connections.sort()

    connected = {p for c in connections for p in c}
    degree = VERTEX_DEGREE[topology]
    ends_at: Dict[Vertex, int] = {}
    for u, v in edges:
        ends_at[u] = ends_at.get(u, 0) + 1
        ends_at[v] = ends_at.get(v, 0) + 1
    if max(ends_at.values()) > degree:
        raise MeshError("junction degree exceeds the lattice vertex degree")

    external = _perimeter_walk(edges, edge_faces, face_side, connected)
    return Mesh(topology, m, n, tuple(edges), tuple(connections), tuple(external),
                MappingProxyType(cell_map))


def _perimeter_walk(edges, edge_faces, face_side, connected) -> List[int]:
    # Clockwise means the mesh interior stays on the right of the walker.
    step_from: Dict[Vertex, List[Tuple[int, Vertex, int, int]]] = {}
    for t, e in enumerate(edges):
        faces = edge_faces[e]
        if len(faces) != 1:
            continue
        outer = 1 - face_side(e, faces[0])
        u, v = e
        if outer == 0:
            step_from.setdefault(u, []).append((t, v, 0, 1))
        else:
            step_from.setdefault(v, []).append((t, u, 1, 0))
    for options in step_from.values():
        options.sort()

    order: List[int] = []
    remaining = {opt[0]: (start, opt) for start, opts in step_from.items() for opt in opts}
    while remaining:
        t0 = min(remaining)
        start, opt = remaining[t0]
        vertex = start
        while True:
            t, nxt, first_end, last_end = opt
            del remaining[t]
            outer = 1 - face_side(edges[t], edge_faces[edges[t]][0])
            for end in (first_end, last_end):
                port = port_index(t, end, outer)
                if port not in connected:
                    order.append(port)
            vertex = nxt
            cands = [o for o in step_from.get(vertex, []) if o[0] in remaining]
            if not cands:
                break
            opt = cands[0]
    return order


# -- programs ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Program:
    """Per-TBU modes. TBUs without an entry are ``off``."""

    modes: Mapping[int, TBUMode] = field(default_factory=dict)
    label: Optional[str] = None
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        modes = {int(k): v for k, v in sorted(self.modes.items()) if not v.is_off}
        object.__setattr__(self, "modes", MappingProxyType(modes))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    def mode(self, tbu: int) -> TBUMode:
        return self.modes.get(tbu, OFF)

    def active_tbus(self) -> List[int]:
        return list(self.modes)

    def with_modes(self, updates: Mapping[int, TBUMode]) -> "Program":
        merged = dict(self.modes)
        merged.update(updates)
        return Program(merged, self.label, self.metadata)

    def validate(self, mesh: Mesh) -> None:
        for t in self.modes:
            if not 0 <= t < mesh.tbu_count:
                raise MeshError(f"program references unknown TBU {t}")

    def __eq__(self, other):
        if not isinstance(other, Program):
            return NotImplemented
        return (dict(self.modes) == dict(other.modes) and self.label == other.label
                and dict(self.metadata) == dict(other.metadata))


# -- documents ------------------------------------------------------------------

def to_document(mesh: Mesh, program: Optional[Program] = None) -> dict:
    program = Program() if program is None else program
    program.validate(mesh)
    entries = []
    for t, mode in program.modes.items():
        s = mode.settings
        entries.append({
            "tbu_id": t,
            "mode": mode.kind,
            "theta_upper": None if s is None else s.theta_upper,
            "theta_lower": None if s is None else s.theta_lower,
            "loss_db": None if s is None else s.insertion_loss_db,
        })
    return {
        "version": SCHEMA_VERSION,
        "topology": mesh.topology,
        "m": mesh.m,
        "n": mesh.n,
        "tbus": [{"id": t, "ports": [port_name(p) for p in mesh.ports_of(t)]} for t in mesh.tbus],
        "connections": [[port_name(p), port_name(q)] for p, q in mesh.connections],
        "external_ports": [{"name": mesh.external_name(p), "port": port_name(p)}
                           for p in mesh.external_ports],
        "program": entries,
        "label": program.label,
        "metadata": dict(program.metadata),
    }


def serialize(mesh: Mesh, program: Optional[Program] = None) -> str:
    return json.dumps(to_document(mesh, program), indent=2) + "\n"


def _number(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise MeshError(f"{what} must be a finite number, got {value!r}")
    return float(value)


def program_from_entries(entries: Iterable[dict], label=None, metadata=None) -> Program:
    modes: Dict[int, TBUMode] = {}
    for entry in entries:
        if not isinstance(entry, dict):
            raise MeshError("program entries must be objects")
        t = entry.get("tbu_id")
        if isinstance(t, bool) or not isinstance(t, int):
            raise MeshError(f"bad tbu_id {t!r}")
        if t in modes:
            raise MeshError(f"TBU {t} programmed twice")
        kind = entry.get("mode")
        if kind not in MODE_KINDS:
            raise MeshError(f"unknown mode {kind!r} for TBU {t}")
        if kind == "tunable":
            loss = entry.get("loss_db")
            try:
                settings = TBUSettings(
                    _number(entry.get("theta_upper"), "theta_upper"),
                    _number(entry.get("theta_lower"), "theta_lower"),
                    None if loss is None else _number(loss, "loss_db"),
                )
            except ValueError as exc:
                raise MeshError(str(exc)) from None
            modes[t] = TBUMode.tunable(settings)
        else:
            modes[t] = TBUMode(kind)
    return Program(modes, label, metadata or {})


def from_document(doc: dict) -> Tuple[Mesh, Program]:
    if not isinstance(doc, dict):
        raise MeshError("document must be a JSON object")
    if "version" not in doc:
        raise MeshError("document has no version field")
    if doc["version"] != SCHEMA_VERSION:
        raise SchemaVersionError(doc["version"])
    for key in ("topology", "m", "n", "tbus", "connections"):
        if key not in doc:
            raise MeshError(f"document is missing {key!r}")

    declared: Dict[str, int] = {}
    try:
        for entry in doc["tbus"]:
            for name in entry["ports"]:
                if name in declared:
                    raise MeshError(f"port {name} declared twice")
                declared[name] = parse_port_name(name)
    except (TypeError, KeyError):
        raise MeshError("malformed tbus list") from None

    seen = set()
    connections = []
    for pair in doc["connections"]:
        if not isinstance(pair, list) or len(pair) != 2:
            raise MeshError(f"malformed connection {pair!r}")
        for name in pair:
            if name not in declared:
                raise MeshError(f"dangling connection to undeclared port {name!r}")
            if name in seen:
                raise MeshError(f"port {name} appears in two connections")
            seen.add(name)
        connections.append(tuple(sorted(declared[x] for x in pair)))

    mesh = generate(doc["topology"], doc["m"], doc["n"])
    if sorted(declared.values()) != list(range(4 * mesh.tbu_count)) or \
            sorted(connections) != list(mesh.connections):
        raise MeshError("tbus/connections do not match the declared topology and size")
    if "external_ports" in doc:
        listed = [(e.get("name"), e.get("port")) for e in doc["external_ports"]]
        expected = [(mesh.external_name(p), port_name(p)) for p in mesh.external_ports]
        if listed != expected:
            raise MeshError("external port list does not match the mesh")

    program = program_from_entries(doc.get("program", []), doc.get("label"), doc.get("metadata") or {})
    program.validate(mesh)
    return mesh, program


def deserialize(text: str) -> Tuple[Mesh, Program]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeshError(f"malformed document: {exc}") from None
    return from_document(doc)
