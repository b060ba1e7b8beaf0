import json
import math
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from fppga.errors import MeshError, SchemaVersionError
from fppga.mesh import (
    TOPOLOGIES,
    Program,
    deserialize,
    from_document,
    generate,
    parse_port_name,
    port_name,
    port_tbu,
    serialize,
    to_document,
)
from fppga.tbu import BAR, CROSS, OFF, TBUMode, TBUSettings


def geometric_edges(topology, m, n):
    """Count cell sides from real-valued polygon geometry (independent oracle)."""
    polys = []
    for r in range(m):
        for c in range(n):
            if topology == "hexagonal":
                cx, cy = 1.5 * c, math.sqrt(3) * (r + 0.5 * (c % 2))
                polys.append([(cx + math.cos(k * math.pi / 3), cy + math.sin(k * math.pi / 3)) for k in range(6)])
            elif topology == "square":
                polys.append([(c, r), (c + 1, r), (c + 1, r + 1), (c, r + 1)])
            else:
                h = math.sqrt(3) / 2

                def pt(i, j):
                    return (i + 0.5 * j, h * j)
                polys.append([pt(c, r), pt(c + 1, r), pt(c, r + 1)])
                polys.append([pt(c + 1, r), pt(c + 1, r + 1), pt(c, r + 1)])
    edges = Counter()
    for poly in polys:
        for a, b in zip(poly, poly[1:] + poly[:1]):
            key = tuple(sorted([(round(a[0], 6), round(a[1], 6)), (round(b[0], 6), round(b[1], 6))]))
            edges[key] += 1
    boundary = sum(1 for v in edges.values() if v == 1)
    return len(edges), boundary


def test_hexagonal_1x1_counts():
    mesh = generate("hexagonal", 1, 1)
    assert mesh.tbu_count == 6
    assert len(mesh.external_ports) == 12
    assert mesh.summary() == {"tbus": 6, "connections": 6, "external_ports": 12}


def test_square_1x1_counts():
    assert generate("square", 1, 1).tbu_count == 4


@pytest.mark.parametrize("topology", TOPOLOGIES)
@pytest.mark.parametrize("m,n", [(1, 1), (2, 2), (1, 3), (3, 2), (4, 4)])
def test_tbu_count_matches_geometry(topology, m, n):
    mesh = generate(topology, m, n)
    edges, boundary = geometric_edges(topology, m, n)
    assert mesh.tbu_count == edges
    assert len(mesh.external_ports) == 2 * boundary


def _connected(mesh):
    seen, stack = {0}, [0]
    while stack:
        t = stack.pop()
        for u in mesh.tbu_neighbors(t):
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == mesh.tbu_count


@pytest.mark.parametrize("topology", TOPOLOGIES)
def test_invariants_all_small_meshes(topology):
    for m in range(1, 5):
        for n in range(1, 5):
            mesh = generate(topology, m, n)
            ports = set(range(4 * mesh.tbu_count))
            internal = [p for c in mesh.connections for p in c]
            assert len(internal) == len(set(internal))
            assert set(internal).isdisjoint(mesh.external_ports)
            assert set(internal) | set(mesh.external_ports) == ports
            for p, q in mesh.connections:
                assert port_tbu(p) != port_tbu(q)
                assert mesh.partner(p) == q and mesh.partner(q) == p
            assert _connected(mesh)


def test_external_ordering_deterministic():
    a = generate("hexagonal", 2, 3)
    b = generate("hexagonal", 2, 3)
    assert a.external_ports == b.external_ports
    assert [a.external_name(p) for p in a.external_ports] == [f"P{k}" for k in range(len(a.external_ports))]
    c, _ = deserialize(serialize(a))
    assert c.external_ports == a.external_ports


def test_external_walk_starts_at_lowest_boundary_tbu():
    for topology in TOPOLOGIES:
        mesh = generate(topology, 2, 2)
        assert port_tbu(mesh.external_ports[0]) == min(mesh.boundary_tbus())


@pytest.mark.parametrize("bad", [(0, 1), (1, 0), (-1, 2), (1.5, 1), (True, 1)])
def test_generate_rejects_bad_dimensions(bad):
    with pytest.raises(MeshError):
        generate("square", *bad)


def test_generate_rejects_unknown_topology():
    with pytest.raises(MeshError):
        generate("octagonal", 1, 1)


def test_port_names_roundtrip():
    for p in range(40):
        assert parse_port_name(port_name(p)) == p
    for bad in ["T1", "X1.A0", "T1.C0", "T1.A2", "T.A0"]:
        with pytest.raises(MeshError):
            parse_port_name(bad)


def test_resolve_port_forms():
    mesh = generate("hexagonal", 1, 1)
    p = mesh.external_ports[3]
    assert mesh.resolve_port("P3") == p
    assert mesh.resolve_port(port_name(p)) == p
    assert mesh.resolve_port(p) == p
    with pytest.raises(MeshError):
        mesh.resolve_port("P12")


def test_program_defaults_to_off():
    prog = Program({1: BAR, 2: OFF})
    assert prog.active_tbus() == [1]
    assert prog.mode(5) == OFF
    mesh = generate("square", 1, 1)
    with pytest.raises(MeshError):
        Program({9: BAR}).validate(mesh)


mode_strategy = st.one_of(
    st.just(BAR), st.just(CROSS),
    st.builds(lambda a, b, l: TBUMode.tunable(TBUSettings(a, b, l)),
              st.floats(-10, 10), st.floats(-10, 10), st.one_of(st.none(), st.floats(0, 5))),
)


@settings(max_examples=60)
@given(topology=st.sampled_from(TOPOLOGIES), m=st.integers(1, 3), n=st.integers(1, 3), data=st.data())
def test_serialization_roundtrip(topology, m, n, data):
    mesh = generate(topology, m, n)
    ids = data.draw(st.lists(st.integers(0, mesh.tbu_count - 1), unique=True, max_size=mesh.tbu_count))
    modes = {t: data.draw(mode_strategy) for t in ids}
    prog = Program(modes, label=data.draw(st.one_of(st.none(), st.text(max_size=5))), metadata={"k": [1, 2]})
    text = serialize(mesh, prog)
    mesh2, prog2 = deserialize(text)
    assert mesh2 == mesh
    assert prog2 == prog
    assert serialize(mesh2, prog2) == text


def test_document_schema_fields():
    doc = to_document(generate("hexagonal", 1, 1), Program({0: BAR}))
    assert doc["version"] == 1
    for key in ("topology", "m", "n", "tbus", "connections", "program"):
        assert key in doc
    assert doc["program"] == [{"tbu_id": 0, "mode": "bar", "theta_upper": None,
                               "theta_lower": None, "loss_db": None}]


def test_document_port_in_two_connections_rejected():
    doc = to_document(generate("hexagonal", 1, 1))
    a, b = doc["connections"][0]
    doc["connections"][1][0] = a
    with pytest.raises(MeshError):
        from_document(doc)


def test_document_dangling_connection_rejected():
    doc = to_document(generate("square", 1, 1))
    doc["connections"][0][1] = "T99.A0"
    with pytest.raises(MeshError, match="dangling"):
        from_document(doc)


def test_document_unknown_version_rejected():
    doc = to_document(generate("square", 1, 1))
    doc["version"] = 7
    with pytest.raises(SchemaVersionError, match="7"):
        from_document(doc)


def test_document_malformed_rejected():
    with pytest.raises(MeshError):
        deserialize("{not json")
    doc = to_document(generate("square", 1, 1))
    del doc["connections"]
    with pytest.raises(MeshError):
        from_document(doc)
    doc = to_document(generate("square", 1, 1), Program({0: BAR}))
    doc["program"].append(dict(doc["program"][0]))
    with pytest.raises(MeshError, match="twice"):
        from_document(doc)


def test_document_wiring_must_match_topology():
    doc = to_document(generate("square", 2, 2))
    c0, c1 = doc["connections"][0], doc["connections"][1]
    c0[1], c1[1] = c1[1], c0[1]
    with pytest.raises(MeshError):
        from_document(doc)


def test_serialize_is_plain_json():
    text = serialize(generate("triangular", 1, 2), Program({0: CROSS}))
    assert json.loads(text)["topology"] == "triangular"
    assert text.endswith("\n")
