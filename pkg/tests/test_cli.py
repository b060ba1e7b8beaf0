import csv
import io
import json

import numpy as np
import pytest

from fppga.cli import main
from fppga.mesh import deserialize, serialize
from fppga.netsolve import WaveguideParams


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture
def hex11(tmp_path):
    path = tmp_path / "mesh.json"
    assert run("gen", "--topology", "hexagonal", "--m", 1, "--n", 1, "-o", path) == 0
    return path


def test_gen_writes_canonical_document(hex11):
    text = hex11.read_text()
    mesh, program = deserialize(text)
    assert mesh.tbu_count == 6 and len(mesh.external_ports) == 12
    assert serialize(mesh, program) == text


def test_route_single_hop(hex11, tmp_path):
    out = tmp_path / "route.json"
    prog = tmp_path / "prog.json"
    # P0 and P1 sit on the two sides of the same TBU end
    assert run("route", "--mesh", hex11, "--from", "P0", "--to", "P1", "-o", out, "--program-out", prog) == 0
    report = json.loads(out.read_text())
    assert len(report["hops"]) == 1
    assert report["source"] == "P0" and report["destination"] == "P1"
    _, program = deserialize(prog.read_text())
    assert program.active_tbus() == [report["hops"][0]["tbu_id"]]


def test_route_same_port_is_usage_error(hex11, tmp_path, capsys):
    assert run("route", "--mesh", hex11, "--from", "P0", "--to", "P0", "-o", tmp_path / "r.json") == 1
    assert not (tmp_path / "r.json").exists()


def test_domain_error_reports_json(hex11, tmp_path, capsys):
    code = run("route", "--mesh", hex11, "--from", "P0", "--to", "P3", "--block", 0, 1, 2, 3, 4, 5,
               "-o", tmp_path / "r.json")
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "no_path" or "path" in err["error"]
    assert err["message"]


def test_bad_arguments_exit_one(hex11, tmp_path, capsys):
    assert run("gen", "--topology", "pentagonal", "--m", 1, "--n", 1, "-o", tmp_path / "x") == 1
    assert run("simulate", "--mesh", tmp_path / "missing.json", "--program", hex11, "--f-start", 1,
               "--f-stop", 2, "--points", 3, "-o", tmp_path / "s.csv") == 1
    assert run() == 1


def test_preset_then_simulate_shows_fsr(hex11, tmp_path):
    prog = tmp_path / "ring.json"
    assert run("preset", "--name", "ring", "--mesh", hex11, "--cell", 0, 0, "--kappa", 0.3, "-o", prog) == 0
    params = WaveguideParams()
    fsr = params.fsr(6)
    points = 801
    f0 = params.f_ref_hz
    spec = tmp_path / "s.csv"
    assert run("simulate", "--mesh", hex11, "--program", prog, "--f-start", repr(f0),
               "--f-stop", repr(f0 + 2.5 * fsr), "--points", points, "-o", spec) == 0
    rows = list(csv.DictReader(io.StringIO(spec.read_text())))
    assert len(rows) == points
    f = np.array([float(r["frequency_hz"]) for r in rows])
    mag = np.array([float(r["mag_db"]) for r in rows])
    interior = np.flatnonzero((mag[1:-1] < mag[:-2]) & (mag[1:-1] < mag[2:])) + 1
    dips = f[interior]
    assert len(dips) >= 2
    step = f[1] - f[0]
    assert np.all(np.abs(np.diff(dips) - fsr) <= step)


def test_optimize_command(hex11, tmp_path):
    prog = tmp_path / "prog.json"
    mesh, _ = deserialize(hex11.read_text())
    from fppga.mesh import Program
    from fppga.tbu import CROSS, TBUMode, TBUSettings
    prog.write_text(serialize(mesh, Program({0: TBUMode.tunable(TBUSettings(0.05, -0.05)), 1: CROSS})))
    target = tmp_path / "target.json"
    target.write_text(json.dumps({"in": "P0", "out": "P3", "target_fraction": 0.5, "lossless": True}))
    outs = []
    for k in range(2):
        trace = tmp_path / f"trace{k}.csv"
        tuned = tmp_path / f"tuned{k}.json"
        assert run("optimize", "--mesh", hex11, "--program", prog, "--target-spec", target,
                   "--bits", 8, "--seed", 1, "-o", trace, "--program-out", tuned) == 0
        outs.append((trace.read_bytes(), tuned.read_bytes()))
    assert outs[0] == outs[1]
    rows = list(csv.reader(io.StringIO(outs[0][0].decode())))
    assert rows[0][:3] == ["evaluation", "cost", "x0"]
    assert min(float(r[1]) for r in rows[1:]) < 1e-3


def test_every_command_is_byte_reproducible(tmp_path):
    def pipeline(d):
        d.mkdir()
        m = d / "mesh.json"
        run("gen", "--topology", "hexagonal", "--m", 2, "--n", 2, "-o", m)
        run("route", "--mesh", m, "--from", "P0", "--to", "P12", "-o", d / "route.json",
            "--program-out", d / "routed.json")
        run("preset", "--name", "ring", "--mesh", m, "--cell", 1, 1, "--kappa", 0.4, "-o", d / "ring.json")
        run("simulate", "--mesh", m, "--program", d / "ring.json", "--f-start", 193.1e12,
            "--f-stop", 193.13e12, "--points", 31, "-o", d / "spec.csv")
        return {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    a = pipeline(tmp_path / "a")
    b = pipeline(tmp_path / "b")
    assert a == b
    assert len(a) == 5
