from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from photomesh import io
from photomesh.cli import main
from photomesh.clements import ClementsDecomposition
from photomesh.linalg import global_phase_distance, haar_random_unitary, unitarity_deviation
from photomesh.mesh import SmziSetting
from photomesh.reck import ReckDecomposition


@pytest.fixture
def run(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)

    def go(*argv):
        capsys.readouterr()
        code = main([str(a) for a in argv])
        out = capsys.readouterr()
        return code, out.out, out.err

    return go


def write_matrix(path, u):
    io.write_matrix(path, u)
    return path


class TestDecompose:
    def test_reck_identity_4(self, run, tmp_path):
        code, out, _ = run("decompose", "--scheme", "reck-smzi", "--in", write_matrix(tmp_path / "u.json", np.eye(4)),
                           "--out", tmp_path / "t.json")
        assert code == 0
        assert float(out) < 1e-10
        doc = io.read_json(tmp_path / "t.json")
        assert doc["scheme"] == "reck-smzi"
        assert len(doc["smzi"]) == 6
        assert len(doc["phi_in"]) + len(doc["zeta_out"]) == 6

    def test_non_square(self, run, tmp_path):
        (tmp_path / "u.json").write_text(json.dumps({"m": 2, "re": [[1, 0, 0], [0, 1, 0]], "im": [[0, 0, 0], [0, 0, 0]]}))
        code, _, err = run("decompose", "--scheme", "clements-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")
        assert code == 2 and err.startswith("error:")
        assert not (tmp_path / "t.json").exists()

    def test_clements_haar_8_1(self, run, tmp_path):
        write_matrix(tmp_path / "u.json", haar_random_unitary(8, 1))
        code, out, _ = run("decompose", "--scheme", "clements-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")
        assert code == 0 and float(out) < 1e-9

    @pytest.mark.parametrize("scheme", ["reck-smzi", "clements-smzi", "clements-amzi", "clements-edge"])
    def test_every_scheme(self, scheme, run, tmp_path):
        write_matrix(tmp_path / "u.json", haar_random_unitary(5, 2))
        code, out, _ = run("decompose", "--scheme", scheme, "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")
        assert code == 0 and float(out) < 1e-9
        assert io.read_json(tmp_path / "t.json")["scheme"] == scheme

    def test_accepts_truncated_text(self, run, tmp_path):
        # Printing with 12 digits breaks unitarity at ~1e-12, well inside the CLI gate.
        u = haar_random_unitary(4, 0).mat
        doc = {"m": 4, "re": np.round(u.real, 12).tolist(), "im": np.round(u.imag, 12).tolist()}
        (tmp_path / "u.json").write_text(json.dumps(doc))
        code, out, _ = run("decompose", "--scheme", "reck-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")
        assert code == 0 and float(out) < 1e-9

    def test_one_mode(self, run, tmp_path):
        code, _, _ = run("decompose", "--scheme", "reck-smzi", "--in", write_matrix(tmp_path / "u.json", np.eye(1)),
                         "--out", tmp_path / "t.json")
        assert code == 2

    def test_unknown_scheme(self, run, tmp_path):
        code, _, _ = run("decompose", "--scheme", "triangle", "--in", write_matrix(tmp_path / "u.json", np.eye(2)),
                         "--out", tmp_path / "t.json")
        assert code == 2

    def test_deterministic_files(self, run, tmp_path):
        write_matrix(tmp_path / "u.json", haar_random_unitary(6, 5))
        for name in ("a.json", "b.json"):
            assert run("decompose", "--scheme", "clements-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / name)[0] == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestReconstruct:
    @pytest.mark.parametrize("scheme", ["reck-smzi", "clements-smzi", "clements-amzi", "clements-edge"])
    def test_round_trip(self, scheme, run, tmp_path):
        u = haar_random_unitary(6, 4)
        write_matrix(tmp_path / "u.json", u)
        assert run("decompose", "--scheme", scheme, "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")[0] == 0
        assert run("reconstruct", "--in", tmp_path / "t.json", "--out", tmp_path / "v.json")[0] == 0
        assert global_phase_distance(io.read_matrix(tmp_path / "v.json"), u) < 1e-9

    def test_zero_reck_m2_is_swap(self, run, tmp_path):
        t = ReckDecomposition(2, {(1, 1): SmziSetting()}, {1: 0.0}, {2: 0.0})
        io.write_json(tmp_path / "t.json", io.table_to_json(t))
        assert run("reconstruct", "--in", tmp_path / "t.json", "--out", tmp_path / "v.json")[0] == 0
        np.testing.assert_allclose(io.read_matrix(tmp_path / "v.json"), [[0, 1], [1, 0]], atol=1e-16)

    def test_relocated_mesh_matches_table(self, run, tmp_path):
        write_matrix(tmp_path / "u.json", haar_random_unitary(7, 6))
        run("decompose", "--scheme", "clements-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")
        assert run("relocate", "--in", tmp_path / "t.json", "--out", tmp_path / "mesh.json")[0] == 0
        run("reconstruct", "--in", tmp_path / "t.json", "--out", tmp_path / "a.json")
        run("reconstruct", "--in", tmp_path / "mesh.json", "--out", tmp_path / "b.json")
        a, b = io.read_matrix(tmp_path / "a.json"), io.read_matrix(tmp_path / "b.json")
        assert global_phase_distance(a, b) < 1e-10
        # The mesh file carries the global phase, so the match is exact, not just up to phase.
        assert np.max(np.abs(a - b)) < 1e-10

    def test_circuit_file(self, run, tmp_path):
        assert run("haar", "--m", 3, "--seed", 1, "--out", tmp_path / "u.json")[0] == 0
        run("optimize", "--in", tmp_path / "u.json", "--depth", 6, "--restarts", 3, "--out", tmp_path / "r.json")
        io.write_json(tmp_path / "c.json", io.read_json(tmp_path / "r.json")["circuit"])
        assert run("reconstruct", "--in", tmp_path / "c.json", "--out", tmp_path / "v.json")[0] == 0
        assert global_phase_distance(io.read_matrix(tmp_path / "v.json"), io.read_matrix(tmp_path / "u.json")) < 1e-6

    def test_schema_violation(self, run, tmp_path):
        (tmp_path / "t.json").write_text('{"scheme": "reck-smzi", "m": 2}')
        assert run("reconstruct", "--in", tmp_path / "t.json", "--out", tmp_path / "v.json")[0] == 2
        assert not (tmp_path / "v.json").exists()

    @pytest.mark.parametrize("m", [2, 3, 8, 12, 16])
    def test_round_trip_sizes(self, m, run, tmp_path):
        u = haar_random_unitary(m, 100 + m)
        write_matrix(tmp_path / "u.json", u)
        for scheme in ("reck-smzi", "clements-smzi"):
            assert run("decompose", "--scheme", scheme, "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")[0] == 0
            assert run("reconstruct", "--in", tmp_path / "t.json", "--out", tmp_path / "v.json")[0] == 0
            assert global_phase_distance(io.read_matrix(tmp_path / "v.json"), u) < 1e-9


class TestRelocate:
    def relocate(self, run, tmp_path, u):
        write_matrix(tmp_path / "u.json", u)
        run("decompose", "--scheme", "clements-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")
        return run("relocate", "--in", tmp_path / "t.json", "--out", tmp_path / "mesh.json")

    def test_identity_3(self, run, tmp_path):
        code, out, _ = self.relocate(run, tmp_path, np.eye(3))
        assert code == 0 and float(out) < 1e-11

    def test_haar_6(self, run, tmp_path):
        code, out, _ = self.relocate(run, tmp_path, haar_random_unitary(6, 0))
        assert code == 0 and float(out) < 1e-10
        assert io.read_json(tmp_path / "mesh.json")["layout"] == "clements_edge"

    def test_missing_zeta(self, run, tmp_path):
        t = ClementsDecomposition(3, {(j, k): SmziSetting(0.1, 0.2) for j in (1, 2) for k in range(1, j + 1)},
                                  {1: 0.0, 2: 0.0}, {2: 0.0, 3: 0.0})
        doc = io.table_to_json(t)
        doc["zeta_mid"].pop()
        io.write_json(tmp_path / "t.json", doc)
        assert run("relocate", "--in", tmp_path / "t.json", "--out", tmp_path / "mesh.json")[0] == 2
        assert not (tmp_path / "mesh.json").exists()

    def test_rejects_reck_table(self, run, tmp_path):
        write_matrix(tmp_path / "u.json", np.eye(3))
        run("decompose", "--scheme", "reck-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")
        assert run("relocate", "--in", tmp_path / "t.json", "--out", tmp_path / "mesh.json")[0] == 2


class TestHaar:
    def test_deterministic(self, run, tmp_path):
        run("haar", "--m", 4, "--seed", 7, "--out", tmp_path / "a.json")
        run("haar", "--m", 4, "--seed", 7, "--out", tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_one_mode(self, run, tmp_path):
        assert run("haar", "--m", 1, "--seed", 0, "--out", tmp_path / "u.json")[0] == 0
        u = io.read_matrix(tmp_path / "u.json")
        assert u.shape == (1, 1) and abs(abs(u[0, 0]) - 1) < 1e-15

    def test_16_unitary(self, run, tmp_path):
        run("haar", "--m", 16, "--seed", 3, "--out", tmp_path / "u.json")
        assert unitarity_deviation(io.read_matrix(tmp_path / "u.json")) < 1e-12

    def test_matches_library(self, run, tmp_path):
        run("haar", "--m", 5, "--seed", 2, "--out", tmp_path / "u.json")
        np.testing.assert_array_equal(io.read_matrix(tmp_path / "u.json"), haar_random_unitary(5, 2).mat)

    def test_utf8_newline_terminated(self, run, tmp_path):
        run("haar", "--m", 2, "--out", tmp_path / "u.json")
        assert (tmp_path / "u.json").read_bytes().endswith(b"\n")

    @pytest.mark.parametrize("m", ["0", "-2", "x"])
    def test_bad_m(self, m, run, tmp_path):
        assert run("haar", "--m", m, "--out", tmp_path / "u.json")[0] == 2


class TestOptimize:
    def test_haar_m4_depth8(self, run, tmp_path):
        run("haar", "--m", 4, "--seed", 11, "--out", tmp_path / "u.json")
        code, out, _ = run("optimize", "--in", tmp_path / "u.json", "--m", 4, "--depth", 8, "--sigma", 0,
                           "--seed", 0, "--out", tmp_path / "r.json")
        assert code == 0
        rep = io.read_json(tmp_path / "r.json")
        assert rep["achieved_infidelity"] < 1e-6
        assert float(out) == pytest.approx(rep["achieved_infidelity"], rel=1e-6, abs=1e-300)

    def test_depth_zero(self, run, tmp_path):
        run("haar", "--m", 4, "--out", tmp_path / "u.json")
        code, _, _ = run("optimize", "--in", tmp_path / "u.json", "--m", 4, "--depth", 0, "--out", tmp_path / "r.json")
        assert code == 2
        assert not (tmp_path / "r.json").exists()

    def test_per_restart(self, run, tmp_path):
        run("haar", "--m", 4, "--seed", 2, "--out", tmp_path / "u.json")
        code, _, _ = run("optimize", "--in", tmp_path / "u.json", "--m", 4, "--depth", 8, "--sigma", 0.1,
                         "--restarts", 4, "--tol", 0, "--out", tmp_path / "r.json")
        assert code == 0
        rep = io.read_json(tmp_path / "r.json")
        assert len(rep["per_restart"]) == rep["restarts"] == 4
        assert rep["achieved_infidelity"] == min(rep["per_restart"])
        assert rep["circuit"]["form"] == "compact"

    def test_m_mismatch(self, run, tmp_path):
        run("haar", "--m", 3, "--out", tmp_path / "u.json")
        assert run("optimize", "--in", tmp_path / "u.json", "--m", 4, "--depth", 4, "--out", tmp_path / "r.json")[0] == 2

    def test_negative_sigma(self, run, tmp_path):
        run("haar", "--m", 3, "--out", tmp_path / "u.json")
        assert run("optimize", "--in", tmp_path / "u.json", "--depth", 4, "--sigma", "-0.1",
                   "--out", tmp_path / "r.json")[0] == 2


class TestSweep:
    def test_balanced_all_solved(self, run, tmp_path):
        code, _, _ = run("sweep", "--m", 4, "--sigma", "0", "--trials", 5, "--out", tmp_path / "s.csv")
        assert code == 0
        rows = list(csv.DictReader((tmp_path / "s.csv").open()))
        assert len(rows) == 5 * 2
        assert all(float(r["infidelity"]) < 1e-6 for r in rows)

    def test_header_and_order(self, run, tmp_path):
        run("sweep", "--m", 3, "--sigma", "0.1,0", "--trials", 2, "--out", tmp_path / "s.csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "scheme,m,sigma,trial_seed,infidelity"
        keys = [(r[0], float(r[2]), int(r[3])) for r in csv.reader(lines[1:])]
        assert keys == sorted(keys) and len(keys) == 2 * 2 * 2

    def test_single_scheme(self, run, tmp_path):
        run("sweep", "--m", 3, "--sigma", "0.05", "--trials", 3, "--schemes", "fldzhyan", "--out", tmp_path / "s.csv")
        rows = list(csv.DictReader((tmp_path / "s.csv").open()))
        assert {r["scheme"] for r in rows} == {"fldzhyan"} and len(rows) == 3

    @pytest.mark.parametrize("argv", [
        ("--m", 4, "--sigma", "0", "--trials", 0),
        ("--m", 4, "--sigma", "0,-0.1", "--trials", 1),
        ("--m", 4, "--sigma", "nan", "--trials", 1),
        ("--m", 4, "--sigma", "a,b", "--trials", 1),
        ("--m", 4, "--sigma", ",", "--trials", 1),
        ("--m", 1, "--sigma", "0", "--trials", 1),
        ("--m", 4, "--sigma", "0", "--trials", 1, "--schemes", "reck"),
    ])
    def test_bad_grid(self, argv, run, tmp_path):
        assert run("sweep", *argv, "--out", tmp_path / "s.csv")[0] == 2
        assert not (tmp_path / "s.csv").exists()


class TestFaultInjection:
    def outputs(self, tmp_path):
        return sorted(p.name for p in tmp_path.iterdir() if p.name.startswith("out"))

    @pytest.mark.parametrize("cmd", [
        ("decompose", "--scheme", "reck-smzi"),
        ("decompose", "--scheme", "clements-edge"),
        ("optimize", "--depth", "4"),
    ])
    def test_non_unitary(self, cmd, run, tmp_path):
        u = haar_random_unitary(3, 0).mat.copy()
        u[0, 0] += 1e-6
        write_matrix(tmp_path / "u.json", u)
        code, _, err = run(*cmd, "--in", tmp_path / "u.json", "--out", tmp_path / "out.json")
        assert code == 3 and "unitar" in err
        assert self.outputs(tmp_path) == []

    def test_not_renormalized(self, run, tmp_path):
        # Just outside the gate: refused rather than projected back onto the unitary group.
        write_matrix(tmp_path / "u.json", np.eye(3) * (1 + 1e-7))
        assert run("decompose", "--scheme", "reck-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "out.json")[0] == 3

    @pytest.mark.parametrize("text", [
        '{"m": 2, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]',
        '{"m": 2, "re": [[NaN, 0], [0, 1]], "im": [[0, 0], [0, 0]]}',
        '{"m": 2, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, "0"]]}',
        '',
        '[]',
    ])
    def test_malformed_matrix(self, text, run, tmp_path):
        (tmp_path / "u.json").write_text(text)
        for cmd in (("decompose", "--scheme", "clements-smzi"), ("optimize", "--depth", "4")):
            assert run(*cmd, "--in", tmp_path / "u.json", "--out", tmp_path / "out.json")[0] == 2
        assert self.outputs(tmp_path) == []

    def test_out_of_range_index(self, run, tmp_path):
        write_matrix(tmp_path / "u.json", haar_random_unitary(4, 0))
        run("decompose", "--scheme", "clements-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")
        doc = io.read_json(tmp_path / "t.json")
        doc["smzi"][0]["k"] = 9
        io.write_json(tmp_path / "t.json", doc)
        for cmd in ("reconstruct", "relocate"):
            assert run(cmd, "--in", tmp_path / "t.json", "--out", tmp_path / "out.json")[0] == 2
        assert self.outputs(tmp_path) == []

    def test_truncated_table(self, run, tmp_path):
        write_matrix(tmp_path / "u.json", haar_random_unitary(4, 0))
        run("decompose", "--scheme", "reck-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "t.json")
        text = (tmp_path / "t.json").read_text()
        (tmp_path / "t.json").write_text(text[:-40])
        assert run("reconstruct", "--in", tmp_path / "t.json", "--out", tmp_path / "out.json")[0] == 2
        assert self.outputs(tmp_path) == []

    def test_missing_input_file(self, run, tmp_path):
        assert run("reconstruct", "--in", tmp_path / "nope.json", "--out", tmp_path / "out.json")[0] == 2

    def test_unwritable_output(self, run, tmp_path):
        assert run("haar", "--m", 2, "--out", tmp_path / "no" / "dir" / "u.json")[0] == 2

    def test_existing_output_kept_on_failure(self, run, tmp_path):
        (tmp_path / "out.json").write_text("previous\n")
        (tmp_path / "u.json").write_text("{")
        assert run("decompose", "--scheme", "reck-smzi", "--in", tmp_path / "u.json", "--out", tmp_path / "out.json")[0] == 2
        assert (tmp_path / "out.json").read_text() == "previous\n"

    def test_missing_subcommand(self, run):
        assert run()[0] == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "u.json"
    proc = subprocess.run([sys.executable, "-m", "photomesh", "haar", "--m", "3", "--seed", "1", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    np.testing.assert_array_equal(io.read_matrix(out), haar_random_unitary(3, 1).mat)
