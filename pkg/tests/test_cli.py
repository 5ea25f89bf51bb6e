import json
import math

import numpy as np
import pytest

from tightcert import __version__, cli
from tightcert.cli import (
    EXIT_CONSISTENCY, EXIT_CONVERGENCE, EXIT_OK, EXIT_VALIDATION, run)
from tightcert.contact import Certificate, UNIVERSALLY_TIGHT

FOUR_PI = 4.0 * math.pi

THIN_TORUS_FLAGS = [
    "--surface", "flat-torus", "--nx", "40", "--ny", "8", "--lx", "10",
    "--ly", "1", "--k", "2", "--tol", "1e-6"]


def _run(tmp_path, *argv):
    out = tmp_path / "report.json"
    if out.exists():
        out.unlink()
    code = run(["--out", str(out)] + list(argv))
    report = None
    if out.exists():
        report = json.loads(out.read_text(encoding="utf-8"))
    return code, report


def _criterion(certificate, name):
    (criterion,) = [c for c in certificate["criteria"] if c["name"] == name]
    return criterion


def test_certify_thin_torus(tmp_path):
    code, report = _run(
        tmp_path, "certify", *THIN_TORUS_FLAGS, "--fiber-length", "1")
    assert code == EXIT_OK
    assert report["schema"] == 1
    assert report["version"] == __version__
    assert report["config"]["command"] == "certify"
    assert report["config"]["configuration"]["fiber_length"] == 1.0

    result = report["result"]
    assert "exit_code" not in result
    assert result["selected"] == 1
    certificate = result["certificate"]
    assert certificate["verdict"] == UNIVERSALLY_TIGHT
    product = _criterion(certificate, "product_volume_bound")
    assert product["pass"]
    assert "paper_ref" in product
    expected = (2.0 * math.pi / 10.0) ** 2 * 10.0
    assert abs(product["margin"] - (FOUR_PI - expected)) < 0.01 * expected
    assert result["disc_balance"] == []


def test_certify_is_deterministic(tmp_path):
    argv = ["--out", str(tmp_path / "report.json"), "certify"] +\
        THIN_TORUS_FLAGS
    assert run(argv) == EXIT_OK
    first = (tmp_path / "report.json").read_bytes()
    assert run(argv) == EXIT_OK
    assert (tmp_path / "report.json").read_bytes() == first


def test_certify_consistency_failure(tmp_path, monkeypatch):
    def conflicting(*args, **kwargs):
        return Certificate("CONSISTENCY_FAILURE", [], [],
                           conflicts=["product_volume_bound"])

    monkeypatch.setattr(cli, "certify", conflicting)
    code, report = _run(tmp_path, "certify", *THIN_TORUS_FLAGS)
    assert code == EXIT_CONSISTENCY
    reasons = report["result"]["certificate"]["reasons"]
    assert reasons[0]["conflicting"] == ["product_volume_bound"]


def test_spectrum_icosphere(tmp_path):
    code, report = _run(tmp_path, "spectrum", "--surface", "icosphere",
                        "--subdiv", "4", "--k", "4", "--tol", "1e-6")
    assert code == EXIT_OK
    eigenpairs = report["result"]["eigenpairs"]
    assert [pair["index"] for pair in eigenpairs] == [0, 1, 2, 3]
    assert abs(eigenpairs[0]["lambda"]) < 1e-10
    for pair in eigenpairs[1:]:
        assert abs(pair["lambda"] - 2.0) < 0.02 * 2.0
        assert "values" not in pair


def test_spectrum_values(tmp_path):
    code, report = _run(tmp_path, "spectrum", "--nx", "6", "--ny", "6",
                        "--k", "3", "--values")
    assert code == EXIT_OK
    for pair in report["result"]["eigenpairs"]:
        assert len(pair["values"]) == 36


def test_stdout_report(capsys):
    assert run(["surface", "--surface", "icosphere", "--subdiv", "1"]) ==\
        EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["result"]["euler_characteristic"] == 2
    assert not report["result"]["curvature_nonpositive"]


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        run(["--version"])
    assert e.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_surface_save_and_load(tmp_path):
    path = tmp_path / "sphere.off"
    code, report = _run(tmp_path, "surface", "--surface", "icosphere",
                        "--subdiv", "1", "--save", str(path))
    assert code == EXIT_OK
    assert path.exists()
    code, loaded = _run(tmp_path, "surface", "--mesh", str(path))
    assert code == EXIT_OK
    for key in ("vertex_count", "face_count", "euler_characteristic"):
        assert loaded["result"][key] == report["result"][key]


def test_genus2_surface(tmp_path):
    code, report = _run(tmp_path, "surface", "--surface", "genus2")
    assert code == EXIT_OK
    assert report["result"]["genus"] == 2
    assert report["result"]["curvature_nonpositive"]


def test_nodal_report(tmp_path):
    code, report = _run(tmp_path, "nodal", *THIN_TORUS_FLAGS)
    assert code == EXIT_OK
    result = report["result"]
    assert result["selected"] == 1
    assert len(result["decomposition"]["domains"]) == 2
    assert len(result["dividing_set_geometry"]) == 2
    assert result["courant"]["satisfied"]
    assert "svg" not in result


def test_nodal_svg(tmp_path):
    pytest.importorskip("lxml")
    path = tmp_path / "nodal.svg"
    code, report = _run(tmp_path, "nodal", *THIN_TORUS_FLAGS,
                        "--svg", str(path))
    assert code == EXIT_OK
    assert report["result"]["svg"] == {"written": True, "path": str(path)}
    assert path.read_text(encoding="utf-8").startswith("<?xml")


def test_nodal_svg_without_layout(tmp_path):
    pytest.importorskip("lxml")
    path = tmp_path / "genus2.svg"
    code, report = _run(tmp_path, "nodal", "--surface", "genus2", "--k", "2",
                        "--svg", str(path))
    assert code == EXIT_OK
    assert not report["result"]["svg"]["written"]
    assert not path.exists()


def test_eigen_index_out_of_range(tmp_path):
    code, report = _run(tmp_path, "nodal", *THIN_TORUS_FLAGS,
                        "--eigen-index", "5")
    assert code == EXIT_VALIDATION
    assert report is None


def test_validation_exit_codes(tmp_path):
    assert _run(tmp_path, "surface", "--nx", "2")[0] == EXIT_VALIDATION
    assert _run(tmp_path, "surface", "--mesh",
                str(tmp_path / "missing.off"))[0] == EXIT_VALIDATION
    assert _run(tmp_path, "certify", *THIN_TORUS_FLAGS,
                "--fiber-length", "0")[0] == EXIT_VALIDATION


def test_convergence_exit_code(tmp_path):
    code, report = _run(tmp_path, "spectrum", "--nx", "6", "--ny", "6",
                        "--k", "4", "--tol", "1e-30")
    assert code == EXIT_CONVERGENCE
    assert report is None


def test_threads_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("TIGHTCERT_THREADS", "2")
    code, report = _run(tmp_path, "surface", "--nx", "4", "--ny", "4")
    assert code == EXIT_OK
    assert report["config"]["configuration"]["threads"] == 2

    monkeypatch.setenv("TIGHTCERT_THREADS", "many")
    assert _run(tmp_path, "surface")[0] == EXIT_VALIDATION


def test_torus3(tmp_path):
    pytest.importorskip("skimage")
    field = tmp_path / "alpha.bin"
    code, report = _run(tmp_path, "torus3", "--mode", "1", "--n", "16",
                        "--resolutions", "16", "32",
                        "--save-field", str(field))
    assert code == EXIT_OK
    result = report["result"]
    assert set(result) == {"residuals", "characteristic_surface",
                           "reeb_tangency", "fit_mu"}
    assert len(result["characteristic_surface"]["components"]) == 2
    assert result["characteristic_surface"]["all_tori"]
    assert result["reeb_tangency"] < 1e-12
    assert field.exists()


def test_non_finite_values_are_written_as_null(tmp_path, monkeypatch):
    def unbounded(*args, **kwargs):
        return {"area": math.inf, "gap": float("nan"),
                "nested": [np.float32("inf"), 1.5]}

    def reject(constant):
        raise ValueError(constant)

    monkeypatch.setattr(cli, "describe_mesh", unbounded)
    out = tmp_path / "report.json"
    assert run(["--out", str(out), "surface", "--nx", "4", "--ny", "4"]) ==\
        EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"),
                        parse_constant=reject)
    result = report["result"]
    assert result["area"] is None
    assert result["gap"] is None
    assert result["nested"] == [None, 1.5]
