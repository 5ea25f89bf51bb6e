import numpy as np
import pytest

from tightcert import (
    ScalarField, build_flat_torus, build_hyperbolic_genus2, decompose)
from tightcert.errors import LayoutError

from .test_nodal import _cosine, _sphere_spectrum, _torus

etree = pytest.importorskip("lxml.etree")

from tightcert.svg import _TorusRectangle, emit_svg  # noqa: E402

SVG = "{http://www.w3.org/2000/svg}"


def _paths(text, css_class):
    root = etree.fromstring(text.encode("utf-8"))
    return [path for path in root.iter(SVG + "path")
            if path.get("class") == css_class]


def test_torus_rectangle():
    decomposition = decompose(_cosine(_torus()))
    text = emit_svg(decomposition)
    assert text.startswith("<?xml")
    root = etree.fromstring(text.encode("utf-8"))
    assert root.tag == SVG + "svg"
    assert root.get("width") == "600"
    assert root.get("height") == "600"
    assert root.find(SVG + "defs/" + SVG + "clipPath/" + SVG + "rect") is\
        not None

    curves = _paths(text, "dividing-curve")
    assert [curve.get("id") for curve in curves] == ["curve-0", "curve-1"]
    assert len(_paths(text, "positive")) == 1
    assert len(_paths(text, "negative")) == 1


def test_torus_polygon_left_of_frame_is_wrapped():
    drawing = _TorusRectangle(decompose(_cosine(_torus())), 600)
    points = np.array([[0.0, 1.0], [-0.5, 1.0], [0.0, 1.5]])
    copies = drawing._copies(points)
    assert len(copies) == 2
    assert np.allclose(copies[1][:, 0], copies[0][:, 0] + 600.0)
    assert np.allclose(copies[1][:, 1], copies[0][:, 1])


def test_svg_is_deterministic():
    decomposition = decompose(_cosine(_torus()))
    assert emit_svg(decomposition) == emit_svg(decomposition)


def test_thin_torus_aspect():
    mesh = build_flat_torus(20, 4, 10.0, 1.0)
    values = np.cos(2.0 * np.pi * mesh.chart[:, 0] / 10.0)
    text = emit_svg(decompose(ScalarField(mesh, values)), width=500)
    root = etree.fromstring(text.encode("utf-8"))
    assert root.get("width") == "500"
    assert root.get("height") == "50"


def test_one_signed_field_has_no_curves():
    text = emit_svg(decompose(_cosine(_torus(), shift=2.0)))
    assert _paths(text, "dividing-curve") == []
    assert _paths(text, "negative") == []
    assert len(_paths(text, "positive")) == 1


def test_sphere_hammer_projection():
    decomposition = decompose(_sphere_spectrum()[1].f)
    text = emit_svg(decomposition)
    root = etree.fromstring(text.encode("utf-8"))
    assert root.get("height") == "300"
    assert root.find(
        SVG + "defs/" + SVG + "clipPath/" + SVG + "ellipse") is not None
    assert len(_paths(text, "dividing-curve")) == 1


def test_layout_errors():
    mesh = build_hyperbolic_genus2(0)
    values = 2.0 + np.linspace(0.0, 1.0, mesh.vertex_count)
    with pytest.raises(LayoutError):
        emit_svg(decompose(ScalarField(mesh, values)))

    sphere = decompose(_sphere_spectrum()[1].f)
    with pytest.raises(LayoutError):
        emit_svg(sphere, layout="torus_rect")
    with pytest.raises(LayoutError):
        emit_svg(sphere, layout="polar")
    assert emit_svg(sphere, layout="none") is None
