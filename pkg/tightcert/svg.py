"""SVG pictures of nodal decompositions.

Domains are filled by sign and dividing curves stroked on top. Flat tori
are drawn in their periodic rectangle, embedded meshes in the Hammer
projection of their vertex directions.
"""
import math

import numpy as np
from lxml import etree

from tightcert.errors import LayoutError
from tightcert.nodal import NodalDecomposition

SVG_NAMESPACE = "http://www.w3.org/2000/svg"

POSITIVE_COLOR = "#d6604d"

NEGATIVE_COLOR = "#4393c3"

CURVE_COLOR = "#000000"

DEFAULT_WIDTH = 600.0

TORUS_RECT = "torus_rect"

SPHERE_HAMMER = "sphere_hammer"

NO_LAYOUT = "none"

LAYOUTS = (TORUS_RECT, SPHERE_HAMMER, NO_LAYOUT)


def available_layout(decomposition: NodalDecomposition) -> str:
    mesh = decomposition.refined_mesh
    if mesh.chart is not None:
        return TORUS_RECT
    if mesh.vertex_positions is not None:
        return SPHERE_HAMMER
    raise LayoutError(
        "{0} is intrinsic only and has no planar layout".format(
            decomposition.mesh.name))


def emit_svg(decomposition: NodalDecomposition, layout: str = None,
             width: float = DEFAULT_WIDTH):
    """Renders ``decomposition`` as an SVG document.

    :param decomposition: The nodal decomposition to draw.
    :param layout: One of ``torus_rect``, ``sphere_hammer`` or ``none``;
        chosen from the mesh when omitted.
    :param width: Picture width in pixels.
    :return: The SVG text, or None for layout ``none``.
    :raises LayoutError: The mesh does not support the layout.
    """
    if layout is None:
        layout = available_layout(decomposition)
    if layout not in LAYOUTS:
        raise LayoutError("unknown layout {0!r}".format(layout))
    if layout == NO_LAYOUT:
        return None
    if layout == TORUS_RECT:
        drawing = _TorusRectangle(decomposition, width)
    else:
        drawing = _HammerProjection(decomposition, width)
    return drawing.render()


def _format_path(polygons):
    parts = []
    for polygon in polygons:
        points = ["{0:.3f} {1:.3f}".format(x, y) for x, y in polygon]
        parts.append("M" + " L".join(points) + " Z")
    return " ".join(parts)


def _format_segments(segments):
    return " ".join(
        "M{0:.3f} {1:.3f} L{2:.3f} {3:.3f}".format(a[0], a[1], b[0], b[1])
        for a, b in segments)


class _Drawing(object):

    def __init__(self, decomposition, width, height):
        self.decomposition = decomposition
        self.mesh = decomposition.refined_mesh
        self.width = width
        self.height = height

    def face_polygons(self, faces):
        raise NotImplementedError

    def curve_segments(self, cycle):
        raise NotImplementedError

    def render(self) -> str:
        root = etree.Element("svg", nsmap={None: SVG_NAMESPACE})
        root.attrib["width"] = "{0:.0f}".format(self.width)
        root.attrib["height"] = "{0:.0f}".format(self.height)
        root.attrib["viewBox"] = "0 0 {0:.3f} {1:.3f}".format(
            self.width, self.height)
        defs = etree.SubElement(root, "defs")
        clip = etree.SubElement(defs, "clipPath", {"id": "frame"})
        self.add_frame(clip)
        group = etree.SubElement(root, "g", {"clip-path": "url(#frame)"})

        signs = self.decomposition.face_sign
        for sign, color in ((1, POSITIVE_COLOR), (-1, NEGATIVE_COLOR)):
            faces = np.nonzero(signs == sign)[0]
            if faces.shape[0] == 0:
                continue
            etree.SubElement(group, "path", {
                "class": "positive" if sign > 0 else "negative",
                "fill": color,
                "stroke": color,
                "stroke-width": "0.2",
                "d": _format_path(self.face_polygons(faces))})
        for index, cycle in enumerate(self.decomposition.dividing_set):
            etree.SubElement(group, "path", {
                "class": "dividing-curve",
                "id": "curve-{0}".format(index),
                "fill": "none",
                "stroke": CURVE_COLOR,
                "stroke-width": "1.5",
                "d": _format_segments(self.curve_segments(cycle))})
        return etree.tostring(
            root, pretty_print=True, xml_declaration=True,
            encoding="utf-8").decode("utf-8")

    def add_frame(self, clip):
        etree.SubElement(clip, "rect", {
            "x": "0", "y": "0", "width": "{0:.3f}".format(self.width),
            "height": "{0:.3f}".format(self.height)})


class _TorusRectangle(_Drawing):

    def __init__(self, decomposition, width):
        mesh = decomposition.refined_mesh
        if mesh.chart is None:
            raise LayoutError("{0} has no periodic chart".format(mesh.name))
        self.periods = np.asarray(mesh.chart_periods)
        self.scale = width / self.periods[0]
        super(_TorusRectangle, self).__init__(
            decomposition, width, self.periods[1] * self.scale)

    def _unwrapped(self, points):
        delta = points - points[0]
        delta -= self.periods * np.round(delta / self.periods)
        return points[0] + delta

    def _copies(self, points):
        """The polygon and its translates overlapping the frame."""
        shifts = [np.zeros(2)]
        for axis in range(2):
            for sign, outside in (
                    (-1.0, points[:, axis].max() > self.periods[axis]),
                    (1.0, points[:, axis].min() < 0.0)):
                if outside:
                    step = np.zeros(2)
                    step[axis] = sign * self.periods[axis]
                    shifts = shifts + [s + step for s in shifts]
        return [self._to_pixels(points + shift) for shift in shifts]

    def _to_pixels(self, points):
        return np.stack([points[:, 0] * self.scale,
                         (self.periods[1] - points[:, 1]) * self.scale], axis=1)

    def face_polygons(self, faces):
        polygons = []
        chart = self.mesh.chart
        for face in self.mesh.faces[faces]:
            polygons.extend(self._copies(self._unwrapped(chart[face])))
        return polygons

    def curve_segments(self, cycle):
        segments = []
        chart = self.mesh.chart
        for u, w in zip(cycle, np.roll(cycle, -1)):
            for copy in self._copies(self._unwrapped(chart[[u, w]])):
                segments.append((copy[0], copy[1]))
        return segments


class _HammerProjection(_Drawing):

    def __init__(self, decomposition, width):
        mesh = decomposition.refined_mesh
        if mesh.vertex_positions is None:
            raise LayoutError("{0} has no embedding".format(mesh.name))
        directions = mesh.vertex_positions /\
            np.linalg.norm(mesh.vertex_positions, axis=1)[:, None]
        self.longitude = np.arctan2(directions[:, 1], directions[:, 0])
        self.latitude = np.arcsin(np.clip(directions[:, 2], -1.0, 1.0))
        self.scale = width / (4.0 * math.sqrt(2.0))
        super(_HammerProjection, self).__init__(
            decomposition, width, width / 2.0)

    def _project(self, vertices):
        longitude = self.longitude[vertices]
        latitude = self.latitude[vertices]
        if longitude.max() - longitude.min() > math.pi:
            # straddles the antimeridian
            longitude = np.minimum(
                np.where(longitude < 0, longitude + 2.0 * math.pi, longitude),
                math.pi)
        denominator = np.sqrt(
            1.0 + np.cos(latitude) * np.cos(longitude / 2.0))
        x = 2.0 * math.sqrt(2.0) * np.cos(latitude) *\
            np.sin(longitude / 2.0) / denominator
        y = math.sqrt(2.0) * np.sin(latitude) / denominator
        return np.stack([
            (x + 2.0 * math.sqrt(2.0)) * self.scale,
            (math.sqrt(2.0) - y) * self.scale], axis=1)

    def face_polygons(self, faces):
        return [self._project(face) for face in self.mesh.faces[faces]]

    def curve_segments(self, cycle):
        segments = []
        for u, w in zip(cycle, np.roll(cycle, -1)):
            projected = self._project(np.array([u, w]))
            segments.append((projected[0], projected[1]))
        return segments

    def add_frame(self, clip):
        etree.SubElement(clip, "ellipse", {
            "cx": "{0:.3f}".format(self.width / 2.0),
            "cy": "{0:.3f}".format(self.height / 2.0),
            "rx": "{0:.3f}".format(self.width / 2.0),
            "ry": "{0:.3f}".format(self.height / 2.0)})
