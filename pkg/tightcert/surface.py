"""Intrinsic closed triangle meshes.

A mesh is its combinatorics plus one length per undirected edge. Every
geometric quantity downstream (angles, areas, cotangent weights, gradients)
is a function of the lengths only, so flat tori and hyperbolic surfaces are
handled without an embedding.
"""
import logging
import math
from collections import namedtuple
from typing import Dict, Optional

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from tightcert.errors import (
    DisconnectedMeshError, MeshParseError, NonManifoldEdgeError,
    NonOrientableError, OpenSurfaceError, TriangleInequalityError,
    ValidationError)

logger = logging.getLogger(__name__)


TWO_PI = 2.0 * math.pi

#: Relative tolerance of the discrete Gauss-Bonnet identity.
GAUSS_BONNET_RTOL = 1e-9

#: Geodesic midpoint subdivisions applied to the octagon fan before the
#: refinement levels requested by the caller.
GENUS2_BASE_SUBDIVISIONS = 4

OFF_HEADER = "OFF"

IOFF_HEADER = "IOFF"


CurvatureSign = namedtuple(
    "CurvatureSign", ["nonpositive", "max_curvature", "vertex"])


def _corner_edge_keys(faces):
    """Vertex pairs of the edge opposite each corner, shape (F, 3, 2)."""
    return np.stack([
        np.stack([faces[:, 1], faces[:, 2]], axis=1),
        np.stack([faces[:, 2], faces[:, 0]], axis=1),
        np.stack([faces[:, 0], faces[:, 1]], axis=1)], axis=1)


def _edge_table(faces):
    """Returns (edges, face_edges).

    ``edges`` holds the sorted vertex pairs of the undirected edges in
    lexicographic order, ``face_edges[f, c]`` the index of the edge opposite
    corner ``c`` of face ``f``.
    """
    keys = np.sort(_corner_edge_keys(faces).reshape(-1, 2), axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    return edges, np.asarray(inverse).reshape(-1, 3)


def triangle_areas(face_lengths):
    """Heron's formula in Kahan's cancellation-free ordering.

    :param face_lengths: (F, 3) array of side lengths.
    """
    ordered = -np.sort(-np.asarray(face_lengths, dtype=float), axis=1)
    a, b, c = ordered[:, 0], ordered[:, 1], ordered[:, 2]
    product = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(product, 0.0))


def corner_angles(face_lengths):
    """Interior angle at every corner from the law of cosines.

    ``face_lengths[f, c]`` is the side opposite corner ``c``. The cosine
    argument is clamped to [-1, 1].
    """
    lengths = np.asarray(face_lengths, dtype=float)
    opposite = lengths
    left = np.roll(lengths, -1, axis=1)
    right = np.roll(lengths, -2, axis=1)
    cosine = (left ** 2 + right ** 2 - opposite ** 2) / (2.0 * left * right)
    return np.arccos(np.clip(cosine, -1.0, 1.0))


def face_frames(face_lengths):
    """Lays every face out in its own planar frame.

    Corner 0 sits at the origin, corner 1 on the positive x axis and corner 2
    in the upper half plane, so the layout is counterclockwise.

    :return: (F, 3, 2) corner coordinates.
    """
    lengths = np.asarray(face_lengths, dtype=float)
    l0, l1, l2 = lengths[:, 0], lengths[:, 1], lengths[:, 2]
    x2 = (l2 ** 2 + l1 ** 2 - l0 ** 2) / (2.0 * l2)
    y2 = np.sqrt(np.maximum(l1 ** 2 - x2 ** 2, 0.0))
    frames = np.zeros((lengths.shape[0], 3, 2))
    frames[:, 1, 0] = l2
    frames[:, 2, 0] = x2
    frames[:, 2, 1] = y2
    return frames


class TriangleMesh(object):

    def __init__(
            self, vertex_count: int, faces, edges, edge_lengths,
            vertex_positions=None, chart=None, chart_periods=None,
            name: str = "mesh", validate: bool = True):
        """
        :param vertex_count: Number of vertices.
        :param faces: (F, 3) vertex indices, counterclockwise.
        :param edges: (E, 2) sorted vertex pairs, lexicographically ordered,
            as returned by the edge table of ``faces``.
        :param edge_lengths: (E,) positive lengths aligned with ``edges``.
        :param vertex_positions: Optional (V, 3) embedding the lengths were
            derived from.
        :param chart: Optional (V, 2) periodic parameter coordinates (flat
            tori), used only for drawing.
        :param chart_periods: The two periods of ``chart``.
        :param name: Label used in reports.
        :param validate: If True, reject meshes that are not closed,
            manifold, oriented, connected surfaces with valid lengths.
        """
        self.vertex_count = int(vertex_count)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValidationError(
                "faces must be an (F, 3) array", module="surface")
        if self.faces.size and (
                self.faces.min() < 0 or self.faces.max() >= self.vertex_count):
            raise ValidationError(
                "face index out of range", module="surface")
        computed_edges, self.face_edges = _edge_table(self.faces)
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if self.edges.shape != computed_edges.shape or\
                not np.array_equal(self.edges, computed_edges):
            raise ValidationError(
                "edge list does not match the faces", module="surface")
        self.edge_lengths = np.asarray(edge_lengths, dtype=float).reshape(-1)
        if self.edge_lengths.shape[0] != self.edges.shape[0]:
            raise ValidationError(
                "expected {0} edge lengths, got {1}".format(
                    self.edges.shape[0], self.edge_lengths.shape[0]),
                module="surface")
        self.vertex_positions = None if vertex_positions is None else\
            np.asarray(vertex_positions, dtype=float).reshape(-1, 3)
        self.chart = None if chart is None else\
            np.asarray(chart, dtype=float).reshape(-1, 2)
        self.chart_periods = None if chart_periods is None else\
            tuple(float(p) for p in chart_periods)
        self.name = name

        for array in (self.faces, self.face_edges, self.edges,
                      self.edge_lengths, self.vertex_positions, self.chart):
            if array is not None:
                array.setflags(write=False)

        self._face_areas = None
        self._corner_angles = None

        if validate:
            self.validate()

    @classmethod
    def from_face_lengths(
            cls, vertex_count, faces, face_lengths, **kwargs):
        """Builds a mesh from per-corner opposite side lengths.

        Lengths of an edge seen from its two faces are averaged.
        """
        faces = np.asarray(faces, dtype=np.int64)
        edges, face_edges = _edge_table(faces)
        totals = np.bincount(
            face_edges.ravel(), weights=np.asarray(face_lengths).ravel(),
            minlength=edges.shape[0])
        counts = np.bincount(face_edges.ravel(), minlength=edges.shape[0])
        return cls(vertex_count, faces, edges, totals / np.maximum(counts, 1),
                   **kwargs)

    @classmethod
    def from_positions(cls, positions, faces, **kwargs):
        """Builds a mesh whose lengths are the Euclidean edge lengths of an
        embedding."""
        positions = np.asarray(positions, dtype=float)
        faces = np.asarray(faces, dtype=np.int64)
        edges, _ = _edge_table(faces)
        lengths = np.linalg.norm(
            positions[edges[:, 0]] - positions[edges[:, 1]], axis=1)
        return cls(positions.shape[0], faces, edges, lengths,
                   vertex_positions=positions, **kwargs)

    def __str__(self):
        return "<tightcert.TriangleMesh> {0} V={1} E={2} F={3} chi={4}".format(
            self.name, self.vertex_count, self.edge_count, self.face_count,
            self.euler_characteristic)

    @property
    def face_count(self) -> int:
        return int(self.faces.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def euler_characteristic(self) -> int:
        return self.vertex_count - self.edge_count + self.face_count

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic) // 2

    @property
    def face_lengths(self):
        """(F, 3) side lengths, entry ``c`` opposite corner ``c``."""
        return self.edge_lengths[self.face_edges]

    @property
    def face_areas(self):
        if self._face_areas is None:
            self._face_areas = triangle_areas(self.face_lengths)
            self._face_areas.setflags(write=False)
        return self._face_areas

    @property
    def corner_angles(self):
        if self._corner_angles is None:
            self._corner_angles = corner_angles(self.face_lengths)
            self._corner_angles.setflags(write=False)
        return self._corner_angles

    @property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    def vertex_adjacency(self):
        """Symmetric (V, V) CSR adjacency matrix of the edge graph."""
        n = self.vertex_count
        ones = np.ones(self.edge_count)
        adjacency = sparse.coo_matrix(
            (ones, (self.edges[:, 0], self.edges[:, 1])), shape=(n, n))
        return (adjacency + adjacency.T).tocsr()

    def edge_faces(self):
        """(E, 2) indices of the two faces on each edge (closed meshes)."""
        flat = self.face_edges.ravel()
        order = np.argsort(flat, kind="stable")
        return (order // 3).reshape(-1, 2)

    def validate(self):
        """Checks the closed-surface invariants.

        :raises OpenSurfaceError: An edge bounds a single face.
        :raises NonManifoldEdgeError: An edge bounds three or more faces.
        :raises NonOrientableError: Adjacent faces disagree on orientation.
        :raises DisconnectedMeshError: The surface has several components or
            unused vertices.
        :raises TriangleInequalityError: A face violates the strict triangle
            inequality.
        """
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            face = int(np.nonzero(
                (self.faces[:, 0] == self.faces[:, 1]) |
                (self.faces[:, 1] == self.faces[:, 2]) |
                (self.faces[:, 2] == self.faces[:, 0]))[0][0])
            raise ValidationError(
                "face {0} repeats a vertex".format(face), module="surface",
                face=face)

        counts = np.bincount(
            self.face_edges.ravel(), minlength=self.edge_count)
        if np.any(counts > 2):
            edge = int(np.nonzero(counts > 2)[0][0])
            raise NonManifoldEdgeError(
                "edge {0} {1} is shared by {2} faces".format(
                    edge, tuple(int(v) for v in self.edges[edge]),
                    int(counts[edge])),
                edge=edge)
        if np.any(counts == 1):
            edge = int(np.nonzero(counts == 1)[0][0])
            raise OpenSurfaceError(
                "edge {0} {1} bounds a single face (surface has a "
                "boundary)".format(edge, tuple(int(v) for v in self.edges[edge])),
                edge=edge)

        directed = self.faces[:, [0, 1, 2]] * self.vertex_count +\
            self.faces[:, [1, 2, 0]]
        unique, first, seen = np.unique(
            directed.ravel(), return_index=True, return_counts=True)
        if np.any(seen > 1):
            duplicate = unique[seen > 1][0]
            faces_with = np.nonzero(np.any(directed == duplicate, axis=1))[0]
            raise NonOrientableError(
                "faces {0} traverse edge ({1}, {2}) in the same "
                "direction".format(
                    [int(f) for f in faces_with],
                    int(duplicate // self.vertex_count),
                    int(duplicate % self.vertex_count)),
                faces=[int(f) for f in faces_with])

        used = np.zeros(self.vertex_count, dtype=bool)
        used[self.faces.ravel()] = True
        if not used.all():
            vertex = int(np.nonzero(~used)[0][0])
            raise DisconnectedMeshError(
                "vertex {0} belongs to no face".format(vertex), vertex=vertex)
        component_count, _ = csgraph.connected_components(
            self.vertex_adjacency(), directed=False)
        if component_count != 1:
            raise DisconnectedMeshError(
                "mesh has {0} connected components".format(component_count),
                components=component_count)

        if not np.all(np.isfinite(self.edge_lengths)) or\
                np.any(self.edge_lengths <= 0):
            edge = int(np.nonzero(
                ~(np.isfinite(self.edge_lengths) &
                  (self.edge_lengths > 0)))[0][0])
            raise TriangleInequalityError(
                "edge {0} has non-positive length {1!r}".format(
                    edge, float(self.edge_lengths[edge])), edge=edge)
        lengths = self.face_lengths
        slack = lengths.sum(axis=1)[:, None] - 2.0 * lengths
        if np.any(slack <= 0):
            face = int(np.nonzero(np.any(slack <= 0, axis=1))[0][0])
            raise TriangleInequalityError(
                "face {0} {1} violates the triangle inequality with lengths "
                "{2}".format(
                    face, tuple(int(v) for v in self.faces[face]),
                    [float(x) for x in lengths[face]]),
                face=face)
        return self


class ScalarField(object):

    def __init__(self, mesh: TriangleMesh, values):
        """
        :param mesh: The mesh the values are sampled on.
        :param values: One finite real per vertex.
        """
        values = np.array(values, dtype=float).reshape(-1)
        if values.shape[0] != mesh.vertex_count:
            raise ValidationError(
                "field has {0} values for {1} vertices".format(
                    values.shape[0], mesh.vertex_count), module="nodal")
        if not np.all(np.isfinite(values)):
            raise ValidationError(
                "field has non-finite values", module="nodal")
        values.setflags(write=False)
        self.mesh = mesh
        self.values = values

    def __neg__(self):
        return ScalarField(self.mesh, -self.values)

    def __len__(self):
        return self.values.shape[0]


class CurvatureField(object):

    def __init__(self, vertex_defect, vertex_lumped_area):
        """
        :param vertex_defect: Angle defect per vertex (radians).
        :param vertex_lumped_area: One third of the incident face areas.
        """
        self.vertex_defect = np.asarray(vertex_defect, dtype=float)
        self.vertex_lumped_area = np.asarray(vertex_lumped_area, dtype=float)
        self.pointwise_curvature = self.vertex_defect / self.vertex_lumped_area

    @property
    def total_curvature(self) -> float:
        return float(self.vertex_defect.sum())


def vertex_angle_sums(mesh: TriangleMesh):
    return np.bincount(
        mesh.faces.ravel(), weights=mesh.corner_angles.ravel(),
        minlength=mesh.vertex_count)


def lumped_vertex_areas(mesh: TriangleMesh):
    return np.bincount(
        mesh.faces.ravel(), weights=np.repeat(mesh.face_areas / 3.0, 3),
        minlength=mesh.vertex_count)


def discrete_curvature(mesh: TriangleMesh) -> CurvatureField:
    """Angle-defect curvature: ``2 pi`` minus the incident corner angles at
    every vertex, with barycentric (lumped) vertex areas."""
    defect = TWO_PI - vertex_angle_sums(mesh)
    return CurvatureField(defect, lumped_vertex_areas(mesh))


def gauss_bonnet_error(mesh: TriangleMesh, curvature: CurvatureField = None):
    """Absolute deviation of the total angle defect from ``2 pi chi``."""
    if curvature is None:
        curvature = discrete_curvature(mesh)
    return abs(curvature.total_curvature -
               TWO_PI * mesh.euler_characteristic)


def curvature_nonpositive(mesh: TriangleMesh, tol: float = 0.0,
                          curvature: CurvatureField = None) -> CurvatureSign:
    """Returns whether every pointwise curvature is at most ``tol``, with
    the largest value and where it occurs."""
    if tol < 0:
        raise ValidationError("tol must be >= 0", module="surface")
    if curvature is None:
        curvature = discrete_curvature(mesh)
    vertex = int(np.argmax(curvature.pointwise_curvature))
    worst = float(curvature.pointwise_curvature[vertex])
    return CurvatureSign(worst <= tol, worst, vertex)


def face_gradients(mesh: TriangleMesh, values):
    """Gradient of the piecewise linear interpolant on every face.

    Each gradient is expressed in the face's own frame (see
    :func:`face_frames`); norms and inner products of gradients of the same
    face are frame independent.

    :return: (F, 2) array.
    """
    frames = face_frames(mesh.face_lengths)
    areas = mesh.face_areas
    corner_values = np.asarray(values, dtype=float)[mesh.faces]
    gradient = np.zeros((mesh.face_count, 2))
    for corner in range(3):
        edge = frames[:, (corner + 2) % 3] - frames[:, (corner + 1) % 3]
        rotated = np.stack([-edge[:, 1], edge[:, 0]], axis=1)
        gradient += corner_values[:, corner, None] * rotated
    return gradient / (2.0 * areas[:, None])


def vertex_gradient_sq(mesh: TriangleMesh, values):
    """Squared gradient norm per vertex: the lumped-area weighted average of
    the face values around the vertex."""
    squared = (face_gradients(mesh, values) ** 2).sum(axis=1)
    weighted = np.bincount(
        mesh.faces.ravel(), weights=np.repeat(squared * mesh.face_areas / 3.0, 3),
        minlength=mesh.vertex_count)
    return weighted / lumped_vertex_areas(mesh)


def build_flat_torus(nx: int, ny: int, Lx: float, Ly: float) -> TriangleMesh:
    """Periodic ``nx`` by ``ny`` grid on the flat torus ``[0, Lx) x [0, Ly)``,
    each cell cut into two triangles along its rising diagonal.

    Vertex ``(i, j)`` has index ``i + nx * j``.
    """
    if int(nx) != nx or int(ny) != ny or nx < 3 or ny < 3:
        raise ValidationError(
            "flat torus needs integer nx, ny >= 3", module="surface")
    if not (Lx > 0 and Ly > 0):
        raise ValidationError(
            "flat torus periods must be positive", module="surface")
    nx, ny = int(nx), int(ny)
    dx, dy = Lx / nx, Ly / ny
    diagonal = math.hypot(dx, dy)

    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    i, j = i.ravel(), j.ravel()
    v00 = i + nx * j
    v10 = (i + 1) % nx + nx * j
    v11 = (i + 1) % nx + nx * ((j + 1) % ny)
    v01 = i + nx * ((j + 1) % ny)

    faces = np.concatenate([
        np.stack([v00, v10, v11], axis=1),
        np.stack([v00, v11, v01], axis=1)])
    cells = nx * ny
    face_lengths = np.concatenate([
        np.tile([dy, diagonal, dx], (cells, 1)),
        np.tile([dx, dy, diagonal], (cells, 1))])
    chart = np.stack([i * dx, j * dy], axis=1).astype(float)

    logger.debug("Built flat torus %dx%d with periods (%s, %s)",
                 nx, ny, Lx, Ly)
    return TriangleMesh.from_face_lengths(
        nx * ny, faces, face_lengths, chart=chart, chart_periods=(Lx, Ly),
        name="flat-torus-{0}x{1}".format(nx, ny))


def _subdivide(positions, faces, midpoint):
    """One midpoint subdivision step, each face split into four."""
    edges, face_edges = _edge_table(faces)
    midpoints = midpoint(positions[edges[:, 0]], positions[edges[:, 1]])
    m = positions.shape[0] + face_edges
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    new_faces = np.concatenate([
        np.stack([a, m[:, 2], m[:, 1]], axis=1),
        np.stack([b, m[:, 0], m[:, 2]], axis=1),
        np.stack([c, m[:, 1], m[:, 0]], axis=1),
        np.stack([m[:, 0], m[:, 1], m[:, 2]], axis=1)])
    return np.concatenate([positions, midpoints]), new_faces, edges


def _sphere_midpoint(p, q):
    s = p + q
    return s / np.linalg.norm(s, axis=1)[:, None]


_ICOSAHEDRON_FACES = np.array([
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)])


def build_icosphere(subdivisions: int) -> TriangleMesh:
    """Subdivided icosahedron on the unit sphere; lengths are chords."""
    if int(subdivisions) != subdivisions or subdivisions < 0:
        raise ValidationError(
            "subdivisions must be an integer >= 0", module="surface")
    t = (1.0 + math.sqrt(5.0)) / 2.0
    positions = np.array([
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)], dtype=float)
    positions /= np.linalg.norm(positions, axis=1)[:, None]
    faces = _ICOSAHEDRON_FACES.copy()

    # outward orientation
    p = positions[faces]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    inward = (normals * p.sum(axis=1)).sum(axis=1) < 0
    faces[inward] = faces[inward][:, [0, 2, 1]]

    for _ in range(int(subdivisions)):
        positions, faces, _ = _subdivide(positions, faces, _sphere_midpoint)

    logger.debug("Built icosphere with %d subdivisions", subdivisions)
    return TriangleMesh.from_positions(
        positions, faces, name="icosphere-{0}".format(subdivisions))


def _minkowski(p, q):
    return p[..., 0] * q[..., 0] + p[..., 1] * q[..., 1] - p[..., 2] * q[..., 2]


def _hyperboloid_midpoint(p, q):
    s = p + q
    return s / np.sqrt(-_minkowski(s, s))[:, None]


def _hyperbolic_distance(p, q):
    d = p - q
    return 2.0 * np.arcsinh(0.5 * np.sqrt(np.maximum(_minkowski(d, d), 0.0)))


# Side s runs from corner s to corner s + 1. Paired sides are glued with
# reversed direction (word a b a^-1 b^-1 c d c^-1 d^-1).
_OCTAGON_SIDE_PAIRS = ((0, 2), (1, 3), (4, 6), (5, 7))


def build_hyperbolic_genus2(refinement: int) -> TriangleMesh:
    """Closed hyperbolic genus-2 surface from the regular octagon with
    interior angles ``pi / 4``.

    The octagon is fanned from its center, refined by geodesic midpoint
    subdivision on the hyperboloid, and its sides are glued pairwise so that
    all eight corners become one vertex. Edge lengths are hyperbolic
    distances; the mesh carries no embedding.

    :param refinement: Subdivision levels on top of
        ``GENUS2_BASE_SUBDIVISIONS``.
    """
    if int(refinement) != refinement or refinement < 0:
        raise ValidationError(
            "refinement must be an integer >= 0", module="surface")
    sides = 8
    cosh_radius = (1.0 / math.tan(math.pi / sides)) ** 2
    radius = math.acosh(cosh_radius)
    theta = TWO_PI * np.arange(sides) / sides
    corners = np.stack([
        math.sinh(radius) * np.cos(theta),
        math.sinh(radius) * np.sin(theta),
        np.full(sides, cosh_radius)], axis=1)
    positions = np.concatenate([[[0.0, 0.0, 1.0]], corners])
    faces = np.array(
        [(0, 1 + s, 1 + (s + 1) % sides) for s in range(sides)])

    # side_param[v, s] is the position of v along side s, NaN off the side
    side_param = np.full((sides + 1, sides), np.nan)
    for s in range(sides):
        side_param[1 + s, s] = 0.0
        side_param[1 + (s + 1) % sides, s] = 1.0

    for _ in range(GENUS2_BASE_SUBDIVISIONS + int(refinement)):
        positions, faces, edges = _subdivide(
            positions, faces, _hyperboloid_midpoint)
        side_param = np.concatenate([
            side_param,
            0.5 * (side_param[edges[:, 0]] + side_param[edges[:, 1]])])

    lookup = {}
    for s in range(sides):
        for vertex in np.nonzero(~np.isnan(side_param[:, s]))[0]:
            lookup[(s, float(side_param[vertex, s]))] = int(vertex)
    glue_rows, glue_cols = [], []
    for first, second in _OCTAGON_SIDE_PAIRS:
        for vertex in np.nonzero(~np.isnan(side_param[:, first]))[0]:
            t = float(side_param[vertex, first])
            glue_rows.append(int(vertex))
            glue_cols.append(lookup[(second, 1.0 - t)])
    count = positions.shape[0]
    glue = sparse.coo_matrix(
        (np.ones(len(glue_rows)), (glue_rows, glue_cols)),
        shape=(count, count))
    _, labels = csgraph.connected_components(glue, directed=False)

    # number the glued vertices by their smallest original index
    representative = np.full(labels.max() + 1, count)
    np.minimum.at(representative, labels, np.arange(count))
    rank = np.empty_like(representative)
    rank[np.argsort(representative, kind="stable")] = np.arange(
        representative.shape[0])
    new_index = rank[labels]

    face_positions = positions[faces]
    face_lengths = np.stack([
        _hyperbolic_distance(face_positions[:, 1], face_positions[:, 2]),
        _hyperbolic_distance(face_positions[:, 2], face_positions[:, 0]),
        _hyperbolic_distance(face_positions[:, 0], face_positions[:, 1])],
        axis=1)

    logger.debug("Built genus-2 surface at refinement %d (%d faces)",
                 refinement, faces.shape[0])
    return TriangleMesh.from_face_lengths(
        representative.shape[0], new_index[faces], face_lengths,
        name="hyperbolic-genus2-{0}".format(refinement))


def _content_lines(handle):
    for number, raw in enumerate(handle, start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line.split()


def _parse_ints(tokens, count, number):
    try:
        values = [int(token) for token in tokens]
    except ValueError:
        raise MeshParseError("expected integers, got {0}".format(
            " ".join(tokens)), line=number)
    if len(values) != count:
        raise MeshParseError("expected {0} integers, got {1}".format(
            count, len(values)), line=number)
    return values


def _parse_floats(tokens, count, number):
    try:
        values = [float(token) for token in tokens]
    except ValueError:
        raise MeshParseError("expected numbers, got {0}".format(
            " ".join(tokens)), line=number)
    if len(values) != count:
        raise MeshParseError("expected {0} numbers, got {1}".format(
            count, len(values)), line=number)
    return values


def _next_line(lines, what):
    try:
        return next(lines)
    except StopIteration:
        raise MeshParseError("unexpected end of file while reading " + what)


def _read_off(lines, name):
    number, tokens = _next_line(lines, "counts")
    vertex_count, face_count, _ = _parse_ints(tokens[:3], 3, number)
    positions = []
    for _ in range(vertex_count):
        number, tokens = _next_line(lines, "vertices")
        positions.append(_parse_floats(tokens[:3], 3, number))
    faces = []
    for _ in range(face_count):
        number, tokens = _next_line(lines, "faces")
        values = _parse_ints(tokens, len(tokens), number)
        if values[0] != 3 or len(values) != 4:
            raise MeshParseError("only triangles are supported", line=number)
        faces.append(values[1:])
    return TriangleMesh.from_positions(
        np.array(positions, dtype=float).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3), name=name)


def _read_ioff(lines, name):
    number, tokens = _next_line(lines, "counts")
    vertex_count, face_count, edge_count = _parse_ints(tokens, 3, number)
    faces = []
    for _ in range(face_count):
        number, tokens = _next_line(lines, "faces")
        face = _parse_ints(tokens, 3, number)
        if min(face) < 0 or max(face) >= vertex_count:
            raise MeshParseError("vertex index out of range", line=number)
        faces.append(face)
    faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
    lengths = {}
    for _ in range(edge_count):
        number, tokens = _next_line(lines, "edges")
        if len(tokens) != 3:
            raise MeshParseError("expected 'i j length'", line=number)
        i, j = _parse_ints(tokens[:2], 2, number)
        (length,) = _parse_floats(tokens[2:], 1, number)
        key = (min(i, j), max(i, j))
        if key in lengths:
            raise MeshParseError(
                "duplicate edge {0}".format(key), line=number)
        lengths[key] = length
    edges, _ = _edge_table(faces)
    edge_lengths = np.empty(edges.shape[0])
    for index, (i, j) in enumerate(edges):
        key = (int(i), int(j))
        if key not in lengths:
            raise MeshParseError("no length given for edge {0}".format(key))
        edge_lengths[index] = lengths.pop(key)
    if lengths:
        raise MeshParseError("length given for edge {0} which no face "
                             "uses".format(sorted(lengths)[0]))
    return TriangleMesh(vertex_count, faces, edges, edge_lengths, name=name)


def load_mesh(path) -> TriangleMesh:
    """Reads an OFF (embedded) or IOFF (intrinsic) triangle mesh and
    validates it.

    IOFF grammar, whitespace separated, ``#`` starts a comment::

        IOFF
        V F E
        i j k          (F face lines, counterclockwise)
        i j length     (E edge lines, one per undirected edge)
    """
    name = str(path)
    with open(path, "r", encoding="utf-8") as handle:
        lines = _content_lines(handle)
        number, tokens = _next_line(lines, "header")
        header = tokens[0].upper()
        if header == IOFF_HEADER:
            mesh = _read_ioff(lines, name)
        elif header == OFF_HEADER:
            if len(tokens) > 1:
                raise MeshParseError(
                    "counts must be on their own line", line=number)
            mesh = _read_off(lines, name)
        else:
            raise MeshParseError(
                "unknown header {0!r}".format(tokens[0]), line=number)
    logger.info("Loaded %s", mesh)
    return mesh


def save_mesh(mesh: TriangleMesh, path):
    """Writes ``mesh`` as OFF when ``path`` ends in ``.off`` (requires vertex
    positions), as IOFF otherwise. Lengths are written with ``repr`` so they
    read back bit for bit."""
    path = str(path)
    with open(path, "w", encoding="utf-8") as handle:
        if path.lower().endswith(".off"):
            if mesh.vertex_positions is None:
                raise ValidationError(
                    "OFF output needs vertex positions; use IOFF for "
                    "intrinsic meshes", module="surface")
            handle.write("{0}\n{1} {2} {3}\n".format(
                OFF_HEADER, mesh.vertex_count, mesh.face_count,
                mesh.edge_count))
            for position in mesh.vertex_positions:
                handle.write(" ".join(repr(float(x)) for x in position) + "\n")
            for face in mesh.faces:
                handle.write("3 {0} {1} {2}\n".format(*face))
        else:
            handle.write("{0}\n{1} {2} {3}\n".format(
                IOFF_HEADER, mesh.vertex_count, mesh.face_count,
                mesh.edge_count))
            for face in mesh.faces:
                handle.write("{0} {1} {2}\n".format(*face))
            for (i, j), length in zip(mesh.edges, mesh.edge_lengths):
                handle.write("{0} {1} {2!r}\n".format(i, j, float(length)))


SURFACE_BUILDERS = {
    "flat-torus": build_flat_torus,
    "icosphere": build_icosphere,
    "genus2": build_hyperbolic_genus2,
}


def describe_mesh(mesh: TriangleMesh,
                  curvature: Optional[CurvatureField] = None) -> Dict:
    """Summary used by reports: counts, area, curvature extrema and the
    Gauss-Bonnet error."""
    if curvature is None:
        curvature = discrete_curvature(mesh)
    return {
        "name": mesh.name,
        "vertex_count": mesh.vertex_count,
        "edge_count": mesh.edge_count,
        "face_count": mesh.face_count,
        "euler_characteristic": mesh.euler_characteristic,
        "genus": mesh.genus,
        "area": mesh.total_area,
        "total_curvature": curvature.total_curvature,
        "gauss_bonnet_error": gauss_bonnet_error(mesh, curvature),
        "max_curvature": float(curvature.pointwise_curvature.max()),
        "min_curvature": float(curvature.pointwise_curvature.min()),
    }


def interpolate_chart(mesh: TriangleMesh, a, b, t):
    """Chart coordinates of points ``(1 - t) * a + t * b`` on edges, unwrapping
    across the periodic seam. Returns None when the mesh has no chart."""
    if mesh.chart is None:
        return None
    periods = np.asarray(mesh.chart_periods)
    start = mesh.chart[a]
    delta = mesh.chart[b] - start
    delta -= periods * np.round(delta / periods)
    return np.mod(start + np.asarray(t)[:, None] * delta, periods)
