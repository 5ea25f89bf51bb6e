"""Nodal sets and nodal domains of vertex-sampled functions.

Sign-mixed triangles are cut along the linearly interpolated zero segment,
which gives a refined mesh on which every face has a sign and the zero set
is a union of edges. Domains are the connected components of same-sign
faces; their Euler characteristic is exact bookkeeping on that complex.
"""
import logging
import math
from collections import namedtuple
from typing import Dict, List

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from tightcert.configuration import get_configuration
from tightcert.errors import SingularNodalSetError, TrivialFieldError
from tightcert.spectral import multiplicity_clusters
from tightcert.surface import (
    ScalarField, TriangleMesh, discrete_curvature, face_frames,
    face_gradients, interpolate_chart)

logger = logging.getLogger(__name__)

__all__ = [
    "ScalarField", "NodalDomain", "NodalDecomposition", "decompose",
    "count_domains", "is_disc", "has_disc_domain", "courant_check",
    "domain_gauss_bonnet", "disc_domain_inequality",
    "dividing_set_geometry",
]


SnappedVertex = namedtuple("SnappedVertex", ["vertex", "neighbor", "sign"])

GaussBonnetBalance = namedtuple(
    "GaussBonnetBalance",
    ["curvature_integral", "turning_integral", "defect"])

DiscInequality = namedtuple(
    "DiscInequality",
    ["domain", "lhs", "rhs", "margin", "holds", "within_slack"])

CourantEntry = namedtuple(
    "CourantEntry",
    ["position", "lambda_", "domain_count", "bound", "satisfied"])


class NodalDomain(object):

    def __init__(self, index, sign, faces, euler_characteristic,
                 boundary_components, area, curvature_integral,
                 curvature_positive_part_integral, vertices):
        self.index = index
        self.sign = sign
        self.faces = faces
        self.euler_characteristic = euler_characteristic
        self.boundary_components = boundary_components
        self.area = area
        self.curvature_integral = curvature_integral
        self.curvature_positive_part_integral =\
            curvature_positive_part_integral
        self.vertices = vertices

    def __str__(self):
        return "<tightcert.NodalDomain> #{0} sign={1:+d} chi={2} "\
            "boundaries={3} area={4:.6g}".format(
                self.index, self.sign, self.euler_characteristic,
                self.boundary_components, self.area)

    @property
    def is_disc(self) -> bool:
        return self.euler_characteristic == 1

    @property
    def is_annulus(self) -> bool:
        return self.euler_characteristic == 0 and\
            self.boundary_components == 2

    def to_json_dict(self) -> Dict:
        return {
            "index": self.index,
            "sign": self.sign,
            "euler_characteristic": self.euler_characteristic,
            "boundary_components": self.boundary_components,
            "area": self.area,
            "is_disc": self.is_disc,
            "curvature_positive_part_integral":
                self.curvature_positive_part_integral,
        }


class NodalDecomposition(object):

    def __init__(self, field, values, refined_mesh, face_parent, face_sign,
                 face_domain, zero_edges, zero_params, domains, dividing_set,
                 snapped, zero_tol, refined_curvature):
        """
        :param field: The decomposed field.
        :param values: Field values after snapping.
        :param refined_mesh: Zero-refined mesh; its first vertices are the
            original ones, followed by one zero point per crossing edge.
        :param face_parent: Original face of every refined face.
        :param face_sign: Sign of every refined face.
        :param face_domain: Domain index of every refined face.
        :param zero_edges: Original edge carrying each zero point.
        :param zero_params: Position of each zero point along its edge,
            from the lower to the higher vertex index.
        :param domains: The NodalDomain list.
        :param dividing_set: Closed polylines as cyclic arrays of refined
            vertex indices.
        :param snapped: SnappedVertex records.
        :param zero_tol: Relative snapping threshold used.
        :param refined_curvature: CurvatureField of the refined mesh.
        """
        self.field = field
        self.values = values
        self.refined_mesh = refined_mesh
        self.face_parent = face_parent
        self.face_sign = face_sign
        self.face_domain = face_domain
        self.zero_edges = zero_edges
        self.zero_params = zero_params
        self.domains = domains
        self.dividing_set = dividing_set
        self.snapped = snapped
        self.zero_tol = zero_tol
        self.refined_curvature = refined_curvature

    def __str__(self):
        return "<tightcert.NodalDecomposition> {0} domains {1} curves".format(
            len(self.domains), len(self.dividing_set))

    @property
    def mesh(self) -> TriangleMesh:
        return self.field.mesh

    @property
    def original_vertex_count(self) -> int:
        return self.field.mesh.vertex_count

    def to_json_dict(self) -> Dict:
        return {
            "zero_tol": self.zero_tol,
            "domains": [domain.to_json_dict() for domain in self.domains],
            "dividing_set": [[int(v) for v in cycle]
                             for cycle in self.dividing_set],
            "snapped_vertices": [
                {"vertex": s.vertex, "neighbor": s.neighbor, "sign": s.sign}
                for s in self.snapped],
        }


def _snap(mesh, values, threshold):
    small = np.abs(values) < threshold
    if not small.any():
        return values, []
    plateau = small[mesh.faces].all(axis=1)
    if plateau.any():
        face = int(np.nonzero(plateau)[0][0])
        raise SingularNodalSetError(
            "field vanishes on face {0}".format(face), face=face)

    adjacency = mesh.vertex_adjacency()
    snapped_values = values.copy()
    snapped = []
    for vertex in np.nonzero(small)[0]:
        neighbors = np.sort(
            adjacency.indices[adjacency.indptr[vertex]:
                              adjacency.indptr[vertex + 1]])
        neighbor = int(neighbors[np.argmax(np.abs(values[neighbors]))])
        if small[neighbor]:
            raise SingularNodalSetError(
                "field vanishes around vertex {0}".format(vertex),
                vertex=int(vertex))
        sign = 1 if values[neighbor] > 0 else -1
        snapped_values[vertex] = sign * threshold
        snapped.append(SnappedVertex(int(vertex), neighbor, sign))
    logger.warning("Snapped %d vertices with |f| < %g", len(snapped),
                   threshold)
    return snapped_values, snapped


def _lengths_from_points(x0, x1, x2):
    return np.stack([
        np.linalg.norm(x1 - x2, axis=1),
        np.linalg.norm(x2 - x0, axis=1),
        np.linalg.norm(x0 - x1, axis=1)], axis=1)


def _refine(mesh, values):
    """Cuts sign-mixed faces along the zero segment.

    :return: (refined mesh, face_parent, face_sign, crossing edges,
        crossing parameters)
    """
    signs = np.where(values > 0, 1, -1)
    first, second = mesh.edges[:, 0], mesh.edges[:, 1]
    crossing = np.nonzero(signs[first] != signs[second])[0]
    params = values[first[crossing]] /\
        (values[first[crossing]] - values[second[crossing]])
    zero_id = np.full(mesh.edge_count, -1, dtype=np.int64)
    zero_id[crossing] = mesh.vertex_count + np.arange(crossing.shape[0])
    edge_param = np.full(mesh.edge_count, np.nan)
    edge_param[crossing] = params

    face_signs = signs[mesh.faces]
    mixed = ~((face_signs[:, 0] == face_signs[:, 1]) &
              (face_signs[:, 1] == face_signs[:, 2]))
    plain = np.nonzero(~mixed)[0]
    cut = np.nonzero(mixed)[0]

    s = face_signs[cut]
    lone = np.select(
        [(s[:, 0] != s[:, 1]) & (s[:, 0] != s[:, 2]),
         (s[:, 1] != s[:, 0]) & (s[:, 1] != s[:, 2])], [0, 1], 2)
    rows = np.arange(cut.shape[0])
    c0, c1, c2 = lone, (lone + 1) % 3, (lone + 2) % 3
    faces = mesh.faces[cut]
    p, q, r = faces[rows, c0], faces[rows, c1], faces[rows, c2]
    frames = face_frames(mesh.face_lengths[cut])
    fp, fq, fr = frames[rows, c0], frames[rows, c1], frames[rows, c2]

    edge_pq = mesh.face_edges[cut][rows, c2]
    edge_pr = mesh.face_edges[cut][rows, c1]
    z_pq, z_pr = zero_id[edge_pq], zero_id[edge_pr]
    s_pq = np.where(p == first[edge_pq], edge_param[edge_pq],
                    1.0 - edge_param[edge_pq])
    s_pr = np.where(p == first[edge_pr], edge_param[edge_pr],
                    1.0 - edge_param[edge_pr])
    x_pq = fp + s_pq[:, None] * (fq - fp)
    x_pr = fp + s_pr[:, None] * (fr - fp)

    # the quadrilateral (z_pq, q, r, z_pr) is cut along its shorter diagonal
    along_r = np.linalg.norm(x_pq - fr, axis=1) <=\
        np.linalg.norm(fq - x_pr, axis=1)
    pick = along_r[:, None]
    quad_a = np.where(pick, np.stack([z_pq, q, r], 1),
                      np.stack([z_pq, q, z_pr], 1))
    quad_b = np.where(pick, np.stack([z_pq, r, z_pr], 1),
                      np.stack([q, r, z_pr], 1))
    pick3 = along_r[:, None, None]
    points_a = np.where(pick3, np.stack([x_pq, fq, fr], 1),
                        np.stack([x_pq, fq, x_pr], 1))
    points_b = np.where(pick3, np.stack([x_pq, fr, x_pr], 1),
                        np.stack([fq, fr, x_pr], 1))

    refined_faces = np.concatenate([
        mesh.faces[plain], np.stack([p, z_pq, z_pr], 1), quad_a, quad_b])
    refined_lengths = np.concatenate([
        mesh.face_lengths[plain],
        _lengths_from_points(fp, x_pq, x_pr),
        _lengths_from_points(points_a[:, 0], points_a[:, 1], points_a[:, 2]),
        _lengths_from_points(points_b[:, 0], points_b[:, 1], points_b[:, 2])])
    lone_sign = s[rows, c0]
    face_parent = np.concatenate([plain, cut, cut, cut])
    face_sign = np.concatenate([
        face_signs[plain, 0], lone_sign, -lone_sign, -lone_sign])

    count = mesh.vertex_count + crossing.shape[0]
    a, b = first[crossing], second[crossing]
    positions = None
    if mesh.vertex_positions is not None:
        positions = np.concatenate([
            mesh.vertex_positions,
            (1.0 - params)[:, None] * mesh.vertex_positions[a] +
            params[:, None] * mesh.vertex_positions[b]])
    chart = None
    if mesh.chart is not None:
        chart = np.concatenate([
            mesh.chart, interpolate_chart(mesh, a, b, params)])

    refined = TriangleMesh.from_face_lengths(
        count, refined_faces, refined_lengths, vertex_positions=positions,
        chart=chart, chart_periods=mesh.chart_periods,
        name=mesh.name + "-zero-refined", validate=False)
    return refined, face_parent, face_sign, crossing, params


def _components(edges, count):
    graph = sparse.coo_matrix(
        (np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])),
        shape=(count, count))
    return csgraph.connected_components(graph, directed=False)


def _ordered_labels(labels):
    """Renumbers component labels by their smallest member."""
    first = np.full(labels.max() + 1, labels.shape[0])
    np.minimum.at(first, labels, np.arange(labels.shape[0]))
    rank = np.empty_like(first)
    rank[np.argsort(first, kind="stable")] = np.arange(first.shape[0])
    return rank[labels]


def _trace_cycles(zero_edges, start_index, count):
    degree = np.bincount(zero_edges.ravel(), minlength=count)
    bad = np.nonzero(degree[start_index:] != 2)[0]
    if bad.shape[0]:
        vertex = int(start_index + bad[0])
        raise SingularNodalSetError(
            "zero point {0} meets {1} zero segments".format(
                vertex, int(degree[vertex])), vertex=vertex)
    neighbors = {}
    for u, w in zero_edges:
        neighbors.setdefault(int(u), []).append(int(w))
        neighbors.setdefault(int(w), []).append(int(u))

    visited = np.zeros(count, dtype=bool)
    cycles = []
    for start in range(start_index, count):
        if visited[start]:
            continue
        cycle = [start]
        visited[start] = True
        previous, current = start, min(neighbors[start])
        while current != start:
            if visited[current]:
                raise SingularNodalSetError(
                    "zero polyline through {0} is not simple".format(current),
                    vertex=current)
            visited[current] = True
            cycle.append(current)
            a, b = neighbors[current]
            previous, current = current, (b if a == previous else a)
        cycles.append(np.array(cycle, dtype=np.int64))
    return cycles


def decompose(field: ScalarField, configuration=None,
              **kwargs) -> NodalDecomposition:
    """Splits the surface along the zero set of ``field``.

    Vertices with ``|f| < zero_tol * max|f|`` take the sign of their
    largest ``|f|`` neighbor (lowest index on ties) before the zero set is
    extracted; the choice is recorded in ``snapped``.

    :param field: Vertex-sampled function on a closed mesh.
    :param configuration: An optional Configuration instance (zero_tol).
    :param kwargs: Optional configuration parameters.
    :raises TrivialFieldError: The field is identically zero or constant.
    :raises SingularNodalSetError: The field vanishes on a whole face or the
        zero set is not a union of disjoint simple cycles.
    """
    configuration = get_configuration(configuration, kwargs)
    zero_tol = float(configuration.zero_tol)
    mesh = field.mesh
    values = np.array(field.values, dtype=float)
    scale = float(np.abs(values).max())
    if scale == 0.0 or np.all(np.abs(values) < zero_tol):
        raise TrivialFieldError("field is identically zero")
    if values.max() - values.min() <= zero_tol * scale:
        raise TrivialFieldError("field is constant")

    values, snapped = _snap(mesh, values, zero_tol * scale)
    refined, face_parent, face_sign, crossing, params = _refine(mesh, values)

    edge_faces = refined.edge_faces()
    zero_edge = refined.edges[:, 0] >= mesh.vertex_count
    left, right = edge_faces[zero_edge, 0], edge_faces[zero_edge, 1]
    if np.any(face_sign[left] == face_sign[right]):
        edge = int(np.nonzero(zero_edge)[0][
            np.nonzero(face_sign[left] == face_sign[right])[0][0]])
        raise SingularNodalSetError(
            "sign does not change across zero edge {0}".format(edge),
            edge=edge)

    _, labels = _components(edge_faces[~zero_edge], refined.face_count)
    face_domain = _ordered_labels(labels)

    curvature = discrete_curvature(refined)
    domains = []
    for index in range(face_domain.max() + 1):
        faces = np.nonzero(face_domain == index)[0]
        vertices = np.unique(refined.faces[faces])
        edges = np.unique(refined.face_edges[faces])
        boundary = edges[zero_edge[edges]]
        boundary_components = 0
        if boundary.shape[0]:
            ends, local = np.unique(refined.edges[boundary],
                                    return_inverse=True)
            boundary_components, _ = _components(
                np.asarray(local).reshape(-1, 2), ends.shape[0])
        interior = vertices[vertices < mesh.vertex_count]
        defect = curvature.vertex_defect[interior]
        domains.append(NodalDomain(
            index=index,
            sign=int(face_sign[faces[0]]),
            faces=faces,
            euler_characteristic=int(
                vertices.shape[0] - edges.shape[0] + faces.shape[0]),
            boundary_components=int(boundary_components),
            area=float(refined.face_areas[faces].sum()),
            curvature_integral=float(defect.sum()),
            curvature_positive_part_integral=float(
                np.maximum(defect, 0.0).sum()),
            vertices=vertices))

    dividing_set = _trace_cycles(
        refined.edges[zero_edge], mesh.vertex_count, refined.vertex_count)

    decomposition = NodalDecomposition(
        field=field, values=values, refined_mesh=refined,
        face_parent=face_parent, face_sign=face_sign,
        face_domain=face_domain, zero_edges=crossing, zero_params=params,
        domains=domains, dividing_set=dividing_set, snapped=snapped,
        zero_tol=zero_tol, refined_curvature=curvature)
    logger.info("Decomposed %s: %s", mesh.name, decomposition)
    for domain in domains:
        logger.debug("%s", domain)
    return decomposition


def count_domains(decomposition: NodalDecomposition) -> int:
    return len(decomposition.domains)


def is_disc(domain: NodalDomain) -> bool:
    return domain.is_disc


def has_disc_domain(decomposition: NodalDecomposition) -> bool:
    return any(domain.is_disc for domain in decomposition.domains)


class CourantReport(object):

    def __init__(self, entries: List[CourantEntry]):
        self.entries = entries

    @property
    def violations(self) -> List[CourantEntry]:
        return [entry for entry in self.entries if not entry.satisfied]

    @property
    def satisfied(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> Dict:
        return {
            "satisfied": self.satisfied,
            "entries": [dict(entry._asdict()) for entry in self.entries],
        }


def courant_check(eigenpairs, decompositions, cluster_rtol: float = 1e-3):
    """Checks that the eigenfunction at (1-based) position ``n`` has at most
    ``n`` nodal domains, ``n`` taken as the last position of its
    multiplicity cluster. The constant mode is skipped, as is any position
    whose decomposition is None.

    Violations are logged and reported, never raised.
    """
    upper = {}
    for members in multiplicity_clusters(eigenpairs, cluster_rtol):
        for position in members:
            upper[position] = members[-1] + 1
    entries = []
    for position, (pair, decomposition) in enumerate(
            zip(eigenpairs, decompositions)):
        if position == 0 or decomposition is None:
            continue
        count = count_domains(decomposition)
        bound = upper[position]
        entry = CourantEntry(position, pair.lambda_, count, bound,
                             count <= bound)
        if not entry.satisfied:
            logger.warning(
                "Eigenfunction %d (lambda=%.6g) has %d nodal domains, "
                "more than %d", position, pair.lambda_, count, bound)
        entries.append(entry)
    return CourantReport(entries)


def _domain_angle_sums(decomposition, faces):
    refined = decomposition.refined_mesh
    return np.bincount(
        refined.faces[faces].ravel(),
        weights=refined.corner_angles[faces].ravel(),
        minlength=refined.vertex_count)


def domain_gauss_bonnet(decomposition: NodalDecomposition,
                        domain: NodalDomain) -> GaussBonnetBalance:
    """Interior angle defects plus boundary turning angles minus
    ``2 pi chi`` of the domain."""
    angle_sums = _domain_angle_sums(decomposition, domain.faces)
    boundary = domain.vertices[
        domain.vertices >= decomposition.original_vertex_count]
    turning = float((math.pi - angle_sums[boundary]).sum())
    defect = domain.curvature_integral + turning -\
        2.0 * math.pi * domain.euler_characteristic
    return GaussBonnetBalance(domain.curvature_integral, turning, defect)


def disc_domain_inequality(decomposition: NodalDecomposition, lambda_: float,
                           configuration=None,
                           **kwargs) -> List[DiscInequality]:
    """For every disc domain compares ``4 pi - 2 int K+`` with
    ``lambda * area``. ``within_slack`` tolerates ``disc_slack * 4 pi`` of
    discretization error."""
    configuration = get_configuration(configuration, kwargs)
    slack = configuration.disc_slack * 4.0 * math.pi
    report = []
    for domain in decomposition.domains:
        if not domain.is_disc:
            continue
        lhs = 4.0 * math.pi - 2.0 * domain.curvature_positive_part_integral
        rhs = lambda_ * domain.area
        margin = rhs - lhs
        entry = DiscInequality(domain.index, lhs, rhs, margin,
                               margin >= 0, margin >= -slack)
        if not entry.within_slack:
            logger.warning(
                "Disc domain %d violates 4pi - 2int K+ <= lambda area: "
                "%.6g > %.6g", domain.index, lhs, rhs)
        report.append(entry)
    return report


class PolylineGeometry(object):

    def __init__(self, vertices, length, turning, dual_lengths,
                 log_norm_slopes=None):
        self.vertices = vertices
        self.length = length
        self.turning = turning
        self.dual_lengths = dual_lengths
        self.log_norm_slopes = log_norm_slopes

    @property
    def total_turning(self) -> float:
        return float(self.turning.sum())

    @property
    def curvature_samples(self):
        """Turning angle per unit length at every polyline vertex."""
        return self.turning / self.dual_lengths

    def to_json_dict(self) -> Dict:
        result = {
            "length": self.length,
            "total_turning": self.total_turning,
            "curvature_samples": [float(x) for x in self.curvature_samples],
        }
        if self.log_norm_slopes is not None:
            result["log_norm_slopes"] = [
                float(x) for x in self.log_norm_slopes]
        return result


def dividing_set_geometry(decomposition: NodalDecomposition, field=None,
                          form=None) -> List[PolylineGeometry]:
    """Length and discrete geodesic curvature of every dividing polyline.

    Curvature is the turning angle ``pi - (angles on the positive side)``
    per dual length. When ``form`` (a ContactFormData on the same mesh) is
    given, the normal derivative ``<grad ln ||alpha||, nu>`` with
    ``nu = grad f / |grad f|`` is sampled at the same points, averaged over
    the two original faces of the cut edge.
    """
    if field is None:
        field = decomposition.field
    refined = decomposition.refined_mesh
    positive = np.nonzero(decomposition.face_sign > 0)[0]
    positive_angles = _domain_angle_sums(decomposition, positive)
    edge_index = {(int(u), int(w)): index
                  for index, (u, w) in enumerate(refined.edges)}

    slopes = None
    if form is not None:
        mesh = field.mesh
        grad_f = face_gradients(mesh, field.values)
        grad_g = face_gradients(mesh, np.log(form.alpha_norm.values))
        norm_f = np.linalg.norm(grad_f, axis=1)
        face_slope = (grad_f * grad_g).sum(axis=1) / np.where(
            norm_f > 0, norm_f, 1.0)
        original_faces = mesh.edge_faces()[decomposition.zero_edges]
        slopes = face_slope[original_faces].mean(axis=1)

    base = decomposition.original_vertex_count
    geometry = []
    for cycle in decomposition.dividing_set:
        following = np.roll(cycle, -1)
        segments = np.array([
            refined.edge_lengths[edge_index[(min(u, w), max(u, w))]]
            for u, w in zip(cycle, following)])
        dual = 0.5 * (segments + np.roll(segments, 1))
        turning = math.pi - positive_angles[cycle]
        geometry.append(PolylineGeometry(
            cycle, float(segments.sum()), turning, dual,
            None if slopes is None else slopes[cycle - base]))
    return geometry
