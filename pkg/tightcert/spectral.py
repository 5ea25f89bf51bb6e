"""Cotangent Laplace-Beltrami operator and its lowest eigenpairs.

The stiffness matrix is positive semidefinite (``Delta = -div grad``), so
every returned eigenvalue is nonnegative and the constant functions span the
kernel on a connected mesh.
"""
import logging
import warnings
from typing import Dict, List

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import lobpcg

from tightcert.configuration import get_configuration
from tightcert.errors import (
    ConvergenceError, DegenerateTriangleError, ValidationError)
from tightcert.surface import ScalarField, TriangleMesh

logger = logging.getLogger(__name__)


DEGENERATE_AREA_RATIO = 1e-14

#: Below this many free vertices per block vector the block iteration is
#: replaced by a dense generalized eigensolve.
DENSE_FALLBACK_FACTOR = 5

PRECONDITIONER_SHIFT_RATIO = 1e-3


class OperatorPair(object):

    def __init__(self, mesh: TriangleMesh, stiffness, mass, lumped_mass):
        """
        :param mesh: Mesh the operators were assembled on.
        :param stiffness: Sparse symmetric positive semidefinite S.
        :param mass: Sparse consistent mass matrix M.
        :param lumped_mass: Diagonal of the lumped mass matrix M_L.
        """
        self.mesh = mesh
        self.stiffness = stiffness
        self.mass = mass
        self.lumped_mass = lumped_mass

    def __str__(self):
        return "<tightcert.OperatorPair> {0} vertices {1} nonzeros".format(
            self.stiffness.shape[0], self.stiffness.nnz)

    @property
    def size(self) -> int:
        return self.stiffness.shape[0]

    def mass_norm(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return float(np.sqrt(values @ (self.mass @ values)))

    def apply_laplacian(self, values):
        """Pointwise Laplacian ``M_L^-1 S values``."""
        return (self.stiffness @ np.asarray(values, dtype=float)) /\
            self.lumped_mass


class EigenPair(object):

    def __init__(self, lambda_: float, f: ScalarField, residual: float,
                 index: int = 0, cluster: int = 0):
        self.lambda_ = float(lambda_)
        self.f = f
        self.residual = float(residual)
        self.index = index
        self.cluster = cluster

    def __str__(self):
        return "<tightcert.EigenPair> #{0} lambda={1!r} residual={2:.3e}".format(
            self.index, self.lambda_, self.residual)

    def to_json_dict(self) -> Dict:
        return {
            "lambda": self.lambda_,
            "residual": self.residual,
            "values": [float(x) for x in self.f.values],
        }


def assemble(mesh: TriangleMesh) -> OperatorPair:
    """Builds the cotangent stiffness matrix, the consistent piecewise linear
    mass matrix and its lumped diagonal.

    :raises DegenerateTriangleError: A face area is below ``1e-14`` times the
        mean face area.
    """
    areas = mesh.face_areas
    threshold = DEGENERATE_AREA_RATIO * areas.mean()
    if np.any(areas < threshold):
        face = int(np.nonzero(areas < threshold)[0][0])
        raise DegenerateTriangleError(
            "face {0} {1} is degenerate (area {2!r})".format(
                face, tuple(int(v) for v in mesh.faces[face]),
                float(areas[face])), face=face)

    lengths_sq = mesh.face_lengths ** 2
    n = mesh.vertex_count
    rows, cols, data = [], [], []
    for corner in range(3):
        cotangent = (lengths_sq[:, (corner + 1) % 3] +
                     lengths_sq[:, (corner + 2) % 3] -
                     lengths_sq[:, corner]) / (4.0 * areas)
        half = 0.5 * cotangent
        u = mesh.faces[:, (corner + 1) % 3]
        w = mesh.faces[:, (corner + 2) % 3]
        rows.extend([u, w, u, w])
        cols.extend([w, u, u, w])
        data.extend([-half, -half, half, half])
    stiffness = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()

    rows, cols, data = [], [], []
    for a in range(3):
        for b in range(3):
            rows.append(mesh.faces[:, a])
            cols.append(mesh.faces[:, b])
            data.append(areas * (2.0 if a == b else 1.0) / 12.0)
    mass = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()

    lumped = np.bincount(
        mesh.faces.ravel(), weights=np.repeat(areas / 3.0, 3), minlength=n)

    logger.debug("Assembled operators on %s", mesh)
    return OperatorPair(mesh, stiffness, mass, lumped)


def rayleigh_quotient(ops: OperatorPair, f) -> float:
    """``f.S f / f.M f``."""
    values = f.values if isinstance(f, ScalarField) else\
        np.asarray(f, dtype=float)
    denominator = float(values @ (ops.mass @ values))
    if denominator <= 0:
        raise ValidationError(
            "Rayleigh quotient of the zero vector", module="spectral")
    return float(values @ (ops.stiffness @ values)) / denominator


def residual_norm(ops: OperatorPair, lambda_: float, f) -> float:
    """``||S f - lambda M f||_2 / ||f||_M``."""
    values = f.values if isinstance(f, ScalarField) else\
        np.asarray(f, dtype=float)
    norm = ops.mass_norm(values)
    if norm <= 0:
        raise ValidationError("residual of the zero vector", module="spectral")
    return float(np.linalg.norm(
        ops.stiffness @ values - lambda_ * (ops.mass @ values))) / norm


def _normalize(ops, vector):
    vector = vector / ops.mass_norm(vector)
    # deterministic sign: largest entry positive
    if vector[int(np.argmax(np.abs(vector)))] < 0:
        vector = -vector
    return vector


def _dense_lowest(ops, count):
    values, vectors = linalg.eigh(
        ops.stiffness.toarray(), ops.mass.toarray(),
        subset_by_index=[0, count - 1])
    return values, vectors


def _block_lowest(ops, count, configuration):
    n = ops.size
    constant = np.ones((n, 1))
    block = count - 1 + int(configuration.block_padding)
    rng = np.random.default_rng(configuration.seed)
    start = rng.standard_normal((n, block))

    diagonal_s = ops.stiffness.diagonal()
    diagonal_m = ops.mass.diagonal()
    shift = PRECONDITIONER_SHIFT_RATIO * diagonal_s.sum() / diagonal_m.sum()
    preconditioner = sparse.diags(1.0 / (diagonal_s + shift * diagonal_m))

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        values, vectors = lobpcg(
            ops.stiffness, start, B=ops.mass, M=preconditioner, Y=constant,
            tol=configuration.tol, maxiter=int(configuration.max_iterations),
            largest=False)
    for warning in caught:
        logger.warning("lobpcg: %s", warning.message)

    order = np.argsort(values, kind="stable")[:count - 1]
    values = np.concatenate([[0.0], values[order]])
    vectors = np.concatenate([constant, vectors[:, order]], axis=1)
    return values, vectors


def solve_lowest(ops: OperatorPair, k: int, configuration=None,
                 **kwargs) -> List[EigenPair]:
    """Returns the ``k`` smallest eigenpairs of ``S f = lambda M f`` in
    nondecreasing order, M-orthonormal, the constant mode first.

    The constant mode is deflated from a blocked LOBPCG iteration of block
    size ``k + block_padding`` with a Jacobi preconditioner on
    ``S + sigma M``. Meshes too small for the block iteration are solved
    densely.

    :param ops: Assembled operators.
    :param k: Number of eigenpairs, ``1 <= k < vertex_count / 4``.
    :param configuration: An optional Configuration instance (tol, seed,
        max_iterations, block_padding, cluster_rtol).
    :param kwargs: Optional configuration parameters.
    :raises ConvergenceError: A returned pair misses the residual tolerance;
        the error carries all residuals.
    """
    configuration = get_configuration(configuration, kwargs)
    n = ops.size
    k = int(k)
    if k < 1:
        raise ValidationError("k must be >= 1", module="spectral")
    if 4 * k >= n:
        raise ValidationError(
            "k={0} needs more than {1} vertices".format(k, 4 * k),
            module="spectral")

    block = k - 1 + int(configuration.block_padding)
    if k == 1:
        values, vectors = np.zeros(1), np.ones((n, 1))
    elif n - 1 < DENSE_FALLBACK_FACTOR * block:
        logger.debug("Dense eigensolve for %d vertices", n)
        values, vectors = _dense_lowest(ops, k)
    else:
        try:
            values, vectors = _block_lowest(ops, k, configuration)
        except (np.linalg.LinAlgError, linalg.LinAlgError) as e:
            raise ConvergenceError(
                "block eigensolver failed: {0}".format(e))

    eigenpairs = []
    for index in range(k):
        vector = _normalize(ops, vectors[:, index])
        lambda_ = float(values[index])
        residual = residual_norm(ops, lambda_, vector)
        eigenpairs.append(EigenPair(
            lambda_, ScalarField(ops.mesh, vector), residual, index=index))

    failed = [pair for pair in eigenpairs
              if pair.residual > configuration.tol * max(1.0, pair.lambda_)]
    if failed:
        raise ConvergenceError(
            "{0} of {1} eigenpairs above tolerance {2} after {3} "
            "iterations".format(len(failed), k, configuration.tol,
                                configuration.max_iterations),
            residuals=[pair.residual for pair in eigenpairs])

    for cluster, members in enumerate(
            multiplicity_clusters(eigenpairs, configuration.cluster_rtol)):
        for index in members:
            eigenpairs[index].cluster = cluster
    logger.info("Solved %d eigenpairs: %s", k,
                ", ".join("{0:.6g}".format(p.lambda_) for p in eigenpairs))
    return eigenpairs


def multiplicity_clusters(eigenpairs, rtol: float = 1e-3) -> List[List[int]]:
    """Groups consecutive eigenpairs whose eigenvalues differ by less than
    ``rtol`` relative.

    :return: Lists of positions into ``eigenpairs``.
    """
    clusters = []
    previous = None
    for index, pair in enumerate(eigenpairs):
        lambda_ = pair.lambda_
        if previous is not None and\
                abs(lambda_ - previous) <= rtol * max(abs(lambda_), 1e-12):
            clusters[-1].append(index)
        else:
            clusters.append([index])
        previous = lambda_
    return clusters


def scaled(mesh: TriangleMesh, factor: float) -> TriangleMesh:
    """Copy of ``mesh`` with every length multiplied by ``factor``."""
    if not factor > 0:
        raise ValidationError("scale factor must be positive",
                              module="spectral")
    positions = None if mesh.vertex_positions is None else\
        mesh.vertex_positions * factor
    chart = None if mesh.chart is None else mesh.chart * factor
    periods = None if mesh.chart_periods is None else\
        tuple(p * factor for p in mesh.chart_periods)
    return TriangleMesh(
        mesh.vertex_count, mesh.faces, mesh.edges, mesh.edge_lengths * factor,
        vertex_positions=positions, chart=chart, chart_periods=periods,
        name=mesh.name, validate=False)
