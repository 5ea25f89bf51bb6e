"""Finite-difference checks of the Beltrami family on the flat 3-torus.

Fields are sampled at the vertices of a periodic ``n x n x n`` grid with
period ``L``; arrays are indexed ``[x, y, z]``. The torus is oriented by
``dy ^ dx ^ dz``: in that orientation ``*d`` is minus the Euclidean curl and
``alpha_n = cos(nz) dx + sin(nz) dy`` satisfies ``*d alpha_n = n alpha_n``.
"""
import json
import logging
import math
import struct
from collections import namedtuple
from typing import Dict, List, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from tightcert.configuration import get_configuration
from tightcert.contact import ContactFormData, lift_from_samples
from tightcert.errors import (
    DegenerateFieldError, NonManifoldSurfaceError, ValidationError)
from tightcert.surface import build_flat_torus

logger = logging.getLogger(__name__)


TWO_PI = 2.0 * math.pi

MIN_RESOLUTION = 8

DIRECTIONS = {"x": 0, "y": 1, "z": 2}

FIELD_MAGIC = b"TC3F"

# magic, n, L, component order, padding
FIELD_HEADER = struct.Struct("<4sId3sx")

#: A contact hamiltonian whose maximum is below this fraction of
#: ``max ||alpha||`` is treated as identically zero.
DEGENERATE_RATIO = 1e-12

SurfaceComponent = namedtuple(
    "SurfaceComponent",
    ["vertex_count", "edge_count", "face_count", "euler_characteristic"])


class Grid3Field(object):

    def __init__(self, n: int, L: float, components):
        """
        :param n: Grid points per axis.
        :param L: Period of every axis.
        :param components: (3, n, n, n) array of the components
            ``a_x, a_y, a_z``.
        """
        components = np.array(components, dtype=float)
        if components.shape != (3, n, n, n):
            raise ValidationError(
                "components must have shape (3, {0}, {0}, {0})".format(n),
                module="torus3")
        if not np.all(np.isfinite(components)):
            raise ValidationError("field has non-finite values",
                                  module="torus3")
        components.setflags(write=False)
        self.n = int(n)
        self.L = float(L)
        self.components = components

    def __str__(self):
        return "<tightcert.Grid3Field> n={0} L={1!r}".format(self.n, self.L)

    @property
    def spacing(self) -> float:
        return self.L / self.n

    def pointwise_norm(self):
        return np.sqrt((self.components ** 2).sum(axis=0))


def _check_resolution(n):
    if int(n) != n or n < MIN_RESOLUTION:
        raise ValidationError(
            "grid resolution must be an integer >= {0}".format(MIN_RESOLUTION),
            module="torus3")


def grid_coordinates(n: int, L: float = TWO_PI):
    return np.arange(n) * (L / n)


def sample_alpha_n(n_mode: int, n: int, L: float = TWO_PI) -> Grid3Field:
    """Samples ``cos(k z) dx + sin(k z) dy`` with ``k = 2 pi n_mode / L``."""
    if int(n_mode) != n_mode or n_mode == 0:
        raise ValidationError("n_mode must be a nonzero integer",
                              module="torus3")
    _check_resolution(n)
    k = TWO_PI * n_mode / L
    z = grid_coordinates(n, L)
    shape = (n, n, n)
    components = np.zeros((3,) + shape)
    components[0] = np.broadcast_to(np.cos(k * z), shape)
    components[1] = np.broadcast_to(np.sin(k * z), shape)
    return Grid3Field(n, L, components)


def _diff(values, axis, spacing):
    return (np.roll(values, -1, axis=axis) -
            np.roll(values, 1, axis=axis)) / (2.0 * spacing)


def gradient(values, L: float = TWO_PI):
    """Centered periodic gradient, shape (3, n, n, n)."""
    spacing = L / values.shape[0]
    return np.stack([_diff(values, axis, spacing) for axis in range(3)])


def star_d(field: Grid3Field):
    """``*d`` of a 1-form with centered periodic differences."""
    ax, ay, az = field.components
    h = field.spacing
    curl = np.stack([
        _diff(az, 1, h) - _diff(ay, 2, h),
        _diff(ax, 2, h) - _diff(az, 0, h),
        _diff(ay, 0, h) - _diff(ax, 1, h)])
    return -curl


def curl_residual(field: Grid3Field, mu: float) -> float:
    """``max |*d alpha - mu alpha| / (|mu| max |alpha|)``."""
    if mu == 0:
        raise ValidationError("mu must be nonzero", module="torus3")
    residual = np.sqrt(((star_d(field) - mu * field.components) ** 2)
                       .sum(axis=0)).max()
    return float(residual / (abs(mu) * field.pointwise_norm().max()))


def fit_mu(field: Grid3Field) -> float:
    """The ``mu`` minimising the least-squares curl residual."""
    return float((star_d(field) * field.components).sum() /
                 (field.components ** 2).sum())


def contact_hamiltonian(field: Grid3Field, direction: str = "x"):
    """``f = alpha(X)`` for the coordinate field ``X`` named by
    ``direction``.

    :raises DegenerateFieldError: ``f`` vanishes identically, so ``X`` lies
        in the contact planes everywhere.
    """
    if direction not in DIRECTIONS:
        raise ValidationError(
            "direction must be one of x, y, z", module="torus3")
    f = np.array(field.components[DIRECTIONS[direction]])
    if np.abs(f).max() <= DEGENERATE_RATIO * field.pointwise_norm().max():
        raise DegenerateFieldError(
            "alpha(d/d{0}) vanishes identically".format(direction))
    return f


def laplacian_7pt(values, L: float = TWO_PI):
    """Positive semidefinite periodic 7-point Laplacian."""
    spacing = L / values.shape[0]
    result = np.zeros_like(values)
    for axis in range(3):
        result += 2.0 * values - np.roll(values, 1, axis=axis) -\
            np.roll(values, -1, axis=axis)
    return result / spacing ** 2


def gener_lap_residual(f, mu: float, L: float = TWO_PI) -> float:
    """``max |Delta_h f - mu^2 f| / max |f|``."""
    f = np.asarray(f, dtype=float)
    scale = np.abs(f).max()
    if scale == 0:
        raise DegenerateFieldError("f vanishes identically")
    return float(np.abs(laplacian_7pt(f, L) - mu * mu * f).max() / scale)


class CharacteristicSurface(object):

    def __init__(self, components: List[SurfaceComponent],
                 ambiguous_faces: int, snapped: int):
        self.components = components
        self.ambiguous_faces = ambiguous_faces
        self.snapped = snapped

    def __str__(self):
        return "<tightcert.CharacteristicSurface> {0} components chi={1}".format(
            len(self.components),
            [c.euler_characteristic for c in self.components])

    @property
    def all_tori(self) -> bool:
        return all(c.euler_characteristic == 0 for c in self.components)

    def to_json_dict(self) -> Dict:
        return {
            "components": [dict(c._asdict()) for c in self.components],
            "all_tori": self.all_tori,
            "ambiguous_faces": self.ambiguous_faces,
            "snapped": self.snapped,
        }


def count_ambiguous_faces(signs) -> int:
    """Grid squares whose corner signs alternate around the square."""
    count = 0
    for first, second in ((0, 1), (1, 2), (0, 2)):
        s00 = signs
        s10 = np.roll(signs, -1, axis=first)
        s01 = np.roll(signs, -1, axis=second)
        s11 = np.roll(s10, -1, axis=second)
        count += int(((s00 == s11) & (s10 == s01) & (s00 != s10)).sum())
    return count


def _weld(vertices, n):
    """Identifies isosurface vertices lying on the same periodic grid edge."""
    nearest = np.round(vertices)
    offset = np.abs(vertices - nearest)
    axis = np.argmax(offset, axis=1)
    rows = np.arange(vertices.shape[0])
    if np.any(offset[rows, axis] <= 1e-12):
        raise NonManifoldSurfaceError(
            "isosurface vertex on a grid point; the level set is degenerate")
    cells = np.mod(nearest.astype(np.int64), n)
    cells[rows, axis] = np.floor(vertices[rows, axis]).astype(np.int64)
    keys = np.concatenate([axis[:, None], cells], axis=1)
    _, welded = np.unique(keys, axis=0, return_inverse=True)
    return np.asarray(welded).reshape(-1)


def characteristic_surface(f, tol: float = None, configuration=None,
                           **kwargs) -> CharacteristicSurface:
    """Extracts the periodic zero isosurface of ``f`` and reports the Euler
    characteristic of each connected component.

    Values with ``|f| < tol * max|f|`` are moved to ``+tol * max|f|``.

    :raises DegenerateFieldError: ``f`` is identically below ``tol``.
    :raises NonManifoldSurfaceError: The welded extraction has an edge not
        shared by exactly two triangles.
    """
    from skimage import measure

    if tol is None:
        tol = get_configuration(configuration, kwargs).zero_tol
    f = np.array(f, dtype=float)
    n = f.shape[0]
    scale = np.abs(f).max()
    if scale == 0 or np.all(np.abs(f) < tol):
        raise DegenerateFieldError("f vanishes identically")
    small = np.abs(f) < tol * scale
    f[small] = tol * scale
    signs = f > 0
    if signs.all() or not signs.any():
        return CharacteristicSurface([], 0, int(small.sum()))

    padded = np.pad(f, ((0, 1), (0, 1), (0, 1)), mode="wrap")
    vertices, faces, _, _ = measure.marching_cubes(
        padded, level=0.0, method="lewiner", allow_degenerate=True)
    welded = _weld(vertices, n)
    faces = welded[faces]
    keep = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) &\
        (faces[:, 2] != faces[:, 0])
    faces = faces[keep]
    vertex_count = int(welded.max()) + 1

    keys = np.sort(np.concatenate([
        faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    edges, counts = np.unique(keys, axis=0, return_counts=True)
    if np.any(counts != 2):
        raise NonManifoldSurfaceError(
            "isosurface edge shared by {0} triangles".format(
                int(counts[counts != 2][0])))

    graph = sparse.coo_matrix(
        (np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])),
        shape=(vertex_count, vertex_count))
    component_count, labels = csgraph.connected_components(
        graph, directed=False)
    edge_labels = labels[edges[:, 0]]
    face_labels = labels[faces[:, 0]]
    components = []
    for label in range(component_count):
        v = int((labels == label).sum())
        e = int((edge_labels == label).sum())
        t = int((face_labels == label).sum())
        components.append(SurfaceComponent(v, e, t, v - e + t))

    ambiguous = count_ambiguous_faces(signs)
    if ambiguous:
        logger.warning("%d ambiguous grid faces in the isosurface", ambiguous)
    surface = CharacteristicSurface(components, ambiguous, int(small.sum()))
    logger.info("Extracted %s", surface)
    return surface


def reeb_tangency(field: Grid3Field, f, tol: float = 1e-12) -> float:
    """Largest ``|<alpha / |alpha|^2, grad f>|`` at grid points next to a
    sign change of ``f``; zero when ``f`` does not change sign.

    :raises DegenerateFieldError: ``||alpha|| < tol`` somewhere.
    """
    norm_sq = (field.components ** 2).sum(axis=0)
    if np.sqrt(norm_sq.min()) < tol:
        raise DegenerateFieldError("alpha vanishes on the grid")
    f = np.asarray(f, dtype=float)
    positive = f > 0
    near = np.zeros_like(positive)
    for axis in range(3):
        for shift in (1, -1):
            near |= positive != np.roll(positive, shift, axis=axis)
    if not near.any():
        return 0.0
    pairing = (field.components * gradient(f, field.L)).sum(axis=0) / norm_sq
    return float(np.abs(pairing[near]).max())


def _map(function, items, threads):
    if threads <= 1:
        return [function(item) for item in items]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=threads, prefer="threads")(
        delayed(function)(item) for item in items)


def residual_table(n_mode: int, resolutions: Sequence[int] = (16, 32, 64),
                   L: float = TWO_PI, direction: str = "x",
                   configuration=None, **kwargs) -> Dict:
    """Curl and reduced-equation residuals of ``alpha_n`` at several
    resolutions with the measured convergence orders between them."""
    configuration = get_configuration(configuration, kwargs)
    mu = TWO_PI * n_mode / L

    def row(n):
        field = sample_alpha_n(n_mode, n, L)
        f = contact_hamiltonian(field, direction)
        return {
            "n": n,
            "curl_residual": curl_residual(field, mu),
            "gener_lap_residual": gener_lap_residual(f, mu, L),
            "fit_mu": fit_mu(field),
        }

    rows = _map(row, list(resolutions), int(configuration.threads))
    orders = {"curl_residual": [], "gener_lap_residual": []}
    for coarse, fine in zip(rows, rows[1:]):
        ratio = math.log(fine["n"] / coarse["n"])
        for key in orders:
            orders[key].append(
                math.log(coarse[key] / fine[key]) / ratio)
    return {"n_mode": n_mode, "mu": mu, "rows": rows, "orders": orders}


def slice_lift(n_mode: int, n: int, L: float = TWO_PI,
               direction: str = "x") -> ContactFormData:
    """Exact S^1-invariant data of ``alpha_n`` over the ``(y, z)`` torus.

    The fiber is the ``x`` circle of length ``L``; the base is an ``n x n``
    flat torus whose first axis is ``y`` and second axis is ``z``.
    ``direction`` chooses the Killing field: ``x`` gives ``f = cos(kz)``,
    ``y`` gives ``f = sin(kz)``.
    """
    if direction not in ("x", "y"):
        raise ValidationError("slice lift needs direction x or y",
                              module="torus3")
    if int(n_mode) != n_mode or n_mode == 0:
        raise ValidationError("n_mode must be a nonzero integer",
                              module="torus3")
    mesh = build_flat_torus(n, n, L, L)
    k = TWO_PI * abs(n_mode) / L
    z = mesh.chart[:, 1]
    if direction == "x":
        f, gradient_sq = np.cos(k * z), (k * np.sin(k * z)) ** 2
    else:
        f, gradient_sq = np.sin(k * z), (k * np.cos(k * z)) ** 2
    orientation = 1 if n_mode > 0 else -1
    return lift_from_samples(mesh, f, gradient_sq, k * k, L, orientation)


def save_grid_field(field: Grid3Field, path):
    """Writes the binary field and a ``.json`` sidecar next to it.

    Binary layout: header (magic ``TC3F``, uint32 n, float64 L, ``xyz``),
    then the x, y and z components as little-endian float64, each in z-major
    order.
    """
    path = str(path)
    with open(path, "wb") as handle:
        handle.write(FIELD_HEADER.pack(FIELD_MAGIC, field.n, field.L, b"xyz"))
        for component in field.components:
            handle.write(np.ascontiguousarray(
                component.transpose(2, 1, 0), dtype="<f8").tobytes())
    sidecar = {
        "format": FIELD_MAGIC.decode("ascii"),
        "n": field.n,
        "L": field.L,
        "components": ["x", "y", "z"],
        "order": "z-major",
        "dtype": "float64-le",
    }
    with open(path + ".json", "w", encoding="utf-8") as handle:
        json.dump(sidecar, handle, sort_keys=True, indent=2)
    return path


def load_grid_field(path) -> Grid3Field:
    with open(str(path), "rb") as handle:
        header = handle.read(FIELD_HEADER.size)
        if len(header) != FIELD_HEADER.size:
            raise ValidationError("truncated field header", module="torus3")
        magic, n, L, order = FIELD_HEADER.unpack(header)
        if magic != FIELD_MAGIC or order != b"xyz":
            raise ValidationError("not a tightcert grid field",
                                  module="torus3")
        data = np.frombuffer(handle.read(), dtype="<f8")
    if data.shape[0] != 3 * n ** 3:
        raise ValidationError(
            "expected {0} values, found {1}".format(3 * n ** 3, data.shape[0]),
            module="torus3")
    components = data.reshape(3, n, n, n).transpose(0, 3, 2, 1)
    return Grid3Field(n, L, components)
