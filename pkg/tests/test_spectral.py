import math
from functools import lru_cache

import numpy as np
import pytest

from tightcert import (
    Configuration, TriangleMesh, build_flat_torus, build_icosphere, assemble,
    solve_lowest, rayleigh_quotient, residual_norm)
from tightcert.errors import (
    ConvergenceError, DegenerateTriangleError, ValidationError)
from tightcert.spectral import multiplicity_clusters, scaled

from .test_surface import DEFAULT_THIN_TORUS, TWO_PI


DEFAULT_CONFIGURATION = Configuration(tol=1e-6)


@lru_cache(maxsize=None)
def _torus_spectrum():
    mesh = build_flat_torus(64, 64, TWO_PI, TWO_PI)
    ops = assemble(mesh)
    return ops, solve_lowest(ops, 6, DEFAULT_CONFIGURATION)


@lru_cache(maxsize=None)
def _thin_torus_spectrum():
    ops = assemble(build_flat_torus(*DEFAULT_THIN_TORUS))
    return ops, solve_lowest(ops, 2, DEFAULT_CONFIGURATION)


def _small_torus():
    return build_flat_torus(6, 6, TWO_PI, TWO_PI)


def test_unit_grid_stiffness():
    ops = assemble(build_flat_torus(8, 8, 8.0, 8.0))
    stiffness = ops.stiffness.toarray()
    assert abs(stiffness[0, 1] + 1.0) < 1e-12
    assert abs(stiffness[0, 8] + 1.0) < 1e-12
    # right angles opposite the diagonals
    assert abs(stiffness[0, 9]) < 1e-12
    assert abs(stiffness[0, 0] - 4.0) < 1e-12


def test_operator_properties():
    mesh = build_icosphere(2)
    ops = assemble(mesh)
    ones = np.ones(mesh.vertex_count)
    assert np.abs(ops.stiffness @ ones).max() < 1e-12
    assert abs(ones @ (ops.mass @ ones) - mesh.total_area) < 1e-12
    assert abs(ops.lumped_mass.sum() - mesh.total_area) < 1e-12
    assert abs(ops.stiffness - ops.stiffness.T).max() < 1e-12
    assert np.abs(ops.apply_laplacian(ones)).max() < 1e-10

    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.standard_normal(mesh.vertex_count)
        assert x @ (ops.stiffness @ x) >= -1e-10


def test_degenerate_triangle():
    mesh = build_flat_torus(4, 4, 4.0, 4.0)
    lengths = np.array(mesh.edge_lengths)
    diagonal = int(np.nonzero(lengths > 1.2)[0][0])
    lengths[diagonal] = 2.0
    collapsed = TriangleMesh(mesh.vertex_count, mesh.faces, mesh.edges,
                             lengths, validate=False)
    with pytest.raises(DegenerateTriangleError) as e:
        assemble(collapsed)
    assert e.value.module == "spectral"
    assert diagonal in collapsed.face_edges[e.value.details["face"]]


def test_flat_torus_spectrum():
    _, eigenpairs = _torus_spectrum()
    values = [pair.lambda_ for pair in eigenpairs]
    assert abs(values[0]) < 1e-10
    for value, expected in zip(values[1:], [1.0, 1.0, 1.0, 1.0, 2.0]):
        assert abs(value - expected) < 0.01 * expected
    assert values == sorted(values)


def test_flat_torus_clusters():
    _, eigenpairs = _torus_spectrum()
    assert multiplicity_clusters(eigenpairs) == [[0], [1, 2, 3, 4], [5]]
    assert [pair.cluster for pair in eigenpairs] == [0, 1, 1, 1, 1, 2]


def test_residuals_and_orthonormality():
    ops, eigenpairs = _torus_spectrum()
    for pair in eigenpairs:
        assert pair.residual <= 1e-6 * max(1.0, pair.lambda_)
        assert abs(residual_norm(ops, pair.lambda_, pair.f) -
                   pair.residual) < 1e-12
    vectors = np.stack([pair.f.values for pair in eigenpairs], axis=1)
    gram = vectors.T @ (ops.mass @ vectors)
    assert np.abs(gram - np.eye(len(eigenpairs))).max() < 1e-8


def test_icosphere_spectrum():
    ops = assemble(build_icosphere(4))
    eigenpairs = solve_lowest(ops, 4, DEFAULT_CONFIGURATION)
    assert abs(eigenpairs[0].lambda_) < 1e-10
    for pair in eigenpairs[1:]:
        assert abs(pair.lambda_ - 2.0) < 0.02 * 2.0


@pytest.mark.slow
def test_icosphere_spectrum_at_subdivision_5():
    ops = assemble(build_icosphere(5))
    eigenpairs = solve_lowest(ops, 4, DEFAULT_CONFIGURATION)
    assert abs(eigenpairs[0].lambda_) < 1e-10
    for pair in eigenpairs[1:]:
        assert abs(pair.lambda_ - 2.0) < 0.02 * 2.0


def test_thin_torus_spectrum():
    _, eigenpairs = _thin_torus_spectrum()
    expected = (TWO_PI / DEFAULT_THIN_TORUS[2]) ** 2
    assert abs(eigenpairs[1].lambda_ - expected) < 0.01 * expected


def test_constant_mode_first():
    _, eigenpairs = _thin_torus_spectrum()
    constant = eigenpairs[0].f.values
    assert np.allclose(constant, constant[0])
    assert constant[0] > 0


def test_dense_fallback():
    ops = assemble(_small_torus())
    eigenpairs = solve_lowest(ops, 4, tol=1e-8)
    values = [pair.lambda_ for pair in eigenpairs]
    assert abs(values[0]) < 1e-10
    assert values == sorted(values)
    vectors = np.stack([pair.f.values for pair in eigenpairs], axis=1)
    gram = vectors.T @ (ops.mass @ vectors)
    assert np.abs(gram - np.eye(4)).max() < 1e-10


def test_solve_is_deterministic():
    ops = assemble(build_flat_torus(*DEFAULT_THIN_TORUS))
    first = solve_lowest(ops, 3, DEFAULT_CONFIGURATION)
    second = solve_lowest(ops, 3, DEFAULT_CONFIGURATION)
    assert np.allclose([p.lambda_ for p in first],
                       [p.lambda_ for p in second], rtol=1e-12, atol=1e-14)

    ops = assemble(_small_torus())
    first = solve_lowest(ops, 4)
    second = solve_lowest(ops, 4)
    for a, b in zip(first, second):
        assert np.array_equal(a.f.values, b.f.values)


def test_eigenvalues_scale_with_length():
    mesh = _small_torus()
    base = solve_lowest(assemble(mesh), 4)
    double = solve_lowest(assemble(scaled(mesh, 2.0)), 4)
    for a, b in zip(base[1:], double[1:]):
        assert abs(b.lambda_ - a.lambda_ / 4.0) < 1e-9 * a.lambda_


def test_rayleigh_quotient():
    ops = assemble(_small_torus())
    eigenpairs = solve_lowest(ops, 4)
    assert abs(rayleigh_quotient(ops, np.ones(ops.size))) < 1e-12
    for pair in eigenpairs[1:]:
        assert abs(rayleigh_quotient(ops, pair.f) - pair.lambda_) <\
            1e-9 * pair.lambda_

    rng = np.random.default_rng(1)
    ones = np.ones(ops.size)
    for _ in range(5):
        x = rng.standard_normal(ops.size)
        x -= (ones @ (ops.mass @ x)) / (ones @ (ops.mass @ ones)) * ones
        assert rayleigh_quotient(ops, x) >= eigenpairs[1].lambda_ - 1e-9

    with pytest.raises(ValidationError):
        rayleigh_quotient(ops, np.zeros(ops.size))
    with pytest.raises(ValidationError):
        residual_norm(ops, 1.0, np.zeros(ops.size))


def test_invalid_eigen_count():
    ops = assemble(build_flat_torus(4, 4, 1.0, 1.0))
    with pytest.raises(ValidationError):
        solve_lowest(ops, 4)
    with pytest.raises(ValidationError):
        solve_lowest(ops, 0)
    assert [p.lambda_ for p in solve_lowest(ops, 1)] == [0.0]


def test_convergence_error_carries_residuals():
    ops = assemble(_small_torus())
    with pytest.raises(ConvergenceError) as e:
        solve_lowest(ops, 4, tol=1e-30)
    assert len(e.value.residuals) == 4

    ops = assemble(build_flat_torus(*DEFAULT_THIN_TORUS))
    with pytest.raises(ConvergenceError):
        solve_lowest(ops, 2, tol=1e-30, max_iterations=5)


def test_eigenpair_to_json_dict():
    _, eigenpairs = _thin_torus_spectrum()
    result = eigenpairs[1].to_json_dict()
    assert set(result) == {"lambda", "residual", "values"}
    assert len(result["values"]) == DEFAULT_THIN_TORUS[0] *\
        DEFAULT_THIN_TORUS[1]
    assert math.isclose(result["lambda"], eigenpairs[1].lambda_)
