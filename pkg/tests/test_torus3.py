import json
import math

import numpy as np
import pytest

from tightcert import (
    UNIVERSALLY_TIGHT, build_flat_torus, assemble, solve_lowest, decompose,
    compute_m_alpha, certify, has_disc_domain)
from tightcert.errors import DegenerateFieldError, ValidationError
from tightcert.torus3 import (
    Grid3Field, characteristic_surface, contact_hamiltonian,
    count_ambiguous_faces, curl_residual, fit_mu, gener_lap_residual,
    load_grid_field, reeb_tangency, residual_table, sample_alpha_n,
    save_grid_field, slice_lift, star_d)

from .test_spectral import DEFAULT_CONFIGURATION
from .test_surface import TWO_PI


DEFAULT_RESOLUTION = 32

DEFAULT_MODES = (1, 2, 3)


def _expected_curl_residual(n_mode, n):
    x = TWO_PI * n_mode / n
    return 1.0 - math.sin(x) / x


def test_sample_alpha_n():
    field = sample_alpha_n(1, DEFAULT_RESOLUTION)
    assert field.components.shape == (3, 32, 32, 32)
    assert np.array_equal(field.components[:, 5, 7, 0], [1.0, 0.0, 0.0])
    assert np.abs(field.pointwise_norm() - 1.0).max() < 1e-15
    assert np.all(field.components[2] == 0.0)

    reversed_field = sample_alpha_n(-2, 16)
    forward = sample_alpha_n(2, 16)
    assert np.allclose(reversed_field.components[0], forward.components[0])
    assert np.allclose(reversed_field.components[1], -forward.components[1])


def test_sample_alpha_n_rejects():
    with pytest.raises(ValidationError):
        sample_alpha_n(0, 32)
    with pytest.raises(ValidationError):
        sample_alpha_n(1, 4)
    with pytest.raises(ValidationError):
        Grid3Field(8, TWO_PI, np.zeros((3, 8, 8)))


def test_star_d_scales_alpha():
    field = sample_alpha_n(1, DEFAULT_RESOLUTION)
    h = TWO_PI / DEFAULT_RESOLUTION
    assert np.allclose(star_d(field), math.sin(h) / h * field.components,
                       rtol=0, atol=1e-12)


def test_curl_residual():
    for n_mode in DEFAULT_MODES:
        field = sample_alpha_n(n_mode, DEFAULT_RESOLUTION)
        residual = curl_residual(field, float(n_mode))
        assert abs(residual -
                   _expected_curl_residual(n_mode, DEFAULT_RESOLUTION)) < 1e-12
    field = sample_alpha_n(1, DEFAULT_RESOLUTION)
    assert curl_residual(field, 1.0) <= 0.01
    with pytest.raises(ValidationError):
        curl_residual(field, 0.0)


def test_curl_residual_detects_wrong_mu():
    field = sample_alpha_n(1, DEFAULT_RESOLUTION)
    assert 0.45 < curl_residual(field, 2.0) < 0.55
    for n_mode in DEFAULT_MODES:
        field = sample_alpha_n(n_mode, DEFAULT_RESOLUTION)
        right = curl_residual(field, float(n_mode))
        wrong = curl_residual(field, -float(n_mode))
        assert wrong >= 20.0 * right


def test_residual_orders():
    for n_mode in DEFAULT_MODES:
        table = residual_table(n_mode, (16, 32, 64))
        assert [row["n"] for row in table["rows"]] == [16, 32, 64]
        for key in ("curl_residual", "gener_lap_residual"):
            for order in table["orders"][key]:
                assert 1.7 <= order <= 2.3


def test_residual_table_threads():
    pytest.importorskip("joblib")
    serial = residual_table(2, (16, 32))
    threaded = residual_table(2, (16, 32), threads=2)
    assert serial == threaded


def test_contact_hamiltonian():
    field = sample_alpha_n(1, DEFAULT_RESOLUTION)
    z = np.arange(DEFAULT_RESOLUTION) * TWO_PI / DEFAULT_RESOLUTION
    f = contact_hamiltonian(field, "x")
    assert np.allclose(f[3, 4], np.cos(z))
    assert np.allclose(contact_hamiltonian(field, "y")[0, 0], np.sin(z))
    with pytest.raises(DegenerateFieldError):
        contact_hamiltonian(field, "z")
    with pytest.raises(ValidationError):
        contact_hamiltonian(field, "w")

    f = contact_hamiltonian(sample_alpha_n(2, DEFAULT_RESOLUTION), "y")
    assert np.allclose(f[1, 1], np.sin(2.0 * z))


def test_gener_lap_residual():
    field = sample_alpha_n(1, DEFAULT_RESOLUTION)
    f = contact_hamiltonian(field, "x")
    h = TWO_PI / DEFAULT_RESOLUTION
    assert gener_lap_residual(f, 1.0) <= 0.01
    assert abs(gener_lap_residual(f, 1.0) -
               (1.0 - (2.0 - 2.0 * math.cos(h)) / h ** 2)) < 1e-10
    assert abs(gener_lap_residual(f, 2.0) - 3.0) < 0.05
    with pytest.raises(DegenerateFieldError):
        gener_lap_residual(np.zeros((8, 8, 8)), 1.0)


def test_fit_mu_matches_surface_spectrum():
    field = sample_alpha_n(1, 64)
    mu = fit_mu(field)
    h = TWO_PI / 64
    assert abs(mu - math.sin(h) / h) < 1e-12

    ops = assemble(build_flat_torus(64, 64, TWO_PI, TWO_PI))
    lambda_ = solve_lowest(ops, 2, DEFAULT_CONFIGURATION)[1].lambda_
    assert abs(lambda_ - mu * mu) < 0.01 * lambda_


def test_characteristic_surface_of_cosine():
    pytest.importorskip("skimage")
    field = sample_alpha_n(1, DEFAULT_RESOLUTION)
    surface = characteristic_surface(contact_hamiltonian(field, "x"))
    assert len(surface.components) == 2
    assert surface.all_tori
    assert surface.ambiguous_faces == 0


def test_characteristic_surface_modes():
    pytest.importorskip("skimage")
    for n_mode in DEFAULT_MODES:
        field = sample_alpha_n(n_mode, DEFAULT_RESOLUTION)
        surface = characteristic_surface(contact_hamiltonian(field, "x"))
        assert len(surface.components) == 2 * n_mode
        assert surface.all_tori
        for component in surface.components:
            assert component.face_count == 2 * DEFAULT_RESOLUTION ** 2
        result = surface.to_json_dict()
        assert result["all_tori"]
        assert len(result["components"]) == 2 * n_mode


def test_characteristic_surface_snaps_grid_zeros():
    pytest.importorskip("skimage")
    # cos(2z) vanishes to rounding on the planes z = pi / 4 + k pi / 2
    field = sample_alpha_n(2, DEFAULT_RESOLUTION)
    surface = characteristic_surface(contact_hamiltonian(field, "x"))
    assert surface.snapped == 4 * DEFAULT_RESOLUTION ** 2
    assert len(surface.components) == 4


def test_characteristic_surface_one_signed():
    pytest.importorskip("skimage")
    f = 2.0 + np.cos(np.arange(16) * TWO_PI / 16)[None, None, :] *\
        np.ones((16, 16, 16))
    surface = characteristic_surface(f)
    assert surface.components == []
    with pytest.raises(DegenerateFieldError):
        characteristic_surface(np.zeros((16, 16, 16)))


def test_count_ambiguous_faces():
    signs = np.zeros((8, 8, 8), dtype=bool)
    signs[:, :, :4] = True
    assert count_ambiguous_faces(signs) == 0
    checkerboard = (np.indices((8, 8, 8)).sum(axis=0) % 2) == 0
    assert count_ambiguous_faces(checkerboard) == 3 * 8 ** 3


def test_reeb_tangency():
    field = sample_alpha_n(1, DEFAULT_RESOLUTION)
    assert reeb_tangency(field, contact_hamiltonian(field, "x")) < 1e-12

    field = sample_alpha_n(2, DEFAULT_RESOLUTION)
    assert reeb_tangency(field, contact_hamiltonian(field, "y")) <= 0.01


def test_reeb_tangency_grows_with_perturbation():
    base = sample_alpha_n(1, DEFAULT_RESOLUTION)
    f = contact_hamiltonian(base, "x")
    values = []
    for epsilon in (0.01, 0.1):
        components = np.array(base.components)
        components[2] = epsilon
        field = Grid3Field(DEFAULT_RESOLUTION, TWO_PI, components)
        values.append(reeb_tangency(field, f))
    assert 0.0 < values[0] < values[1]


def test_slice_lift_is_exact():
    for n_mode in DEFAULT_MODES:
        form = slice_lift(n_mode, 30)
        assert np.abs(form.alpha_norm.values - 1.0).max() < 1e-8
        assert compute_m_alpha(form) == 0.0
        assert abs(form.mu - n_mode) < 1e-12
        decomposition = decompose(form.f)
        assert not has_disc_domain(decomposition)
        assert len(decomposition.dividing_set) == 2 * n_mode


def test_slice_lift_is_universally_tight():
    for n_mode in DEFAULT_MODES:
        form = slice_lift(n_mode, 30)
        certificate = certify(form, decompose(form.f))
        assert certificate.verdict == UNIVERSALLY_TIGHT
        assert certificate.criterion("giroux_no_disc_domain").passed
        assert certificate.criterion("volume_bound_log_norm").passed

    form = slice_lift(-1, 30, direction="y")
    assert form.mu == -1.0
    with pytest.raises(ValidationError):
        slice_lift(1, 30, direction="z")


def test_grid_field_round_trip(tmp_path):
    field = sample_alpha_n(2, 8)
    components = np.array(field.components)
    components[2] = np.arange(8 ** 3).reshape(8, 8, 8)
    field = Grid3Field(8, TWO_PI, components)
    path = save_grid_field(field, tmp_path / "alpha.bin")
    loaded = load_grid_field(path)
    assert loaded.n == 8
    assert loaded.L == TWO_PI
    assert np.array_equal(loaded.components, field.components)

    with open(path + ".json", encoding="utf-8") as handle:
        sidecar = json.load(handle)
    assert sidecar["format"] == "TC3F"
    assert sidecar["order"] == "z-major"
    # z varies slowest on disk
    raw = np.fromfile(path, dtype="<f8", offset=20)
    assert raw[8 ** 3 * 2 + 1] == field.components[2][1, 0, 0]


def test_load_grid_field_rejects(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX")
    with pytest.raises(ValidationError):
        load_grid_field(path)
