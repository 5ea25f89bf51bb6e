import pytest

from tightcert import (
    Configuration, get_configuration, get_configuration_from_environment)
from tightcert.errors import ConfigurationError, ValidationError


DEFAULT_CONFIGURATION = Configuration(
    eigen_count=4, tol=1e-6, seed=7, fiber_length=2.0)


def test_default_configuration():
    configuration = Configuration()
    assert configuration.eigen_count == 6
    assert configuration.tol == 1e-8
    assert configuration.seed == 0
    assert configuration.zero_tol == 1e-9
    assert configuration.threads == 1
    assert configuration.effective_fiber_length_min() == 1.0


def test_configuration_str():
    assert str(DEFAULT_CONFIGURATION) ==\
        "<tightcert.Configuration> Eigen count: 4 Tolerance: 1e-06 Seed: 7"


def test_merge_with_kwargs():
    configuration = DEFAULT_CONFIGURATION.merge_with_kwargs(
        {"seed": 3, "tol": None, "unknown": 1})
    assert configuration.seed == 3
    assert configuration.tol == 1e-6
    assert not hasattr(configuration, "unknown")
    # the original is left alone
    assert DEFAULT_CONFIGURATION.seed == 7


def test_get_configuration_kwargs_take_precedence():
    configuration = get_configuration(DEFAULT_CONFIGURATION, {"seed": 11})
    assert configuration.seed == 11
    assert configuration.eigen_count == 4

    configuration = get_configuration(None, {"eigen_count": 9})
    assert configuration.eigen_count == 9
    assert configuration.tol == 1e-8


def test_fiber_length_min_defaults_to_fiber_length():
    assert DEFAULT_CONFIGURATION.effective_fiber_length_min() == 2.0
    configuration = get_configuration(
        DEFAULT_CONFIGURATION, {"fiber_length_min": 0.5})
    assert configuration.effective_fiber_length_min() == 0.5
    assert configuration.to_json_dict()["fiber_length_min"] == 0.5


def test_environment_overrides_threads():
    configuration = get_configuration_from_environment(
        {"TIGHTCERT_THREADS": "3"}, threads=1)
    assert configuration.threads == 3

    configuration = get_configuration_from_environment({}, threads=2)
    assert configuration.threads == 2


def test_environment_rejects_bad_threads():
    with pytest.raises(ConfigurationError) as e:
        get_configuration_from_environment({"TIGHTCERT_THREADS": "many"})
    assert "TIGHTCERT_THREADS" in str(e.value)
    assert str(e.value).startswith("configuration: ")


@pytest.mark.parametrize("kwargs", [
    {"eigen_count": 0},
    {"tol": 0.0},
    {"max_iterations": 0},
    {"block_padding": -1},
    {"zero_tol": -1e-9},
    {"fiber_length": -1.0},
    {"fiber_length_min": -2.0},
    {"cover_degree": 0},
    {"threads": 0},
])
def test_validate_rejects(kwargs):
    with pytest.raises(ValidationError):
        Configuration(**kwargs).validate()


def test_validate_returns_configuration():
    assert DEFAULT_CONFIGURATION.validate() is DEFAULT_CONFIGURATION


def test_to_json_dict():
    result = DEFAULT_CONFIGURATION.to_json_dict()
    assert result["eigen_count"] == 4
    assert result["seed"] == 7
    assert set(result) == {
        "eigen_count", "tol", "seed", "max_iterations", "block_padding",
        "zero_tol", "curvature_tol", "nonvanishing_tol",
        "constant_norm_rtol", "cluster_rtol", "noise_floor", "disc_slack",
        "fiber_length", "cover_degree", "euler_number", "fiber_length_min",
        "threads"}
