import os
from copy import deepcopy
from typing import Dict, Mapping

from tightcert.errors import ConfigurationError


DEFAULT_TOLERANCE = 1e-8

DEFAULT_MAX_ITERATIONS = 500

DEFAULT_ZERO_TOLERANCE = 1e-9

THREADS_ENVIRONMENT_VARIABLE = "TIGHTCERT_THREADS"


class Configuration(object):

    def __init__(
            self, eigen_count: int = 6, tol: float = DEFAULT_TOLERANCE,
            seed: int = 0, max_iterations: int = DEFAULT_MAX_ITERATIONS,
            block_padding: int = 5, zero_tol: float = DEFAULT_ZERO_TOLERANCE,
            curvature_tol: float = 1e-8, nonvanishing_tol: float = 1e-6,
            constant_norm_rtol: float = 1e-6, cluster_rtol: float = 1e-3,
            noise_floor: float = 1e-9, disc_slack: float = 0.05,
            fiber_length: float = 1.0, cover_degree: int = 1,
            euler_number: int = 0, fiber_length_min: float = None,
            threads: int = 1, **kwargs):
        """

        :param eigen_count: Number of eigenpairs to compute (the constant
            mode included). Default to 6.
        :param tol: Residual tolerance of the eigensolver. Default to 1e-8.
        :param seed: Seed of the random starting block. Default to 0.
        :param max_iterations: Iteration cap of the block eigensolver.
            Default to 500.
        :param block_padding: Extra block vectors on top of eigen_count.
            Default to 5.
        :param zero_tol: Values with ``|f| < zero_tol * max|f|`` are snapped
            off zero before the nodal set is extracted. Default to 1e-9.
        :param curvature_tol: Pointwise curvature at or below this value
            counts as nonpositive. Default to 1e-8.
        :param nonvanishing_tol: A contact form is nonvanishing when
            ``min ||alpha|| > nonvanishing_tol * mean ||alpha||``.
        :param constant_norm_rtol: Relative variation of ``||alpha||`` below
            which the norm is treated as constant. Default to 1e-6.
        :param cluster_rtol: Relative eigenvalue gap below which eigenpairs
            are grouped into one multiplicity cluster. Default to 1e-3.
        :param noise_floor: Pointwise values of ``Delta ln ||alpha||`` with a
            magnitude below this are treated as zero. Default to 1e-9.
        :param disc_slack: Relative slack (of 4 pi) accepted on the
            disc-domain inequality before it is flagged. Default to 0.05.
        :param fiber_length: Length l of the S^1 fibers. Default to 1.
        :param cover_degree: Degree k of the smooth covering bundle.
            Default to 1.
        :param euler_number: Euler number e(M) of the fibration. Default to 0.
        :param fiber_length_min: Lower bound l_min on fiber lengths. Default
            to fiber_length.
        :param threads: Number of worker threads for batch operations.
            Default to 1 (deterministic single thread).
        :param kwargs: Other args
        """
        self.eigen_count = eigen_count
        self.tol = tol
        self.seed = seed
        self.max_iterations = max_iterations
        self.block_padding = block_padding
        self.zero_tol = zero_tol
        self.curvature_tol = curvature_tol
        self.nonvanishing_tol = nonvanishing_tol
        self.constant_norm_rtol = constant_norm_rtol
        self.cluster_rtol = cluster_rtol
        self.noise_floor = noise_floor
        self.disc_slack = disc_slack
        self.fiber_length = fiber_length
        self.cover_degree = cover_degree
        self.euler_number = euler_number
        self.fiber_length_min = fiber_length_min
        self.threads = threads
        self.kwargs = kwargs

    def __str__(self):
        return "<tightcert.Configuration> "\
            "Eigen count: {0} "\
            "Tolerance: {1} "\
            "Seed: {2}".format(self.eigen_count, self.tol, self.seed)

    def merge_with_kwargs(self, kwargs):
        """
        Merge the current configuration with provided parameters.

        This method creates a copy of the current configuration and updates
        it with values from kwargs for existing attributes. ``None`` values
        are ignored so that unset command line flags keep the defaults.

        :param kwargs: A dictionary containing configuration parameters to
            update.
        :return: A new Configuration object with the updated values.
        """
        new_configuration = deepcopy(self)
        for key, value in kwargs.items():
            if value is not None and hasattr(new_configuration, key):
                setattr(new_configuration, key, value)

        return new_configuration

    def effective_fiber_length_min(self) -> float:
        if self.fiber_length_min is None:
            return self.fiber_length
        return self.fiber_length_min

    def validate(self):
        """
        Check every numeric parameter against the preconditions of the
        operations it feeds.

        :raises ConfigurationError: On the first out-of-range parameter.
        """
        if int(self.eigen_count) < 1:
            raise ConfigurationError("eigen_count must be >= 1")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if int(self.max_iterations) < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if int(self.block_padding) < 0:
            raise ConfigurationError("block_padding must be >= 0")
        for name in ("zero_tol", "curvature_tol", "nonvanishing_tol",
                     "constant_norm_rtol", "cluster_rtol", "noise_floor",
                     "disc_slack"):
            if getattr(self, name) < 0:
                raise ConfigurationError("{0} must be >= 0".format(name))
        if not self.fiber_length > 0:
            raise ConfigurationError("fiber_length must be positive")
        if not self.effective_fiber_length_min() > 0:
            raise ConfigurationError("fiber_length_min must be positive")
        if int(self.cover_degree) < 1:
            raise ConfigurationError("cover_degree must be >= 1")
        if int(self.threads) < 1:
            raise ConfigurationError("threads must be >= 1")
        return self

    def to_json_dict(self) -> Dict:
        """Returns the configuration parameters as a JSON-safe dict."""
        return {
            "eigen_count": self.eigen_count,
            "tol": self.tol,
            "seed": self.seed,
            "max_iterations": self.max_iterations,
            "block_padding": self.block_padding,
            "zero_tol": self.zero_tol,
            "curvature_tol": self.curvature_tol,
            "nonvanishing_tol": self.nonvanishing_tol,
            "constant_norm_rtol": self.constant_norm_rtol,
            "cluster_rtol": self.cluster_rtol,
            "noise_floor": self.noise_floor,
            "disc_slack": self.disc_slack,
            "fiber_length": self.fiber_length,
            "cover_degree": self.cover_degree,
            "euler_number": self.euler_number,
            "fiber_length_min": self.effective_fiber_length_min(),
            "threads": self.threads,
        }


def get_configuration(configuration, kwargs):
    """Returns a Configuration instance that merges a configuration instance
    and individual parameters given in a dictionary (usually, the **kwargs of
    an API function).

    The kwargs parameters take precedence over the Configuration instance.
    """
    if configuration:
        configuration = configuration.merge_with_kwargs(kwargs)
    else:
        configuration = Configuration().merge_with_kwargs(kwargs)
    return configuration


def get_configuration_from_environment(
        environ: Mapping[str, str] = None, configuration: Configuration = None,
        **kwargs) -> Configuration:
    """Builds a Configuration instance and applies overrides found in the
    environment.

    ``TIGHTCERT_THREADS`` overrides the ``threads`` parameter, including one
    given in kwargs.
    """
    if environ is None:
        environ = os.environ
    configuration = get_configuration(configuration, kwargs)
    threads = environ.get(THREADS_ENVIRONMENT_VARIABLE)
    if threads:
        try:
            configuration.threads = int(threads)
        except ValueError:
            raise ConfigurationError(
                "{0} must be an integer, got {1!r}".format(
                    THREADS_ENVIRONMENT_VARIABLE, threads))
    return configuration
