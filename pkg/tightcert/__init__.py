__version__ = "0.1.0"

from tightcert.configuration import (
    Configuration,
    get_configuration,
    get_configuration_from_environment,
)
from tightcert.errors import (
    TightcertError,
    ValidationError,
    ConvergenceError,
)
from tightcert.surface import (
    TriangleMesh,
    ScalarField,
    CurvatureField,
    build_flat_torus,
    build_icosphere,
    build_hyperbolic_genus2,
    load_mesh,
    save_mesh,
    discrete_curvature,
    curvature_nonpositive,
)
from tightcert.spectral import (
    OperatorPair,
    EigenPair,
    assemble,
    solve_lowest,
    rayleigh_quotient,
    residual_norm,
)
from tightcert.nodal import (
    NodalDecomposition,
    NodalDomain,
    decompose,
    count_domains,
    is_disc,
    has_disc_domain,
    courant_check,
    domain_gauss_bonnet,
    disc_domain_inequality,
    dividing_set_geometry,
)
from tightcert.contact import (
    ContactFormData,
    CertificateInput,
    Certificate,
    MAlphaVariant,
    UNIVERSALLY_TIGHT,
    NOT_UNIVERSALLY_TIGHT,
    INCONCLUSIVE,
    lift_to_beltrami,
    lift_from_samples,
    nonvanishing_check,
    compute_m_alpha,
    mu_from_lambda_E,
    certify,
    tubular_bound,
)


__all__ = [
    "__version__",
    "Configuration",
    "get_configuration",
    "get_configuration_from_environment",
    "TightcertError",
    "ValidationError",
    "ConvergenceError",
    "TriangleMesh",
    "ScalarField",
    "CurvatureField",
    "build_flat_torus",
    "build_icosphere",
    "build_hyperbolic_genus2",
    "load_mesh",
    "save_mesh",
    "discrete_curvature",
    "curvature_nonpositive",
    "OperatorPair",
    "EigenPair",
    "assemble",
    "solve_lowest",
    "rayleigh_quotient",
    "residual_norm",
    "NodalDecomposition",
    "NodalDomain",
    "decompose",
    "count_domains",
    "is_disc",
    "has_disc_domain",
    "courant_check",
    "domain_gauss_bonnet",
    "disc_domain_inequality",
    "dividing_set_geometry",
    "ContactFormData",
    "CertificateInput",
    "Certificate",
    "MAlphaVariant",
    "UNIVERSALLY_TIGHT",
    "NOT_UNIVERSALLY_TIGHT",
    "INCONCLUSIVE",
    "lift_to_beltrami",
    "lift_from_samples",
    "nonvanishing_check",
    "compute_m_alpha",
    "mu_from_lambda_E",
    "certify",
    "tubular_bound",
]
