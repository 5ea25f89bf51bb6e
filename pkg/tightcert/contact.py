"""S^1-invariant contact forms lifted from surface eigenfunctions, and the
tightness certificates evaluated on them.

On ``S^1 x Sigma`` with fiber length ``l`` an eigenfunction ``f`` of the
surface Laplacian with eigenvalue ``lambda`` gives the curl eigenfield
``alpha = f dtheta + (1/mu) * (rotated df)`` with ``mu^2 = lambda``; its
norm satisfies ``||alpha||^2 = f^2 + |grad f|^2 / lambda``.
"""
import enum
import logging
import math
from collections import namedtuple
from typing import Dict, List, Optional

import numpy as np

from tightcert.configuration import get_configuration
from tightcert.errors import MeshMismatchError, ValidationError
from tightcert.nodal import NodalDecomposition, decompose
from tightcert.spectral import EigenPair, assemble
from tightcert.surface import (
    CurvatureField, ScalarField, TriangleMesh, discrete_curvature,
    vertex_gradient_sq)

logger = logging.getLogger(__name__)


UNIVERSALLY_TIGHT = "UNIVERSALLY_TIGHT"

NOT_UNIVERSALLY_TIGHT = "NOT_UNIVERSALLY_TIGHT"

INCONCLUSIVE = "INCONCLUSIVE"

CONSISTENCY_FAILURE = "CONSISTENCY_FAILURE"

SUFFICIENT = "sufficient"

CHARACTERIZATION = "characterization"

INFORMATIONAL = "informational"

#: Relative tolerance for the Reeb-transverse case ``mu = E``.
REEB_TRANSVERSE_RTOL = 1e-12


class MAlphaVariant(enum.Enum):
    #: ``max(0, Delta ln ||alpha||)``
    MAIN = "main"
    #: ``max(0, Delta ln ||alpha|| + K)``
    VER2 = "with_curvature"


NonvanishingCheck = namedtuple(
    "NonvanishingCheck", ["nonvanishing", "min_norm", "vertex", "mean_norm"])

TubularBound = namedtuple(
    "TubularBound",
    ["lhs", "rhs", "passed", "curvature_nonpositive", "applicable"])

DiscBalance = namedtuple(
    "DiscBalance",
    ["domain", "curvature_integral", "log_norm_integral", "total",
     "volume_bound"])


class ContactFormData(object):

    def __init__(self, mesh: TriangleMesh, f: ScalarField, lambda_: float,
                 mu: float, alpha_norm: ScalarField, gradient_sq,
                 fiber_length: float):
        """
        :param mesh: Base surface.
        :param f: Contact hamiltonian ``alpha(X)`` per vertex.
        :param lambda_: Surface eigenvalue, ``mu^2`` when ``E = 0``.
        :param mu: Curl eigenvalue; its sign is the orientation.
        :param alpha_norm: ``||alpha||`` per vertex.
        :param gradient_sq: ``|grad f|^2`` per vertex used for the norm.
        :param fiber_length: Length ``l`` of the fibers.
        """
        self.mesh = mesh
        self.f = f
        self.lambda_ = float(lambda_)
        self.mu = float(mu)
        self.alpha_norm = alpha_norm
        self.gradient_sq = np.asarray(gradient_sq, dtype=float)
        self.fiber_length = float(fiber_length)

    def __str__(self):
        return "<tightcert.ContactFormData> {0} mu={1!r} l={2!r}".format(
            self.mesh.name, self.mu, self.fiber_length)

    @property
    def orientation(self) -> int:
        return 1 if self.mu > 0 else -1

    @property
    def volume(self) -> float:
        """Volume of ``S^1 x Sigma``."""
        return self.fiber_length * self.mesh.total_area

    def norm_identity_error(self) -> float:
        """Largest relative deviation of ``||alpha||^2`` from
        ``f^2 + |grad f|^2 / lambda``."""
        expected = self.f.values ** 2 + self.gradient_sq / self.lambda_
        actual = self.alpha_norm.values ** 2
        return float(np.max(np.abs(actual - expected) /
                            np.maximum(expected, np.finfo(float).tiny)))

    def norm_variation(self) -> float:
        """``(max - min) / mean`` of ``||alpha||``."""
        values = self.alpha_norm.values
        return float((values.max() - values.min()) / values.mean())


def _check_lift(lambda_, fiber_length, orientation):
    if not lambda_ > 0:
        raise ValidationError(
            "lift needs lambda > 0, got {0!r}".format(lambda_),
            module="contact")
    if not fiber_length > 0:
        raise ValidationError("fiber length must be positive",
                              module="contact")
    if orientation not in (1, -1):
        raise ValidationError("orientation must be +1 or -1",
                              module="contact")


def lift_from_samples(mesh: TriangleMesh, values, gradient_sq,
                      lambda_: float, fiber_length: float,
                      orientation: int = 1) -> ContactFormData:
    """Lift from sampled ``f`` and exactly known ``|grad f|^2``."""
    _check_lift(lambda_, fiber_length, orientation)
    f = values if isinstance(values, ScalarField) else\
        ScalarField(mesh, values)
    gradient_sq = np.asarray(gradient_sq, dtype=float)
    norm = np.sqrt(f.values ** 2 + gradient_sq / lambda_)
    return ContactFormData(
        mesh, f, lambda_, orientation * math.sqrt(lambda_),
        ScalarField(mesh, norm), gradient_sq, fiber_length)


def lift_to_beltrami(eigenpair: EigenPair, fiber_length: float,
                     orientation: int = 1) -> ContactFormData:
    """Lifts an eigenpair to the S^1-invariant curl eigenfield with
    ``mu = orientation * sqrt(lambda)``.

    ``|grad f|^2`` is the piecewise linear gradient, averaged per vertex
    with lumped area weights.
    """
    _check_lift(eigenpair.lambda_, fiber_length, orientation)
    mesh = eigenpair.f.mesh
    gradient_sq = vertex_gradient_sq(mesh, eigenpair.f.values)
    form = lift_from_samples(mesh, eigenpair.f, gradient_sq,
                             eigenpair.lambda_, fiber_length, orientation)
    logger.debug("Lifted %s", form)
    return form


def nonvanishing_check(form: ContactFormData, tol: float = None,
                       configuration=None, **kwargs) -> NonvanishingCheck:
    """True iff ``min ||alpha|| > tol * mean ||alpha||``."""
    if tol is None:
        tol = get_configuration(configuration, kwargs).nonvanishing_tol
    values = form.alpha_norm.values
    vertex = int(np.argmin(values))
    mean = float(values.mean())
    return NonvanishingCheck(
        bool(values[vertex] > tol * mean), float(values[vertex]), vertex, mean)


def laplace_log_norm(form: ContactFormData, ops=None):
    """``Delta ln ||alpha||`` per vertex, lumped mass inverse times
    stiffness."""
    values = form.alpha_norm.values
    if np.any(values <= 0):
        raise ValidationError(
            "||alpha|| vanishes at vertex {0}".format(
                int(np.argmin(values))), module="contact")
    if ops is None:
        ops = assemble(form.mesh)
    return ops.apply_laplacian(np.log(values))


def compute_m_alpha(form: ContactFormData,
                    variant: MAlphaVariant = MAlphaVariant.MAIN,
                    curvature: CurvatureField = None, E: float = 0.0,
                    ops=None, configuration=None, **kwargs) -> float:
    """``max(0, max_v Delta ln ||alpha||)``; the VER2 variant adds the
    pointwise curvature ``K`` (which equals ``kappa_E + 3/4 E^2``).

    Pointwise values of magnitude below ``noise_floor`` count as zero.
    """
    configuration = get_configuration(configuration, kwargs)
    values = laplace_log_norm(form, ops)
    if MAlphaVariant(variant) is MAlphaVariant.VER2:
        if curvature is None:
            curvature = discrete_curvature(form.mesh)
        values = values + curvature.pointwise_curvature
    values = np.where(np.abs(values) < configuration.noise_floor, 0.0, values)
    return max(0.0, float(values.max()))


def mu_from_lambda_E(lambda_: float, E: float) -> float:
    """Positive root of ``mu^2 - E mu - lambda = 0``."""
    if not lambda_ > 0:
        raise ValidationError("lambda must be positive", module="contact")
    return (E + math.sqrt(E * E + 4.0 * lambda_)) / 2.0


def euler_constant(euler_number: int, area: float) -> float:
    """``E = 2 pi e / Vol(Sigma)``."""
    return 2.0 * math.pi * euler_number / area


class CertificateInput(object):

    def __init__(self, cover_degree: int = 1, euler_number: int = 0,
                 fiber_length_min: float = None, constant_E: float = None):
        """
        :param cover_degree: Degree k of the covering bundle.
        :param euler_number: Euler number e of the fibration.
        :param fiber_length_min: Lower bound on fiber lengths; defaults to
            the form's fiber length.
        :param constant_E: Constant E; derived from ``euler_number`` and
            the surface area when not given.
        """
        if int(cover_degree) != cover_degree or cover_degree < 1:
            raise ValidationError("cover degree must be an integer >= 1",
                                  module="contact")
        if fiber_length_min is not None and not fiber_length_min > 0:
            raise ValidationError("fiber_length_min must be positive",
                                  module="contact")
        self.cover_degree = int(cover_degree)
        self.euler_number = int(euler_number)
        self.fiber_length_min = fiber_length_min
        self.constant_E = constant_E

    @classmethod
    def from_configuration(cls, configuration=None, **kwargs):
        configuration = get_configuration(configuration, kwargs)
        return cls(configuration.cover_degree, configuration.euler_number,
                   configuration.fiber_length_min)

    @property
    def is_product(self) -> bool:
        return self.cover_degree == 1 and self.euler_number == 0 and\
            not self.constant_E

    def resolve_E(self, area: float) -> float:
        if self.constant_E is not None:
            return float(self.constant_E)
        return euler_constant(self.euler_number, area)

    def resolve_fiber_length_min(self, fiber_length: float) -> float:
        if self.fiber_length_min is None:
            return fiber_length
        return float(self.fiber_length_min)


def _json_number(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


class Criterion(object):

    def __init__(self, name: str, reference: str, lhs, rhs, passed: bool,
                 applicable: bool = True, role: str = SUFFICIENT,
                 note: str = None):
        """
        :param name: Stable identifier.
        :param reference: What the criterion states.
        :param lhs: Evaluated left-hand side.
        :param rhs: Evaluated right-hand side (None when unbounded).
        :param passed: Whether the inequality holds.
        :param applicable: Whether all hypotheses of the criterion hold.
        :param role: SUFFICIENT, CHARACTERIZATION or INFORMATIONAL.
        """
        self.name = name
        self.reference = reference
        self.lhs = lhs
        self.rhs = rhs
        self.passed = bool(passed)
        self.applicable = bool(applicable)
        self.role = role
        self.note = note

    def __str__(self):
        return "<tightcert.Criterion> {0} pass={1} applicable={2}".format(
            self.name, self.passed, self.applicable)

    @property
    def margin(self) -> Optional[float]:
        lhs, rhs = _json_number(self.lhs), _json_number(self.rhs)
        if lhs is None or rhs is None:
            return None
        return rhs - lhs

    def to_json_dict(self) -> Dict:
        result = {
            "name": self.name,
            "paper_ref": self.reference,
            "lhs": _json_number(self.lhs),
            "rhs": _json_number(self.rhs),
            "margin": self.margin,
            "pass": self.passed,
            "applicable": self.applicable,
            "role": self.role,
        }
        if self.note:
            result["note"] = self.note
        return result


class Precondition(object):

    def __init__(self, name: str, passed: bool, value=None, note: str = None):
        self.name = name
        self.passed = bool(passed)
        self.value = value
        self.note = note

    def to_json_dict(self) -> Dict:
        result = {"name": self.name, "pass": self.passed,
                  "value": _json_number(self.value)}
        if self.note:
            result["note"] = self.note
        return result


class Certificate(object):

    def __init__(self, verdict: str, criteria: List[Criterion],
                 preconditions: List[Precondition],
                 conflicts: List[str] = None, notes: List[str] = None):
        self.verdict = verdict
        self.criteria = criteria
        self.preconditions = preconditions
        self.conflicts = conflicts or []
        self.notes = notes or []

    def __str__(self):
        return "<tightcert.Certificate> {0}".format(self.verdict)

    @property
    def consistency_failure(self) -> bool:
        return bool(self.conflicts)

    def criterion(self, name: str) -> Criterion:
        for criterion in self.criteria:
            if criterion.name == name:
                return criterion
        raise KeyError(name)

    def precondition(self, name: str) -> Precondition:
        for precondition in self.preconditions:
            if precondition.name == name:
                return precondition
        raise KeyError(name)

    def to_json_dict(self) -> Dict:
        result = {
            "verdict": self.verdict,
            "criteria": [c.to_json_dict() for c in self.criteria],
            "preconditions": [p.to_json_dict() for p in self.preconditions],
            "notes": list(self.notes),
        }
        if self.conflicts:
            result["reasons"] = [
                {"name": CONSISTENCY_FAILURE, "conflicting": self.conflicts}]
        return result


def tubular_bound(form: ContactFormData, mesh: TriangleMesh = None,
                  curvature: CurvatureField = None, ops=None,
                  configuration=None, **kwargs) -> TubularBound:
    """``max Delta ln ||alpha|| < 2 pi / Vol(Sigma)``, applicable when the
    surface curvature is nonpositive."""
    configuration = get_configuration(configuration, kwargs)
    mesh = mesh or form.mesh
    if curvature is None:
        curvature = discrete_curvature(mesh)
    values = laplace_log_norm(form, ops)
    values = np.where(np.abs(values) < configuration.noise_floor, 0.0, values)
    lhs = float(values.max())
    rhs = 2.0 * math.pi / mesh.total_area
    nonpositive = bool(
        curvature.pointwise_curvature.max() <= configuration.curvature_tol)
    return TubularBound(lhs, rhs, lhs < rhs, nonpositive, nonpositive)


def disc_domain_balance(form: ContactFormData,
                        decomposition: NodalDecomposition,
                        m_alpha: float = None, ops=None) -> List[DiscBalance]:
    """For every disc domain, ``int K + int Delta ln ||alpha||`` over the
    domain (which is ``2 pi`` for genuine contact data) next to the bound
    ``area * m_alpha``."""
    values = laplace_log_norm(form, ops) * (
        ops.lumped_mass if ops is not None else assemble(form.mesh).lumped_mass)
    base = decomposition.original_vertex_count
    report = []
    for domain in decomposition.domains:
        if not domain.is_disc:
            continue
        vertices = domain.vertices[domain.vertices < base]
        log_norm = float(values[vertices].sum())
        total = domain.curvature_integral + log_norm
        bound = None if m_alpha is None else m_alpha * domain.area
        report.append(DiscBalance(domain.index, domain.curvature_integral,
                                  log_norm, total, bound))
    return report


def _volume_ratio_bound(length_min, m_alpha, cover_degree):
    if m_alpha <= 0:
        return math.inf
    return 2.0 * math.pi * length_min / (m_alpha * cover_degree)


def certify(form: ContactFormData, decomposition: NodalDecomposition,
            curvature: CurvatureField = None,
            certificate_input: CertificateInput = None, configuration=None,
            **kwargs) -> Certificate:
    """Evaluates every tightness criterion on a lifted contact form.

    Giroux's criterion decides the verdict: on a surface of genus >= 1 the
    structure is universally tight iff no nodal domain is a disc; on the
    sphere it is iff the dividing set is empty (e < 0) or connected
    (e >= 0). The volume bounds are evaluated and reported with margins
    whether or not the verdict is already settled; a passing sufficient
    bound on an instance Giroux declares not universally tight is a
    consistency failure and makes the verdict INCONCLUSIVE.

    :param form: The lifted form.
    :param decomposition: Nodal decomposition of ``form.f``.
    :param curvature: Curvature of the base mesh (computed when omitted).
    :param certificate_input: Cover degree, Euler number, minimal fiber
        length. Defaults to the product case built from the configuration.
    :param configuration: An optional Configuration instance.
    :param kwargs: Optional configuration parameters.
    :raises MeshMismatchError: The decomposition or the curvature does not
        belong to the form's mesh.
    """
    configuration = get_configuration(configuration, kwargs)
    mesh = form.mesh
    if decomposition.mesh is not mesh and not (
            decomposition.mesh.vertex_count == mesh.vertex_count and
            np.array_equal(decomposition.mesh.faces, mesh.faces)):
        raise MeshMismatchError(
            "decomposition and contact form live on different meshes")
    if curvature is None:
        curvature = discrete_curvature(mesh)
    if curvature.vertex_defect.shape[0] != mesh.vertex_count:
        raise MeshMismatchError(
            "curvature has {0} values for {1} vertices".format(
                curvature.vertex_defect.shape[0], mesh.vertex_count))
    if certificate_input is None:
        certificate_input = CertificateInput.from_configuration(configuration)

    area = mesh.total_area
    chi = mesh.euler_characteristic
    length = form.fiber_length
    length_min = certificate_input.resolve_fiber_length_min(length)
    k = certificate_input.cover_degree
    e = certificate_input.euler_number
    E = certificate_input.resolve_E(area)
    volume = length * area
    notes = []
    if certificate_input.is_product:
        mu = form.mu
    else:
        mu = math.copysign(mu_from_lambda_E(form.lambda_, E), form.mu)
        notes.append(
            "non-product invariants (k={0}, e={1}) evaluated formally; the "
            "existence of such a fibration is not checked".format(k, e))

    ops = assemble(mesh)
    nonvanishing = nonvanishing_check(form, configuration=configuration)
    max_curvature = float(curvature.pointwise_curvature.max())
    nonpositive = max_curvature <= configuration.curvature_tol
    existence = mu * (mu - E)
    variation = form.norm_variation()
    constant_norm = variation <= configuration.constant_norm_rtol
    preconditions = [
        Precondition("nonvanishing", nonvanishing.nonvanishing,
                     nonvanishing.min_norm,
                     "min ||alpha|| at vertex {0}".format(nonvanishing.vertex)),
        Precondition("curvature_nonpositive", nonpositive, max_curvature),
        Precondition("contact_existence", existence >= 0, existence,
                     "strict: fillable by tori" if existence > 0 else None),
        Precondition("nonzero_genus", chi <= 0, chi),
        Precondition("constant_norm", constant_norm, variation),
        Precondition("product", certificate_input.is_product, None),
    ]
    contact = nonvanishing.nonvanishing

    disc_count = sum(1 for d in decomposition.domains if d.is_disc)
    curve_count = len(decomposition.dividing_set)
    criteria = []
    if chi <= 0:
        giroux = Criterion(
            "giroux_no_disc_domain",
            "universally tight iff no component of Sigma minus Gamma is a "
            "disc", disc_count, 0, disc_count == 0,
            applicable=contact, role=CHARACTERIZATION)
        possible = disc_count == 0 or (curve_count == 1 and e > 0)
    elif e < 0:
        giroux = Criterion(
            "giroux_sphere_empty_dividing_set",
            "on S^2 with e < 0: universally tight iff Gamma is empty",
            curve_count, 0, curve_count == 0,
            applicable=contact, role=CHARACTERIZATION)
        possible = curve_count == 0
    else:
        giroux = Criterion(
            "giroux_sphere_connected_dividing_set",
            "on S^2 with e >= 0: universally tight iff Gamma is connected",
            curve_count, 1, curve_count == 1,
            applicable=contact, role=CHARACTERIZATION)
        possible = curve_count == 1
    criteria.append(giroux)
    criteria.append(Criterion(
        "tight_with_discs_possible",
        "tightness is possible only if Gamma has no disc complement or is a "
        "single circle with positive Euler number", disc_count, None,
        possible, applicable=contact, role=INFORMATIONAL))

    m_main = compute_m_alpha(form, MAlphaVariant.MAIN, curvature, E, ops=ops,
                             configuration=configuration)
    m_curv = compute_m_alpha(form, MAlphaVariant.VER2, curvature, E, ops=ops,
                             configuration=configuration)
    bound_main = _volume_ratio_bound(length_min, m_main, k)
    bound_curv = _volume_ratio_bound(length_min, m_curv, k)
    criteria.append(Criterion(
        "volume_bound_log_norm",
        "Vol(M) < 2 pi l_min / (m k), m = max(0, Delta ln ||alpha||), "
        "needs K <= 0", volume, bound_main, volume < bound_main,
        applicable=contact and nonpositive and existence >= 0,
        note="m={0!r}".format(m_main)))
    criteria.append(Criterion(
        "volume_bound_log_norm_curvature",
        "Vol(M) < 2 pi l_min / (m k), m = max(0, Delta ln ||alpha|| + K), "
        "needs genus >= 1", volume, bound_curv, volume < bound_curv,
        applicable=contact and chi <= 0, note="m={0!r}".format(m_curv)))

    scaled_lhs = mu * mu * k * volume / length
    scaled_rhs = 4.0 * math.pi + 2.0 * math.pi * e * k * abs(mu)
    criteria.append(Criterion(
        "constant_norm_volume_bound",
        "mu^2 k Vol(M) / l < 4 pi + 2 pi e k |mu|, needs constant ||alpha|| "
        "and K <= 0", scaled_lhs, scaled_rhs, scaled_lhs < scaled_rhs,
        applicable=contact and nonpositive and constant_norm))
    product_lhs = mu * mu * volume / length
    criteria.append(Criterion(
        "product_volume_bound",
        "mu^2 Vol(M) / l < 4 pi on S^1 x Sigma, needs K <= 0",
        product_lhs, 4.0 * math.pi, product_lhs < 4.0 * math.pi,
        applicable=contact and nonpositive and certificate_input.is_product))
    criteria.append(Criterion(
        "constant_norm_nonpositive_curvature",
        "constant ||alpha|| on a surface with K <= 0 is universally tight",
        variation, configuration.constant_norm_rtol, constant_norm,
        applicable=contact and nonpositive and constant_norm))
    transverse = abs(mu - E) <= REEB_TRANSVERSE_RTOL * max(1.0, abs(mu))
    criteria.append(Criterion(
        "reeb_transverse",
        "mu = E with genus >= 1: the Reeb field is transverse to the fibers",
        mu, E, transverse, applicable=contact and chi <= 0 and transverse))
    tubular = tubular_bound(form, mesh, curvature, ops=ops,
                            configuration=configuration)
    criteria.append(Criterion(
        "tubular_neighborhood_bound",
        "max Delta ln ||alpha|| < 2 pi / Vol(Sigma), needs K <= 0",
        tubular.lhs, tubular.rhs, tubular.passed,
        applicable=contact and tubular.applicable, role=INFORMATIONAL))

    conflicts = []
    if not contact:
        verdict = INCONCLUSIVE
        notes.append("alpha vanishes; the lift is not a contact form")
    else:
        verdict = UNIVERSALLY_TIGHT if giroux.passed else NOT_UNIVERSALLY_TIGHT
        if not giroux.passed:
            conflicts = [c.name for c in criteria
                         if c.role == SUFFICIENT and c.applicable and c.passed]
            if conflicts:
                logger.warning(
                    "Sufficient criteria %s pass on an instance with %s "
                    "failing", conflicts, giroux.name)
                verdict = INCONCLUSIVE

    certificate = Certificate(verdict, criteria, preconditions, conflicts,
                              notes)
    logger.info("Certified %s: %s", mesh.name, verdict)
    for criterion in criteria:
        logger.debug("%s", criterion)
    return certificate


def certify_eigenpair(eigenpair: EigenPair, decomposition=None,
                      configuration=None, **kwargs) -> Certificate:
    """Lifts ``eigenpair`` and certifies the result, decomposing its
    eigenfunction when no decomposition is given."""
    configuration = get_configuration(configuration, kwargs)
    form = lift_to_beltrami(eigenpair, configuration.fiber_length)
    if decomposition is None:
        decomposition = decompose(eigenpair.f, configuration)
    return certify(form, decomposition, configuration=configuration)


__all__ = [
    "ContactFormData", "CertificateInput", "Certificate", "Criterion",
    "Precondition", "MAlphaVariant", "lift_to_beltrami", "lift_from_samples",
    "nonvanishing_check", "compute_m_alpha", "mu_from_lambda_E", "certify",
    "tubular_bound", "disc_domain_balance", "euler_constant",
    "laplace_log_norm", "certify_eigenpair",
]
