"""Command line front end.

Every subcommand writes one JSON report (to ``--out`` or stdout) that embeds
the full run configuration and the package version.
"""
import argparse
import json
import logging
import math
import sys
from typing import Dict, List

from tightcert import __version__
from tightcert.configuration import (
    Configuration, get_configuration_from_environment)
from tightcert.contact import (
    CertificateInput, certify, compute_m_alpha, disc_domain_balance,
    lift_to_beltrami, MAlphaVariant)
from tightcert.errors import (
    ConvergenceError, LayoutError, TightcertError, ValidationError)
from tightcert.nodal import (
    courant_check, decompose, disc_domain_inequality, dividing_set_geometry,
    domain_gauss_bonnet)
from tightcert.spectral import assemble, solve_lowest
from tightcert.surface import (
    SURFACE_BUILDERS, curvature_nonpositive, describe_mesh,
    discrete_curvature, load_mesh, save_mesh)

logger = logging.getLogger(__name__)


SCHEMA_VERSION = 1

EXIT_OK = 0

EXIT_VALIDATION = 2

EXIT_CONVERGENCE = 3

EXIT_CONSISTENCY = 4


class RunConfig(object):

    def __init__(self, arguments: argparse.Namespace,
                 configuration: Configuration):
        self.arguments = arguments
        self.configuration = configuration

    @property
    def subcommand(self) -> str:
        return self.arguments.command

    def to_json_dict(self) -> Dict:
        flags = {key: value for key, value in vars(self.arguments).items()
                 if key not in ("handler", "verbose")}
        flags["configuration"] = self.configuration.to_json_dict()
        return flags


def _add_surface_flags(parser):
    group = parser.add_argument_group("surface")
    group.add_argument("--surface", choices=sorted(SURFACE_BUILDERS),
                       default="flat-torus")
    group.add_argument("--mesh", help="OFF or IOFF file instead of a builder")
    group.add_argument("--nx", type=int, default=32)
    group.add_argument("--ny", type=int, default=32)
    group.add_argument("--lx", type=float, default=2.0 * math.pi)
    group.add_argument("--ly", type=float, default=2.0 * math.pi)
    group.add_argument("--subdiv", type=int, default=3)
    group.add_argument("--refinement", type=int, default=0)


def _add_spectral_flags(parser, k_default=6):
    group = parser.add_argument_group("spectrum")
    group.add_argument("--k", type=int, default=k_default)
    group.add_argument("--tol", type=float)
    group.add_argument("--seed", type=int)


def _add_nodal_flags(parser):
    group = parser.add_argument_group("nodal")
    group.add_argument("--zero-tol", type=float)
    group.add_argument("--eigen-index", type=int,
                       help="eigenpair to analyse, default k - 1")
    group.add_argument("--svg", help="write an SVG picture to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tightcert",
        description="Tightness certificates for S^1-invariant contact "
                    "structures.")
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + __version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--out", help="JSON output path, default stdout")
    parser.add_argument("--threads", type=int)
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    surface = commands.add_parser("surface", help="build or load a mesh")
    _add_surface_flags(surface)
    surface.add_argument("--save", help="write the mesh (.off or IOFF)")
    surface.set_defaults(handler=run_surface)

    spectrum = commands.add_parser("spectrum", help="lowest eigenpairs")
    _add_surface_flags(spectrum)
    _add_spectral_flags(spectrum)
    spectrum.add_argument("--values", action="store_true",
                          help="include eigenfunction values")
    spectrum.set_defaults(handler=run_spectrum)

    nodal = commands.add_parser("nodal", help="nodal domains")
    _add_surface_flags(nodal)
    _add_spectral_flags(nodal)
    _add_nodal_flags(nodal)
    nodal.set_defaults(handler=run_nodal)

    certify_parser = commands.add_parser("certify", help="tightness verdict")
    _add_surface_flags(certify_parser)
    _add_spectral_flags(certify_parser, k_default=2)
    _add_nodal_flags(certify_parser)
    group = certify_parser.add_argument_group("certificate")
    group.add_argument("--fiber-length", type=float)
    group.add_argument("--cover-degree", type=int)
    group.add_argument("--euler-number", type=int)
    group.add_argument("--l-min", type=float)
    group.add_argument("--orientation", type=int, choices=(1, -1), default=1)
    certify_parser.set_defaults(handler=run_certify)

    torus3 = commands.add_parser("torus3", help="Beltrami checks on T^3")
    torus3.add_argument("--mode", type=int, default=1)
    torus3.add_argument("--n", type=int, default=32)
    torus3.add_argument("--direction", choices=("x", "y", "z"), default="x")
    torus3.add_argument("--resolutions", type=int, nargs="+",
                        default=[16, 32, 64])
    torus3.add_argument("--zero-tol", type=float)
    torus3.add_argument("--save-field", help="write the sampled field")
    torus3.set_defaults(handler=run_torus3)
    return parser


def _configuration(arguments) -> Configuration:
    configuration = get_configuration_from_environment(
        eigen_count=getattr(arguments, "k", None),
        tol=getattr(arguments, "tol", None),
        seed=getattr(arguments, "seed", None),
        zero_tol=getattr(arguments, "zero_tol", None),
        fiber_length=getattr(arguments, "fiber_length", None),
        cover_degree=getattr(arguments, "cover_degree", None),
        euler_number=getattr(arguments, "euler_number", None),
        fiber_length_min=getattr(arguments, "l_min", None),
        threads=arguments.threads)
    return configuration.validate()


def _mesh(arguments):
    if arguments.mesh:
        return load_mesh(arguments.mesh)
    if arguments.surface == "flat-torus":
        return SURFACE_BUILDERS["flat-torus"](
            arguments.nx, arguments.ny, arguments.lx, arguments.ly)
    if arguments.surface == "icosphere":
        return SURFACE_BUILDERS["icosphere"](arguments.subdiv)
    return SURFACE_BUILDERS["genus2"](arguments.refinement)


def _spectrum(arguments, configuration):
    mesh = _mesh(arguments)
    ops = assemble(mesh)
    eigenpairs = solve_lowest(ops, configuration.eigen_count, configuration)
    return mesh, ops, eigenpairs


def _selected(arguments, eigenpairs):
    index = arguments.eigen_index
    if index is None:
        index = len(eigenpairs) - 1
    if not 0 <= index < len(eigenpairs):
        raise ValidationError(
            "--eigen-index must lie in [0, {0}]".format(len(eigenpairs) - 1),
            module="cli")
    return eigenpairs[index]


def _eigen_summary(eigenpairs) -> List[Dict]:
    return [{"index": pair.index, "lambda": pair.lambda_,
             "residual": pair.residual, "cluster": pair.cluster}
            for pair in eigenpairs]


def _write_svg(arguments, decomposition, report):
    if not arguments.svg:
        return
    from tightcert.svg import emit_svg

    try:
        text = emit_svg(decomposition)
    except LayoutError as e:
        logger.warning("%s", e)
        report["svg"] = {"written": False, "error": str(e)}
        return
    with open(arguments.svg, "w", encoding="utf-8") as handle:
        handle.write(text)
    report["svg"] = {"written": True, "path": arguments.svg}


def run_surface(arguments, configuration) -> Dict:
    mesh = _mesh(arguments)
    curvature = discrete_curvature(mesh)
    sign = curvature_nonpositive(mesh, configuration.curvature_tol, curvature)
    if arguments.save:
        save_mesh(mesh, arguments.save)
    result = describe_mesh(mesh, curvature)
    result["curvature_nonpositive"] = sign.nonpositive
    return result


def run_spectrum(arguments, configuration) -> Dict:
    _, _, eigenpairs = _spectrum(arguments, configuration)
    if arguments.values:
        return {"eigenpairs": [pair.to_json_dict() for pair in eigenpairs]}
    return {"eigenpairs": _eigen_summary(eigenpairs)}


def _decompositions(eigenpairs, configuration):
    def task(pair):
        if pair.index == 0:
            return None
        return decompose(pair.f, configuration)

    pairs = list(eigenpairs)
    if configuration.threads <= 1:
        return [task(pair) for pair in pairs]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=configuration.threads, prefer="threads")(
        delayed(task)(pair) for pair in pairs)


def run_nodal(arguments, configuration) -> Dict:
    _, _, eigenpairs = _spectrum(arguments, configuration)
    selected = _selected(arguments, eigenpairs)
    decompositions = _decompositions(eigenpairs, configuration)
    decomposition = decompositions[selected.index]
    if decomposition is None:
        decomposition = decompose(selected.f, configuration)

    report = {
        "eigenpairs": _eigen_summary(eigenpairs),
        "selected": selected.index,
        "decomposition": decomposition.to_json_dict(),
        "gauss_bonnet": [
            dict(domain_gauss_bonnet(decomposition, domain)._asdict())
            for domain in decomposition.domains],
        "disc_inequality": [
            dict(entry._asdict()) for entry in disc_domain_inequality(
                decomposition, selected.lambda_, configuration)],
        "dividing_set_geometry": [
            geometry.to_json_dict()
            for geometry in dividing_set_geometry(decomposition)],
        "courant": courant_check(
            eigenpairs, decompositions,
            configuration.cluster_rtol).to_json_dict(),
    }
    _write_svg(arguments, decomposition, report)
    return report


def run_certify(arguments, configuration) -> Dict:
    mesh, ops, eigenpairs = _spectrum(arguments, configuration)
    selected = _selected(arguments, eigenpairs)
    form = lift_to_beltrami(selected, configuration.fiber_length,
                            arguments.orientation)
    decomposition = decompose(form.f, configuration)
    curvature = discrete_curvature(mesh)
    certificate_input = CertificateInput.from_configuration(configuration)
    certificate = certify(form, decomposition, curvature, certificate_input,
                          configuration)
    m_alpha = compute_m_alpha(form, MAlphaVariant.MAIN, curvature, ops=ops,
                              configuration=configuration)
    report = {
        "eigenpairs": _eigen_summary(eigenpairs),
        "selected": selected.index,
        "mu": form.mu,
        "volume": form.volume,
        "decomposition": decomposition.to_json_dict(),
        "certificate": certificate.to_json_dict(),
        "disc_balance": [
            dict(entry._asdict()) for entry in disc_domain_balance(
                form, decomposition, m_alpha, ops)],
    }
    _write_svg(arguments, decomposition, report)
    report["exit_code"] = EXIT_CONSISTENCY if\
        certificate.consistency_failure else EXIT_OK
    return report


def run_torus3(arguments, configuration) -> Dict:
    from tightcert import torus3

    table = torus3.residual_table(
        arguments.mode, arguments.resolutions, direction=arguments.direction,
        configuration=configuration)
    field = torus3.sample_alpha_n(arguments.mode, arguments.n)
    f = torus3.contact_hamiltonian(field, arguments.direction)
    surface = torus3.characteristic_surface(f, configuration=configuration)
    if arguments.save_field:
        torus3.save_grid_field(field, arguments.save_field)
    return {
        "residuals": table,
        "characteristic_surface": surface.to_json_dict(),
        "reeb_tangency": torus3.reeb_tangency(field, f),
        "fit_mu": torus3.fit_mu(field),
    }


def _configure_logging(verbose):
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s")


def run(argv=None) -> int:
    """Parses ``argv``, runs the subcommand and returns the exit code."""
    parser = build_parser()
    arguments = parser.parse_args(argv)
    _configure_logging(arguments.verbose)
    try:
        configuration = _configuration(arguments)
        result = arguments.handler(arguments, configuration)
    except ConvergenceError as e:
        print(str(e), file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValidationError, OSError) as e:
        print(str(e), file=sys.stderr)
        return EXIT_VALIDATION
    except TightcertError as e:
        print(str(e), file=sys.stderr)
        return EXIT_VALIDATION

    exit_code = result.pop("exit_code", EXIT_OK)
    report = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "config": RunConfig(arguments, configuration).to_json_dict(),
        "result": result,
    }
    text = json.dumps(_json_safe(report), sort_keys=True, indent=2,
                      allow_nan=False, default=_json_default) + "\n"
    try:
        if arguments.out:
            with open(arguments.out, "w", encoding="utf-8") as handle:
                handle.write(text)
        else:
            sys.stdout.write(text)
    except OSError as e:
        print(str(e), file=sys.stderr)
        return EXIT_VALIDATION
    return exit_code


def _json_safe(value):
    """Replaces non-finite floats, numpy ones included, with None."""
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, float) or hasattr(value, "dtype"):
        try:
            number = float(value)
        except (TypeError, ValueError):
            return value
        if not math.isfinite(number):
            return None
    return value


def _json_default(value):
    """numpy scalars and non-finite floats."""
    try:
        value = value.item()
    except AttributeError:
        raise TypeError("{0!r} is not JSON serializable".format(value))
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
