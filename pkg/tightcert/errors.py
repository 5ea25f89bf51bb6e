"""Exceptions raised by tightcert.

Every error knows the module it comes from so that the command line can
print module-qualified messages.
"""


class TightcertError(Exception):

    module = "tightcert"

    def __init__(self, message: str, module: str = None, **details):
        """
        :param message: Human readable description.
        :param module: Name of the raising module. Defaults to the class
            attribute.
        :param details: Extra diagnostic values (indices, residuals...).
        """
        super(TightcertError, self).__init__(message)
        self.message = message
        if module is not None:
            self.module = module
        self.details = details

    def __str__(self):
        return "{0}: {1}".format(self.module, self.message)


class ValidationError(TightcertError, ValueError):
    """Invalid input: bad parameters, malformed files, invalid meshes."""


class ConfigurationError(ValidationError):
    module = "configuration"


class MeshParseError(ValidationError):
    module = "surface"

    def __init__(self, message, line=None, **details):
        if line is not None:
            message = "line {0}: {1}".format(line, message)
        super(MeshParseError, self).__init__(message, line=line, **details)
        self.line = line


class OpenSurfaceError(ValidationError):
    module = "surface"


class NonManifoldEdgeError(ValidationError):
    module = "surface"


class NonOrientableError(ValidationError):
    module = "surface"


class DisconnectedMeshError(ValidationError):
    module = "surface"


class TriangleInequalityError(ValidationError):
    module = "surface"


class DegenerateTriangleError(ValidationError):
    module = "spectral"


class TrivialFieldError(ValidationError):
    module = "nodal"


class SingularNodalSetError(ValidationError):
    module = "nodal"


class MeshMismatchError(ValidationError):
    module = "contact"


class DegenerateFieldError(ValidationError):
    module = "torus3"


class NonManifoldSurfaceError(ValidationError):
    module = "torus3"


class LayoutError(ValidationError):
    module = "svg"


class ConvergenceError(TightcertError):
    module = "spectral"

    def __init__(self, message, residuals=None, **details):
        super(ConvergenceError, self).__init__(
            message, residuals=residuals, **details)
        self.residuals = residuals
