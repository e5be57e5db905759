"""Exception hierarchy.

Every error raised by the library derives from :class:`SnvTuneError`. The CLI
maps the three broad families onto exit codes: usage (2), configuration (3)
and numerical failures (4).
"""


class SnvTuneError(Exception):
    """Base class for all library errors."""


class UsageError(SnvTuneError):
    pass


class ConfigError(SnvTuneError):
    """Configuration failed validation.

    ``violations`` holds ``(json_pointer, message)`` pairs, one per problem.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{path or '/'}: {msg}" for path, msg in self.violations]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class VersionError(ConfigError):
    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__([("/version", f"schema version {found!r} != {expected!r}")])


class NumericalError(SnvTuneError):
    """Base for failures of a numerical routine."""


# crystal frames
class DegenerateDirectionError(SnvTuneError, ValueError):
    pass


class PerpendicularityError(SnvTuneError, ValueError):
    pass


class UnsupportedOrientationError(SnvTuneError, ValueError):
    pass


class StrainRangeError(SnvTuneError, ValueError):
    pass


# hamiltonian
class FrameMismatchError(SnvTuneError, ValueError):
    pass


class NumericalHermiticityError(NumericalError):
    pass


class DegenerateQubitError(NumericalError):
    pass


# actuator
class SiteNotFoundError(SnvTuneError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class VoltageRangeError(SnvTuneError, ValueError):
    pass


# spectroscopy
class BesselDomainError(SnvTuneError, ValueError):
    pass


class FlatSpectrumError(NumericalError):
    pass


class FitDivergedError(NumericalError):
    """Least-squares refinement did not converge.

    ``best`` carries the best parameter vector seen before giving up.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UnresolvedSidebandError(NumericalError):
    pass


class AmbiguousWidthError(NumericalError):
    pass


class DegenerateAbscissaError(NumericalError):
    pass


class DivisionDomainError(NumericalError):
    pass


# spin control
class SequenceOrderError(SnvTuneError, ValueError):
    pass


# photonics
class RatioDomainError(SnvTuneError, ValueError):
    pass


class OptimizationShortfallError(NumericalError):
    pass


class TopologyError(SnvTuneError, ValueError):
    pass


class StatisticsError(NumericalError):
    pass
