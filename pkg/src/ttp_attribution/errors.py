"""Exception hierarchy.

Every error raised on purpose by the package derives from ``AttributionError``
so callers (the CLI in particular) can separate domain failures from bugs.
"""


class AttributionError(Exception):
    """Base class for all domain errors."""


class MalformedId(AttributionError, ValueError):
    pass


class ConfigError(AttributionError, ValueError):
    pass


class UnknownTechnique(AttributionError, LookupError):
    def __init__(self, technique):
        super().__init__(
            f"technique {technique} is not in the phase-map catalog; supply a tactic hint"
        )
        self.technique = technique


class EmptyInput(AttributionError, ValueError):
    pass


class LengthCap(AttributionError, ValueError):
    pass


class ArithmeticOverflow(AttributionError, OverflowError):
    pass


class EmptyGroup(AttributionError, ValueError):
    pass


class EmptyBaseline(AttributionError, ValueError):
    pass


class BadWindow(AttributionError, ValueError):
    pass


class ParseError(AttributionError, ValueError):
    def __init__(self, message, locus=None):
        super().__init__(f"{locus}: {message}" if locus is not None else message)
        self.locus = locus


class EmptyDataset(AttributionError, ValueError):
    pass


class GroupTooSmall(AttributionError, ValueError):
    pass


class VersionMismatch(AttributionError, ValueError):
    pass


class CorruptFile(AttributionError, ValueError):
    pass


class UnknownLabel(AttributionError, ValueError):
    pass


class BadSpec(AttributionError, ValueError):
    pass
