"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class HitEnrichError(Exception):
    exit_code = 1


class ValidationError(HitEnrichError, ValueError):
    """Bad argument or out-of-domain parameter."""

    exit_code = 2


class DataError(HitEnrichError, ValueError):
    """Input data cannot be used as given."""

    exit_code = 3


class SchemaError(DataError):
    """A required column or algorithm name is missing."""


class ParseError(DataError):
    """A cell could not be parsed; message names row and column."""


class DegenerateClassError(DataError):
    """All ligands active, or none."""


class NumericalDegeneracyError(HitEnrichError, ArithmeticError):
    """Zero standard error with a nonzero difference, or similar."""

    exit_code = 4
