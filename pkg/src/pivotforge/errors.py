"""Toolkit-wide exception classes, mapped to CLI exit codes."""


class PivotforgeError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 4


class UsageError(PivotforgeError):
    """Bad invocation: unknown option, missing argument, invalid parameter."""

    exit_code = 1


class FormatError(PivotforgeError):
    """Malformed input file (parse errors, schema violations)."""

    exit_code = 2


class IntegrityError(PivotforgeError):
    """Inputs are well-formed but mutually inconsistent (broken joins, count order)."""

    exit_code = 3
