"""
Exception hierarchy shared by the library modules and the CLI.

Each class corresponds to one error kind of the verification artifact; the CLI maps
them to process exit codes with exit_code_for().
"""

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


class ReturnProbeError(Exception):
    """Base class for all errors raised by returnprobe."""

    exit_code = EXIT_CHECK_FAILED


class InvalidArgumentError(ReturnProbeError, ValueError):
    """A parameter is outside the range an operation accepts."""

    exit_code = EXIT_USAGE


class PreconditionViolatedError(ReturnProbeError, ValueError):
    """Inputs are well-formed but a theorem's hypothesis does not hold."""

    exit_code = EXIT_USAGE


class FamilyMismatchError(ReturnProbeError, ValueError):
    """A check was requested for a percolation family it does not apply to."""

    exit_code = EXIT_USAGE


class SizeExceededError(ReturnProbeError):
    """A dense or brute-force computation was asked for beyond its cap."""

    exit_code = EXIT_RESOURCE


class DegenerateSpectrumError(ReturnProbeError):
    """The spectrum has no gap (disconnected graph)."""


class FitUnreliableError(ReturnProbeError):
    """A regression was carried out but its quality is too poor to judge."""


class InsufficientDataError(ReturnProbeError):
    """Not enough points survived filtering to carry out a fit."""


class ConfigError(ReturnProbeError):
    """The experiment configuration could not be parsed or validated."""

    exit_code = EXIT_USAGE


def exit_code_for(exc: BaseException) -> int:
    """
    Returns the CLI exit code for an exception.

    Args:
        exc (BaseException): the exception that stopped a command.

    Returns:
        int: 1 for check-type failures, 2 for usage/config errors, 3 for caps.
    """
    if isinstance(exc, ReturnProbeError):
        return exc.exit_code
    return EXIT_CHECK_FAILED
