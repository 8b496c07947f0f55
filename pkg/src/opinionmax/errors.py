"""Exception hierarchy.

Every error carries the process exit code the CLI should use for it.
"""


class OpinionMaxError(Exception):
    exit_code = 1


class ConfigError(OpinionMaxError, ValueError):
    """Bad parameters or an infeasible request."""

    exit_code = 2


class DataError(OpinionMaxError, ValueError):
    """Malformed or unusable input graph."""

    exit_code = 3


class NumericalError(OpinionMaxError, ArithmeticError):
    exit_code = 4


# graph input
class EmptyInput(DataError):
    pass


class SelfLoop(DataError):
    pass


class DuplicateEdge(DataError):
    pass


class DisconnectedGraph(DataError):
    pass


class EdgeListFormatError(DataError):
    pass


# partition / parameters
class UnknownNode(ConfigError):
    pass


class OverlappingLeaderSets(ConfigError):
    pass


class EmptyS0(ConfigError):
    pass


class EmptyS1(ConfigError):
    pass


class NoFollowers(ConfigError):
    pass


class TooManyLeaders(ConfigError):
    pass


class EtaOutOfRange(ConfigError):
    pass


class EpsOutOfRange(ConfigError):
    pass


class SizeCapExceeded(ConfigError):
    pass


class CombinatorialBlowup(ConfigError):
    pass


# numerics
class NoConvergence(NumericalError):
    pass


class InverseCheckFailed(NumericalError):
    pass
