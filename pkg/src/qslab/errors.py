"""Exception types. Each maps onto a CLI exit code in qslab.cli."""


class QslabError(Exception):
    exit_code = 2


class DegenerateForm(QslabError):
    pass


class DimensionMismatch(QslabError, ValueError):
    pass


class ZeroVector(QslabError, ValueError):
    pass


class BadPrime(QslabError):
    pass


class EmptyOmega(QslabError):
    pass


class SingularBasePoint(QslabError):
    pass


class NotOnDivisor(QslabError, ValueError):
    pass


class OmegaOne(QslabError):
    pass


class InvalidAction(QslabError):
    pass


class NonConvergence(QslabError):
    pass


class ConfigError(QslabError):
    pass


class OracleFailure(QslabError):
    def __init__(self, msg, x=None, p=None):
        super().__init__(msg)
        self.x = x
        self.p = p


class ResourceLimit(QslabError):
    exit_code = 3
