"""Exception hierarchy shared by all modules."""


class BictxError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BictxError, ValueError):
    """An input lies outside the domain an operation accepts."""


class SourceDependenceError(DomainError):
    """Observable-level independence of the two sources is violated."""


class NoDisturbanceError(BictxError, ValueError):
    """Setting tables disagree on a shared marginal.

    The offending :class:`~bictx.behavior.NoDisturbanceReport` is kept on
    ``report``.
    """

    def __init__(self, report):
        self.report = report
        super().__init__(report.describe())


class ContractError(BictxError, RuntimeError):
    """An operation was called outside its precondition."""


class ConstructionError(BictxError, ValueError):
    """A derived object cannot be built from the given data."""


class PreconditionError(ContractError):
    """Inputs do not satisfy a stated precondition (e.g. a bisection bracket)."""
