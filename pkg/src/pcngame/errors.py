"""Exception hierarchy shared by every module."""


class PcnError(ValueError):
    """Base class for all library errors."""


class UnknownNode(PcnError):
    pass


class SelfLoop(PcnError):
    pass


class NegativeBalance(PcnError):
    pass


class DuplicateNode(PcnError):
    pass


class SameNode(PcnError):
    pass


class SingletonGraph(PcnError):
    pass


class GraphFormatError(PcnError):
    pass


class BudgetExceeded(PcnError):
    pass


class EmptyBudget(PcnError):
    pass


class DivisionSpaceTooLarge(PcnError):
    pass


class NoFeasibleCandidate(PcnError):
    pass


class SpaceTooLarge(PcnError):
    pass


class TooLarge(PcnError):
    pass


class BadSize(PcnError):
    pass
