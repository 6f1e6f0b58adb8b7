"""Exception hierarchy shared by every module."""


class SSMError(Exception):
    """Base class for all library errors."""


class DomainError(SSMError, ValueError):
    """An input lies outside its valid domain (hash rates, indices, ranges)."""


class SizeLimitError(DomainError):
    """A requested state space or game is larger than supported."""


class PropagationTableError(DomainError):
    """A propagation table is missing an entry or violates its invariants."""


class NumericalError(SSMError, ArithmeticError):
    """A linear solve or search failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SimulationError(SSMError, RuntimeError):
    """A miner automaton reached a state its strategy forbids."""


class SettlementError(SimulationError):
    """Forks left at the end of a run could not be settled."""
