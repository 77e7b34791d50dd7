"""Exception types shared across the package."""


class PswError(Exception):
    """Base class for all errors raised by this package."""


class NonTerminatingPresentation(PswError):
    """Relation closure of a category presentation exceeded its bound."""


class InvalidRelation(PswError):
    """A relation equates words with distinct endpoints (or is malformed)."""


class UnknownObject(PswError):
    """An object label is not part of the site."""


class NotMono(PswError):
    """A map required to be a levelwise injection is not one."""


class DimensionBudgetExceeded(PswError):
    """A construction needs cells above the site truncation or a configured bound."""


class NoFiller(PswError):
    """A construction-required lifting problem has no solution."""


class HypothesisFailure(PswError):
    """A named precondition of a construction failed validation."""

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        self.detail = detail
        super().__init__(f"{name}: {detail}" if detail else name)


class PostconditionFailure(PswError):
    """A postcondition that must hold on valid input failed; construction bug sentinel."""


class FormatError(PswError):
    """A text input file does not conform to its format."""
