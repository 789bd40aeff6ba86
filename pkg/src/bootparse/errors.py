"""Exception types and warning categories shared across the package."""


class BootparseError(Exception):
    """Base class for errors raised by this package."""


class TreeSyntaxError(BootparseError):
    """Malformed bracketed-tree input."""


class UnbalancedBrackets(TreeSyntaxError):
    pass


class EmptyTree(TreeSyntaxError):
    pass


class EmptyLabel(TreeSyntaxError):
    pass


class AllTokensRemoved(BootparseError):
    """Normalization removed every token of a sentence."""


class EmptyCorpus(BootparseError):
    """No usable sentences were found in an input file."""


class SingleClassInput(BootparseError):
    """A training set is empty or contains only one class."""


class TooLarge(BootparseError):
    """Exhaustive tree enumeration requested beyond the size guard."""


class YieldMismatch(BootparseError):
    """Predicted and gold trees disagree on the token sequence."""


class LengthMismatch(BootparseError):
    """Two aligned collections differ in length."""


class NonterminatingGrammar(BootparseError):
    """Grammar sampling kept exceeding the derivation depth guard."""


class ExternalScorerError(BootparseError):
    """An external scorer process timed out, died, or wrote garbage."""


class ConfigError(BootparseError):
    """Invalid run configuration: bad file, unknown key, or bad value."""


class PoolExhaustedWarning(UserWarning):
    """A confidence pool held fewer spans than were requested from it."""


class UndefinedMccWarning(UserWarning):
    """A confusion-matrix marginal is zero; MCC is reported as 0."""
