"""Exception hierarchy shared by every pipeline stage."""


class CtxDepError(Exception):
    """Base class for errors raised by this package."""

    exit_code = 1


class InputError(CtxDepError, ValueError):
    """Arguments violate an operation's preconditions."""


class FormatError(InputError):
    """Input file does not look like the declared format."""


class ConfigError(CtxDepError, ValueError):
    """Configuration failed validation; ``path`` names the offending field."""

    exit_code = 2

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class DependencyError(CtxDepError):
    """A stage ran before the stage producing its inputs."""

    exit_code = 3

    def __init__(self, stage, missing):
        super().__init__(f"missing {missing}; run stage '{stage}' first")
        self.stage = stage
        self.missing = missing


class DivergenceError(CtxDepError, ArithmeticError):
    """Training produced a non-finite loss."""

    exit_code = 4

    def __init__(self, epoch):
        super().__init__(
            f"non-finite training loss at epoch {epoch}; try a lower learning_rate"
        )
        self.epoch = epoch


class DegenerateDistribution(InputError):
    """Every response token of a group was filtered out."""


class VocabularyError(InputError, IndexError):
    """Token id outside the vocabulary."""


class AlignmentError(InputError):
    """POS tags do not line up with message tokens."""
