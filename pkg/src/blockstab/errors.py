"""Exception types shared across the package."""


class BlockstabError(Exception):
    """Base class for package-specific failures."""


class ConfigError(BlockstabError):
    """Invalid run configuration. Carries one message per violated field."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class DataError(BlockstabError):
    """Input data cannot be used (parse failure, non-finite values, bad columns)."""


class NumericalError(BlockstabError):
    """A numerical procedure failed or a target is infeasible."""


class StabilityRunError(NumericalError):
    """A subsample fit failed inside the stability loop."""

    def __init__(self, iteration, message):
        self.iteration = iteration
        super().__init__(f"stability iteration {iteration}: {message}")
