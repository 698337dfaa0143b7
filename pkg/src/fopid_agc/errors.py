"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter block violates one of its invariants.

    ``path`` is the dotted key path of the offending entry when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class InfeasibleGenomeError(ValueError):
    """Controller parameters outside the feasible region (negative gain or order)."""
