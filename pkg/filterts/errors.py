class DimensionError(ValueError):
    """Shapes or axes that do not line up."""


class ContractError(ValueError):
    """A precondition of an operation does not hold."""


class CSVParseError(ValueError):
    """A dataset file that cannot be read cell by cell."""


class ConfigError(ValueError):
    """Unknown or invalid configuration value; the message names the key path."""


class NonFiniteError(RuntimeError):
    """NaN or inf showed up in a loss or a gradient."""
