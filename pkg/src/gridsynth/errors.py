"""Exception hierarchy shared across the package."""


class GridSynthError(Exception):
    """Base class for all library errors."""


class MalformedGrid(GridSynthError):
    """Raised when raw grid data violates the grid contract (ragged rows, bad colors)."""


class InvalidConfig(GridSynthError):
    """Raised for invalid generation or run parameters."""


class EvalError(GridSynthError):
    """Raised when a primitive cannot be applied to its runtime arguments."""


class ProgramSyntaxError(GridSynthError):
    """Raised when a token sequence does not form a well-shaped program tree."""


class ProgramTypeError(GridSynthError):
    """Raised when a structurally valid tree violates the primitive type signatures."""


class FormatError(GridSynthError):
    """Raised when an on-disk artifact (task JSON, probability table, dataset) is malformed."""


class VocabError(FormatError):
    """Raised when a probability table's vocabulary disagrees with the registry."""


class ConfigError(GridSynthError):
    """Raised when a search engine is invoked with an incompatible configuration."""
