"""Exception types shared across the package."""


class FairyError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(FairyError, ValueError):
    """A schema file or schema-constrained record is invalid."""


class GraphError(FairyError, ValueError):
    """A graph operation received inconsistent or missing data."""


class PathCapExceeded(FairyError, RuntimeError):
    """Path enumeration hit the hard cap; results would be truncated."""

    def __init__(self, cap: int):
        super().__init__(f"more than {cap} explanation paths for this pair; "
                         f"raise the cap or lower max_len")
        self.cap = cap


class LayoutError(FairyError, ValueError):
    """Feature vectors with incompatible layouts were mixed."""


class DuplicateJudgmentError(FairyError, ValueError):
    """The same (pair, judge, aspect) judgment was submitted twice."""
