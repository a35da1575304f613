"""Exception hierarchy shared by all xwfrag modules."""


class XwfragError(Exception):
    """Base class for all toolkit errors."""


class InvalidSpecError(XwfragError):
    """A generation spec or preset is malformed (bad counts, unknown dimension)."""


class MissingDocumentError(XwfragError):
    """A required warehouse document is absent from the directory."""


class MalformedXmlError(XwfragError):
    """An XML document could not be parsed or has an unexpected shape."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f" in {path}"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{message}{where}")


class IntegrityError(XwfragError):
    """Referential integrity violations found where a valid warehouse is required."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"{len(self.violations)} integrity violation(s): {lines}{more}")


class WorkloadSyntaxError(XwfragError):
    """The workload text does not conform to the query grammar."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnknownDimensionError(XwfragError):
    """A query references a dimension absent from the warehouse metadata."""


class UnknownAttributeError(XwfragError):
    """A query references an attribute declared by no dimension."""


class TooManyPredicatesError(XwfragError):
    """Minterm enumeration refused: 2^n blow-up guard tripped."""


class FragmentationError(XwfragError):
    """A fragmentation step could not produce a sound layout."""


class ResultMismatchError(XwfragError):
    """Fragmented query results do not reconstruct the monolithic result."""
