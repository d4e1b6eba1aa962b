"""Exception types shared across the package."""


class IntentLatticeError(Exception):
    """Base class for all errors raised by this package."""


class SymbolTableError(IntentLatticeError):
    pass


class CycleError(IntentLatticeError):
    def __init__(self, state: int):
        super().__init__(f"cycle detected through state {state}")
        self.state = state


class EmptyLatticeError(IntentLatticeError):
    pass


class ComposeError(IntentLatticeError):
    pass


class PathLimitError(IntentLatticeError):
    def __init__(self, count: int):
        super().__init__(f"path enumeration exceeded limit at {count} paths")
        self.count = count


class RegionLimitError(IntentLatticeError):
    def __init__(self, count: int, limit: int):
        super().__init__(
            f"parallel region holds {count} paths (limit {limit}); "
            "consider trimming the intent library or lowering blank quotas"
        )
        self.count = count
        self.limit = limit


class FormatError(IntentLatticeError):
    """Malformed WCN or FST text input; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LibraryError(IntentLatticeError):
    """Invalid intent library document; location is a JSON-pointer-style path."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class StructureError(IntentLatticeError):
    """Malformed annotation symbols on a lattice arc."""

    def __init__(self, state: int, arc_index: int, message: str):
        super().__init__(f"state {state} arc {arc_index}: {message}")
        self.state = state
        self.arc_index = arc_index
