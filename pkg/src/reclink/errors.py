"""Exception taxonomy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError and usage problems exit 1,
DataError exits 2, TransportError and UnparseableResponse exit 3.
"""


class RecLinkError(Exception):
    """Base class for all reclink errors."""


class ConfigError(RecLinkError):
    """Invalid configuration: unknown keys, bad parameter ranges."""


class DataError(RecLinkError):
    """Malformed input data; carries file/row context where known."""

    def __init__(self, message: str, *, path: str | None = None,
                 row: int | None = None):
        self.path = path
        self.row = row
        where = ""
        if path is not None:
            where = f"{path}: "
        if row is not None:
            where += f"row {row}: "
        super().__init__(where + message)


class TransportError(RecLinkError):
    """A remote service call failed (timeout, non-200, contract violation)."""


class UnparseableResponse(RecLinkError):
    """An LLM endpoint answered with something other than yes/no."""

    def __init__(self, pair_id: str, raw: str):
        self.pair_id = pair_id
        self.raw = raw
        super().__init__(f"unparseable response for pair {pair_id}: {raw!r}")
