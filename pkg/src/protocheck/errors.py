"""Exception hierarchy shared by all protocheck modules."""

from __future__ import annotations


class ProtocheckError(Exception):
    """Base class for every error raised by this package."""


class TermSyntaxError(ProtocheckError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class DuplicateSlotError(ProtocheckError):
    pass


class UnknownVariantError(ProtocheckError):
    pass


class MixedCalculusError(ProtocheckError):
    pass


class NotSgdTerm(ProtocheckError):
    pass


class NotMcpTerm(ProtocheckError):
    pass


class ExploreError(ProtocheckError):
    """Exploration cannot proceed, e.g. no parameter maps for a reachable tool."""


class MalformedManifest(ProtocheckError):
    pass


class DuplicateToolName(ProtocheckError):
    pass


class UnsupportedSchemaFeature(ProtocheckError):
    pass


class MalformedSchema(ProtocheckError):
    pass


class UnresolvedSlotReference(ProtocheckError):
    pass


class McpPlusNotAccepted(ProtocheckError):
    pass


class UnknownTransactionality(ProtocheckError):
    pass


class MissingMetadata(ProtocheckError):
    def __init__(self, field: str, tool: str = ""):
        where = f" on tool {tool!r}" if tool else ""
        super().__init__(f"missing metadata field {field!r}{where}")
        self.field = field
        self.tool = tool


class MissingSummary(ProtocheckError):
    def __init__(self, tool: str):
        super().__init__(f"tool {tool!r} has no summary")
        self.tool = tool


class TooLarge(ProtocheckError):
    pass
