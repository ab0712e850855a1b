"""Exceptions raised by the toolkit.

Three families map onto the command-line exit statuses: malformed input (1),
size bounds (2) and verification failures (3).
"""

from typing import Iterable, Optional


class ToolkitError(Exception):
    """Base class for every toolkit error."""

    exit_status = 1


class MalformedInput(ToolkitError, ValueError):
    """Input data or a model violates a structural requirement."""


class TooLarge(ToolkitError):
    """An exhaustive computation was asked to exceed its size bound."""

    exit_status = 2

    def __init__(self, what: str, size: int, bound: int):
        super().__init__(f"{what} has size {size}, above the enumeration bound {bound}")
        self.size = size
        self.bound = bound


class VerificationFailure(ToolkitError):
    """An oracle comparison exceeded its tolerance."""

    exit_status = 3


# Graph structure

class GraphError(MalformedInput):
    """A relation graph is not a well-formed tree."""

    def __init__(self, message: str, occurrences: Iterable = ()):
        self.occurrences = tuple(occurrences)
        names = ", ".join(str(o) for o in self.occurrences)
        super().__init__(f"{message}: {names}" if names else message)


class MultipleRoots(GraphError):
    pass


class Cycle(GraphError):
    pass


class DisconnectedNode(GraphError):
    pass


class MultipleHeads(GraphError):
    pass


class NodeNotInTree(GraphError):
    pass


# Label sequences and linearization

class MissingHeadMarker(MalformedInput):
    pass


class DuplicateHeadMarker(MalformedInput):
    pass


class NonProjective(GraphError):
    pass


class NodeMismatch(GraphError):
    pass


# Models and estimation

class NormalizationError(MalformedInput):
    """A parameter table does not sum to one."""

    def __init__(self, table: str, key, total: float):
        super().__init__(f"{table} table for {key!r} sums to {total!r}, not 1")
        self.table = table
        self.key = key
        self.total = total


class EmptyCorpus(MalformedInput):
    pass


class NonProjectiveRecord(NonProjective):
    def __init__(self, record: int, cause: GraphError, location: str = None):
        where = f"{location}: " if location else ""
        super().__init__(f"{where}record {record} is not projective", cause.occurrences)
        self.record = record


class UndecomposableRecord(MalformedInput):
    def __init__(self, record: int, edge, reason: str):
        super().__init__(f"record {record}: target edge {edge} {reason}")
        self.record = record
        self.edge = edge


# Decoding

class EmptyInput(MalformedInput):
    pass


class MissingReverseModel(MalformedInput):
    pass


# Files

class FormatError(MalformedInput):
    """A file line could not be parsed."""

    def __init__(self, path, line_number: Optional[int], message: str):
        location = f"{path}:{line_number}" if line_number is not None else str(path)
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line_number = line_number
