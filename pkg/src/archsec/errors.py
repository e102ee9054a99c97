"""Error codes and exception types shared across the package.

Every hard failure carries a stable machine-readable code so callers and
tests can match on behavior instead of message text.
"""

from __future__ import annotations


class Code:
    """Registry of stable error codes."""

    # document syntax and structure
    E_SYNTAX = "E_SYNTAX"
    E_DUP_LAYER = "E_DUP_LAYER"
    E_PARENT = "E_PARENT"
    E_EMPTY = "E_EMPTY"
    # architecture
    E_ROLE = "E_ROLE"
    E_ROLELESS = "E_ROLELESS"
    E_TIER = "E_TIER"
    E_NET_REF = "E_NET_REF"
    E_NET_SIZE = "E_NET_SIZE"
    E_DUP_COMPONENT = "E_DUP_COMPONENT"
    # catalogs and aliases
    E_LAYER_REF = "E_LAYER_REF"
    E_DUP_ATTACK = "E_DUP_ATTACK"
    E_ALIAS_OVERLAP = "E_ALIAS_OVERLAP"
    # mapping
    E_OVERRIDE_REF = "E_OVERRIDE_REF"
    # taxonomy
    E_UNREACHABLE = "E_UNREACHABLE"
    # classification
    E_NO_ITEM = "E_NO_ITEM"
    E_BAD_VERDICT = "E_BAD_VERDICT"
    E_INCOMPLETE = "E_INCOMPLETE"
    # attack tree
    E_UNASSIGNED = "E_UNASSIGNED"
    E_FORMAT = "E_FORMAT"
    # bundled corpus
    E_CORPUS = "E_CORPUS"
    # filesystem / manifest
    E_IO = "E_IO"


class ArchsecError(Exception):
    """Failure with a stable code and a human-readable message."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


def fail(code: str, message: str) -> "ArchsecError":
    """Build an ArchsecError; kept as a helper so call sites stay short."""
    return ArchsecError(code, message)
