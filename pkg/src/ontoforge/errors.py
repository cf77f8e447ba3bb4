"""Shared exception base. Concrete domain errors live next to the code
that raises them; everything user-facing derives from OntoForgeError so
the CLI and HTTP layers can map them uniformly."""


class OntoForgeError(Exception):
    """Base class for all domain errors raised by this package."""
