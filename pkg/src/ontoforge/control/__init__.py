"""Control subsystem: project manifests, the human-in-the-loop iteration
cycle with its decision queue, the HTTP API and the CLI."""

from .project import InvalidManifest, Project, ProjectManifest, StorageUnwritable, create_project
from .queue import AlreadyResolved, DecisionQueue, QueueItem, UnknownItem
from .iteration import (
    InvalidResolution,
    IterationInProgress,
    IterationReport,
    StageFailure,
    apply_decision,
    run_iteration,
    should_stop,
)

__all__ = [
    "AlreadyResolved",
    "DecisionQueue",
    "InvalidManifest",
    "InvalidResolution",
    "IterationInProgress",
    "IterationReport",
    "Project",
    "ProjectManifest",
    "QueueItem",
    "StageFailure",
    "StorageUnwritable",
    "UnknownItem",
    "apply_decision",
    "create_project",
    "run_iteration",
    "should_stop",
]
