"""Exception types shared across the workbench.

The split matters to the CLI: configuration problems exit with status 2,
runtime failures with status 1 (see cli module).
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for all structured errors raised by this package."""


class MeshError(WorkbenchError):
    """Mesh file unreadable or mesh data violates SurfaceModel invariants.

    `element` names the offending piece (e.g. "face 7", "vertex 12") so
    callers can point at the exact line of a bad file.
    """

    def __init__(self, message: str, element: str | None = None):
        self.element = element
        super().__init__(f"{element}: {message}" if element else message)


class RegionError(WorkbenchError):
    """Region definition violates its preconditions (not the zero-area case,
    which is a warning state, not an error)."""


class ReachabilityError(WorkbenchError):
    """One or more planned emitter poses exceed the kinematic reach."""

    def __init__(self, message: str, shot_indices: list[int]):
        self.shot_indices = shot_indices
        super().__init__(message)


class DegenerateResolutionError(WorkbenchError):
    """pixel_size too coarse: rasterization produced zero operable pixels."""


class ConfigError(WorkbenchError):
    """Config file or override list does not validate."""


class TrialError(WorkbenchError):
    """Trial cannot produce a paired comparison (too few valid subjects,
    or a result with nothing in it)."""
