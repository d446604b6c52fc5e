"""Exception types shared across the library."""


class StokesFVError(Exception):
    """Base class for all library errors."""


class GridError(StokesFVError, ValueError):
    """Invalid grid construction or mismatched grids."""


class ClusterError(StokesFVError, ValueError):
    """Invalid cluster partition (odd cell counts, grid mismatch)."""


class ConfigError(StokesFVError, ValueError):
    """Invalid run configuration (CLI flags or config file)."""


class SolverError(StokesFVError, RuntimeError):
    """Linear solver failure that cannot be expressed as a report."""
