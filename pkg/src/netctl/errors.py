"""Exception types shared across the package."""


class NetctlError(Exception):
    """Base class for domain errors raised by netctl."""


class NetworkFormatError(NetctlError):
    """A network file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        loc = str(path) if path is not None else ""
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class UncontrollableError(NetctlError):
    """A controllability Gramian is singular at the working tolerance."""


class UnstableError(NetctlError):
    """An operation requiring Schur stability received an unstable matrix."""


class PartitionError(NetctlError):
    """Invalid node partition, or a partition-based precondition failed."""


class SubsetCapError(NetctlError):
    """Exhaustive subset enumeration would exceed the configured cap."""


class DecouplingError(NetctlError):
    """A decoupled-control consistency check failed during simulation."""
