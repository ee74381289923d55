"""Exception types shared across the package."""


class AttnBootError(Exception):
    """Base class for all package errors."""


class InputError(AttnBootError):
    """Bad user input: unreadable files, invalid shapes, out-of-range parameters."""


class DumpError(AttnBootError):
    """Malformed or inconsistent tensor dump (manifest/payload pair)."""


class DegenerateNullError(AttnBootError):
    """The bootstrap null ensemble is constant, so no statistics can be formed."""
