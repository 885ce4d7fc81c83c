"""Shared exception types."""


class CapabilityError(RuntimeError):
    """An input is outside the scale this implementation supports.

    Raised instead of silently truncating, e.g. when an exact enumeration
    would need more than 2**24 states or a tester needs more indexes than
    the instance provides.
    """
