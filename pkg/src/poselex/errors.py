"""Exception hierarchy shared by every stage of the pipeline."""


class PoselexError(Exception):
    """Base class; the CLI turns any of these into a nonzero exit."""


class ParseError(PoselexError):
    pass


class SchemaError(PoselexError):
    pass


class ConfigError(PoselexError):
    pass


class DegenerateSkeletonError(PoselexError):
    pass


class InsufficientFramesError(PoselexError):
    pass


class NumericError(PoselexError):
    pass


class InfeasibleKError(PoselexError):
    pass


class EmptyStreamError(PoselexError):
    pass


class EnumerationTooLargeError(PoselexError):
    pass


class UnknownSymbolError(PoselexError):
    pass


class SplitError(PoselexError):
    pass
