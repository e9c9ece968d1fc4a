"""Exception hierarchy shared by all reclab modules."""


class ReclabError(Exception):
    """Base class for every error raised by reclab."""


class EmptyInput(ReclabError, ValueError):
    pass


class DuplicateEntry(ReclabError, ValueError):
    pass


class InvalidRating(ReclabError, ValueError):
    pass


class ParseError(ReclabError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ShapeMismatch(ReclabError, ValueError):
    pass


class InvalidArgument(ReclabError, ValueError):
    pass


class InvalidMeasure(ReclabError, ValueError):
    pass


class AlreadyRegistered(ReclabError, KeyError):
    pass


class UnknownAlgorithm(ReclabError, KeyError):
    pass


class InvalidParam(ReclabError, ValueError):
    pass


class UndefinedMetric(ReclabError, ValueError):
    pass


class WrongMode(ReclabError, ValueError):
    pass
