"""Exception hierarchy shared by all modules."""


class AttnRegError(Exception):
    """Base class for all library errors."""


class NonSymmetricError(AttnRegError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class SingularGramError(AttnRegError):
    """A gram matrix is singular or numerically indistinguishable from it."""


class DimensionMismatchError(AttnRegError):
    """Operand shapes are incompatible."""


class RankOutOfRangeError(AttnRegError):
    """Requested component count is outside [1, P]."""


class DegenerateRowError(AttnRegError):
    """A normalized activation hit a (near-)zero row normalizer."""


class DegenerateLagError(AttnRegError):
    """The lagged series has (near-)zero norm."""


class DegenerateMaskError(AttnRegError):
    """Masked attention weights cancel to a (near-)zero sum."""


class DegenerateSignalError(AttnRegError):
    """Simulated signal has too little variance to calibrate noise."""


class DegenerateTargetError(AttnRegError):
    """Target vector has too little variance for an R-squared."""


class OptimizationFailedError(AttnRegError):
    """Training could not take a single successful step."""


class LineSearchFailureError(AttnRegError):
    """Line search failed on the very first iteration."""


class NonFiniteObjectiveError(AttnRegError):
    """Objective or gradient returned a non-finite value at the start point."""


class ParseError(AttnRegError):
    """CSV input could not be parsed; message carries row/column location."""


class NonNumericColumnError(ParseError):
    """A predictor column contains non-numeric data."""


class MissingTargetError(ParseError):
    """The requested target column is absent from the header."""
