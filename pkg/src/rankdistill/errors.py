"""Exception types shared across the package.

Each error names the contract it enforces; messages carry the offending
value or file location so CLI users can act on them.
"""


class RankDistillError(Exception):
    """Base class for all package errors."""


class ZeroVector(RankDistillError):
    """Vector norm is at or below the 1e-30 floor."""


class DimensionMismatch(RankDistillError):
    """Inputs that must share a length or shape do not."""


class BatchTooSmall(RankDistillError):
    """A batch or list needs at least two elements."""


class EmptyList(RankDistillError):
    """An operation received an empty score list."""


class NonPositiveTemperature(RankDistillError):
    """Softmax temperatures must be strictly positive."""


class InvalidPermutation(RankDistillError):
    """Index list is not a bijection on 0..n-1."""


class ListTooLarge(RankDistillError):
    """Factorial enumeration refused beyond n = 8."""


class IndexOutOfRange(RankDistillError):
    """Positional index outside the valid range."""


class AlphaOutOfRange(RankDistillError):
    """Teacher blend weight must lie in [0, 1]."""


class EmptyTokenList(RankDistillError):
    """Encoder input must contain at least one token."""


class TokenIdOutOfRange(RankDistillError):
    """Token id exceeds the embedding table."""


class ShapeMismatch(RankDistillError):
    """Gradient and parameter shapes disagree."""


class MissingCache(RankDistillError):
    """Backward pass requires the forward token/mask cache."""


class EmptyCorpus(RankDistillError):
    """Training requires a nonempty corpus."""


class TeacherCoverageGap(RankDistillError):
    """A batch sentence is missing from a teacher store."""


class FormatError(RankDistillError):
    """A file does not follow its declared format."""


class DuplicateKey(RankDistillError):
    """A teacher file lists the same sentence twice."""


class DegenerateInput(RankDistillError):
    """Correlation is undefined on constant input."""


class NegativeGold(RankDistillError):
    """Gain-based ranking metrics require nonnegative gold labels."""


class EmptyInput(RankDistillError):
    """Metric received no data points."""


class PoolTooSmall(RankDistillError):
    """Uniformity needs at least two pooled vectors."""


class EmptySentence(RankDistillError):
    """Tokenizer input must be nonempty."""


class ScoreOutOfRange(RankDistillError):
    """Similarity gold labels must lie in [0, 5]."""


class ConfigError(RankDistillError):
    """Config file has an unknown key or an invalid value."""
