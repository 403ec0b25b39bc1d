"""Exception hierarchy shared by the toolkit.

Every error carries a stable ``code`` string (emitted by the CLI as an
``error-code:`` line on stderr) and an ``exit_code`` used by the CLI
(2 = input validation, 3 = I/O, 4 = internal).
"""


class ToolkitError(Exception):
    code = "internal"
    exit_code = 4


class ValidationError(ToolkitError):
    """Invalid input data or parameters."""

    code = "validation"
    exit_code = 2


class IoFailure(ToolkitError):
    code = "io-failure"
    exit_code = 3


# Matrix container format / content.
class BadMagic(ValidationError):
    code = "bad-magic"


class UnsupportedVersion(ValidationError):
    code = "unsupported-version"


class TruncatedPayload(ValidationError):
    code = "truncated-payload"


class NormViolation(ValidationError):
    code = "norm-violation"


class RangeViolation(ValidationError):
    code = "range-violation"


# Label files.
class EmptyFile(ValidationError):
    code = "empty-file"


class EmptyLine(ValidationError):
    code = "empty-line"


# Linear algebra preconditions.
class ZeroRow(ValidationError):
    code = "zero-row"


class DimMismatch(ValidationError):
    code = "dim-mismatch"


class EmptyRow(ValidationError):
    code = "empty-row"


# Negative-label mining.
class LabelCountMismatch(ValidationError):
    code = "label-count-mismatch"


class MTooLarge(ValidationError):
    code = "m-too-large"


# Scoring.
class GroupTooSmall(ValidationError):
    code = "group-too-small"


class NonPositiveTau(ValidationError):
    code = "non-positive-tau"


class DenominatorZero(ValidationError):
    code = "denominator-zero"


class ColumnSplitInvalid(ValidationError):
    code = "column-split-invalid"


# Metrics.
class EmptyList(ValidationError):
    code = "empty-list"


class NonFinite(ValidationError):
    code = "non-finite"


class BadLambda(ValidationError):
    code = "bad-lambda"


# Theory engine.
class DomainError(ValidationError):
    code = "domain-error"


class TooManyTerms(ValidationError):
    code = "too-many-terms"


# Synthetic data generation.
class SpecInvalid(ValidationError):
    code = "spec-invalid"
