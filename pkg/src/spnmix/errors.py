"""Exception types shared across the package.

Everything raised on purpose derives from SpnmixError so the CLI can turn any
expected failure into a one-line, machine-parsable message.
"""


class SpnmixError(Exception):
    """Base class for all deliberate errors."""

    code = "error"

    def __str__(self):
        msg = super().__str__()
        return msg if msg else self.code


# --- spn_core -------------------------------------------------------------

class NonFiniteValue(SpnmixError):
    code = "non-finite-value"


class MissingOverride(SpnmixError):
    code = "missing-override"


class TooManyTrees(SpnmixError):
    code = "too-many-trees"


class InvalidStructure(SpnmixError):
    code = "invalid-structure"


# --- likelihoods ----------------------------------------------------------

class InvalidData(SpnmixError):
    code = "invalid-data"


class InvalidInterval(SpnmixError):
    code = "invalid-interval"


class EmptyColumn(SpnmixError):
    code = "empty-column"


# --- structure learning ---------------------------------------------------

class AllMissing(SpnmixError):
    code = "all-missing"


# --- gibbs ----------------------------------------------------------------

class NonFiniteLikelihood(SpnmixError):
    code = "non-finite-likelihood"

    def __init__(self, row, node, message=""):
        super().__init__(message or f"non-finite likelihood at row {row}, node {node}")
        self.row = row
        self.node = node


# --- inference tasks -------------------------------------------------------

class NoPosterior(SpnmixError):
    code = "no-posterior"


class NoMissing(SpnmixError):
    code = "no-missing"


class SingleClass(SpnmixError):
    code = "single-class"


class ZeroRange(SpnmixError):
    code = "zero-range"


# --- synthetic -------------------------------------------------------------

class BadFractions(SpnmixError):
    code = "bad-fractions"


# --- io --------------------------------------------------------------------

class ParseError(SpnmixError):
    code = "parse-error"

    def __init__(self, line, column, reason):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class MixedTypeColumn(SpnmixError):
    code = "mixed-type-column"


class VersionMismatch(SpnmixError):
    code = "version-mismatch"


class CorruptFile(SpnmixError):
    code = "corrupt-file"
