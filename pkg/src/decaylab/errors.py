"""Named error types shared across the library.

Each error carries a short machine-readable ``code`` so the command line can
map it onto an exit status.
"""

from __future__ import annotations


class DecayLabError(Exception):
    """Base class for every library error."""

    code = "error"
    exit_status = 2


class PrecisionExhausted(DecayLabError):
    code = "PrecisionExhausted"


class FieldTooSmall(DecayLabError):
    code = "FieldTooSmall"


class ResourceLimit(DecayLabError):
    code = "ResourceLimit"


class DegenerateForm(DecayLabError):
    code = "DegenerateForm"


class BadDiscriminant(DecayLabError):
    code = "BadDiscriminant"


class ToleranceUnreachable(DecayLabError):
    code = "ToleranceUnreachable"


class NonSquareIndex(DecayLabError):
    code = "NonSquareIndex"


class StratumViolation(DecayLabError):
    code = "StratumViolation"


class AllInfinite(DecayLabError):
    code = "AllInfinite"


class MissingValuation(DecayLabError):
    code = "MissingValuation"


class NotRapid(DecayLabError):
    code = "NotRapid"


class OutOfCase(DecayLabError):
    code = "OutOfCase"


class HypothesisViolated(DecayLabError):
    code = "HypothesisViolated"


# The following signal that a checked mathematical relation failed.  The CLI
# reports them with exit status 1 rather than 2.


class RelationViolated(DecayLabError):
    code = "RelationViolated"
    exit_status = 1


class CounterexampleFound(RelationViolated):
    code = "CounterexampleFound"


class MaximalityViolated(RelationViolated):
    code = "MaximalityViolated"


class DensityMismatch(RelationViolated):
    code = "DensityMismatch"


class SchemaError(DecayLabError):
    """Malformed input; the message carries a JSON pointer to the offending field."""

    code = "SchemaError"
