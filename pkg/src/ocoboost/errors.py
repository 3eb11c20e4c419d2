"""Exception hierarchy shared by every module."""


class BoostError(ValueError):
    """Base class for all library errors."""

    code = "boost-error"


class InvalidLabelError(BoostError):
    code = "invalid-label"


class DimensionError(BoostError):
    code = "dimension"


class InvalidPairError(BoostError):
    code = "invalid-pair"


class InvalidDistributionError(BoostError):
    code = "invalid-distribution"


class NonFiniteInputError(BoostError):
    code = "non-finite-input"


class InvalidAdvantageError(BoostError):
    code = "invalid-advantage"


class InvalidIntervalError(BoostError):
    code = "invalid-interval"


class InvalidConfigError(BoostError):
    code = "invalid-config"


class InvalidWeightError(BoostError):
    code = "invalid-weight"


class ClassTooLargeError(BoostError):
    code = "class-too-large"


class ProtocolOrderError(BoostError):
    code = "protocol-order"


class OracleBudgetError(BoostError):
    code = "oracle-budget"


class IngestionError(BoostError):
    code = "ingestion"
