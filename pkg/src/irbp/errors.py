"""Exception hierarchy.

Two branches matter for the CLI exit-code contract: ``ValidationError``
(bad arguments or configuration, exit code 1) and ``DataError`` (a
computation or input data set failed at run time, exit code 2).
"""


class IrbpError(Exception):
    """Base class for all package errors."""


class ValidationError(IrbpError):
    """Invalid argument, parameter, or configuration."""


class DataError(IrbpError):
    """Runtime or data failure on otherwise valid arguments."""


# -- interaction matrix / spectral analysis ---------------------------------

class NegativeEntry(ValidationError):
    """An interaction weight is negative."""


class ColumnSumExceedsOne(ValidationError):
    """A column of the interaction matrix sums to more than one."""


class NotIrreducible(ValidationError):
    """Operation requires a strongly connected interaction digraph."""


class ParameterOutOfRange(ValidationError):
    """A scalar or vector parameter is outside its admissible range."""


class NoConvergence(DataError):
    """An iterative numerical routine exceeded its iteration bound."""


# -- simulation --------------------------------------------------------------

class ScheduleOutOfRange(ValidationError):
    """A checkpoint does not lie inside {1, ..., t_max}."""


class InstanceTooLarge(ValidationError):
    """Exhaustive enumeration was requested for an unenumerable instance."""


class IncompatibleSchedules(DataError):
    """Trajectories do not share the checkpoints a computation needs."""


# -- estimation ---------------------------------------------------------------

class EmptySample(DataError):
    """No usable (positive-count) points remain for a fit."""


class DegenerateDesign(DataError):
    """Regression design is degenerate (too few points, constant t, or
    constant counts)."""


class MissingSplit(ValidationError):
    """Operation needs per-source-category split counts that are absent."""


# -- inference ----------------------------------------------------------------

class NegativeArgument(ValidationError):
    """A non-negative argument was negative."""


class NonpositiveX(ValidationError):
    """The gamma-ratio exponent must be strictly positive."""


class AllZeroCounts(DataError):
    """All success counts are zero; the test statistic is undefined."""


class LikelihoodDegenerate(DataError):
    """A model probability of exactly 0 or 1 contradicts an observation."""


# -- patent index -------------------------------------------------------------

class SchemaError(DataError):
    """An input CSV does not match its declared schema."""


class EmptyInput(DataError):
    """An input file contains no usable records."""


# -- CLI ----------------------------------------------------------------------

class ConfigError(ValidationError):
    """A run configuration failed validation; message carries the field path."""
