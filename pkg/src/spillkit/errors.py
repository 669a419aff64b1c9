"""Exception and warning types shared across the toolkit."""


class SpillkitError(Exception):
    """Base class for all toolkit errors."""


# --- panel construction and transforms ---------------------------------


class MissingColumn(SpillkitError):
    """A column required by the CSV schema is absent from the file."""


class DuplicateEntityYear(SpillkitError):
    """The same (entity, year) appears more than once in the input."""


class EmptyPanel(SpillkitError):
    """No usable observations after parsing."""


class NonPositiveValue(SpillkitError):
    """Log transform requested on a value <= 0."""

    def __init__(self, entity, variable, year, value):
        self.entity = entity
        self.variable = variable
        self.year = year
        self.value = value
        super().__init__(
            f"log transform requires strictly positive values: "
            f"{entity}/{variable} at {year} is {value!r}"
        )


class SeriesTooShort(SpillkitError):
    """Series has too few observations for the requested operation."""


class IncompleteSeries(SpillkitError):
    """Operation requires complete cases but the window contains missing values."""


class InsufficientData(SpillkitError):
    """Too few non-missing observations."""


# --- regression ---------------------------------------------------------


class RankDeficient(SpillkitError):
    """Design matrix is not of full column rank."""


class TooFewRows(SpillkitError):
    """Fewer observations than parameters."""


class WindowTooSmall(SpillkitError):
    """Rolling window does not exceed the number of model variables."""


class WindowExceedsSample(SpillkitError):
    """Rolling window longer than the available sample."""


class SolverDiverged(SpillkitError):
    """Iterative solver failed to reach the requested tolerance."""


# --- VAR / tests --------------------------------------------------------


class TooFewObservations(SpillkitError):
    """Not enough observations to estimate the model."""


class SingularRegression(SpillkitError):
    """Test regression could not be solved (singular design)."""


class DegenerateDenominator(SpillkitError):
    """N - L <= 0 in a fit-quality denominator."""


class SingularMomentMatrix(SpillkitError):
    """Moment matrices of the reduced-rank regression are unusable."""


class OrderingRequired(SpillkitError):
    """Structural (recursive) estimation needs an explicit variable ordering."""


class UnstableSpec(SpillkitError):
    """Simulation spec requires a stable process but the companion matrix is not."""


class SchemaMismatch(SpillkitError):
    """A table file does not match the declared fixture kind."""


class ExplosiveWarning(UserWarning):
    """Companion-matrix spectral radius exceeds one; responses may diverge."""
