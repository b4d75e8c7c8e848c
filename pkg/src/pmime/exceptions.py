"""Exception hierarchy shared by every module of the package."""


class PMIMEError(Exception):
    """Base class for all errors raised by this package."""


class SeriesError(PMIMEError, ValueError):
    """Invalid multivariate series input."""


class ConstantColumn(SeriesError):
    def __init__(self, column, label=None):
        self.column = column
        self.label = label
        name = f"{column}" if label is None else f"{column} ({label!r})"
        super().__init__(f"column {name} has zero variance and cannot be standardized")


class NonFinite(SeriesError):
    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__(f"non-finite value at row {row}, column {column}")


class SeriesTooShort(SeriesError):
    pass


class CSVParseError(SeriesError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = "" if line is None else f"line {line}: "
        super().__init__(prefix + message)


class TooFewSamples(PMIMEError, ValueError):
    pass


class CombinationBudgetExceeded(PMIMEError, ValueError):
    def __init__(self, n_subsets, budget):
        self.n_subsets = n_subsets
        self.budget = budget
        super().__init__(
            f"exhaustive traversal would score {n_subsets} subsets, "
            f"over the budget of {budget}; lower m or raise the budget"
        )


class DivergedAfterRetries(PMIMEError, RuntimeError):
    pass


class IntegrationFailure(PMIMEError, RuntimeError):
    pass


class ShapeMismatch(PMIMEError, ValueError):
    pass


class ConfigError(PMIMEError, ValueError):
    pass
