"""Exception hierarchy shared by the solvers, the harness and the CLI."""


class SparseCCAError(Exception):
    """Base class for every error raised by this package."""


class InputError(SparseCCAError, ValueError):
    """Malformed arguments: wrong shapes, indices out of range, bad files."""


class ModelError(SparseCCAError):
    """The covariance model violates positive semidefiniteness."""


class SolverError(SparseCCAError):
    """A factorization or eigen-solve could not be completed."""


class BudgetExceededError(SparseCCAError):
    """Exhaustive search refused because it would visit too many patterns."""

    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(
            f"exhaustive search needs {count} patterns, budget is {budget}"
        )


class TrialError(SparseCCAError):
    """A Monte Carlo trial failed; carries the trial index."""

    def __init__(self, trial: int, cause: Exception):
        self.trial = trial
        super().__init__(f"trial {trial} failed: {cause}")
