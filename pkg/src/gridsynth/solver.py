"""Scikit-learn style estimator facade over the search engines.

``fit`` infers a program from demonstration input/output grids, ``predict``
applies it to new inputs.  Grids cross this boundary in the ARC row-major
2D-list form, so the solver composes with plain Python and numpy data.
"""

from __future__ import annotations

from typing import Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import MalformedGrid
from .grid import grid_from_rows, grid_to_rows
from .guidance import GuidanceSource, UniformGuidance
from .harness import RunConfig, build_source
from .program import Task, evaluate, parse
from .search import solve_task


def check_grid_array(rows, name: str = "grid"):
    """Validate one grid in 2D-list form and return it normalized."""
    try:
        return grid_from_rows(rows)
    except MalformedGrid as err:
        raise ValueError(f"{name}: {err}") from err


def check_grid_pairs(X, y):
    if len(X) == 0:
        raise ValueError("need at least one demonstration pair")
    if len(X) != len(y):
        raise ValueError(f"X has {len(X)} grids but y has {len(y)}")
    return tuple(
        (check_grid_array(a, f"X[{i}]"), check_grid_array(b, f"y[{i}]"))
        for i, (a, b) in enumerate(zip(X, y))
    )


class ProgramInductionSolver(BaseEstimator):
    """Induce a grid-transformation program from examples, then apply it.

    Parameters mirror the CLI flags.  ``guidance`` may be a GuidanceSource
    instance or None, in which case a uniform prior over the vocabulary is
    used; a flat prior carries no ranking signal, so real searches want an
    informative source (or the lgs_greedy engine, which needs none).
    """

    def __init__(
        self,
        engine: str = "gridcoder",
        dsl_version: int = 1,
        tau: float = 0.02,
        timeout: float = 60.0,
        bootstrap_k: int = 6,
        max_len: int = 40,
        max_programs: int = 100_000,
        seed: int = 0,
        guidance: Optional[GuidanceSource] = None,
    ):
        self.engine = engine
        self.dsl_version = dsl_version
        self.tau = tau
        self.timeout = timeout
        self.bootstrap_k = bootstrap_k
        self.max_len = max_len
        self.max_programs = max_programs
        self.seed = seed
        self.guidance = guidance

    def fit(self, X: Sequence, y: Sequence) -> "ProgramInductionSolver":
        """Search for a program mapping each X[i] to y[i]."""
        pairs = check_grid_pairs(X, y)
        task = Task(support=pairs)
        config = RunConfig(
            engine=self.engine,
            dsl_version=self.dsl_version,
            tau=self.tau,
            timeout=self.timeout,
            bootstrap_k=self.bootstrap_k,
            max_len=self.max_len,
            max_programs=self.max_programs,
            seed=self.seed,
        ).search_config()
        source = self.guidance
        if source is None and self.engine != "lgs_greedy":
            source = UniformGuidance(self.dsl_version)
        result = solve_task(task, self.engine, source, config)
        self.result_ = result
        self.program_ = list(result.program) if result.found else None
        self.color_binding_ = result.color_binding
        return self

    def predict(self, X: Sequence) -> list:
        """Apply the fitted program to each input grid."""
        if not hasattr(self, "result_"):
            raise NotFittedError("call fit before predict")
        if self.program_ is None:
            raise NotFittedError("fit did not find a program within budget")
        tree = parse(tuple(self.program_), self.dsl_version)
        out = []
        for i, rows in enumerate(X):
            grid = check_grid_array(rows, f"X[{i}]")
            out.append(grid_to_rows(evaluate(tree, grid, self.color_binding_)))
        return out

    def score(self, X: Sequence, y: Sequence) -> float:
        """Fraction of inputs mapped exactly to their expected outputs."""
        try:
            predictions = self.predict(X)
        except NotFittedError:
            return 0.0
        hits = sum(p == list(map(list, e)) for p, e in zip(predictions, y))
        return hits / len(y) if len(y) else 0.0
