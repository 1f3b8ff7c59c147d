"""Program induction for ARC-style grid puzzles.

A typed grid DSL (98 primitives across three versions), a flat token-sequence
program encoding, probability-guided enumerative search with pluggable
guidance sources, baseline search strategies, procedural task generators, and
a benchmark harness.
"""

from .errors import (
    ConfigError,
    EvalError,
    FormatError,
    GridSynthError,
    InvalidConfig,
    MalformedGrid,
    ProgramSyntaxError,
    ProgramTypeError,
    VocabError,
)
from .grid import Grid, grid_from_rows, grid_to_rows, pixelwise_similarity, random_grid
from .program import (
    EOS,
    IDENTITY,
    NEW_LEVEL,
    SOS,
    Task,
    check_program,
    encode,
    evaluate,
    intermediate_outputs,
    parse,
    vocabulary,
)
from .guidance import (
    OracleGuidance,
    ProbSpace,
    RestrictedSetGuidance,
    TableGuidance,
    UniformGuidance,
    bootstrap_prob_space,
    get_prob_space,
    load_prob_table,
    save_prob_table,
)
from .search import (
    SearchConfig,
    SearchResult,
    compose_programs,
    enumerate_candidates,
    execution_guided_solve,
    greedy_decode_solve,
    gridcoder_cond_solve,
    gridcoder_solve,
    lgs_greedy_solve,
    mcts_solve,
    solve_task,
)
from .solver import ProgramInductionSolver

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
