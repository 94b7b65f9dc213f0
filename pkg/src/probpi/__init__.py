"""Workbench for the finite probabilistic pi-calculus.

Parsing and printing, exact-rational distribution semantics, scalar and
vector testing outcomes, modal logics with characteristic formulas and
tests, and decision procedures for the may/must testing preorders.
"""

from .terms import (
    Action,
    Barb,
    BoundInput,
    BoundOutput,
    FreeOutput,
    InputPrefix,
    Match,
    Mismatch,
    Name,
    NIL,
    NIL_PROC,
    Nil,
    OutputPrefix,
    Par,
    PChoice,
    ProcTerm,
    Restrict,
    StateProc,
    StateTerm,
    Success,
    Sum,
    Tau,
    TAU,
    alpha_eq,
    format_action,
    format_proc,
    format_state,
    free_names,
    fresh,
    substitute,
)
from .parser import ParseError, SortError, parse, parse_file, parse_state
from .dist import Distribution, dist_par, dist_restrict, dist_subst, interp, mix
from .semantics import (
    DerivativeSet,
    Transition,
    lifted_step,
    refuses,
    step,
    weak_alpha,
    weak_tau_vertices,
)
from .testing import (
    ScalarOutcomes,
    VectorOutcomes,
    apply_scalar,
    apply_vector,
    convex_exists_leq,
    gather_scalar,
    gather_vector,
    hoare_leq,
    smyth_leq,
    vector_hoare,
    vector_smyth,
)
from .logic import (
    And,
    CharTest,
    DiaBoundOut,
    DiaFreeOut,
    DiaInput,
    Formula,
    PDisj,
    Ref,
    Sat3,
    Top,
    char_formula,
    char_test,
    format_formula,
    parse_formula,
    sat_structural,
    sat_via_test,
)
from .preorders import (
    Verdict,
    corpus_check,
    decide_may,
    decide_must,
    game_may,
    game_must,
    simulate_game,
)

__all__ = [name for name in dir() if not name.startswith("_")]
