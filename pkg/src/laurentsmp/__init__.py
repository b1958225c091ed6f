"""Laurent asymptotic expansions with explicit remainder bounds for perturbed semi-Markov processes."""

from .expansion import (
    ExpansionError,
    InconsistentRepresentationsError,
    InvalidRebaseError,
    LaurentExpansion,
    NonPivotalError,
    RemainderBound,
    add,
    combine_representations,
    div,
    embed_constant,
    evaluate,
    from_wide_bound,
    mul,
    prod_many,
    rebase_delta,
    reciprocal,
    scale,
    sum_many,
    trim,
)
from .model import (
    ModelError,
    SemiMarkovModel,
    TransitionEntry,
    complete_remainders,
    load_model,
    parse_model,
    positivity_thresholds,
    validate_conditions,
)
from .oracle import (
    OracleError,
    certify,
    instantiate,
    numeric_hitting,
    numeric_reduce,
    numeric_stationary,
)
from .reduction import hitting_time, non_absorption, pairwise_hitting, reduce_state
from .stationary import sojourn_expectation, stationary, stationary_all

__all__ = [name for name in dir() if not name.startswith("_")]
