"""Markov models, hidden Markov models and one-qubit hidden quantum Markov models.

Stationary states, word probabilities, Monte Carlo trajectories and random
ensemble scatter experiments for machines with two output symbols.
"""

__version__ = "0.1.0"

from .errors import ConsistencyError, ContractError, DomainError, HqmmError, ValidationError
from .models import (
    DensityMatrix,
    HiddenMarkovModel,
    HqmmModel,
    MarkovModel,
    ProbVector,
    PureState,
    RestrictedParams,
    Symbol,
    apply_superoperator,
    decay_realization,
    make_hmm,
    make_hqmm,
    make_mm,
    mm_to_hmm,
    parse_word,
    restricted_hqmm,
)
from .stationary import FixedPointReport, hmm_stationary, hqmm_stationary, mm_stationary, stationary
from .wordprob import gap_prob, word_prob
from .trajectory import RngSeed, empirical_word_prob, simulate
