"""Stationary word, block and gap probabilities.

Gap patterns are indexed by ``g``, the number of ignored symbols between two
``A``s, so the pattern ``A * ... * A`` has length ``g + 2``. The Markov-model
helper :func:`mm_gap_prob_closed` keeps the historical exponent ``m - 1`` on the
transition matrix; it equals :func:`hmm_gap_prob` on the embedded chain with
``g = m - 2``.
"""

from __future__ import annotations

import numpy as np

from .errors import ConsistencyError, ContractError
from .models import (
    DensityMatrix,
    HiddenMarkovModel,
    HqmmModel,
    MarkovModel,
    ProbVector,
    mm_to_hmm,
    parse_word,
)
from .stationary import mm_stationary, superoperator_matrix

CLAMP_TOL = 1e-12


def _clamp(value: float) -> float:
    value = float(value)
    if value < -CLAMP_TOL or value > 1.0 + CLAMP_TOL:
        raise ConsistencyError(f"probability {value!r} outside [0, 1] beyond tolerance")
    return min(max(value, 0.0), 1.0)


def _probs(hmm: HiddenMarkovModel, p_ss) -> np.ndarray:
    p = p_ss.probs if isinstance(p_ss, ProbVector) else np.asarray(p_ss, dtype=float)
    if p.shape != (hmm.n_states,):
        raise ContractError(f"stationary vector has shape {p.shape}, machine has {hmm.n_states} states")
    return p


def _rho(rho_ss) -> np.ndarray:
    rho = rho_ss.entries if isinstance(rho_ss, DensityMatrix) else np.asarray(rho_ss, dtype=complex)
    if rho.shape != (2, 2):
        raise ContractError(f"density matrix has shape {rho.shape}, expected (2, 2)")
    return rho


def _check_gap(g: int) -> int:
    g = int(g)
    if g < 0:
        raise ContractError(f"gap length must be non-negative, got {g}")
    return g


# ---------------------------------------------------------------------------
# classical
# ---------------------------------------------------------------------------


def hmm_word_prob(hmm: HiddenMarkovModel, p_ss, word) -> float:
    v = _probs(hmm, p_ss)
    for s in parse_word(word):
        v = hmm.sub_transition(s) @ v
    return _clamp(v.sum())


def hmm_block_prob(hmm: HiddenMarkovModel, p_ss, g: int) -> float:
    """P(A B^g A)."""
    g = _check_gap(g)
    v = hmm.t_a @ _probs(hmm, p_ss)
    v = np.linalg.matrix_power(hmm.t_b, g) @ v
    return _clamp((hmm.t_a @ v).sum())


def hmm_gap_prob(hmm: HiddenMarkovModel, p_ss, g: int) -> float:
    """P(A *^g A): first and last symbol A, the g symbols between ignored."""
    g = _check_gap(g)
    v = hmm.t_a @ _probs(hmm, p_ss)
    v = np.linalg.matrix_power(hmm.transition, g) @ v
    return _clamp((hmm.t_a @ v).sum())


def mm_word_prob(mm: MarkovModel, word) -> float:
    """Chain product p_{i1} t_{i2|i1} ... t_{im|i(m-1)} from the stationary start."""
    word = parse_word(word)
    t = mm.transition
    p = mm_stationary(mm).probs
    value = p[word[0]]
    for prev, cur in zip(word, word[1:]):
        value *= t[cur, prev]
    return _clamp(value)


def mm_block_prob_closed(mm: MarkovModel, m: int) -> float:
    """P(A B^m A) in closed form, m >= 1."""
    if int(m) < 1:
        raise ContractError(f"closed-form block probability needs m >= 1, got {m}")
    p, q = mm.p, mm.q
    return _clamp((1 - p) * (1 - q) ** 2 / ((1 - p) + (1 - q)) * q ** (int(m) - 1))


def mm_gap_prob_closed(mm: MarkovModel, m: int) -> float:
    """(1-q)/(2-p-q) * [T^(m-1)]_00, m >= 1.

    For m >= 2 this is the gap probability with g = m - 2 ignored symbols; m = 1
    reduces to P(A).
    """
    if int(m) < 1:
        raise ContractError(f"gap formula needs m >= 1, got {m}")
    p1 = (1 - mm.q) / ((1 - mm.p) + (1 - mm.q))
    return _clamp(p1 * np.linalg.matrix_power(mm.transition, int(m) - 1)[0, 0])


# ---------------------------------------------------------------------------
# quantum
# ---------------------------------------------------------------------------


def hqmm_word_prob(hqmm: HqmmModel, rho_ss, word) -> float:
    rho = _rho(rho_ss)
    for s in parse_word(word):
        k = hqmm.kraus(s)
        rho = k @ rho @ k.conj().T
    return _clamp(rho.trace().real)


def hqmm_block_prob(hqmm: HqmmModel, rho_ss, g: int) -> float:
    g = _check_gap(g)
    op = hqmm.k_a @ np.linalg.matrix_power(hqmm.k_b, g) @ hqmm.k_a
    rho = op @ _rho(rho_ss) @ op.conj().T
    return _clamp(rho.trace().real)


def hqmm_gap_prob(hqmm: HqmmModel, rho_ss, g: int) -> float:
    """Tr(K_A K^g(K_A rho K_A^dag) K_A^dag) without intermediate renormalization."""
    g = _check_gap(g)
    k_a = hqmm.k_a
    cond = k_a @ _rho(rho_ss) @ k_a.conj().T
    vec = np.linalg.matrix_power(superoperator_matrix(hqmm), g) @ cond.reshape(4)
    rho = k_a @ vec.reshape(2, 2) @ k_a.conj().T
    return _clamp(rho.trace().real)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def word_prob(machine, state, word) -> float:
    """Word probability for any machine class given its stationary state."""
    if isinstance(machine, MarkovModel):
        return hmm_word_prob(mm_to_hmm(machine), state, word)
    if isinstance(machine, HiddenMarkovModel):
        return hmm_word_prob(machine, state, word)
    if isinstance(machine, HqmmModel):
        return hqmm_word_prob(machine, state, word)
    raise TypeError(f"unsupported machine type {type(machine).__name__}")


def gap_prob(machine, state, g: int) -> float:
    if isinstance(machine, MarkovModel):
        return hmm_gap_prob(mm_to_hmm(machine), state, g)
    if isinstance(machine, HiddenMarkovModel):
        return hmm_gap_prob(machine, state, g)
    if isinstance(machine, HqmmModel):
        return hqmm_gap_prob(machine, state, g)
    raise TypeError(f"unsupported machine type {type(machine).__name__}")


def block_prob(machine, state, g: int) -> float:
    if isinstance(machine, MarkovModel):
        return hmm_block_prob(mm_to_hmm(machine), state, g)
    if isinstance(machine, HiddenMarkovModel):
        return hmm_block_prob(machine, state, g)
    if isinstance(machine, HqmmModel):
        return hqmm_block_prob(machine, state, g)
    raise TypeError(f"unsupported machine type {type(machine).__name__}")

