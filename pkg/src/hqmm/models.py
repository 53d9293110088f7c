"""Machine definitions: Markov models, hidden Markov models and one-qubit HQMMs.

Conventions used throughout the package:

* States are column vectors and machines act on the left, so column ``i`` of a
  transition matrix holds the outgoing distribution of state ``i``.
* Indices are 0-based. For a two-state Markov model, state 0 emits ``A`` and
  state 1 emits ``B``; for the qubit, index 0 is the basis state ``|1>``
  (ground state in the atom-decay picture) and index 1 is ``|2>``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConsistencyError, DomainError, ValidationError

#: Tolerance for matrices supplied by users (e.g. read from JSON with rounded decimals).
USER_TOL = 1e-10
#: Tolerance for matrices constructed by this package.
INTERNAL_TOL = 1e-12

TWO_PI = 2.0 * math.pi


class Symbol(enum.IntEnum):
    A = 0
    B = 1

    def __str__(self) -> str:
        return self.name


Word = Tuple[Symbol, ...]


def parse_word(text: Union[str, Iterable]) -> Word:
    """Turn ``"BAAAB"`` (or any iterable of symbols/characters) into a Word."""
    if isinstance(text, str):
        text = text.strip()
    try:
        word = tuple(s if isinstance(s, Symbol) else Symbol[str(s).upper()] for s in text)
    except KeyError as exc:
        raise DomainError(f"word may only contain A and B, got {text!r}") from exc
    if not word:
        raise DomainError("word must contain at least one symbol")
    return word


def format_word(word: Iterable) -> str:
    return "".join(Symbol(int(s)).name for s in word)


def _frozen(array, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# state representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProbVector:
    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs, float)
        if probs.ndim != 1:
            raise ValidationError("probability vector must be one-dimensional")
        if np.any(probs < -INTERNAL_TOL) or np.any(probs > 1 + INTERNAL_TOL):
            raise ValidationError(f"probability vector entries outside [0, 1]: {probs}")
        if abs(probs.sum() - 1.0) > INTERNAL_TOL:
            raise ValidationError(f"probability vector sums to {probs.sum():.17g}")
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.probs.shape[0]

    def to_list(self) -> list:
        return self.probs.tolist()


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes, complex)
        if amps.shape != (2,):
            raise ValidationError("pure state must be a complex 2-vector")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > INTERNAL_TOL:
            raise ValidationError(f"pure state has squared norm {norm2:.17g}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, index: int) -> "PureState":
        amps = np.zeros(2, complex)
        amps[index] = 1.0
        return cls(amps)

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite 2x2 matrix.

    The normalization enforced is the trace condition rho_00 + rho_11 = 1.
    """

    entries: np.ndarray
    tol: float = field(default=INTERNAL_TOL, repr=False)

    def __post_init__(self):
        rho = _frozen(self.entries, complex)
        if rho.shape != (2, 2):
            raise ValidationError("density matrix must be 2x2")
        herm = np.abs(rho - rho.conj().T).max()
        if herm > self.tol:
            raise ValidationError(f"density matrix is not Hermitian (deviation {herm:.3g})")
        trace = rho.trace().real
        if abs(trace - 1.0) > self.tol:
            raise ValidationError(f"density matrix has trace {trace:.17g}")
        min_eig = np.linalg.eigvalsh(rho).min()
        if min_eig < -self.tol:
            raise ValidationError(f"density matrix has negative eigenvalue {min_eig:.3g}")
        object.__setattr__(self, "entries", rho)

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(np.eye(2) / 2)


# ---------------------------------------------------------------------------
# machines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarkovModel:
    """Two-state Markov chain; emitted symbol equals the entered state."""

    p: float
    q: float

    @property
    def transition(self) -> np.ndarray:
        p, q = self.p, self.q
        return np.array([[p, 1.0 - q], [1.0 - p, q]])

    @property
    def parameters(self) -> list:
        return [self.p, self.q]


@dataclass(frozen=True, eq=False)
class HiddenMarkovModel:
    """Mealy HMM with sub-transition matrices ``t_a`` and ``t_b``.

    ``t_a[j, i]`` is the probability of moving from hidden state ``i`` to ``j``
    while emitting ``A``.
    """

    t_a: np.ndarray
    t_b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t_a", _frozen(self.t_a, float))
        object.__setattr__(self, "t_b", _frozen(self.t_b, float))

    @property
    def n_states(self) -> int:
        return self.t_a.shape[0]

    @property
    def transition(self) -> np.ndarray:
        return self.t_a + self.t_b

    def sub_transition(self, symbol: Symbol) -> np.ndarray:
        return self.t_a if symbol == Symbol.A else self.t_b

    @property
    def parameters(self) -> list:
        return self.t_a.ravel().tolist() + self.t_b.ravel().tolist()


@dataclass(frozen=True)
class RestrictedParams:
    a: float
    phi: float
    theta: float


@dataclass(frozen=True, eq=False)
class HqmmModel:
    """One-qubit HQMM given by the Kraus pair (``k_a``, ``k_b``).

    ``params`` is set when the model came from the three-parameter family.
    """

    k_a: np.ndarray
    k_b: np.ndarray
    params: Optional[RestrictedParams] = None

    def __post_init__(self):
        object.__setattr__(self, "k_a", _frozen(self.k_a, complex))
        object.__setattr__(self, "k_b", _frozen(self.k_b, complex))

    def kraus(self, symbol: Symbol) -> np.ndarray:
        return self.k_a if symbol == Symbol.A else self.k_b

    @property
    def parameters(self) -> list:
        if self.params is not None:
            return [self.params.a, self.params.phi, self.params.theta]
        flat = np.concatenate([self.k_a.ravel(), self.k_b.ravel()])
        return [v for z in flat for v in (z.real, z.imag)]


Machine = Union[MarkovModel, HiddenMarkovModel, HqmmModel]


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def _check_open_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in the open interval (0, 1), got {value!r}")
    return value


def make_mm(p: float, q: float) -> MarkovModel:
    return MarkovModel(_check_open_unit("p", p), _check_open_unit("q", q))


def mm_to_hmm(mm: MarkovModel) -> HiddenMarkovModel:
    """Embed a Markov model as a two-state HMM.

    Entering state 0 emits A and entering state 1 emits B, so ``t_a`` keeps
    row 0 of the transition matrix and ``t_b`` keeps row 1.
    """
    t = mm.transition
    t_a = np.zeros((2, 2))
    t_b = np.zeros((2, 2))
    t_a[0] = t[0]
    t_b[1] = t[1]
    return HiddenMarkovModel(t_a, t_b)


def make_hmm(t_a, t_b, tol: float = USER_TOL) -> HiddenMarkovModel:
    t_a = np.asarray(t_a, dtype=float)
    t_b = np.asarray(t_b, dtype=float)
    if t_a.ndim != 2 or t_a.shape[0] != t_a.shape[1]:
        raise ValidationError(f"t_a must be a square matrix, got shape {t_a.shape}")
    if t_b.shape != t_a.shape:
        raise ValidationError(f"t_a and t_b shapes differ: {t_a.shape} vs {t_b.shape}")
    if t_a.shape[0] < 2:
        raise ValidationError("an HMM needs at least two hidden states")
    if not (np.all(np.isfinite(t_a)) and np.all(np.isfinite(t_b))):
        raise ValidationError("sub-transition matrices must be finite")
    for name, mat in (("t_a", t_a), ("t_b", t_b)):
        if np.any(mat < 0):
            j, i = np.argwhere(mat < 0)[0]
            raise ValidationError(f"{name}[{j}, {i}] = {mat[j, i]!r} is negative")
        if np.any(mat > 1):
            j, i = np.argwhere(mat > 1)[0]
            raise ValidationError(f"{name}[{j}, {i}] = {mat[j, i]!r} exceeds 1")
    sums = (t_a + t_b).sum(axis=0)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        col = int(bad[0])
        raise ValidationError(f"column {col} of t_a + t_b sums to {sums[col]:.17g}, expected 1")
    return HiddenMarkovModel(t_a, t_b)


def kraus_deviation(k_a, k_b) -> float:
    """Frobenius norm of K_A^dag K_A + K_B^dag K_B - I."""
    k_a = np.asarray(k_a, dtype=complex)
    k_b = np.asarray(k_b, dtype=complex)
    total = k_a.conj().T @ k_a + k_b.conj().T @ k_b
    return float(np.linalg.norm(total - np.eye(2)))


def make_hqmm(k_a, k_b, tol: float = USER_TOL) -> HqmmModel:
    k_a = np.asarray(k_a, dtype=complex)
    k_b = np.asarray(k_b, dtype=complex)
    if k_a.shape != (2, 2) or k_b.shape != (2, 2):
        raise ValidationError(f"Kraus operators must be 2x2, got {k_a.shape} and {k_b.shape}")
    if not (np.all(np.isfinite(k_a)) and np.all(np.isfinite(k_b))):
        raise ValidationError("Kraus operators must be finite")
    dev = kraus_deviation(k_a, k_b)
    if dev > tol:
        raise ValidationError(f"Kraus completeness violated: deviation norm {dev:.6g}")
    return HqmmModel(k_a, k_b)


def make_restricted_params(a: float, phi: float, theta: float) -> RestrictedParams:
    # Closed ranges: the Kraus pair stays valid at the endpoints, and a = 0 or
    # zero angles are useful limiting cases.
    a, phi, theta = float(a), float(phi), float(theta)
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in [0, 1], got {a!r}")
    for name, angle in (("phi", phi), ("theta", theta)):
        if not 0.0 <= angle <= TWO_PI:
            raise DomainError(f"{name} must lie in [0, 2*pi], got {angle!r}")
    return RestrictedParams(a, phi, theta)


def restricted_kraus(a: float, phi: float, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    s = math.sqrt(1.0 - a * a)
    k_a = np.array([[math.cos(phi), -a * math.sin(phi)], [math.sin(phi), a * math.cos(phi)]], dtype=complex)
    k_b = np.array([[0.0, s * math.sin(theta)], [0.0, s * math.cos(theta)]], dtype=complex)
    return k_a, k_b


def restricted_hqmm(params: RestrictedParams) -> HqmmModel:
    params = make_restricted_params(params.a, params.phi, params.theta)
    k_a, k_b = restricted_kraus(params.a, params.phi, params.theta)
    model = make_hqmm(k_a, k_b, tol=INTERNAL_TOL)
    return HqmmModel(model.k_a, model.k_b, params)


def apply_superoperator(hqmm: HqmmModel, rho) -> DensityMatrix:
    """One ensemble-averaged step: rho -> K_A rho K_A^dag + K_B rho K_B^dag."""
    r = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    out = hqmm.k_a @ r @ hqmm.k_a.conj().T + hqmm.k_b @ r @ hqmm.k_b.conj().T
    return DensityMatrix((out + out.conj().T) / 2)


# ---------------------------------------------------------------------------
# atom-decay realization of the restricted family
# ---------------------------------------------------------------------------


def decay_unitaries(phi: float, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Rotations applied after a no-photon (U_A) or photon (U_B) interval."""
    u_a = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]], dtype=complex)
    u_b = np.array([[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]], dtype=complex)
    return u_a, u_b


def decay_conditional_maps(gamma: float, delta_t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Unnormalized state maps for no emission and for one emission in ``delta_t``.

    No emission damps the excited amplitude by exp(-gamma*dt/2). An emission
    returns the atom to the ground state, which the rotation U_B then carries
    to the column (sin theta, cos theta); this requires the excited amplitude
    to move into the second basis slot, giving [[0, 0], [0, sqrt(1 - e^{-gamma dt})]].
    """
    decay = math.exp(-gamma * delta_t / 2.0)
    no_photon = np.diag([1.0, decay]).astype(complex)
    photon = np.array([[0.0, 0.0], [0.0, math.sqrt(-math.expm1(-gamma * delta_t))]], dtype=complex)
    return no_photon, photon


def decay_realization(gamma: float, delta_t: float, phi: float, theta: float) -> HqmmModel:
    gamma, delta_t = float(gamma), float(delta_t)
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    if not delta_t > 0:
        raise DomainError(f"delta_t must be positive, got {delta_t!r}")
    a = math.exp(-gamma * delta_t / 2.0)
    model = restricted_hqmm(RestrictedParams(a, phi, theta))
    u_a, u_b = decay_unitaries(phi, theta)
    no_photon, photon = decay_conditional_maps(gamma, delta_t)
    dev_a = float(np.linalg.norm(model.k_a - u_a @ no_photon))
    dev_b = float(np.linalg.norm(model.k_b - u_b @ photon))
    if max(dev_a, dev_b) > INTERNAL_TOL:
        raise ConsistencyError(
            f"decay factorization mismatch: |K_A - U_A D_A| = {dev_a:.3g}, |K_B - U_B D_B| = {dev_b:.3g}"
        )
    return model
