"""Monte Carlo trajectories of single machines and empirical word frequencies.

Every step consumes one uniform variate ``u`` and emits ``A`` when
``u < Pr(A)``. Uniforms come from numpy's Philox generator seeded with
``SeedSequence(master_seed, spawn_key=(stream_index,))``; long runs draw them
up front and hand them to a compiled kernel, which makes a run reproduce the
same symbols as repeated calls to :func:`step_classical` / :func:`step_quantum`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numba
import numpy as np

from .errors import ConsistencyError, ContractError
from .models import (
    HiddenMarkovModel,
    HqmmModel,
    MarkovModel,
    ProbVector,
    PureState,
    Symbol,
    format_word,
    mm_to_hmm,
    parse_word,
)

RNG_ALGORITHM = "numpy.random.Philox seeded by SeedSequence(master_seed, spawn_key=(stream_index,))"
DEFAULT_BURN_IN = 1000
_ZERO = 1e-300


@dataclass(frozen=True)
class RngSeed:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            value = getattr(self, name)
            if not 0 <= int(value) < 2**64:
                raise ContractError(f"{name} must be a 64-bit unsigned integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index),))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Recorded output symbols (0 = A, 1 = B) and the final hidden state."""

    codes: np.ndarray
    final_state: Union[ProbVector, PureState]

    @property
    def steps(self) -> int:
        return int(self.codes.shape[0])

    @property
    def symbols(self) -> Tuple[Symbol, ...]:
        return tuple(Symbol(int(c)) for c in self.codes)

    def text(self) -> str:
        return self.codes.astype(np.uint8).tobytes().translate(bytes.maketrans(b"\x00\x01", b"AB")).decode()


@dataclass(frozen=True)
class EmpiricalEstimate:
    estimate: float
    count: int
    windows: int
    stderr: float

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "count": self.count, "windows": self.windows, "stderr": self.stderr}


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------


def step_classical(hmm: HiddenMarkovModel, state: ProbVector, rng: np.random.Generator):
    p = state.probs if isinstance(state, ProbVector) else np.asarray(state, dtype=float)
    v_a = hmm.t_a @ p
    v_b = hmm.t_b @ p
    pr_a, pr_b = v_a.sum(), v_b.sum()
    if pr_a + pr_b <= _ZERO:
        raise ConsistencyError("both output branches have zero probability")
    u = rng.random()
    if u < pr_a / (pr_a + pr_b):
        return Symbol.A, ProbVector(v_a / pr_a)
    return Symbol.B, ProbVector(v_b / pr_b)


def step_quantum(hqmm: HqmmModel, state: PureState, rng: np.random.Generator):
    psi = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
    phi_a = hqmm.k_a @ psi
    phi_b = hqmm.k_b @ psi
    pr_a = float(np.vdot(phi_a, phi_a).real)
    pr_b = float(np.vdot(phi_b, phi_b).real)
    if pr_a + pr_b <= _ZERO:
        raise ConsistencyError("both Kraus branches annihilate the state")
    u = rng.random()
    if u < pr_a / (pr_a + pr_b):
        return Symbol.A, PureState(phi_a / math.sqrt(pr_a))
    return Symbol.B, PureState(phi_b / math.sqrt(pr_b))


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _classical_kernel(t_a, t_b, p, uniforms, out):
    n = p.shape[0]
    v_a = np.empty(n)
    v_b = np.empty(n)
    for step in range(uniforms.shape[0]):
        pr_a = 0.0
        pr_b = 0.0
        for j in range(n):
            sa = 0.0
            sb = 0.0
            for i in range(n):
                sa += t_a[j, i] * p[i]
                sb += t_b[j, i] * p[i]
            v_a[j] = sa
            v_b[j] = sb
            pr_a += sa
            pr_b += sb
        total = pr_a + pr_b
        if total <= 1e-300:
            return -1
        if uniforms[step] < pr_a / total:
            out[step] = 0
            for j in range(n):
                p[j] = v_a[j] / pr_a
        else:
            out[step] = 1
            for j in range(n):
                p[j] = v_b[j] / pr_b
    return 0


@numba.njit(cache=True)
def _quantum_kernel(k_a, k_b, psi, uniforms, out):
    for step in range(uniforms.shape[0]):
        a0 = k_a[0, 0] * psi[0] + k_a[0, 1] * psi[1]
        a1 = k_a[1, 0] * psi[0] + k_a[1, 1] * psi[1]
        b0 = k_b[0, 0] * psi[0] + k_b[0, 1] * psi[1]
        b1 = k_b[1, 0] * psi[0] + k_b[1, 1] * psi[1]
        pr_a = a0.real * a0.real + a0.imag * a0.imag + a1.real * a1.real + a1.imag * a1.imag
        pr_b = b0.real * b0.real + b0.imag * b0.imag + b1.real * b1.real + b1.imag * b1.imag
        total = pr_a + pr_b
        if total <= 1e-300:
            return -1
        if uniforms[step] < pr_a / total:
            out[step] = 0
            norm = math.sqrt(pr_a)
            psi[0] = a0 / norm
            psi[1] = a1 / norm
        else:
            out[step] = 1
            norm = math.sqrt(pr_b)
            psi[0] = b0 / norm
            psi[1] = b1 / norm
    return 0


def simulate(
    machine: Union[MarkovModel, HiddenMarkovModel, HqmmModel],
    n_steps: int,
    burn_in: int = DEFAULT_BURN_IN,
    seed: RngSeed = RngSeed(0),
) -> TrajectoryRecord:
    """Run ``burn_in`` unrecorded steps then record ``n_steps`` symbols.

    Classical machines start from the uniform distribution, the qubit from
    basis state index 0.
    """
    if n_steps < 1:
        raise ContractError(f"n_steps must be at least 1, got {n_steps}")
    if burn_in < 0:
        raise ContractError(f"burn_in must be non-negative, got {burn_in}")
    uniforms = seed.generator().random(burn_in + n_steps)
    out = np.empty(burn_in + n_steps, dtype=np.uint8)
    if isinstance(machine, MarkovModel):
        machine = mm_to_hmm(machine)
    if isinstance(machine, HiddenMarkovModel):
        n = machine.n_states
        state = np.full(n, 1.0 / n)
        status = _classical_kernel(np.ascontiguousarray(machine.t_a), np.ascontiguousarray(machine.t_b), state, uniforms, out)
        final = ProbVector(state / state.sum())
    elif isinstance(machine, HqmmModel):
        state = np.array([1.0, 0.0], dtype=complex)
        status = _quantum_kernel(np.ascontiguousarray(machine.k_a), np.ascontiguousarray(machine.k_b), state, uniforms, out)
        final = PureState(state / np.linalg.norm(state))
    else:
        raise TypeError(f"unsupported machine type {type(machine).__name__}")
    if status != 0:
        raise ConsistencyError("trajectory reached a state with zero total output probability")
    codes = out[burn_in:]
    codes.setflags(write=False)
    return TrajectoryRecord(codes, final)


def empirical_word_prob(record: TrajectoryRecord, word) -> EmpiricalEstimate:
    """Fraction of (overlapping) windows of the record that spell ``word``."""
    pattern = np.array([int(s) for s in parse_word(word)], dtype=np.uint8)
    length = pattern.shape[0]
    if record.steps < length:
        raise ContractError(f"record of {record.steps} steps is shorter than word {format_word(pattern)!r}")
    windows = record.steps - length + 1
    match = np.ones(windows, dtype=bool)
    for k, code in enumerate(pattern):
        match &= record.codes[k : k + windows] == code
    count = int(match.sum())
    estimate = count / windows
    return EmpiricalEstimate(estimate, count, windows, math.sqrt(estimate * (1.0 - estimate) / windows))
