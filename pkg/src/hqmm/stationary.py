"""Stationary states of the three machine classes.

HMMs and HQMMs are solved by averaged power iteration. Each step replaces the
iterate ``x`` with ``(x + F(x)) / 2`` where ``F`` is the ensemble-averaged
one-step map. The averaged map has the same fixed points as ``F`` but maps
every peripheral eigenvalue other than 1 strictly inside the unit disk, so
period-2 chains and rational rotations converge instead of oscillating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .models import DensityMatrix, HiddenMarkovModel, HqmmModel, MarkovModel, ProbVector

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class FixedPointReport:
    state: Union[ProbVector, DensityMatrix]
    iterations: int
    residual: float
    converged: bool

    def to_dict(self) -> dict:
        if isinstance(self.state, ProbVector):
            state = self.state.to_list()
        else:
            state = [[[z.real, z.imag] for z in row] for row in self.state.entries]
        return {
            "state": state,
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
        }


def mm_stationary(mm: MarkovModel) -> ProbVector:
    # (1 - q) + (1 - p) rather than 2 - p - q keeps the pair summing to 1 near p, q -> 1
    stay_b, stay_a = 1.0 - mm.q, 1.0 - mm.p
    denom = stay_b + stay_a
    return ProbVector(np.array([stay_b / denom, stay_a / denom]))


def mm_residual(mm: MarkovModel, p_ss: ProbVector) -> float:
    return float(np.abs(mm.transition @ p_ss.probs - p_ss.probs).sum())


def superoperator_matrix(hqmm: HqmmModel) -> np.ndarray:
    """4x4 matrix of the channel acting on row-major ``rho.reshape(4)``.

    With row-major stacking vec(X rho Y) = (X kron Y^T) vec(rho), so the term
    K rho K^dag contributes K kron conj(K).
    """
    return np.kron(hqmm.k_a, hqmm.k_a.conj()) + np.kron(hqmm.k_b, hqmm.k_b.conj())


def _power_iterate(step, x0, norm, tol, max_iter, damped):
    """Shared loop. Returns (x, iterations, converged).

    Stops once successive iterates differ by at most ``tol`` and the geometric
    tail estimated from the ratio of the last two differences is also below
    ``tol``; the second condition keeps slowly mixing machines from stopping
    far from their fixed point.
    """
    x = x0
    prev_diff = None
    for it in range(1, max_iter + 1):
        fx = step(x)
        new = (x + fx) / 2 if damped else fx
        diff = norm(new - x)
        x = new
        if diff == 0.0:
            return x, it, True
        if diff <= tol and prev_diff is not None:
            ratio = diff / prev_diff
            if ratio < 1.0 and diff * ratio / (1.0 - ratio) <= tol:
                return x, it, True
        prev_diff = diff
    return x, max_iter, False


def hmm_stationary(
    hmm: HiddenMarkovModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    damped: bool = True,
) -> FixedPointReport:
    t = hmm.transition
    n = hmm.n_states
    p0 = np.full(n, 1.0 / n)

    def step(p):
        out = t @ p
        return out / out.sum()

    def l1(v):
        return float(np.abs(v).sum())

    p, iterations, converged = _power_iterate(step, p0, l1, tol, max_iter, damped)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    residual = l1(t @ p - p)
    return FixedPointReport(ProbVector(p), iterations, residual, converged and residual <= 10 * tol)


def hqmm_stationary(
    hqmm: HqmmModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    damped: bool = True,
) -> FixedPointReport:
    sup = superoperator_matrix(hqmm)

    def step(v):
        rho = (sup @ v).reshape(2, 2)
        rho = (rho + rho.conj().T) / 2
        return (rho / rho.trace().real).reshape(4)

    def fro(v):
        return float(np.linalg.norm(v))

    v0 = (np.eye(2, dtype=complex) / 2).reshape(4)
    v, iterations, converged = _power_iterate(step, v0, fro, tol, max_iter, damped)
    rho = v.reshape(2, 2)
    rho = (rho + rho.conj().T) / 2
    rho = rho / rho.trace().real
    residual = fro(sup @ rho.reshape(4) - rho.reshape(4))
    state = DensityMatrix(rho, tol=1e-10)
    return FixedPointReport(state, iterations, residual, converged and residual <= 10 * tol)


def stationary(machine, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FixedPointReport:
    """Dispatch on machine class; MMs use the closed form."""
    if isinstance(machine, MarkovModel):
        p_ss = mm_stationary(machine)
        return FixedPointReport(p_ss, 0, mm_residual(machine, p_ss), True)
    if isinstance(machine, HiddenMarkovModel):
        return hmm_stationary(machine, tol, max_iter)
    if isinstance(machine, HqmmModel):
        return hqmm_stationary(machine, tol, max_iter)
    raise TypeError(f"unsupported machine type {type(machine).__name__}")
