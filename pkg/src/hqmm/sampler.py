"""Random machine ensembles.

Each machine is a pure function of ``(master_seed, machine_index)``:

* ``mm``: p, q independent uniform on (0, 1).
* ``hmm``: every column of T is flat-Dirichlet on the simplex; each entry is
  split as t_A = u t, t_B = (1 - u) t with an independent u ~ U(0, 1).
* ``hqmm_restricted``: a ~ U(0, 1), phi and theta ~ U(0, 2 pi).

Exact endpoint draws are rejected and redrawn.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ContractError
from .models import (
    INTERNAL_TOL,
    HiddenMarkovModel,
    HqmmModel,
    MarkovModel,
    RestrictedParams,
    make_hmm,
    make_mm,
    restricted_hqmm,
)
from .trajectory import RngSeed

MACHINE_CLASSES = ("mm", "hmm", "hqmm_restricted")

DISTRIBUTIONS = {
    "mm": "p, q ~ U(0,1) independent",
    "hmm": "columns of T ~ Dirichlet(1,...,1); t_A = u*T, t_B = T - t_A with u ~ U(0,1) per entry",
    "hqmm_restricted": "a ~ U(0,1); phi, theta ~ U(0,2pi) independent",
}


@dataclass(frozen=True)
class EnsembleSpec:
    machine_class: str
    n_machines: int
    master_seed: int
    n_states: Optional[int] = None

    def __post_init__(self):
        if self.machine_class not in MACHINE_CLASSES:
            raise ContractError(f"unknown machine class {self.machine_class!r}; expected one of {MACHINE_CLASSES}")
        if int(self.n_machines) < 1:
            raise ContractError("n_machines must be at least 1")
        if self.machine_class == "hmm":
            if self.n_states is None or int(self.n_states) < 2:
                raise ContractError("hmm ensembles need n_states >= 2")
        elif self.n_states is not None:
            raise ContractError("n_states is only meaningful for hmm ensembles")

    @property
    def label(self) -> str:
        if self.machine_class == "hmm":
            return f"hmm_n{self.n_states}"
        return self.machine_class

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["n_states"] is None:
            del out["n_states"]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleSpec":
        return cls(
            machine_class=data["machine_class"],
            n_machines=int(data["n_machines"]),
            master_seed=int(data["master_seed"]),
            n_states=None if data.get("n_states") is None else int(data["n_states"]),
        )

    def sample(self, index: int):
        return sample_machine(self.machine_class, RngSeed(self.master_seed, index), self.n_states)


def _open_uniform(rng: np.random.Generator, size=None):
    draw = rng.random(size)
    if size is None:
        while draw == 0.0:
            draw = rng.random()
        return float(draw)
    zero = draw == 0.0
    while zero.any():
        draw[zero] = rng.random(int(zero.sum()))
        zero = draw == 0.0
    return draw


def sample_mm(seed: RngSeed) -> MarkovModel:
    rng = seed.generator()
    p = _open_uniform(rng)
    q = _open_uniform(rng)
    return make_mm(p, q)


def sample_hmm(n_states: int, seed: RngSeed) -> HiddenMarkovModel:
    if int(n_states) < 2:
        raise ContractError(f"n_states must be at least 2, got {n_states}")
    n = int(n_states)
    rng = seed.generator()
    # dirichlet draws rows; each row becomes one column of T
    t = rng.dirichlet(np.ones(n), size=n).T
    split = _open_uniform(rng, (n, n))
    t_a = split * t
    t_b = t - t_a
    return make_hmm(t_a, t_b, tol=INTERNAL_TOL)


def sample_restricted_params(seed: RngSeed) -> RestrictedParams:
    rng = seed.generator()
    a = _open_uniform(rng)
    phi = 2 * math.pi * _open_uniform(rng)
    theta = 2 * math.pi * _open_uniform(rng)
    return RestrictedParams(a, phi, theta)


def sample_restricted_hqmm(seed: RngSeed) -> HqmmModel:
    return restricted_hqmm(sample_restricted_params(seed))


def sample_machine(machine_class: str, seed: RngSeed, n_states: Optional[int] = None):
    if machine_class == "mm":
        return sample_mm(seed)
    if machine_class == "hmm":
        return sample_hmm(n_states, seed)
    if machine_class == "hqmm_restricted":
        return sample_restricted_hqmm(seed)
    raise ContractError(f"unknown machine class {machine_class!r}")
