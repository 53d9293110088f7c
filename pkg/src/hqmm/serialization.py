"""JSON documents for machine definitions.

Layouts::

    {"type": "mm", "p": 0.3, "q": 0.8}
    {"type": "hmm", "t_a": [[...], ...], "t_b": [[...], ...]}
    {"type": "hqmm_restricted", "a": 0.5, "phi": 1.0, "theta": 2.0}
    {"type": "hqmm", "k_a": [[[re, im], [re, im]], [[re, im], [re, im]]], "k_b": ...}

Matrices are row-major nested lists; complex entries are ``[re, im]`` pairs
(a bare real number is accepted as an entry with zero imaginary part).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .errors import ContractError
from .models import (
    HiddenMarkovModel,
    HqmmModel,
    MarkovModel,
    RestrictedParams,
    make_hmm,
    make_hqmm,
    make_mm,
    restricted_hqmm,
)


def _complex_matrix(data) -> np.ndarray:
    def entry(z):
        if isinstance(z, (list, tuple)):
            if len(z) != 2:
                raise ContractError(f"complex entries must be [re, im] pairs, got {z!r}")
            return complex(float(z[0]), float(z[1]))
        return complex(float(z))

    return np.array([[entry(z) for z in row] for row in data], dtype=complex)


def _complex_to_json(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]


def machine_from_dict(data: dict):
    """Build and validate a machine; raises ValidationError/DomainError on bad values."""
    if not isinstance(data, dict) or "type" not in data:
        raise ContractError("machine document must be an object with a 'type' field")
    kind = data["type"]
    try:
        if kind == "mm":
            return make_mm(data["p"], data["q"])
        if kind == "hmm":
            return make_hmm(data["t_a"], data["t_b"])
        if kind == "hqmm_restricted":
            return restricted_hqmm(RestrictedParams(float(data["a"]), float(data["phi"]), float(data["theta"])))
        if kind == "hqmm":
            return make_hqmm(_complex_matrix(data["k_a"]), _complex_matrix(data["k_b"]))
    except KeyError as exc:
        raise ContractError(f"machine document of type {kind!r} is missing field {exc.args[0]!r}") from exc
    raise ContractError(f"unknown machine type {kind!r}")


def machine_to_dict(machine) -> dict:
    if isinstance(machine, MarkovModel):
        return {"type": "mm", "p": machine.p, "q": machine.q}
    if isinstance(machine, HiddenMarkovModel):
        return {"type": "hmm", "t_a": machine.t_a.tolist(), "t_b": machine.t_b.tolist()}
    if isinstance(machine, HqmmModel):
        if machine.params is not None:
            p = machine.params
            return {"type": "hqmm_restricted", "a": p.a, "phi": p.phi, "theta": p.theta}
        return {"type": "hqmm", "k_a": _complex_to_json(machine.k_a), "k_b": _complex_to_json(machine.k_b)}
    raise TypeError(f"unsupported machine type {type(machine).__name__}")


def load_machine(path: Union[str, Path]):
    with open(path) as fh:
        return machine_from_dict(json.load(fh))


def dump_machine(machine, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(machine_to_dict(machine), fh, indent=2)
        fh.write("\n")
