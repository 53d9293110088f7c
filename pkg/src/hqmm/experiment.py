"""Random-ensemble scatter experiments: (P(B), P(word)) per sampled machine.

Outputs of :func:`run_scatter` are one CSV per ensemble plus ``manifest.json``.
CSV header: ``class,index,p_b,p_word,converged,iterations,<params...>`` where
the parameter columns are

* mm: ``p,q``
* hmm: ``ta_<j><i>`` for every entry of t_A in row-major order, then ``tb_<j><i>``
* hqmm_restricted: ``a,phi,theta``

Floats are written with 17 significant digits so they round-trip exactly.
Machines whose stationary solver did not converge are left out of the CSV and
counted in the manifest.
"""

from __future__ import annotations

import csv
import json
import os
import platform
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import ContractError
from .models import HiddenMarkovModel, HqmmModel, MarkovModel, format_word, mm_to_hmm, parse_word
from .sampler import DISTRIBUTIONS, EnsembleSpec
from .stationary import DEFAULT_MAX_ITER, DEFAULT_TOL, stationary
from .trajectory import RNG_ALGORITHM
from .wordprob import hmm_word_prob, hqmm_word_prob

SEED_ENV_VAR = "HQMM_MASTER_SEED"
DEFAULT_BINS = 20
LOW_CONFIDENCE = 50
BASE_COLUMNS = ["class", "index", "p_b", "p_word", "converged", "iterations"]


@dataclass(frozen=True)
class ScatterRecord:
    machine_class: str
    machine_index: int
    parameters: tuple
    p_b: Optional[float]
    p_word: Optional[float]
    converged: bool
    iterations: int


@dataclass
class ExperimentConfig:
    ensembles: List[EnsembleSpec]
    output_path: Path
    word: str = "BAAAB"
    tolerance: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    bins: int = DEFAULT_BINS
    workers: int = 1
    seed_override: Optional[int] = field(default=None, repr=False)

    def __post_init__(self):
        self.word = format_word(parse_word(self.word))
        self.output_path = Path(self.output_path)
        if not self.ensembles:
            raise ContractError("config needs at least one ensemble")
        if int(self.bins) < 2:
            raise ContractError(f"bins must be at least 2, got {self.bins}")
        if not self.tolerance > 0:
            raise ContractError("tolerance must be positive")
        if int(self.max_iter) < 1 or int(self.workers) < 1:
            raise ContractError("max_iter and workers must be positive")

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        try:
            ensembles = [EnsembleSpec.from_dict(e) for e in data["ensembles"]]
            output = Path(data["output_path"])
        except (KeyError, TypeError) as exc:
            raise ContractError(f"invalid experiment config: {exc}") from exc
        if base_dir is not None and not output.is_absolute():
            output = base_dir / output
        override = os.environ.get(SEED_ENV_VAR)
        seed_override = None
        if override:
            try:
                seed_override = int(override)
            except ValueError as exc:
                raise ContractError(f"{SEED_ENV_VAR} must be an integer, got {override!r}") from exc
            ensembles = [
                EnsembleSpec(e.machine_class, e.n_machines, seed_override, e.n_states) for e in ensembles
            ]
        return cls(
            ensembles=ensembles,
            output_path=output,
            word=data.get("word", "BAAAB"),
            tolerance=float(data.get("tolerance", DEFAULT_TOL)),
            max_iter=int(data.get("max_iter", DEFAULT_MAX_ITER)),
            bins=int(data.get("bins", DEFAULT_BINS)),
            workers=int(data.get("workers", 1)),
            seed_override=seed_override,
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ContractError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data, base_dir=path.parent)


def evaluate_machine(
    machine,
    word="BAAAB",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    machine_class: Optional[str] = None,
    machine_index: int = 0,
) -> ScatterRecord:
    report = stationary(machine, tol, max_iter)
    if machine_class is None:
        machine_class = _class_tag(machine)
    params = tuple(float(v) for v in machine.parameters)
    if not report.converged:
        return ScatterRecord(machine_class, machine_index, params, None, None, False, report.iterations)
    if isinstance(machine, HqmmModel):
        p_b = hqmm_word_prob(machine, report.state, "B")
        p_word = hqmm_word_prob(machine, report.state, word)
    else:
        hmm = mm_to_hmm(machine) if isinstance(machine, MarkovModel) else machine
        p_b = hmm_word_prob(hmm, report.state, "B")
        p_word = hmm_word_prob(hmm, report.state, word)
    return ScatterRecord(machine_class, machine_index, params, p_b, p_word, True, report.iterations)


def _class_tag(machine) -> str:
    if isinstance(machine, MarkovModel):
        return "mm"
    if isinstance(machine, HiddenMarkovModel):
        return f"hmm_n{machine.n_states}"
    if isinstance(machine, HqmmModel):
        return "hqmm_restricted" if machine.params is not None else "hqmm"
    raise TypeError(f"unsupported machine type {type(machine).__name__}")


def _evaluate_chunk(args) -> List[ScatterRecord]:
    spec, start, stop, word, tol, max_iter = args
    return [
        evaluate_machine(spec.sample(i), word, tol, max_iter, spec.label, i) for i in range(start, stop)
    ]


def evaluate_ensemble(
    spec: EnsembleSpec,
    word="BAAAB",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    workers: int = 1,
) -> List[ScatterRecord]:
    """Sample and evaluate every machine of an ensemble, ordered by index."""
    word = format_word(parse_word(word))
    n = spec.n_machines
    if workers <= 1:
        return _evaluate_chunk((spec, 0, n, word, tol, max_iter))
    chunk = max(1, -(-n // (workers * 8)))
    tasks = [(spec, s, min(s + chunk, n), word, tol, max_iter) for s in range(0, n, chunk)]
    records: List[ScatterRecord] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_evaluate_chunk, tasks):
            records.extend(part)
    return records


def param_columns(spec: EnsembleSpec) -> List[str]:
    if spec.machine_class == "mm":
        return ["p", "q"]
    if spec.machine_class == "hmm":
        n = spec.n_states
        cells = [f"{j}{i}" for j in range(n) for i in range(n)]
        return [f"ta_{c}" for c in cells] + [f"tb_{c}" for c in cells]
    return ["a", "phi", "theta"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_scatter_csv(path: Path, spec: EnsembleSpec, records: Sequence[ScatterRecord]) -> int:
    written = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BASE_COLUMNS + param_columns(spec))
        for r in records:
            if not r.converged:
                continue
            writer.writerow(
                [r.machine_class, r.machine_index, _fmt(r.p_b), _fmt(r.p_word), 1, r.iterations]
                + [_fmt(v) for v in r.parameters]
            )
            written += 1
    return written


def read_scatter_csv(path) -> List[ScatterRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[: len(BASE_COLUMNS)] != BASE_COLUMNS:
            raise ContractError(f"{path}: not a scatter CSV (header {header!r})")
        for row in reader:
            records.append(
                ScatterRecord(
                    machine_class=row[0],
                    machine_index=int(row[1]),
                    parameters=tuple(float(v) for v in row[len(BASE_COLUMNS):]),
                    p_b=float(row[2]),
                    p_word=float(row[3]),
                    converged=row[4] in ("1", "true", "True"),
                    iterations=int(row[5]),
                )
            )
    return records


def _check_writable(directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    fd, probe = tempfile.mkstemp(dir=directory, prefix=".probe")
    os.close(fd)
    os.unlink(probe)


def csv_name(k: int, spec: EnsembleSpec) -> str:
    return f"{k:02d}_{spec.label}.csv"


def run_scatter(config: ExperimentConfig, workers: Optional[int] = None) -> List[ScatterRecord]:
    """Evaluate every ensemble of ``config`` and write CSVs plus a manifest.

    Raises OSError before any sampling if the output directory is unusable.
    """
    out_dir = config.output_path
    _check_writable(out_dir)
    workers = config.workers if workers is None else workers
    all_records: List[ScatterRecord] = []
    entries = []
    for k, spec in enumerate(config.ensembles):
        records = evaluate_ensemble(spec, config.word, config.tolerance, config.max_iter, workers)
        name = csv_name(k, spec)
        written = write_scatter_csv(out_dir / name, spec, records)
        entries.append(
            {
                **spec.to_dict(),
                "label": spec.label,
                "distribution": DISTRIBUTIONS[spec.machine_class],
                "csv": name,
                "n_converged": written,
                "n_excluded": len(records) - written,
            }
        )
        all_records.extend(records)
    manifest = {
        "software": {
            "package": "hqmm",
            "version": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "rng": RNG_ALGORITHM,
        "word": config.word,
        "solver": {
            "tolerance": config.tolerance,
            "max_iter": config.max_iter,
            "method": "averaged power iteration x <- (x + F(x))/2 from uniform / maximally mixed start; "
            "closed form for mm",
        },
        "bins": config.bins,
        "seed_override": None if config.seed_override is None else {"env": SEED_ENV_VAR, "value": config.seed_override},
        "ensembles": entries,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return all_records


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeReport:
    """Per-bin maximum of p_word for each machine class.

    ``maxima[cls][b]`` is None for an empty bin. Bin ``b`` covers
    ``[b/bins, (b+1)/bins)``; the last bin also includes p_b = 1.
    """

    bins: int
    centers: tuple
    maxima: Dict[str, tuple]
    counts: Dict[str, tuple]

    def low_confidence(self, cls: str) -> tuple:
        return tuple(0 < c < LOW_CONFIDENCE for c in self.counts[cls])

    def to_dict(self) -> dict:
        return {
            "bins": self.bins,
            "centers": list(self.centers),
            "classes": {
                cls: {
                    "max_p_word": list(self.maxima[cls]),
                    "count": list(self.counts[cls]),
                    "low_confidence": list(self.low_confidence(cls)),
                }
                for cls in self.maxima
            },
        }

    def format_table(self) -> str:
        classes = list(self.maxima)
        lines = ["bin_center," + ",".join(f"{c}_max,{c}_n" for c in classes)]
        for b, center in enumerate(self.centers):
            cells = []
            for c in classes:
                m = self.maxima[c][b]
                flag = "*" if self.low_confidence(c)[b] else ""
                cells.append(("" if m is None else f"{m:.6g}{flag}") + f",{self.counts[c][b]}")
            lines.append(f"{center:.4f}," + ",".join(cells))
        return "\n".join(lines)


def bin_index(p_b: float, bins: int) -> int:
    return min(int(p_b * bins), bins - 1)


def envelope(records: Sequence[ScatterRecord], bins: int = DEFAULT_BINS) -> EnvelopeReport:
    if int(bins) < 2:
        raise ContractError(f"bins must be at least 2, got {bins}")
    converged = [r for r in records if r.converged]
    if not converged:
        raise ContractError("envelope needs at least one converged record")
    classes: List[str] = []
    for r in converged:
        if r.machine_class not in classes:
            classes.append(r.machine_class)
    maxima = {c: [None] * bins for c in classes}
    counts = {c: [0] * bins for c in classes}
    for r in converged:
        b = bin_index(r.p_b, bins)
        counts[r.machine_class][b] += 1
        current = maxima[r.machine_class][b]
        if current is None or r.p_word > current:
            maxima[r.machine_class][b] = r.p_word
    centers = tuple((b + 0.5) / bins for b in range(bins))
    return EnvelopeReport(
        bins,
        centers,
        {c: tuple(v) for c, v in maxima.items()},
        {c: tuple(v) for c, v in counts.items()},
    )
