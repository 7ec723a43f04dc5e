"""Binary classifier built on the steady-state map of two dissipative qubits.

A record's four attributes become the amplitudes of a two-qubit pure state.
The reservoir (a common thermal bath or a squeezed vacuum) sends that state
to its asymptotic state, whose 16 real matrix coordinates feed a linear
least-squares readout thresholded at 0.5. Reservoir parameters are picked by
grid search over training accuracy; nothing is iterated.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .lindblad import SteadyStateMap, squeezed_reservoir_model, steady_state_map, two_qubit_thermal_model
from .qcore import projector

N_FEATURES = 16
CSV_HEADER = ("f1", "f2", "f3", "f4", "label")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Record:
    features: tuple
    label: int | None = None

    def __post_init__(self):
        f = tuple(float(x) for x in self.features)
        if len(f) != 4:
            raise DatasetError(f"a record needs exactly 4 features, got {len(f)}")
        if any(not (0.0 <= x <= 1.0) for x in f):
            raise DatasetError(f"features must lie in [0, 1], got {f}")
        if not any(f):
            raise DatasetError("features must not all be zero")
        if self.label not in (None, 0, 1):
            raise DatasetError(f"label must be 0, 1 or empty, got {self.label!r}")
        object.__setattr__(self, "features", f)


@dataclass(frozen=True)
class Reservoir:
    """``kind`` is "thermal" (uses ``nbar``) or "squeezed" (uses ``r`` and ``psi``)."""

    kind: str = "thermal"
    nbar: float = 0.0
    r: float = 0.0
    psi: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("thermal", "squeezed"):
            raise ValueError(f"unknown reservoir kind {self.kind!r}")
        if self.nbar < 0 or self.r < 0 or self.gamma <= 0:
            raise ValueError("reservoir parameters out of range")

    def model(self):
        if self.kind == "thermal":
            return two_qubit_thermal_model(self.nbar, self.gamma)
        return squeezed_reservoir_model(self.r, self.psi, self.gamma)

    def sort_key(self) -> tuple:
        return (self.nbar, self.r, self.psi) if self.kind == "thermal" else (self.r, self.psi, self.nbar)


@dataclass(frozen=True)
class ClassifierModel:
    reservoir: Reservoir
    weights: tuple
    bias: float
    threshold: float = 0.5
    train_accuracy: float = float("nan")

    def to_json(self) -> str:
        return json.dumps(
            {
                "reservoir": {
                    "kind": self.reservoir.kind,
                    "nbar": self.reservoir.nbar,
                    "r": self.reservoir.r,
                    "psi": self.reservoir.psi,
                    "gamma": self.reservoir.gamma,
                },
                "weights": list(self.weights),
                "bias": self.bias,
                "threshold": self.threshold,
                "train_accuracy": self.train_accuracy,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ClassifierModel":
        d = json.loads(text)
        return cls(
            Reservoir(**d["reservoir"]),
            tuple(float(w) for w in d["weights"]),
            float(d["bias"]),
            float(d["threshold"]),
            float(d.get("train_accuracy", float("nan"))),
        )


def encode_record(rec: Record) -> np.ndarray:
    """Pure two-qubit state with amplitudes ``features / ||features||``."""
    f = np.asarray(rec.features, dtype=float)
    return projector(f / np.linalg.norm(f))


def real_embedding(rho: np.ndarray) -> np.ndarray:
    """Diagonal, then real and imaginary parts of the strict upper triangle."""
    iu = np.triu_indices(rho.shape[0], k=1)
    return np.concatenate([np.real(np.diag(rho)), rho[iu].real, rho[iu].imag])


@lru_cache(maxsize=256)
def _map_for(reservoir: Reservoir) -> SteadyStateMap:
    return steady_state_map(reservoir.model())


def steady_features(rho0: np.ndarray, reservoir: Reservoir) -> np.ndarray:
    return real_embedding(_map_for(reservoir)(rho0))


def thermal_grid(step: float = 0.1, nbar_max: float = 2.0) -> list[Reservoir]:
    n = int(round(nbar_max / step))
    return [Reservoir("thermal", nbar=round(i * step, 10)) for i in range(n + 1)]


def squeezed_grid(step: float = 0.1, r_max: float = 1.0) -> list[Reservoir]:
    n = int(round(r_max / step))
    return [
        Reservoir("squeezed", r=round(i * step, 10), psi=psi)
        for i in range(n + 1)
        for psi in (0.0, math.pi / 2, math.pi)
    ]


def _design(records: Sequence[Record], reservoir: Reservoir) -> np.ndarray:
    return np.stack([steady_features(encode_record(r), reservoir) for r in records])


def _fit_readout(feats: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, float]:
    a = np.column_stack([feats, np.ones(len(feats))])
    coef, *_ = np.linalg.lstsq(a, labels.astype(float), rcond=None)
    return coef[:-1], float(coef[-1])


def _candidate(records, labels, reservoir):
    feats = _design(records, reservoir)
    w, b = _fit_readout(feats, labels)
    acc = float(np.mean(((feats @ w + b) >= 0.5).astype(int) == labels))
    return reservoir, w, b, acc


def fit(train: Sequence[Record], grid: Sequence[Reservoir] | None = None, workers: int = 1) -> ClassifierModel:
    """Grid-search the reservoir and fit a least-squares readout.

    The candidate with the best training accuracy wins; ties go to the
    smaller ``nbar`` (thermal) or ``r`` (squeezed).
    """
    labels = np.array([r.label for r in train])
    if any(lab is None for lab in labels):
        raise DatasetError("training records must be labelled")
    labels = labels.astype(int)
    if min(np.sum(labels == 0), np.sum(labels == 1)) < 2:
        raise DatasetError("training set needs at least two records of each class")
    grid = thermal_grid() if grid is None else list(grid)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda res: _candidate(train, labels, res), grid))
    else:
        results = [_candidate(train, labels, res) for res in grid]
    best = None
    for res in sorted(results, key=lambda t: (t[0].kind, t[0].sort_key())):
        if best is None or res[3] > best[3]:
            best = res
    reservoir, w, b, acc = best
    return ClassifierModel(reservoir, tuple(float(x) for x in w), b, 0.5, acc)


def score(model: ClassifierModel, rec: Record) -> float:
    feats = steady_features(encode_record(rec), model.reservoir)
    return float(feats @ np.asarray(model.weights) + model.bias)


def predict(model: ClassifierModel, rec: Record) -> int:
    return int(score(model, rec) >= model.threshold)


def accuracy(model: ClassifierModel, records: Sequence[Record]) -> float:
    return float(np.mean([predict(model, r) == r.label for r in records]))


# --- data -------------------------------------------------------------------------

CLASS_CENTERS = ((0.8, 0.25, 0.25, 0.5), (0.45, 0.85, 0.1, 0.3))


def synthetic_dataset(n_records: int = 40, seed: int = 0, spread: float = 0.08) -> list[Record]:
    """Two Gaussian clusters in [0, 1]^4, alternating labels 0, 1, 0, 1, ...

    The class-1 centre carries a large antisymmetric (singlet-like)
    component ``f2 - f3``, which survives in the dissipative steady state.
    """
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_records):
        label = i % 2
        f = np.clip(np.asarray(CLASS_CENTERS[label]) + spread * rng.normal(size=4), 0.0, 1.0)
        if not f.any():
            f[0] = 1e-3
        records.append(Record(tuple(f), label))
    return records


def train_test_split(records: Sequence[Record], test_fraction: float = 0.3, seed: int = 0):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(records))
    n_test = int(round(test_fraction * len(records)))
    test = [records[i] for i in order[:n_test]]
    train = [records[i] for i in order[n_test:]]
    return train, test


def read_dataset_csv(path) -> list[Record]:
    """Read ``f1,f2,f3,f4,label`` rows; an empty label marks an unlabelled record."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise DatasetError(f"dataset header must be {','.join(CSV_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DatasetError(f"line {lineno}: expected 5 columns, got {len(row)}")
            label = row[4].strip()
            try:
                out.append(Record(tuple(float(x) for x in row[:4]), int(label) if label else None))
            except ValueError as exc:
                raise DatasetError(f"line {lineno}: {exc}") from None
    return out


def write_dataset_csv(records: Sequence[Record], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([repr(x) for x in r.features] + ["" if r.label is None else r.label])
