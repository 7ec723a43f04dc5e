"""Noisy quantum reservoir computing.

Input states pass through a fixed random circuit in which every gate is
followed by a single-qubit noise channel on each qubit it touched. The
exact local Pauli expectations ``<X_j>, <Z_j>`` of the output form the
feature vector for a ridge-regression readout.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .channels import amplitude_damping, depolarizing, phase_damping
from .qcore import QuantumStateError, check_pure_state

NOISE_KINDS = ("none", "amplitude_damping", "phase_damping", "depolarizing")
TWO_QUBIT_PROBABILITY = 0.4
METRICS_HEADER = ("noise_kind", "p", "mse_train", "mse_test")

_NOISE_FACTORIES = {
    "amplitude_damping": amplitude_damping,
    "phase_damping": phase_damping,
    "depolarizing": depolarizing,
}


class SingularSystemError(np.linalg.LinAlgError):
    """The unregularized normal equations have no unique solution."""


@dataclass(frozen=True)
class ReservoirConfig:
    n_qubits: int = 4
    n_gates: int | None = None
    noise_kind: str = "none"
    p: float = 0.0
    circuit_seed: int = 0

    def __post_init__(self):
        if not 2 <= self.n_qubits <= 8:
            raise ValueError(f"n_qubits must lie in [2, 8], got {self.n_qubits}")
        if self.n_gates is None:
            object.__setattr__(self, "n_gates", 10 * self.n_qubits)
        if self.n_gates < 0:
            raise ValueError("n_gates must be nonnegative")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}, got {self.noise_kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("error probability p must lie in [0, 1]")


class Gate(NamedTuple):
    kind: str  # "rx" | "ry" | "rz" | "cnot"
    qubits: tuple
    angle: float = 0.0


def build_random_circuit(cfg: ReservoirConfig) -> list[Gate]:
    """Random gate list, a deterministic function of ``cfg.circuit_seed``."""
    rng = np.random.default_rng(cfg.circuit_seed)
    n = cfg.n_qubits
    gates = []
    for _ in range(cfg.n_gates):
        if rng.random() < TWO_QUBIT_PROBABILITY:
            control = int(rng.integers(n))
            target = int(rng.integers(n - 1))
            target += target >= control
            gates.append(Gate("cnot", (control, target)))
        else:
            kind = ("rx", "ry", "rz")[int(rng.integers(3))]
            gates.append(Gate(kind, (int(rng.integers(n)),), float(rng.uniform(0.0, 2 * math.pi))))
    return gates


def rotation(kind: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "rz":
        return np.diag([complex(c, -s), complex(c, s)])
    raise ValueError(f"unknown rotation {kind!r}")


def local_superoperator(kraus_ops) -> np.ndarray:
    """4x4 matrix of a single-qubit map acting on row-major ``vec(rho)``."""
    return sum(np.kron(k, k.conj()) for k in kraus_ops)


def _apply_local(rho: np.ndarray, sup: np.ndarray, q: int, n: int) -> np.ndarray:
    """Apply a single-qubit superoperator on qubit ``q`` to a batch ``(B, D, D)``.

    Works block by block on the row/column bit of ``q``, skipping zero
    entries, which keeps memory traffic low for the sparse noise maps.
    """
    b, d = rho.shape[0], rho.shape[1]
    left, right = 2**q, 2 ** (n - q - 1)
    v = rho.reshape(b, left, 2, right, left, 2, right)
    out = np.zeros_like(v)
    for i in range(4):
        r_out, c_out = divmod(i, 2)
        dst = out[:, :, r_out, :, :, c_out, :]
        for j in range(4):
            coef = sup[i, j]
            if coef == 0:
                continue
            r_in, c_in = divmod(j, 2)
            src = v[:, :, r_in, :, :, c_in, :]
            if coef == 1:
                dst += src
            else:
                dst += coef * src
    return out.reshape(b, d, d)


def _cnot_permutation(control: int, target: int, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    cbit = (idx >> (n - 1 - control)) & 1
    return idx ^ (cbit << (n - 1 - target))


def _as_density_batch(states, dim: int) -> np.ndarray:
    """``(B, dim)`` state vectors or ``(B, dim, dim)`` density matrices -> ``(B, dim, dim)``."""
    arr = np.asarray(states, dtype=complex)
    if arr.ndim == 2 and arr.shape[1] == dim:
        return np.einsum("bi,bj->bij", arr, arr.conj())
    if arr.ndim == 3 and arr.shape[1:] == (dim, dim):
        return arr
    raise QuantumStateError(f"input of shape {arr.shape} does not match dimension {dim}")


def run_circuit(circuit: Sequence[Gate], cfg: ReservoirConfig, rho_batch: np.ndarray) -> np.ndarray:
    """Apply the noisy circuit to a batch of density matrices of shape ``(B, D, D)``."""
    n = cfg.n_qubits
    noise = None
    if cfg.noise_kind != "none":
        noise = local_superoperator(_NOISE_FACTORIES[cfg.noise_kind](cfg.p).kraus_ops)
    rho = np.array(rho_batch, dtype=complex)
    for gate in circuit:
        if gate.kind == "cnot":
            perm = _cnot_permutation(*gate.qubits, n)
            rho = rho[:, perm][:, :, perm]
        else:
            u = rotation(gate.kind, gate.angle)
            rho = _apply_local(rho, local_superoperator([u]), gate.qubits[0], n)
        if noise is not None:
            for q in gate.qubits:
                rho = _apply_local(rho, noise, q, n)
    return rho


def pauli_features(rho_batch: np.ndarray, n: int) -> np.ndarray:
    """``(<X_0>, <Z_0>, ..., <X_{n-1}>, <Z_{n-1}>)`` for each matrix in the batch."""
    b = rho_batch.shape[0]
    out = np.empty((b, 2 * n))
    for q in range(n):
        left, right = 2**q, 2 ** (n - q - 1)
        t = rho_batch.reshape(b, left, 2, right, left, 2, right)
        red = np.einsum("bxiyxjy->bij", t)
        out[:, 2 * q] = 2.0 * red[:, 0, 1].real
        out[:, 2 * q + 1] = (red[:, 0, 0] - red[:, 1, 1]).real
    return out


def extract_features(circuit: Sequence[Gate], cfg: ReservoirConfig, rho_in) -> np.ndarray:
    """Feature vector of one input (a state vector or a density matrix)."""
    arr = np.asarray(rho_in, dtype=complex)
    if arr.ndim not in (1, 2):
        raise QuantumStateError(f"expected a state vector or density matrix, got shape {arr.shape}")
    return extract_features_batch(circuit, cfg, arr[None])[0]


def extract_features_batch(circuit: Sequence[Gate], cfg: ReservoirConfig, inputs) -> np.ndarray:
    dim = 2**cfg.n_qubits
    rho = _as_density_batch(inputs, dim)
    return pauli_features(run_circuit(circuit, cfg, rho), cfg.n_qubits)


# --- ridge regression --------------------------------------------------------------


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray
    bias: float
    lam: float


def ridge_fit(x, y, lam: float) -> RidgeModel:
    """Ridge regression with an unpenalized intercept.

    Columns of ``x`` and the targets are centred; the weights solve
    ``(Xc^T Xc + lam I) w = Xc^T yc`` and the bias restores the means.

    Raises
    ------
    SingularSystemError
        If ``lam == 0`` and ``Xc^T Xc`` is singular.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] != y.size or y.size < 1:
        raise ValueError(f"incompatible shapes X {x.shape}, y {y.shape}")
    if lam < 0 or not math.isfinite(lam):
        raise ValueError("lambda must be a finite nonnegative number")
    x_mean = x.mean(axis=0)
    y_mean = float(y.mean())
    xc = x - x_mean
    yc = y - y_mean
    gram = xc.T @ xc + lam * np.eye(x.shape[1])
    if lam == 0 and (x.shape[1] > 0 and np.linalg.matrix_rank(gram) < x.shape[1]):
        raise SingularSystemError("X^T X is singular; use lambda > 0")
    w = np.linalg.solve(gram, xc.T @ yc) if x.shape[1] else np.zeros(0)
    return RidgeModel(w, y_mean - float(x_mean @ w), float(lam))


def ridge_predict(model: RidgeModel, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.weights.size:
        raise ValueError(f"expected {model.weights.size} features, got {x.shape[-1]}")
    out = x @ model.weights + model.bias
    return float(out) if np.ndim(out) == 0 else out


def mse(pred, y) -> float:
    return float(np.mean((np.asarray(pred) - np.asarray(y)) ** 2))


# --- data ----------------------------------------------------------------------------


@dataclass
class RegressionDataset:
    states: np.ndarray  # (n_samples, 2**n_qubits) complex amplitudes
    targets: np.ndarray
    tags: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=complex)
        self.targets = np.asarray(self.targets, dtype=float)
        self.tags = np.asarray(self.tags, dtype=float)
        if self.states.ndim != 2 or len(self.states) != len(self.targets) != len(self.tags):
            raise ValueError("states, targets and tags must have matching lengths")
        if not np.all(np.isfinite(self.targets)):
            raise ValueError("targets must be finite")
        dim = self.states.shape[1]
        n = int(round(math.log2(dim)))
        if 2**n != dim:
            raise ValueError("state dimension must be a power of two")
        for s in self.states:
            check_pure_state(s, tol=1e-10)

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.states.shape[1])))

    def __len__(self) -> int:
        return len(self.targets)


def synthetic_dataset(n_qubits: int = 4, n_samples: int = 60, data_seed: int = 0,
                      r_range: tuple = (0.5, 3.5)) -> RegressionDataset:
    """Product states whose single-qubit angles vary smoothly with a scalar R.

    ``|psi(R)> = kron_j (cos t_j(R)|0> + sin t_j(R)|1>)`` with
    ``t_j(R) = a_j + b_j sin(c_j R + d_j)``; the target is
    ``A exp(-B R) + C sin(D R + E)``. All coefficients come from ``data_seed``.
    """
    rng = np.random.default_rng(data_seed)
    a = rng.uniform(0, math.pi, n_qubits)
    b = rng.uniform(0.2, 0.8, n_qubits)
    c = rng.uniform(0.5, 2.0, n_qubits)
    d = rng.uniform(0, 2 * math.pi, n_qubits)
    amp, decay, osc, freq, phase = rng.uniform([0.5, 0.3, 0.1, 0.5, 0.0], [1.5, 1.5, 0.5, 2.0, 2 * math.pi])
    tags = np.linspace(*r_range, n_samples) if n_samples > 1 else np.array([r_range[0]])
    states = []
    for r in tags:
        theta = a + b * np.sin(c * r + d)
        psi = np.ones(1, dtype=complex)
        for t in theta:
            psi = np.kron(psi, np.array([math.cos(t), math.sin(t)], dtype=complex))
        states.append(psi / np.linalg.norm(psi))
    targets = amp * np.exp(-decay * tags) + osc * np.sin(freq * tags + phase)
    return RegressionDataset(np.array(states), targets, tags)


def split_indices(n: int, test_fraction: float = 0.3, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    n_test = int(round(test_fraction * n))
    if n_test == 0 or n_test == n:
        raise ValueError(f"degenerate split of {n} samples")
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def default_noise_grid(ps: Sequence[float] = (0.001, 0.005, 0.01, 0.05)) -> list[tuple[str, float]]:
    grid = [("none", 0.0)]
    for kind in ("amplitude_damping", "phase_damping", "depolarizing"):
        grid.extend((kind, float(p)) for p in ps)
    return grid


def run_experiment(ds: RegressionDataset, grid: Sequence[tuple[str, float]], lam: float = 1e-3,
                   split_seed: int = 0, circuit_seed: int = 0, n_gates: int | None = None,
                   test_fraction: float = 0.3, workers: int = 1) -> list[dict]:
    """Train/test MSE of the ridge readout for each ``(noise_kind, p)`` cell.

    Cells are independent and may run on ``workers`` threads; rows come back
    in grid order either way.
    """
    if len(ds) < 10:
        raise ValueError("run_experiment needs at least 10 samples")
    train, test = split_indices(len(ds), test_fraction, split_seed)
    base = ReservoirConfig(ds.n_qubits, n_gates, "none", 0.0, circuit_seed)
    circuit = build_random_circuit(base)

    def cell(item):
        kind, p = item
        cfg = replace(base, noise_kind=kind, p=float(p))
        feats = extract_features_batch(circuit, cfg, ds.states)
        model = ridge_fit(feats[train], ds.targets[train], lam)
        return {
            "noise_kind": kind,
            "p": float(p),
            "mse_train": mse(ridge_predict(model, feats[train]), ds.targets[train]),
            "mse_test": mse(ridge_predict(model, feats[test]), ds.targets[test]),
        }

    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(cell, grid))
    return [cell(item) for item in grid]


def write_metrics_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for r in rows:
            writer.writerow([r["noise_kind"], repr(r["p"]), repr(r["mse_train"]), repr(r["mse_test"])])


def _dataset_header(n_qubits: int) -> list[str]:
    cols = ["R", "target"]
    for i in range(2**n_qubits):
        cols += [f"re_{i}", f"im_{i}"]
    return cols


def write_dataset_csv(ds: RegressionDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_dataset_header(ds.n_qubits))
        for r, t, s in zip(ds.tags, ds.targets, ds.states):
            row = [repr(float(r)), repr(float(t))]
            for amp in s:
                row += [repr(float(amp.real)), repr(float(amp.imag))]
            writer.writerow(row)


def read_dataset_csv(path) -> RegressionDataset:
    """Load ``R,target,re_0,im_0,...`` rows, e.g. externally computed ground states."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 4 or header[:2] != ["R", "target"]:
            raise ValueError("dataset header must start with R,target,re_0,im_0")
        n_amp = (len(header) - 2) // 2
        n = int(round(math.log2(n_amp))) if n_amp > 0 else -1
        if len(header) != 2 + 2 * n_amp or 2**n != n_amp or header != _dataset_header(n):
            raise ValueError("amplitude columns must be re_i,im_i for i < 2**n_qubits")
        tags, targets, states = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} columns")
            vals = [float(v) for v in row]
            tags.append(vals[0])
            targets.append(vals[1])
            states.append(np.array(vals[2::2]) + 1j * np.array(vals[3::2]))
    return RegressionDataset(np.array(states), np.array(targets), np.array(tags))
