"""Dissipative quantum reinforcement learning with a single-qubit agent.

The agent qubit evolves for a time ``tau`` under an unknown Hamiltonian and a
thermal bath, is measured against the state orthogonal to its current
guess, and is then either rewarded (exploration shrinks by ``r``) or punished
(a random rotation with range ``w * pi`` is applied and exploration grows by
``p``). Everything is in units hbar = omega = k_B = 1.

Two code paths exist. :func:`iteration_step` is the readable reference
built from the generic density-matrix primitives. :func:`run_realization`
and :func:`run_ensemble` use a vectorized kernel that advances many
realizations at once with elementwise arithmetic only, so a realization
gives the same bits whether it runs alone or inside any batch.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .channels import GadParams, KrausChannel, apply_channel, generalized_amplitude_damping
from .qcore import (
    check_pure_state,
    dagger,
    evolve_unitary,
    fidelity,
    orthogonal_complement,
    projective_measure,
    projector,
)

DEFAULT_EIGENBASIS_ANGLES = (1.0, 0.5)
# default sweep: no bath, cold weak bath, warm weak bath as (gamma0_tilde, T_tilde)
SWEEP_CONFIGS = ((0.0, 0.0), (0.5, 0.01), (0.5, 1.0))

SWEEP_COLUMNS = ("tau_tilde", "gamma0_tilde", "T_tilde", "F_a", "F_a_stderr", "W_a", "W_a_stderr")
ITERATION_COLUMNS = ("k", "W_k", "F_k", "F_minus_k", "F_plus_k")


def eigenbasis_unitary(polar: float, azimuth: float) -> np.ndarray:
    """Unitary whose columns are ``|->`` and ``|+>`` in the computational basis.

    ``|->`` has Bloch polar angle ``polar`` and azimuth ``azimuth``.
    """
    c, s = math.cos(polar / 2), math.sin(polar / 2)
    ph = complex(math.cos(azimuth), math.sin(azimuth))
    return np.array([[c, -s * ph.conjugate()], [s * ph, c]], dtype=complex)


def environment_hamiltonian(eigenbasis=None) -> np.ndarray:
    """``(|+><+| - |-><-|) / 2`` for the given eigenbasis (computational by default)."""
    v = np.eye(2, dtype=complex) if eigenbasis is None else np.asarray(eigenbasis, dtype=complex)
    return v @ np.diag([-0.5, 0.5]).astype(complex) @ dagger(v)


@dataclass(frozen=True)
class QrlParams:
    gamma0_tilde: float = 0.0
    T_tilde: float = 0.0
    tau_tilde: float = 1.0
    reward_rate: float = 0.9
    punishment_rate: float = 20 / 9
    n_realizations: int = 1000
    n_iterations: int = 500
    initial_state: tuple = (1.0, 0.0)
    master_seed: int = 0
    eigenbasis_angles: tuple = DEFAULT_EIGENBASIS_ANGLES
    window_fraction: float = 0.1

    def __post_init__(self):
        GadParams(self.gamma0_tilde, self.T_tilde, self.tau_tilde)
        if not 0 < self.reward_rate < 1:
            raise ValueError("reward_rate must lie in (0,1)")
        if not self.punishment_rate > 1:
            raise ValueError("punishment_rate must be > 1")
        if self.n_realizations < 1 or self.n_iterations < 1:
            raise ValueError("n_realizations and n_iterations must be >= 1")
        if not 0 < self.window_fraction <= 1:
            raise ValueError("window_fraction must lie in (0, 1]")
        psi = np.asarray(self.initial_state, dtype=complex).ravel()
        if psi.shape != (2,):
            raise ValueError("initial_state must be a qubit state")
        check_pure_state(psi, tol=1e-10)
        object.__setattr__(self, "initial_state", tuple(complex(a) for a in psi))
        object.__setattr__(self, "eigenbasis_angles", tuple(float(a) for a in self.eigenbasis_angles))

    @property
    def gad(self) -> GadParams:
        return GadParams(self.gamma0_tilde, self.T_tilde, self.tau_tilde)

    @property
    def eigenbasis(self) -> np.ndarray:
        return eigenbasis_unitary(*self.eigenbasis_angles)

    @property
    def window(self) -> int:
        return max(1, int(self.n_iterations * self.window_fraction))


@dataclass(frozen=True)
class AgentState:
    phi: np.ndarray
    w: float

    def __post_init__(self):
        object.__setattr__(self, "phi", check_pure_state(self.phi, tol=1e-10))
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"exploration parameter must lie in [0, 1], got {self.w!r}")


@dataclass
class QrlTrace:
    """Per-iteration record of one realization (index 0 is iteration k = 1)."""

    w: np.ndarray
    f_minus: np.ndarray
    f_plus: np.ndarray
    outcome: np.ndarray

    @property
    def f(self) -> np.ndarray:
        return np.maximum(self.f_minus, self.f_plus)


@dataclass
class QrlAggregate:
    W: np.ndarray
    F_minus: np.ndarray
    F_plus: np.ndarray
    F: np.ndarray
    W_stderr: np.ndarray
    F_minus_stderr: np.ndarray
    F_plus_stderr: np.ndarray
    F_stderr: np.ndarray
    F_a: float
    F_a_stderr: float
    W_a: float
    W_a_stderr: float
    window: int
    n_realizations: int
    params: QrlParams | None = field(default=None, repr=False)


# --- channel --------------------------------------------------------------------


def qrl_channel(params: QrlParams) -> KrausChannel:
    """Thermal-qubit evolution over ``tau``: the GAD channel followed by ``U = exp(-i tau H)``."""
    v = params.eigenbasis
    gad = generalized_amplitude_damping(params.gad, eigenbasis=v)
    u = evolution_unitary(params.tau_tilde, v)
    return KrausChannel([u @ e for e in gad.kraus_ops], label=f"qrl[{gad.label}]")


def evolution_unitary(tau: float, eigenbasis) -> np.ndarray:
    v = np.asarray(eigenbasis, dtype=complex)
    phases = np.exp(-1j * tau * np.array([-0.5, 0.5]))
    return v @ np.diag(phases) @ dagger(v)


def apply_qrl_channel(params: QrlParams, rho) -> np.ndarray:
    """Same map as :func:`qrl_channel`, evaluated as dissipation then unitary rotation."""
    v = params.eigenbasis
    rho = apply_channel(generalized_amplitude_damping(params.gad, eigenbasis=v), rho)
    return evolve_unitary(rho, evolution_unitary(params.tau_tilde, v))


def _superoperator(params: QrlParams) -> np.ndarray:
    """4x4 column-stacked matrix of the qrl channel."""
    ch = qrl_channel(params)
    s = np.zeros((4, 4), dtype=complex)
    for k in ch.kraus_ops:
        s += np.kron(k.conj(), k)
    return s


# --- rotation -------------------------------------------------------------------


def agent_paulis(phi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``sigma_x, sigma_y, sigma_z`` built on ``{|phi>, |phi_perp>}``."""
    phi = np.asarray(phi, dtype=complex).ravel()
    perp = orthogonal_complement(phi)
    pp = np.outer(phi, phi.conj())
    qq = np.outer(perp, perp.conj())
    pq = np.outer(phi, perp.conj())
    qp = np.outer(perp, phi.conj())
    return pq + qp, 1j * (qp - pq), pp - qq


def _pauli_exp(sigma: np.ndarray, angle: float) -> np.ndarray:
    # sigma^2 = I, so exp(-i a sigma / 2) = cos(a/2) I - i sin(a/2) sigma
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * sigma


def pseudorandom_rotation(phi_k, w_k: float, angles: Sequence[float]) -> np.ndarray:
    """``R_k = exp(-i a_y s_y/2) exp(-i a_z s_z/2) exp(-i a_x s_x/2)`` in the agent frame."""
    ax, ay, az = (float(a) for a in angles)
    bound = w_k * math.pi * (1 + 1e-12)
    if max(abs(ax), abs(ay), abs(az)) > bound:
        raise ValueError(f"rotation angles must lie in [-w pi, w pi] with w = {w_k}")
    sx, sy, sz = agent_paulis(phi_k)
    return _pauli_exp(sy, ay) @ _pauli_exp(sz, az) @ _pauli_exp(sx, ax)


# --- reference single step -------------------------------------------------------


def iteration_step(state: AgentState, params: QrlParams, rng: np.random.Generator):
    """Advance one realization by one iteration.

    Draws four uniforms from ``rng``: the measurement deviate and three
    rotation angles (drawn on every step so the stream layout does not
    depend on the outcome).

    Returns
    -------
    (AgentState, dict)
        The next state and a record with keys ``m``, ``w``, ``f_minus``,
        ``f_plus`` describing the state *before* the update.
    """
    draws = rng.random(4)
    v = params.eigenbasis
    phi, w = state.phi, state.w
    record = {
        "m": 0,
        "w": w,
        "f_minus": fidelity(v[:, 0], phi),
        "f_plus": fidelity(v[:, 1], phi),
    }
    rho = apply_qrl_channel(params, projector(phi))
    perp = orthogonal_complement(phi)
    m, _ = projective_measure(rho, projector(perp), draws[0])
    record["m"] = m
    if m == 0:
        return AgentState(phi, params.reward_rate * w), record
    # outcome 1 leaves the agent in |phi_perp>; sigma_x of the agent frame restores |phi>
    sx, _, _ = agent_paulis(phi)
    restored = sx @ perp
    angles = w * math.pi * (2.0 * draws[1:] - 1.0)
    new_phi = pseudorandom_rotation(phi, w, angles) @ restored
    new_phi = new_phi / np.linalg.norm(new_phi)
    return AgentState(new_phi, min(1.0, params.punishment_rate * w)), record


# --- vectorized kernel -----------------------------------------------------------


def realization_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for one realization, derived from ``(master_seed, index)``."""
    ss = np.random.SeedSequence(entropy=int(master_seed) % 2**64, spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def _draws(params: QrlParams, indices: Sequence[int]) -> np.ndarray:
    # shape (n, K, 4); equal to K successive rng.random(4) calls per realization
    return np.stack(
        [realization_rng(params.master_seed, i).random((params.n_iterations, 4)) for i in indices]
    )


def _run_batch(params: QrlParams, draws: np.ndarray) -> dict:
    n, n_iter, _ = draws.shape
    s = _superoperator(params)
    v = params.eigenbasis
    m0, m1 = np.conj(v[0, 0]), np.conj(v[1, 0])
    p0, p1c = np.conj(v[0, 1]), np.conj(v[1, 1])
    r, p = params.reward_rate, params.punishment_rate
    a = np.full(n, params.initial_state[0], dtype=complex)
    b = np.full(n, params.initial_state[1], dtype=complex)
    w = np.ones(n)
    out_w = np.empty((n_iter, n))
    out_fm = np.empty((n_iter, n))
    out_fp = np.empty((n_iter, n))
    out_m = np.empty((n_iter, n), dtype=np.int8)
    for k in range(n_iter):
        out_w[k] = w
        out_fm[k] = np.minimum(1.0, np.abs(m0 * a + m1 * b))
        out_fp[k] = np.minimum(1.0, np.abs(p0 * a + p1c * b))
        ca, cb = np.conj(a), np.conj(b)
        rho_in = (a * ca, b * ca, a * cb, b * cb)  # column-stacked |phi><phi|
        rho_out = [
            s[i, 0] * rho_in[0] + s[i, 1] * rho_in[1] + s[i, 2] * rho_in[2] + s[i, 3] * rho_in[3]
            for i in range(4)
        ]
        # phi_perp = (-b*, a*); p1 = <perp| rho_out |perp>
        q0, q1 = -cb, ca
        prob = (
            np.conj(q0) * (rho_out[0] * q0 + rho_out[2] * q1)
            + np.conj(q1) * (rho_out[1] * q0 + rho_out[3] * q1)
        ).real
        prob = np.clip(prob, 0.0, 1.0)
        punished = draws[:, k, 0] < prob
        out_m[k] = punished
        ang = (w * math.pi)[:, None] * (2.0 * draws[:, k, 1:] - 1.0)
        hx, hy, hz = ang[:, 0] / 2, ang[:, 1] / 2, ang[:, 2] / 2
        # R e_0 in the agent frame with R = Ry Rz Rx
        v0 = np.cos(hx) * np.exp(-1j * hz)
        v1 = -1j * np.sin(hx) * np.exp(1j * hz)
        cy, sy = np.cos(hy), np.sin(hy)
        u0 = cy * v0 - sy * v1
        u1 = sy * v0 + cy * v1
        na = u0 * a + u1 * q0
        nb = u0 * b + u1 * q1
        norm = np.sqrt(np.abs(na) ** 2 + np.abs(nb) ** 2)
        a = np.where(punished, na / norm, a)
        b = np.where(punished, nb / norm, b)
        w = np.where(punished, np.minimum(1.0, p * w), r * w)
    return {"w": out_w.T, "f_minus": out_fm.T, "f_plus": out_fp.T, "outcome": out_m.T}


def run_realization(params: QrlParams, realization_index: int) -> QrlTrace:
    res = _run_batch(params, _draws(params, [realization_index]))
    return QrlTrace(res["w"][0], res["f_minus"][0], res["f_plus"][0], res["outcome"][0])


def run_batch(params: QrlParams, indices: Sequence[int]) -> dict:
    """Raw per-realization arrays, each of shape ``(len(indices), K)``."""
    return _run_batch(params, _draws(params, list(indices)))


def _stderr(x: np.ndarray, axis: int = 0) -> np.ndarray:
    n = x.shape[axis]
    if n < 2:
        return np.zeros(np.delete(x.shape, axis)) if x.ndim > 1 else np.float64(0.0)
    return np.std(x, axis=axis, ddof=1) / math.sqrt(n)


def aggregate(params: QrlParams, res: dict) -> QrlAggregate:
    w = res["w"]
    fm, fp = res["f_minus"], res["f_plus"]
    f = np.maximum(fm, fp)
    win = params.window
    fa_i = f[:, -win:].mean(axis=1)
    wa_i = w[:, -win:].mean(axis=1)
    return QrlAggregate(
        W=w.mean(axis=0),
        F_minus=fm.mean(axis=0),
        F_plus=fp.mean(axis=0),
        F=f.mean(axis=0),
        W_stderr=_stderr(w),
        F_minus_stderr=_stderr(fm),
        F_plus_stderr=_stderr(fp),
        F_stderr=_stderr(f),
        F_a=float(fa_i.mean()),
        F_a_stderr=float(_stderr(fa_i)),
        W_a=float(wa_i.mean()),
        W_a_stderr=float(_stderr(wa_i)),
        window=win,
        n_realizations=w.shape[0],
        params=params,
    )


def run_ensemble(params: QrlParams, workers: int = 1, chunk: int = 250) -> QrlAggregate:
    """Average ``n_realizations`` independent realizations.

    Realizations are split into chunks that may run on ``workers`` threads;
    the result does not depend on ``workers`` or ``chunk``.
    """
    idx = list(range(params.n_realizations))
    chunks = [idx[i : i + chunk] for i in range(0, len(idx), chunk)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: run_batch(params, c), chunks))
    else:
        parts = [run_batch(params, c) for c in chunks]
    res = {key: np.concatenate([part[key] for part in parts]) for key in parts[0]}
    return aggregate(params, res)


def sweep_tau(
    params: QrlParams,
    tau_grid: Iterable[float],
    configs: Sequence[tuple[float, float]] = SWEEP_CONFIGS,
    workers: int = 1,
) -> list[dict]:
    """Asymptotic ``F_a`` and ``W_a`` versus ``tau`` for each ``(gamma0, T)`` config."""
    rows = []
    for g0, temp in configs:
        for tau in tau_grid:
            agg = run_ensemble(
                replace(params, gamma0_tilde=g0, T_tilde=temp, tau_tilde=float(tau)), workers=workers
            )
            rows.append(
                {
                    "tau_tilde": float(tau),
                    "gamma0_tilde": g0,
                    "T_tilde": temp,
                    "F_a": agg.F_a,
                    "F_a_stderr": agg.F_a_stderr,
                    "W_a": agg.W_a,
                    "W_a_stderr": agg.W_a_stderr,
                }
            )
    return rows


def default_tau_grid(n: int = 25) -> np.ndarray:
    return np.linspace(0.0, 4 * math.pi, n)


def write_sweep_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(float(row[k])) for k in SWEEP_COLUMNS})


def write_iterations_csv(agg: QrlAggregate, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ITERATION_COLUMNS)
        for k in range(agg.W.size):
            writer.writerow(
                [k + 1, repr(float(agg.W[k])), repr(float(agg.F[k])),
                 repr(float(agg.F_minus[k])), repr(float(agg.F_plus[k]))]
            )

