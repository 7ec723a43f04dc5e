"""Time-independent Lindblad (GKSL) dynamics.

Superoperators act on column-stacked density matrices:
``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .channels import KrausChannel, thermal_rates
from .qcore import (
    SIGMA_MINUS,
    I2,
    QuantumStateError,
    as_matrix,
    check_density,
    dagger,
    hermiticity_error,
    kron,
    repair_density,
)

MAX_LIOUVILLE_DIM = 16
KERNEL_TOL = 1e-10
GAP_TOL = 1e-8


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus a list of ``(rate, jump_operator)`` pairs (hbar = 1)."""

    hamiltonian: np.ndarray
    dissipators: tuple = ()

    def __post_init__(self):
        h = as_matrix(self.hamiltonian, "hamiltonian").copy()
        d = h.shape[0]
        if h.shape != (d, d):
            raise QuantumStateError("hamiltonian must be square")
        if hermiticity_error(h) > 1e-10:
            raise QuantumStateError("hamiltonian is not Hermitian")
        diss = []
        for rate, op in self.dissipators:
            rate = float(rate)
            if not math.isfinite(rate) or rate < 0:
                raise ValueError(f"dissipation rates must be finite and >= 0, got {rate!r}")
            op = as_matrix(op, "jump operator").copy()
            if op.shape != (d, d):
                raise QuantumStateError("jump operator dimension does not match the hamiltonian")
            op.setflags(write=False)
            diss.append((rate, op))
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "dissipators", tuple(diss))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    d = int(round(math.sqrt(v.size))) if dim is None else dim
    return v.reshape((d, d), order="F")


def lindblad_rhs(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    """Right-hand side ``-i[H, rho] + sum_j g_j (L rho L^+ - {L^+ L, rho}/2)``."""
    h = model.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for rate, op in model.dissipators:
        ld = dagger(op)
        ldl = ld @ op
        out = out + rate * (op @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def build_liouvillian(model: LindbladModel) -> np.ndarray:
    """Matrix ``M`` with ``vec(d rho/dt) = M vec(rho)``."""
    d = model.dim
    if d > MAX_LIOUVILLE_DIM:
        raise QuantumStateError(f"Liouvillian analysis limited to dim <= {MAX_LIOUVILLE_DIM}, got {d}")
    eye = np.eye(d)
    h = model.hamiltonian
    m = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for rate, op in model.dissipators:
        ldl = dagger(op) @ op
        m = m + rate * (
            np.kron(op.conj(), op) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye)
        )
    return m


def evolve(model: LindbladModel, rho0, t: float) -> np.ndarray:
    """State at time ``t`` via the matrix exponential of the Liouvillian."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    rho0 = check_density(rho0)
    if rho0.shape[0] != model.dim:
        raise QuantumStateError("initial state dimension does not match the model")
    if t == 0:
        return rho0.copy()
    prop = expm(build_liouvillian(model) * t)
    return repair_density(unvec(prop @ vec(rho0), model.dim))


def propagator(model: LindbladModel, t: float) -> np.ndarray:
    return expm(build_liouvillian(model) * t)


def integrate_rk4(model: LindbladModel, rho0, t: float, dt: float | None = None) -> np.ndarray:
    """Classical RK4 on the matrix equation; kept as an independent check of ``evolve``.

    The default step is ``min(0.01, 0.01 / max_rate)``.
    """
    rho = np.array(rho0, dtype=complex)
    if dt is None:
        rates = [r for r, _ in model.dissipators if r > 0]
        dt = min(0.01, 0.01 / max(rates)) if rates else 0.01
    n_steps = max(1, int(math.ceil(t / dt)))
    h = t / n_steps
    for _ in range(n_steps):
        k1 = lindblad_rhs(model, rho)
        k2 = lindblad_rhs(model, rho + 0.5 * h * k1)
        k3 = lindblad_rhs(model, rho + 0.5 * h * k2)
        k4 = lindblad_rhs(model, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def hermitian_basis(dim: int) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of dim x dim Hermitian matrices."""
    basis = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(dim):
        for j in range(i + 1, dim):
            s = np.zeros((dim, dim), dtype=complex)
            s[i, j] = s[j, i] = 1 / math.sqrt(2)
            a = np.zeros((dim, dim), dtype=complex)
            a[i, j] = 1j / math.sqrt(2)
            a[j, i] = -1j / math.sqrt(2)
            basis.extend([s, a])
    return basis


def steady_states(model: LindbladModel, tol: float = KERNEL_TOL) -> list[np.ndarray]:
    """Orthonormal Hermitian basis of the Liouvillian kernel.

    The generator maps Hermitian matrices to Hermitian matrices, so the
    kernel is computed as a real null space over Hermitian coordinates and
    its complex span is the full kernel. The first element is the kernel
    component of the identity, normalized in Frobenius norm; for the
    built-in models it is positive semidefinite and ``sigma / Tr sigma`` is a
    steady density matrix.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = model.dim
    m = build_liouvillian(model)
    basis = hermitian_basis(d)
    g = np.stack([vec(b) for b in basis], axis=1)
    # real coordinates of M acting on each Hermitian basis element
    a = np.real(g.conj().T @ m @ g)
    _, s, vh = np.linalg.svd(a)
    scale = max(1.0, float(s[0])) if s.size else 1.0
    null = vh[s <= tol * scale].T
    if null.shape[1] == 0:
        raise QuantumStateError("Liouvillian has an empty kernel; the model is not a valid GKSL generator")
    ident = np.real(g.conj().T @ vec(np.eye(d)))
    t = null @ (null.T @ ident)
    if np.linalg.norm(t) > 1e-12:
        q, _ = np.linalg.qr(np.column_stack([t / np.linalg.norm(t), null]))
        q = q[:, : null.shape[1]]
        if q[:, 0] @ t < 0:
            q[:, 0] = -q[:, 0]
        null = q
    return [sum(c * b for c, b in zip(col, basis)) for col in null.T]


class SteadyStateMap:
    """The asymptotic map ``rho(0) -> rho(infinity)`` of a Lindblad semigroup.

    Stored as the ``dim^2 x dim^2`` spectral projector onto the Liouvillian
    kernel along the decaying eigenspaces.
    """

    def __init__(self, matrix: np.ndarray, dim: int):
        self.matrix = np.asarray(matrix)
        self.dim = dim

    def __call__(self, rho0) -> np.ndarray:
        rho0 = check_density(rho0)
        if rho0.shape[0] != self.dim:
            raise QuantumStateError("state dimension does not match the map")
        return repair_density(unvec(self.matrix @ vec(rho0), self.dim))

    def apply_raw(self, rho0) -> np.ndarray:
        return unvec(self.matrix @ vec(np.asarray(rho0, dtype=complex)), self.dim)

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij |i><j| (x) Phi(|i><j|)``."""
        d = self.dim
        # Phi(|i><j|) is column i + j*d of the superoperator
        blocks = self.matrix.reshape(d, d, d, d, order="F")  # [out_r, out_c, in_i, in_j]
        return np.einsum("abij->iajb", blocks).reshape(d * d, d * d)

    def choi_spectrum(self) -> np.ndarray:
        c = self.choi()
        return np.linalg.eigvalsh(0.5 * (c + dagger(c)))

    def is_completely_positive(self, tol: float = 1e-9) -> bool:
        return bool(self.choi_spectrum().min() >= -tol)

    def to_kraus(self, tol: float = 1e-9) -> KrausChannel:
        """Kraus form from the Choi eigen-decomposition.

        Only defined when the map is completely positive; eigenvalues below
        ``tol`` are discarded.
        """
        d = self.dim
        c = self.choi()
        w, v = np.linalg.eigh(0.5 * (c + dagger(c)))
        if w.min() < -tol:
            raise QuantumStateError(f"steady-state map is not completely positive (min Choi eigenvalue {w.min():.3g})")
        ops = [math.sqrt(lam) * v[:, k].reshape(d, d).T for k, lam in enumerate(w) if lam > tol]
        return KrausChannel(ops, label="steady_state_map")


def steady_state_map(model: LindbladModel, tol: float = KERNEL_TOL, gap_tol: float = GAP_TOL) -> SteadyStateMap:
    """Build the asymptotic projector ``lim_{t->inf} exp(M t)``.

    Raises
    ------
    QuantumStateError
        If an eigenvalue has a positive real part, if the zero eigenvalue
        is defective, or if a nonzero eigenvalue lies within ``gap_tol`` of
        the imaginary axis (no limit or no separation from the kernel).
    """
    m = build_liouvillian(model)
    n = m.shape[0]
    ev = np.linalg.eigvals(m)
    scale = max(1.0, float(np.linalg.norm(m, 2)))
    if ev.real.max() > tol * scale:
        raise QuantumStateError(f"Liouvillian eigenvalue with positive real part {ev.real.max():.3g}")
    u, s, vh = np.linalg.svd(m)
    k = int(np.sum(s <= tol * scale))
    if k == 0:
        raise QuantumStateError("Liouvillian has an empty kernel")
    order = np.argsort(np.abs(ev))
    rest = ev[order[k:]]
    if rest.size and rest.real.max() > -gap_tol:
        raise QuantumStateError(
            f"vanishing spectral gap: slowest non-stationary eigenvalue {rest[np.argmax(rest.real)]:.3g}"
        )
    right = vh[n - k :].conj().T
    left = u[:, n - k :]
    overlap = left.conj().T @ right
    if np.linalg.cond(overlap) > 1e8:
        raise QuantumStateError("zero eigenvalue of the Liouvillian is defective")
    proj = right @ np.linalg.solve(overlap, left.conj().T)
    return SteadyStateMap(proj, model.dim)


# --- model constructors -------------------------------------------------------


def thermal_qubit_model(gamma0_tilde: float, T_tilde: float, eigenbasis=None, coherent: bool = True) -> LindbladModel:
    """Qubit coupled to a thermal bath, in units hbar = omega = 1.

    ``H = (|+><+| - |-><-|) / 2``. The excited state ``|+>`` decays to the
    ground state ``|->`` at rate ``Gamma_+`` and is re-excited at rate
    ``Gamma_-``; in GKSL form the jump operators are ``|-><+|`` and ``|+><-|``.
    ``eigenbasis`` columns are ``|->`` and ``|+>`` (default computational).
    With ``coherent=False`` the Hamiltonian term is dropped.
    """
    v = np.eye(2, dtype=complex) if eigenbasis is None else as_matrix(eigenbasis, "eigenbasis")
    minus, plus = v[:, 0], v[:, 1]
    g_plus, g_minus = thermal_rates(gamma0_tilde, T_tilde)
    h = 0.5 * (np.outer(plus, plus.conj()) - np.outer(minus, minus.conj()))
    lower = np.outer(minus, plus.conj())
    raise_ = np.outer(plus, minus.conj())
    return LindbladModel(
        h if coherent else np.zeros((2, 2), dtype=complex),
        ((g_plus, lower), (g_minus, raise_)),
    )


def collective_lowering() -> np.ndarray:
    """``sigma_1 + sigma_2`` for two qubits (qubit 1 is the left factor)."""
    return kron(SIGMA_MINUS, I2) + kron(I2, SIGMA_MINUS)


def two_qubit_thermal_model(nbar: float, gamma: float = 1.0) -> LindbladModel:
    """Two non-interacting qubits in a common thermal bath (H = 0)."""
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    s = collective_lowering()
    return LindbladModel(
        np.zeros((4, 4), dtype=complex),
        ((gamma, math.sqrt(nbar + 1) * s), (gamma, math.sqrt(nbar) * dagger(s))),
    )


def squeezed_reservoir_model(r: float, psi: float, gamma: float = 1.0) -> LindbladModel:
    """Two qubits coupled to a squeezed vacuum reservoir (H = 0)."""
    if r < 0:
        raise ValueError("squeezing parameter r must be nonnegative")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    s = collective_lowering()
    op = math.cosh(r) * s - math.sinh(r) * np.exp(1j * psi) * dagger(s)
    return LindbladModel(np.zeros((4, 4), dtype=complex), ((gamma, op),))


def singlet() -> np.ndarray:
    return np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)


def triplet_zero() -> np.ndarray:
    return np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)


def liouvillian_spectrum(model: LindbladModel) -> np.ndarray:
    """Eigenvalues sorted from the slowest-decaying (largest real part) down."""
    ev = np.linalg.eigvals(build_liouvillian(model))
    return ev[np.lexsort((ev.imag, -ev.real))]

