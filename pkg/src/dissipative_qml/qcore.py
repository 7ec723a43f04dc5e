"""Dense density-matrix primitives shared by every other module.

States and operators are plain complex ``numpy`` arrays. Multi-qubit
operators use the convention that qubit 0 is the most significant bit of
the computational-basis index, i.e. ``kron(A_0, A_1, ..., A_{n-1})``.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

MAX_DIM = 256
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
NORM_TOL = 1e-12
REPAIR_LIMIT = 1e-8

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# qubit lowering operator |0><1|, |0> is the ground state
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


class QuantumStateError(ValueError):
    """Raised when an array is not a valid state/operator for the requested op."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise QuantumStateError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product with qubit 0 as the leftmost (most significant) factor."""
    return reduce(np.kron, ops)


def ket(amplitudes: Sequence[complex]) -> np.ndarray:
    """Normalized pure state from (possibly unnormalized) amplitudes."""
    v = np.asarray(amplitudes, dtype=complex).ravel()
    norm = np.linalg.norm(v)
    if norm == 0:
        raise QuantumStateError("zero vector cannot be normalized")
    return v / norm


def basis_state(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    """|psi><psi| for a state vector."""
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def check_pure_state(psi, tol: float = NORM_TOL) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).ravel()
    if v.size == 0:
        raise QuantumStateError("empty state vector")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise QuantumStateError(f"state vector not normalized (norm={np.linalg.norm(v)!r})")
    return v


def hermiticity_error(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(a)
    return a.shape[0] == a.shape[1] and hermiticity_error(a) <= tol


def is_unitary(u, tol: float = 1e-10) -> bool:
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        return False
    return float(np.max(np.abs(u @ dagger(u) - np.eye(u.shape[0])))) <= tol


def check_density(rho, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Checks Hermiticity, unit trace and eigenvalues >= -tol.
    """
    rho = as_matrix(rho, "density matrix")
    d = rho.shape[0]
    if rho.shape != (d, d):
        raise QuantumStateError(f"density matrix must be square, got {rho.shape}")
    if d > MAX_DIM:
        raise QuantumStateError(f"dimension {d} exceeds supported maximum {MAX_DIM}")
    if hermiticity_error(rho) > tol:
        raise QuantumStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise QuantumStateError(f"density matrix trace is {np.trace(rho).real!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -POSITIVITY_TOL:
        raise QuantumStateError("density matrix has a negative eigenvalue")
    return rho


def is_density(rho, tol: float = HERMITIAN_TOL) -> bool:
    try:
        check_density(rho, tol)
    except QuantumStateError:
        return False
    return True


def repair_density(rho: np.ndarray, limit: float = REPAIR_LIMIT) -> np.ndarray:
    """Remove small Hermiticity and trace drift left by a numerical step.

    Drift larger than ``limit`` is treated as a failure of the step that
    produced ``rho`` and raises instead of being silently fixed.
    """
    rho = np.asarray(rho, dtype=complex)
    herm = hermiticity_error(rho)
    tr = np.trace(rho)
    if herm > limit or abs(tr - 1.0) > limit:
        raise QuantumStateError(
            f"numerical drift too large to repair (hermiticity {herm:.3g}, trace {tr:.12g})"
        )
    rho = 0.5 * (rho + dagger(rho))
    return rho / np.trace(rho).real


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of the difference of two Hermitian matrices."""
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + dagger(diff))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre ensemble (rank ``dim`` by default)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    return ket(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def evolve_unitary(rho, u) -> np.ndarray:
    """Return ``U rho U^dagger``.

    Raises
    ------
    QuantumStateError
        If the dimensions differ or ``u`` is not unitary within 1e-10.
    """
    rho = as_matrix(rho, "rho")
    u = as_matrix(u, "U")
    if u.shape != rho.shape:
        raise QuantumStateError(f"dimension mismatch: U {u.shape} vs rho {rho.shape}")
    if not is_unitary(u):
        raise QuantumStateError("U is not unitary within tolerance")
    return u @ rho @ dagger(u)


def _keep_index(keep) -> int:
    if keep in (0, "S", "s"):
        return 0
    if keep in (1, "E", "e"):
        return 1
    raise ValueError(f"keep must be 'S' or 'E', got {keep!r}")


def partial_trace(rho_c, dims: tuple[int, int], keep="S") -> np.ndarray:
    """Reduce a bipartite operator on ``S (x) E`` to one factor.

    Parameters
    ----------
    rho_c : array_like
        Operator of dimension ``d_S * d_E``; S is the left tensor factor.
    dims : (int, int)
        ``(d_S, d_E)``.
    keep : {"S", "E"}
        Which subsystem survives; the other is traced out.
    """
    rho_c = as_matrix(rho_c, "rho_c")
    d_s, d_e = (int(d) for d in dims)
    if d_s < 1 or d_e < 1 or rho_c.shape != (d_s * d_e, d_s * d_e):
        raise QuantumStateError(f"dims {dims} do not factor an operator of shape {rho_c.shape}")
    t = rho_c.reshape(d_s, d_e, d_s, d_e)
    if _keep_index(keep) == 0:
        return np.einsum("ajbj->ab", t)
    return np.einsum("jajb->ab", t)


def expectation(rho, a) -> float:
    """Real expectation value Tr[A rho] of a Hermitian observable."""
    rho = as_matrix(rho, "rho")
    a = as_matrix(a, "observable")
    if a.shape != rho.shape:
        raise QuantumStateError(f"dimension mismatch: A {a.shape} vs rho {rho.shape}")
    if hermiticity_error(a) > HERMITIAN_TOL:
        raise QuantumStateError("observable is not Hermitian")
    value = np.einsum("ij,ji->", a, rho)
    if abs(value.imag) > 1e-10:
        raise QuantumStateError(f"expectation has imaginary part {value.imag:.3g}; is rho Hermitian?")
    return float(value.real)


def orthogonal_complement(chi: np.ndarray) -> np.ndarray:
    """The qubit state orthogonal to ``chi``: (a, b) -> (-b*, a*)."""
    a, b = np.asarray(chi, dtype=complex).ravel()
    return np.array([-np.conj(b), np.conj(a)])


def projective_measure(rho, p, u: float) -> tuple[int, np.ndarray]:
    """Sample a two-outcome measurement of a rank-1 qubit projector.

    ``p = |chi><chi|``. Outcome 1 occurs iff ``u < Tr[P rho]``; the
    post-measurement state is ``chi`` for outcome 1 and the state
    orthogonal to it for outcome 0. The uniform deviate ``u`` comes from
    the caller so that sampling stays reproducible.
    """
    rho = as_matrix(rho, "rho")
    p = as_matrix(p, "projector")
    if p.shape != (2, 2) or rho.shape != (2, 2):
        raise QuantumStateError("projective_measure is defined for qubits only")
    if hermiticity_error(p) > 1e-10 or np.max(np.abs(p @ p - p)) > 1e-10:
        raise QuantumStateError("P is not an orthogonal projector")
    if abs(np.trace(p).real - 1.0) > 1e-10:
        raise QuantumStateError("P is not rank 1")
    if not 0.0 <= u < 1.0:
        raise ValueError(f"uniform deviate must lie in [0, 1), got {u!r}")
    evals, evecs = np.linalg.eigh(p)
    chi = evecs[:, int(np.argmax(evals))]
    p1 = min(1.0, max(0.0, float(np.real(np.trace(p @ rho)))))
    if u < p1:
        return 1, chi
    return 0, orthogonal_complement(chi)


def fidelity(chi, phi) -> float:
    """Overlap modulus |<chi|phi>| between pure states."""
    chi = np.asarray(chi, dtype=complex).ravel()
    phi = np.asarray(phi, dtype=complex).ravel()
    if chi.shape != phi.shape:
        raise QuantumStateError(f"dimension mismatch: {chi.shape} vs {phi.shape}")
    return float(min(1.0, abs(np.vdot(chi, phi))))


def operator_on_qubit(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Embed a single-qubit operator acting on ``qubit`` into ``n_qubits``."""
    factors = [I2] * n_qubits
    factors[qubit] = np.asarray(op, dtype=complex)
    return kron(*factors)
