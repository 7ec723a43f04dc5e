"""Kraus-operator channels.

Includes the three hardware noise channels used in the reservoir pipeline,
the generalized amplitude damping (GAD) channel that solves the thermal
qubit master equation, and Kraus extraction from a system-environment
dilation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qcore import (
    I2,
    X,
    Y,
    Z,
    QuantumStateError,
    as_matrix,
    check_density,
    dagger,
    is_unitary,
)

COMPLETENESS_TOL = 1e-10
# beyond this value of 1/(2T) the csch expressions are replaced by their T -> 0 limits
CSCH_GUARD = 350.0
DILATION_WEIGHT_CUTOFF = 1e-12


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map given by its Kraus operators."""

    kraus_ops: tuple
    label: str = ""
    dim: int = field(init=False)

    def __post_init__(self):
        ops = tuple(as_matrix(k, "Kraus operator") for k in self.kraus_ops)
        if not ops:
            raise QuantumStateError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise QuantumStateError("Kraus operators must be square and of equal dimension")
            k.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "dim", d)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_channel(self, rho)

    def compose(self, first: "KrausChannel") -> "KrausChannel":
        """Channel that applies ``first`` and then ``self``."""
        if first.dim != self.dim:
            raise QuantumStateError("cannot compose channels of different dimension")
        ops = [k @ j for k in self.kraus_ops for j in first.kraus_ops]
        return KrausChannel(ops, label=f"{self.label}*{first.label}")


@dataclass(frozen=True)
class GadParams:
    """Dimensionless thermal-qubit parameters.

    ``gamma0_tilde`` is the zero-temperature decay rate in units of the
    qubit frequency, ``T_tilde`` the temperature in units of the level
    splitting and ``tau_tilde`` the evolution time in units of 1/frequency.
    """

    gamma0_tilde: float
    T_tilde: float
    tau_tilde: float

    def __post_init__(self):
        for name in ("gamma0_tilde", "T_tilde", "tau_tilde"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {v!r}")
            object.__setattr__(self, name, v)


def apply_channel(ch: KrausChannel, rho) -> np.ndarray:
    rho = as_matrix(rho, "rho")
    if rho.shape != (ch.dim, ch.dim):
        raise QuantumStateError(f"dimension mismatch: channel dim {ch.dim} vs rho {rho.shape}")
    k = np.stack(ch.kraus_ops)
    return np.einsum("kij,jl,kml->im", k, rho, k.conj())


def completeness_error(ch: KrausChannel) -> float:
    total = sum(dagger(k) @ k for k in ch.kraus_ops)
    return float(np.linalg.norm(total - np.eye(ch.dim), "fro"))


def validate_completeness(ch: KrausChannel, tol: float = COMPLETENESS_TOL) -> bool:
    """True iff the Kraus operators resolve the identity within ``tol`` (Frobenius)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return completeness_error(ch) <= tol


def _check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"error probability must lie in [0, 1], got {p!r}")
    return p


def amplitude_damping(p: float) -> KrausChannel:
    p = _check_probability(p)
    k0 = np.array([[1, 0], [0, math.sqrt(1 - p)]], dtype=complex)
    k1 = np.array([[0, math.sqrt(p)], [0, 0]], dtype=complex)
    return KrausChannel((k0, k1), label=f"amplitude_damping({p})")


def phase_damping(p: float) -> KrausChannel:
    p = _check_probability(p)
    k0 = math.sqrt(1 - p) * I2
    k1 = math.sqrt(p) * np.diag([1, 0]).astype(complex)
    k2 = math.sqrt(p) * np.diag([0, 1]).astype(complex)
    return KrausChannel((k0, k1, k2), label=f"phase_damping({p})")


def depolarizing(p: float) -> KrausChannel:
    p = _check_probability(p)
    s = math.sqrt(p / 3)
    return KrausChannel(
        (math.sqrt(1 - p) * I2, s * X, s * Y, s * Z), label=f"depolarizing({p})"
    )


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=complex),), label="identity")


def thermal_rates(gamma0_tilde: float, T_tilde: float) -> tuple[float, float]:
    """Decay and excitation rates ``(Gamma_+, Gamma_-)`` of the thermal qubit.

    ``Gamma_pm = (Gamma_0 / 2) exp(+-x) csch(x)`` with ``x = 1 / (2 T)``,
    written as ``Gamma_0 / (1 - e^{-2x})`` and ``Gamma_0 e^{-2x} / (1 - e^{-2x})``
    so that neither branch overflows.
    """
    g0 = float(gamma0_tilde)
    T = float(T_tilde)
    if g0 < 0 or T < 0:
        raise ValueError("rates and temperatures must be nonnegative")
    if T == 0 or 1.0 / (2.0 * T) > CSCH_GUARD:
        return g0, 0.0
    x = 1.0 / (2.0 * T)
    denom = -math.expm1(-2.0 * x)
    return g0 / denom, g0 * math.exp(-2.0 * x) / denom


def gad_parameters(params: GadParams) -> tuple[float, float]:
    """Damping probability ``gamma`` and excited-bath weight ``q`` of the GAD channel."""
    g_plus, g_minus = thermal_rates(params.gamma0_tilde, params.T_tilde)
    total = g_plus + g_minus
    if total == 0.0:
        return 0.0, 0.0
    gamma = -math.expm1(-total * params.tau_tilde)
    return gamma, g_minus / total


def generalized_amplitude_damping(params: GadParams, eigenbasis=None) -> KrausChannel:
    """Dissipative part of the thermal qubit dynamics over ``tau_tilde``.

    The four operators are built in the energy eigenbasis ``{|->, |+>}``
    (ground first). ``eigenbasis`` is a 2x2 unitary whose columns are
    ``|->`` and ``|+>`` in the computational basis; the default is the
    computational basis itself. The coherent rotation generated by the
    Hamiltonian is not included and must be applied by the caller.
    """
    gamma, q = gad_parameters(params)
    a = math.sqrt(1.0 - gamma)
    s = math.sqrt(gamma)
    e0 = math.sqrt(1 - q) * np.array([[1, 0], [0, a]], dtype=complex)
    e1 = math.sqrt(1 - q) * np.array([[0, s], [0, 0]], dtype=complex)
    e2 = math.sqrt(q) * np.array([[a, 0], [0, 1]], dtype=complex)
    e3 = math.sqrt(q) * np.array([[0, 0], [s, 0]], dtype=complex)
    ops = [e0, e1, e2, e3]
    if eigenbasis is not None:
        v = as_matrix(eigenbasis, "eigenbasis")
        if v.shape != (2, 2) or not is_unitary(v):
            raise QuantumStateError("eigenbasis must be a 2x2 unitary")
        ops = [v @ e @ dagger(v) for e in ops]
    label = f"gad({params.gamma0_tilde}, {params.T_tilde}, {params.tau_tilde})"
    return KrausChannel(ops, label=label)


def kraus_from_dilation(u_c, rho_e0, dims: tuple[int, int]) -> KrausChannel:
    """Kraus operators of ``rho -> Tr_E[U_C (rho (x) rho_E0) U_C^dagger]``.

    ``K_ab = sqrt(lambda_b) <psi_a| U_C |psi_b>`` where the matrix element is
    taken on the environment factor only, ``{lambda_b, psi_b}`` being the
    eigen-decomposition of ``rho_E0``. Environment components with weight
    below 1e-12 are dropped.
    """
    d_s, d_e = (int(d) for d in dims)
    u_c = as_matrix(u_c, "U_C")
    if d_s < 1 or d_e < 1 or u_c.shape != (d_s * d_e, d_s * d_e):
        raise QuantumStateError(f"dims {dims} do not match U_C of shape {u_c.shape}")
    if not is_unitary(u_c):
        raise QuantumStateError("U_C is not unitary within tolerance")
    rho_e0 = check_density(rho_e0)
    if rho_e0.shape != (d_e, d_e):
        raise QuantumStateError("environment state dimension does not match dims")
    lam, psi = np.linalg.eigh(rho_e0)
    u4 = u_c.reshape(d_s, d_e, d_s, d_e)
    ops = []
    for beta in range(d_e):
        if lam[beta] <= DILATION_WEIGHT_CUTOFF:
            continue
        for alpha in range(d_e):
            k = np.einsum("a,lamb,b->lm", psi[:, alpha].conj(), u4, psi[:, beta])
            ops.append(math.sqrt(lam[beta]) * k)
    ch = KrausChannel(ops, label="dilation")
    if not validate_completeness(ch, COMPLETENESS_TOL):
        raise QuantumStateError("extracted Kraus operators fail completeness")
    return ch


_ZOO = {
    "amplitude_damping": amplitude_damping,
    "phase_damping": phase_damping,
    "depolarizing": depolarizing,
}


def channel_by_name(name: str, **params) -> KrausChannel:
    """Look up a built-in channel: amplitude_damping, phase_damping, depolarizing, gad.

    The first three take ``p``; ``gad`` takes ``gamma0_tilde``, ``T_tilde``, ``tau_tilde``.
    """
    if name == "gad":
        return generalized_amplitude_damping(GadParams(**params))
    try:
        factory = _ZOO[name]
    except KeyError:
        raise ValueError(f"unknown channel {name!r}; expected one of {sorted(_ZOO) + ['gad']}") from None
    return factory(**params)

