import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dissipative_qml.lindblad import (
    LindbladModel,
    SteadyStateMap,
    build_liouvillian,
    evolve,
    integrate_rk4,
    lindblad_rhs,
    liouvillian_spectrum,
    singlet,
    squeezed_reservoir_model,
    steady_state_map,
    steady_states,
    thermal_qubit_model,
    two_qubit_thermal_model,
    unvec,
    vec,
)
from dissipative_qml.qcore import (
    SIGMA_MINUS,
    QuantumStateError,
    X,
    Z,
    basis_state,
    dagger,
    evolve_unitary,
    is_density,
    projector,
    random_density,
    random_unitary,
    trace_distance,
)
from dissipative_qml.qrl import eigenbasis_unitary

from strategies import seeds

SINGLET = projector(singlet())
GROUND = projector(basis_state(0, 4))
EXCITED = projector(basis_state(3, 4))


def random_model(rng, dim, n_jumps=2):
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    diss = [
        (rng.uniform(0, 2), rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
        for _ in range(n_jumps)
    ]
    return LindbladModel(h + dagger(h), tuple(diss))


def brute_rhs(model, rho):
    # term-by-term with explicit index loops for the dissipator
    d = model.dim
    h = model.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for rate, op in model.dissipators:
        for a in range(d):
            for b in range(d):
                jump = sum(op[a, i] * rho[i, j] * np.conj(op[b, j]) for i in range(d) for j in range(d))
                ldl = dagger(op) @ op
                anti = sum(ldl[a, i] * rho[i, b] + rho[a, i] * ldl[i, b] for i in range(d))
                out[a, b] += rate * (jump - 0.5 * anti)
    return out


def gibbs_ratio(T):
    return math.exp(-1 / T)


def excited_population(rho, v):
    plus = v[:, 1]
    return float(np.real(plus.conj() @ rho @ plus))


class TestModel:
    def test_rejects_non_hermitian(self):
        with pytest.raises(QuantumStateError):
            LindbladModel(np.array([[0, 1], [0, 0]]))

    def test_rejects_negative_rate(self):
        with pytest.raises(ValueError):
            LindbladModel(np.zeros((2, 2)), ((-1.0, X),))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(QuantumStateError):
            LindbladModel(np.zeros((2, 2)), ((1.0, np.eye(4)),))


class TestLiouvillian:
    def test_zero_model(self):
        assert np.all(build_liouvillian(LindbladModel(np.zeros((3, 3)))) == 0)

    def test_single_dissipator_against_brute_force(self, rng):
        model = LindbladModel(np.zeros((2, 2)), ((0.7, SIGMA_MINUS + 0.3 * X),))
        m = build_liouvillian(model)
        for _ in range(50):
            rho = random_density(2, rng)
            np.testing.assert_allclose(unvec(m @ vec(rho)), brute_rhs(model, rho), atol=1e-12)

    def test_random_models_against_brute_force(self, rng):
        for i in range(100):
            dim = (2, 3, 4)[i % 3]
            model = random_model(rng, dim)
            rho = random_density(dim, rng)
            m = build_liouvillian(model)
            expected = brute_rhs(model, rho)
            scale = max(1.0, np.abs(expected).max())
            np.testing.assert_allclose(unvec(m @ vec(rho)), expected, atol=1e-12 * scale)
            np.testing.assert_allclose(lindblad_rhs(model, rho), expected, atol=1e-12 * scale)

    def test_trace_preserving(self, rng):
        model = random_model(rng, 3)
        m = build_liouvillian(model)
        for _ in range(20):
            assert abs(np.trace(unvec(m @ vec(random_density(3, rng))))) < 1e-10

    def test_vec_convention(self, rng):
        a, b, x = (rng.normal(size=(3, 3)) for _ in range(3))
        np.testing.assert_allclose(vec(a @ x @ b), np.kron(b.T, a) @ vec(x), atol=1e-12)
        np.testing.assert_array_equal(unvec(vec(x)), x)

    def test_dimension_limit(self):
        with pytest.raises(QuantumStateError):
            build_liouvillian(LindbladModel(np.zeros((32, 32))))

    @pytest.mark.parametrize(
        "model",
        [
            thermal_qubit_model(0.5, 0.3),
            thermal_qubit_model(1.0, 0.0),
            two_qubit_thermal_model(0.0),
            two_qubit_thermal_model(1.0),
            squeezed_reservoir_model(0.2, 0.0),
            squeezed_reservoir_model(0.5, math.pi / 2),
        ],
    )
    def test_spectrum_in_left_half_plane(self, model):
        assert liouvillian_spectrum(model).real.max() <= 1e-10


class TestEvolve:
    def test_closed_system(self, rng):
        h = random_model(rng, 3, n_jumps=0).hamiltonian
        rho = random_density(3, rng)
        u = np.linalg.eigh(h)
        propagator = u[1] @ np.diag(np.exp(-1j * u[0] * 1.3)) @ dagger(u[1])
        np.testing.assert_allclose(evolve(LindbladModel(h), rho, 1.3), evolve_unitary(rho, propagator), atol=1e-10)

    def test_time_zero(self, rng):
        rho = random_density(2, rng)
        np.testing.assert_array_equal(evolve(thermal_qubit_model(0.5, 0.3), rho, 0.0), rho)

    def test_negative_time(self, rng):
        with pytest.raises(ValueError):
            evolve(thermal_qubit_model(0.5, 0.3), random_density(2, rng), -1.0)

    def test_matches_rk4(self, rng):
        for model, dim in [(thermal_qubit_model(0.5, 0.3, eigenbasis_unitary(1.0, 0.5)), 2),
                           (two_qubit_thermal_model(0.5), 4), (random_model(rng, 3), 3)]:
            rho = random_density(dim, rng)
            assert trace_distance(evolve(model, rho, 2.0), integrate_rk4(model, rho, 2.0)) < 1e-9

    def test_detailed_balance_long_time(self):
        v = eigenbasis_unitary(1.0, 0.5)
        model = thermal_qubit_model(0.5, 0.3, eigenbasis=v)
        plus = projector(v[:, 1])
        for rho in (evolve(model, plus, 80.0), integrate_rk4(model, plus, 80.0)):
            p_plus = excited_population(rho, v)
            assert abs(p_plus / (1 - p_plus) - gibbs_ratio(0.3)) < 1e-8

    @pytest.mark.parametrize("g0", [0.3, 1.0])
    def test_zero_temperature_pure_decay(self, g0):
        v = eigenbasis_unitary(1.0, 0.5)
        model = thermal_qubit_model(g0, 0.0, eigenbasis=v)
        for t in np.linspace(0, 5, 11):
            rho = evolve(model, projector(v[:, 1]), t)
            assert abs(excited_population(rho, v) - math.exp(-g0 * t)) < 1e-8

    @given(seeds, st.floats(0, 3), st.floats(0, 3))
    def test_semigroup(self, seed, t1, t2):
        rng = np.random.default_rng(seed)
        model = thermal_qubit_model(rng.uniform(0, 1), rng.uniform(0.01, 1), random_unitary(2, rng))
        rho = random_density(2, rng)
        np.testing.assert_allclose(evolve(model, evolve(model, rho, t1), t2), evolve(model, rho, t1 + t2), atol=1e-9)

    @pytest.mark.parametrize("psi", [0.0, math.pi / 2])
    def test_squeezed_stays_physical(self, rng, psi):
        model = squeezed_reservoir_model(0.2, psi)
        rho = random_density(4, rng)
        for t in np.linspace(0, 50, 11):
            assert is_density(evolve(model, rho, t))


class TestSteadyStates:
    @pytest.mark.parametrize("T", [0.1, 0.3, 1.0])
    def test_single_qubit_gibbs(self, T):
        v = eigenbasis_unitary(1.0, 0.5)
        kernel = steady_states(thermal_qubit_model(0.5, T, eigenbasis=v))
        assert len(kernel) == 1
        rho = kernel[0] / np.trace(kernel[0])
        p_plus = excited_population(rho, v)
        assert abs(p_plus / (1 - p_plus) - gibbs_ratio(T)) < 1e-8

    def test_zero_temperature_two_qubits(self):
        model = two_qubit_thermal_model(0.0)
        kernel = steady_states(model)
        basis = np.stack([vec(k) for k in kernel], axis=1)
        for target in (GROUND, SINGLET):
            coef, *_ = np.linalg.lstsq(basis, vec(target), rcond=None)
            assert np.linalg.norm(basis @ coef - vec(target)) < 1e-10

    @pytest.mark.parametrize("nbar,dim", [(0.0, 4), (0.5, 2), (1.0, 2)])
    def test_kernel_dimension(self, nbar, dim):
        assert len(steady_states(two_qubit_thermal_model(nbar))) == dim

    def test_squeezed_residuals(self):
        model = squeezed_reservoir_model(0.2, 0.0)
        m = build_liouvillian(model)
        kernel = steady_states(model)
        assert len(kernel) >= 2
        for sigma in kernel:
            assert np.linalg.norm(m @ vec(sigma)) <= 1e-10
            np.testing.assert_allclose(sigma, dagger(sigma), atol=1e-12)

    def test_orthonormal(self):
        kernel = steady_states(two_qubit_thermal_model(0.0))
        gram = np.array([[np.vdot(a, b) for b in kernel] for a in kernel])
        np.testing.assert_allclose(gram, np.eye(len(kernel)), atol=1e-10)


class TestDarkStates:
    @pytest.mark.parametrize(
        "model",
        [two_qubit_thermal_model(n) for n in (0.0, 0.5, 1.0)]
        + [squeezed_reservoir_model(r, psi) for r in (0.0, 0.2, 0.7) for psi in (0.0, 1.0, math.pi)],
    )
    def test_singlet_is_preserved(self, model):
        for t in (0.5, 5.0, 50.0):
            assert trace_distance(evolve(model, SINGLET, t), SINGLET) < 1e-8

    def test_ground_fixed_at_zero_temperature(self):
        model = two_qubit_thermal_model(0.0)
        assert not model.dissipators[1][1].any()
        for t in (0.1, 1.0, 30.0):
            assert trace_distance(evolve(model, GROUND, t), GROUND) < 1e-12

    def test_residual_singlet_population(self):
        # |11> decays to |00> entirely; |01> keeps half its weight in the singlet
        model = two_qubit_thermal_model(0.0)
        late = evolve(model, EXCITED, 100.0)
        assert abs(np.real(singlet().conj() @ late @ singlet())) < 1e-12
        late = evolve(model, projector(basis_state(1, 4)), 100.0)
        assert abs(np.real(singlet().conj() @ late @ singlet()) - 0.5) < 1e-10

    def test_zero_squeezing_matches_thermal(self):
        a = build_liouvillian(squeezed_reservoir_model(0.0, 1.3))
        b = build_liouvillian(two_qubit_thermal_model(0.0))
        np.testing.assert_allclose(a, b, atol=1e-14)


class TestSteadyStateMap:
    def test_single_qubit_unique_limit(self, rng):
        v = eigenbasis_unitary(1.0, 0.5)
        model = thermal_qubit_model(0.5, 0.3, eigenbasis=v)
        p = steady_state_map(model)
        outs = [p(random_density(2, rng)) for _ in range(5)]
        for out in outs[1:]:
            np.testing.assert_allclose(out, outs[0], atol=1e-12)
        assert abs(excited_population(outs[0], v) / (1 - excited_population(outs[0], v)) - gibbs_ratio(0.3)) < 1e-8

    def test_dark_state(self):
        p = steady_state_map(two_qubit_thermal_model(0.0))
        np.testing.assert_allclose(p(SINGLET), SINGLET, atol=1e-12)

    @pytest.mark.parametrize("model", [two_qubit_thermal_model(0.0), two_qubit_thermal_model(0.5),
                                       squeezed_reservoir_model(0.2, 0.0)])
    def test_matches_long_time(self, model, rng):
        p = steady_state_map(model)
        for rho in [EXCITED] + [random_density(4, rng) for _ in range(5)]:
            assert trace_distance(p(rho), evolve(model, rho, 100.0)) < 1e-6

    @pytest.mark.parametrize("model", [two_qubit_thermal_model(0.0), squeezed_reservoir_model(0.2, 1.0),
                                       thermal_qubit_model(0.5, 0.3)])
    def test_idempotent(self, model):
        p = steady_state_map(model).matrix
        np.testing.assert_allclose(p @ p, p, atol=1e-10)

    def test_zero_temperature_kraus(self, rng):
        p = steady_state_map(two_qubit_thermal_model(0.0))
        assert p.is_completely_positive()
        kraus = p.to_kraus()
        assert len(kraus.kraus_ops) <= 4
        rho = random_density(4, rng)
        np.testing.assert_allclose(kraus(rho), p(rho), atol=1e-10)

    def test_choi_of_identity(self):
        ident = SteadyStateMap(np.eye(4), 2)
        phi = np.array([1, 0, 0, 1])
        np.testing.assert_allclose(ident.choi(), np.outer(phi, phi), atol=1e-15)

    def test_rejects_no_limit(self):
        # coherent precession without damping never settles
        with pytest.raises(QuantumStateError):
            steady_state_map(LindbladModel(Z / 2))

    def test_rejects_non_cp_kraus(self):
        transpose = SteadyStateMap(np.eye(4)[[0, 2, 1, 3]], 2)
        assert not transpose.is_completely_positive()
        with pytest.raises(QuantumStateError):
            transpose.to_kraus()
