import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from dfsqc.hamiltonians import Axis, collective_coupling_hamiltonian, geometric_phase_unitary
from dfsqc.qcore import (
    CAVITY,
    I2,
    KET0,
    KET1,
    KET_PLUS,
    SX,
    SZ,
    OperatorMatrix,
    StateVector,
    SystemLayout,
    annihilation,
    apply,
    check_projectors,
    commutator,
    embed,
    enumerate_outcomes,
    expm_hermitian,
    kron,
    measure,
    operator_infidelity,
    propagate_timedep,
    single,
    state_overlap,
    unitarity_error,
)


def random_hermitian(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (m + m.conj().T) / 2


class TestLayout:
    def test_devices_with_cavity(self):
        lay = SystemLayout.devices(["d1", "d2"], n_max=4)
        assert lay.labels == ("d1", "d2", CAVITY)
        assert lay.dims == (2, 2, 5)
        assert lay.total_dim == 20
        assert lay.has_cavity

    @pytest.mark.parametrize(
        "subs",
        [(("a", 2), ("a", 2)), (("a", 3),), ((CAVITY, 1),)],
    )
    def test_invalid(self, subs):
        with pytest.raises(ValueError):
            SystemLayout(subs)

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="unknown subsystem"):
            SystemLayout.devices(["a"]).index("b")

    def test_concatenation_renames_collisions(self):
        lay = SystemLayout.devices(["q0"]) + SystemLayout.devices(["q0"])
        assert lay.labels == ("q0", "q0_2")


class TestState:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError, match="normalized"):
            StateVector(SystemLayout.devices(["a"]), [1, 1])

    def test_small_drift_renormalized_and_frozen(self):
        s = StateVector(SystemLayout.devices(["a"]), [1 + 1e-10, 0])
        assert np.linalg.norm(s.amplitudes) == pytest.approx(1, abs=1e-15)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0

    def test_basis_state(self):
        s = StateVector.basis(SystemLayout.devices(["a", "b"]), [0, 1])
        np.testing.assert_array_equal(s.amplitudes, np.kron(KET0, KET1))

    def test_wrong_length(self):
        with pytest.raises(ValueError, match="length"):
            StateVector(SystemLayout.devices(["a", "b"]), KET0)


class TestKron:
    def test_identity(self):
        out = kron(single(I2, "a"), single(I2, "b"))
        np.testing.assert_array_equal(out.matrix, np.eye(4))

    def test_sigma_z_convention(self):
        out = kron(single(SZ, "a"), single(I2, "b"))
        np.testing.assert_array_equal(out.matrix, np.diag([1, 1, -1, -1]))

    def test_xx_on_01(self):
        xx = kron(single(SX, "a"), single(SX, "b"))
        s = StateVector.basis(xx.layout, [0, 1])
        np.testing.assert_allclose((xx @ s).amplitudes, np.kron(KET1, KET0))


class TestEmbed:
    def test_single_target(self):
        lay = SystemLayout.devices(["d1", "d2"])
        out = apply(SX, StateVector.basis(lay, [0, 0]), ["d2"])
        np.testing.assert_allclose(out.amplitudes, np.kron(KET0, KET1))

    @pytest.mark.parametrize("target", [["d1"], ["cav"], ["d2", "d1"]])
    def test_identity_lifts_to_identity(self, target):
        lay = SystemLayout.devices(["d1", "d2"], n_max=3)
        d = int(np.prod([lay.dim_of(t) for t in target]))
        np.testing.assert_array_equal(embed(np.eye(d), lay, target).matrix, np.eye(lay.total_dim))

    def test_device_pair_commutes_with_number(self):
        lay = SystemLayout.devices(["d1", "d2"], n_max=6)
        a = annihilation(6)
        xx = embed(np.kron(SX, SX), lay, ["d1", "d2"])
        num = embed(a.conj().T @ a, lay, [CAVITY])
        assert commutator(xx, num).norm() < 1e-12

    def test_reordered_targets_match_swap(self):
        rng = np.random.default_rng(0)
        lay = SystemLayout.devices(["a", "b", "c"])
        op = random_hermitian(rng, 4)
        swap = np.eye(4)[[0, 2, 1, 3]]
        np.testing.assert_allclose(
            embed(op, lay, ["c", "a"]).matrix, embed(swap @ op @ swap, lay, ["a", "c"]).matrix, atol=1e-14
        )

    def test_non_adjacent_matches_explicit_kron(self):
        lay = SystemLayout.devices(["a", "b", "c"])
        expected = np.kron(np.kron(SX, I2), SZ)
        np.testing.assert_array_equal(embed(np.kron(SX, SZ), lay, ["a", "c"]).matrix, expected)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="cannot act"):
            embed(np.eye(4), SystemLayout.devices(["a", "b"]), ["a"])


class TestExpm:
    def test_zero_generator(self):
        z = single(np.zeros((2, 2)))
        np.testing.assert_array_equal(expm_hermitian(z, 3.0).matrix, I2)

    def test_sigma_z_quarter(self):
        u = expm_hermitian(single(SZ), np.pi / 2)
        np.testing.assert_allclose(u.matrix, np.diag([np.exp(-1j * np.pi / 2), np.exp(1j * np.pi / 2)]), atol=1e-15)

    def test_hbar_scaling(self):
        a = expm_hermitian(single(SX), 0.3, hbar=2.0).matrix
        b = expm_hermitian(single(SX), 0.15).matrix
        np.testing.assert_allclose(a, b, atol=1e-15)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31), st.floats(-5, 5))
    def test_against_scipy_and_inverse(self, seed, t):
        rng = np.random.default_rng(seed)
        h = random_hermitian(rng, 6)
        u = expm_hermitian(h, t)
        np.testing.assert_allclose(u.matrix, scipy.linalg.expm(-1j * h * t), atol=1e-10)
        back = u.matrix @ expm_hermitian(h, -t).matrix
        assert np.abs(back - np.eye(6)).max() < 1e-10
        assert unitarity_error(u) < 1e-12

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            expm_hermitian(np.array([[0, 1], [0, 0]]), 1.0)


class TestPropagate:
    @pytest.mark.parametrize("steps", [1, 3, 50])
    @pytest.mark.parametrize("order", [2, 4])
    def test_constant_hamiltonian(self, steps, order):
        h = random_hermitian(np.random.default_rng(1), 4)
        u = propagate_timedep(lambda t: h, 0.2, 1.7, steps, order=order)
        np.testing.assert_allclose(u.matrix, scipy.linalg.expm(-1j * h * 1.5), atol=1e-10)

    def test_time_ordering_against_ode_oracle(self):
        rng = np.random.default_rng(2)
        h0, h1 = random_hermitian(rng, 3), random_hermitian(rng, 3)

        def h(t):
            return h0 + np.sin(2 * t) * h1

        # independent oracle: fine RK4 on the column vectors
        u = np.eye(3, dtype=complex)
        n, t1 = 20000, 1.0
        dt = t1 / n
        for k in range(n):
            t = k * dt
            f = lambda s, y: -1j * h(s) @ y
            k1 = f(t, u)
            k2 = f(t + dt / 2, u + dt / 2 * k1)
            k3 = f(t + dt / 2, u + dt / 2 * k2)
            k4 = f(t + dt, u + dt * k3)
            u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        got = propagate_timedep(h, 0, t1, 400, order=4).matrix
        assert np.abs(got - u).max() < 1e-10

    @pytest.mark.parametrize("order, ratio", [(2, 4.0), (4, 16.0)])
    def test_richardson_ratio(self, order, ratio):
        rng = np.random.default_rng(3)
        h0, h1 = random_hermitian(rng, 4), random_hermitian(rng, 4)
        h = lambda t: h0 + np.cos(3 * t) * h1
        ref = propagate_timedep(h, 0, 1, 2000, order=4).matrix
        coarse = np.linalg.norm(propagate_timedep(h, 0, 1, 20, order=order).matrix - ref, 2)
        fine = np.linalg.norm(propagate_timedep(h, 0, 1, 40, order=order).matrix - ref, 2)
        assert coarse / fine == pytest.approx(ratio, rel=0.3)

    def test_geometric_loop_sign_from_fine_oracle(self):
        beta, delta, n_max = 0.05, 1.0, 20
        t1 = 2 * np.pi / delta
        chi = beta**2 / delta
        h = lambda t: collective_coupling_hamiltonian(Axis.X, 2, beta, delta, t, n_max).matrix
        u = propagate_timedep(h, 0, t1, 2000).matrix
        block = u.reshape(4, n_max + 1, 4, n_max + 1)[:, 0, :, 0]
        j2 = np.diag([4.0, 0, 0, 4.0])
        hh = np.kron([[1, 1], [1, -1]], [[1, 1], [1, -1]]) / 2
        minus = hh @ scipy.linalg.expm(-1j * chi * t1 * j2) @ hh
        plus = hh @ scipy.linalg.expm(1j * chi * t1 * j2) @ hh
        assert operator_infidelity(block, minus) < 1e-8
        assert operator_infidelity(block, plus) > 1e-4
        np.testing.assert_allclose(geometric_phase_unitary(Axis.X, 2, chi, t1).matrix, minus, atol=1e-12)

    def test_dimension_drift(self):
        with pytest.raises(ValueError, match="dimension"):
            propagate_timedep(lambda t: np.eye(2) if t < 0.5 else np.eye(4), 0, 1, 2)

    def test_bad_steps(self):
        with pytest.raises(ValueError):
            propagate_timedep(lambda t: np.eye(2), 0, 1, 0)


class TestMeasure:
    projs = [np.outer(KET0, KET0), np.outer(KET1, KET1)]
    lay = SystemLayout.devices(["q"])

    def test_eigenstate(self):
        o = measure(StateVector(self.lay, KET0), self.projs, np.random.default_rng(0))
        assert (o.index, o.probability) == (0, 1.0)

    def test_symmetric_probabilities(self):
        outs = enumerate_outcomes(StateVector(self.lay, KET_PLUS), self.projs)
        assert [o.probability for o in outs] == pytest.approx([0.5, 0.5], abs=1e-15)

    def test_sampling_frequencies(self):
        rng = np.random.default_rng(11)
        s = StateVector(self.lay, [np.sqrt(0.2), np.sqrt(0.8)])
        hits = sum(measure(s, self.projs, rng).index for _ in range(4000))
        assert hits / 4000 == pytest.approx(0.8, abs=0.03)

    def test_same_seed_same_outcomes(self):
        s = StateVector(self.lay, KET_PLUS)
        r1, r2 = np.random.default_rng(5), np.random.default_rng(5)
        a = [measure(s, self.projs, r1).index for _ in range(20)]
        b = [measure(s, self.projs, r2).index for _ in range(20)]
        assert a == b

    def test_incomplete_projectors(self):
        with pytest.raises(ValueError, match="identity"):
            check_projectors([np.outer(KET0, KET0)])

    def test_non_idempotent(self):
        with pytest.raises(ValueError, match="idempotent"):
            check_projectors([0.5 * np.eye(2), 0.5 * np.eye(2)])

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0, 2 * np.pi), st.floats(0, np.pi))
    def test_protocol_parity_split_is_even(self, phase, theta):
        # (alpha|01> + zeta|10>)_C (|0> + |1>)_A / sqrt2 measured on (c1, A)
        alpha, zeta = np.cos(theta / 2), np.exp(1j * phase) * np.sin(theta / 2)
        lay = SystemLayout.devices(["c1", "c2", "A"])
        c = alpha * np.kron(KET0, KET1) + zeta * np.kron(KET1, KET0)
        s = StateVector(lay, np.kron(c, KET_PLUS))
        even = np.diag([1, 0, 0, 1]).astype(complex)
        outs = enumerate_outcomes(s, [embed(even, lay, ["c1", "A"]), embed(np.eye(4) - even, lay, ["c1", "A"])])
        assert [o.probability for o in outs] == pytest.approx([0.5, 0.5], abs=1e-12)


def test_overlap_and_infidelity_ignore_global_phase():
    u = expm_hermitian(random_hermitian(np.random.default_rng(4), 4), 1.0).matrix
    assert operator_infidelity(u, np.exp(0.7j) * u) < 1e-14
    psi = np.array([0.6, 0.8j])
    assert state_overlap(psi, -1j * psi) == pytest.approx(1.0)


def test_operator_arithmetic_checks_layout():
    a = OperatorMatrix.identity(SystemLayout.devices(["a"]))
    b = OperatorMatrix.identity(SystemLayout.devices(["a", "b"]))
    with pytest.raises(ValueError, match="mismatch"):
        a + b
    assert (2 * a - a).norm() == pytest.approx(1.0)
