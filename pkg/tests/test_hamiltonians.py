import numpy as np
import pytest
import scipy.linalg

from dfsqc.hamiltonians import (
    EFFECTIVE_PHASE_SIGN,
    Axis,
    EffectiveParams,
    FluxConfig,
    cavity_cos_operator,
    collective_coupling_hamiltonian,
    collective_op,
    device_cavity_exact,
    device_hamiltonian,
    effective_hamiltonian,
    geometric_phase_unitary,
    lambdicke_hamiltonian,
    multidevice_lab_hamiltonian,
    rwa_hamiltonian,
)
from dfsqc.qcore import SX, SY, SZ, annihilation, operator_infidelity, propagate_timedep


def vacuum_block(u, n_dev, n_max):
    d = 2**n_dev
    return u.reshape(d, n_max + 1, d, n_max + 1)[:, 0, :, 0]


class TestDevice:
    def test_degeneracy_and_off_flux_vanish(self):
        h = device_hamiltonian(FluxConfig(phi2=np.pi / 2, nbar=0.5))
        assert np.abs(h.matrix).max() < 1e-15

    def test_charge_and_josephson_terms(self):
        cfg = FluxConfig(nbar=0.0, phi2=0.0, e_c=0.7, e_j=1.3)
        np.testing.assert_allclose(device_hamiltonian(cfg).matrix, -2 * 0.7 * SZ - 2 * 1.3 * SX)

    @pytest.mark.parametrize("nbar, phi2", [(0.1, 0.3), (0.5, 1.0), (0.9, 2.5)])
    def test_spectrum(self, nbar, phi2):
        cfg = FluxConfig(nbar=nbar, phi2=phi2, e_c=0.4, e_j=1.1)
        r = np.hypot(cfg.e_ce, cfg.e_phi)
        np.testing.assert_allclose(np.linalg.eigvalsh(device_hamiltonian(cfg).matrix), [-r, r], atol=1e-14)

    def test_bad_nbar(self):
        with pytest.raises(ValueError):
            FluxConfig(nbar=1.5)


class TestCavityCos:
    def test_zero_coupling(self):
        np.testing.assert_allclose(cavity_cos_operator(0.4, 0.0, 6).matrix, np.cos(0.4) * np.eye(7), atol=1e-14)

    def test_vacuum_gaussian_moment(self):
        c = cavity_cos_operator(0.0, 0.1, 40).matrix
        assert c[0, 0].real == pytest.approx(np.exp(-0.1**2 / 2), abs=1e-10)

    def test_hermitian_bounded(self):
        c = cavity_cos_operator(1.2, 0.3, 15).matrix
        np.testing.assert_allclose(c, c.conj().T, atol=1e-14)
        ev = np.linalg.eigvalsh(c)
        assert ev.min() >= -1 - 1e-12 and ev.max() <= 1 + 1e-12

    def test_matches_scipy_cosm(self):
        x = annihilation(12) + annihilation(12).T
        np.testing.assert_allclose(
            cavity_cos_operator(0.7, 0.2, 12).matrix, scipy.linalg.cosm(0.7 * np.eye(13) + 0.2 * x), atol=1e-12
        )


class TestDeviceCavity:
    def test_decoupled(self):
        cfg = FluxConfig(phi2=0.8, nbar=0.3, g=0.0)
        h = device_cavity_exact(cfg, 5).matrix
        np.testing.assert_allclose(h, np.kron(device_hamiltonian(cfg).matrix, np.eye(6)), atol=1e-14)

    def test_degeneracy_point(self):
        h = device_cavity_exact(FluxConfig(), 4).matrix
        np.testing.assert_allclose(h, -2 * np.kron(SX, np.eye(5)), atol=1e-14)

    def test_rejects_other_fluxes(self):
        with pytest.raises(ValueError):
            device_cavity_exact(FluxConfig(phi1=0.2), 4)

    @pytest.mark.parametrize("phi2", [0.0, 0.3, np.pi / 4, 1.0])
    def test_lamb_dicke_error_is_second_order(self, phi2):
        def err(g):
            cfg = FluxConfig(phi2=phi2, g=g, nbar=0.3)
            return (device_cavity_exact(cfg, 20) - lambdicke_hamiltonian(cfg, 20)).norm()

        assert 3.2 <= err(0.05) / err(0.025) <= 4.8
        assert err(0.05) / 0.05**2 < 1e3

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_switched_off_at_integer_flux(self, k):
        cfg = FluxConfig(phi2=k * np.pi, g=0.05, nbar=0.2)
        h = lambdicke_hamiltonian(cfg, 5).matrix
        np.testing.assert_allclose(h, np.kron(device_hamiltonian(cfg).matrix, np.eye(6)), atol=1e-14)

    def test_lambdicke_zero_coupling(self):
        cfg = FluxConfig(phi2=0.6, nbar=0.2)
        np.testing.assert_allclose(
            lambdicke_hamiltonian(cfg, 3).matrix, np.kron(device_hamiltonian(cfg).matrix, np.eye(4)), atol=1e-15
        )


class TestMultiDevice:
    def test_single_device_at_t0_matches_lamb_dicke(self):
        cfg = FluxConfig(g=0.05, omega=2.0)
        h = multidevice_lab_hamiltonian([cfg], 0.0, 6).matrix
        np.testing.assert_allclose(h, lambdicke_hamiltonian(FluxConfig(g=0.05), 6).matrix, atol=1e-14)

    def test_coupling_sign_opposite_to_single_device_expansion(self):
        # the multi-device first-order form carries +g sin(phi2) inside the bracket
        cfg = FluxConfig(g=0.05, omega=1.0)
        t = 0.7
        multi = multidevice_lab_hamiltonian([cfg], t, 6).matrix
        single = lambdicke_hamiltonian(FluxConfig(g=0.05, phi2=t), 6).matrix
        x = annihilation(6) + annihilation(6).T
        coupling = 2 * 0.05 * np.sin(t) * np.kron(SX, x)
        np.testing.assert_allclose(multi, single - 2 * coupling, atol=1e-14)

    def test_zero_coupling_has_no_cavity_operators(self):
        cfgs = [FluxConfig(omega=1.3), FluxConfig(phi1=np.pi, omega=1.3)]
        h = multidevice_lab_hamiltonian(cfgs, 0.4, 3).matrix
        dev = h.reshape(4, 4, 4, 4)[:, 0, :, 0]
        np.testing.assert_allclose(h, np.kron(dev, np.eye(4)), atol=1e-15)

    def test_swap_symmetry(self):
        cfg = FluxConfig(g=0.05, omega=1.3)
        h = multidevice_lab_hamiltonian([cfg, cfg], 0.9, 4).matrix
        swap = np.kron(np.eye(4)[[0, 2, 1, 3]], np.eye(5))
        assert np.linalg.norm(swap @ h @ swap - h, 2) < 1e-12

    def test_mismatched_devices(self):
        with pytest.raises(ValueError, match="share"):
            multidevice_lab_hamiltonian([FluxConfig(g=0.1), FluxConfig(g=0.2)], 0.0, 3)

    def test_warns_off_degeneracy(self):
        with pytest.warns(UserWarning, match="degeneracy"):
            multidevice_lab_hamiltonian([FluxConfig(nbar=0.2)], 0.0, 3)


class TestRotatingWave:
    beta, delta, n_max = 0.05, 1.0, 6

    def params(self):
        return EffectiveParams(self.beta, self.delta)

    def cfgs(self, phi1, phi3, n=2):
        return [FluxConfig(phi1=phi1, phi3=phi3, g=self.beta, e_j=1.0)] * n

    @pytest.mark.parametrize("k, sign", [(0, -1), (1, 1), (2, -1)])
    def test_x_configuration_is_collective_coupling(self, k, sign):
        t = 0.37
        h = rwa_hamiltonian(self.cfgs(k * np.pi, k * np.pi), t, self.params(), self.n_max).matrix
        ref = collective_coupling_hamiltonian(Axis.X, 2, self.beta, self.delta, t, self.n_max).matrix
        np.testing.assert_allclose(h, sign * ref, atol=1e-15)

    def test_y_configuration_couples_sigma_y(self):
        t = 0.37
        h = rwa_hamiltonian(self.cfgs(np.pi, 0.0), t, self.params(), self.n_max).matrix
        a = annihilation(self.n_max)
        quad = a * np.exp(1j * t) + a.conj().T * np.exp(-1j * t)
        jy = collective_op(Axis.Y, 2).matrix
        np.testing.assert_allclose(h, self.beta * np.kron(jy, quad), atol=1e-15)

    @pytest.mark.parametrize("t", [0.0, 1.1])
    def test_hermitian(self, t):
        h = rwa_hamiltonian(self.cfgs(0.0, 0.0), t, EffectiveParams(0.1, 3.0), 4)
        np.testing.assert_allclose(h.matrix, h.matrix.conj().T, atol=1e-15)

    @pytest.mark.parametrize("phi1, phi3, axis", [(0.0, 0.0, Axis.X), (np.pi, 0.0, Axis.Y)])
    def test_closed_loop_gives_collective_square(self, phi1, phi3, axis):
        n_max, t1 = 20, 2 * np.pi / self.delta
        cfgs = self.cfgs(phi1, phi3)
        u = propagate_timedep(lambda t: rwa_hamiltonian(cfgs, t, self.params(), n_max), 0, t1, 400, order=4)
        chi = self.params().chi
        block = vacuum_block(u.matrix, 2, n_max)
        assert operator_infidelity(block, geometric_phase_unitary(axis, 2, chi, t1).matrix) < 1e-9

    def test_mixed_configuration_leaves_no_entangling_phase(self):
        # sigma_x device on one quadrature, sigma_y device on the other: no cross term survives
        n_max, t1 = 20, 2 * np.pi / self.delta
        cfgs = [FluxConfig(g=self.beta), FluxConfig(phi1=np.pi, g=self.beta)]
        u = propagate_timedep(lambda t: rwa_hamiltonian(cfgs, t, self.params(), n_max), 0, t1, 400, order=4)
        block = vacuum_block(u.matrix, 2, n_max)
        assert operator_infidelity(block, np.eye(4)) < 1e-9

    def test_needs_axis(self):
        with pytest.raises(ValueError, match="axis"):
            rwa_hamiltonian(self.cfgs(0.3, 0.0), 0.0, self.params(), 3)

    def test_needs_positive_detuning(self):
        with pytest.raises(ValueError, match="detuning"):
            rwa_hamiltonian(self.cfgs(0.0, 0.0), 0.0, EffectiveParams(0.05, -1.0), 3)

    def test_coupling_axis(self):
        assert FluxConfig(phi1=np.pi, phi3=np.pi).coupling_axis() is Axis.X
        assert FluxConfig(phi1=np.pi, phi3=0.0).coupling_axis() is Axis.Y
        assert FluxConfig(phi1=0.0, phi3=-np.pi).coupling_axis() is Axis.Y
        assert FluxConfig(phi1=0.2, phi3=0.2).coupling_axis() is None


class TestCollective:
    def test_jz_kills_01(self):
        jz = collective_op(Axis.Z, 2).matrix
        assert np.abs(jz @ np.array([0, 1, 0, 0])).max() == 0

    def test_jx_spectrum(self):
        np.testing.assert_allclose(np.linalg.eigvalsh(collective_op(Axis.X, 2).matrix), [-2, 0, 0, 2], atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_pauli_commutator(self, n):
        jx, jy, jz = (collective_op(a, n).matrix for a in (Axis.X, Axis.Y, Axis.Z))
        assert np.abs(jx @ jy - jy @ jx - 2j * jz).max() < 1e-14

    def test_effective_eigenvalues(self):
        chi = 0.3
        ev = np.linalg.eigvalsh(effective_hamiltonian(Axis.X, 2, chi).matrix)
        np.testing.assert_allclose(ev, [0, 0, 4 * chi, 4 * chi], atol=1e-14)

    def test_single_device_is_global_phase(self):
        np.testing.assert_allclose(effective_hamiltonian(Axis.Y, 1, 0.2).matrix, 0.2 * np.eye(2))

    def test_square_matches_pair_exponent(self):
        jx = collective_op(Axis.X, 2).matrix
        np.testing.assert_allclose(jx @ jx, 2 * (np.eye(4) + np.kron(SX, SX)), atol=1e-14)
        jy = collective_op(Axis.Y, 2).matrix
        np.testing.assert_allclose(jy @ jy, 2 * (np.eye(4) + np.kron(SY, SY)), atol=1e-14)

    def test_effective_params(self):
        cfg = FluxConfig(g=0.05, e_j=2.0, omega=3.0, omega_c=2.5)
        p = EffectiveParams.from_config(cfg)
        assert (p.beta, p.delta) == pytest.approx((0.1, 0.5))
        assert p.chi == pytest.approx(0.02)
        assert p.rwa_ratio(2.5) == pytest.approx(0.2)

    def test_phase_sign_constant(self):
        assert EFFECTIVE_PHASE_SIGN == -1
        u = geometric_phase_unitary(Axis.Z, 1, 0.5, 2.0).matrix
        np.testing.assert_allclose(u, np.exp(-1j) * np.eye(2), atol=1e-15)

    def test_zero_devices(self):
        with pytest.raises(ValueError):
            collective_op(Axis.X, 0)
