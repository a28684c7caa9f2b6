"""Hamiltonians for charge devices coupled to one cavity mode.

Energies are angular-frequency quantities times ``hbar``; every config carries
``hbar`` explicitly and the tests use ``hbar = 1``.

On the two retained charge states the box-phase operators are represented as
``cos(phi) -> sigma_x / 2`` and ``sin(phi) -> sigma_y / 2``. The first is what
makes the cavity-coupled Hamiltonian reduce to the bare device Hamiltonian at
zero coupling; the second is what turns the multi-device first-order
Hamiltonian into its rotating-wave form term by term.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .qcore import (
    CAVITY,
    SX,
    SY,
    SZ,
    OperatorMatrix,
    SystemLayout,
    annihilation,
    embed,
    expm_hermitian,
)

ANGLE_TOL = 1e-9

# Device factor of the closed-loop propagator of the collective coupling is
# exp(i * EFFECTIVE_PHASE_SIGN * chi * t * J^2); fixed by fine-step integration.
EFFECTIVE_PHASE_SIGN = -1


class Axis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


_PAULI_FOR_AXIS = {Axis.X: SX, Axis.Y: SY, Axis.Z: SZ}


def _wrap(x: float, period: float) -> float:
    r = np.mod(x, period)
    return min(r, period - r)


def _is_multiple_of_pi(x: float) -> bool:
    return _wrap(x, np.pi) < ANGLE_TOL


def _same_mod_2pi(a: float, b: float) -> bool:
    return _wrap(a - b, 2 * np.pi) < ANGLE_TOL


@dataclass(frozen=True)
class FluxConfig:
    """Control knobs of one device.

    ``phi1``, ``phi2``, ``phi3`` are the reduced fluxes ``pi * Phi_k / phi_0``;
    ``omega`` drives ``phi2(t) = omega * t`` in the multi-device builders.
    """

    phi1: float = 0.0
    phi2: float = 0.0
    phi3: float = 0.0
    omega: float = 0.0
    g: float = 0.0
    e_j: float = 1.0
    e_c: float = 1.0
    nbar: float = 0.5
    omega_c: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.nbar <= 1.0:
            raise ValueError(f"nbar must lie in [0, 1], got {self.nbar}")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")

    @property
    def e_ce(self) -> float:
        return 2.0 * self.e_c * (1.0 - 2.0 * self.nbar)

    @property
    def e_phi(self) -> float:
        return 2.0 * self.e_j * np.cos(self.phi2)

    @property
    def at_degeneracy(self) -> bool:
        return abs(self.e_ce) < 1e-12

    def coupling_axis(self) -> Axis | None:
        """Which collective Pauli the cavity couples to for this flux setting."""
        if _is_multiple_of_pi(self.phi1) and _same_mod_2pi(self.phi1, self.phi3):
            return Axis.X
        if _is_multiple_of_pi(self.phi3) and _same_mod_2pi(self.phi3, self.phi1 - np.pi):
            return Axis.Y
        return None


@dataclass(frozen=True)
class EffectiveParams:
    beta: float
    delta: float

    @classmethod
    def from_config(cls, cfg: FluxConfig) -> "EffectiveParams":
        return cls(beta=cfg.g * cfg.e_j / cfg.hbar, delta=cfg.omega - cfg.omega_c)

    @property
    def chi(self) -> float:
        return self.beta**2 / self.delta

    def rwa_ratio(self, omega_c: float) -> float:
        """``delta / omega_c``; the rotating-wave form wants this small and positive."""
        return self.delta / omega_c


def device_labels(n: int) -> list[str]:
    return [f"d{k}" for k in range(n)]


def _single(mat: np.ndarray, label: str = "d0") -> OperatorMatrix:
    return OperatorMatrix(mat, SystemLayout(((label, 2),)), True)


def device_hamiltonian(cfg: FluxConfig) -> OperatorMatrix:
    """``-E_ce sigma_z - E_Phi sigma_x`` for one device."""
    return _single(-cfg.e_ce * SZ - cfg.e_phi * SX)


def cavity_cos_operator(phi2: float, g: float, n_max: int) -> OperatorMatrix:
    """``cos(phi2 + g (a + a^dag))`` on the truncated Fock space, by diagonalization."""
    a = annihilation(n_max)
    x = a + a.conj().T
    evals, evecs = np.linalg.eigh(x)
    mat = (evecs * np.cos(phi2 + g * evals)) @ evecs.conj().T
    return OperatorMatrix(mat, SystemLayout(((CAVITY, n_max + 1),)), True)


def _device_cavity_layout(n_max: int, n_devices: int = 1) -> SystemLayout:
    return SystemLayout.devices(device_labels(n_devices), n_max)


def device_cavity_exact(cfg: FluxConfig, n_max: int) -> OperatorMatrix:
    """Device in the cavity with the full cosine of the cavity-shifted phase."""
    if abs(cfg.phi1) > ANGLE_TOL or abs(cfg.phi3) > ANGLE_TOL:
        raise ValueError("device_cavity_exact is defined for phi1 = phi3 = 0 only")
    cos_theta = cavity_cos_operator(cfg.phi2, cfg.g, n_max).matrix
    eye = np.eye(n_max + 1)
    mat = -cfg.e_ce * np.kron(SZ, eye) - 2.0 * cfg.e_j * np.kron(SX, cos_theta)
    return OperatorMatrix(mat, _device_cavity_layout(n_max), True)


def lambdicke_hamiltonian(cfg: FluxConfig, n_max: int) -> OperatorMatrix:
    """First order in ``g``: ``H_s + 2 g E_J sin(phi2) sigma_x (a + a^dag)``."""
    a = annihilation(n_max)
    x = a + a.conj().T
    h_s = -cfg.e_ce * SZ - cfg.e_phi * SX
    mat = np.kron(h_s, np.eye(n_max + 1)) + 2.0 * cfg.g * cfg.e_j * np.sin(cfg.phi2) * np.kron(SX, x)
    return OperatorMatrix(mat, _device_cavity_layout(n_max), True)


def _check_common(cfgs: Sequence[FluxConfig]) -> None:
    if not cfgs:
        raise ValueError("need at least one device")
    ref = cfgs[0]
    for c in cfgs[1:]:
        if not (
            np.isclose(c.e_j, ref.e_j) and np.isclose(c.g, ref.g) and np.isclose(c.omega, ref.omega)
        ):
            raise ValueError("all devices must share e_j, g and omega")
        if not (np.isclose(c.hbar, ref.hbar) and np.isclose(c.omega_c, ref.omega_c)):
            raise ValueError("all devices must share hbar and omega_c")


def multidevice_lab_hamiltonian(
    cfgs: Sequence[FluxConfig], t: float, n_max: int, interaction_picture: bool = False
) -> OperatorMatrix:
    """First-order-in-``g`` coupling of several devices at their degeneracy points.

    Each device contributes its own ``phi1``/``phi3`` terms with the common
    drive ``phi2 = omega * t``. With ``interaction_picture`` the cavity
    operators are rotated by the free cavity evolution at ``omega_c``, which
    is exactly the lab-frame dynamics seen from the frame of the bare mode;
    no terms are dropped.
    """
    _check_common(cfgs)
    if any(not c.at_degeneracy for c in cfgs):
        warnings.warn("devices off their degeneracy point: the sigma_z term is not modelled here")
    ref = cfgs[0]
    n = len(cfgs)
    layout = _device_cavity_layout(n_max, n)
    a = annihilation(n_max)
    if interaction_picture:
        a = a * np.exp(-1j * ref.omega_c * t)
    x = a + a.conj().T
    eye_c = np.eye(n_max + 1)
    phi2 = ref.omega * t
    c2, s2, g = np.cos(phi2), np.sin(phi2), ref.g
    mat = np.zeros((layout.total_dim,) * 2, dtype=complex)
    for label, c in zip(device_labels(n), cfgs):
        c1, s1 = np.cos(c.phi1), np.sin(c.phi1)
        c3, s3 = np.cos(c.phi3), np.sin(c.phi3)
        cav_cos = (c1 + c3) * (c2 * eye_c + g * s2 * x) + g * (s1 + s3) * c2 * x
        cav_sin = (c1 - c3) * (s2 * eye_c + g * c2 * x) + g * (s1 - s3) * s2 * x
        local = np.kron(SX / 2, cav_cos) + np.kron(SY / 2, cav_sin)
        mat += embed(-2.0 * ref.e_j * local, layout, [label, CAVITY]).matrix
    return OperatorMatrix(mat, layout, True)


def rwa_hamiltonian(
    cfgs: Sequence[FluxConfig], t: float, params: EffectiveParams, n_max: int
) -> OperatorMatrix:
    """Interaction-picture coupling after the rotating-wave approximation.

    Only terms oscillating at the detuning survive. Each device must be in an
    X- or Y-type flux configuration.
    """
    _check_common(cfgs)
    if params.delta <= 0:
        raise ValueError("the rotating-wave form needs a positive detuning")
    for k, c in enumerate(cfgs):
        if c.coupling_axis() is None:
            raise ValueError(f"device {k} has no X/Y coupling axis for phi1={c.phi1}, phi3={c.phi3}")
    ref = cfgs[0]
    n = len(cfgs)
    layout = _device_cavity_layout(n_max, n)
    a = annihilation(n_max)
    ad = a.conj().T
    rot = np.exp(1j * params.delta * t)
    quad_p = 1j * (a * rot - ad * np.conj(rot))
    quad_x = a * rot + ad * np.conj(rot)
    mat = np.zeros((layout.total_dim,) * 2, dtype=complex)
    for label, c in zip(device_labels(n), cfgs):
        c1, s1 = np.cos(c.phi1), np.sin(c.phi1)
        c3, s3 = np.cos(c.phi3), np.sin(c.phi3)
        on_x = (c1 + c3) * quad_p - (s1 + s3) * quad_x
        on_y = (c1 - c3) * quad_x - (s1 - s3) * quad_p
        local = np.kron(SX, on_x) - np.kron(SY, on_y)
        mat += embed(0.5 * ref.g * ref.e_j * local, layout, [label, CAVITY]).matrix
    return OperatorMatrix(mat, layout, True)


def collective_op(axis: Axis | str, n_devices: int) -> OperatorMatrix:
    """``J_axis = sum_j sigma_j^axis`` (Pauli normalization, not spin-1/2)."""
    axis = Axis(axis)
    if n_devices < 1:
        raise ValueError("n_devices must be >= 1")
    layout = SystemLayout.devices(device_labels(n_devices))
    total = sum(embed(_PAULI_FOR_AXIS[axis], layout, [label]).matrix for label in layout.labels)
    return OperatorMatrix(total, layout, True)


def collective_coupling_hamiltonian(
    axis: Axis | str, n_devices: int, beta: float, delta: float, t: float, n_max: int, hbar: float = 1.0
) -> OperatorMatrix:
    """``i hbar beta (a^dag e^{-i delta t} - a e^{i delta t}) J_axis`` on devices x cavity."""
    j = collective_op(axis, n_devices).matrix
    a = annihilation(n_max)
    rot = np.exp(-1j * delta * t)
    cav = 1j * hbar * beta * (a.conj().T * rot - a * np.conj(rot))
    layout = _device_cavity_layout(n_max, n_devices)
    return OperatorMatrix(np.kron(j, cav), layout, True)


def effective_hamiltonian(axis: Axis | str, n_devices: int, chi: float, hbar: float = 1.0) -> OperatorMatrix:
    """``hbar chi J_axis^2`` on the devices alone."""
    j = collective_op(axis, n_devices)
    return OperatorMatrix(hbar * chi * (j.matrix @ j.matrix), j.layout, True)


def geometric_phase_unitary(axis: Axis | str, n_devices: int, chi: float, t: float) -> OperatorMatrix:
    """Device factor ``exp(i s chi t J^2)`` left after a closed cavity loop, ``s = EFFECTIVE_PHASE_SIGN``."""
    j = collective_op(axis, n_devices)
    return expm_hermitian(OperatorMatrix(j.matrix @ j.matrix, j.layout, True), -EFFECTIVE_PHASE_SIGN * chi * t)


__all__ = [
    "Axis",
    "EFFECTIVE_PHASE_SIGN",
    "EffectiveParams",
    "FluxConfig",
    "cavity_cos_operator",
    "collective_coupling_hamiltonian",
    "collective_op",
    "device_cavity_exact",
    "device_hamiltonian",
    "device_labels",
    "effective_hamiltonian",
    "geometric_phase_unitary",
    "lambdicke_hamiltonian",
    "multidevice_lab_hamiltonian",
    "rwa_hamiltonian",
]
