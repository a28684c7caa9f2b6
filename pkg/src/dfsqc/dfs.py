"""Pair-bit encoding ``|0_L> = |01>, |1_L> = |10>`` and its logical gates.

Both code words have zero total ``sigma_z``, so collective dephasing acts on
the code trivially. Logical operators are 4x4 physical matrices on the pair;
they are compared with their 2x2 targets through :func:`restrict`.

Logical Paulis follow ``X = sigma_x sigma_x``, ``Z = sigma_z (x) 1`` and
``Y = i X Z``. In that convention ``sigma_y (x) sigma_x`` restricts to ``+Y``
while ``sigma_x (x) sigma_y`` restricts to ``-Y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonians import Axis, collective_op
from .qcore import (
    HADAMARD,
    I2,
    KET0,
    KET1,
    SX,
    SY,
    SZ,
    OperatorMatrix,
    StateVector,
    SystemLayout,
    expm_hermitian,
)

INSIDE_TOL = 1e-9


@dataclass(frozen=True)
class LogicalQubit:
    device_a: str = "a"
    device_b: str = "b"

    def __post_init__(self):
        if self.device_a == self.device_b:
            raise ValueError("a logical qubit needs two distinct devices")

    @property
    def labels(self) -> tuple[str, str]:
        return (self.device_a, self.device_b)

    @property
    def layout(self) -> SystemLayout:
        return SystemLayout.devices(self.labels)


CODE_BASIS = np.array([np.kron(KET0, KET1), np.kron(KET1, KET0)]).T  # columns |0_L>, |1_L>


@dataclass(frozen=True)
class CodeSubspace:
    qubit: LogicalQubit

    @property
    def zero(self) -> StateVector:
        return StateVector(self.qubit.layout, CODE_BASIS[:, 0])

    @property
    def one(self) -> StateVector:
        return StateVector(self.qubit.layout, CODE_BASIS[:, 1])

    @property
    def projector(self) -> OperatorMatrix:
        return OperatorMatrix(CODE_BASIS @ CODE_BASIS.conj().T, self.qubit.layout, True)


def encode(alpha: complex, zeta: complex, qubit: LogicalQubit = LogicalQubit()) -> StateVector:
    """``alpha |01> + zeta |10>`` on the pair."""
    if abs(abs(alpha) ** 2 + abs(zeta) ** 2 - 1.0) > 1e-12:
        raise ValueError("logical amplitudes must be normalized")
    return StateVector(qubit.layout, CODE_BASIS @ np.array([alpha, zeta], dtype=complex))


def project_code(state: StateVector | np.ndarray, qubit: LogicalQubit = LogicalQubit()):
    """Weight inside the code and, if essentially all of it is there, the logical amplitudes."""
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    logical = CODE_BASIS.conj().T @ amps
    weight = float(np.vdot(logical, logical).real)
    if weight > 1.0 - INSIDE_TOL:
        return weight, logical / np.sqrt(weight)
    return weight, None


def restrict(op) -> np.ndarray:
    """2x2 block of a pair operator on the code basis."""
    mat = op.matrix if isinstance(op, OperatorMatrix) else np.asarray(op)
    return CODE_BASIS.conj().T @ mat @ CODE_BASIS


def leakage(op) -> float:
    """Largest weight pushed out of the code by ``op`` over code inputs."""
    mat = op.matrix if isinstance(op, OperatorMatrix) else np.asarray(op)
    out = (np.eye(4) - CODE_BASIS @ CODE_BASIS.conj().T) @ mat @ CODE_BASIS
    return float(np.linalg.norm(out, 2) ** 2)


_PHYSICAL_PAULI = {
    Axis.X: np.kron(SX, SX),
    Axis.Y: np.kron(SY, SX),
    Axis.Z: np.kron(SZ, I2),
}


def logical_pauli(which: Axis | str, qubit: LogicalQubit = LogicalQubit()) -> OperatorMatrix:
    return OperatorMatrix(_PHYSICAL_PAULI[Axis(which)], qubit.layout, True)


def collective_dephasing(phi: float, n_devices: int) -> OperatorMatrix:
    """``exp(-i phi J_z / 2)``: a common phase ``phi`` per excited device."""
    jz = collective_op(Axis.Z, n_devices)
    return expm_hermitian(jz, phi / 2.0)


def ux_gate(gamma: float, qubit: LogicalQubit = LogicalQubit()) -> OperatorMatrix:
    """``exp(-2 i gamma (1 + sigma_x sigma_x))``, the pair propagator of ``hbar chi J_x^2`` at ``gamma = chi t``."""
    gen = OperatorMatrix(np.eye(4) + np.kron(SX, SX), qubit.layout, True)
    return expm_hermitian(gen, 2.0 * gamma)


def uy_gate(gamma: float, qubit: LogicalQubit = LogicalQubit()) -> OperatorMatrix:
    """``exp(-2 i gamma sigma_y sigma_x)``; acts as ``exp(-2 i gamma Y)`` on the code.

    The Y-type flux setting sits on ``device_a`` and the X-type on
    ``device_b``. Swapping them gives ``exp(+2 i gamma Y)``.
    """
    gen = OperatorMatrix(np.kron(SY, SX), qubit.layout, True)
    return expm_hermitian(gen, 2.0 * gamma)


_GATE = {Axis.X: ux_gate, Axis.Y: uy_gate}


def rotation(axis: Axis | str, angle: float) -> np.ndarray:
    """2x2 ``exp(-i angle sigma / 2)``."""
    sigma = {Axis.X: SX, Axis.Y: SY, Axis.Z: SZ}[Axis(axis)]
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * sigma


def _wrap_angle(angle: float) -> float:
    # R(theta + 4 pi) = R(theta); keep theta in (-2 pi, 2 pi]
    a = np.mod(angle, 4 * np.pi)
    return a - 4 * np.pi if a > 2 * np.pi else a


def _zyz_angles(w: np.ndarray) -> tuple[float, float, float]:
    """Angles with ``w ~ R_z(a) R_y(b) R_z(c)`` up to global phase."""
    w = w / np.sqrt(np.linalg.det(w))
    b = 2 * np.arctan2(abs(w[1, 0]), abs(w[0, 0]))
    if abs(w[0, 0]) < 1e-12:
        plus, minus = 0.0, 2 * np.angle(w[1, 0])
    elif abs(w[1, 0]) < 1e-12:
        plus, minus = 2 * np.angle(w[1, 1]), 0.0
    else:
        plus = 2 * np.angle(w[1, 1])
        minus = 2 * np.angle(w[1, 0])
    return (plus + minus) / 2, b, (plus - minus) / 2


def infidelity_2x2(u: np.ndarray, v: np.ndarray) -> float:
    return float(1.0 - abs(np.trace(u.conj().T @ v)) / 2)


def synthesize_logical(target: np.ndarray, tol: float = 1e-12) -> list[tuple[Axis, float]]:
    """X-Y-X Euler sequence of geometric rotations realizing ``target`` on the code.

    Returns ``(axis, gamma)`` pairs in application order. Each pair denotes the
    logical rotation ``exp(-2 i gamma sigma_axis)``, i.e. ``ux_gate`` or
    ``uy_gate`` with that ``gamma``. Global phase of ``target`` is ignored.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2) or np.abs(target.conj().T @ target - I2).max() > 1e-10:
        raise ValueError("target must be a 2x2 unitary")
    # Hadamard swaps X <-> Z and flips Y, turning X-Y-X into Z-Y-Z
    a, b, c = _zyz_angles(HADAMARD @ target @ HADAMARD)
    b = -b
    # U = R_x(a) R_y(b) R_x(c): R_x(c) acts first
    seq = [(Axis.X, _wrap_angle(c)), (Axis.Y, _wrap_angle(b)), (Axis.X, _wrap_angle(a))]
    if abs(seq[1][1]) < tol:
        seq = [(Axis.X, _wrap_angle(a + c))]
    seq = [(axis, angle / 4.0) for axis, angle in seq if abs(angle) > tol]
    return seq


def compose(sequence: Sequence[tuple[Axis, float]], qubit: LogicalQubit = LogicalQubit()) -> OperatorMatrix:
    """Physical 4x4 operator of a rotation sequence, first element applied first."""
    u = OperatorMatrix.identity(qubit.layout)
    for axis, gamma in sequence:
        u = _GATE[Axis(axis)](gamma, qubit) @ u
    return u


def logical_rotation_matrix(sequence: Sequence[tuple[Axis, float]]) -> np.ndarray:
    u = I2.astype(complex)
    for axis, gamma in sequence:
        u = rotation(axis, 4 * gamma) @ u
    return u


LOGICAL_TARGETS = {
    "I": I2,
    "X": SX,
    "Y": SY,
    "Z": SZ,
    "H": HADAMARD,
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
}

# Z-type gates have no direct coupling; they come out of the Euler form.
PRESETS: dict[str, list[tuple[Axis, float]]] = {
    name: synthesize_logical(mat) for name, mat in LOGICAL_TARGETS.items()
}


def logical_gate(name: str, qubit: LogicalQubit = LogicalQubit()) -> OperatorMatrix:
    """Named preset (``I X Y Z H S T``) built from geometric rotations only."""
    try:
        seq = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return compose(seq, qubit)
