"""Measurement-based CNOT between two pair-bit qubits through one auxiliary device.

Device order is ``c1 c2 A t1 t2``. The circuit:

0. ``psi_C (x) |0>_A (x) psi_T``
1. physical H on A, parity of ``(A, c1)``
2. H on A and logical H on T, parity of ``(A, t1)``, H on A and logical H on T
3. A measured in ``{|0>, |1>}``
4. corrections from :data:`CORRECTION_TABLE`

Snapshots are kept after step 1 (point 1), before the A readout (point 2) and
after it (point 3). Parity labels use 1 for even and 0 for odd.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Literal, Sequence

import numpy as np

from .dfs import CODE_BASIS, LogicalQubit, logical_gate, logical_pauli
from .paritymeter import (
    Basis,
    Kind,
    MeterConfig,
    ideal_parity_branches,
    ideal_parity_channel,
    single_device_branches,
    single_device_measure,
    three_outcome_branches,
    three_outcome_meter,
)
from .qcore import HADAMARD, KET0, KET1, KET_MINUS, KET_PLUS, P_FLOOR, StateVector, SystemLayout, apply

LABELS = ("c1", "c2", "A", "t1", "t2")
LAYOUT = SystemLayout.devices(LABELS)
CONTROL = LogicalQubit("c1", "c2")
TARGET = LogicalQubit("t1", "t2")
ANCILLA = "A"

MeterMode = Literal["ideal", "physical"]
Execution = Literal["enumerate", "sampled"]

# (P1, P2, M) -> (gate on C, gate on T); parity 1 = even, 0 = odd
CORRECTION_TABLE: dict[tuple[int, int, int], tuple[str, str]] = {
    (1, 1, 0): ("I", "I"),
    (1, 1, 1): ("I", "X"),
    (1, 0, 0): ("Z", "I"),
    (1, 0, 1): ("Z", "X"),
    (0, 1, 0): ("I", "X"),
    (0, 1, 1): ("I", "I"),
    (0, 0, 0): ("Z", "X"),
    (0, 0, 1): ("Z", "I"),
}

DEFAULT_METER = MeterConfig()


def correction_lookup(p1: int, p2: int, m: int) -> tuple[str, str]:
    try:
        return CORRECTION_TABLE[(int(p1), int(p2), int(m))]
    except KeyError:
        raise ValueError(f"no correction for outcomes {(p1, p2, m)}") from None


@dataclass(frozen=True)
class Inputs:
    alpha: complex
    zeta: complex
    xi: complex
    tau: complex

    def __post_init__(self):
        for a, b in ((self.alpha, self.zeta), (self.xi, self.tau)):
            if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-12:
                raise ValueError("input amplitudes must be normalized")

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Inputs":
        v = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return cls(v[0, 0], v[0, 1], v[1, 0], v[1, 1])

    @property
    def control(self) -> np.ndarray:
        return np.array([self.alpha, self.zeta], dtype=complex)

    @property
    def target(self) -> np.ndarray:
        return np.array([self.xi, self.tau], dtype=complex)


BASIS_INPUTS = {
    "basis-00": Inputs(1, 0, 1, 0),
    "basis-01": Inputs(1, 0, 0, 1),
    "basis-10": Inputs(0, 1, 1, 0),
    "basis-11": Inputs(0, 1, 0, 1),
}


def _pair(logical: np.ndarray) -> np.ndarray:
    return CODE_BASIS @ logical


def _ancilla(level: int) -> np.ndarray:
    return KET1 if level else KET0


def ideal_cnot_logical(inputs: Inputs) -> np.ndarray:
    """Four logical amplitudes ``|C T>`` of the CNOT image."""
    a, z = inputs.control
    x, t = inputs.target
    return np.array([a * x, a * t, z * t, z * x], dtype=complex)


def embed_logical(ct: np.ndarray, a_level: int) -> np.ndarray:
    """Five-device amplitudes for logical ``|C T>`` amplitudes with A in ``|a_level>``."""
    out = np.zeros(32, dtype=complex)
    for c in range(2):
        for t in range(2):
            out += ct[2 * c + t] * np.kron(np.kron(CODE_BASIS[:, c], _ancilla(a_level)), CODE_BASIS[:, t])
    return out


def initial_state(inputs: Inputs) -> StateVector:
    return StateVector(LAYOUT, np.kron(np.kron(_pair(inputs.control), KET0), _pair(inputs.target)))


@dataclass(frozen=True)
class BranchRecord:
    p1: int
    p2: int
    m: int
    probability: float
    correction_c: str
    correction_t: str
    final_state: StateVector
    fidelity: float
    p1_kind: Kind
    p2_kind: Kind
    meter_mode: str
    snapshots: dict[int, StateVector] = field(default_factory=dict, compare=False)

    @property
    def outcomes(self) -> tuple[int, int, int]:
        return (self.p1, self.p2, self.m)


@lru_cache(maxsize=None)
def _logical_h() -> np.ndarray:
    return logical_gate("H", TARGET).matrix


def _rotate(state: StateVector) -> StateVector:
    state = apply(HADAMARD, state, [ANCILLA])
    return apply(_logical_h(), state, TARGET.labels)


def _parity(state, pair, meter_mode, meter, rng, p_floor) -> Iterator[tuple[Kind, int, StateVector, float]]:
    if meter_mode == "ideal":
        if rng is None:
            branches = ideal_parity_branches(state, pair, Basis.ZEROONE, p_floor)
        else:
            branches = [ideal_parity_channel(state, pair, Basis.ZEROONE, rng)]
    elif meter_mode == "physical":
        cfg = MeterConfig(meter.i1, meter.i2, meter.ic, meter.ib, Basis.ZEROONE)
        if not cfg.armed:
            raise ValueError("the CNOT protocol needs an armed meter")
        if rng is None:
            branches = three_outcome_branches(state, pair, cfg, p_floor)
        else:
            branches = [three_outcome_meter(state, pair, cfg, rng)]
    else:
        raise ValueError(f"unknown meter mode {meter_mode!r}")
    for outcome, post, prob in branches:
        yield outcome.kind, outcome.bit, post, prob


def _readout(state, rng, p_floor) -> Iterator[tuple[int, StateVector, float]]:
    if rng is None:
        for o in single_device_branches(state, ANCILLA, Basis.ZEROONE, p_floor):
            yield o.index, o.state, o.probability
    else:
        o = single_device_measure(state, ANCILLA, Basis.ZEROONE, rng)
        yield o.index, o.state, o.probability


def branch_fidelity(final: StateVector, inputs: Inputs, m: int) -> float:
    """``|<CNOT psi (x) m_A | final>|^2``."""
    ideal = embed_logical(ideal_cnot_logical(inputs), m)
    return float(abs(np.vdot(ideal, final.amplitudes)) ** 2)


def run_cnot(
    psi_c: Sequence[complex],
    psi_t: Sequence[complex],
    meter_mode: MeterMode = "ideal",
    execution: Execution = "enumerate",
    rng: np.random.Generator | None = None,
    meter: MeterConfig = DEFAULT_METER,
    p_floor: float = P_FLOOR,
) -> list[BranchRecord]:
    """Run the circuit and return one record per measurement path.

    ``enumerate`` expands every outcome with probability above ``p_floor``;
    ``sampled`` follows a single path drawn from ``rng``.
    """
    inputs = Inputs(psi_c[0], psi_c[1], psi_t[0], psi_t[1])
    if execution == "sampled":
        if rng is None:
            raise ValueError("sampled execution needs an explicit generator")
    elif execution == "enumerate":
        rng = None
    else:
        raise ValueError(f"unknown execution {execution!r}")

    point0 = initial_state(inputs)
    records = []
    start = apply(HADAMARD, point0, [ANCILLA])
    for k1, p1, point1, prob1 in _parity(start, [ANCILLA, "c1"], meter_mode, meter, rng, p_floor):
        for k2, p2, post2, prob2 in _parity(_rotate(point1), [ANCILLA, "t1"], meter_mode, meter, rng, p_floor):
            point2 = _rotate(post2)
            for m, point3, prob3 in _readout(point2, rng, p_floor):
                gate_c, gate_t = correction_lookup(p1, p2, m)
                final = point3
                if gate_c != "I":
                    final = apply(logical_pauli(gate_c, CONTROL).matrix, final, CONTROL.labels)
                if gate_t != "I":
                    final = apply(logical_pauli(gate_t, TARGET).matrix, final, TARGET.labels)
                records.append(
                    BranchRecord(
                        p1=p1,
                        p2=p2,
                        m=m,
                        probability=prob1 * prob2 * prob3,
                        correction_c=gate_c,
                        correction_t=gate_t,
                        final_state=final,
                        fidelity=branch_fidelity(final, inputs, m),
                        p1_kind=k1,
                        p2_kind=k2,
                        meter_mode=meter_mode,
                        snapshots={0: point0, 1: point1, 2: point2, 3: point3},
                    )
                )
    return records


def average_fidelity(records: Sequence[BranchRecord]) -> float:
    return float(sum(r.probability * r.fidelity for r in records))


def process_fidelity(meter_mode: MeterMode = "ideal", n_random: int = 20, seed: int = 2024) -> float:
    """Branch-weighted fidelity averaged over the logical basis and random product inputs."""
    rng = np.random.default_rng(seed)
    inputs = list(BASIS_INPUTS.values()) + [Inputs.random(rng) for _ in range(n_random)]
    scores = [average_fidelity(run_cnot(i.control, i.target, meter_mode)) for i in inputs]
    return float(np.mean(scores))


def closed_form_states(inputs: Inputs, p1: int, p2: int, m: int) -> dict[int, np.ndarray]:
    """Unnormalized intermediate states of the ideal circuit written out by hand.

    The ancilla sign ``s`` before the second parity check is ``+`` for the C
    word that agreed with A at the first check and ``-`` for the other one.
    """
    a, z = inputs.control
    x, t = inputs.target
    zero_l, one_l = CODE_BASIS[:, 0], CODE_BASIS[:, 1]
    plus_l, minus_l = (zero_l + one_l) / np.sqrt(2), (zero_l - one_l) / np.sqrt(2)
    psi_t = x * zero_l + t * one_l

    def ket(c_word, a_ket, t_ket):
        return np.kron(np.kron(c_word, a_ket), t_ket)

    # point 1: even ties A to c1, odd anti-ties it
    a_for_0 = _ancilla(0 if p1 else 1)
    a_for_1 = _ancilla(1 if p1 else 0)
    point1 = a * ket(zero_l, a_for_0, psi_t) + z * ket(one_l, a_for_1, psi_t)

    s_alpha = 1 if p1 else -1
    s_zeta = -s_alpha

    def after_second(s):
        if p2:
            return (x + t) * np.kron(KET_PLUS, plus_l) + s * (x - t) * np.kron(KET_MINUS, minus_l)
        return (x - t) * np.kron(KET_PLUS, minus_l) + s * (x + t) * np.kron(KET_MINUS, plus_l)

    def attach(c_word, at):
        # at is ordered (A, T); reorder into (C, A, T)
        return np.kron(c_word, at)

    point2 = 0.5 * (a * attach(zero_l, after_second(s_alpha)) + z * attach(one_l, after_second(s_zeta)))
    proj = np.kron(np.kron(np.eye(4), np.outer(_ancilla(m), _ancilla(m))), np.eye(4))
    point3 = proj @ point2
    return {0: initial_state(inputs).amplitudes, 1: point1, 2: point2, 3: point3}


def _normalized(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def verify_intermediates(branch: BranchRecord, inputs: Inputs) -> dict[int, float]:
    """Overlap modulus of each stored snapshot with its closed form."""
    missing = [p for p in range(4) if p not in branch.snapshots]
    if missing:
        raise ValueError(f"branch has no snapshot for points {missing}")
    expected = closed_form_states(inputs, branch.p1, branch.p2, branch.m)
    return {
        point: float(abs(np.vdot(_normalized(expected[point]), branch.snapshots[point].amplitudes)))
        for point in range(4)
    }


def reduced_ancilla(state: StateVector) -> np.ndarray:
    psi = state.amplitudes.reshape(4, 2, 4)
    return np.einsum("iaj,ibj->ab", psi, psi.conj())


def code_leakage(state: StateVector) -> float:
    """Weight of ``state`` outside the product of the C and T code spaces."""
    psi = state.amplitudes.reshape(4, 2, 4)
    inside = np.einsum("ci,iaj,jt->cat", CODE_BASIS.conj().T, psi, CODE_BASIS.conj())
    return float(1.0 - np.vdot(inside, inside).real)


def decode(state: StateVector) -> tuple[int, np.ndarray]:
    """Split a final state into the A level and the logical ``|C T>`` amplitudes."""
    rho_a = reduced_ancilla(state)
    level = int(np.argmax(np.real(np.diag(rho_a))))
    ct = np.zeros(4, dtype=complex)
    for c in range(2):
        for t in range(2):
            ct[2 * c + t] = np.vdot(
                np.kron(np.kron(CODE_BASIS[:, c], _ancilla(level)), CODE_BASIS[:, t]), state.amplitudes
            )
    return level, ct


__all__ = [
    "BASIS_INPUTS",
    "BranchRecord",
    "CORRECTION_TABLE",
    "Inputs",
    "average_fidelity",
    "closed_form_states",
    "code_leakage",
    "correction_lookup",
    "decode",
    "ideal_cnot_logical",
    "process_fidelity",
    "run_cnot",
    "verify_intermediates",
]
