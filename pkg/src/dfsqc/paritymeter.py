"""Switching-current readout of two parallel devices.

The large junction switches when ``|I_b + <I>|`` exceeds its critical current,
with ``I = I1 sigma_x^1 + I2 sigma_x^2``. A forward probe at the armed bias
fires only on ``|++>``; reversing flux and bias fires only on ``|-->``; when
neither fires the pair is in the odd subspace. The projectors of the
three-outcome meter are derived from that threshold logic, not hard-coded.

``ideal_parity_channel`` merges the two even outcomes into one rank-2
projector, which is the coherence-preserving measurement the CNOT protocol
relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Sequence

import numpy as np

from .qcore import (
    HADAMARD,
    KET0,
    KET1,
    KET_MINUS,
    KET_PLUS,
    P_FLOOR,
    SX,
    OperatorMatrix,
    Outcome,
    StateVector,
    SystemLayout,
    embed,
    enumerate_outcomes,
    measure,
)


class Basis(str, Enum):
    PLUSMINUS = "PLUSMINUS"
    ZEROONE = "ZEROONE"


class Kind(str, Enum):
    EVEN_PP = "EVEN_PP"
    EVEN_MM = "EVEN_MM"
    ODD = "ODD"
    EVEN = "EVEN"


class Probe(str, Enum):
    V1 = "V1"
    V2 = "V2"


@dataclass(frozen=True)
class MeterConfig:
    """Currents in amperes (any consistent unit works)."""

    i1: float = 1.0
    i2: float = 1.0
    ic: float = 10.0
    ib: float | None = None
    basis: Basis = Basis.ZEROONE

    def __post_init__(self):
        if min(self.i1, self.i2, self.ic) <= 0:
            raise ValueError("i1, i2 and ic must be positive")
        if self.ib is None:
            object.__setattr__(self, "ib", self.armed_bias)
        object.__setattr__(self, "basis", Basis(self.basis))

    @property
    def armed_bias(self) -> float:
        return self.ic - 0.5 * (self.i1 + self.i2)

    @property
    def armed(self) -> bool:
        return abs(self.ib - self.armed_bias) <= 1e-12 * abs(self.armed_bias)

    @property
    def disarmed(self) -> bool:
        return self.ib + self.i1 + self.i2 < self.ic

    @property
    def selective(self) -> bool:
        """Whether the armed probes single out ``|++>`` and ``|-->`` among the sigma_x product states."""
        lo, hi = sorted((self.i1, self.i2))
        return hi < 3 * lo and 1.5 * (self.i1 + self.i2) < 2 * self.ic

    @classmethod
    def disarmed_config(cls, i1=1.0, i2=1.0, ic=10.0, basis=Basis.ZEROONE) -> "MeterConfig":
        return cls(i1, i2, ic, ib=0.1 * (ic - i1 - i2), basis=basis)


@dataclass(frozen=True)
class ParityOutcome:
    kind: Kind | None
    voltage_step: Probe | None

    @property
    def even(self) -> bool | None:
        if self.kind is None:
            return None
        return self.kind is not Kind.ODD

    @property
    def bit(self) -> int | None:
        """Parity as a 0/1 label, 0 = odd, 1 = even."""
        return None if self.kind is None else int(self.even)


PAIR_LAYOUT = SystemLayout.devices(["m1", "m2"])


def current_operator(cfg: MeterConfig) -> OperatorMatrix:
    """``I1 sigma_x (x) 1 + I2 1 (x) sigma_x``."""
    mat = cfg.i1 * np.kron(SX, np.eye(2)) + cfg.i2 * np.kron(np.eye(2), SX)
    return OperatorMatrix(mat, PAIR_LAYOUT, True)


def junction_current(state, cfg: MeterConfig, reverse: bool = False) -> float:
    """``I_0`` through the large junction; ``reverse`` flips the bias against the device current."""
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    i_d = float(np.vdot(amps, current_operator(cfg).matrix @ amps).real)
    return abs(-cfg.ib + i_d) if reverse else abs(cfg.ib + i_d)


def switching_decision(state, cfg: MeterConfig, reverse: bool = False) -> tuple[float, bool]:
    """Junction current and whether it exceeds ``ic`` (a tie does not switch)."""
    i0 = junction_current(state, cfg, reverse)
    return i0, i0 > cfg.ic


_PM = {"+": KET_PLUS, "-": KET_MINUS}


def _sigma_x_products():
    for s1, s2 in product("+-", repeat=2):
        yield s1 + s2, np.kron(_PM[s1], _PM[s2])


def _threshold_projectors(cfg: MeterConfig) -> dict[Kind, np.ndarray]:
    """Pair projectors in the +/- basis, read off from which probe fires on each eigenstate."""
    if not cfg.selective:
        raise ValueError("meter currents do not separate |++>, |--> from the odd states")
    fwd = np.zeros((4, 4), dtype=complex)
    rev = np.zeros((4, 4), dtype=complex)
    odd = np.zeros((4, 4), dtype=complex)
    for _, ket in _sigma_x_products():
        proj = np.outer(ket, ket.conj())
        if switching_decision(ket, cfg)[1]:
            fwd += proj
        elif switching_decision(ket, cfg, reverse=True)[1]:
            rev += proj
        else:
            odd += proj
    return {Kind.EVEN_PP: fwd, Kind.EVEN_MM: rev, Kind.ODD: odd}


def _rotate(proj: np.ndarray, basis: Basis) -> np.ndarray:
    if Basis(basis) is Basis.PLUSMINUS:
        return proj
    hh = np.kron(HADAMARD, HADAMARD)
    return hh @ proj @ hh


def meter_projectors(cfg: MeterConfig) -> dict[Kind, OperatorMatrix]:
    """``P1' = |++><++|``, ``P2' = |--><--|``, ``P3'`` odd, in the config's basis."""
    return {
        kind: OperatorMatrix(_rotate(p, cfg.basis), PAIR_LAYOUT, True)
        for kind, p in _threshold_projectors(cfg).items()
    }


def parity_projectors(basis: Basis = Basis.ZEROONE) -> dict[Kind, OperatorMatrix]:
    """Rank-2 even/odd projectors."""
    even = sum(np.outer(k, k.conj()) for k in (np.kron(KET_PLUS, KET_PLUS), np.kron(KET_MINUS, KET_MINUS)))
    odd = np.eye(4) - even
    return {
        Kind.EVEN: OperatorMatrix(_rotate(even, basis), PAIR_LAYOUT, True),
        Kind.ODD: OperatorMatrix(_rotate(odd, basis), PAIR_LAYOUT, True),
    }


_PROBE = {Kind.EVEN_PP: Probe.V1, Kind.EVEN_MM: Probe.V2, Kind.ODD: None, Kind.EVEN: None}


def _lifted(projs: dict, state: StateVector, pair: Sequence[str]):
    kinds = list(projs)
    return kinds, [embed(projs[k], state.layout, pair) for k in kinds]


def _check_armed(cfg: MeterConfig) -> bool:
    if cfg.armed:
        return True
    if cfg.disarmed:
        return False
    raise ValueError(f"bias {cfg.ib} neither arms (ib = {cfg.armed_bias}) nor disarms the meter")


def three_outcome_branches(
    state: StateVector, pair: Sequence[str], cfg: MeterConfig, p_floor: float = P_FLOOR
) -> list[tuple[ParityOutcome, StateVector, float]]:
    """Every outcome of the sequential V1/V2 readout with its post-state and probability."""
    if not _check_armed(cfg):
        return [(ParityOutcome(None, None), state, 1.0)]
    kinds, projs = _lifted(meter_projectors(cfg), state, pair)
    return [
        (ParityOutcome(kinds[o.index], _PROBE[kinds[o.index]]), o.state, o.probability)
        for o in enumerate_outcomes(state, projs, p_floor)
    ]


def three_outcome_meter(
    state: StateVector, pair: Sequence[str], cfg: MeterConfig, rng: np.random.Generator
) -> tuple[ParityOutcome, StateVector, float]:
    """Sample the sequential readout.

    The forward probe is a two-outcome measurement ``{P1', 1 - P1'}``; only if
    it stays silent is the reversed probe ``{P2', 1 - P2'}`` applied. The
    product of the two stages is the three-outcome measurement. A disarmed
    meter returns the state untouched with no outcome.
    """
    if not _check_armed(cfg):
        return ParityOutcome(None, None), state, 1.0
    projs = meter_projectors(cfg)

    def stage(p):
        return [embed(p, state.layout, pair), embed(np.eye(4) - p, state.layout, pair)]

    first = measure(state, stage(projs[Kind.EVEN_PP].matrix), rng)
    if first.index == 0:
        return ParityOutcome(Kind.EVEN_PP, Probe.V1), first.state, first.probability
    second = measure(first.state, stage(projs[Kind.EVEN_MM].matrix), rng)
    prob = first.probability * second.probability
    if second.index == 0:
        return ParityOutcome(Kind.EVEN_MM, Probe.V2), second.state, prob
    return ParityOutcome(Kind.ODD, None), second.state, prob


def ideal_parity_branches(
    state: StateVector, pair: Sequence[str], basis: Basis = Basis.ZEROONE, p_floor: float = P_FLOOR
) -> list[tuple[ParityOutcome, StateVector, float]]:
    kinds, projs = _lifted(parity_projectors(basis), state, pair)
    return [
        (ParityOutcome(kinds[o.index], None), o.state, o.probability)
        for o in enumerate_outcomes(state, projs, p_floor)
    ]


def ideal_parity_channel(
    state: StateVector, pair: Sequence[str], basis: Basis = Basis.ZEROONE, rng: np.random.Generator | None = None
) -> tuple[ParityOutcome, StateVector, float]:
    if rng is None:
        raise ValueError("sampling needs an explicit generator; use ideal_parity_branches to enumerate")
    kinds, projs = _lifted(parity_projectors(basis), state, pair)
    o = measure(state, projs, rng)
    return ParityOutcome(kinds[o.index], None), o.state, o.probability


def single_device_projectors(basis: Basis = Basis.ZEROONE) -> list[np.ndarray]:
    kets = (KET0, KET1) if Basis(basis) is Basis.ZEROONE else (KET_PLUS, KET_MINUS)
    return [np.outer(k, k.conj()) for k in kets]


def single_device_branches(
    state: StateVector, device: str, basis: Basis = Basis.ZEROONE, p_floor: float = P_FLOOR
) -> list[Outcome]:
    """Outcome index 0 is ``|0>`` (or ``|+>``), 1 is ``|1>`` (or ``|->``)."""
    projs = [embed(p, state.layout, [device]) for p in single_device_projectors(basis)]
    return enumerate_outcomes(state, projs, p_floor)


def single_device_measure(
    state: StateVector, device: str, basis: Basis = Basis.ZEROONE, rng: np.random.Generator | None = None
) -> Outcome:
    if rng is None:
        raise ValueError("sampling needs an explicit generator; use single_device_branches to enumerate")
    projs = [embed(p, state.layout, [device]) for p in single_device_projectors(basis)]
    return measure(state, projs, rng)
