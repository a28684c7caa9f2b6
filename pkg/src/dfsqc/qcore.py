"""Dense state-vector machinery shared by every other module.

Conventions are fixed once here: the charge basis of a device is ordered
``(|0>, |1>)`` with ``sigma_z |0> = +|0>``, and the cavity Fock basis is
``(|0>, ..., |n_max>)``. Composite spaces are ordered exactly as their
:class:`SystemLayout` lists the subsystems, leftmost factor most significant.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Callable, Iterable, Sequence, Union

import numpy as np

CAVITY = "cav"

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
PROJECTOR_TOL = 1e-10
NORM_TOL = 1e-8
P_FLOOR = 1e-12


@dataclass(frozen=True)
class SystemLayout:
    """Ordered ``(label, dim)`` pairs describing a tensor-product space.

    The subsystem labelled :data:`CAVITY` is the single oscillator mode; every
    other subsystem is a two-level device.
    """

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        subs = tuple((str(label), int(dim)) for label, dim in self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        labels = [label for label, _ in subs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels in {labels}")
        for label, dim in subs:
            if label == CAVITY:
                if dim < 2:
                    raise ValueError("cavity needs at least two Fock levels")
            elif dim != 2:
                raise ValueError(f"device {label!r} must have dim 2, got {dim}")

    @classmethod
    def devices(cls, labels: Iterable[str], n_max: int | None = None) -> "SystemLayout":
        subs = [(label, 2) for label in labels]
        if n_max is not None:
            subs.append((CAVITY, n_max + 1))
        return cls(tuple(subs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    @property
    def has_cavity(self) -> bool:
        return CAVITY in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown subsystem label {label!r}; layout has {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def __add__(self, other: "SystemLayout") -> "SystemLayout":
        taken = set(self.labels)
        subs = list(self.subsystems)
        for label, dim in other.subsystems:
            new = label
            k = 1
            while new in taken:
                k += 1
                new = f"{label}_{k}"
            taken.add(new)
            subs.append((new, dim))
        return SystemLayout(tuple(subs))

    def __len__(self):
        return len(self.subsystems)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StateVector:
    """Normalized ket on a layout. Small norm drift is renormalized away."""

    layout: SystemLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.layout.total_dim:
            raise ValueError(
                f"amplitude vector has length {amps.shape[0]}, layout needs {self.layout.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {norm:.3g})")
        object.__setattr__(self, "amplitudes", _frozen(amps / norm))

    @classmethod
    def basis(cls, layout: SystemLayout, levels: Sequence[int]) -> "StateVector":
        if len(levels) != len(layout):
            raise ValueError("one level per subsystem required")
        amps = np.zeros(layout.total_dim, dtype=complex)
        amps[np.ravel_multi_index(tuple(levels), layout.dims)] = 1.0
        return cls(layout, amps)

    @classmethod
    def normalized(cls, layout: SystemLayout, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(layout, amps / norm)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def overlap(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expectation(self, op: "OperatorMatrix") -> complex:
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(self.layout + other.layout, np.kron(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense square matrix acting on a layout."""

    matrix: np.ndarray
    layout: SystemLayout
    hermitian_hint: bool = False

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.layout.total_dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match layout dim {d}")
        if self.hermitian_hint and _hermitian_error(mat) > HERMITIAN_TOL * max(1.0, np.abs(mat).max()):
            raise ValueError("matrix flagged Hermitian is not Hermitian")
        object.__setattr__(self, "matrix", _frozen(mat))

    @classmethod
    def identity(cls, layout: SystemLayout) -> "OperatorMatrix":
        return cls(np.eye(layout.total_dim), layout, True)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    @property
    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.matrix.conj().T, self.layout, self.hermitian_hint)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            _check_same(self.layout, other.layout)
            return StateVector(other.layout, self.matrix @ other.amplitudes)
        if isinstance(other, OperatorMatrix):
            _check_same(self.layout, other.layout)
            return OperatorMatrix(self.matrix @ other.matrix, self.layout)
        return NotImplemented

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same(self.layout, other.layout)
        return OperatorMatrix(
            self.matrix + other.matrix, self.layout, self.hermitian_hint and other.hermitian_hint
        )

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same(self.layout, other.layout)
        return OperatorMatrix(
            self.matrix - other.matrix, self.layout, self.hermitian_hint and other.hermitian_hint
        )

    def __neg__(self):
        return OperatorMatrix(-self.matrix, self.layout, self.hermitian_hint)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        real = np.isrealobj(scalar) or np.imag(scalar) == 0
        return OperatorMatrix(self.matrix * scalar, self.layout, self.hermitian_hint and real)

    __rmul__ = __mul__

    def norm(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self.matrix, 2))


def _check_same(a: SystemLayout, b: SystemLayout) -> None:
    if a.dims != b.dims:
        raise ValueError(f"layout mismatch: {a.labels}{a.dims} vs {b.labels}{b.dims}")


def _hermitian_error(mat: np.ndarray) -> float:
    return float(np.abs(mat - mat.conj().T).max()) if mat.size else 0.0


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)


def single(matrix, label: str = "q0", hermitian: bool = True) -> OperatorMatrix:
    """Wrap a small matrix as an operator on one subsystem."""
    mat = np.asarray(matrix, dtype=complex)
    return OperatorMatrix(mat, SystemLayout(((label, mat.shape[0]),)), hermitian)


I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def annihilation(n_max: int) -> np.ndarray:
    """Truncated cavity lowering operator on ``n_max + 1`` Fock levels."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)


def kron(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """Tensor product; the layout of ``b`` is appended to that of ``a``.

    Colliding labels on the right factor get a numeric suffix.
    """
    return OperatorMatrix(
        np.kron(a.matrix, b.matrix), a.layout + b.layout, a.hermitian_hint and b.hermitian_hint
    )


def embed(op, layout: SystemLayout, targets: Sequence[str]) -> OperatorMatrix:
    """Lift ``op`` acting on ``targets`` (in that order) to the full ``layout``.

    Targets need not be adjacent or in layout order; the identity fills every
    other subsystem.
    """
    mat = _as_matrix(op)
    targets = list(targets)
    idx = [layout.index(t) for t in targets]
    if len(set(idx)) != len(idx):
        raise ValueError(f"targets must be distinct, got {targets}")
    tdim = prod(layout.dims[i] for i in idx)
    if mat.shape != (tdim, tdim):
        raise ValueError(f"operator of shape {mat.shape} cannot act on targets {targets} (dim {tdim})")
    n = len(layout)
    rest = [i for i in range(n) if i not in idx]
    order = idx + rest
    full = np.kron(mat, np.eye(prod(layout.dims[i] for i in rest)))
    dims_in_order = [layout.dims[i] for i in order]
    tensor = full.reshape(dims_in_order * 2)
    inv = list(np.argsort(order))
    tensor = tensor.transpose(inv + [n + i for i in inv])
    d = layout.total_dim
    hint = op.hermitian_hint if isinstance(op, OperatorMatrix) else _hermitian_error(mat) < HERMITIAN_TOL
    return OperatorMatrix(tensor.reshape(d, d), layout, hint)


def apply(op, state: StateVector, targets: Sequence[str]) -> StateVector:
    """Apply a local operator to ``state``; the result must stay normalized."""
    return embed(op, state.layout, targets) @ state


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return a @ b - b @ a


def expm_hermitian(h, t: float, hbar: float = 1.0) -> OperatorMatrix:
    """``exp(-i h t / hbar)`` from the eigendecomposition of Hermitian ``h``."""
    mat = _as_matrix(h)
    scale = max(1.0, float(np.abs(mat).max()) if mat.size else 1.0)
    if _hermitian_error(mat) > HERMITIAN_TOL * scale:
        raise ValueError("expm_hermitian needs a Hermitian generator")
    evals, evecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    u = (evecs * np.exp(-1j * evals * t / hbar)) @ evecs.conj().T
    layout = h.layout if isinstance(h, OperatorMatrix) else SystemLayout(_flat_layout(mat))
    return OperatorMatrix(u, layout)


def _flat_layout(mat: np.ndarray) -> tuple[tuple[str, int], ...]:
    # layout guessed for bare arrays: qubits when possible, else one oscillator
    d = mat.shape[0]
    n = int(round(np.log2(d))) if d > 0 else 0
    if d > 1 and 2**n == d:
        return tuple((f"q{k}", 2) for k in range(n))
    return ((CAVITY, d),)


HamiltonianSampler = Callable[[float], Union[OperatorMatrix, np.ndarray]]


def _unitary_step(gen: np.ndarray) -> np.ndarray:
    # exp(-i gen) for Hermitian gen, no validation (hot loop)
    evals, evecs = np.linalg.eigh(0.5 * (gen + gen.conj().T))
    return (evecs * np.exp(-1j * evals)) @ evecs.conj().T


_GAUSS = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)


def propagate_timedep(
    h_of_t: HamiltonianSampler, t0: float, t1: float, steps: int, hbar: float = 1.0, order: int = 2
) -> OperatorMatrix:
    """Time-ordered propagator from exponential stepping, later steps on the left.

    ``order=2`` is the midpoint rule ``prod_k exp(-i H(t_k + dt/2) dt / hbar)``.
    ``order=4`` is the fourth-order Magnus step built from the two Gauss
    nodes ``H1, H2``: ``exp(-i [dt (H1 + H2) / 2 - i sqrt(3) dt^2 [H2, H1] / 12] / hbar)``.
    Every factor is exactly unitary.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    dt = (t1 - t0) / steps
    nodes = (0.5,) if order == 2 else _GAUSS
    first = h_of_t(t0 + nodes[0] * dt)
    layout = first.layout if isinstance(first, OperatorMatrix) else None
    d = _as_matrix(first).shape[0]
    u = np.eye(d, dtype=complex)
    for k in range(steps):
        hs = []
        for j, c in enumerate(nodes):
            h = first if k == 0 and j == 0 else h_of_t(t0 + (k + c) * dt)
            mat = _as_matrix(h)
            if mat.shape != (d, d):
                raise ValueError(f"Hamiltonian sampler changed dimension at step {k}: {mat.shape} vs {(d, d)}")
            if _hermitian_error(mat) > HERMITIAN_TOL * max(1.0, float(np.abs(mat).max())):
                raise ValueError(f"Hamiltonian is not Hermitian at step {k}")
            hs.append(mat)
        if order == 2:
            gen = hs[0] * (dt / hbar)
        else:
            h1, h2 = hs
            gen = (0.5 * dt / hbar) * (h1 + h2) - 1j * (np.sqrt(3) * dt**2 / (12 * hbar**2)) * (h2 @ h1 - h1 @ h2)
        u = _unitary_step(gen) @ u
    if layout is None:
        layout = SystemLayout(_flat_layout(u))
    return OperatorMatrix(u, layout)


def unitarity_error(u) -> float:
    mat = _as_matrix(u)
    return float(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])).max())


def operator_infidelity(u, v) -> float:
    """Phase-insensitive distance ``1 - |tr(u^dag v)| / d``."""
    a, b = _as_matrix(u), _as_matrix(v)
    return float(1.0 - abs(np.trace(a.conj().T @ b)) / a.shape[0])


def state_overlap(psi, phi) -> float:
    """Phase-insensitive ``|<psi|phi>|``."""
    a = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi)
    b = phi.amplitudes if isinstance(phi, StateVector) else np.asarray(phi)
    return float(abs(np.vdot(a, b)))


def check_projectors(projectors: Sequence, tol: float = PROJECTOR_TOL) -> None:
    mats = [_as_matrix(p) for p in projectors]
    if not mats:
        raise ValueError("empty projector set")
    d = mats[0].shape[0]
    for k, p in enumerate(mats):
        if _hermitian_error(p) > tol:
            raise ValueError(f"projector {k} is not Hermitian")
        if np.abs(p @ p - p).max() > tol:
            raise ValueError(f"projector {k} is not idempotent")
    if np.abs(sum(mats) - np.eye(d)).max() > tol:
        raise ValueError("projectors do not sum to the identity")


@dataclass(frozen=True)
class Outcome:
    index: int
    probability: float
    state: StateVector


def enumerate_outcomes(
    state: StateVector, projectors: Sequence, p_floor: float = P_FLOOR
) -> list[Outcome]:
    """Every outcome with Born probability above ``p_floor``, with its post-state."""
    check_projectors(projectors)
    out = []
    for k, p in enumerate(projectors):
        v = _as_matrix(p) @ state.amplitudes
        prob = float(np.vdot(v, v).real)
        if prob > p_floor:
            out.append(Outcome(k, prob, StateVector(state.layout, v / np.sqrt(prob))))
    return out


def measure(state: StateVector, projectors: Sequence, rng: np.random.Generator) -> Outcome:
    """Sample one outcome with Born probabilities."""
    outcomes = enumerate_outcomes(state, projectors, p_floor=0.0)
    probs = np.array([o.probability for o in outcomes])
    pick = rng.choice(len(outcomes), p=probs / probs.sum())
    return outcomes[pick]
