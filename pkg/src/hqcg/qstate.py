"""Dense statevector engine: states, gates, inner products, probabilities.

Basis convention used everywhere in this package: qubit q is bit q of the
basis-state integer index (little-endian), so for two qubits the state
|q1 q0> = |10> lives at index 2. All public operations are pure: they
return new objects and never mutate their inputs. The low-level kernels
accept arrays of shape (..., 2^n) so batches of states can be pushed
through a gate in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, ShapeError, StateError

MAX_QUBITS = 26  # 2^26 complex128 amplitudes ~ 1 GiB

NORM_ATOL = 1e-9
UNITARY_ATOL = 1e-12


def _as_unitary(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.shape != (2, 2):
        raise ShapeError(f"gate matrix must be 2x2, got shape {m.shape}")
    if not np.allclose(m.conj().T @ m, np.eye(2), atol=UNITARY_ATOL):
        raise StateError("gate matrix is not unitary within 1e-12")
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class Statevector:
    """Pure n-qubit state: 2^n complex amplitudes with unit L2 norm."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise CapacityError(f"need at least one qubit, got {self.num_qubits}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amps)
        want = 1 << self.num_qubits
        if amps.shape != (want,):
            raise ShapeError(
                f"expected {want} amplitudes for {self.num_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_ATOL:
            raise StateError(f"state norm {norm} deviates from 1 beyond {NORM_ATOL}")

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits


@dataclass(frozen=True, eq=False)
class Single:
    """Unitary on one target qubit."""

    target: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_unitary(self.matrix))

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,)


@dataclass(frozen=True, eq=False)
class Controlled:
    """Unitary on ``target``, applied only where ``control`` is 1."""

    control: int
    target: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.control == self.target:
            raise ShapeError("control and target must differ")
        object.__setattr__(self, "matrix", _as_unitary(self.matrix))

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


@dataclass(frozen=True)
class Swap:
    """Exchange of two qubits."""

    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise ShapeError("swap qubits must differ")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.a, self.b)


@dataclass(frozen=True)
class ControlledSwap:
    """Exchange of qubits ``a`` and ``b`` where ``control`` is 1."""

    control: int
    a: int
    b: int

    def __post_init__(self):
        if len({self.control, self.a, self.b}) != 3:
            raise ShapeError("controlled swap needs three distinct qubits")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.a, self.b)


GateOp = Single | Controlled | Swap | ControlledSwap


@dataclass(frozen=True)
class BasisProjector:
    """Projector onto ``bit`` (0 or 1) of one computational-basis qubit."""

    qubit: int
    bit: int

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ShapeError(f"projector bit must be 0 or 1, got {self.bit}")


# --- kernels ----------------------------------------------------------------
# All kernels act on the last axis of an (..., 2^n) array and return a new
# array. Each output amplitude is written exactly once, so results are
# independent of any chunk-level parallelism above this layer.


def apply_single_matrix(amps: np.ndarray, num_qubits: int, target: int,
                        matrix: np.ndarray) -> np.ndarray:
    lead = amps.shape[:-1]
    x = amps.reshape(lead + ((1 << num_qubits) >> (target + 1), 2, 1 << target))
    a0 = x[..., 0, :]
    a1 = x[..., 1, :]
    out = np.empty_like(x)
    out[..., 0, :] = matrix[0, 0] * a0 + matrix[0, 1] * a1
    out[..., 1, :] = matrix[1, 0] * a0 + matrix[1, 1] * a1
    return out.reshape(amps.shape)


@lru_cache(maxsize=256)
def _controlled_pairs(num_qubits: int, control: int, target: int):
    idx = np.arange(1 << num_qubits)
    lo = idx[(((idx >> control) & 1) == 1) & (((idx >> target) & 1) == 0)]
    hi = lo | (1 << target)
    lo.setflags(write=False)
    hi.setflags(write=False)
    return lo, hi


def apply_controlled_matrix(amps: np.ndarray, num_qubits: int, control: int,
                            target: int, matrix: np.ndarray,
                            keep_inactive: bool = True) -> np.ndarray:
    """Apply ``matrix`` to ``target`` on the control=1 subspace.

    With ``keep_inactive`` the control=0 amplitudes pass through untouched
    (a controlled gate); without it they are zeroed, which implements the
    parameter derivative of a controlled gate, d/dt [P0 (x) I + P1 (x) U(t)]
    = P1 (x) dU/dt.
    """
    lo, hi = _controlled_pairs(num_qubits, control, target)
    out = amps.copy() if keep_inactive else np.zeros_like(amps)
    a0 = amps[..., lo]
    a1 = amps[..., hi]
    out[..., lo] = matrix[0, 0] * a0 + matrix[0, 1] * a1
    out[..., hi] = matrix[1, 0] * a0 + matrix[1, 1] * a1
    return out


@lru_cache(maxsize=256)
def _swap_sources(num_qubits: int, a: int, b: int, control: int | None):
    idx = np.arange(1 << num_qubits)
    sel = (((idx >> a) & 1) == 1) & (((idx >> b) & 1) == 0)
    if control is not None:
        sel &= ((idx >> control) & 1) == 1
    x = idx[sel]
    y = x ^ ((1 << a) | (1 << b))
    x.setflags(write=False)
    y.setflags(write=False)
    return x, y


def apply_swap_kernel(amps: np.ndarray, num_qubits: int, a: int, b: int,
                      control: int | None = None) -> np.ndarray:
    x, y = _swap_sources(num_qubits, a, b, control)
    out = amps.copy()
    out[..., x] = amps[..., y]
    out[..., y] = amps[..., x]
    return out


# --- public operations ------------------------------------------------------


def zero_state(num_qubits: int) -> Statevector:
    """All-qubits-|0> state."""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise CapacityError(
            f"qubit count must be in [1, {MAX_QUBITS}], got {num_qubits}"
        )
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(num_qubits, amps)


def _check_bounds(gate: GateOp, num_qubits: int) -> None:
    for q in gate.qubits:
        if not 0 <= q < num_qubits:
            raise IndexError(
                f"gate qubit {q} out of range for {num_qubits}-qubit state"
            )


def apply_gate(state: Statevector, gate: GateOp) -> Statevector:
    """Exact action of one gate; preserves norm to ~1e-12 per application."""
    n = state.num_qubits
    _check_bounds(gate, n)
    if isinstance(gate, Single):
        raw = apply_single_matrix(state.amplitudes, n, gate.target, gate.matrix)
    elif isinstance(gate, Controlled):
        raw = apply_controlled_matrix(state.amplitudes, n, gate.control,
                                      gate.target, gate.matrix)
    elif isinstance(gate, Swap):
        raw = apply_swap_kernel(state.amplitudes, n, gate.a, gate.b)
    elif isinstance(gate, ControlledSwap):
        raw = apply_swap_kernel(state.amplitudes, n, gate.a, gate.b, gate.control)
    else:
        raise TypeError(f"unknown gate kind: {type(gate).__name__}")
    return Statevector(n, raw)


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b> = sum_i conj(a_i) * b_i."""
    if a.num_qubits != b.num_qubits:
        raise ShapeError(
            f"width mismatch: {a.num_qubits} vs {b.num_qubits} qubits"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def projector_probability(state: Statevector, proj: BasisProjector) -> float:
    """Probability of measuring ``proj.bit`` on ``proj.qubit``."""
    if not 0 <= proj.qubit < state.num_qubits:
        raise IndexError(
            f"projector qubit {proj.qubit} out of range for "
            f"{state.num_qubits}-qubit state"
        )
    idx = np.arange(state.dim)
    sel = ((idx >> proj.qubit) & 1) == proj.bit
    return float(np.sum(np.abs(state.amplitudes[sel]) ** 2))
