"""Hierarchical control-gate circuits and the fidelity classifier head.

The trainable primitive is a controlled single-qubit rotation with three
Euler angles, U(a, b, c) = Rz(c) @ Ry(b) @ Rz(a), applied to the target
when the control qubit is 1. Two layer constructions are built from it:

* local layer (LQCG): qubits are grouped into contiguous blocks of size g;
  inside each block a chain CU(q -> q+1) runs over adjacent qubits and one
  skip-connection gate CU(last -> first) closes the block.
* global layer (GQCG): the last qubit of each block acts as the block's
  representative; the same chain-plus-skip pattern is applied across the
  representatives.

Per-class learnable states are prepared by one layer of per-qubit
rotations followed by a fixed CNOT ring. Class scores are state
fidelities |<psi|phi_i>|^2, computable either directly or through the
ancilla swap test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import encode_rows
from .errors import CapacityError, ConfigError, NumericError, ShapeError
from .parallel import map_rows
from .qstate import (
    MAX_QUBITS,
    Statevector,
    apply_controlled_matrix,
    apply_single_matrix,
    apply_swap_kernel,
    inner_product,
    zero_state,
)

PARAMS_PER_GATE = 3

_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


def _rz(t: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * t), 0.0], [0.0, np.exp(0.5j * t)]], dtype=np.complex128
    )


def _ry(t: float) -> np.ndarray:
    c, s = np.cos(0.5 * t), np.sin(0.5 * t)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _drz(t: float) -> np.ndarray:
    return np.array(
        [[-0.5j * np.exp(-0.5j * t), 0.0], [0.0, 0.5j * np.exp(0.5j * t)]],
        dtype=np.complex128,
    )


def _dry(t: float) -> np.ndarray:
    c, s = np.cos(0.5 * t), np.sin(0.5 * t)
    return 0.5 * np.array([[-s, -c], [c, -s]], dtype=np.complex128)


def rotation_matrix(a: float, b: float, c: float) -> np.ndarray:
    """General single-qubit rotation Rz(c) @ Ry(b) @ Rz(a)."""
    return _rz(c) @ _ry(b) @ _rz(a)


def rotation_matrix_derivatives(a: float, b: float, c: float):
    """Partial derivatives of rotation_matrix with respect to (a, b, c)."""
    rza, ryb, rzc = _rz(a), _ry(b), _rz(c)
    return (rzc @ ryb @ _drz(a), rzc @ _dry(b) @ rza, _drz(c) @ ryb @ rza)


@dataclass(frozen=True)
class ParamGate:
    """One trainable controlled rotation owning three parameter slots."""

    control: int
    target: int
    param_slot: tuple[int, int, int]

    def __post_init__(self):
        if self.control == self.target:
            raise ShapeError("control and target must differ")
        if len(set(self.param_slot)) != 3:
            raise ConfigError(f"parameter slots must be distinct: {self.param_slot}")


@dataclass(frozen=True)
class ParamCircuit:
    """Ordered trainable gates whose slots tile a contiguous parameter range."""

    num_qubits: int
    gates: tuple[ParamGate, ...]
    param_offset: int

    def __post_init__(self):
        slots = [s for g in self.gates for s in g.param_slot]
        want = list(range(self.param_offset, self.param_offset + len(slots)))
        if sorted(slots) != want:
            raise ConfigError("parameter slots must tile a contiguous range")
        for g in self.gates:
            if not (0 <= g.control < self.num_qubits and 0 <= g.target < self.num_qubits):
                raise ConfigError(f"gate {g} out of range for width {self.num_qubits}")

    @property
    def num_params(self) -> int:
        return PARAMS_PER_GATE * len(self.gates)


def build_lqcg(num_qubits: int, group_size: int, param_offset: int = 0) -> ParamCircuit:
    """Local layer: per-block chain over adjacent qubits plus a skip gate.

    Produces exactly ``num_qubits`` gates (g per block, n/g blocks) and
    3 * num_qubits new parameters.
    """
    if group_size < 2:
        raise ConfigError(f"group size must be >= 2, got {group_size}")
    if num_qubits % group_size != 0:
        raise ConfigError(
            f"group size {group_size} does not divide qubit count {num_qubits}"
        )
    gates = []
    slot = param_offset
    for start in range(0, num_qubits, group_size):
        last = start + group_size - 1
        for q in range(start, last):
            gates.append(ParamGate(q, q + 1, (slot, slot + 1, slot + 2)))
            slot += 3
        gates.append(ParamGate(last, start, (slot, slot + 1, slot + 2)))
        slot += 3
    return ParamCircuit(num_qubits, tuple(gates), param_offset)


def build_gqcg(num_qubits: int, group_size: int, param_offset: int = 0) -> ParamCircuit:
    """Global layer: chain plus skip across block representatives.

    The representative of block k is its last qubit, (k+1)*g - 1, where the
    local chain terminates. Needs at least two blocks.
    """
    if group_size < 2:
        raise ConfigError(f"group size must be >= 2, got {group_size}")
    if num_qubits % group_size != 0:
        raise ConfigError(
            f"group size {group_size} does not divide qubit count {num_qubits}"
        )
    num_groups = num_qubits // group_size
    if num_groups < 2:
        raise ConfigError(
            "global layer needs at least two qubit groups "
            f"(got {num_groups} group of size {group_size})"
        )
    reps = [(k + 1) * group_size - 1 for k in range(num_groups)]
    gates = []
    slot = param_offset
    for k in range(num_groups - 1):
        gates.append(ParamGate(reps[k], reps[k + 1], (slot, slot + 1, slot + 2)))
        slot += 3
    gates.append(ParamGate(reps[-1], reps[0], (slot, slot + 1, slot + 2)))
    return ParamCircuit(num_qubits, tuple(gates), param_offset)


def apply_param_circuit(amps: np.ndarray, circuit: ParamCircuit,
                        theta: np.ndarray) -> np.ndarray:
    """Run the circuit over raw amplitudes (batched over leading axes)."""
    if circuit.param_offset + circuit.num_params > len(theta):
        raise ShapeError(
            f"parameter vector of length {len(theta)} too short for circuit "
            f"slots up to {circuit.param_offset + circuit.num_params - 1}"
        )
    for gate in circuit.gates:
        i, j, k = gate.param_slot
        u = rotation_matrix(theta[i], theta[j], theta[k])
        amps = apply_controlled_matrix(amps, circuit.num_qubits, gate.control,
                                       gate.target, u)
    return amps


# --- learnable class states ---------------------------------------------------


def class_state_gate_plan(num_qubits: int):
    """Gate sequence of the class-state ansatz: n rotations, then a CNOT ring."""
    plan = [("rot", q, 3 * q) for q in range(num_qubits)]
    if num_qubits >= 2:
        plan += [("cnot", k, (k + 1) % num_qubits) for k in range(num_qubits)]
    return plan


def _class_state_sweep(num_qubits: int, angles: np.ndarray, record: bool):
    amps = zero_state(num_qubits).amplitudes
    trace = []
    for kind, a, b in class_state_gate_plan(num_qubits):
        if record:
            trace.append(amps)
        if kind == "rot":
            u = rotation_matrix(angles[b], angles[b + 1], angles[b + 2])
            amps = apply_single_matrix(amps, num_qubits, a, u)
        else:
            amps = apply_controlled_matrix(amps, num_qubits, a, b, _X)
    return amps, trace


def class_state_amplitudes(num_qubits: int, angles) -> np.ndarray:
    angles = np.asarray(angles, dtype=np.float64).ravel()
    if angles.size != 3 * num_qubits:
        raise ShapeError(
            f"class state on {num_qubits} qubits needs {3 * num_qubits} angles, "
            f"got {angles.size}"
        )
    amps, _ = _class_state_sweep(num_qubits, angles, record=False)
    return amps


def class_state_trace(num_qubits: int, angles):
    """Final amplitudes plus the pre-gate state of every ansatz gate."""
    angles = np.asarray(angles, dtype=np.float64).ravel()
    if angles.size != 3 * num_qubits:
        raise ShapeError(
            f"class state on {num_qubits} qubits needs {3 * num_qubits} angles, "
            f"got {angles.size}"
        )
    return _class_state_sweep(num_qubits, angles, record=True)


def build_class_state(num_qubits: int, class_params) -> Statevector:
    """Learnable per-class state: per-qubit rotations, then the CNOT ring."""
    return Statevector(num_qubits, class_state_amplitudes(num_qubits, class_params))


# --- model --------------------------------------------------------------------


@dataclass(eq=False)
class HQCGModel:
    """Encoding width, both layers, and per-class state parameters.

    ``theta`` is the dense trainable vector laid out as
    [local layer | global layer | class 0 | ... | class C-1].
    """

    num_qubits: int
    group_size: int
    num_classes: int
    lqcg: ParamCircuit
    gqcg: ParamCircuit
    theta: np.ndarray

    def __post_init__(self):
        if self.num_classes < 1:
            raise ConfigError(f"need at least one class, got {self.num_classes}")
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.shape != (self.num_params,):
            raise ShapeError(
                f"theta must have length {self.num_params}, got {self.theta.shape}"
            )

    @property
    def num_params(self) -> int:
        n, m = self.num_qubits, self.num_qubits // self.group_size
        return 3 * n + 3 * m + 3 * n * self.num_classes

    @property
    def class_params_offset(self) -> int:
        return 3 * self.num_qubits + 3 * (self.num_qubits // self.group_size)

    def class_angles(self, index: int) -> np.ndarray:
        if not 0 <= index < self.num_classes:
            raise IndexError(f"class index {index} out of range")
        start = self.class_params_offset + 3 * self.num_qubits * index
        return self.theta[start : start + 3 * self.num_qubits]

    def param_counts(self) -> dict[str, int]:
        n, m = self.num_qubits, self.num_qubits // self.group_size
        return {
            "lqcg": 3 * n,
            "gqcg": 3 * m,
            "class_states": 3 * n * self.num_classes,
            "total": self.num_params,
        }


def build_model(num_qubits: int, group_size: int, num_classes: int,
                seed: int | None = 0, theta=None) -> HQCGModel:
    """Assemble a model; theta defaults to seeded Uniform(-pi, pi)."""
    lqcg = build_lqcg(num_qubits, group_size, param_offset=0)
    gqcg = build_gqcg(num_qubits, group_size, param_offset=lqcg.num_params)
    if num_classes < 1:
        raise ConfigError(f"need at least one class, got {num_classes}")
    total = lqcg.num_params + gqcg.num_params + 3 * num_qubits * num_classes
    if theta is None:
        rng = np.random.default_rng(seed)
        theta = rng.uniform(-np.pi, np.pi, total)
    return HQCGModel(num_qubits, group_size, num_classes, lqcg, gqcg, theta)


def class_state_matrix(model: HQCGModel) -> np.ndarray:
    """All class states stacked as a (num_classes, 2^n) matrix."""
    return np.stack(
        [class_state_amplitudes(model.num_qubits, model.class_angles(i))
         for i in range(model.num_classes)]
    )


def forward_batch(model: HQCGModel, signals, threads: int | None = None) -> np.ndarray:
    """Per-class fidelity scores for a (batch, length) signal matrix."""
    if not np.isfinite(model.theta).all():
        raise NumericError("non-finite model parameters")
    signals = np.asarray(signals, dtype=np.float64)
    phis = class_state_matrix(model)

    def probs_chunk(chunk):
        amps = encode_rows(chunk, model.num_qubits)
        amps = apply_param_circuit(amps, model.lqcg, model.theta)
        amps = apply_param_circuit(amps, model.gqcg, model.theta)
        overlaps = amps @ phis.conj().T
        return np.abs(overlaps) ** 2

    return map_rows(probs_chunk, signals, threads)


def forward(model: HQCGModel, signal) -> np.ndarray:
    """Class probabilities p_i = |<psi|phi_i>|^2 for one signal."""
    values = np.asarray(signal, dtype=np.float64).ravel()
    return forward_batch(model, values[None, :], threads=1)[0]


# --- fidelity readouts ----------------------------------------------------------


def direct_fidelity(psi: Statevector, phi: Statevector) -> float:
    """|<psi|phi>|^2 computed from the inner product."""
    return min(1.0, abs(inner_product(psi, phi)) ** 2)


def swap_test_fidelity(psi: Statevector, phi: Statevector) -> float:
    """Fidelity via the ancilla swap test on a (2n+1)-qubit register.

    Ancilla Hadamard, n controlled swaps between the register copies, a
    closing Hadamard; P(ancilla=0) = (1 + |<psi|phi>|^2) / 2, so the
    returned estimate is 2 * P(0) - 1.
    """
    n = psi.num_qubits
    if phi.num_qubits != n:
        raise ShapeError(f"width mismatch: {n} vs {phi.num_qubits} qubits")
    total = 2 * n + 1
    if total > MAX_QUBITS:
        raise CapacityError(
            f"swap test needs {total} qubits, above the {MAX_QUBITS}-qubit cap; "
            "fall back to direct_fidelity"
        )
    ancilla = total - 1
    # Register layout: qubits [0, n) hold psi, [n, 2n) hold phi, top qubit
    # is the ancilla. np.kron puts its first factor on the high bits.
    joint = np.kron(np.array([1.0, 0.0]), np.kron(phi.amplitudes, psi.amplitudes))
    joint = apply_single_matrix(joint, total, ancilla, _HADAMARD)
    for k in range(n):
        joint = apply_swap_kernel(joint, total, k, n + k, control=ancilla)
    joint = apply_single_matrix(joint, total, ancilla, _HADAMARD)
    p0 = float(np.sum(np.abs(joint[: 1 << (2 * n)]) ** 2))
    return min(1.0, max(0.0, 2.0 * p0 - 1.0))


def format_circuit(model: HQCGModel) -> str:
    """Human-readable gate listing with per-section parameter counts."""
    counts = model.param_counts()
    lines = [
        f"HQCG circuit: {model.num_qubits} qubits, "
        f"group size {model.group_size}, {model.num_classes} classes",
        f"LQCG: {len(model.lqcg.gates)} gates, {counts['lqcg']} params",
    ]
    for g in model.lqcg.gates:
        lines.append(f"  CU q{g.control} -> q{g.target}  slots {g.param_slot}")
    lines.append(f"GQCG: {len(model.gqcg.gates)} gates, {counts['gqcg']} params")
    for g in model.gqcg.gates:
        lines.append(f"  CU q{g.control} -> q{g.target}  slots {g.param_slot}")
    lines.append(
        f"class states: {model.num_classes} x {3 * model.num_qubits} = "
        f"{counts['class_states']} params"
    )
    lines.append(f"total: {counts['total']} params")
    return "\n".join(lines)
