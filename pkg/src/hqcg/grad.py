"""Exact loss gradients via reverse accumulation through the statevector.

For each sample the forward pass keeps the state before every trainable
gate; one backward sweep then carries the class-weighted residual bra
through the circuit, picking up 2*Re<bra|dG/dtheta|psi_pre> per angle.
The derivative of a controlled rotation is P1 (x) dU/dtheta (the plain
two-term parameter-shift rule does not hold here because the controlled
gate's generator has three eigenvalues). Class-state parameters get the
same treatment per class, sweeping <psi| back through the ansatz.

All batch reductions are plain axis sums in sample order, so gradients
are bit-for-bit reproducible.
"""

from __future__ import annotations

import numpy as np

from .circuit import (
    HQCGModel,
    class_state_gate_plan,
    class_state_trace,
    rotation_matrix,
    rotation_matrix_derivatives,
    _X,
)
from .encoding import encode_rows
from .errors import ConfigError, NumericError, ShapeError
from .qstate import apply_controlled_matrix, apply_single_matrix
from .train import bce_prob_gradient, bce_rows


def _check_batch(model: HQCGModel, signals, labels):
    if not np.isfinite(model.theta).all():
        raise NumericError("non-finite model parameters")
    signals = np.asarray(signals, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if signals.ndim != 2 or signals.shape[0] == 0:
        raise ShapeError(f"expected a non-empty (batch, length) matrix, "
                         f"got shape {signals.shape}")
    if labels.shape != (signals.shape[0], model.num_classes):
        raise ShapeError(
            f"labels shape {labels.shape} does not match "
            f"({signals.shape[0]}, {model.num_classes})"
        )
    return signals, labels


def _forward_trace(model: HQCGModel, signals):
    """Encoded batch pushed through both layers, recording pre-gate states."""
    n = model.num_qubits
    amps = encode_rows(signals, n)
    gates = model.lqcg.gates + model.gqcg.gates
    pre_states = []
    for gate in gates:
        i, j, k = gate.param_slot
        u = rotation_matrix(model.theta[i], model.theta[j], model.theta[k])
        pre_states.append(amps)
        amps = apply_controlled_matrix(amps, n, gate.control, gate.target, u)
    return amps, gates, pre_states


def batch_loss(model: HQCGModel, signals, labels) -> float:
    """Mean BCE of the batch, via the same forward path the gradients use."""
    signals, labels = _check_batch(model, signals, labels)
    psi, _, _ = _forward_trace(model, signals)
    phis = np.stack([
        class_state_trace(model.num_qubits, model.class_angles(i))[0]
        for i in range(model.num_classes)
    ])
    probs = np.abs(psi @ phis.conj().T) ** 2
    return float(np.mean(bce_rows(probs, labels)))


def loss_and_gradients(model: HQCGModel, signals, labels):
    """(mean batch BCE, exact gradient w.r.t. every model parameter)."""
    signals, labels = _check_batch(model, signals, labels)
    n = model.num_qubits
    batch = signals.shape[0]
    theta = model.theta

    psi, gates, pre_states = _forward_trace(model, signals)
    traces = [class_state_trace(n, model.class_angles(i))
              for i in range(model.num_classes)]
    phis = np.stack([t[0] for t in traces])

    overlaps = psi @ phis.conj().T          # a_si = <phi_i|psi_s>
    probs = np.abs(overlaps) ** 2
    rows = bce_rows(probs, labels)
    bad = ~np.isfinite(rows)
    if bad.any():
        idx = int(np.argmax(bad))
        raise NumericError(f"non-finite loss for batch row {idx}",
                           sample_index=idx)
    loss = float(rows.mean())

    coef = bce_prob_gradient(probs, labels)  # dL_s/dp_si, clamp-aware
    weights = coef * overlaps                # c_si * a_si
    grads = np.zeros(model.num_params)

    # Circuit parameters: sweep the weighted residual bra backwards.
    # |chi_s> = sum_i c_si a_si |phi_i>, and dL_s/dtheta = 2 Re <chi|dG|psi_pre>.
    bra = weights @ phis
    for gate, pre in zip(reversed(gates), reversed(pre_states)):
        i, j, k = gate.param_slot
        angles = (theta[i], theta[j], theta[k])
        u = rotation_matrix(*angles)
        for slot, du in zip(gate.param_slot, rotation_matrix_derivatives(*angles)):
            dpsi = apply_controlled_matrix(pre, n, gate.control, gate.target,
                                           du, keep_inactive=False)
            grads[slot] = 2.0 * float(np.real(np.sum(np.conj(bra) * dpsi)))
        bra = apply_controlled_matrix(bra, n, gate.control, gate.target,
                                      u.conj().T)

    # Class-state parameters: per class, sweep <xi_i| = sum_s c_si a_si <psi_s|
    # back through the ansatz; dL/dtheta = 2 Re <xi|dK|phi_pre>.
    plan = class_state_gate_plan(n)
    for c in range(model.num_classes):
        _, pre_phi = traces[c]
        xi = np.einsum("s,sd->d", np.conj(weights[:, c]), psi)
        base = model.class_params_offset + 3 * n * c
        for (kind, a, b), pre in zip(reversed(plan), reversed(pre_phi)):
            if kind == "rot":
                angles = tuple(theta[base + b : base + b + 3])
                u = rotation_matrix(*angles)
                for off, du in enumerate(rotation_matrix_derivatives(*angles)):
                    dphi = apply_single_matrix(pre, n, a, du)
                    grads[base + b + off] = 2.0 * float(
                        np.real(np.sum(np.conj(xi) * dphi))
                    )
                xi = apply_single_matrix(xi, n, a, u.conj().T)
            else:
                xi = apply_controlled_matrix(xi, n, a, b, _X)  # CNOT is self-inverse

    grads /= batch
    if not np.isfinite(grads).all():
        raise NumericError("non-finite gradient component")
    return loss, grads


def finite_diff_oracle(model: HQCGModel, signals, labels,
                       eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of batch_loss, one parameter at a time."""
    if not 1e-6 <= eps <= 1e-3:
        raise ConfigError(f"eps must lie in [1e-6, 1e-3], got {eps}")
    signals, labels = _check_batch(model, signals, labels)
    base = model.theta.copy()
    work = base.copy()
    grads = np.empty_like(base)
    try:
        for k in range(base.size):
            work[k] = base[k] + eps
            model.theta = work
            up = batch_loss(model, signals, labels)
            work[k] = base[k] - eps
            model.theta = work
            down = batch_loss(model, signals, labels)
            work[k] = base[k]
            grads[k] = (up - down) / (2.0 * eps)
    finally:
        model.theta = base
    return grads
