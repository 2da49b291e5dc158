"""Amplitude encoding: write an L2-normalized real signal into state amplitudes.

A signal of length l needs ceil(log2(l)) qubits (minimum one); unused
amplitudes at indices >= l stay zero, so basis index == signal index.
Signed values are encoded as-is: normalization preserves relative
magnitudes and signs.
"""

from __future__ import annotations

import numpy as np

from .errors import CapacityError, EncodingError
from .qstate import MAX_QUBITS, Statevector


def required_qubits(length: int) -> int:
    """Minimum qubit count to amplitude-encode a signal of ``length`` values."""
    if length < 1:
        raise EncodingError("cannot encode an empty signal")
    return max(1, (int(length) - 1).bit_length())


def amplitude_encode(values, num_qubits: int | None = None) -> Statevector:
    """Encode a 1-D signal as a unit-norm statevector, zero-padded at the tail."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise EncodingError("cannot encode an empty signal")
    if not np.isfinite(v).all():
        raise EncodingError("signal contains NaN or Inf")
    n = required_qubits(v.size) if num_qubits is None else num_qubits
    if not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    if v.size > (1 << n):
        raise CapacityError(
            f"signal of length {v.size} does not fit in {n} qubits "
            f"(capacity {1 << n})"
        )
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise EncodingError("degenerate all-zero signal cannot be encoded")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[: v.size] = v / norm
    return Statevector(n, amps)


def encode_rows(signals: np.ndarray, num_qubits: int) -> np.ndarray:
    """Encode a (batch, length) matrix into raw (batch, 2^n) amplitudes."""
    sig = np.asarray(signals, dtype=np.float64)
    if sig.ndim != 2 or sig.shape[1] == 0:
        raise EncodingError(f"expected a (batch, length) matrix, got shape {sig.shape}")
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise CapacityError(
            f"qubit count must be in [1, {MAX_QUBITS}], got {num_qubits}"
        )
    if sig.shape[1] > (1 << num_qubits):
        raise CapacityError(
            f"signals of length {sig.shape[1]} do not fit in {num_qubits} qubits"
        )
    finite = np.isfinite(sig).all(axis=1)
    if not finite.all():
        raise EncodingError(f"signal row {int(np.argmin(finite))} contains NaN or Inf")
    norms = np.linalg.norm(sig, axis=1)
    if (norms == 0.0).any():
        raise EncodingError(
            f"signal row {int(np.argmin(norms > 0))} is all-zero and cannot be encoded"
        )
    amps = np.zeros((sig.shape[0], 1 << num_qubits), dtype=np.complex128)
    amps[:, : sig.shape[1]] = sig / norms[:, None]
    return amps
