"""Arithmetic on log-scaled sequences.

The bond-space recursions and transfer contractions produce sequences whose
magnitudes span thousands of orders of magnitude (cosh-type growth for
|Delta| > J, exponentially localized drive vectors deep in the ordered
phase).  A value is stored as a pair ``(mantissa, log)`` meaning
``mantissa * exp(log)``; mantissas are rebalanced back toward unity whenever
they leave a wide band, so ordinary double arithmetic stays exact for benign
parameters (log stays 0.0) and only kicks in where it is needed.
"""

from __future__ import annotations

import math

import numpy as np

# exp(+/-BAND) is ~1e150, comfortably inside double range even after squaring
# a mantissa once.
BAND = 345.0

NEG_INF = float("-inf")


def srebalance(value, log):
    """Scalar rebalance: pull |value| into the band, moving scale into log."""
    mag = abs(value)
    if mag == 0.0:
        return value * 0.0, NEG_INF
    if mag > 1e30 or mag < 1e-30:
        return value / mag, log + math.log(mag)
    return value, log


def sadd(v1, l1, v2, l2):
    """Scalar scaled addition: (v1, l1) + (v2, l2)."""
    if abs(v1) == 0.0 or l1 == NEG_INF:
        return v2, l2
    if abs(v2) == 0.0 or l2 == NEG_INF:
        return v1, l1
    if l1 >= l2:
        return srebalance(v1 + v2 * math.exp(l2 - l1), l1)
    return srebalance(v2 + v1 * math.exp(l1 - l2), l2)


def rebalance(values: np.ndarray, logs: np.ndarray):
    """Vectorized rebalance of (values, logs) arrays (in place safe copy)."""
    values = np.asarray(values)
    logs = np.asarray(logs, dtype=float).copy()
    mag = np.abs(values)
    out = values.copy()
    zero = mag == 0.0
    move = (~zero) & ((mag > math.exp(BAND)) | (mag < math.exp(-BAND)))
    if np.any(move):
        shift = np.log(mag[move])
        out[move] = values[move] / mag[move]
        logs[move] += shift
    logs[zero] = NEG_INF
    return out, logs


def scaled_sum(terms):
    """Elementwise sum of scaled arrays: terms is a list of (values, logs).

    All arrays must share a shape.  Terms with -inf log are treated as 0.
    """
    vals = [np.asarray(v) for v, _ in terms]
    logs = [np.asarray(l, dtype=float) for _, l in terms]
    ref = np.full(vals[0].shape, NEG_INF)
    for l in logs:
        ref = np.maximum(ref, l)
    out = np.zeros(vals[0].shape, dtype=np.result_type(*[v.dtype for v in vals]))
    finite = ref > NEG_INF
    for v, l in zip(vals, logs):
        with np.errstate(invalid="ignore"):
            w = np.exp(np.where(finite, l - np.where(finite, ref, 0.0), NEG_INF))
        out = out + np.where(finite, v * np.where(np.isnan(w), 0.0, w), 0.0)
    return rebalance(out, np.where(finite, ref, NEG_INF))


def log_abs(values: np.ndarray, logs: np.ndarray) -> np.ndarray:
    """log|value| for each entry (-inf where zero)."""
    mag = np.abs(np.asarray(values))
    out = np.full(mag.shape, NEG_INF)
    nz = mag > 0.0
    out[nz] = np.log(mag[nz]) + np.asarray(logs, dtype=float)[nz]
    return out


def to_dense(values: np.ndarray, logs: np.ndarray) -> np.ndarray:
    """Materialize mantissa * exp(log).  Overflows to inf for extreme scales."""
    logs = np.asarray(logs, dtype=float)
    with np.errstate(over="ignore"):
        scale = np.exp(np.where(logs == NEG_INF, 0.0, logs))
    return np.asarray(values) * np.where(logs == NEG_INF, 0.0, scale)


def logsumexp(logs: np.ndarray) -> float:
    """Stable log(sum(exp(logs))) for a 1-D array that may contain -inf."""
    logs = np.asarray(logs, dtype=float)
    m = np.max(logs) if logs.size else NEG_INF
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(np.sum(np.exp(logs - m)))
