"""Cosine similarity and the four-signal score shared by retrieval and the bank."""

from __future__ import annotations

import math

import numpy as np

from omnivic.errors import ContractViolation

ZERO_NORM = 1e-12


def cosine_sim(a, b) -> float:
    """Cosine of the angle between ``a`` and ``b``.

    Returns 0 when either vector has norm below ``ZERO_NORM``. The result is
    clipped to [-1, 1] to absorb rounding.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ContractViolation(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na < ZERO_NORM or nb < ZERO_NORM:
        return 0.0
    return min(1.0, max(-1.0, float(a @ b) / (na * nb)))


def cosine_rows(rows: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise :func:`cosine_sim` of a ``(n, d)`` matrix against one vector."""
    nv = math.sqrt(float(v @ v))
    nr = np.sqrt(np.einsum("ij,ij->i", rows, rows))
    out = np.zeros(rows.shape[0])
    if nv < ZERO_NORM:
        return out
    ok = nr >= ZERO_NORM
    out[ok] = (rows[ok] @ v) / (nr[ok] * nv)
    return np.clip(out, -1.0, 1.0)


def signal_scores(force_a, torque_a, lin_a, ang_a, force_b, torque_b, lin_b, ang_b):
    """Force, torque, linear- and angular-velocity cosine scores."""
    return (
        cosine_sim(force_a, force_b),
        cosine_sim(torque_a, torque_b),
        cosine_sim(lin_a, lin_b),
        cosine_sim(ang_a, ang_b),
    )
