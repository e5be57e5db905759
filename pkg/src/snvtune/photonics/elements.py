"""2x2 transfer matrices for couplers, phase shifters and (double) MZIs.

Field-amplitude convention: output = M @ input, ports ordered (bar, cross).
Couplers put ``i`` on the cross terms.
"""
from __future__ import annotations

import numpy as np

from ..errors import RatioDomainError


def _check_ratio(r):
    if not (0.0 <= r <= 1.0):
        raise RatioDomainError(f"coupler power ratio {r!r} outside [0, 1]")


def coupler(ratio: float) -> np.ndarray:
    """Directional coupler sending power fraction ``ratio`` to the cross port."""
    _check_ratio(ratio)
    t = np.sqrt(1.0 - ratio)
    k = 1j * np.sqrt(ratio)
    return np.array([[t, k], [k, t]], dtype=complex)


def phase_shifter(theta: float) -> np.ndarray:
    """Phase ``theta`` (rad) on the lower arm."""
    return np.array([[1.0, 0.0], [0.0, np.exp(1j * theta)]], dtype=complex)


def mzi(theta: float, r1: float = 0.5, r2: float = 0.5) -> np.ndarray:
    return coupler(r2) @ phase_shifter(theta) @ coupler(r1)


def dcps_mzi(theta: float, phi: float, ratios=(0.5, 0.5, 0.5, 0.5)) -> np.ndarray:
    """Two cascaded single-shifter MZIs: theta acts first, then phi."""
    r1, r2, r3, r4 = ratios
    return mzi(phi, r3, r4) @ mzi(theta, r1, r2)


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) < tol)


def singular_values(m: np.ndarray) -> np.ndarray:
    return np.linalg.svd(m, compute_uv=False)
