"""Phase-tunable two-port switches and extinction optimization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..errors import OptimizationShortfallError
from .elements import dcps_mzi, mzi

GRID = 64
IDEAL_MIN_DB = 25.0
REL_FLOOR = 1e-30  # numerical floor on P_min relative to P_max


@dataclass(frozen=True)
class SingleMZI:
    """cps-MZI: one phase shifter between two couplers."""

    r1: float = 0.5
    r2: float = 0.5

    phase_names = ("theta",)

    @property
    def ratios(self):
        return (self.r1, self.r2)

    def transfer(self, phases) -> np.ndarray:
        return mzi(phases[0], self.r1, self.r2)


@dataclass(frozen=True)
class DoubleMZI:
    """dCPS-MZI: two cascaded cps-MZIs, theta first."""

    ratios: tuple = (0.5, 0.5, 0.5, 0.5)

    phase_names = ("theta", "phi")

    def __post_init__(self):
        if len(self.ratios) != 4:
            raise ValueError("a dCPS-MZI needs four coupler ratios")
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))

    def transfer(self, phases) -> np.ndarray:
        return dcps_mzi(phases[0], phases[1], self.ratios)


def is_ideal(device) -> bool:
    return all(r == 0.5 for r in device.ratios)


@dataclass(frozen=True)
class ExtinctionResult:
    off_phases: tuple
    on_phases: tuple
    p_min: float
    p_max: float
    extinction_db: float


def _grid_search(power, n_phases, grid=GRID, sign=1.0):
    axis = 2.0 * np.pi * np.arange(grid) / grid
    mesh = np.meshgrid(*([axis] * n_phases), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.array([sign * power(p) for p in pts])
    i = int(np.argmin(vals))
    return pts[i], vals[i]


def _refine(power, start, start_val, sign=1.0):
    res = minimize(lambda p: sign * power(p), start, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-300, "maxiter": 4000})
    if res.fun < start_val:
        return np.mod(res.x, 2.0 * np.pi), float(res.fun)
    return start, start_val


def optimize_extinction(device, target_output: int = 1, dark_input: int = 0,
                        stray_power: float = 0.0) -> ExtinctionResult:
    """Best on/off ratio of ``|M[target_output, dark_input]|^2`` over the phases.

    Coarse 64-point-per-phase grid, then Nelder-Mead from the best grid point,
    for both the minimum and the maximum. ``stray_power`` is added to both
    levels to model fluorescence that bypasses the switch.
    """
    n = len(device.phase_names)

    def power(p):
        return float(abs(device.transfer(p)[target_output, dark_input]) ** 2)

    lo_pt, lo = _grid_search(power, n)
    lo_pt, lo = _refine(power, lo_pt, lo)
    hi_pt, hi = _grid_search(power, n, sign=-1.0)
    hi_pt, hi = _refine(power, hi_pt, hi, sign=-1.0)
    p_max = -hi + stray_power
    p_min = max(lo + stray_power, REL_FLOOR * p_max)
    ext = 10.0 * np.log10(p_max / p_min)
    if is_ideal(device) and stray_power == 0.0 and ext < IDEAL_MIN_DB:
        raise OptimizationShortfallError(
            f"ideal device reached only {ext:.1f} dB; optimizer or model is broken")
    return ExtinctionResult(tuple(float(v) for v in lo_pt), tuple(float(v) for v in hi_pt),
                            float(p_min), float(p_max), float(ext))


def best_transmission(device, out_port: int, in_port: int):
    """Phases maximizing ``|M[out_port, in_port]|^2`` and that power."""
    n = len(device.phase_names)

    def neg_power(p):
        return -float(abs(device.transfer(p)[out_port, in_port]) ** 2)

    pt, val = _grid_search(neg_power, n)
    pt, val = _refine(neg_power, pt, val)
    return tuple(float(v) for v in pt), -val
