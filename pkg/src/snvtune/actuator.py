"""Piezo cantilever actuator: voltage to deflection, emitter strain and power.

The frequency response is a modal surrogate. Each emitter site carries a
list of mechanical modes whose strain gains sum to the quasi-static gain::

    eps_ac(w) = V_ac * | sum_m g_m * H_m(w) |,
    H_m(w) = w_m^2 / (w_m^2 - w^2 + i w w_m / Q_m)

so ``H_m(0) = 1`` and ``|H_m(w_m)| = Q_m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SiteNotFoundError, VoltageRangeError
from .frames import StrainTensor, uniaxial_device_strain


@dataclass(frozen=True)
class MechanicalMode:
    frequency_hz: float
    quality_factor: float
    strain_gain: float  # strain/V contributed at DC by this mode

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise ValueError("mode frequency must be positive")
        if not self.quality_factor >= 1:
            raise ValueError("quality factor must be >= 1")
        if not np.isfinite(self.strain_gain):
            raise ValueError("strain gain must be finite")

    def response(self, freq_hz):
        """Complex transfer H_m at drive frequency ``freq_hz`` (scalar or array)."""
        w = np.asarray(freq_hz, dtype=float)
        wm = self.frequency_hz
        return wm**2 / (wm**2 - w**2 + 1j * w * wm / self.quality_factor)


@dataclass(frozen=True)
class DriveSignal:
    v_dc: float = 0.0
    v_ac: float = 0.0
    freq_hz: float = 0.0
    duration_s: float | None = None

    def __post_init__(self):
        if self.v_ac < 0:
            raise ValueError("v_ac must be >= 0")
        if self.freq_hz < 0:
            raise ValueError("drive frequency must be >= 0")

    def envelope(self, t):
        """Rectangular pulse envelope (1 inside ``[0, duration]``, zero rise time)."""
        t = np.asarray(t, dtype=float)
        if self.duration_s is None:
            return np.ones_like(t)
        return ((t >= 0) & (t <= self.duration_s)).astype(float)

    def voltage(self, t):
        t = np.asarray(t, dtype=float)
        return self.v_dc + self.v_ac * self.envelope(t) * np.sin(2 * np.pi * self.freq_hz * t)


@dataclass(frozen=True)
class ActuatorModel:
    dc_deflection_gain_nm_per_v: float
    dc_strain_gain: dict  # site -> strain/V along device X
    modes: dict = field(default_factory=dict)  # site -> list[MechanicalMode]
    capacitance_f: float = 1e-12
    loss_factor: float = 6.4e-4
    leak_resistance_ohm: float = 3.6e12
    max_voltage: float = 100.0
    poisson_ratio: float = 0.0

    def __post_init__(self):
        if not self.capacitance_f > 0:
            raise ValueError("capacitance must be positive")
        if not 0 < self.loss_factor < 1:
            raise ValueError("loss factor must lie in (0, 1)")
        if not self.leak_resistance_ohm > 0:
            raise ValueError("leak resistance must be positive")
        gains = [self.dc_deflection_gain_nm_per_v, *self.dc_strain_gain.values()]
        if not all(np.isfinite(g) for g in gains):
            raise ValueError("actuator gains must be finite")
        object.__setattr__(self, "dc_strain_gain", dict(self.dc_strain_gain))
        object.__setattr__(self, "modes", {k: tuple(v) for k, v in self.modes.items()})

    @property
    def sites(self):
        return tuple(self.dc_strain_gain)

    def _gain(self, site):
        try:
            return self.dc_strain_gain[site]
        except KeyError:
            raise SiteNotFoundError(f"site {site!r} is not driven by this actuator") from None

    def site_modes(self, site):
        self._gain(site)
        return self.modes.get(site, ())


def dc_response(model: ActuatorModel, site: str, v_dc: float) -> tuple[float, StrainTensor]:
    """Cantilever tip deflection (nm) and device-frame strain at ``site``."""
    if abs(v_dc) > model.max_voltage:
        raise VoltageRangeError(f"|V_DC| = {abs(v_dc)} V exceeds the {model.max_voltage} V limit")
    gain = model._gain(site)
    deflection = model.dc_deflection_gain_nm_per_v * v_dc
    return deflection, uniaxial_device_strain(gain * v_dc, model.poisson_ratio)


def transfer(model: ActuatorModel, site: str, freq_hz):
    """Complex strain per volt at ``freq_hz``; falls back to the DC gain without modes."""
    modes = model.site_modes(site)
    if not modes:
        return np.full(np.shape(freq_hz), model._gain(site), dtype=complex)
    return sum(m.strain_gain * m.response(freq_hz) for m in modes)


def ac_strain_amplitude(model: ActuatorModel, site: str, v_ac: float, freq_hz: float) -> float:
    """Peak uniaxial strain amplitude (device X) for a sinusoidal drive."""
    if freq_hz < 0:
        raise ValueError("drive frequency must be >= 0")
    return float(v_ac * np.abs(transfer(model, site, freq_hz)))


def switching_energy(model: ActuatorModel, v_ac: float) -> float:
    """Energy (J) dissipated in one -V_ac -> +V_ac traversal."""
    if v_ac < 0:
        raise ValueError("v_ac must be >= 0")
    return model.loss_factor * model.capacitance_f * v_ac**2


def dissipated_power(model: ActuatorModel, v_ac: float, freq_hz: float) -> float:
    """Average AC power (W): switching energy times cycles per second."""
    if not freq_hz > 0:
        raise ValueError("drive frequency must be positive")
    return switching_energy(model, v_ac) * freq_hz


def hold_power(model: ActuatorModel, v_dc: float) -> float:
    """Static leakage power (W) through the ohmic leak resistance."""
    return v_dc**2 / model.leak_resistance_ohm
