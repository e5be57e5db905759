"""Acoustically driven spin control: pumping, Rabi mixing and readout.

Populations are tracked as a 2-vector ``(p1, p2)`` over the two lowest
ground states. Optical steps are instantaneous projections; acoustic steps
apply the closed-form two-level flip probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SequenceOrderError

CONVENTIONS = ("as-printed", "sqrt-n")


@dataclass(frozen=True)
class SpinQubit:
    splitting_ghz: float
    g_sm_hz: float
    init_fidelity: float = 0.9
    readout_contrast: float = 1.0
    background: float = 0.0

    def __post_init__(self):
        if not self.splitting_ghz > 0:
            raise ValueError("qubit splitting must be positive")
        if self.g_sm_hz < 0:
            raise ValueError("g_sm must be >= 0")
        if not 0.0 <= self.init_fidelity <= 1.0:
            raise ValueError("init_fidelity must lie in [0, 1]")
        if self.readout_contrast < 0 or self.background < 0:
            raise ValueError("readout contrast and background must be >= 0")

    @property
    def splitting_hz(self) -> float:
        return self.splitting_ghz * 1e9


@dataclass(frozen=True)
class AcousticPulse:
    omega_d_hz: float
    phonon_number: float
    duration_s: float

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError("pulse duration must be positive")
        if self.phonon_number < 0:
            raise ValueError("phonon number must be >= 0")
        if self.omega_d_hz < 0:
            raise ValueError("drive frequency must be >= 0")


@dataclass(frozen=True)
class Pump:
    pass


@dataclass(frozen=True)
class Acoustic:
    pulse: AcousticPulse


@dataclass(frozen=True)
class Readout:
    pass


def acoustic_rabi_frequency(g_sm_hz: float, phonon_number: float, convention: str = "as-printed") -> float:
    """Rabi frequency (Hz) of the acoustically driven spin transition."""
    if g_sm_hz < 0:
        raise ValueError("g_sm must be >= 0")
    if phonon_number < 0:
        raise ValueError("phonon number must be >= 0")
    if convention == "as-printed":
        return 2.0 * g_sm_hz * phonon_number
    if convention == "sqrt-n":
        return 2.0 * g_sm_hz * math.sqrt(phonon_number)
    raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")


def rabi_flip_probability(rabi_hz, detuning_hz, duration_s, damping_time_s=None):
    """Two-level flip probability after a square pulse.

    With ``damping_time_s`` the oscillating part decays as exp(-t/T) towards
    half the resonant amplitude. Vectorized over ``detuning_hz``.
    """
    if np.any(np.asarray(duration_s) < 0):
        raise ValueError("duration must be >= 0")
    rabi = np.asarray(rabi_hz, dtype=float)
    det = np.asarray(detuning_hz, dtype=float)
    gen2 = rabi**2 + det**2
    amp = np.divide(rabi**2, gen2, out=np.zeros(np.broadcast(rabi, det).shape), where=gen2 > 0)
    phase = 2.0 * np.pi * np.sqrt(gen2) * duration_s
    if damping_time_s is None:
        p = amp * np.sin(0.5 * phase) ** 2
    else:
        p = amp * 0.5 * (1.0 - np.exp(-duration_s / damping_time_s) * np.cos(phase))
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def _mix(pops, p_flip):
    p1, p2 = pops
    return (p1 * (1.0 - p_flip) + p2 * p_flip, p2 * (1.0 - p_flip) + p1 * p_flip)


def simulate_pulse_sequence(qubit: SpinQubit, sequence, convention: str = "as-printed",
                            damping_time_s=None) -> list[float]:
    """Expected counts at each readout of ``sequence``.

    A pump leaves ``init_fidelity`` in |2>; an acoustic step mixes the pair
    with the flip probability at detuning ``omega_d - splitting``; a readout
    yields ``background + readout_contrast * p1`` and repumps.
    """
    steps = list(sequence)
    if not steps:
        raise SequenceOrderError("empty pulse sequence")
    pumped = False
    pops = (0.5, 0.5)
    counts = []
    pumped_state = (1.0 - qubit.init_fidelity, qubit.init_fidelity)
    for i, step in enumerate(steps):
        if isinstance(step, Pump):
            pops, pumped = pumped_state, True
        elif isinstance(step, Acoustic):
            pulse = step.pulse
            rabi = acoustic_rabi_frequency(qubit.g_sm_hz, pulse.phonon_number, convention)
            p = rabi_flip_probability(rabi, pulse.omega_d_hz - qubit.splitting_hz, pulse.duration_s,
                                      damping_time_s)
            pops = _mix(pops, p)
        elif isinstance(step, Readout):
            if not pumped:
                raise SequenceOrderError(f"readout at step {i} is not preceded by a pump")
            counts.append(qubit.background + qubit.readout_contrast * pops[0])
            pops = pumped_state
        else:
            raise SequenceOrderError(f"unknown step {step!r} at position {i}")
    return counts


def simulate_odmr_sweep(qubit: SpinQubit, pulse_template: AcousticPulse, omega_range_hz,
                        convention: str = "as-printed", damping_time_s=None):
    """Counts for pump -> acoustic(omega_d) -> readout over ``omega_range_hz``.

    Returns ``(omega_hz, counts)``. The curve peaks at the qubit splitting.
    """
    omega = np.asarray(omega_range_hz, dtype=float)
    if omega.ndim != 1 or omega.size == 0 or np.any(np.diff(omega) <= 0):
        raise ValueError("omega range must be a non-empty ascending 1-D array")
    rabi = acoustic_rabi_frequency(qubit.g_sm_hz, pulse_template.phonon_number, convention)
    p = rabi_flip_probability(rabi, omega - qubit.splitting_hz, pulse_template.duration_s, damping_time_s)
    f = qubit.init_fidelity
    # same bookkeeping as simulate_pulse_sequence, vectorized
    p1 = (1.0 - f) * (1.0 - p) + f * p
    return omega, qubit.background + qubit.readout_contrast * p1
