"""Domain objects built from a :class:`DeviceConfig`, and the tuning chain.

The chain maps a drive voltage to device strain (actuator), rotates it into
the emitter's frame, and evaluates the optical shift (Hamiltonian).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .actuator import ActuatorModel, MechanicalMode, ac_strain_amplitude, dc_response
from .config import DeviceConfig
from .frames import SnVOrientation, StrainTensor, classify_orientation, to_snv_frame, uniaxial_device_strain
from .hamiltonian import SnVParams, delta_dc
from .photonics.network import SwitchNetwork, compose_network
from .photonics.streams import EmitterSource

MHZ_IN_GHZ = 1e-3
SUSCEPTIBILITY_STEP = 1e-8  # device strain used for the numerical slope

_FREQ_KEYS = {
    "lambda_g_mhz": "lambda_g_ghz",
    "lambda_u_mhz": "lambda_u_ghz",
    "gamma_s_mhz_per_t": "gamma_s_ghz_per_t",
    "gamma_l_mhz_per_t": "gamma_l_ghz_per_t",
    "prestrain_egx_mhz": "prestrain_egx_ghz",
    "prestrain_egy_mhz": "prestrain_egy_ghz",
}


def params_from_record(record: dict, base: SnVParams | None = None) -> SnVParams:
    """SnVParams from a config block (MHz), layered over ``base``."""
    kw = {}
    for key, val in record.items():
        if key in _FREQ_KEYS:
            kw[_FREQ_KEYS[key]] = val * MHZ_IN_GHZ
        else:
            kw[key] = val
    return replace(base or SnVParams(), **kw)


def params_to_record(params: SnVParams) -> dict:
    inverse = {v: k for k, v in _FREQ_KEYS.items()}
    out = {}
    for key, val in params.to_dict().items():
        if key in inverse:
            out[inverse[key]] = val / MHZ_IN_GHZ
        else:
            out[key] = val
    return out


def strain_from_record(rec: dict) -> StrainTensor:
    return StrainTensor.from_voigt(rec["voigt"], rec["frame"])


@dataclass(frozen=True)
class Emitter:
    id: str
    orientation: SnVOrientation
    params: SnVParams
    actuator: str
    depth_nm: float
    depth_straggle_nm: float
    straggle_gain_per_nm: float
    zpf: StrainTensor  # device or SnV frame
    linewidth_ghz: float
    channel: str | None = None
    source: EmitterSource | None = None

    @property
    def zpf_snv(self) -> StrainTensor:
        return to_snv_frame(self.zpf, self.orientation)

    @property
    def strain_rel_uncertainty(self) -> float:
        """Relative strain uncertainty implied by the implantation depth straggle."""
        return self.straggle_gain_per_nm * self.depth_straggle_nm


def build_emitter(config: DeviceConfig, emitter_id: str) -> Emitter:
    rec = config.emitter_record(emitter_id)
    base = params_from_record(config.data["snv_params"])
    params = params_from_record(rec.get("params", {}), base)
    src = None
    if "source" in rec:
        s = rec["source"]
        src = EmitterSource(rec.get("channel", rec["id"]), s["lifetime_ns"], s["signal_rate_hz"],
                            s["background_rate_hz"])
    return Emitter(
        id=rec["id"],
        orientation=classify_orientation(rec["dipole"]),
        params=params,
        actuator=rec["actuator"],
        depth_nm=rec["depth_nm"],
        depth_straggle_nm=rec.get("depth_straggle_nm", 0.0),
        straggle_gain_per_nm=rec.get("straggle_gain_per_nm", 0.0),
        zpf=strain_from_record(rec["zpf"]),
        linewidth_ghz=rec.get("linewidth_mhz", 120.0) * MHZ_IN_GHZ,
        channel=rec.get("channel"),
        source=src,
    )


def build_actuator(config: DeviceConfig, actuator_id: str) -> ActuatorModel:
    rec = config.actuator_record(actuator_id)
    gains, modes = {}, {}
    for em in config.data["emitters"]:
        if em["actuator"] != actuator_id:
            continue
        g = em["strain_gain_per_v"]
        gains[em["id"]] = g
        modes[em["id"]] = [
            MechanicalMode(m["frequency_mhz"] * 1e6, m["quality_factor"], m["fraction"] * g)
            for m in em.get("modes", [])
        ]
    return ActuatorModel(
        dc_deflection_gain_nm_per_v=rec["dc_deflection_gain_nm_per_v"],
        dc_strain_gain=gains,
        modes=modes,
        capacitance_f=rec["capacitance_f"],
        loss_factor=rec["loss_factor"],
        leak_resistance_ohm=rec["leak_resistance_ohm"],
        max_voltage=rec["max_voltage_v"],
        poisson_ratio=rec.get("poisson_ratio", 0.0),
    )


def build_network(net: dict) -> SwitchNetwork:
    return compose_network(net)


def spin_params(config: DeviceConfig) -> SnVParams:
    """Parameters of the spin fixture emitter with the configured pre-strain along E_gx."""
    spin = config.data["spin"]
    p = build_emitter(config, spin["emitter"]).params
    return replace(p, prestrain_egx_ghz=spin["prestrain_mhz"] * MHZ_IN_GHZ, prestrain_egy_ghz=0.0,
                   prestrain_mode=spin.get("prestrain_mode", "eg-magnitude"))


def spin_zpf(config: DeviceConfig) -> StrainTensor:
    spin = config.data["spin"]
    eps = strain_from_record(spin["zpf"])
    if eps.frame == "device":
        eps = to_snv_frame(eps, build_emitter(config, spin["emitter"]).orientation)
    return eps


# tuning chain ------------------------------------------------------------------

def emitter_strain(emitter: Emitter, actuator: ActuatorModel, v_dc: float) -> tuple[float, StrainTensor]:
    """Deflection (nm) and SnV-frame strain at ``v_dc``."""
    defl, eps = dc_response(actuator, emitter.id, v_dc)
    return defl, to_snv_frame(eps, emitter.orientation)


def emitter_delta_dc(emitter: Emitter, actuator: ActuatorModel, v_dc: float):
    _, eps = emitter_strain(emitter, actuator, v_dc)
    return delta_dc(emitter.params, eps)


def line_susceptibility(emitter: Emitter, poisson_ratio: float = 0.0) -> float:
    """d(c-line)/d(device strain) at zero strain, GHz per unit strain."""
    h = SUSCEPTIBILITY_STEP

    def shift(e):
        eps = to_snv_frame(uniaxial_device_strain(e, poisson_ratio), emitter.orientation)
        return delta_dc(emitter.params, eps).exact_ghz

    return (shift(h) - shift(-h)) / (2.0 * h)


def emitter_delta_ac(emitter: Emitter, actuator: ActuatorModel, v_ac: float, freq_hz: float,
                     susceptibility: float | None = None) -> float:
    """Peak optical frequency excursion (GHz) under a sinusoidal drive.

    Linear response: |d(line)/d(strain)| times the AC strain amplitude.
    """
    if susceptibility is None:
        susceptibility = line_susceptibility(emitter, actuator.poisson_ratio)
    eps_ac = ac_strain_amplitude(actuator, emitter.id, v_ac, freq_hz)
    return float(abs(susceptibility) * eps_ac)


def axial_strain(emitter: Emitter, actuator: ActuatorModel, v_dc: float) -> float:
    """eps_z'z' (dipole-axis strain) at ``v_dc``."""
    return float(emitter_strain(emitter, actuator, v_dc)[1].components[2, 2])


def emitter_ids(config: DeviceConfig) -> list[str]:
    return [e["id"] for e in config.data["emitters"]]


def channel_emitters(config: DeviceConfig) -> dict:
    return {e["channel"]: e["id"] for e in config.data["emitters"] if "channel" in e}
