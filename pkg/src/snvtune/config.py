"""Device configuration: loading, validation, overrides and serialization.

A config is a single JSON document with a ``version`` field. Frequencies are
written in MHz; everything is converted to the internal GHz/Hz units only
when domain objects are built (see :mod:`snvtune.device`).
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError, SnvTuneError, UsageError, VersionError

SCHEMA_VERSION = 1
CONFIG_ENV = "SNVTUNE_CONFIG"

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_VOIGT = {"type": "array", "items": _NUM, "minItems": 6, "maxItems": 6}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}
_STRAIN = {
    "type": "object",
    "required": ["frame", "voigt"],
    "properties": {
        "frame": {"enum": ["device", "snv-axial", "snv-transverse"]},
        "voigt": _VOIGT,
    },
    "additionalProperties": False,
}

_SNV_PARAM_KEYS = {
    "lambda_g_mhz": _POS, "lambda_u_mhz": _POS,
    "t_par_g_phz": _NUM, "t_perp_g_phz": _NUM, "t_par_u_phz": _NUM, "t_perp_u_phz": _NUM,
    "d_g_phz": _NUM, "f_g_phz": _NUM, "d_u_phz": _NUM, "f_u_phz": _NUM,
    "gamma_s_mhz_per_t": _POS, "gamma_l_mhz_per_t": _NUM,
    "q": {"type": "number", "minimum": 0, "maximum": 1},
    "prestrain_egx_mhz": _NUM, "prestrain_egy_mhz": _NUM,
    "prestrain_mode": {"enum": ["eg-magnitude", "orbital-splitting"]},
}
_SNV_PARAMS = {"type": "object", "properties": _SNV_PARAM_KEYS, "additionalProperties": False}

_MODE = {
    "type": "object",
    "required": ["frequency_mhz", "quality_factor", "fraction"],
    "properties": {
        "frequency_mhz": _POS,
        "quality_factor": {"type": "number", "minimum": 1},
        "fraction": _NUM,
    },
    "additionalProperties": False,
}

_SOURCE = {
    "type": "object",
    "required": ["lifetime_ns", "signal_rate_hz", "background_rate_hz"],
    "properties": {
        "lifetime_ns": _POS,
        "signal_rate_hz": _NONNEG,
        "background_rate_hz": _NONNEG,
    },
    "additionalProperties": False,
}

_EMITTER = {
    "type": "object",
    "required": ["id", "dipole", "depth_nm", "actuator", "strain_gain_per_v", "zpf"],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "dipole": {"type": "array", "items": {"type": "integer"}, "minItems": 3, "maxItems": 3},
        "depth_nm": _POS,
        "depth_straggle_nm": _NONNEG,
        "straggle_gain_per_nm": _NONNEG,
        "actuator": {"type": "string"},
        "strain_gain_per_v": _NUM,
        "zpf": _STRAIN,
        "params": _SNV_PARAMS,
        "modes": {"type": "array", "items": _MODE},
        "channel": {"type": "string"},
        "source": _SOURCE,
        "linewidth_mhz": _POS,
    },
    "additionalProperties": False,
}

_ACTUATOR = {
    "type": "object",
    "required": ["id", "dc_deflection_gain_nm_per_v", "capacitance_f", "loss_factor",
                 "leak_resistance_ohm", "max_voltage_v"],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "dc_deflection_gain_nm_per_v": _NUM,
        "capacitance_f": _POS,
        "loss_factor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "leak_resistance_ohm": _POS,
        "max_voltage_v": _POS,
        "poisson_ratio": {"type": "number", "minimum": 0, "maximum": 0.5},
    },
    "additionalProperties": False,
}

_NETWORK = {
    "type": "object",
    "required": ["inputs", "outputs", "elements", "edges"],
    "properties": {
        "inputs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "outputs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "elements": {"type": "array", "items": {
            "type": "object",
            "required": ["name", "type"],
            "properties": {
                "name": {"type": "string"},
                "type": {"enum": ["mzi", "dcps"]},
                "ratios": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
                "phases": {"type": "array", "items": {"type": "string"}},
            },
            "additionalProperties": False,
        }},
        "edges": {"type": "array", "items": {
            "type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2}},
        "phase_settings": {"type": "object", "additionalProperties": _NUM},
        "detectors": {"type": "array", "items": {"type": "string"}},
        "stray_power": _NONNEG,
    },
    "additionalProperties": False,
}

_SPIN = {
    "type": "object",
    "required": ["emitter", "prestrain_mhz", "field_t", "zpf"],
    "properties": {
        "emitter": {"type": "string"},
        "prestrain_mhz": _NONNEG,
        "prestrain_mode": {"enum": ["eg-magnitude", "orbital-splitting"]},
        "field_t": _VEC3,
        "zpf": _STRAIN,
        "init_fidelity": {"type": "number", "minimum": 0, "maximum": 1},
        "readout_contrast": _NONNEG,
        "background": _NONNEG,
        "pulse_ns": _POS,
        "phonon_number": _NONNEG,
        "sweep_mhz": {"type": "array", "items": _POS, "minItems": 3, "maxItems": 3},
        "field_sweep_t": {"type": "array", "items": _POS, "minItems": 2},
        "damping_time_ns": {"type": ["number", "null"], "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_SETTINGS = {
    "type": "object",
    "properties": {
        "modulation_index_convention": {"enum": ["as-printed", "sqrt-n"]},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "detector_dead_time_ns": _NONNEG,
        "detector_jitter_ns": _NONNEG,
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "snv_params", "emitters", "actuators", "network", "spin", "settings"],
    "properties": {
        "version": {"type": "integer"},
        "description": {"type": "string"},
        "snv_params": _SNV_PARAMS,
        "emitters": {"type": "array", "items": _EMITTER, "minItems": 1},
        "actuators": {"type": "array", "items": _ACTUATOR, "minItems": 1},
        "network": _NETWORK,
        "spin": _SPIN,
        "settings": _SETTINGS,
        "scenarios": {"type": "object", "additionalProperties": {"type": "object"}},
    },
    "additionalProperties": False,
}


@dataclass
class DeviceConfig:
    """Validated configuration document; domain objects are built on demand."""

    data: dict
    source: str | None = None

    def __eq__(self, other):
        return isinstance(other, DeviceConfig) and self.data == other.data

    @property
    def version(self) -> int:
        return self.data["version"]

    @property
    def settings(self) -> dict:
        return self.data["settings"]

    def emitter_record(self, emitter_id: str) -> dict:
        for rec in self.data["emitters"]:
            if rec["id"] == emitter_id:
                return rec
        raise KeyError(emitter_id)

    def actuator_record(self, actuator_id: str) -> dict:
        for rec in self.data["actuators"]:
            if rec["id"] == actuator_id:
                return rec
        raise KeyError(actuator_id)

    def scenario_defaults(self, name: str) -> dict:
        return copy.deepcopy(self.data.get("scenarios", {}).get(name, {}))


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def _semantic_checks(data: dict) -> list[tuple[str, str]]:
    from .device import build_network  # local: device imports config
    from .frames import classify_orientation

    out = []
    actuators = [a["id"] for a in data["actuators"]]
    for i, aid in enumerate(actuators):
        if actuators.count(aid) > 1:
            out.append((f"/actuators/{i}/id", f"duplicate actuator id {aid!r}"))
    ids = [e["id"] for e in data["emitters"]]
    for i, em in enumerate(data["emitters"]):
        base = f"/emitters/{i}"
        if ids.count(em["id"]) > 1:
            out.append((f"{base}/id", f"duplicate emitter id {em['id']!r}"))
        if em["actuator"] not in actuators:
            out.append((f"{base}/actuator",
                        f"emitter site {em['id']!r} references unknown actuator {em['actuator']!r}"))
        try:
            classify_orientation(em["dipole"])
        except SnvTuneError as exc:
            out.append((f"{base}/dipole", str(exc)))
        modes = em.get("modes", [])
        if modes and abs(sum(m["fraction"] for m in modes) - 1.0) > 1e-9:
            out.append((f"{base}/modes", "mode fractions must sum to 1 (quasi-static limit)"))
        if "channel" in em and em["channel"] not in data["network"]["inputs"]:
            out.append((f"{base}/channel", f"channel {em['channel']!r} is not a network input"))
    if data["spin"]["emitter"] not in ids:
        out.append(("/spin/emitter", f"unknown emitter {data['spin']['emitter']!r}"))
    try:
        net = build_network(data["network"])
    except SnvTuneError as exc:
        out.append(("/network", str(exc)))
    else:
        for j, det in enumerate(data["network"].get("detectors", [])):
            if det not in net.outputs:
                out.append((f"/network/detectors/{j}", f"{det!r} is not a network output"))
    return out


def validate(data: dict) -> DeviceConfig:
    """Check ``data`` against the schema and cross-references.

    Raises :class:`VersionError` on a version mismatch, otherwise a single
    :class:`ConfigError` listing every violation found.
    """
    if not isinstance(data, dict):
        raise ConfigError([("", "config must be a JSON object")])
    if "version" in data and data["version"] != SCHEMA_VERSION:
        raise VersionError(data["version"], SCHEMA_VERSION)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    violations = [(_pointer(e.absolute_path), e.message) for e in errors]
    if violations:
        raise ConfigError(violations)
    violations = _semantic_checks(data)
    if violations:
        raise ConfigError(violations)
    return DeviceConfig(copy.deepcopy(data))


def default_config_path() -> Path:
    env = os.environ.get(CONFIG_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("snvtune") / "data" / "default_device.json"))


def load_config(path=None, overrides=None) -> DeviceConfig:
    """Read, override and validate a config file (default: $SNVTUNE_CONFIG or the shipped fixture)."""
    path = Path(path) if path is not None else default_config_path()
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([("", f"cannot read {path}: {exc.strerror}")]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})")]) from None
    if overrides:
        data = apply_overrides(data, overrides)
    cfg = validate(data)
    cfg.source = str(path)
    return cfg


def serialize(config: DeviceConfig) -> str:
    return json.dumps(config.data, indent=2, sort_keys=True) + "\n"


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _step(node, key: str):
    if isinstance(node, list):
        if key.lstrip("-").isdigit():
            return int(key)
        for i, item in enumerate(node):
            if isinstance(item, dict) and (item.get("id") == key or item.get("name") == key):
                return i
        raise UsageError(f"no list entry with id {key!r}")
    return key


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.path=value`` overrides to a copy of ``data``.

    List entries can be addressed by index or by their ``id``/``name``
    (``emitters.SnV1.depth_nm=80``). Values are parsed as JSON when possible.
    """
    out = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        try:
            for part in parts[:-1]:
                node = node[_step(node, part)]
            node[_step(node, parts[-1])] = _parse_value(value)
        except (KeyError, IndexError, TypeError):
            raise UsageError(f"override path {key!r} does not exist") from None
    return out
