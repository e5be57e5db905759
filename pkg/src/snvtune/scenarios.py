"""End-to-end scenarios: each runs a module chain and writes CSV curves plus a summary.

Every scenario is a function ``(ctx) -> (summary, checks)`` that writes its
files through ``ctx``. Outputs are staged and moved into place only when the
scenario completes, so a failed run leaves no partial files.
"""
from __future__ import annotations

import math
import os
import shutil
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import records
from .actuator import dissipated_power, hold_power, switching_energy
from .config import DeviceConfig
from .device import (
    MHZ_IN_GHZ,
    axial_strain,
    build_actuator,
    build_emitter,
    build_network,
    emitter_delta_ac,
    emitter_delta_dc,
    emitter_strain,
    line_susceptibility,
    spin_params,
    spin_zpf,
)
from .errors import SnvTuneError, UsageError
from .hamiltonian import g_orb, g_sm, g_sm_field_sweep, spin_transition_frequency
from .photonics.network import insertion_loss_db, route
from .photonics.streams import expected_g2_zero, g2_histogram, g2_zero, simulate_photon_streams
from .photonics.switch import SingleMZI, optimize_extinction
from .spectroscopy.bessel import bessel_j
from .spectroscopy.fit import extract_delta_ac, fit_linear, fit_lorentzian, fit_sideband_comb, phonon_number
from .spectroscopy.synth import PLESpectrum, modulation_index, synth_sidebands, synth_slow_modulation, synth_static
from .spin import Acoustic, AcousticPulse, Pump, Readout, SpinQubit, acoustic_rabi_frequency, \
    simulate_odmr_sweep, simulate_pulse_sequence

SCENARIOS = (
    "dc-tuning", "ac-broadening", "resonance-enhancement", "sideband-comb", "phonon-number",
    "spin-odmr", "gsm-sweep", "power-budget", "route-and-switch", "g2",
)

# noise substreams (Philox key high word)
_NOISE_STREAM = {"dc-tuning": 1, "sideband-comb": 2, "g2": 3}


class ScenarioFailure(SnvTuneError):
    """A module error raised inside a scenario, with the scenario name attached."""

    def __init__(self, scenario: str, cause: Exception):
        self.scenario = scenario
        self.cause = cause
        super().__init__(f"scenario {scenario!r} failed: {type(cause).__name__}: {cause}")


@dataclass
class ScenarioResult:
    name: str
    inputs: dict
    manifest: list
    summary: dict
    checks: list = field(default_factory=list)
    out_dir: str | None = None

    def to_dict(self) -> dict:
        return {"scenario": self.name, "inputs": self.inputs, "manifest": self.manifest,
                "summary": self.summary, "checks": self.checks}


def check(name: str, value, target: str, passed: bool) -> dict:
    return {"name": name, "value": value, "target": target, "pass": bool(passed)}


class _Context:
    def __init__(self, name, config: DeviceConfig, params: dict, seed: int, stage: Path):
        self.name = name
        self.config = config
        self.params = params
        self.seed = seed
        self.stage = stage
        self.files = []

    def csv(self, fname, header, rows):
        records.write_csv(self.stage / fname, header, rows)
        self.files.append(fname)

    def spectrum(self, fname, spec: PLESpectrum):
        records.write_spectrum(self.stage / fname, spec)
        self.files.append(fname)

    def rng(self, offset: int = 0) -> np.random.Generator:
        stream = (_NOISE_STREAM.get(self.name, 0) << 16) + offset
        return np.random.Generator(np.random.Philox(key=self.seed | (stream << 64)))


def _grid(center, halfwidth_mhz, points):
    return center + np.linspace(-1.0, 1.0, int(points)) * halfwidth_mhz * MHZ_IN_GHZ


def _poisson(ctx, spec: PLESpectrum, offset: int) -> PLESpectrum:
    counts = ctx.rng(offset).poisson(spec.signal).astype(float)
    return PLESpectrum(spec.detuning, counts, spec.meta)


# scenarios -----------------------------------------------------------------------

def _dc_tuning(ctx):
    p = ctx.params
    volts = np.arange(p["v_min"], p["v_max"] + 0.5 * p["v_step"], p["v_step"])
    rows, summary, checks = [], {"emitters": {}}, []
    for ei, eid in enumerate(p["emitters"]):
        em = build_emitter(ctx.config, eid)
        act = build_actuator(ctx.config, em.actuator)
        xs, ys, sig = [], [], []
        for vi, v in enumerate(volts):
            defl, _ = emitter_strain(em, act, v)
            shift = emitter_delta_dc(em, act, v)
            ezz = axial_strain(em, act, v)
            grid = _grid(shift.exact_ghz, p["scan_halfwidth_mhz"], p["scan_points"])
            clean = synth_static(shift.exact_ghz, em.linewidth_ghz, p["peak_counts"], p["background_counts"], grid)
            fit = fit_lorentzian(_poisson(ctx, clean, ei * 1000 + vi))
            rows.append((eid, v, defl, ezz, shift.exact_ghz, shift.approx_ghz, fit.center, fit.center_err))
            xs.append(ezz * 1e6)
            ys.append(fit.center)
            sig.append(fit.center_err)
        info = {
            "orientation": em.orientation.kind,
            "delta_dc_at_vmax_ghz": emitter_delta_dc(em, act, p["v_max"]).exact_ghz,
            "delta_dc_at_vmin_ghz": emitter_delta_dc(em, act, p["v_min"]).exact_ghz,
        }
        if len(set(xs)) > 1:
            lf = fit_linear(xs, ys, sig)
            straggle = em.strain_rel_uncertainty * abs(lf.slope)
            info["slope_phz"] = lf.slope
            info["slope_stat_err_phz"] = lf.slope_err
            info["slope_err_phz"] = math.hypot(lf.slope_err, straggle)
            info["model_delta_t_par_phz"] = em.params.delta_t_par_phz
        summary["emitters"][eid] = info
    hi = ctx.config.emitter_record(p["high_strain_emitter"])
    act = build_actuator(ctx.config, hi["actuator"])
    tuning = summary["emitters"][p["high_strain_emitter"]]["delta_dc_at_vmax_ghz"]
    summary["high_strain_emitter"] = p["high_strain_emitter"]
    summary["tuning_at_vmax_ghz"] = tuning
    summary["hold_power_at_vmax_w"] = hold_power(act, p["v_max"])
    ctx.csv("dc_tuning.csv", ["emitter", "v_dc", "deflection_nm", "eps_zz", "delta_dc_exact_ghz",
                              "delta_dc_approx_ghz", "delta_dc_fit_ghz", "delta_dc_fit_err_ghz"], rows)
    checks.append(check("tuning range", abs(tuning), ">= 20 GHz", abs(tuning) >= 20.0))
    checks.append(check("hold power", summary["hold_power_at_vmax_w"], "<= 1 nW",
                        summary["hold_power_at_vmax_w"] <= 1e-9))
    return summary, checks


def _ac_broadening(ctx):
    p = ctx.params
    em = build_emitter(ctx.config, p["emitter"])
    act = build_actuator(ctx.config, em.actuator)
    out = {}
    for f in p["freq_mhz"]:
        dac = emitter_delta_ac(em, act, p["v_ac"], f * 1e6)
        grid = _grid(0.0, p["scan_halfwidth_mhz"], p["scan_points"])
        spec = synth_slow_modulation(0.0, em.linewidth_ghz, dac, grid)
        est = extract_delta_ac(spec, gamma_ref=em.linewidth_ghz)
        ctx.spectrum(f"ple_{f:g}mhz.csv", spec)
        out[f"{f:g}"] = {"delta_ac_model_ghz": dac, "delta_ac_extracted_ghz": est.value,
                         "uncertainty_ghz": est.uncertainty, "method": est.method}
    return {"emitter": em.id, "v_ac": p["v_ac"], "by_freq_mhz": out}, []


def _resonance_enhancement(ctx):
    p = ctx.params
    em = build_emitter(ctx.config, p["emitter"])
    act = build_actuator(ctx.config, em.actuator)
    lo, hi, n = p["sweep_mhz"]
    freqs = np.geomspace(lo, hi, int(n))
    chi = line_susceptibility(em, act.poisson_ratio)
    rows = [(f, emitter_delta_ac(em, act, p["v_ac"], f * 1e6, chi)) for f in freqs]
    ctx.csv("delta_ac_vs_freq.csv", ["freq_mhz", "delta_ac_ghz"], rows)
    on = emitter_delta_ac(em, act, p["v_ac"], p["on_mhz"] * 1e6)
    off = emitter_delta_ac(em, act, p["v_ac"], p["off_mhz"] * 1e6)
    ratio = on / off
    checks = [
        check("enhancement ratio", ratio, "in [15, 25]", 15.0 <= ratio <= 25.0),
        check("on-resonance delta_ac", on, "1.9 GHz +- 10%", abs(on - 1.9) <= 0.19),
    ]
    return {"emitter": em.id, "v_ac": p["v_ac"], "delta_ac_on_ghz": on, "delta_ac_off_ghz": off,
            "ratio": ratio}, checks


def _comb_spectrum(ctx, em, act, v, p, noise_offset=None):
    f_ghz = p["freq_mhz"] * MHZ_IN_GHZ
    beta = modulation_index(emitter_delta_ac(em, act, v, p["freq_mhz"] * 1e6), f_ghz)
    grid = _grid(0.0, p["scan_halfwidth_mhz"], p["scan_points"])
    spec = synth_sidebands(0.0, em.linewidth_ghz, beta, f_ghz, grid,
                           amplitude=p.get("peak_counts", 1.0), baseline=p.get("background_counts", 0.0))
    if noise_offset is not None:
        spec = _poisson(ctx, spec, noise_offset)
    return beta, spec


def _sideband_comb(ctx):
    p = ctx.params
    em = build_emitter(ctx.config, p["emitter"])
    act = build_actuator(ctx.config, em.actuator)
    f_ghz = p["freq_mhz"] * MHZ_IN_GHZ
    rows = []
    for i, v in enumerate(p["v_ac"]):
        beta, spec = _comb_spectrum(ctx, em, act, v, p, noise_offset=i)
        ctx.spectrum(f"comb_{v:g}v.csv", spec)
        fit = fit_sideband_comb(spec, f_ghz)
        rows.append((v, beta, fit.beta, fit.beta_err, bessel_j(0, fit.beta) ** 2, bessel_j(1, fit.beta) ** 2))
    ctx.csv("sideband_fits.csv", ["v_ac", "beta_model", "beta_fit", "beta_err", "carrier_weight",
                                  "first_sideband_weight"], rows)
    fitted = [r[2] for r in rows]
    monotone = all(b2 > b1 for b1, b2 in zip(fitted, fitted[1:]))
    return ({"emitter": em.id, "freq_mhz": p["freq_mhz"], "beta_fit": fitted, "beta_monotone": monotone},
            [check("beta grows with v_ac", monotone, "monotone", monotone)])


def _phonon_number(ctx):
    p = ctx.params
    em = build_emitter(ctx.config, p["emitter"])
    act = build_actuator(ctx.config, em.actuator)
    beta_model, spec = _comb_spectrum(ctx, em, act, p["v_ac"], p)
    ctx.spectrum("comb.csv", spec)
    fit = fit_sideband_comb(spec, p["freq_mhz"] * MHZ_IN_GHZ)
    g = p.get("g_orb_hz") or g_orb(em.params, em.zpf_snv)
    conv = ctx.config.settings.get("modulation_index_convention", "as-printed")
    n = phonon_number(fit.beta, p["freq_mhz"] * 1e6, g, conv)
    return ({"emitter": em.id, "beta_model": beta_model, "beta_fit": fit.beta, "g_orb_hz": g,
             "convention": conv, "phonon_number": n},
            [check("phonon number order", n, "~1e5", 1e4 <= n <= 1e6)])


def _spin_setup(config):
    spin = config.data["spin"]
    params = spin_params(config)
    b = np.asarray(spin["field_t"], dtype=float)
    return spin, params, b, spin_zpf(config)


def _spin_odmr(ctx):
    spin, params, b, zpf = _spin_setup(ctx.config)
    split = spin_transition_frequency(params, b)
    gsm = g_sm(params, zpf, b)
    qubit = SpinQubit(split, gsm, spin.get("init_fidelity", 0.9), spin.get("readout_contrast", 1.0),
                      spin.get("background", 0.0))
    pulse = AcousticPulse(split * 1e9, spin.get("phonon_number", 1e5), spin.get("pulse_ns", 150.0) * 1e-9)
    lo, hi, step = spin["sweep_mhz"]
    omega = np.arange(lo, hi + 0.5 * step, step) * 1e6
    conv = ctx.config.settings.get("modulation_index_convention", "as-printed")
    damping = spin.get("damping_time_ns")
    damping = damping * 1e-9 if damping else None
    w, counts = simulate_odmr_sweep(qubit, pulse, omega, conv, damping)
    ctx.csv("odmr.csv", ["omega_mhz", "counts"], zip(w / 1e6, counts))
    peak = float(w[int(np.argmax(counts))] / 1e6)
    seq = simulate_pulse_sequence(qubit, [Pump(), Readout(), Pump(), Acoustic(pulse), Readout()], conv, damping)
    rabi = acoustic_rabi_frequency(gsm, pulse.phonon_number, conv)
    split_mhz = split * 1e3
    checks = [
        check("odmr peak at splitting", peak, f"{split_mhz:.3f} MHz +- {step} MHz",
              abs(peak - split_mhz) <= step),
        check("qubit splitting", split_mhz, "in [500, 650] MHz", 500.0 <= split_mhz <= 650.0),
    ]
    return ({"splitting_mhz": split_mhz, "g_sm_hz": gsm, "rabi_hz": rabi, "peak_mhz": peak,
             "grid_step_mhz": step, "sequence_counts": seq}, checks)


def _interior_max(fields, vals):
    i = int(np.argmax(vals))
    return 0 < i < len(vals) - 1, float(fields[i]), float(vals[i])


def _gsm_sweep(ctx):
    spin, params, b, zpf = _spin_setup(ctx.config)
    sweep = spin["field_sweep_t"]
    fields = np.geomspace(sweep[0], sweep[1], int(sweep[2])) if len(sweep) == 3 else np.asarray(sweep)
    direction = b / np.linalg.norm(b)
    _, with_pre = g_sm_field_sweep(params, zpf, fields, direction)
    bare = params.with_prestrain(0.0, 0.0)
    _, without = g_sm_field_sweep(bare, zpf, fields, direction)
    ctx.csv("gsm_sweep.csv", ["field_t", "g_sm_prestrain_hz", "g_sm_no_prestrain_hz"],
            zip(fields, with_pre, without))
    gorb = g_orb(params, zpf)
    interior, b_max, g_max = _interior_max(fields, with_pre)
    monotone = bool(np.all(np.diff(without) >= -1e-9 * gorb))
    bounded = bool(np.all(without <= gorb * (1 + 1e-6)))
    g_at = g_sm(params, zpf, b)
    checks = [
        check("g_sm at fixture field", g_at, "in [256, 768] Hz", 256.0 <= g_at <= 768.0),
        check("interior maximum", {"field_t": b_max, "g_sm_hz": g_max}, "4 kHz +- 50% at 0.3 +- 0.1 T",
              interior and 2000.0 <= g_max <= 6000.0 and 0.2 <= b_max <= 0.4),
        check("no pre-strain monotone and bounded", {"monotone": monotone, "bounded": bounded},
              "monotone, <= g_orb", monotone and bounded),
    ]
    return ({"g_orb_hz": gorb, "g_sm_at_field_hz": g_at, "field_t": b.tolist(), "max_field_t": b_max,
             "max_g_sm_hz": g_max, "interior_maximum": interior, "no_prestrain_monotone": monotone,
             "no_prestrain_bounded": bounded}, checks)


def _power_budget(ctx):
    p = ctx.params
    act = build_actuator(ctx.config, p["actuator"])
    rows = []
    for v, f in p["points"]:
        rows.append((v, f, dissipated_power(act, v, f * 1e6), switching_energy(act, v)))
    ctx.csv("power.csv", ["v_ac", "freq_mhz", "power_w", "switching_energy_j"], rows)
    hold = hold_power(act, p["hold_v"])
    p0, p1 = rows[0][2], rows[1][2]
    checks = [
        check("power at first point", p0, "0.4 nW +- 20%", abs(p0 - 0.4e-9) <= 0.08e-9),
        check("power at second point", p1, "< 0.5 uW", p1 < 0.5e-6),
        check("hold power", hold, "<= 1 nW", hold <= 1e-9),
    ]
    return {"points": [list(r) for r in rows], "hold_power_w": hold}, checks


def _route_and_switch(ctx):
    p = ctx.params
    net_cfg = ctx.config.data["network"]
    net = build_network(net_cfg)
    stray = net_cfg.get("stray_power", 0.0)
    rows = []
    for ch in net.inputs:
        for out in ("A", "B"):
            if out not in net.outputs:
                continue
            s = route(net, ch, out)
            rows.append((ch, out, insertion_loss_db(net, ch, out, s)))
    ctx.csv("routes.csv", ["channel", "output", "insertion_loss_db"], rows)
    ext = {}
    for name, el in net.elements.items():
        r = optimize_extinction(el.device, stray_power=stray)
        ext[name] = r.extinction_db
        if len(el.device.ratios) == 4:
            r1, r2 = el.device.ratios[:2]
            ext[f"{name}.single"] = optimize_extinction(SingleMZI(r1, r2), stray_power=stray).extinction_db

    em = build_emitter(ctx.config, p["emitter"])
    act = build_actuator(ctx.config, em.actuator)
    s = route(net, em.channel, p["output"])
    frac = float(net.power_matrix(s)[net.outputs.index(p["output"]), net.inputs.index(em.channel)])
    f_ghz = p["freq_mhz"] * MHZ_IN_GHZ
    spectra = {}
    for v in p["v_ac"]:
        beta, spec = _comb_spectrum(ctx, em, act, v, p)
        spec = PLESpectrum(spec.detuning, frac * spec.signal, spec.meta)
        ctx.spectrum(f"{em.id}_{p['output']}_{v:g}v.csv", spec)
        visible = [k for k in (1, 2) if bessel_j(k, beta) ** 2 >= 0.05]
        spectra[f"{v:g}"] = {"beta": beta, "visible_sidebands_ghz": [k * f_ghz for k in visible]}
    worst = max(r[2] for r in rows)
    checks = [check("worst routed insertion loss", worst, "< 0.1 dB", worst < 0.1)]
    return ({"extinction_db": ext, "routed_fraction": frac, "comb": spectra}, checks)


def _beamsplitter_settings(net, channel):
    s = route(net, channel, "A")
    final = [el for el in net.elements.values() if any(
        net.edges.get(o) == f"{el.name}.out0" for o in ("A", "B"))]
    if final:
        s[final[0].phase_keys[0]] = 0.5 * np.pi
    return s


def _g2(ctx):
    p = ctx.params
    cfg = ctx.config
    net = build_network(cfg.data["network"])
    detectors = tuple(cfg.data["network"].get("detectors", ["A", "B"]))
    dead = cfg.settings.get("detector_dead_time_ns", 50.0) * 1e-9
    jitter = cfg.settings.get("detector_jitter_ns", 0.0) * 1e-9
    by_channel = {e["channel"]: e["id"] for e in cfg.data["emitters"] if "channel" in e}
    out, checks = {}, []
    for ci, ch in enumerate(p["channels"]):
        em = build_emitter(cfg, by_channel[ch])
        s = _beamsplitter_settings(net, ch)
        pm = net.power_matrix(s)
        j = net.inputs.index(ch)
        routing = {ch: {d: float(pm[net.outputs.index(d), j]) for d in detectors}}
        recs = simulate_photon_streams([em.source], routing, detectors, p["duration_s"],
                                       ctx.seed + ci, dead, jitter)
        if p.get("write_photons", False):
            rows = sorted(((r.detector, t * 1e9) for r in recs for t in r.timestamps), key=lambda x: x[1])
            ctx.csv(f"photons_{ch}.csv", ["detector", "timestamp_ns"], rows)
        hist = g2_histogram(recs[0], recs[1], p["bin_ns"] * 1e-9, p["range_ns"] * 1e-9)
        ctx.csv(f"g2_{ch}.csv", ["tau_ns", "counts", "normalized"],
                zip(hist.tau_s * 1e9, hist.counts, hist.normalized))
        g, err = g2_zero(hist)
        expect = expected_g2_zero(em.source.rho)
        out[ch] = {"emitter": em.id, "rho": em.source.rho, "g2_zero": g, "g2_zero_err": err,
                   "expected": expect, "split": routing[ch]}
        checks.append(check(f"g2(0) {ch}", g, f"{expect:.3f} +- 3 sigma", abs(g - expect) <= 3 * err))
    return out, checks


_RUNNERS = {
    "dc-tuning": _dc_tuning,
    "ac-broadening": _ac_broadening,
    "resonance-enhancement": _resonance_enhancement,
    "sideband-comb": _sideband_comb,
    "phonon-number": _phonon_number,
    "spin-odmr": _spin_odmr,
    "gsm-sweep": _gsm_sweep,
    "power-budget": _power_budget,
    "route-and-switch": _route_and_switch,
    "g2": _g2,
}


def run_scenario(name: str, config: DeviceConfig, overrides: dict | None = None, seed: int | None = None,
                 out_dir=None) -> ScenarioResult:
    """Run one scenario and, if ``out_dir`` is given, write its files there.

    ``overrides`` update the scenario's parameter block from the config.
    """
    if name not in _RUNNERS:
        raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    params = config.scenario_defaults(name)
    params.update(overrides or {})
    seed = int(config.settings.get("seed", 0) if seed is None else seed)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=f".{name}.", dir=out_dir))
    else:
        stage = Path(tempfile.mkdtemp(prefix=f"snvtune-{name}-"))
    ctx = _Context(name, config, params, seed, stage)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            summary, checks = _RUNNERS[name](ctx)
        result = ScenarioResult(name, {"params": params, "seed": seed}, sorted(ctx.files + ["summary.json"]),
                                summary, checks)
        records.write_json(stage / "summary.json", result.to_dict())
        if out_dir is not None:
            final = Path(out_dir)
            for fname in result.manifest:
                os.replace(stage / fname, final / fname)
            result.out_dir = str(final)
    except SnvTuneError as exc:
        if isinstance(exc, (UsageError, ScenarioFailure)):
            raise
        raise ScenarioFailure(name, exc) from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise ScenarioFailure(name, exc) from exc
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return result
