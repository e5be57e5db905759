"""Acceptance criteria for the shipped device fixture.

Each ``criterion_N`` returns a :class:`Criterion` whose ``checks`` list every
sub-condition with its measured value. ``run_all`` evaluates all ten.
"""
from __future__ import annotations

import filecmp
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import DeviceConfig, load_config
from .frames import StrainTensor
from .hamiltonian import (
    PHZ_IN_GHZ,
    SnVParams,
    build_manifold_hamiltonian,
    c_line_frequency,
    diagonalize,
    optical_transitions,
)
from .photonics.network import compose_network
from .photonics.streams import EmitterSource, expected_g2_zero, g2_histogram, g2_zero, simulate_photon_streams
from .photonics.switch import DoubleMZI, SingleMZI, optimize_extinction
from .scenarios import SCENARIOS, check, run_scenario
from .spectroscopy.bessel import bessel_j, sideband_weights
from .spectroscopy.fit import fit_sideband_comb, phonon_number
from .spectroscopy.synth import default_k_max, synth_sidebands
from .spin import acoustic_rabi_frequency

PROPERTY_DRAWS = 1000
G2_SEEDS = 20
G2_RHOS = (0.8, 0.917)  # g2(0) = 0.36 and 0.16
FIXTURE_RATIOS = (0.45, 0.55, 0.48, 0.52)
ROBUST_DRAWS = 20


@dataclass
class Criterion:
    number: int
    title: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}"

    def to_dict(self) -> dict:
        return {"criterion": self.number, "title": self.title, "pass": self.passed, "checks": self.checks}


def _cfg(config):
    return config if isinstance(config, DeviceConfig) else load_config(config)


def criterion_1(config=None) -> Criterion:
    r = run_scenario("dc-tuning", _cfg(config))
    c = Criterion(1, "susceptibility regression")
    for eid, centre, band in (("SnV1", -0.490, 0.075), ("SnV2", -0.436, 0.071)):
        s = r.summary["emitters"][eid]["slope_phz"]
        c.checks.append(check(f"{eid} slope", s, f"{centre} +- {band} PHz/strain", abs(s - centre) <= band))
    return c


def criterion_2(config=None) -> Criterion:
    r = run_scenario("dc-tuning", _cfg(config))
    return Criterion(2, "DC tuning range and hold power", r.checks)


def criterion_3(config=None) -> Criterion:
    r = run_scenario("resonance-enhancement", _cfg(config))
    return Criterion(3, "resonant enhancement", r.checks)


def criterion_4(config=None) -> Criterion:
    r = run_scenario("power-budget", _cfg(config))
    return Criterion(4, "power budget", [ch for ch in r.checks if ch["name"].startswith("power")])


def criterion_5(config=None) -> Criterion:
    c = Criterion(5, "sideband physics")
    grid = np.linspace(-5.0, 5.0, 2001)
    spec = synth_sidebands(0.0, 0.12, 1.0, 1.0, grid, amplitude=100.0, baseline=2.0)
    fit = fit_sideband_comb(spec, 1.0)
    c.checks.append(check("closure beta", fit.beta, "1.0 +- 1e-4", abs(fit.beta - 1.0) <= 1e-4))
    norm = min(float(sideband_weights(b, default_k_max(b))[1].sum()) for b in np.linspace(0.0, 2.0, 41))
    c.checks.append(check("sum J_k^2 (beta <= 2)", norm, ">= 0.999", norm >= 0.999))
    ratio = bessel_j(0, 2.4048) ** 2 / bessel_j(1, 2.4048) ** 2
    db = -10.0 * np.log10(ratio)
    c.checks.append(check("carrier null", db, "> 40 dB", db > 40.0))
    n = phonon_number(1.0, 1e9, 1e4)
    c.checks.append(check("phonon number", n, "1e5", abs(n - 1e5) <= 1e-6 * 1e5))
    return c


def criterion_6(config=None) -> Criterion:
    r = run_scenario("gsm-sweep", _cfg(config))
    return Criterion(6, "spin-phonon anchors", r.checks)


def criterion_7(config=None) -> Criterion:
    r = run_scenario("spin-odmr", _cfg(config))
    rabi = acoustic_rabi_frequency(512.0, 1e5, "as-printed")
    checks = list(r.checks) + [check("rabi arithmetic", rabi, ">= 100 MHz", rabi >= 100e6)]
    return Criterion(7, "acoustic ODMR", checks)


def _single_ceiling_grid(r1, r2, n=20000):
    theta = 2.0 * np.pi * np.arange(n) / n
    t1, k1, t2, k2 = np.sqrt(1 - r1), np.sqrt(r1), np.sqrt(1 - r2), np.sqrt(r2)
    # cross element of coupler(r2) diag(1, e^i theta) coupler(r1)
    cross = np.abs(1j * t2 * k1 + 1j * k2 * t1 * np.exp(1j * theta)) ** 2
    return 10.0 * np.log10(cross.max() / cross.min())


def criterion_8(config=None, seeds: int = G2_SEEDS) -> Criterion:
    c = Criterion(8, "photonics")
    rng = np.random.default_rng(8)
    fixture = FIXTURE_RATIOS
    d_fix = optimize_extinction(DoubleMZI(fixture)).extinction_db
    c.checks.append(check("dCPS extinction, fixture +-5% couplers", d_fix, "> 40 dB", d_fix > 40.0))
    worst = min(optimize_extinction(DoubleMZI(tuple(rng.uniform(0.45, 0.55, 4)))).extinction_db
                for _ in range(ROBUST_DRAWS))
    c.checks.append(check(f"dCPS extinction, worst of {ROBUST_DRAWS} random +-5% couplers", worst, "> 40 dB",
                          worst > 40.0))
    single = float(max(_single_ceiling_grid(fixture[0], fixture[1]),
                 optimize_extinction(SingleMZI(fixture[0], fixture[1])).extinction_db))
    c.checks.append(check("single-MZI ceiling (grid) below dCPS", single, f"< {d_fix:.1f} dB", single < d_fix))

    net_cfg = _cfg(config).data["network"]
    net = compose_network(net_cfg)
    err = 0.0
    for _ in range(50):
        settings = {k: float(v) for k, v in zip(net.phase_settings, rng.uniform(0, 2 * np.pi, len(net.phase_settings)))}
        m = net.transfer(settings)
        err = max(err, float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1])))))
    c.checks.append(check("network unitarity", err, "< 1e-10", err < 1e-10))

    for rho in G2_RHOS:
        signal = 2e5
        src = EmitterSource("ch", 5.0, signal, signal * (1.0 / rho - 1.0))
        vals, errs = [], []
        for seed in range(seeds):
            recs = simulate_photon_streams([src], {"ch": {"A": 0.5, "B": 0.5}}, ("A", "B"), 5.0, seed)
            g, e = g2_zero(g2_histogram(recs[0], recs[1], 1e-9, 100e-9))
            vals.append(g)
            errs.append(e)
        mean = float(np.mean(vals))
        sem = float(np.sqrt(np.sum(np.square(errs)))) / seeds
        target = expected_g2_zero(rho)
        c.checks.append(check(f"g2(0) rho={rho:.3f}", mean, f"{target:.3f} +- 3 sigma ({sem:.3f})",
                              abs(mean - target) <= 3.0 * sem))
    return c


def _random_params(rng) -> SnVParams:
    return SnVParams(
        lambda_g_ghz=rng.uniform(100, 2000), lambda_u_ghz=rng.uniform(500, 5000),
        t_par_g_phz=rng.uniform(-1, 1), t_perp_g_phz=rng.uniform(-1, 1),
        t_par_u_phz=rng.uniform(-1, 1), t_perp_u_phz=rng.uniform(-1, 1),
        d_g_phz=rng.uniform(0.1, 2), f_g_phz=rng.uniform(-2, 2),
        d_u_phz=rng.uniform(0.1, 2), f_u_phz=rng.uniform(-2, 2),
        gamma_s_ghz_per_t=rng.uniform(10, 40), gamma_l_ghz_per_t=rng.uniform(0, 30), q=rng.uniform(0, 1),
        prestrain_egx_ghz=rng.uniform(-1000, 1000), prestrain_egy_ghz=rng.uniform(-1000, 1000),
    )


def _random_strain(rng, scale=1e-4, frame="snv-axial") -> StrainTensor:
    return StrainTensor.from_voigt(rng.uniform(-scale, scale, 6), frame)


def criterion_9(config=None, draws: int = PROPERTY_DRAWS) -> Criterion:
    c = Criterion(9, "Hamiltonian property suite")
    rng = np.random.default_rng(9)
    fails = {"hermitian": 0, "kramers": 0, "trace": 0, "a1 common mode": 0, "slope": 0}
    for _ in range(draws):
        p = _random_params(rng)
        eps = _random_strain(rng)
        b = rng.uniform(-2, 2, 3)
        for man in ("ground", "excited"):
            h = build_manifold_hamiltonian(p, man, eps, b).matrix
            if np.max(np.abs(h - h.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(h))):
                fails["hermitian"] += 1
            vals = diagonalize(h).values
            if abs(vals.sum() - np.trace(h).real) > 1e-9 * max(1.0, np.max(np.abs(vals))):
                fails["trace"] += 1
            v0 = diagonalize(build_manifold_hamiltonian(p, man, eps)).values
            gap = 1e-9 * max(1.0, np.max(np.abs(v0)))
            if abs(v0[1] - v0[0]) > gap or abs(v0[3] - v0[2]) > gap:
                fails["kramers"] += 1
        # A1 strain shifts every line by the same amount
        a1 = rng.uniform(-1e-4, 1e-4)
        t0 = optical_transitions(p, eps, b).frequencies
        t1 = optical_transitions(p, eps + StrainTensor(np.diag([0.0, 0.0, a1]), eps.frame), b).frequencies
        d0, d1 = t0 - t0[0], t1 - t1[0]
        if np.max(np.abs(d1 - d0)) > 1e-6 * max(1.0, np.max(np.abs(d0))):
            fails["a1 common mode"] += 1
        # central difference along eps_z'z'
        h = 1e-7
        up = StrainTensor(np.diag([0.0, 0.0, h]), "snv-axial")
        dn = StrainTensor(np.diag([0.0, 0.0, -h]), "snv-axial")
        q = SnVParams(**{**p.to_dict(), "prestrain_egx_ghz": 0.0, "prestrain_egy_ghz": 0.0})
        slope = (c_line_frequency(q, up) - c_line_frequency(q, dn)) / (2 * h) / PHZ_IN_GHZ
        expect = q.delta_t_par_phz
        if abs(slope - expect) > 1e-3 * max(abs(expect), 1e-3):
            fails["slope"] += 1
    for name, n in fails.items():
        c.checks.append(check(f"{name} failures / {draws}", n, "0", n == 0))
    return c


def _tree_equal(a: Path, b: Path) -> bool:
    fa = sorted(p.name for p in a.iterdir())
    fb = sorted(p.name for p in b.iterdir())
    if fa != fb:
        return False
    return all(filecmp.cmp(a / f, b / f, shallow=False) for f in fa)


def criterion_10(config=None, scenarios=SCENARIOS) -> Criterion:
    cfg = _cfg(config)
    c = Criterion(10, "determinism")
    with tempfile.TemporaryDirectory() as tmp:
        for name in scenarios:
            d1, d2 = Path(tmp, "run1", name), Path(tmp, "run2", name)
            run_scenario(name, cfg, seed=12345, out_dir=d1)
            run_scenario(name, cfg, seed=12345, out_dir=d2)
            same = _tree_equal(d1, d2)
            c.checks.append(check(f"{name} byte-identical", same, "identical", same))
    return c


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10)


def run_all(config=None) -> list[Criterion]:
    cfg = _cfg(config)
    return [f(cfg) for f in CRITERIA]
