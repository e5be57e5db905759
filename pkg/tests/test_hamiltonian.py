import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snvtune.device import build_emitter, spin_params, spin_zpf
from snvtune.errors import DegenerateQubitError, FrameMismatchError, NumericalHermiticityError
from snvtune.frames import StrainTensor
from snvtune.hamiltonian import (
    SnVParams,
    build_manifold_hamiltonian,
    c_line_frequency,
    delta_dc,
    diagonalize,
    g_orb,
    g_sm,
    g_sm_field_sweep,
    optical_transitions,
    spin_transition_frequency,
)

DRAWS = settings(max_examples=1000, deadline=None)

params_st = st.builds(
    SnVParams,
    lambda_g_ghz=st.floats(100, 2000), lambda_u_ghz=st.floats(500, 5000),
    t_par_g_phz=st.floats(-1, 1), t_perp_g_phz=st.floats(-1, 1),
    t_par_u_phz=st.floats(-1, 1), t_perp_u_phz=st.floats(-1, 1),
    d_g_phz=st.floats(0.1, 2), f_g_phz=st.floats(-2, 2),
    d_u_phz=st.floats(0.1, 2), f_u_phz=st.floats(-2, 2),
    gamma_s_ghz_per_t=st.floats(10, 40), gamma_l_ghz_per_t=st.floats(0, 30), q=st.floats(0, 1),
    prestrain_egx_ghz=st.floats(-1000, 1000), prestrain_egy_ghz=st.floats(-1000, 1000),
)
strain_st = st.lists(st.floats(-1e-4, 1e-4), min_size=6, max_size=6).map(
    lambda v: StrainTensor.from_voigt(v, "snv-axial"))
field_st = st.lists(st.floats(-2, 2), min_size=3, max_size=3)
manifold_st = st.sampled_from(["ground", "excited"])

P0 = SnVParams()


def axial(ezz):
    return StrainTensor(np.diag([0.0, 0.0, ezz]), "snv-axial")


def test_spin_orbit_doublets():
    vals = diagonalize(build_manifold_hamiltonian(P0, "ground")).values
    np.testing.assert_allclose(vals, [-425, -425, 425, 425], atol=1e-9)


def test_prestrain_splitting():
    p = P0.with_prestrain(300.0)
    vals = diagonalize(build_manifold_hamiltonian(p, "ground")).values
    assert vals[2] - vals[0] == pytest.approx(np.sqrt(850.0**2 + 4 * 300.0**2), rel=1e-12)


def test_axial_zeeman():
    p = SnVParams(q=0.0)
    vals = diagonalize(build_manifold_hamiltonian(p, "ground", b_field=(0, 0, 0.1))).values
    assert vals[1] - vals[0] == pytest.approx(2.8, rel=1e-12)
    assert vals[3] - vals[2] == pytest.approx(2.8, rel=1e-12)


def test_diagonal_matrix():
    eig = diagonalize(np.diag([1.0, 2.0, 3.0, 4.0]))
    np.testing.assert_allclose(eig.values, [1, 2, 3, 4])
    np.testing.assert_allclose(eig.vectors, np.eye(4), atol=1e-15)


def test_non_hermitian_rejected():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 1] = 1.0
    with pytest.raises(NumericalHermiticityError):
        diagonalize(m)


def test_device_frame_strain_rejected():
    with pytest.raises(FrameMismatchError):
        build_manifold_hamiltonian(P0, "ground", StrainTensor.zero("device"))


def test_zero_field_lines():
    t = optical_transitions(P0)
    freqs = sorted({round(x, 9) for x in t.frequencies})
    mean = np.mean(freqs)
    expect = sorted([(3000 - 850) / 2, -(3000 - 850) / 2, (3000 + 850) / 2, -(3000 + 850) / 2])
    np.testing.assert_allclose(np.array(freqs) - mean, expect, atol=1e-9)


def test_transverse_field_gives_four_c_lines_with_b1():
    # without E_g strain the transverse Zeeman term is quenched inside each doublet
    t = optical_transitions(P0.with_prestrain(865.0), b_field=(0.5, 0, 0))
    c = t.group("c")
    assert len({round(x.frequency_offset, 6) for x in c}) == 4
    assert t.by_label("c/B1").spin_flip


def test_rigid_axial_shift():
    t0 = optical_transitions(P0).frequencies
    t1 = optical_transitions(P0, axial(1e-5)).frequencies
    np.testing.assert_allclose(t1 - t0, P0.delta_t_par_phz * 1e-5 * 1e6, atol=1e-9)


def test_delta_dc_examples():
    p = SnVParams(t_par_g_phz=0.23, t_par_u_phz=-0.23)
    assert delta_dc(p, axial(0.0)).approx_ghz == 0.0
    d = delta_dc(p, axial(4.35e-5))
    assert d.approx_ghz == pytest.approx(-20.01, abs=0.01)
    assert d.exact_ghz == pytest.approx(d.approx_ghz, rel=1e-2)


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(1e-7, 1e-4))
def test_delta_dc_odd(p, ezz):
    p = p.with_prestrain(0.0)
    assert abs(delta_dc(p, axial(ezz)).exact_ghz + delta_dc(p, axial(-ezz)).exact_ghz) < 1e-9


def test_g_orb():
    assert g_orb(P0, StrainTensor.zero("snv-axial")) == 0.0


def test_g_orb_fixture(config):
    assert g_orb(build_emitter(config, "SnV1").params, build_emitter(config, "SnV1").zpf_snv) == \
        pytest.approx(2000.0, rel=1e-6)


def test_g_sm_degenerate_at_zero_field(config):
    with pytest.raises(DegenerateQubitError):
        g_sm(spin_params(config), spin_zpf(config), (0, 0, 0))


def test_spin_transition_frequency():
    p = SnVParams(q=0.0)
    assert spin_transition_frequency(p, (0, 0, 0.02)) == pytest.approx(0.56, rel=1e-12)
    assert spin_transition_frequency(p, (0, 0, 0)) == 0.0


def test_fixture_splitting(config):
    f = spin_transition_frequency(spin_params(config), tuple(config.data["spin"]["field_t"]))
    assert 0.45 <= f <= 0.65


def test_sweep_single_point(config):
    p, z = spin_params(config), spin_zpf(config)
    b, g = g_sm_field_sweep(p, z, [0.1])
    assert g[0] == pytest.approx(g_sm(p, z, (0.1, 0, 0)))


def test_sweep_zero_prestrain_monotone(config):
    p, z = spin_params(config).with_prestrain(0.0), spin_zpf(config)
    _, g = g_sm_field_sweep(p, z, np.linspace(0.01, 2.0, 60))
    assert np.all(np.diff(g) >= -1e-9 * g.max())
    assert g.max() <= g_orb(p, z) * (1 + 1e-6)


# property suite -------------------------------------------------------------------

@DRAWS
@given(params_st, manifold_st, strain_st, field_st)
def test_hermitian(p, man, eps, b):
    h = build_manifold_hamiltonian(p, man, eps, b).matrix
    assert np.max(np.abs(h - h.conj().T)) < 1e-12


@DRAWS
@given(params_st, manifold_st, strain_st, field_st)
def test_eigensystem_invariants(p, man, eps, b):
    h = build_manifold_hamiltonian(p, man, eps, b).matrix
    eig = diagonalize(h)
    scale = max(1.0, np.max(np.abs(eig.values)))
    assert abs(eig.values.sum() - np.trace(h).real) < 1e-9 * scale
    v = eig.vectors
    assert np.max(np.abs(v.conj().T @ v - np.eye(4))) < 1e-10
    assert np.max(np.abs(v @ np.diag(eig.values) @ v.conj().T - h)) < 1e-9 * scale


@DRAWS
@given(params_st, manifold_st, strain_st)
def test_kramers(p, man, eps):
    vals = diagonalize(build_manifold_hamiltonian(p, man, eps)).values
    assert abs(vals[1] - vals[0]) < 1e-9 * max(1.0, abs(vals[0]))
    assert abs(vals[3] - vals[2]) < 1e-9 * max(1.0, abs(vals[3]))


@DRAWS
@given(params_st, manifold_st, strain_st, field_st, st.floats(-1e-4, 1e-4))
def test_a1_common_mode(p, man, eps, b, a1):
    v0 = diagonalize(build_manifold_hamiltonian(p, man, eps, b)).values
    v1 = diagonalize(build_manifold_hamiltonian(p, man, eps + axial(a1), b)).values
    scale = max(1.0, np.max(np.abs(v0)))
    np.testing.assert_allclose(np.diff(v1), np.diff(v0), atol=1e-10 * scale)


@DRAWS
@given(params_st)
def test_finite_difference_slope(p):
    p = p.with_prestrain(0.0)
    h = 1e-9
    slope = (c_line_frequency(p, axial(h)) - c_line_frequency(p, axial(-h))) / (2 * h) / 1e6
    assert slope == pytest.approx(p.delta_t_par_phz, rel=1e-3, abs=1e-6)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.005, 3.0), st.floats(0, 2000))
def test_g_sm_bounded_by_g_orb(b, pre):
    p = SnVParams().with_prestrain(pre)
    z = StrainTensor.from_voigt([0, 0, 0, 2e-12, 0, 0], "snv-axial")
    assert g_sm(p, z, (b, 0, 0)) <= g_orb(p, z) * (1 + 1e-6)
