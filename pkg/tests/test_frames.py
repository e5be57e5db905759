import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from snvtune.errors import (
    DegenerateDirectionError,
    PerpendicularityError,
    StrainRangeError,
    UnsupportedOrientationError,
)
from snvtune.frames import (
    CrystalDirection,
    FrameRotation,
    StrainTensor,
    all_111_orientations,
    classify_orientation,
    rotation_from_axes,
    to_snv_frame,
    transform_strain,
    uniaxial_device_strain,
)

small = st.floats(-1e-3, 1e-3, allow_nan=False)
voigt = st.lists(small, min_size=6, max_size=6)
rot_seed = st.integers(0, 2**32 - 1)


def random_rotation(seed):
    return FrameRotation(Rotation.random(random_state=seed).as_matrix())


def test_identity_rotation():
    r = rotation_from_axes((0, 0, 1), (1, 0, 0))
    np.testing.assert_allclose(r.matrix, np.eye(3), atol=1e-15)


def test_third_row_is_dipole():
    r = rotation_from_axes((1, 1, 1), (1, -1, 0))
    np.testing.assert_allclose(r.matrix[2], np.ones(3) / np.sqrt(3), atol=1e-15)


def test_non_perpendicular_axes():
    with pytest.raises(PerpendicularityError):
        rotation_from_axes((1, 1, 1), (1, 1, 0))


def test_zero_direction():
    with pytest.raises(DegenerateDirectionError):
        CrystalDirection((0, 0, 0))


def test_uniaxial_projection_axial():
    eps = to_snv_frame(uniaxial_device_strain(1e-4), classify_orientation((1, 1, 1)))
    assert eps[2, 2] == pytest.approx(2e-4 / 3, rel=1e-12)


def test_uniaxial_projection_transverse():
    eps = to_snv_frame(uniaxial_device_strain(1e-4), classify_orientation((-1, 1, 1)))
    assert abs(eps[2, 2]) < 1e-18


def test_classification():
    assert classify_orientation((1, 1, 1)).kind == "axial"
    assert classify_orientation((-1, 1, 1)).kind == "transverse"
    # (-1,-1,1) has a nonzero [110] projection, so it is axial under this device frame
    assert classify_orientation((-1, -1, 1)).kind == "axial"
    with pytest.raises(UnsupportedOrientationError):
        classify_orientation((1, 0, 0))


def test_four_axes_split_two_and_two():
    kinds = sorted(o.kind for o in all_111_orientations())
    assert kinds == ["axial", "axial", "transverse", "transverse"]


def test_uniaxial_strain_examples():
    assert np.all(uniaxial_device_strain(0.0).components == 0)
    np.testing.assert_array_equal(uniaxial_device_strain(1e-4).components, np.diag([1e-4, 0, 0]))
    np.testing.assert_allclose(uniaxial_device_strain(1e-4, 0.069).components,
                               np.diag([1e-4, -6.9e-6, -6.9e-6]), rtol=1e-12)
    with pytest.raises(StrainRangeError):
        uniaxial_device_strain(0.02)


def test_voigt_length_checked():
    with pytest.raises(ValueError):
        StrainTensor.from_voigt([0.0] * 7)


def test_identity_transform():
    eps = StrainTensor.from_voigt([1e-4, 2e-5, -3e-5, 1e-6, 2e-6, 3e-6])
    out = transform_strain(eps, FrameRotation(np.eye(3)))
    np.testing.assert_array_equal(out.components, eps.components)


@pytest.mark.parametrize("orientation", all_111_orientations(), ids=str)
def test_snv_rotations_proper(orientation):
    m = orientation.rotation().matrix
    assert np.max(np.abs(m.T @ m - np.eye(3))) < 1e-12
    assert abs(np.linalg.det(m) - 1.0) < 1e-12


@settings(max_examples=1000, deadline=None)
@given(voigt, rot_seed)
def test_transform_preserves_invariants(v, seed):
    eps = StrainTensor.from_voigt(v)
    out = transform_strain(eps, random_rotation(seed))
    scale = max(np.max(np.abs(eps.components)), 1e-300)
    assert abs(out.trace - eps.trace) <= 1e-14 * scale * 3
    np.testing.assert_allclose(np.linalg.eigvalsh(out.components), np.linalg.eigvalsh(eps.components),
                               atol=1e-12 * scale)


@settings(max_examples=200, deadline=None)
@given(voigt, rot_seed, rot_seed)
def test_transform_composition(v, s1, s2):
    eps = StrainTensor.from_voigt(v)
    r1, r2 = random_rotation(s1), random_rotation(s2)
    a = transform_strain(transform_strain(eps, r1), r2)
    b = transform_strain(eps, r2 @ r1)
    np.testing.assert_allclose(a.components, b.components, atol=1e-12 * 1e-3)
