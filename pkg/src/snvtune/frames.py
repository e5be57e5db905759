"""Strain tensors and crystal-frame rotations.

The device frame is fixed as X = [110], Y = [-110], Z = [001] (cubic crystal
coordinates). Each SnV has an internal frame whose z' axis is its <111>
dipole axis. Directions are kept as integer Miller triples and normalized
only when a rotation matrix is built.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import product
from math import gcd

import numpy as np

from .errors import (
    DegenerateDirectionError,
    PerpendicularityError,
    StrainRangeError,
    UnsupportedOrientationError,
)

FRAMES = ("device", "snv-axial", "snv-transverse")
SNV_FRAMES = ("snv-axial", "snv-transverse")

# Voigt order used in configs: xx, yy, zz, yz, xz, xy
_VOIGT_INDEX = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))

# Diamond, from C11 = 1076 GPa and C12 = 125 GPa: nu = C12 / (C11 + C12)
DIAMOND_POISSON_RATIO = 0.069

_ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class CrystalDirection:
    miller: tuple[int, int, int]

    def __post_init__(self):
        m = tuple(int(v) for v in self.miller)
        if len(m) != 3:
            raise DegenerateDirectionError(f"direction needs 3 indices, got {self.miller!r}")
        if m == (0, 0, 0):
            raise DegenerateDirectionError("zero vector has no direction")
        object.__setattr__(self, "miller", m)

    @classmethod
    def of(cls, value) -> "CrystalDirection":
        if isinstance(value, CrystalDirection):
            return value
        return cls(tuple(value))

    def unit(self) -> np.ndarray:
        v = np.asarray(self.miller, dtype=float)
        return v / np.linalg.norm(v)

    def reduced(self) -> "CrystalDirection":
        g = reduce(gcd, (abs(v) for v in self.miller))
        return CrystalDirection(tuple(v // g for v in self.miller))

    def __str__(self):
        return "[" + "".join(f"-{-v}" if v < 0 else str(v) for v in self.miller) + "]"


DEVICE_X = CrystalDirection((1, 1, 0))
DEVICE_Y = CrystalDirection((-1, 1, 0))
DEVICE_Z = CrystalDirection((0, 0, 1))


@dataclass(frozen=True)
class FrameRotation:
    """Proper rotation mapping coordinates from one frame into another.

    Rows of ``matrix`` are the target-frame axes expressed in the source frame.
    """

    matrix: np.ndarray
    frame: str | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got shape {m.shape}")
        # loose guard so composed rotations survive; constructors meet 1e-12
        if np.max(np.abs(m.T @ m - np.eye(3))) >= 1e-10:
            raise ValueError("rotation matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > 1e-10:
            raise ValueError("rotation matrix is improper (det != +1)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "FrameRotation") -> "FrameRotation":
        """Compose: ``(a @ b)`` applies ``b`` first, then ``a``."""
        return FrameRotation(self.matrix @ other.matrix, frame=self.frame)

    def inverse(self, frame: str | None = None) -> "FrameRotation":
        return FrameRotation(self.matrix.T, frame=frame)


@dataclass(frozen=True)
class StrainTensor:
    components: np.ndarray
    frame: str = "device"

    def __post_init__(self):
        c = np.array(self.components, dtype=float)
        if c.shape != (3, 3):
            raise ValueError(f"strain tensor must be 3x3, got shape {c.shape}")
        if np.max(np.abs(c - c.T)) > 1e-15 * max(1.0, np.max(np.abs(c))):
            raise ValueError("strain tensor is not symmetric")
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}; expected one of {FRAMES}")
        c = 0.5 * (c + c.T)
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @classmethod
    def zero(cls, frame="device") -> "StrainTensor":
        return cls(np.zeros((3, 3)), frame)

    @classmethod
    def from_voigt(cls, voigt, frame="device") -> "StrainTensor":
        v = np.asarray(voigt, dtype=float)
        if v.shape != (6,):
            raise ValueError(f"Voigt strain needs 6 components, got {v.size}")
        c = np.zeros((3, 3))
        for val, (i, j) in zip(v, _VOIGT_INDEX):
            c[i, j] = c[j, i] = val
        return cls(c, frame)

    def to_voigt(self) -> list[float]:
        return [float(self.components[i, j]) for i, j in _VOIGT_INDEX]

    def __getitem__(self, key):
        return float(self.components[key])

    @property
    def trace(self) -> float:
        return float(np.trace(self.components))

    def scaled(self, factor: float) -> "StrainTensor":
        return StrainTensor(self.components * factor, self.frame)

    def __add__(self, other: "StrainTensor") -> "StrainTensor":
        if other.frame != self.frame:
            raise ValueError(f"cannot add strain in {other.frame!r} to {self.frame!r}")
        return StrainTensor(self.components + other.components, self.frame)


@dataclass(frozen=True)
class SnVOrientation:
    kind: str  # "axial" | "transverse"
    dipole_axis: CrystalDirection
    x_axis_choice: CrystalDirection = field(default=None)

    def __post_init__(self):
        if self.kind not in ("axial", "transverse"):
            raise ValueError(f"orientation class must be axial or transverse, got {self.kind!r}")
        proj = sum(a * b for a, b in zip(self.dipole_axis.miller, DEVICE_X.miller))
        if (proj != 0) != (self.kind == "axial"):
            raise UnsupportedOrientationError(
                f"dipole {self.dipole_axis} does not belong to the {self.kind} class"
            )
        if self.x_axis_choice is None:
            object.__setattr__(self, "x_axis_choice", default_x_axis(self.dipole_axis))
        if abs(float(np.dot(self.dipole_axis.unit(), self.x_axis_choice.unit()))) >= _ORTHO_TOL:
            raise PerpendicularityError(
                f"x axis {self.x_axis_choice} is not perpendicular to dipole {self.dipole_axis}"
            )

    @property
    def frame(self) -> str:
        return f"snv-{self.kind}"

    def rotation(self) -> FrameRotation:
        """Rotation from the device frame into this SnV's internal frame."""
        crystal_to_snv = rotation_from_axes(self.dipole_axis, self.x_axis_choice)
        return FrameRotation(crystal_to_snv.matrix @ DEVICE_ROTATION.matrix.T, frame=self.frame)


def rotation_from_axes(z, x) -> FrameRotation:
    """Frame whose z axis is ``z`` and x axis is ``x``; y completes a right-handed set.

    The returned matrix maps vectors written in the parent (crystal) frame
    into the primed frame.
    """
    z = CrystalDirection.of(z)
    x = CrystalDirection.of(x)
    zu, xu = z.unit(), x.unit()
    if abs(float(np.dot(zu, xu))) >= _ORTHO_TOL:
        raise PerpendicularityError(f"{x} is not perpendicular to {z}")
    yu = np.cross(zu, xu)
    return FrameRotation(np.vstack([xu, yu, zu]))


DEVICE_ROTATION = rotation_from_axes(DEVICE_Z, DEVICE_X)  # crystal -> device


def transform_strain(eps: StrainTensor, rot: FrameRotation, frame: str | None = None) -> StrainTensor:
    """Rotate a strain tensor: eps' = R eps R^T."""
    r = rot.matrix
    out = r @ eps.components @ r.T
    return StrainTensor(0.5 * (out + out.T), frame or rot.frame or eps.frame)


def _is_111(m) -> bool:
    return all(abs(v) == abs(m[0]) and v != 0 for v in m)


def default_x_axis(dipole: CrystalDirection) -> CrystalDirection:
    """Projection of device X onto the plane normal to ``dipole``, as integers.

    Falls back to the projection of device Y when X is parallel to the dipole.
    """
    d = dipole.miller
    dd = sum(v * v for v in d)
    for ref in (DEVICE_X.miller, DEVICE_Y.miller):
        rd = sum(a * b for a, b in zip(ref, d))
        proj = tuple(dd * a - rd * b for a, b in zip(ref, d))
        if any(proj):
            return CrystalDirection(proj).reduced()
    raise DegenerateDirectionError(f"cannot build an x axis for {dipole}")


def classify_orientation(dipole) -> SnVOrientation:
    """Assign a <111> dipole axis to the axial or transverse class.

    Axial centres have a nonzero projection of their dipole on device X = [110].
    """
    d = CrystalDirection.of(dipole)
    if not _is_111(d.miller):
        raise UnsupportedOrientationError(f"{d} is not a <111> direction")
    d = d.reduced()
    proj = sum(a * b for a, b in zip(d.miller, DEVICE_X.miller))
    kind = "axial" if proj != 0 else "transverse"
    return SnVOrientation(kind, d)


def all_111_orientations() -> list[SnVOrientation]:
    """The four <111> axes (one sign each), classified."""
    out = []
    for m in product((1, -1), repeat=3):
        if m[2] == 1:
            out.append(classify_orientation(m))
    return out


def uniaxial_device_strain(magnitude: float, poisson_ratio: float = 0.0) -> StrainTensor:
    """Uniaxial strain along device X, optionally with isotropic transverse contraction."""
    if not abs(magnitude) < 0.01:
        raise StrainRangeError(f"|strain| = {abs(magnitude):g} outside the linear-elastic range (< 0.01)")
    lateral = -poisson_ratio * magnitude
    return StrainTensor(np.diag([magnitude, lateral, lateral]), "device")


def to_snv_frame(eps: StrainTensor, orientation: SnVOrientation) -> StrainTensor:
    if eps.frame == orientation.frame:
        return eps
    if eps.frame != "device":
        raise ValueError(f"expected device-frame strain, got {eps.frame!r}")
    return transform_strain(eps, orientation.rotation())
