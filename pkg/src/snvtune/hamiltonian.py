"""Ground- and excited-manifold Hamiltonians of a strained SnV centre.

Each manifold is a 4x4 matrix over the ordered basis
``{e_x up, e_x down, e_y up, e_y down}`` (orbital x spin, ``np.kron`` order).
Energies are in GHz, strain susceptibilities in PHz/strain, fields in tesla.

Terms::

    H_SO     = -(lambda/2) L_z (x) sigma_z
    H_strain = E_A1 * 1 + E_gx * tau_z (x) 1 + E_gy * tau_x (x) 1
    H_Z      = (gamma_s/2) (B . sigma) (x)-padded + q gamma_L B_z L_z (x) 1

with ``L_z = [[0, -i], [i, 0]]`` on the (e_x, e_y) pair.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import DegenerateQubitError, FrameMismatchError, NumericalHermiticityError
from .frames import SNV_FRAMES, StrainTensor

PHZ_IN_GHZ = 1e6
GHZ_IN_HZ = 1e9
QUBIT_DEGENERACY_GHZ = 1e-6

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_LZ = np.array([[0, -1j], [1j, 0]], dtype=complex)

TAU_Z = np.kron(_SZ, _I2)
TAU_X = np.kron(_SX, _I2)
SPIN = tuple(np.kron(_I2, s) for s in (_SX, _SY, _SZ))
ORBITAL_LZ = np.kron(_LZ, _I2)
SPIN_ORBIT = np.kron(_LZ, _SZ)

PRESTRAIN_MODES = ("eg-magnitude", "orbital-splitting")


@dataclass(frozen=True)
class SnVParams:
    """Model constants for one SnV.

    Only ``t_par_u_phz - t_par_g_phz`` is a measured quantity for this device;
    the remaining defaults are typical literature values and are expected to
    be overridden from the device config.
    """

    lambda_g_ghz: float = 850.0
    lambda_u_ghz: float = 3000.0
    t_par_g_phz: float = 0.23
    t_perp_g_phz: float = 0.0
    t_par_u_phz: float = -0.23
    t_perp_u_phz: float = 0.0
    d_g_phz: float = 1.0
    f_g_phz: float = 1.0
    d_u_phz: float = 1.0
    f_u_phz: float = 1.0
    gamma_s_ghz_per_t: float = 28.0
    gamma_l_ghz_per_t: float = 14.0
    q: float = 0.1
    prestrain_egx_ghz: float = 0.0
    prestrain_egy_ghz: float = 0.0
    prestrain_mode: str = "eg-magnitude"

    def __post_init__(self):
        if not (self.lambda_g_ghz > 0 and self.lambda_u_ghz > 0):
            raise ValueError("spin-orbit splittings must be positive")
        if not self.gamma_s_ghz_per_t > 0:
            raise ValueError("gamma_s must be positive")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("orbital quenching factor q must lie in [0, 1]")
        if self.prestrain_mode not in PRESTRAIN_MODES:
            raise ValueError(f"prestrain_mode must be one of {PRESTRAIN_MODES}")

    @property
    def delta_t_par_phz(self) -> float:
        return self.t_par_u_phz - self.t_par_g_phz

    def with_prestrain(self, egx_ghz: float, egy_ghz: float = 0.0) -> "SnVParams":
        return replace(self, prestrain_egx_ghz=egx_ghz, prestrain_egy_ghz=egy_ghz)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SnVParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown SnV parameter(s): {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class ManifoldHamiltonian:
    matrix: np.ndarray
    manifold: str


@dataclass(frozen=True)
class EigenSystem:
    values: np.ndarray  # ascending, GHz
    vectors: np.ndarray  # columns are eigenvectors


@dataclass(frozen=True)
class Transition:
    label: str
    frequency_offset: float  # GHz, relative to the bare zero-phonon line
    relative_strength: float
    excited_index: int
    ground_index: int
    spin_flip: bool


class TransitionTable(tuple):
    """Tuple of :class:`Transition` with label lookup."""

    def __new__(cls, items):
        return super().__new__(cls, items)

    def by_label(self, label: str) -> Transition:
        for t in self:
            if t.label == label:
                return t
        raise KeyError(label)

    def group(self, letter: str) -> list[Transition]:
        return [t for t in self if t.label.split("/")[0] == letter]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([t.frequency_offset for t in self])


@dataclass(frozen=True)
class DeltaDC:
    exact_ghz: float
    approx_ghz: float

    def __float__(self):
        return self.exact_ghz


def _manifold_constants(params: SnVParams, manifold: str):
    if manifold == "ground":
        return (params.lambda_g_ghz, params.t_par_g_phz, params.t_perp_g_phz,
                params.d_g_phz, params.f_g_phz)
    if manifold == "excited":
        return (params.lambda_u_ghz, params.t_par_u_phz, params.t_perp_u_phz,
                params.d_u_phz, params.f_u_phz)
    raise ValueError(f"manifold must be 'ground' or 'excited', got {manifold!r}")


def prestrain_terms(params: SnVParams, manifold: str = "ground") -> tuple[float, float]:
    """Static E_g energies (GHz) applied to ``manifold``.

    The configured values belong to the ground manifold. In the
    ``orbital-splitting`` mode their magnitude is read as the total ground
    orbital splitting sqrt(lambda_g^2 + 4 alpha^2) and converted to alpha. The
    excited manifold sees the same physical strain, scaled by d_u / d_g.
    """
    egx, egy = params.prestrain_egx_ghz, params.prestrain_egy_ghz
    mag = float(np.hypot(egx, egy))
    if mag == 0.0:
        return 0.0, 0.0
    if params.prestrain_mode == "orbital-splitting":
        alpha = 0.5 * np.sqrt(max(mag**2 - params.lambda_g_ghz**2, 0.0))
        egx, egy = egx * alpha / mag, egy * alpha / mag
    if manifold == "excited":
        scale = params.d_u_phz / params.d_g_phz if params.d_g_phz else 0.0
        egx, egy = egx * scale, egy * scale
    return float(egx), float(egy)


def strain_energies(params: SnVParams, manifold: str, eps: StrainTensor) -> tuple[float, float, float]:
    """(E_A1, E_gx, E_gy) in GHz produced by ``eps`` alone (no pre-strain)."""
    if eps.frame not in SNV_FRAMES:
        raise FrameMismatchError(f"strain must be in an SnV frame, got {eps.frame!r}")
    _, t_par, t_perp, d, f = _manifold_constants(params, manifold)
    e = eps.components
    a1 = t_par * e[2, 2] + t_perp * (e[0, 0] + e[1, 1])
    egx = d * (e[0, 0] - e[1, 1]) + f * e[2, 0]
    egy = -2.0 * d * e[0, 1] + f * e[1, 2]
    return a1 * PHZ_IN_GHZ, egx * PHZ_IN_GHZ, egy * PHZ_IN_GHZ


def strain_operator(params: SnVParams, manifold: str, eps: StrainTensor) -> np.ndarray:
    a1, egx, egy = strain_energies(params, manifold, eps)
    return a1 * np.eye(4, dtype=complex) + egx * TAU_Z + egy * TAU_X


def build_manifold_hamiltonian(params: SnVParams, manifold: str, eps: StrainTensor | None = None,
                               b_field=(0.0, 0.0, 0.0)) -> ManifoldHamiltonian:
    """Assemble H = H_SO + H_strain + H_Zeeman for one manifold.

    Parameters
    ----------
    params : SnVParams
    manifold : {"ground", "excited"}
    eps : StrainTensor in an SnV frame, or None for no applied strain.
    b_field : 3-vector in tesla, SnV frame.
    """
    lam = _manifold_constants(params, manifold)[0]
    h = -0.5 * lam * SPIN_ORBIT
    if eps is not None:
        h = h + strain_operator(params, manifold, eps)
    px, py = prestrain_terms(params, manifold)
    h = h + px * TAU_Z + py * TAU_X
    bx, by, bz = (float(v) for v in b_field)
    gs = params.gamma_s_ghz_per_t
    h = h + 0.5 * gs * (bx * SPIN[0] + by * SPIN[1] + bz * SPIN[2])
    h = h + params.q * params.gamma_l_ghz_per_t * bz * ORBITAL_LZ
    return ManifoldHamiltonian(h, manifold)


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for k in range(out.shape[1]):
        v = out[:, k]
        mags = np.abs(v)
        i = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-12))[0])
        out[:, k] = v * (np.conj(v[i]) / mags[i])
    return out


def diagonalize(h, tol: float = 1e-12) -> EigenSystem:
    """Eigen-decomposition with ascending values and a fixed phase convention.

    Each eigenvector is rotated so that its largest-magnitude component is
    real and positive (first such component on ties).
    """
    m = np.asarray(h.matrix if isinstance(h, ManifoldHamiltonian) else h, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.conj().T)) > tol * scale:
        raise NumericalHermiticityError("matrix is not Hermitian within tolerance")
    values, vectors = np.linalg.eigh(0.5 * (m + m.conj().T))
    return EigenSystem(values, _fix_phase(vectors))


def resolve_degeneracies(eig: EigenSystem, operator: np.ndarray, tol: float = 1e-7) -> EigenSystem:
    """Within each degenerate block pick the basis that diagonalizes ``operator``.

    Makes labels (spin projection, branch) reproducible when ``eigh`` is free
    to return any rotation of a degenerate subspace.
    """
    values = eig.values
    vecs = eig.vectors.copy()
    n = len(values)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and values[stop] - values[stop - 1] < tol * max(1.0, abs(values[stop])):
            stop += 1
        if stop - start > 1:
            block = vecs[:, start:stop]
            proj = block.conj().T @ operator @ block
            _, rot = np.linalg.eigh(0.5 * (proj + proj.conj().T))
            vecs[:, start:stop] = block @ rot
        start = stop
    return EigenSystem(values, _fix_phase(vecs))


def _spin_axis(b_field) -> np.ndarray:
    b = np.asarray(b_field, dtype=float)
    n = np.linalg.norm(b)
    return b / n if n > 0 else np.array([0.0, 0.0, 1.0])


def _spin_projection_operator(b_field) -> np.ndarray:
    u = _spin_axis(b_field)
    return u[0] * SPIN[0] + u[1] * SPIN[1] + u[2] * SPIN[2]


def _zero_strain(eps: StrainTensor | None) -> StrainTensor:
    return StrainTensor.zero(eps.frame if eps is not None else "snv-axial")


_DIPOLE_ORBITAL = np.kron(np.eye(2) + np.array([[1, 1], [1, -1]]), _I2)
_GROUP_LETTERS = {(1, 0): "a", (1, 1): "b", (0, 0): "c", (0, 1): "d"}


def optical_transitions(params: SnVParams, eps: StrainTensor | None = None,
                        b_field=(0.0, 0.0, 0.0)) -> TransitionTable:
    """All 16 excited -> ground lines with frequencies and relative strengths.

    Lines are grouped by orbital branch into a, b, c, d (a highest, d lowest at
    zero field). Within a group the two spin-conserving lines are ``A1, A2``
    and the spin-flipping lines ``B1, B2``, each pair in ascending frequency.
    Labels read e.g. ``"c/B1"``.
    """
    spin_op = _spin_projection_operator(b_field)
    ground = resolve_degeneracies(
        diagonalize(build_manifold_hamiltonian(params, "ground", eps, b_field)), spin_op)
    excited = resolve_degeneracies(
        diagonalize(build_manifold_hamiltonian(params, "excited", eps, b_field)), spin_op)

    def spin_sign(vec):
        return float(np.real(vec.conj() @ spin_op @ vec)) >= 0.0

    raw = []
    for ie in range(4):
        ve = excited.vectors[:, ie]
        for ig in range(4):
            vg = ground.vectors[:, ig]
            freq = float(excited.values[ie] - ground.values[ig])
            strength = float(abs(ve.conj() @ _DIPOLE_ORBITAL @ vg) ** 2)
            flip = spin_sign(ve) != spin_sign(vg)
            raw.append((ie // 2, ig // 2, flip, freq, strength, ie, ig))

    peak = max(r[4] for r in raw)
    table = []
    for (eb, gb), letter in _GROUP_LETTERS.items():
        members = [r for r in raw if r[0] == eb and r[1] == gb]
        for flip, prefix in ((False, "A"), (True, "B")):
            sub = sorted((r for r in members if r[2] == flip), key=lambda r: (r[3], r[5], r[6]))
            for k, r in enumerate(sub, start=1):
                table.append(Transition(
                    label=f"{letter}/{prefix}{k}",
                    frequency_offset=r[3],
                    relative_strength=r[4] / peak if peak > 0 else 0.0,
                    excited_index=r[5],
                    ground_index=r[6],
                    spin_flip=flip,
                ))
    return TransitionTable(table)


def c_line_frequency(params: SnVParams, eps: StrainTensor | None = None, b_field=(0.0, 0.0, 0.0)) -> float:
    """Mean frequency of the four c-group lines (lower excited -> lower ground)."""
    return float(np.mean([t.frequency_offset for t in optical_transitions(params, eps, b_field).group("c")]))


def delta_dc(params: SnVParams, eps: StrainTensor) -> DeltaDC:
    """Static shift of the c transition caused by ``eps``.

    ``approx_ghz`` is the axial estimate (t_par_u - t_par_g) * eps_z'z';
    ``exact_ghz`` comes from full diagonalization against the unstrained table.
    """
    if eps.frame not in SNV_FRAMES:
        raise FrameMismatchError(f"strain must be in an SnV frame, got {eps.frame!r}")
    approx = params.delta_t_par_phz * eps.components[2, 2] * PHZ_IN_GHZ
    exact = c_line_frequency(params, eps) - c_line_frequency(params, _zero_strain(eps))
    return DeltaDC(float(exact), float(approx))


def g_orb(params: SnVParams, eps_zpf: StrainTensor) -> float:
    """Orbital single-phonon coupling (Hz): magnitude of the zero-point E_g energy."""
    _, egx, egy = strain_energies(params, "ground", eps_zpf)
    return float(np.hypot(egx, egy) * GHZ_IN_HZ)


def _qubit_coupling(params: SnVParams, eps_zpf: StrainTensor, b_field) -> float:
    eig = diagonalize(build_manifold_hamiltonian(params, "ground", None, b_field))
    v = strain_operator(params, "ground", eps_zpf)
    splitting = eig.values[1] - eig.values[0]
    pair = eig.vectors[:, :2]
    if splitting >= QUBIT_DEGENERACY_GHZ:
        return float(abs(pair[:, 0].conj() @ v @ pair[:, 1]))
    if np.linalg.norm(b_field) == 0.0:
        raise DegenerateQubitError("qubit levels are Kramers-degenerate at zero field")
    # field-split pair that stays degenerate by symmetry: use the basis-free
    # coupling, half the splitting that the perturbation opens in the pair
    proj = pair.conj().T @ v @ pair
    mu = np.linalg.eigvalsh(0.5 * (proj + proj.conj().T))
    return float(0.5 * (mu[1] - mu[0]))


def g_sm(params: SnVParams, eps_zpf: StrainTensor, b_field) -> float:
    """Spin-phonon coupling (Hz) between the two lowest ground eigenstates.

    The qubit states include pre-strain and field; the coupling operator is
    the zero-point strain alone.
    """
    if eps_zpf.frame not in SNV_FRAMES:
        raise FrameMismatchError(f"strain must be in an SnV frame, got {eps_zpf.frame!r}")
    return _qubit_coupling(params, eps_zpf, b_field) * GHZ_IN_HZ


def spin_transition_frequency(params: SnVParams, b_field) -> float:
    """Splitting (GHz) of the two lowest ground-manifold levels, pre-strain included."""
    if np.linalg.norm(b_field) == 0.0:
        return 0.0
    eig = diagonalize(build_manifold_hamiltonian(params, "ground", None, b_field))
    return float(eig.values[1] - eig.values[0])


def g_sm_field_sweep(params: SnVParams, eps_zpf: StrainTensor, fields_t, direction=(1.0, 0.0, 0.0)):
    """g_sm (Hz) along a field ramp in ``direction`` (SnV frame, normalized here).

    Returns ``(fields_t, g_sm_hz)`` as arrays.
    """
    b = np.asarray(fields_t, dtype=float)
    if b.ndim != 1 or b.size == 0:
        raise ValueError("field range must be a non-empty 1-D sequence")
    if np.any(b <= 0) or np.any(np.diff(b) <= 0):
        raise ValueError("field range must be positive and strictly ascending")
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    vals = np.array([g_sm(params, eps_zpf, bi * u) for bi in b])
    return b, vals
