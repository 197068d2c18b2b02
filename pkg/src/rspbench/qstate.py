"""Single- and two-qubit state algebra.

States are plain numpy arrays: a Bloch vector is a real array of shape (3,), a
qubit density is a complex (2, 2) array and a two-qubit source is a complex
(4, 4) array ordered Alice (first factor) then Bob.
"""

from enum import IntEnum
from typing import NamedTuple

import numpy as np

from .errors import InputError

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (X, Y, Z)

# Exact physical tolerances; anything off by more than REPAIR_TOL is rejected.
EXACT_TOL = 1e-12
REPAIR_TOL = 1e-9
# Eigenvalues below this are float noise; their square roots would inject
# errors of order 1e-8 into fidelities of (near-)pure states.
_SQRT_FLOOR = 1e-14


class PureAngles(NamedTuple):
    """Polar angle ``phi`` in [0, pi] and azimuth ``theta`` in [0, 2 pi)."""

    phi: float
    theta: float


class CorrectionLabel(IntEnum):
    """Bob's Pauli correction. The index doubles as the two-bit message,
    first bit firing X and second bit firing Z."""

    I = 0
    Z = 1
    X = 2
    XZ = 3

    @property
    def bits(self):
        return format(int(self), "02b")

    @property
    def operator(self):
        return _LABEL_OPS[self]

    @classmethod
    def from_bits(cls, bits):
        return cls(int(bits, 2))


_LABEL_OPS = {
    CorrectionLabel.I: I2,
    CorrectionLabel.Z: Z,
    CorrectionLabel.X: X,
    CorrectionLabel.XZ: X @ Z,
}


def as_bloch(b, tol=REPAIR_TOL):
    b = np.asarray(b, dtype=float)
    if b.shape != (3,):
        raise InputError(f"Bloch vector must have 3 components, got shape {b.shape}", "shape")
    if not np.all(np.isfinite(b)):
        raise InputError("Bloch vector has non-finite entries", "shape")
    if np.linalg.norm(b) > 1 + tol:
        raise InputError(f"Bloch vector norm {np.linalg.norm(b):.15g} exceeds 1", "norm")
    return b


def as_density(rho, dim=2):
    """Validate a density matrix, repairing violations up to 1e-9.

    Returns a fresh array that is Hermitian, unit trace and positive
    semidefinite to within 1e-12.
    """
    rho = np.array(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise InputError(f"expected a {dim}x{dim} matrix, got shape {rho.shape}", "shape")
    if not np.all(np.isfinite(rho)):
        raise InputError("density matrix has non-finite entries", "shape")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > REPAIR_TOL:
        raise InputError(f"matrix is not Hermitian (deviation {herm:.3g})", "non-physical")
    if herm > 0:
        rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr - 1) > REPAIR_TOL:
        raise InputError(f"trace {tr:.15g} differs from 1", "non-physical")
    w, v = np.linalg.eigh(rho)
    if w[0] < -REPAIR_TOL:
        raise InputError(f"negative eigenvalue {w[0]:.3g}", "non-physical")
    if w[0] < -EXACT_TOL or abs(tr - 1) > EXACT_TOL:
        w = np.clip(w, 0, None)
        w = w / w.sum()
        rho = (v * w) @ v.conj().T
        rho = (rho + rho.conj().T) / 2
    return rho


def bloch_to_density(b):
    x, y, z = as_bloch(b)
    return 0.5 * (I2 + x * X + y * Y + z * Z)


def density_to_bloch(rho):
    rho = np.asarray(rho)
    return np.array([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])


def pure_ket(angles):
    phi, theta = angles
    return np.array([np.cos(phi / 2), np.exp(1j * theta) * np.sin(phi / 2)])


def angles_to_state(angles, r=1.0):
    """Mixed state ``r |psi><psi| + (1 - r) I/2`` on the ray given by the angles."""
    if not 0 <= r <= 1:
        raise InputError(f"radius r={r} outside [0, 1]", "radius")
    phi, theta = angles
    if not (0 <= phi <= np.pi and 0 <= theta < 2 * np.pi):
        raise InputError(f"angles (phi={phi}, theta={theta}) out of range", "angles")
    psi = pure_ket(angles)
    return r * np.outer(psi, psi.conj()) + (1 - r) * I2 / 2


def angles_to_bloch(angles, r=1.0):
    phi, theta = angles
    return r * np.array([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)])


def bloch_to_angles(b):
    """Inverse of :func:`angles_to_bloch`; the centre maps to angles (0, 0)."""
    b = as_bloch(b)
    r = float(np.linalg.norm(b))
    if r < EXACT_TOL:
        return PureAngles(0.0, 0.0), 0.0
    phi = float(np.arccos(np.clip(b[2] / r, -1, 1)))
    theta = float(np.arctan2(b[1], b[0]) % (2 * np.pi))
    if theta >= 2 * np.pi:
        theta = 0.0
    return PureAngles(phi, theta), min(r, 1.0)


def purity(rho):
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def _psd_sqrt(m):
    w, v = np.linalg.eigh(m)
    w = np.where(w < _SQRT_FLOOR, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(a, b):
    """Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))**2``."""
    a = as_density(a, len(a))
    b = as_density(b, len(b))
    sa = _psd_sqrt(a)
    m = sa @ b @ sa
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    w = np.where(w < _SQRT_FLOOR, 0.0, w)
    return float(np.clip(np.sum(np.sqrt(w)) ** 2, 0.0, 1.0))


def qubit_fidelity(a, b):
    """Closed-form qubit fidelity ``Tr(ab) + sqrt(1 - Tr a^2) sqrt(1 - Tr b^2)``."""
    a = as_density(a)
    b = as_density(b)
    ma = max(1 - purity(a), 0.0)
    mb = max(1 - purity(b), 0.0)
    ma = 0.0 if ma < _SQRT_FLOOR else ma
    mb = 0.0 if mb < _SQRT_FLOOR else mb
    f = np.real(np.trace(a @ b)) + np.sqrt(ma) * np.sqrt(mb)
    return float(np.clip(f, 0.0, 1.0))


def largest_eigen(rho):
    """Largest eigenvalue and its eigenprojector.

    The maximally mixed state is degenerate; it returns ``(0.5, |0><0|)``.
    """
    b = density_to_bloch(as_density(rho))
    r = float(np.linalg.norm(b))
    if r < EXACT_TOL:
        return 0.5, np.diag([1.0, 0.0]).astype(complex)
    return (1 + r) / 2, bloch_to_density(b / r)


def pauli_conjugate(label, rho):
    s = CorrectionLabel(label).operator
    return s @ np.asarray(rho) @ s.conj().T


def ket_to_density(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def bell_phi_plus():
    return ket_to_density([1, 0, 0, 1])


def bell_phi_minus():
    return ket_to_density([1, 0, 0, -1])


def werner(v):
    """Isotropic noise around the Phi+ Bell state: ``v Phi+ + (1 - v) I/4``."""
    if not 0 <= v <= 1:
        raise InputError(f"Werner visibility v={v} outside [0, 1]", "visibility")
    return v * bell_phi_plus() + (1 - v) * np.eye(4) / 4


def werner_visibility_for_fidelity(f):
    """Visibility whose Werner state has Bell fidelity ``f``; inverse of ``(1 + 3v)/4``."""
    return (4 * f - 1) / 3


def partial_trace(rho, keep):
    """Reduce a two-qubit density to qubit ``keep`` (0 = Alice, 1 = Bob)."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    return np.einsum("ijil->jl", r)


def concurrence(rho):
    """Wootters concurrence from the spin-flipped state."""
    rho = as_density(rho, 4)
    yy = np.kron(Y, Y)
    flipped = yy @ rho.conj() @ yy
    s = _psd_sqrt(rho)
    m = s @ flipped @ s
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    lam = np.sort(np.sqrt(np.clip(w, 0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


class SourceMetrics(NamedTuple):
    fidelity: float
    tangle: float
    purity: float


def source_metrics(rho, bell="plus"):
    """Bell fidelity, tangle (squared concurrence) and purity of a source.

    ``bell`` selects the reference: ``"plus"`` for Phi+ or ``"minus"`` for
    Phi-, the pre-flip state the hardware characterizes.
    """
    rho = as_density(rho, 4)
    ref = {"plus": bell_phi_plus, "minus": bell_phi_minus}[bell]()
    f = float(np.real(np.trace(ref @ rho)))
    return SourceMetrics(f, concurrence(rho) ** 2, purity(rho))


def shannon_entropy(probs):
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(max(-np.sum(p * np.log2(p)), 0.0))


def shannon_cost(r):
    """Classical bits per run needed to prepare a state of Bloch radius ``r``."""
    if not 0 <= r <= 1:
        raise InputError(f"radius r={r} outside [0, 1]", "radius")
    if r == 0:
        return 0.0
    h = 2 - np.log2(4 - 3 * r) + 0.75 * r * np.log2((4 - 3 * r) / r)
    return float(min(max(h, 0.0), 2.0))
