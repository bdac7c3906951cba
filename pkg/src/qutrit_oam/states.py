"""Qutrit and two-qutrit state algebra.

Basis convention used everywhere in the package:

* photon qutrit: ``|L>, |G>, |R>`` (OAM -1, 0, +1) -> indices 0, 1, 2
* atom qutrit:   ``|l>, |g>, |r>`` (OAM -1, 0, +1) -> indices 0, 1, 2
* joint 9-level index = 3 * photon + atom (photon major)

Kets are plain complex numpy vectors, operators plain complex arrays.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.stats import unitary_group

PHOTON_LABELS = ("L", "G", "R")
ATOM_LABELS = ("l", "g", "r")

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_SLACK = -1e-9
SCHMIDT_TOL = 1e-7


class InvalidStateError(ValueError):
    """Raised when a matrix violates the density-matrix invariants."""


def joint_index(photon: int | str, atom: int | str) -> int:
    """Index of ``|photon>|atom>`` in the 9-level basis."""
    if isinstance(photon, str):
        photon = PHOTON_LABELS.index(photon)
    if isinstance(atom, str):
        atom = ATOM_LABELS.index(atom)
    return 3 * photon + atom


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def ket(*amplitudes) -> np.ndarray:
    """Normalized ket from amplitudes, e.g. ``ket(1, 1, 0)`` = (|L>+|G>)/sqrt2."""
    return normalize(amplitudes)


def basis_ket(label: str) -> np.ndarray:
    """Single-qutrit basis ket from a label in ``LGR`` or ``lgr``."""
    labels = PHOTON_LABELS if label in PHOTON_LABELS else ATOM_LABELS
    v = np.zeros(3, dtype=complex)
    v[labels.index(label)] = 1.0
    return v


def product_ket(label: str) -> np.ndarray:
    """Two-qutrit basis ket such as ``"Lr"``."""
    return tensor(basis_ket(label[0]), basis_ket(label[1]))


def tensor(photon, atom) -> np.ndarray:
    """Joint ket (or operator) in photon-major ordering."""
    return np.kron(np.asarray(photon, dtype=complex), np.asarray(atom, dtype=complex))


def projector(k) -> np.ndarray:
    """Rank-one projector |k><k|."""
    k = np.asarray(k, dtype=complex)
    return np.outer(k, k.conj())


def check_density_matrix(rho, dim: int = 9) -> np.ndarray:
    """Return ``rho`` as a complex array, raising InvalidStateError if it is not
    Hermitian, unit-trace and PSD (within the package tolerances)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise InvalidStateError(f"expected shape {(dim, dim)}, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("non-finite entries")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITIAN_TOL:
        raise InvalidStateError(f"not Hermitian (max deviation {herm:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1) > TRACE_TOL:
        raise InvalidStateError(f"trace {tr!r} != 1")
    lmin = np.linalg.eigvalsh(rho).min()
    if lmin < PSD_SLACK:
        raise InvalidStateError(f"not PSD (min eigenvalue {lmin:.3g})")
    return rho


def is_density_matrix(rho, dim: int = 9) -> bool:
    try:
        check_density_matrix(rho, dim)
    except InvalidStateError:
        return False
    return True


def fidelity_pure(rho, psi) -> float:
    """<psi|rho|psi> for a valid density matrix and a normalized ket."""
    rho = check_density_matrix(rho, len(psi))
    psi = np.asarray(psi, dtype=complex)
    val = psi.conj() @ rho @ psi
    assert abs(val.imag) < 1e-12, val
    return float(val.real)


def partial_trace(rho, over: str = "atom") -> np.ndarray:
    """Reduced 3x3 state after tracing out ``over`` ("atom" or "photon")."""
    r = np.asarray(rho, dtype=complex).reshape(3, 3, 3, 3)
    if over == "atom":
        return np.einsum("ajbj->ab", r)
    if over == "photon":
        return np.einsum("iaib->ab", r)
    raise ValueError(f"unknown subsystem {over!r}")


def schmidt_coefficients(psi) -> np.ndarray:
    return np.linalg.svd(np.asarray(psi, dtype=complex).reshape(3, 3), compute_uv=False)


def schmidt_rank(psi, tol: float = SCHMIDT_TOL) -> int:
    """Number of singular values of the 3x3 amplitude matrix above ``tol * max``."""
    s = schmidt_coefficients(psi)
    return int(np.sum(s > tol * s[0]))


def trace_distance(a, b) -> float:
    d = np.asarray(a) - np.asarray(b)
    d = (d + d.conj().T) / 2
    return 0.5 * float(np.abs(np.linalg.eigvalsh(d)).sum())


def psd_project(m) -> np.ndarray:
    """Closest unit-trace PSD matrix (eigenvalue clipping) to a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w = np.clip(w, 0, None)
    if w.sum() == 0:
        raise InvalidStateError("no positive spectrum to keep")
    w /= w.sum()
    return (v * w) @ v.conj().T


def maximally_mixed(dim: int = 9) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def random_density_matrix(dim: int = 9, rank: int | None = None, rng=None) -> np.ndarray:
    """Ginibre-ensemble random state of the given rank (full rank by default)."""
    rng = np.random.default_rng(rng)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_ket(dim: int = 9, rng=None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    return normalize(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_unitary(dim: int = 3, rng=None) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=np.random.default_rng(rng))


# -- JSON schema: {"dim": 9, "re": [[...]], "im": [[...]]} ------------------------

def matrix_to_dict(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_dict(d: dict) -> np.ndarray:
    m = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    if m.shape != (d["dim"], d["dim"]):
        raise InvalidStateError(f"matrix shape {m.shape} does not match dim={d['dim']}")
    return m


def save_density_matrix(path, rho, **extra) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly
    doc = matrix_to_dict(rho)
    doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1))


def load_density_matrix(path, validate: bool = True) -> np.ndarray:
    rho = matrix_from_dict(json.loads(Path(path).read_text()))
    return check_density_matrix(rho, rho.shape[0]) if validate else rho
