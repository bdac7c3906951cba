"""The 81 product projectors used for two-qutrit tomography, and a crosstalk
model for imperfect SLM/fiber mode filtering."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .states import ket, matrix_from_dict, matrix_to_dict, projector

_S = 1 / np.sqrt(2)


def photon_kets() -> list[np.ndarray]:
    """Stokes-photon analysis kets in basis (|L>, |G>, |R>)."""
    return [
        ket(1, 0, 0),          # |L>
        ket(0, 1, 0),          # |G>
        ket(0, 0, 1),          # |R>
        ket(1, 1, 0),          # (|G>+|L>)/sqrt2
        ket(0, 1, 1),          # (|G>+|R>)/sqrt2
        ket(1j, 1, 0),         # (|G>+i|L>)/sqrt2
        ket(0, 1, -1j),        # (|G>-i|R>)/sqrt2
        ket(1, 0, 1),          # (|L>+|R>)/sqrt2
        ket(1, 0, 1j),         # (|L>+i|R>)/sqrt2
    ]


def atom_kets() -> list[np.ndarray]:
    """Collective-excitation analysis kets in basis (|l>, |g>, |r>)."""
    return [
        ket(1, 0, 0),          # |l>
        ket(0, 1, 0),          # |g>
        ket(0, 0, 1),          # |r>
        ket(1, 1, 0),          # (|g>+|l>)/sqrt2
        ket(0, 1, 1),          # (|g>+|r>)/sqrt2
        ket(-1j, 1, 0),        # (|g>-i|l>)/sqrt2
        ket(0, 1, 1j),         # (|g>+i|r>)/sqrt2
        ket(1, 0, 1),          # (|l>+|r>)/sqrt2
        ket(1, 0, -1j),        # (|l>-i|r>)/sqrt2
    ]


@dataclass(frozen=True, eq=False)
class ProjectorSetting:
    """One measurement setting mu_i (photon) x mu_j (atom).

    ``photon_op`` and ``atom_op`` are the single-side 3x3 effects; ``op`` is
    their Kronecker product.
    """

    i: int
    j: int
    photon_op: np.ndarray
    atom_op: np.ndarray
    ideal: bool = True
    op: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (0 <= self.i <= 8 and 0 <= self.j <= 8):
            raise ValueError(f"setting index out of range: ({self.i}, {self.j})")
        object.__setattr__(self, "op", np.kron(self.photon_op, self.atom_op))

    @property
    def index(self) -> tuple[int, int]:
        return (self.i, self.j)

    def probability(self, rho) -> float:
        return float(np.real(np.trace(self.op @ rho)))


def projector_set() -> list[ProjectorSetting]:
    """All 81 ideal settings, row-major in (photon index i, atom index j)."""
    pk = [projector(k) for k in photon_kets()]
    ak = [projector(k) for k in atom_kets()]
    return [ProjectorSetting(i, j, pk[i], ak[j]) for i in range(9) for j in range(9)]


def measurement_matrix(settings) -> np.ndarray:
    """Rows map vec(rho) (row-major) to Tr(Pi_k rho)."""
    return np.array([s.op.T.ravel() for s in settings])


def random_effect(rng, dim: int = 3) -> np.ndarray:
    """Random PSD, trace-one operator (Ginibre)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    n = g @ g.conj().T
    return n / np.trace(n).real


def perturb_setting(s: ProjectorSetting, eps: float, seed: int) -> ProjectorSetting:
    """Mix each side's projector with a seeded random effect:
    ``(1 - eps) |k><k| + eps N``.

    The same seed always yields the same operator.
    """
    if not 0 <= eps <= 1:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    if not s.ideal:
        raise ValueError("perturb_setting expects an ideal setting")
    if eps == 0:
        return s
    rng = np.random.default_rng(seed)
    n_photon = random_effect(rng)
    n_atom = random_effect(rng)
    return ProjectorSetting(
        s.i,
        s.j,
        (1 - eps) * s.photon_op + eps * n_photon,
        (1 - eps) * s.atom_op + eps * n_atom,
        ideal=False,
    )


def perturbed_set(eps: float, seed: int) -> list[ProjectorSetting]:
    """All 81 settings perturbed with per-setting sub-seeds derived from ``seed``."""
    seeds = np.random.SeedSequence(seed).generate_state(81)
    return [perturb_setting(s, eps, int(sd)) for s, sd in zip(projector_set(), seeds)]


def settings_to_json(settings) -> list[dict]:
    out = []
    for s in settings:
        d = {"i": s.i, "j": s.j, "ideal": s.ideal}
        d["op"] = matrix_to_dict(s.op)
        d["photon_op"] = matrix_to_dict(s.photon_op)
        d["atom_op"] = matrix_to_dict(s.atom_op)
        out.append(d)
    return out


def settings_from_json(docs) -> list[ProjectorSetting]:
    return [
        ProjectorSetting(
            d["i"],
            d["j"],
            matrix_from_dict(d["photon_op"]),
            matrix_from_dict(d["atom_op"]),
            ideal=d.get("ideal", True),
        )
        for d in docs
    ]


def save_settings(path, settings) -> None:
    Path(path).write_text(json.dumps(settings_to_json(settings)))


def load_settings(path) -> list[ProjectorSetting]:
    return settings_from_json(json.loads(Path(path).read_text()))
