"""Fidelity to the maximally entangled family, the Schmidt-number-3 witness,
and the local-filtering analysis of a reconstructed state."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .states import check_density_matrix, joint_index, product_ket

LR = joint_index("L", "r")
GG = joint_index("G", "g")
RL = joint_index("R", "l")
MAJOR = (LR, GG, RL)

THRESHOLD_SN3 = 2 / 3
GRID_POINTS = 721


@dataclass(frozen=True)
class MesParams:
    """Phases of the |Lr> and |Rl> terms in units of pi."""

    alpha: float = 0.0
    beta: float = 0.0

    def wrapped(self) -> "MesParams":
        return MesParams(wrap(self.alpha), wrap(self.beta))


def wrap(x: float) -> float:
    """Map a phase (units of pi) into (-1, 1]."""
    y = -((-x + 1) % 2) + 1
    return 1.0 if y == -1.0 else float(y)


def mes_state(p: MesParams) -> np.ndarray:
    """(e^{i alpha pi}|Lr> + |Gg> + e^{i beta pi}|Rl>) / sqrt3."""
    return (
        np.exp(1j * np.pi * p.alpha) * product_ket("Lr")
        + product_ket("Gg")
        + np.exp(1j * np.pi * p.beta) * product_ket("Rl")
    ) / np.sqrt(3)


def _fidelity_surface(rho, alpha, beta):
    """Closed-form <MES(alpha, beta)|rho|MES(alpha, beta)>; broadcasts over arrays."""
    diag = (rho[LR, LR] + rho[GG, GG] + rho[RL, RL]).real
    a = np.exp(-1j * np.pi * np.asarray(alpha, dtype=float))
    b = np.exp(1j * np.pi * np.asarray(beta, dtype=float))
    ac = a * rho[LR, RL]
    # Re(a b rho_13) split into real products so the 2-D grid needs no complex outer product
    cross = ac.real * b.real - ac.imag * b.imag
    return (diag + 2 * (a * rho[LR, GG]).real + 2 * (b * rho[GG, RL]).real + 2 * cross) / 3


def _fidelity_scalar(coh, diag, alpha, beta):
    a = cmath.exp(-1j * math.pi * alpha)
    b = cmath.exp(1j * math.pi * beta)
    return (diag + 2 * (a * coh[0]).real + 2 * (b * coh[1]).real + 2 * (a * b * coh[2]).real) / 3


def mes_fidelity(rho, p: MesParams) -> float:
    rho = check_density_matrix(rho)
    return float(_fidelity_surface(rho, p.alpha, p.beta))


def optimize_mes(rho, grid_points: int = GRID_POINTS) -> tuple[MesParams, float]:
    """Best (alpha, beta): dense grid over (-1, 1]^2, then Nelder-Mead polish.

    Ties on the grid resolve to the lexicographically smallest (alpha, beta).
    """
    rho = check_density_matrix(rho)
    axis = np.linspace(-1, 1, grid_points + 1)[1:]
    a = np.exp(-1j * np.pi * axis)
    b = np.exp(1j * np.pi * axis)
    ac = a * rho[LR, RL]
    one = np.ones_like(axis)
    # phase-dependent part of the closed form as a rank-4 product rows(alpha) @ cols(beta).T
    rows = np.column_stack([(a * rho[LR, GG]).real, one, ac.real, -ac.imag])
    cols = np.column_stack([one, (b * rho[GG, RL]).real, b.real, b.imag])
    surface = rows @ cols.T
    ia, ib = np.unravel_index(np.argmax(surface), surface.shape)
    start = np.array([axis[ia], axis[ib]])
    f_grid = float(_fidelity_surface(rho, start[0], start[1]))

    coh = (complex(rho[LR, GG]), complex(rho[GG, RL]), complex(rho[LR, RL]))
    diag = float((rho[LR, LR] + rho[GG, GG] + rho[RL, RL]).real)
    res = minimize(
        lambda x: -_fidelity_scalar(coh, diag, x[0], x[1]),
        start,
        method="Nelder-Mead",
        options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 4000,
                 "initial_simplex": start + np.array([[0, 0], [2 / grid_points, 0], [0, 2 / grid_points]])},
    )
    if -res.fun > f_grid:
        best, f = res.x, float(-res.fun)
    else:
        best, f = start, float(f_grid)
    return MesParams(wrap(best[0]), wrap(best[1])), f


@dataclass(frozen=True)
class WitnessReport:
    mes: MesParams
    fidelity: float
    witness_value: float
    certified_sn3: bool
    fidelity_ci: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        lo, hi = self.fidelity_ci if self.fidelity_ci is not None else (None, None)
        return {
            "alpha": self.mes.alpha,
            "beta": self.mes.beta,
            "fidelity": self.fidelity,
            "witness": self.witness_value,
            "certified": self.certified_sn3,
            "ci_low": lo,
            "ci_high": hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WitnessReport":
        ci = None if d.get("ci_low") is None else (d["ci_low"], d["ci_high"])
        return cls(MesParams(d["alpha"], d["beta"]), d["fidelity"], d["witness"], d["certified"], ci)


def witness_value(fidelity: float) -> float:
    """Tr(W3 rho) for W3 = 1 - (3/2)|MES><MES|."""
    return 1 - 1.5 * fidelity


def witness_expectation(rho, p: MesParams) -> float:
    """Tr(W3 rho) evaluated directly from the operator (independent of the closed form)."""
    psi = mes_state(p)
    w3 = np.eye(9) - 1.5 * np.outer(psi, psi.conj())
    return float(np.real(np.trace(w3 @ np.asarray(rho))))


def witness_report(rho, fidelity_ci: tuple[float, float] | None = None) -> WitnessReport:
    """Optimal-MES fidelity, witness value and Schmidt-number-3 verdict.

    With a confidence interval the verdict requires its lower end to exceed 2/3.
    """
    p, f = optimize_mes(rho)
    low = f if fidelity_ci is None else fidelity_ci[0]
    return WitnessReport(p, f, witness_value(f), bool(low > THRESHOLD_SN3), fidelity_ci)


def residual_weight(rho) -> float:
    """Population outside |Lr>, |Gg>, |Rl> (non-zero total OAM)."""
    rho = np.asarray(rho)
    return float(1 - sum(rho[k, k].real for k in MAJOR))


def local_filter_balance(rho):
    """Filter the photon with diag(a_L, a_G, a_R), a_x ~ 1/sqrt(rho_xx) on the
    major diagonal (a_G = 1), so the three major populations become equal.

    Returns ``(filtered_rho, filter_diag, optimal_fidelity_after)``.
    """
    rho = check_density_matrix(rho)
    d = np.array([rho[k, k].real for k in MAJOR])
    if np.any(d <= 0):
        raise ValueError("filter undefined: a major diagonal element is zero")
    a = np.sqrt(d[1] / d)  # photon order L, G, R pairs with MAJOR order
    op = np.kron(np.diag(a), np.eye(3))
    out = op @ rho @ op.conj().T
    out = out / np.trace(out).real
    out = (out + out.conj().T) / 2
    return out, a, optimize_mes(out)[1]


def certify_direct(rho, p: MesParams) -> bool:
    """Sign test on the witness operator itself."""
    return witness_expectation(rho, p) < 0

