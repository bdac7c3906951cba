"""Forward model of the coincidence experiment.

Per write pulse a Stokes/anti-Stokes pair is heralded with probability ``p``
(excitation probability) and the anti-Stokes photon is retrieved with
efficiency ``eta``.  Stray light adds ``bg_stokes`` / ``bg_antistokes`` clicks
per pulse.  Only single-pair terms are kept, except in the accidental
product, which is O(p^2); this is adequate for p << 1.

Default calibration: with p = 5e-4 and a 400 ns cycle, a 100 s setting has
N = 2.5e8 pulses.  Asking for ~500 counts in the strongest setting of a
maximally entangled state (probability 1/3) gives eta * p * N / 3 = 500, i.e.
``eta = 0.012``.  This is the module default; eta is not a measured value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .entanglement import MAJOR, mes_state, MesParams
from .states import (
    check_density_matrix,
    load_density_matrix,
    matrix_from_dict,
    maximally_mixed,
    partial_trace,
    projector,
)
from .tomography import CoincidenceTable

REFERENCE_P = 5e-4
REFERENCE_REP_NS = 400.0
REFERENCE_DURATION_S = 100.0
DEFAULT_ETA = 0.012
REFERENCE_DIAGONALS = (0.25, 0.37, 0.26)
REFERENCE_FIDELITY = 0.74
REFERENCE_ALPHA = 0.019
REFERENCE_BETA = -0.058


class ConfigError(ValueError):
    pass


@dataclass
class SourceModel:
    rho_true: np.ndarray
    excitation_prob: float = REFERENCE_P
    retrieval_eff: float = DEFAULT_ETA
    bg_stokes: float = 0.0
    bg_antistokes: float = 0.0
    rep_period_ns: float = REFERENCE_REP_NS
    duration_s: float = REFERENCE_DURATION_S

    def __post_init__(self):
        self.rho_true = check_density_matrix(self.rho_true)
        for name in ("excitation_prob", "retrieval_eff", "bg_stokes", "bg_antistokes"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ConfigError(f"{name} must be a probability, got {v}")
        if not self.excitation_prob < 0.05:
            raise ConfigError("excitation_prob must be << 1 (< 0.05) for the single-pair model")
        if self.rep_period_ns <= 0:
            raise ConfigError("rep_period_ns must be positive")
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be positive")

    @property
    def trials(self) -> float:
        """Write pulses per setting."""
        return self.duration_s / (self.rep_period_ns * 1e-9)

    @classmethod
    def from_config(cls, doc: dict, base_dir=".") -> "SourceModel":
        """Build from a key-value document; unknown keys are rejected.

        ``rho_true`` may be a preset name (``"mes"``, ``"benchmark"``,
        ``"mixed"``), a path to a density-matrix JSON file, or an inline
        ``{dim, re, im}`` object.
        """
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown model keys: {sorted(unknown)}")
        if "rho_true" not in doc:
            raise ConfigError("model.rho_true is required")
        kw = dict(doc)
        kw["rho_true"] = resolve_state(doc["rho_true"], base_dir)
        for k, v in kw.items():
            if k != "rho_true" and not isinstance(v, (int, float)):
                raise ConfigError(f"model.{k} must be a number")
        return cls(**kw)


def resolve_state(spec, base_dir=".") -> np.ndarray:
    if isinstance(spec, dict):
        return check_density_matrix(matrix_from_dict(spec))
    if spec == "mes":
        return projector(mes_state(MesParams()))
    if spec == "benchmark":
        return benchmark_state()
    if spec == "mixed":
        return maximally_mixed()
    path = Path(base_dir) / spec
    if not path.exists():
        raise ConfigError(f"state file not found: {path}")
    return load_density_matrix(path)


def benchmark_state(
    fidelity: float = REFERENCE_FIDELITY,
    diagonals=REFERENCE_DIAGONALS,
    alpha: float = REFERENCE_ALPHA,
    beta: float = REFERENCE_BETA,
) -> np.ndarray:
    """Mixed state with given |Lr>,|Gg>,|Rl> populations and optimal-MES fidelity.

    A coherent component v|chi><chi| (chi carries the populations' square
    roots and the MES phases) sits on an incoherent diagonal background; the
    remaining population is spread evenly over the six non-zero-OAM states.
    """
    d = np.asarray(diagonals, dtype=float)
    major = d.sum()
    if not 0 < major <= 1:
        raise ValueError("major populations must sum to (0, 1]")
    cross = np.sqrt(d[0] * d[1]) + np.sqrt(d[1] * d[2]) + np.sqrt(d[0] * d[2])
    v = (3 * fidelity - major) * major / (2 * cross)
    if not 0 <= v <= major:
        raise ValueError(f"fidelity {fidelity} not reachable with populations {tuple(d)}")
    chi = np.zeros(9, dtype=complex)
    phases = (np.exp(1j * np.pi * alpha), 1.0, np.exp(1j * np.pi * beta))
    for k, dk, ph in zip(MAJOR, d, phases):
        chi[k] = np.sqrt(dk / major) * ph
    rho = v * np.outer(chi, chi.conj())
    for k, dk in zip(MAJOR, d):
        rho[k, k] += dk * (1 - v / major)
    others = [k for k in range(9) if k not in MAJOR]
    for k in others:
        rho[k, k] += (1 - major) / len(others)
    return check_density_matrix(rho)


def expected_counts(model: SourceModel, settings, bg_stokes=None, bg_antistokes=None) -> np.ndarray:
    """Mean coincidences for every setting.

    ``lambda_k = N [eta p Tr(Pi_k rho) + (p q_s + b_s)(eta p q_a + b_as)]``
    with q_s, q_a the single-side detection probabilities for setting k.
    ``bg_stokes`` / ``bg_antistokes`` optionally override the model's
    backgrounds per setting.
    """
    p, eta = model.excitation_prob, model.retrieval_eff
    n = len(settings)
    bs = np.broadcast_to(model.bg_stokes if bg_stokes is None else np.asarray(bg_stokes, float), (n,))
    ba = np.broadcast_to(model.bg_antistokes if bg_antistokes is None else np.asarray(bg_antistokes, float), (n,))
    rho = model.rho_true
    rho_s = partial_trace(rho, over="atom")
    rho_a = partial_trace(rho, over="photon")
    lam = np.empty(n)
    for k, s in enumerate(settings):
        joint = np.real(np.trace(s.op @ rho))
        qs = np.real(np.trace(s.photon_op @ rho_s))
        qa = np.real(np.trace(s.atom_op @ rho_a))
        lam[k] = eta * p * joint + (p * qs + bs[k]) * (eta * p * qa + ba[k])
    return np.clip(model.trials * lam, 0, None)


def sample_counts(model: SourceModel, settings, seed: int) -> CoincidenceTable:
    """Independent Poisson counts per setting, one derived sub-seed per setting."""
    lam = expected_counts(model, settings)
    children = np.random.SeedSequence(seed).spawn(len(settings))
    counts = np.array([np.random.default_rng(c).poisson(l) for c, l in zip(children, lam)], dtype=float)
    return CoincidenceTable(
        counts,
        duration_s=model.duration_s,
        total_trials=int(round(model.trials)),
        indices=[s.index for s in settings],
    )


# -- cross-correlation g2 -------------------------------------------------------

def g2_model(p: float, eta: float, bg_s: float, bg_as: float) -> float:
    """g2 = 1 + eta p / ((p + bg_s)(eta p + bg_as)).

    Per-pulse probabilities lie in [0, 1); the efficiency eta may reach 1.
    """
    for name, v in (("p", p), ("bg_s", bg_s), ("bg_as", bg_as)):
        if not 0 <= v < 1:
            raise ValueError(f"{name} must lie in [0, 1), got {v}")
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if p <= 0:
        raise ValueError("p must be positive")
    denom = (p + bg_s) * (eta * p + bg_as)
    if denom == 0:
        raise ZeroDivisionError("g2 undefined: anti-Stokes singles probability is zero")
    return 1 + eta * p / denom


def g2_invert(g2_target: float, p: float, eta: float = 1.0, symmetric_bg: bool = True) -> tuple[float, float]:
    """Background per pulse that brings g2_model down to ``g2_target``.

    Returns ``(bg_s, bg_as)``: equal backgrounds when ``symmetric_bg``,
    otherwise all stray light on the Stokes arm.
    """
    g_max = g2_model(p, eta, 0, 0)
    if not 1 < g2_target <= g_max * (1 + 1e-12):
        raise ValueError(f"target {g2_target} outside achievable range (1, {g_max}]")

    def split(b):
        return (b, b) if symmetric_bg else (b, 0.0)

    def resid(b):
        return g2_model(p, eta, *split(b)) - g2_target

    if resid(0.0) <= 1e-12 * g2_target:
        return split(0.0)
    hi = p
    while resid(hi) > 0:
        hi *= 2
        if hi >= 1:
            hi = 1 - 1e-15
            if resid(hi) > 0:
                raise ValueError(f"target {g2_target} needs a background above 1 per pulse")
            break
    b = brentq(resid, 0.0, hi, xtol=1e-300, rtol=1e-14, maxiter=500)
    return split(b)


def g2_estimate(stokes: int, antistokes: int, coincidences: int, trials: int) -> float:
    """Counting estimator coincidences * trials / (stokes * antistokes)."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if stokes <= 0 or antistokes <= 0:
        raise ZeroDivisionError("g2 estimate needs non-zero singles on both arms")
    return coincidences * trials / (stokes * antistokes)


def save_model_config(path, model: SourceModel, state_ref: str | None = None) -> None:
    doc = {f.name: getattr(model, f.name) for f in fields(model)}
    doc["rho_true"] = state_ref if state_ref is not None else {
        "dim": 9, "re": model.rho_true.real.tolist(), "im": model.rho_true.imag.tolist()}
    Path(path).write_text(json.dumps(doc, indent=1))
