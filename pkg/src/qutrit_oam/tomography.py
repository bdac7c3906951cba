"""Density-matrix reconstruction from the 81 coincidence counts.

Two estimators are provided: linear inversion (fast, may be unphysical) and a
maximum-likelihood fit over the Cholesky parameterization rho = T^dag T / Tr,
T lower triangular with real diagonal, which is physical by construction.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm as _normal

from .measurement import measurement_matrix
from .states import matrix_from_dict, matrix_to_dict, maximally_mixed, psd_project

log = logging.getLogger(__name__)

DIM = 9
N_PARAMS = DIM * DIM  # 9 real diagonal + 36 complex sub-diagonal entries
RATE_FLOOR = 1e-12
_TRIL = np.tril_indices(DIM, -1)
_DIAG = np.diag_indices(DIM)


class WellPosednessError(ValueError):
    """The measurement settings do not determine the state."""


@dataclass
class CoincidenceTable:
    """Coincidence counts for the 81 settings plus acquisition metadata.

    ``norm`` is the expected number of coincidences per unit probability, so
    that the mean count of setting k is ``norm * Tr(Pi_k rho) + background[k]``.
    When it is unknown (the usual experimental situation) the reconstruction
    profiles it out.  ``total_trials`` is the number of write pulses per
    setting and is carried as metadata only.
    """

    counts: np.ndarray
    duration_s: float = 100.0
    total_trials: int | None = None
    background: np.ndarray | None = None
    norm: float | None = None
    indices: list[tuple[int, int]] = field(default_factory=lambda: [(i, j) for i in range(9) for j in range(9)])

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.shape != (81,):
            raise ValueError(f"expected 81 counts, got shape {self.counts.shape}")
        if not np.all(np.isfinite(self.counts)) or np.any(self.counts < 0):
            raise ValueError("counts must be finite and non-negative")
        if len(self.indices) != 81:
            raise ValueError("expected 81 setting indices")
        self.indices = [tuple(int(v) for v in ij) for ij in self.indices]
        if self.background is not None:
            self.background = np.broadcast_to(np.asarray(self.background, dtype=float), (81,)).copy()
            if np.any(self.background < 0):
                raise ValueError("background must be non-negative")


def write_counts_csv(path, table: CoincidenceTable) -> None:
    """Write ``i,j,counts`` rows and a JSON sidecar with the metadata."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "counts"])
        for (i, j), n in zip(table.indices, table.counts):
            w.writerow([i, j, int(n) if float(n).is_integer() else repr(float(n))])
    meta = {
        "duration_s": table.duration_s,
        "total_trials": table.total_trials,
        "background_per_setting": None if table.background is None else table.background.tolist(),
        "norm": table.norm,
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=1))


def read_counts_csv(path) -> CoincidenceTable:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"i", "j", "counts"}:
        raise ValueError(f"{path}: expected header i,j,counts")
    if len(rows) != 81:
        raise ValueError(f"{path}: expected 81 rows, found {len(rows)}")
    indices = [(int(r["i"]), int(r["j"])) for r in rows]
    counts = [float(r["counts"]) for r in rows]
    meta = {}
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
    return CoincidenceTable(
        counts,
        duration_s=meta.get("duration_s", 100.0),
        total_trials=meta.get("total_trials"),
        background=meta.get("background_per_setting"),
        norm=meta.get("norm"),
        indices=indices,
    )


def _aligned(table: CoincidenceTable, settings):
    """Pair counts with settings by index and put both in canonical order."""
    if len(settings) != 81:
        raise ValueError(f"expected 81 settings, got {len(settings)}")
    by_index = {}
    for s in settings:
        by_index.setdefault(s.index, []).append(s)
    if len(by_index) == 81 and set(by_index) == set(table.indices):
        order = sorted(range(81), key=lambda k: table.indices[k])
        ordered = [by_index[table.indices[k]][0] for k in order]
    else:
        # duplicate or unknown indices: fall back to positional pairing
        order = sorted(range(81), key=lambda k: settings[k].index)
        ordered = [settings[k] for k in order]
    bg = None if table.background is None else table.background[order]
    return table.counts[order], ordered, bg


def linear_inversion(table: CoincidenceTable, settings) -> np.ndarray:
    """Solve n_k = Tr(Pi_k X) for X, Hermitize and trace-normalize.

    The result can have negative eigenvalues; these are logged, not repaired.
    """
    counts, settings, bg = _aligned(table, settings)
    a = measurement_matrix(settings)
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] <= 1e-10 * s[0]:
        raise WellPosednessError(f"measurement matrix rank deficient (s_min/s_max = {s[-1] / s[0]:.2e})")
    data = counts - (0 if bg is None else bg)
    if table.norm is not None:
        data = data / table.norm
    x = np.linalg.solve(a, data.astype(complex)).reshape(DIM, DIM)
    x = (x + x.conj().T) / 2
    tr = np.trace(x).real
    if tr <= 0:
        raise WellPosednessError("linear inversion gave non-positive trace")
    rho = x / tr
    lmin = np.linalg.eigvalsh(rho).min()
    if lmin < -1e-9:
        log.info("linear inversion is unphysical: min eigenvalue %.3g", lmin)
    return rho


# -- Cholesky parameterization ---------------------------------------------------

def params_to_t(params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    t = np.zeros((DIM, DIM), dtype=complex)
    t[_DIAG] = params[:DIM]
    t[_TRIL] = params[DIM:45] + 1j * params[45:]
    return t


def params_to_rho(params) -> np.ndarray:
    t = params_to_t(params)
    sigma = t.conj().T @ t
    return sigma / np.trace(sigma).real


def rho_to_params(rho, floor: float = 1e-8) -> np.ndarray:
    """Parameters whose T^dag T reproduces ``rho`` (floored to full rank)."""
    rho = np.asarray(rho, dtype=complex)
    rho = rho + floor * np.eye(DIM)
    # reverse-order Cholesky gives the T^dag T (T lower) factorization
    l = np.linalg.cholesky(rho[::-1, ::-1])
    t = l.conj().T[::-1, ::-1]
    d = np.real(np.diag(t)).copy()
    return np.concatenate([d, t[_TRIL].real, t[_TRIL].imag])


class NegLogLikelihood:
    """Negative log-likelihood of the counts as a function of the 81 Cholesky
    parameters, with analytic gradient.

    Poisson model when ``table.norm`` is known, otherwise the multinomial
    likelihood over settings (normalization profiled out).  ``value_and_grad``
    returns the NLL minus its saturated value, which is zero at a perfect fit;
    ``full`` returns the un-shifted NLL.
    """

    def __init__(self, table: CoincidenceTable, settings):
        self.counts, self.settings, self.background = _aligned(table, settings)
        self.norm = table.norm
        if self.norm is None and self.background is not None and np.any(self.background > 0):
            raise ValueError("background subtraction needs an absolute normalization (table.norm)")
        self.a = measurement_matrix(self.settings)
        self.total = self.counts.sum()
        pos = self.counts > 0
        self._pos = pos
        if self.norm is None:
            f = self.counts[pos] / self.total
            self._saturated = -np.sum(self.counts[pos] * np.log(f))
        else:
            n = self.counts[pos]
            self._saturated = np.sum(n - n * np.log(n))

    def probabilities(self, rho) -> np.ndarray:
        return np.real(self.a @ np.asarray(rho).ravel())

    def _rates(self, q):
        if self.norm is None:
            return np.maximum(q, RATE_FLOOR)
        bg = 0.0 if self.background is None else self.background
        return np.maximum(self.norm * q + bg, RATE_FLOOR)

    def full(self, rho) -> float:
        q = self.probabilities(rho)
        lam = self._rates(q)
        n = self.counts
        if self.norm is None:
            return float(-np.sum(n * np.log(lam / lam.sum())))
        return float(np.sum(lam - n * np.log(lam)))

    def value_and_grad(self, params):
        t = params_to_t(params)
        sigma = t.conj().T @ t
        tr = np.trace(sigma).real
        rho = sigma / tr
        q = self.probabilities(rho)
        lam = self._rates(q)
        n = self.counts
        if self.norm is None:
            big_q = lam.sum()
            f = -np.sum(n * np.log(lam / big_q)) - self._saturated
            w = -n / lam + self.total / big_q
        else:
            f = np.sum(lam - n * np.log(lam)) - self._saturated
            w = self.norm * (1 - n / lam)
        # dF/drho, then chain rule through rho = sigma / Tr(sigma), sigma = T^dag T
        g_rho = (self.a.T @ w).reshape(DIM, DIM).T
        g_sig = g_rho / tr - (np.trace(g_rho @ sigma).real / tr**2) * np.eye(DIM)
        b = g_sig @ t.conj().T
        bt = b.T  # bt[a, b] = B[b, a]
        grad = np.concatenate([
            2 * np.real(np.diag(bt)),
            2 * np.real(bt[_TRIL]),
            -2 * np.imag(bt[_TRIL]),
        ])
        return float(f), grad

    def __call__(self, params) -> float:
        return self.value_and_grad(params)[0]


@dataclass
class TomographyResult:
    rho_hat: np.ndarray
    neg_log_likelihood: float
    iterations: int
    converged: bool
    method: str = "mle"
    history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        doc = matrix_to_dict(self.rho_hat)
        doc["diagnostics"] = {
            "neg_log_likelihood": self.neg_log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "method": self.method,
        }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TomographyResult":
        diag = doc.get("diagnostics", {})
        return cls(
            matrix_from_dict(doc),
            diag.get("neg_log_likelihood", float("nan")),
            diag.get("iterations", 0),
            diag.get("converged", True),
            diag.get("method", "mle"),
        )


def mle_reconstruct(
    table: CoincidenceTable,
    settings,
    max_iter: int = 5000,
    rel_tol: float = 1e-10,
    warm_start: bool = False,
    initial=None,
) -> TomographyResult:
    """Maximum-likelihood state from the counts (L-BFGS on the Cholesky factor).

    Starts from I/9 unless ``initial`` (a density matrix) is given or
    ``warm_start`` asks for the PSD-projected linear inversion.
    """
    if table.counts.sum() == 0:
        raise ValueError("all counts are zero; nothing to reconstruct")
    nll = NegLogLikelihood(table, settings)
    rho0 = maximally_mixed() if initial is None else np.asarray(initial, dtype=complex)
    if warm_start and initial is None:
        try:
            rho0 = psd_project(linear_inversion(table, settings))
        except (WellPosednessError, ValueError) as exc:
            log.debug("warm start unavailable: %s", exc)
    x0 = rho_to_params(0.98 * rho0 + 0.02 * maximally_mixed())

    history = [nll(x0)]

    def record(xk):
        history.append(nll(xk))

    res = minimize(
        nll.value_and_grad,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"maxiter": max_iter, "maxfun": 20 * max_iter, "ftol": rel_tol, "gtol": 1e-12, "maxcor": 30},
    )
    rho = params_to_rho(res.x)
    rho = (rho + rho.conj().T) / 2
    rel_change = abs(history[-2] - history[-1]) / max(abs(history[-1]), 1.0) if len(history) > 1 else 0.0
    converged = res.nit < max_iter and (res.success or rel_change < rel_tol)
    return TomographyResult(rho, nll.full(rho), int(res.nit), bool(converged), "mle", history)


# -- Monte-Carlo error propagation -------------------------------------------------

@dataclass
class MonteCarloSummary:
    mean: float
    std: float
    percentiles: dict[float, float]
    values: np.ndarray = field(repr=False)
    n_excluded: int = 0

    def interval(self, estimate: float, level: float = 0.95) -> tuple[float, float]:
        """Normal interval ``estimate +- z * std``."""
        z = _normal.ppf(0.5 + level / 2)
        return (estimate - z * self.std, estimate + z * self.std)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "percentiles": {str(k): v for k, v in self.percentiles.items()},
            "n_samples": int(len(self.values)),
            "n_excluded": self.n_excluded,
        }


def monte_carlo_errors(
    table: CoincidenceTable,
    settings,
    n_samples: int,
    derived_fn,
    seed: int = 0,
    workers: int | None = None,
    **mle_opts,
) -> MonteCarloSummary:
    """Poisson-resample every count around its observed value, reconstruct each
    resample and collect ``derived_fn(rho)`` statistics.

    Samples whose reconstruction does not converge are excluded and counted.
    Each resample starts from the reconstruction of the observed counts.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    children = np.random.SeedSequence(seed).spawn(n_samples)
    if "initial" not in mle_opts:
        mle_opts["initial"] = mle_reconstruct(table, settings, **mle_opts).rho_hat

    def one(child):
        rng = np.random.default_rng(child)
        resampled = CoincidenceTable(
            rng.poisson(table.counts).astype(float),
            duration_s=table.duration_s,
            total_trials=table.total_trials,
            background=table.background,
            norm=table.norm,
            indices=table.indices,
        )
        if resampled.counts.sum() == 0:
            return None
        res = mle_reconstruct(resampled, settings, **mle_opts)
        if not res.converged:
            return None
        return float(derived_fn(res.rho_hat))

    if workers == 1:
        results = [one(c) for c in children]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, children))
    values = np.array([v for v in results if v is not None])
    excluded = sum(v is None for v in results)
    if len(values) < 2:
        raise RuntimeError(f"only {len(values)} Monte-Carlo samples converged")
    qs = (2.5, 16.0, 50.0, 84.0, 97.5)
    return MonteCarloSummary(
        float(values.mean()),
        float(values.std(ddof=1)),
        dict(zip(qs, np.percentile(values, qs).tolist())),
        values,
        excluded,
    )
