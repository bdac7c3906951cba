"""Laguerre-Gaussian fields at the waist plane, SLM phase masks and the
Gaussian (single-mode-fiber) component of a masked beam.

Overlaps are 2-D composite Simpson integrals.  Two details keep them accurate
at the 1e-7 level even though the masks are not smooth:

* step masks split the x axis at the discontinuity, and each piece is
  integrated separately with one-sided values at its ends;
* for a vortex mask the quadrature nodes are shifted so the phase singularity
  sits at a cell centre, and the leading singular term
  ``c * T(x, y) * exp(-r^2 / w^2)`` (whose exact integral is zero) is
  subtracted before integrating.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from math import factorial
from pathlib import Path

import numpy as np
from scipy.special import erf, eval_genlaguerre, ive

MIN_HALF_EXTENT = 6.0
GRATING_EFFICIENCY = 0.25
_ROW_BLOCK = 128


class GridError(ValueError):
    """Quadrature grid cannot resolve the requested integral."""


@dataclass(frozen=True)
class LGModeSpec:
    p: int = 0
    m: int = 0
    w0: float = 1.0

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("radial index p must be non-negative")
        if self.w0 <= 0:
            raise ValueError("beam waist must be positive")

    def amplitude(self, x, y):
        return lg_amplitude(self, x, y)


def lg_amplitude(spec: LGModeSpec, x, y) -> np.ndarray:
    """Normalized LG_{p,m} field at the waist, evaluated pointwise."""
    am = abs(spec.m)
    w = spec.w0
    r2 = (np.asarray(x) ** 2 + np.asarray(y) ** 2) / w**2
    norm = np.sqrt(2 * factorial(spec.p) / (np.pi * factorial(spec.p + am))) / w
    radial = (2 * r2) ** (am / 2) * eval_genlaguerre(spec.p, am, 2 * r2) * np.exp(-r2)
    if spec.m == 0:
        return norm * radial + 0j
    return norm * radial * np.exp(1j * spec.m * np.arctan2(y, x))


@dataclass(frozen=True)
class PhaseMask:
    """Pure-phase modulation T(x, y).

    * ``vortex``: exp(i charge arg((x - x0) + i (y - y0))), with T = 1 at the core
    * ``step``: exp(i pi/2 sgn(x - x0))
    * ``uniform``: exp(i phase)

    ``pixel_size`` optionally samples the mask at SLM pixel centres.
    """

    kind: str
    x0: float = 0.0
    y0: float = 0.0
    phase: float = 0.0
    charge: int = 1
    pixel_size: float | None = None

    def __post_init__(self):
        if self.kind not in ("vortex", "step", "uniform"):
            raise ValueError(f"unknown mask kind {self.kind!r}")

    @classmethod
    def vortex(cls, x0=0.0, y0=0.0, charge=1, pixel_size=None):
        return cls("vortex", x0=x0, y0=y0, charge=charge, pixel_size=pixel_size)

    @classmethod
    def step(cls, x0=0.0, pixel_size=None):
        return cls("step", x0=x0, pixel_size=pixel_size)

    @classmethod
    def uniform(cls, phase=0.0):
        return cls("uniform", phase=phase)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.pixel_size is not None:
            x = (np.floor(x / self.pixel_size) + 0.5) * self.pixel_size
            y = (np.floor(y / self.pixel_size) + 0.5) * self.pixel_size
        if self.kind == "uniform":
            return np.full(np.broadcast(x, y).shape, np.exp(1j * self.phase))
        if self.kind == "step":
            return np.exp(0.5j * np.pi * np.sign(x - self.x0)) * np.ones_like(y)
        # np.angle(0) == 0, so the core gets T = 1
        return np.exp(1j * self.charge * np.angle((x - self.x0) + 1j * (y - self.y0)))

    @property
    def exact(self) -> bool:
        return self.pixel_size is None


@dataclass(frozen=True)
class Field:
    """Superposition of LG modes, optionally followed by phase masks."""

    terms: tuple
    masks: tuple = ()

    def base(self, x, y):
        out = 0j
        for c, spec in self.terms:
            out = out + c * lg_amplitude(spec, x, y)
        return out

    def __call__(self, x, y):
        out = self.base(x, y)
        for mask in self.masks:
            out = out * mask(x, y)
        return out

    @property
    def scale(self) -> float:
        return max(spec.w0 for _, spec in self.terms)

    def __add__(self, other: "Field") -> "Field":
        if self.masks or other.masks:
            raise ValueError("add fields before applying masks")
        return Field(self.terms + other.terms)

    def __mul__(self, c) -> "Field":
        return Field(tuple((c * a, s) for a, s in self.terms), self.masks)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "Field":
        return self * (1 / c)


def lg_field(spec: LGModeSpec) -> Field:
    return Field(((1.0, spec),))


def apply_mask(field: Field, mask: PhaseMask) -> Field:
    """Pointwise product E(x, y) T(x, y)."""
    return replace(field, masks=field.masks + (mask,))


@dataclass(frozen=True)
class QuadratureGrid:
    """Square grid of ``samples_per_axis`` Simpson intervals spanning
    +-``half_extent`` beam waists."""

    half_extent: float = 8.0
    samples_per_axis: int = 1024

    def doubled(self) -> "QuadratureGrid":
        return replace(self, samples_per_axis=2 * self.samples_per_axis)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.ones(n + 1)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return w * h / 3


def _axis(lim: float, n: int, breaks=(), centre=None):
    """Simpson nodes and weights covering [-lim, lim].

    ``breaks`` split the axis into separately integrated pieces whose end
    nodes are nudged inside (one-sided limits).  Without breaks, ``centre``
    places a point at the middle of a cell.
    """
    h = 2 * lim / n
    breaks = sorted(b for b in breaks if -lim < b < lim)
    if breaks:
        edges = [-lim, *breaks, lim]
        xs, ws = [], []
        nudge = 1e-12 * lim
        for a, b in zip(edges[:-1], edges[1:]):
            k = max(2, 2 * int(round((b - a) / (2 * h))))
            x = np.linspace(a, b, k + 1)
            x[0] += nudge
            x[-1] -= nudge
            xs.append(x)
            ws.append(_simpson_weights(k, (b - a) / k))
        return np.concatenate(xs), np.concatenate(ws)
    if centre is None or not -lim < centre < lim:
        return np.linspace(-lim, lim, n + 1), _simpson_weights(n, h)
    k0 = int(np.floor((-lim - centre) / h - 0.5))
    k1 = int(np.ceil((lim - centre) / h - 0.5))
    if (k1 - k0) % 2:
        k1 += 1
    x = centre + (np.arange(k0, k1 + 1) + 0.5) * h
    return x, _simpson_weights(k1 - k0, h)


def overlap(field: Field, target: LGModeSpec, grid: QuadratureGrid | None = None) -> complex:
    """<target|field> = integral of field * conj(target) over the grid."""
    grid = grid or QuadratureGrid()
    if grid.half_extent < MIN_HALF_EXTENT:
        raise GridError(f"half_extent {grid.half_extent} w0 < {MIN_HALF_EXTENT} w0: quadrature not converged")
    if grid.samples_per_axis < 2 or grid.samples_per_axis % 2:
        raise GridError("samples_per_axis must be a positive even number")
    scale = max(field.scale, target.w0)
    lim = grid.half_extent * scale
    n = grid.samples_per_axis
    h = 2 * lim / n

    x_breaks = [m.x0 for m in field.masks if m.kind == "step" and m.exact]
    vortices = [m for m in field.masks if m.kind == "vortex" and m.exact]
    cx = vortices[0].x0 if vortices else None
    cy = vortices[0].y0 if vortices else None
    xs, wx = _axis(lim, n, x_breaks, cx)
    ys, wy = _axis(lim, n, (), cy)

    # leading singular term at each vortex core; its integral over the plane is 0
    subtract = []
    for k, vm in enumerate(vortices):
        edge = lim - max(abs(vm.x0), abs(vm.y0))
        width = min(scale, edge / 6)
        if width < 20 * h:
            continue
        others = [m for m in field.masks if m is not vm]
        c = field.base(vm.x0, vm.y0) * np.conj(lg_amplitude(target, vm.x0, vm.y0))
        for m in others:
            c = c * m(vm.x0, vm.y0)
        if c != 0:
            subtract.append((complex(c), vm, width))

    total = 0j
    for start in range(0, len(ys), _ROW_BLOCK):
        yb = ys[start:start + _ROW_BLOCK, None]
        xb = xs[None, :]
        f = field(xb, yb) * np.conj(lg_amplitude(target, xb, yb))
        for c, vm, width in subtract:
            r2 = (xb - vm.x0) ** 2 + (yb - vm.y0) ** 2
            f = f - c * vm(xb, yb) * np.exp(-r2 / width**2)
        total += wy[start:start + _ROW_BLOCK] @ f @ wx
    return complex(total)


def gaussian_component(field: Field, filter_w0: float, grid: QuadratureGrid | None = None) -> float:
    """|<LG_00(filter_w0)|field>|^2: power coupled into a single-mode fiber."""
    return abs(overlap(field, LGModeSpec(0, 0, filter_w0), grid)) ** 2


def conversion_efficiency(
    source: LGModeSpec | Field,
    mask: PhaseMask,
    filter_w0: float,
    grid: QuadratureGrid | None = None,
    target: LGModeSpec | None = None,
) -> float:
    """Power of the masked source in the filter mode (LG_00 unless ``target``)."""
    field = source if isinstance(source, Field) else lg_field(source)
    target = target or LGModeSpec(0, 0, filter_w0)
    return abs(overlap(apply_mask(field, mask), target, grid)) ** 2


def vortex_scan(w0: float, s_values, path: str = "axis", grid: QuadratureGrid | None = None,
                filter_w0: float | None = None, charge: int = 1) -> np.ndarray:
    """Gaussian component of a w0 Gaussian behind a vortex mask displaced to
    (s, 0) (``path="axis"``) or (s, s) (``path="diagonal"``)."""
    if path not in ("axis", "diagonal"):
        raise ValueError(f"unknown path {path!r}")
    s_values = np.asarray(s_values, dtype=float)
    if not np.all(np.isfinite(s_values)):
        raise ValueError("displacements must be finite")
    filter_w0 = w0 if filter_w0 is None else filter_w0
    beam = lg_field(LGModeSpec(0, 0, w0))
    out = []
    for s in s_values:
        mask = PhaseMask.vortex(s, s if path == "diagonal" else 0.0, charge=charge)
        out.append(gaussian_component(apply_mask(beam, mask), filter_w0, grid))
    return np.array(out)


def step_scan(w0: float, x0_values, grid: QuadratureGrid | None = None,
              filter_w0: float | None = None) -> np.ndarray:
    """Gaussian component of a w0 Gaussian behind a pi/2 step mask at x0."""
    filter_w0 = w0 if filter_w0 is None else filter_w0
    beam = lg_field(LGModeSpec(0, 0, w0))
    return np.array([
        gaussian_component(apply_mask(beam, PhaseMask.step(x0)), filter_w0, grid)
        for x0 in np.asarray(x0_values, dtype=float)
    ])


def step_closed_form(w0: float, x0) -> np.ndarray:
    """erf^2(sqrt2 x0 / w0): the step mask leaves amplitude P(x>x0) - P(x<x0)."""
    return erf(np.sqrt(2) * np.asarray(x0, dtype=float) / w0) ** 2


def vortex_closed_form(w0: float, d) -> np.ndarray:
    """Gaussian component for a charge-1 vortex at distance d from the beam axis.

    With u = d / w0: (pi u^2 / 2) [e^{-u^2}(I0(u^2) + I1(u^2))]^2, from doing the
    angular integral (Bessel I1) and then the radial one analytically.
    """
    u2 = (np.asarray(d, dtype=float) / w0) ** 2
    return np.pi * u2 / 2 * (ive(0, u2) + ive(1, u2)) ** 2


def grating_efficiency_scale(component: float, efficiency: float = GRATING_EFFICIENCY) -> float:
    """Scale a mode-conversion figure by the first-order grating efficiency."""
    if not 0 <= component <= 1:
        raise ValueError("component must lie in [0, 1]")
    return component * efficiency


def peak_normalized(curve) -> np.ndarray:
    curve = np.asarray(curve, dtype=float)
    return curve / curve.max()


def richardson(coarse, fine, order: float = 3.0):
    """Extrapolate two results at step h and h/2 with error ~ h^order."""
    coarse = np.asarray(coarse)
    fine = np.asarray(fine)
    return fine + (fine - coarse) / (2**order - 1)


def convergence_gap(fn, grid: QuadratureGrid | None = None) -> float:
    """Largest change in ``fn(grid)`` when the grid resolution is doubled."""
    grid = grid or QuadratureGrid()
    return float(np.max(np.abs(np.asarray(fn(grid.doubled())) - np.asarray(fn(grid)))))


def field_snapshot(field: Field, half_extent: float = 3.0, n: int = 201):
    """Intensity and phase on an n x n grid spanning +-half_extent * scale."""
    lim = half_extent * field.scale
    x = np.linspace(-lim, lim, n)
    xx, yy = np.meshgrid(x, x)
    e = field(xx, yy)
    return x, x.copy(), np.abs(e) ** 2, np.angle(e)


def write_snapshot_csv(path, x, y, intensity, phase) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "intensity", "phase"])
        for iy, yv in enumerate(y):
            for ix, xv in enumerate(x):
                w.writerow([repr(float(xv)), repr(float(yv)), repr(float(intensity[iy, ix])), repr(float(phase[iy, ix]))])


def write_curve_csv(path, s, values) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "gaussian_component"])
        for a, b in zip(s, values):
            w.writerow([repr(float(a)), repr(float(b))])


def read_curve_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["s"]) for r in rows]),
            np.array([float(r["gaussian_component"]) for r in rows]))
