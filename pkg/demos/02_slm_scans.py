"""
Displacing the SLM hologram
===========================

A Gaussian test beam passes a vortex (or step) hologram whose centre is moved
across the beam; a single-mode fiber keeps only the Gaussian part.  The
resulting curves are zero when the hologram is centred and rise to one when
it is far away.  Numerical curves are compared with their closed forms.

    python demos/02_slm_scans.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from qutrit_oam.optics import (
    QuadratureGrid,
    convergence_gap,
    grating_efficiency_scale,
    peak_normalized,
    step_closed_form,
    step_scan,
    vortex_closed_form,
    vortex_scan,
    write_curve_csv,
)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(parents=True, exist_ok=True)

w0 = 2.2  # mm, test-beam waist
s = np.linspace(-3 * w0, 3 * w0, 31)

vortex_axis = vortex_scan(w0, s, "axis")
vortex_diag = vortex_scan(w0, s, "diagonal")
step = step_scan(w0, s)

print("   s/w0   vortex(axis)  closed form   step        erf^2")
for si, va, st in list(zip(s, vortex_axis, step))[::3]:
    print(f"{si / w0:7.2f}  {va:11.7f}  {vortex_closed_form(w0, si):11.7f}  {st:10.7f}  {step_closed_form(w0, si):10.7f}")

# The diagonal path moves the core sqrt2 further per step, so it rises faster.
print(f"at s = w0: axis {vortex_scan(w0, [w0])[0]:.4f}, diagonal {vortex_scan(w0, [w0], 'diagonal')[0]:.4f}")

# Is the quadrature converged?  Doubling the grid should barely move the curve.
gap = convergence_gap(lambda g: vortex_scan(w0, s[::5], "axis", g), QuadratureGrid())
print(f"grid-doubling change on the vortex curve: {gap:.1e}")

# A blazed grating sends roughly a quarter of the light into the first order.
print(f"far-off-centre throughput incl. grating: {grating_efficiency_scale(vortex_axis[-1]):.4f}")

write_curve_csv(out / "vortex_axis.csv", s, vortex_axis)
write_curve_csv(out / "vortex_diagonal.csv", s, vortex_diag)
write_curve_csv(out / "step.csv", s, step)
write_curve_csv(out / "vortex_axis_peak_normalized.csv", s, peak_normalized(vortex_axis))
print(f"curves written to {out}/")
