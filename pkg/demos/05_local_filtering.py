"""
Would balancing the populations help?
=====================================

The three correlated terms |Lr>, |Gg>, |Rl> are not equally populated.  A
local filter on the photon, diag(a_L, a_G, a_R), can equalise them.  For a
pure state that recovers a maximally entangled state; for a realistic mixed
state the gain in MES fidelity is small, so the imbalance is not what limits
the fidelity.

    python demos/05_local_filtering.py
"""

import numpy as np

from qutrit_oam.entanglement import MAJOR, local_filter_balance, optimize_mes
from qutrit_oam.simulation import benchmark_state
from qutrit_oam.states import product_ket, projector

# Pure but unbalanced.
psi = np.sqrt(0.25) * product_ket("Lr") + np.sqrt(0.37) * product_ket("Gg") + np.sqrt(0.26) * product_ket("Rl")
psi /= np.linalg.norm(psi)
pure = projector(psi)
_, a, f_after = local_filter_balance(pure)
print(f"pure state: F {optimize_mes(pure)[1]:.4f} -> {f_after:.4f} with filter {np.round(a, 4)}")

# Mixed, with F = 0.74 before filtering.
for f in (0.70, 0.74, 0.80):
    rho = benchmark_state(fidelity=f)
    filtered, a, f_after = local_filter_balance(rho)
    pops = [filtered[k, k].real for k in MAJOR]
    print(f"mixed state: F {optimize_mes(rho)[1]:.4f} -> {f_after:.4f}, "
          f"balanced populations {np.round(pops, 4)}")
