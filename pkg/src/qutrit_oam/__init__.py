"""Simulation and analysis of qutrit-qutrit OAM entanglement experiments:
two-qutrit tomography, Schmidt-number certification, and SLM mode-conversion
overlaps of Laguerre-Gaussian beams."""

from .entanglement import (
    MesParams,
    WitnessReport,
    local_filter_balance,
    mes_fidelity,
    mes_state,
    optimize_mes,
    residual_weight,
    witness_report,
)
from .measurement import ProjectorSetting, atom_kets, perturb_setting, photon_kets, projector_set
from .optics import (
    LGModeSpec,
    PhaseMask,
    QuadratureGrid,
    apply_mask,
    conversion_efficiency,
    gaussian_component,
    lg_field,
    step_scan,
    vortex_scan,
)
from .simulation import SourceModel, expected_counts, g2_estimate, g2_invert, g2_model, benchmark_state, sample_counts
from .states import fidelity_pure, partial_trace, projector, schmidt_rank, tensor
from .tomography import CoincidenceTable, TomographyResult, linear_inversion, mle_reconstruct, monte_carlo_errors

__version__ = "0.1.0"
