"""Interference alignment designs for secure multiuser MIMO networks.

Three transceiver designs are provided for a K-pair MIMO interference
network overheard by a single eavesdropper:

* ``conventional`` -- leakage-minimizing alternating IA that ignores the
  eavesdropper,
* ``wslm`` -- wiretapped-signal leakage minimization, which additionally
  squeezes all signals into a d-dimensional subspace at the eavesdropper,
* ``zfws`` -- zero-forcing of the wiretapped signal through a cascade
  precoder ``F = Delta @ P`` with ``Delta`` in the wiretap null space.
"""

from .channel import ChannelSet, SystemConfig, draw_channels, snr_to_power
from .ia import (IAOptions, IASolution, IATrace, conventional_ia,
                 evaluate_leakage, null_space_precoder_basis, run_scheme,
                 wslm_feasible, wslm_ia, zfws_feasible, zfws_ia)
from .metrics import (DiagnosticsReport, RateReport, eave_rate,
                      ia_diagnostics, legit_rate, secrecy_report,
                      ssr_improvement)

__version__ = "0.1.0"

__all__ = [
    "ChannelSet", "SystemConfig", "draw_channels", "snr_to_power",
    "IAOptions", "IASolution", "IATrace", "conventional_ia", "wslm_ia",
    "zfws_ia", "evaluate_leakage", "null_space_precoder_basis",
    "run_scheme", "wslm_feasible", "zfws_feasible",
    "RateReport", "DiagnosticsReport", "legit_rate", "eave_rate",
    "secrecy_report", "ia_diagnostics", "ssr_improvement",
]
