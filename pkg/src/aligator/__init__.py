"""ALIGATOR: adaptive estimation of bounded-variation trends by aggregating
online averages over a geometric cover of the time axis."""
from .core import (AligatorConfig, AligatorState, OfflineResult, RunTrace,
                   offline_eta, run_offline, run_online, theoretical_eta)
from .errors import (AligatorError, ConfigError, DomainError, InputFormatError,
                     NumericalError, ProtocolError)
from .geometric_cover import DyadicInterval, awake_set, partition
from .baselines import holt_fit, holt_forecast, wavelet_denoise
from .signals import add_noise, make_signal, total_variation
from .sleeping_experts import SpecialistPool
from .variants import HedgedAligator, build_grid, data_driven_eta, heuristic_loss

__version__ = "0.1.0"

__all__ = [
    "AligatorConfig",
    "AligatorState",
    "OfflineResult",
    "RunTrace",
    "offline_eta",
    "run_offline",
    "run_online",
    "theoretical_eta",
    "AligatorError",
    "ConfigError",
    "DomainError",
    "InputFormatError",
    "NumericalError",
    "ProtocolError",
    "DyadicInterval",
    "awake_set",
    "partition",
    "SpecialistPool",
    "HedgedAligator",
    "build_grid",
    "data_driven_eta",
    "heuristic_loss",
    "add_noise",
    "make_signal",
    "total_variation",
    "wavelet_denoise",
    "holt_fit",
    "holt_forecast",
]
