"""Cell-edge-aware zero-forcing precoding in Poisson massive-MIMO networks."""
from .analysis import (
    EMPIRICAL,
    MEAN,
    GenGammaParams,
    coverage_asymptotic,
    coverage_cea,
    coverage_ceu,
    crossover_antennas,
    genggamma_cdf,
    genggamma_fit,
)
from .channel import CsiSpec, PilotConfig
from .errors import CeazfError
from .geometry import Window, build_typical_context, sample_kprime, sample_network
from .large_system import DetEquivInput, cea_sir_det, ceu_sir_det, lambda_fixed_point
from .montecarlo import ExperimentConfig, MetricsReport, kprime_histogram, run_antenna_sweep, run_experiment
from .precoding import CEA_ZF, CEU_ZF, ExtendedChannelMatrix, cea_zf, ceu_zf, regularized_cea_zf

__version__ = "0.1.0"
