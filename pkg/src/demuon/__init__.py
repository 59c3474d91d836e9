"""Decentralized matrix optimization lab: orthogonalized tracked momentum
over gossip topologies, three baselines, and heavy-tailed gradient noise."""

from .config import ConfigError, ExperimentConfig, parse_config
from .diagnostics import (
    MetricsRow,
    PotentialParams,
    consensus_bound,
    consensus_error,
    consensus_error_nuclear,
    min_horizon,
    potential,
    theorem_potential_params,
    u_dm_constant,
)
from .linalg import (
    NumericalFailure,
    SvdFactors,
    frobenius_norm,
    msgn_exact,
    msgn_newton_schulz,
    nuclear_norm,
    reduced_svd,
    spectral_norm,
)
from .noise import NoiseModel, sample_noise, stochastic_gradient
from .optimizers import (
    ALGORITHMS,
    BaselineParams,
    RunResult,
    RunState,
    ScheduleParams,
    clip_to_frobenius,
    demuon_step,
    dsgd_clip_step,
    dsgd_step,
    gt_nsgdm_step,
    initial_state,
    run,
    theoretical_schedule,
)
from .problems import (
    ProblemFormatError,
    ProblemSet,
    average_gradient,
    dump_problem,
    exact_gradient,
    load_problem,
    make_nonconvex_gram,
    make_quadratic,
    value,
)
from .topology import (
    InvalidMixingError,
    MixingReport,
    MixingSpec,
    build_complete,
    build_directed_exponential,
    build_ring,
    load_mixing_csv,
    mix_blocks,
    mixing_rate,
    validate_mixing,
)

__version__ = "0.1.0"
