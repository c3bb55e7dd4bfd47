"""No-free-lunch risk bounds for unitary-embedded tensor-network learning models."""

__version__ = "0.1.0"

from .bounds2d import PepsBoundParams, thm2_lower_bound, thm2_thermo_limit
from .ising2d import ToricLattice, exact_avg_risk_2d, validate_ess, weight_f, weight_g, z_terms
from .learning import (
    ExperimentConfig,
    OptimizerConfig,
    TrainingSet,
    make_training_set,
    optimize_hypothesis,
    perfect_hypothesis,
    run_experiment,
)
from .moments1d import (
    BlockPhaseUnitary,
    TransferMatrix,
    config_sum_1d,
    exact_avg_risk_1d,
    mpo_bound,
    quantum_nfl_baseline,
    second_moment_blockphase,
    second_moment_identity,
    thm1_lower_bound,
    transfer_matrix,
)
from .numeric import RngStream, haar_unitary, kron, trace_norm
from .oracle import McConfig, RiskEstimate, mc_risk, mc_second_moment_mps, mc_second_moment_peps
from .polyomino import GenFunParams, PolyominoTable, enumerate_directed, gen_fun, gen_fun_series
from .states import MpsSpec, PepsSpec, contract_mps, contract_peps, normalize, sample_mps, sample_peps
