"""Min-rule distributed hypothesis testing with full and partial belief sharing."""
from .beliefs import (
    SharedMessage,
    estimate_update_own,
    estimate_update_previous,
    local_update,
    min_rule_full,
    min_rule_partial,
    normalize,
    uniform_belief,
)
from .engine import (
    RecordFlags,
    SharingMode,
    SimulationConfig,
    TauMode,
    Trajectory,
    run,
    select_tau,
    step,
)
from .errors import (
    DataError,
    DomainError,
    EngineError,
    GenerationError,
    MinruleError,
    NumericalDegeneracyError,
    OracleRangeError,
    ParameterError,
    SpecError,
)
from .graph import Network, circulant, generate_k_regular, is_strongly_connected, neighbors
from .metrics import (
    convergence_time,
    discriminating_rate_bound,
    learning_verdict,
    local_log_ratio_rate,
    median_convergence_time,
    rejection_rate,
    theoretical_rate_bound,
)
from .observation import (
    LikelihoodModel,
    check_global_identifiability,
    discriminating_set,
    generate_random_model,
    kl_divergence,
    sample_observation,
    with_copied_columns,
)
from .oracle import oracle_run

__version__ = "0.1.0"
