"""Flow-based ergodicity analysis for chains of stochastic matrices."""

from .birkhoff import (
    BirkhoffDecomp,
    BirkhoffTerm,
    PermComponent,
    birkhoff_decompose,
    component_for,
    bottleneck_matching,
    decompose_chain,
    max_mixing_permutation,
    rotate_chain,
    rotated_product_identity_check,
)
from .chain import (
    DOUBLY_STOCHASTIC,
    MAX_DIM,
    STOCHASTIC,
    TOL_STOCH,
    TOL_ZERO,
    Chain,
    PermChain,
    Permutation,
    apply_perm_to_set,
    backward_product,
    matrix_at,
    perm_product,
    uniform,
)
from .errors import (
    CapacityError,
    ContractError,
    FlowStarvation,
    InputError,
    InvariantViolation,
    StochFlowError,
)
from .ergodicity import (
    ERGODIC,
    NOT_ERGODIC,
    UNDECIDED,
    ErgodicityVerdict,
    InfiniteFlowGraph,
    LimitEstimate,
    RateCertificate,
    accumulation_times,
    contraction_factor,
    ergodicity_verdict,
    infinite_flow_graph,
    limit_up_to_permutation,
    lyapunov,
    lyapunov_decrease_identity_check,
    rate_certificate,
    simulate,
)
from .flow import (
    Decision,
    FlowReport,
    RegularSeq,
    has_absolute_infinite_flow,
    has_infinite_flow,
    set_flow,
    step_flow,
    total_flow,
    trajectory,
)
from .indexset import IndexSet
from .switching import (
    Collection,
    StabilityVerdict,
    ZeroFlowGraph,
    build_zero_flow_graph,
    is_cycle_free,
    stability_verdict,
    witness_chain_from_cycle,
)

__version__ = "0.1.0"
