"""Multiple random-scan MCMC samplers for latent space network models.

The package fits latent-space models to weighted, possibly multi-layer
temporal networks by Metropolis-within-Gibbs, and provides random-scan
sweep strategies that update only a random subset of latent positions
per iteration, with optional acceptance-driven adaptation of the
per-node selection probabilities. Hot likelihood kernels are compiled
(Cython) with a pure NumPy fallback selected at import.
"""

from .diag import (
    DiagnosticsReport,
    chain_variance,
    ess,
    ks_convergence_sequence,
    ks_statistic,
    mse,
    report_from_trace,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .lscore import (
    LatentState,
    PriorSpec,
    alpha_conditional_logpost,
    edge_loglik,
    eta_of,
    joint_logpost,
    node_conditional_logpost,
    recenter,
)
from .netdata import (
    BERNOULLI_LOGIT,
    POISSON_LOG,
    NetworkDataError,
    NetworkTensor,
    WeightFamily,
    degree_stats,
    load_network,
    save_network,
)
from .proposals import ProposalState, adapt, propose
from .sampler import (
    AmhSettings,
    ChainConfig,
    ChainTrace,
    mh_accept,
    run_chain,
    step_alpha,
    step_nodes,
)
from .scan import (
    BlockPartition,
    ScanPlan,
    SelectionProbs,
    build_partition_heuristic,
    damped_update,
    draw_index_set,
    normalize_block_probs,
    update_selection_prob,
)
from .synth import DgpSpec, gen_coords, make_dataset, preset, simulate_weights

__version__ = "0.1.0"
