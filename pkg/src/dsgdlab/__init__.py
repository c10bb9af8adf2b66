"""Decentralized-SGD simulation lab.

Simulates gossip-averaged SGD (Variants A and B, optionally projected) over
configurable doubly stochastic communication graphs, estimates algorithmic
stability and generalization error through coupled paired runs, and evaluates
the matching closed-form bounds.
"""

from .bounds import (
    BoundInputs,
    BoundReport,
    bound_convex,
    bound_data_dependent,
    bound_nonconvex,
    bound_strongly,
    bound_worst_convex,
    bound_worst_convex_spectral,
    bound_worst_nonconvex,
    bound_worst_strongly,
    check_stepsize,
    compute_init_gap,
)
from .datagen import DataPoint, FederatedDataset, MixtureSpec, SampleBatch, fresh_swap_value, partition, sample
from .engine import (
    DsgdConfig,
    DsgdRun,
    SampleSchedule,
    Stepsize,
    average_iterate,
    run,
    run_paired,
    simulate,
)
from .losses import (
    BoundedNonconvexLoss,
    LogisticLoss,
    LossConstants,
    RidgeLoss,
    estimate_constants,
    make_loss,
    project_ball,
)
from .stability import (
    GenError,
    StabilityEstimate,
    estimate_generalization,
    estimate_on_average_stability,
    estimate_worst_model_stability,
    generalization_experiment,
    stability_experiment,
    swap_dataset,
)
from .topology import (
    MixingMatrix,
    TopologyDiagnostics,
    diagnostics,
    make_complete_uniform,
    make_identity,
    make_lazy_complete,
    make_ring,
    matrix_power,
    mixing_matrix,
    validate,
)

__version__ = "0.1.0"
