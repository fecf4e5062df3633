"""Information-based phase reconstruction of the mixed-field Ising chain.

Exact ground states of the antiferromagnetic chain with transverse and
longitudinal fields, projective-measurement sampling from them, and three
routes from bitstrings back to information measures: a neural
lower-bound MI estimator, plug-in histograms with a convergence fit,
and a recursive-halving specific entropy.  A sweep layer maps these
over the field plane and traces phase boundaries.
"""

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DatasetFormatError,
    DimensionError,
    NumericError,
    QmineError,
)
from .model import ModelParams, apply_hamiltonian, diagonal_energies
from .eigensolver import (
    GroundStateResult,
    WaveFunction,
    fidelity,
    fidelity_susceptibility,
    ground_state,
)
from .exact import (
    Partition,
    ProbabilityTable,
    alpha_ratio,
    exact_mutual_information,
    half_partition,
    marginalize,
    mean_sz,
    quarter_partition,
    shannon_entropy,
    state_probabilities,
    subsystem_index,
    von_neumann_entropy,
)
from .sampling import (
    BitstringDataset,
    DatasetMeta,
    PairBatch,
    bits_from_configs,
    make_pair_batch,
    project,
    read_dataset,
    sample_bitstrings,
    write_dataset,
)
from .mine import (
    MiEstimate,
    TrainConfig,
    TrainResult,
    estimate_mi,
    train_single,
    write_diagnostics,
)
from .plugin import (
    FitResult,
    convergence_study,
    fit_convergence,
    mi_from_configs,
    plugin_mi,
    plugin_mi_ensemble,
)
from .mice import (
    MiceConfig,
    MiceDecomposition,
    MiceLevel,
    exact_specific_entropy,
    halving_schedule,
    specific_entropy,
)
from .sweep import (
    BoundaryPoint,
    PhaseGrid,
    SusceptibilityScan,
    SweepConfig,
    boundary_trace,
    derivative_scan,
    field_axis,
    load_grid,
    run_point,
    run_sweep,
    susceptibility_scan,
)
from .estimators import (
    MiceEntropyEstimator,
    MineMutualInfoEstimator,
    PluginMutualInfoEstimator,
)

__version__ = "0.1.0"
