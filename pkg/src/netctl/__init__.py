"""netctl: control-energy analysis and control synthesis for complex networks.

The package quantifies how hard a network is to control (smallest eigenvalue
of the controllability Gramian), evaluates analytic tradeoff bounds between
control energy and number of control nodes, selects control nodes by
recursive spectral partitioning, and synthesizes centralized minimum-energy
and cluster-decoupled open-loop inputs with verified energy certificates.
"""

from .bounds import (
    BoundReport,
    CardinalityBound,
    count_modes_within,
    lambda_min_upper_bound,
    min_control_nodes,
    symmetric_lambda_min_bound,
    tightest_upper_bound,
)
from .decoupled import (
    ControlPlan,
    GainMatrices,
    auto_horizon,
    decoupled_energy_bound,
    gain_matrices,
    hinf_gain,
    interconnection_matrix,
    l2_gains_matrix,
    local_energy_matrix,
    partition_energy_bound,
    simulate_decoupled,
    synthesize_decoupled,
)
from .errors import (
    DecouplingError,
    NetctlError,
    NetworkFormatError,
    PartitionError,
    SubsetCapError,
    UncontrollableError,
    UnstableError,
)
from .estimators import BruteForceSelector, ModalSelector, PartitionSelector, TraceOptimalSelector
from .gramian import (
    INFINITE,
    ControlSet,
    GramianReport,
    Trajectory,
    controllability_matrix,
    gramian_finite,
    gramian_infinite,
    input_matrix,
    min_energy_input,
    observability_gramian,
    simulate,
    write_trajectory_csv,
)
from .netmodel import (
    Network,
    SpectralFacts,
    asymmetric_line_network,
    circulant_network,
    consensus_network,
    line_network,
    load_network,
    network_from_adjacency,
    power_grid_network,
    save_network,
    sis_network,
    spectral_facts,
)
from .partition import (
    Partition,
    SelectionResult,
    boundary_nodes,
    brute_force_select,
    fiedler_bipartition,
    make_partition,
    modal_select,
    select_by_partitioning,
    trace_optimal_select,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "BruteForceSelector",
    "CardinalityBound",
    "ControlPlan",
    "ControlSet",
    "DecouplingError",
    "GainMatrices",
    "GramianReport",
    "INFINITE",
    "ModalSelector",
    "NetctlError",
    "Network",
    "NetworkFormatError",
    "Partition",
    "PartitionError",
    "PartitionSelector",
    "SelectionResult",
    "SpectralFacts",
    "SubsetCapError",
    "TraceOptimalSelector",
    "Trajectory",
    "UncontrollableError",
    "UnstableError",
    "asymmetric_line_network",
    "auto_horizon",
    "boundary_nodes",
    "brute_force_select",
    "circulant_network",
    "consensus_network",
    "controllability_matrix",
    "count_modes_within",
    "decoupled_energy_bound",
    "fiedler_bipartition",
    "gain_matrices",
    "gramian_finite",
    "gramian_infinite",
    "hinf_gain",
    "input_matrix",
    "interconnection_matrix",
    "l2_gains_matrix",
    "lambda_min_upper_bound",
    "line_network",
    "load_network",
    "local_energy_matrix",
    "make_partition",
    "min_control_nodes",
    "min_energy_input",
    "modal_select",
    "network_from_adjacency",
    "observability_gramian",
    "partition_energy_bound",
    "power_grid_network",
    "save_network",
    "select_by_partitioning",
    "simulate",
    "simulate_decoupled",
    "sis_network",
    "spectral_facts",
    "symmetric_lambda_min_bound",
    "synthesize_decoupled",
    "tightest_upper_bound",
    "trace_optimal_select",
    "write_trajectory_csv",
]
