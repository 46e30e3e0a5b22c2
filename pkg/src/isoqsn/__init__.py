"""Initial-state optimization for quantum detector sensor networks."""

from .closed_form import (
    ClosedFormSolution,
    best_closed_form,
    conjectured_optimum,
    helstrom_two_state,
    orthogonal_regime_state,
    symmetric_error,
    symmetric_failure_unambiguous,
    two_sensor_optimum,
)
from .discrimination import (
    DiscriminationResult,
    Povm,
    UnambiguousResult,
    gram_matrix,
    min_error_discriminate,
    objective_p,
    unambiguous_discriminate,
)
from .errors import DomainError, InfeasibleError, NonConvergenceError, RegimeError, StateValidationError
from .heuristics import RunRecord, SearchConfig, find_neighbor, genetic_search, hill_climb, simulated_anneal
from .qstate import (
    DensityOperator,
    Ensemble,
    SensorUnitary,
    StateVector,
    apply_at,
    final_states,
    inner_product,
    make_unitary,
    same_up_to_phase,
)
from .symmetry import (
    PartitionTable,
    SensorPermutation,
    average_state,
    build_partition_table,
    min_ratio,
    partition_index,
    permute_state,
    rhs_membership,
    symmetry_index,
    threshold_T,
)

__version__ = "0.1.0"
