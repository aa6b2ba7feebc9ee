"""locklab: construct, attack and measure logic-locked combinational netlists."""

__version__ = "0.1.0"

from .bench import BenchParseError, emit_bench, load_bench, parse_bench, save_bench
from .circuit import (
    Circuit,
    CircuitError,
    Gate,
    ZERO_WIRE,
    build_miter,
    insert_xor_at_wire,
    signal_probabilities,
    simulate,
    simulate_batch,
)
from .cnf import CnfFormula, LiteralBuilder, to_cnf
from .sat import CdclSolver, SatError
from .verify import EquivalenceResult, check_equivalence
from .locking import (
    AntiSatSpec,
    Key,
    KeyPartition,
    LockedCircuit,
    LockingError,
    SasSpec,
    SfllSpec,
    antisat_block_output,
    bind_key,
    build_sas_block,
    key_input_wires,
    lock,
    lock_antisat,
    lock_rsas,
    lock_sas,
    lock_sfll_flex,
    make_partition,
    rsas_block_output,
    sas_block_output,
    spec_from_json,
    spec_to_json,
)
from .attacks import (
    ApproximateAttackResult,
    AttackError,
    AttackResult,
    ModelSimResult,
    Oracle,
    approximate_sat_attack,
    model_attack_sim,
    removal_attack,
    sas_model_di_sequence,
    sat_attack,
)
from .metrics import (
    ErrorProfile,
    Estimate,
    MetricsError,
    averages_and_theorem2,
    corrupted_set,
    expected_iterations,
    expected_iterations_formula,
    formula_average_ier,
    ier,
    ier_sampled,
    ier_table,
    ker,
    ker_sampled,
    ker_table,
    sfll_sat_success_prob,
    tradeoff_check,
)
from .workload import (
    ImpactReport,
    SelectionResult,
    Trace,
    WorkloadError,
    impact_report,
    load_trace,
    select_critical_minterms,
    trace_from_counts,
    workload_error_rate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
