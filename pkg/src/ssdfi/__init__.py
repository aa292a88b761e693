"""Monte Carlo fault injection for SSD arrays under parity based codes."""
from .codes import (
    ChunkFault,
    ErasureCode,
    StripeFaultState,
    UpdatePenalty,
    brute_force_correctable,
    check_stripe_dl,
    encode_xor_count,
    erf,
    faulty_chunk_count,
    multi_symbol_faulty_chunk_count,
    uncorrectable,
    update_penalty,
)
from .engine import (
    DataLossRecord,
    EventKind,
    SimEvent,
    SimResult,
    affected_stripe_range,
    next_failure_location,
    next_failure_offset,
    run_simulation,
)
from .geometry import ArrayGeometry
from .pool import PooledSsd, SsdPool, generate_pool, validate_pool
from .profiles import (
    MISSION_HOURS,
    RberCurve,
    SsdModelProfile,
    bad_symbol_rate,
    default_profiles,
    load_profiles,
    profile_by_name,
    rber_at,
)
from .reporting import (
    AggregateReport,
    aggregate_results,
    emit_report,
    loss_breakdown,
    report_from_dict,
    report_to_dict,
)
from .workload import (
    SynthWorkloadParams,
    UsageLog,
    bits_accessed,
    dense_arrays,
    parse_usage_log,
    synthesize_usage_log,
    write_usage_log,
)

__version__ = "1.0.0"

__all__ = [
    "AggregateReport",
    "ArrayGeometry",
    "ChunkFault",
    "DataLossRecord",
    "ErasureCode",
    "EventKind",
    "MISSION_HOURS",
    "PooledSsd",
    "RberCurve",
    "SimEvent",
    "SimResult",
    "SsdModelProfile",
    "SsdPool",
    "StripeFaultState",
    "SynthWorkloadParams",
    "UpdatePenalty",
    "UsageLog",
    "affected_stripe_range",
    "aggregate_results",
    "bad_symbol_rate",
    "bits_accessed",
    "brute_force_correctable",
    "check_stripe_dl",
    "default_profiles",
    "dense_arrays",
    "emit_report",
    "encode_xor_count",
    "erf",
    "faulty_chunk_count",
    "generate_pool",
    "load_profiles",
    "loss_breakdown",
    "multi_symbol_faulty_chunk_count",
    "next_failure_location",
    "next_failure_offset",
    "parse_usage_log",
    "profile_by_name",
    "rber_at",
    "report_from_dict",
    "report_to_dict",
    "run_simulation",
    "synthesize_usage_log",
    "uncorrectable",
    "update_penalty",
    "validate_pool",
    "write_usage_log",
]
