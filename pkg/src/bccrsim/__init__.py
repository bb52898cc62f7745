"""Random access with binary countdown contention resolution.

Closed-form per-slot analysis, a slot-level Monte Carlo oracle, and a
multi-slot discrete-event simulation of the four-message random access
procedure, plus the barring and priority policies that drive them.
"""

__version__ = "0.1.0"

from bccrsim.analytics import (
    AnalyticBreakdown,
    BccrConfig,
    ResourceModel,
    SlotLoad,
    analyze_slot,
    contention_resolution_probability,
    effective_throughput,
    expected_collision_size,
    expected_idle_preambles,
    expected_success,
    expected_success_bccr,
    throughput_gain,
)
from bccrsim.bccr import (
    ClassBandPolicy,
    PrioritySequence,
    ResolutionOutcome,
    UniformRandomPolicy,
    decode_bits,
    draw_priority,
    encode_priority,
    resolve_contention,
    two_class_bands,
)
from bccrsim.sim import RunMetrics, Scenario, Simulation, replicate, run
from bccrsim.traffic import TrafficModel

__all__ = [
    "__version__",
    "AnalyticBreakdown",
    "BccrConfig",
    "ClassBandPolicy",
    "PrioritySequence",
    "ResolutionOutcome",
    "ResourceModel",
    "RunMetrics",
    "Scenario",
    "Simulation",
    "SlotLoad",
    "TrafficModel",
    "UniformRandomPolicy",
    "analyze_slot",
    "contention_resolution_probability",
    "decode_bits",
    "draw_priority",
    "effective_throughput",
    "encode_priority",
    "expected_collision_size",
    "expected_idle_preambles",
    "expected_success",
    "expected_success_bccr",
    "replicate",
    "resolve_contention",
    "run",
    "throughput_gain",
    "two_class_bands",
]
