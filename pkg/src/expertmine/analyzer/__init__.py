"""Built-in source analyzer, coupling analysis and external checker adapter."""

from .cfg import ControlFlowSummary, control_flow_summary
from .coupling import ImportFacts, analyze_coupling, coupling_from_facts, extract_imports
from .external import run_external_checker
from .metrics import (
    METRIC_IDS,
    HalsteadCounts,
    MetricVector,
    analyze_functions,
    analyze_source,
    analyze_tokens,
    halstead_counts,
)
from .profiles import PROFILES, Profile, get_profile

__all__ = [
    "ControlFlowSummary",
    "HalsteadCounts",
    "ImportFacts",
    "METRIC_IDS",
    "MetricVector",
    "PROFILES",
    "Profile",
    "analyze_coupling",
    "analyze_functions",
    "analyze_source",
    "analyze_tokens",
    "control_flow_summary",
    "coupling_from_facts",
    "extract_imports",
    "get_profile",
    "halstead_counts",
    "run_external_checker",
]
