"""Verification protocols for SSE, Unique Games and the toy doubly explicit CSP."""

from .common import ProtocolOutcome
from .csp import (
    CspProtocolConfig,
    CspToyInstance,
    RegularizedCsp,
    apply_A,
    apply_B,
    apply_M_k,
    constraints_pair,
    constraints_test,
    csp_honest_proofs,
    csp_protocol,
    csp_regularize,
    csp_theta,
    encoding_state,
    parity_csp,
    random_csp,
    valid_encoding_kept_acceptance,
)
from .sse import (
    SseProtocolConfig,
    expansion_test,
    family_expansion_value,
    sse_honest_proofs,
    sse_protocol,
    sse_soundness_search,
)
from .ug import (
    GeneralUg,
    UgInstance,
    UgProtocolConfig,
    apply_Pi_r,
    labeling_test,
    minority_bound_check,
    random_general_ug,
    regularization_report,
    regularize_ug,
    ug_honest_proofs,
    ug_labeling_sweep,
    ug_planted,
    ug_protocol,
)

__all__ = [
    "CspProtocolConfig",
    "CspToyInstance",
    "GeneralUg",
    "ProtocolOutcome",
    "RegularizedCsp",
    "SseProtocolConfig",
    "UgInstance",
    "UgProtocolConfig",
    "apply_A",
    "apply_B",
    "apply_M_k",
    "apply_Pi_r",
    "constraints_pair",
    "constraints_test",
    "csp_honest_proofs",
    "csp_protocol",
    "csp_regularize",
    "csp_theta",
    "encoding_state",
    "expansion_test",
    "family_expansion_value",
    "labeling_test",
    "minority_bound_check",
    "parity_csp",
    "random_csp",
    "random_general_ug",
    "regularization_report",
    "regularize_ug",
    "sse_honest_proofs",
    "sse_protocol",
    "sse_soundness_search",
    "ug_honest_proofs",
    "ug_labeling_sweep",
    "ug_planted",
    "ug_protocol",
    "valid_encoding_kept_acceptance",
]
