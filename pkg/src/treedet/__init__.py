"""Decentralized binary detection on bounded-height tree networks.

Models sensor trees whose internal nodes forward one-bit summaries of their
subtrees toward a fusion root, and answers how much error-exponent such a
network gives up against the flat configuration where every observation
reaches the root directly.  Exact log-domain evaluation, tail-rate
recursions, threshold design, and Monte Carlo cross-checks are included.
"""

from .channels import (
    QuantizerFamily,
    TransmissionFunction,
    all_binary_leaf_family,
    and_gate,
    apply_llrq,
    enumerate_quantizers,
    forward_first_gate,
    fused_pair,
    fusion_loss_constant,
    identity_map,
    induced_pair,
    or_gate,
    parallel_exponent,
    xor_gate,
)
from .errors import (
    EmptyAfterPrune,
    EnumerationTooLarge,
    EpsilonTooLarge,
    EquivalenceViolation,
    InfeasibilityError,
    InfeasibleThreshold,
    InputError,
    InvalidParams,
    NotUniform,
    StateSpaceTooLarge,
    TreedetError,
    Unachievable,
)
from .evaluate import (
    ErrorEstimate,
    ExponentFit,
    MessageLaw,
    chebyshev_variance_check,
    empirical_exponent,
    exact_error_probs,
    fringe_message_laws,
    law_from_pair,
    monte_carlo_error,
    root_sum_law,
    tail_report,
)
from .hypotheses import (
    BINARY,
    Alphabet,
    Direction,
    DistributionPair,
    bernoulli_pair,
    kl_divergence,
    llr_array,
    log_likelihood_ratio,
    product_pair,
    second_moment_null,
    validate_assumptions,
)
from .rates import (
    BoundReport,
    RateTable,
    chernoff_bound_report,
    exponent_lower_bound,
    feasible_threshold_interval,
    fenchel_legendre,
    log_mgf,
    rate_table,
    recipe_threshold,
)
from .strategy import (
    Strategy,
    build_relay_strategy,
    np_calibrate_root,
    simple_strategy,
)
from .topology import (
    Tree,
    TreeFamily,
    analyze_tree,
    collapse_leaves,
    estimate_z,
    generate_family,
    prune_small,
    uniformize,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "BINARY",
    "BoundReport",
    "Direction",
    "DistributionPair",
    "EmptyAfterPrune",
    "EnumerationTooLarge",
    "EpsilonTooLarge",
    "EquivalenceViolation",
    "ErrorEstimate",
    "ExponentFit",
    "InfeasibilityError",
    "InfeasibleThreshold",
    "InputError",
    "InvalidParams",
    "MessageLaw",
    "NotUniform",
    "QuantizerFamily",
    "RateTable",
    "StateSpaceTooLarge",
    "Strategy",
    "TransmissionFunction",
    "Tree",
    "TreeFamily",
    "TreedetError",
    "Unachievable",
    "all_binary_leaf_family",
    "analyze_tree",
    "and_gate",
    "apply_llrq",
    "bernoulli_pair",
    "build_relay_strategy",
    "chebyshev_variance_check",
    "chernoff_bound_report",
    "collapse_leaves",
    "empirical_exponent",
    "enumerate_quantizers",
    "estimate_z",
    "exact_error_probs",
    "exponent_lower_bound",
    "feasible_threshold_interval",
    "fenchel_legendre",
    "forward_first_gate",
    "fringe_message_laws",
    "fused_pair",
    "fusion_loss_constant",
    "generate_family",
    "identity_map",
    "induced_pair",
    "kl_divergence",
    "law_from_pair",
    "llr_array",
    "log_likelihood_ratio",
    "log_mgf",
    "monte_carlo_error",
    "np_calibrate_root",
    "or_gate",
    "parallel_exponent",
    "product_pair",
    "prune_small",
    "rate_table",
    "recipe_threshold",
    "root_sum_law",
    "second_moment_null",
    "simple_strategy",
    "tail_report",
    "uniformize",
    "validate_assumptions",
    "xor_gate",
]
