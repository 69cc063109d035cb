"""Exact revenue benchmarks and inequality verification for discrete multi-item auctions."""

from .dist import (
    AuctionSetting,
    Caps,
    DEFAULT_CAPS,
    ItemDistribution,
    MaxVectorDistribution,
    ScalarDistribution,
    chebyshev_check,
    iid_max_expectation,
    iid_second_max_expectation,
    make_item_distribution,
    make_rng,
    max_vector_distribution,
    variance,
    variance_ub_check,
)
from .decomposition import (
    DecompositionReport,
    TheoremVerdict,
    build_utility_stats,
    bvcg_constructed_revenue,
    decomposition_terms,
    event_probabilities,
    lemma_chain_check,
    main_theorem_verdict,
    pi_bvcg_constructed_revenue,
)
from .duality import (
    DualCertificate,
    build_lambda_prime,
    build_lambda_star,
    verify_dual_certificate,
)
from .iu import (
    IUTables,
    build_iu_tables,
    iu,
    monte_carlo_iu,
    region_of,
    step2_inequality_check,
    tie_break_independence_check,
)
from .lp import Mechanism, MechanismLP, lp_solve, optimal_revenue
from .myerson import IronedTable, iron, iron_restricted, srev, srev_item, virtual_values
from .simple_auctions import (
    RonenTable,
    bulow_klemperer_check,
    ronen_bound,
    ronen_r_star,
    sequential_posted_price_bound,
    vcg_revenue,
    vcg_with_reserve_bound,
)

__version__ = "0.1.0"

__all__ = [
    "AuctionSetting",
    "Caps",
    "DEFAULT_CAPS",
    "DecompositionReport",
    "DualCertificate",
    "IUTables",
    "IronedTable",
    "ItemDistribution",
    "MaxVectorDistribution",
    "Mechanism",
    "MechanismLP",
    "RonenTable",
    "ScalarDistribution",
    "TheoremVerdict",
    "build_iu_tables",
    "build_lambda_prime",
    "build_lambda_star",
    "build_utility_stats",
    "bulow_klemperer_check",
    "bvcg_constructed_revenue",
    "chebyshev_check",
    "decomposition_terms",
    "event_probabilities",
    "iid_max_expectation",
    "iid_second_max_expectation",
    "iron",
    "iron_restricted",
    "iu",
    "lemma_chain_check",
    "lp_solve",
    "main_theorem_verdict",
    "make_item_distribution",
    "make_rng",
    "max_vector_distribution",
    "monte_carlo_iu",
    "optimal_revenue",
    "pi_bvcg_constructed_revenue",
    "region_of",
    "ronen_bound",
    "ronen_r_star",
    "sequential_posted_price_bound",
    "srev",
    "srev_item",
    "step2_inequality_check",
    "tie_break_independence_check",
    "variance",
    "variance_ub_check",
    "vcg_revenue",
    "vcg_with_reserve_bound",
    "verify_dual_certificate",
]
