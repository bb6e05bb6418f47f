"""Merging p-values under arbitrary dependence, with worst-case verification.

Combination rules (Bonferroni, order-statistic scaling, harmonic correction,
twice the average) live in `merging`.  Their worst-case behaviour over all
dependence structures is bounded numerically by transportation LPs on grid
copulas (`grid`, `simplex`), certified from above by exact dual certificates
(`certificates`), and pinned down exactly at K = 2 by the antidiagonal
extremal construction (`extremal`).
"""

from .certificates import (
    CertificateReport,
    DualCertificate,
    PiecewiseLinear,
    build_ruschendorf_certificate,
    certificate_value,
    check_feasibility,
    clamp_nonnegative,
    monotone_envelope,
    symmetrize_certificate,
    weak_duality_check,
)
from .extremal import (
    AntidiagonalCopula,
    DominanceReport,
    GridCopulaSampler,
    IndependenceSampler,
    MergingSurface,
    build_extremal_copula,
    check_dominates_M,
    malpha_ucp,
    sample_extremal,
    three_sigma_band,
    type1_error_mc,
    ucp_decreasing_set_k2,
)
from .grid import (
    BoundPair,
    CellEvaluation,
    GridCopula,
    MarginalReport,
    SizeBudgetError,
    UcpResult,
    random_permutation_mixture,
    ruschendorf_value,
    sample_from_grid_copula,
    ucp_bounds,
    ucp_primal_lp,
)
from .merging import (
    Bonferroni,
    DiscreteDistribution,
    Hommel,
    MergedPValue,
    MergingRule,
    PValueVector,
    Ruger,
    ScaledAverage,
    apply_rule,
    as_pvalues,
    merge_bonferroni,
    merge_hommel,
    merge_ruger,
    merge_scaled_average,
    randomized_pit,
    raw_batch,
)
from .sets import Box, DecreasingSetSpec, GeneralBoundary, RugerSet, SumThreshold

__version__ = "0.1.0"

__all__ = [
    "AntidiagonalCopula",
    "Bonferroni",
    "BoundPair",
    "Box",
    "CellEvaluation",
    "CertificateReport",
    "DecreasingSetSpec",
    "DiscreteDistribution",
    "DominanceReport",
    "DualCertificate",
    "GeneralBoundary",
    "GridCopula",
    "GridCopulaSampler",
    "Hommel",
    "IndependenceSampler",
    "MarginalReport",
    "MergedPValue",
    "MergingRule",
    "MergingSurface",
    "PValueVector",
    "PiecewiseLinear",
    "Ruger",
    "RugerSet",
    "ScaledAverage",
    "SizeBudgetError",
    "SumThreshold",
    "UcpResult",
    "apply_rule",
    "as_pvalues",
    "build_extremal_copula",
    "build_ruschendorf_certificate",
    "certificate_value",
    "check_dominates_M",
    "check_feasibility",
    "clamp_nonnegative",
    "malpha_ucp",
    "merge_bonferroni",
    "merge_hommel",
    "merge_ruger",
    "merge_scaled_average",
    "monotone_envelope",
    "random_permutation_mixture",
    "randomized_pit",
    "raw_batch",
    "ruschendorf_value",
    "sample_extremal",
    "sample_from_grid_copula",
    "symmetrize_certificate",
    "three_sigma_band",
    "type1_error_mc",
    "ucp_bounds",
    "ucp_decreasing_set_k2",
    "ucp_primal_lp",
    "weak_duality_check",
]
