"""Inference for test-negative case-control studies with added controls.

Three exposure comparisons are available from such a study: (i) test-positives
vs test-negatives, (ii) test-positives vs controls and (iii) all tested vs
controls.  This package provides exact p-values for them, multiple-testing
procedures that control the familywise error rate across them, confidence
sets for attributable effects by test inversion, and a Monte Carlo engine to
check error rates and power.
"""

from .confidence import BudgetError, ConfidenceSet, Membership, confidence_set, confset_membership
from .exact_tests import (
    OutOfSupportError,
    TwoByTwoTable,
    chisq_df4_sf,
    fisher_combine,
    fisher_exact_many,
    fisher_exact_two_sided,
    log_hypergeom_pmf,
)
from .procedures import DecisionSet, decide, method1, method2, standard_bonferroni
from .simulation import (
    SCENARIOS,
    SimulationConfig,
    SimulationSummary,
    or_to_prob,
    pvalue_scatter,
    run_study,
    scenario,
    simulate_counts,
)
from .study_model import (
    NetEffectCounts,
    PValueSet,
    SchemaError,
    StudyCounts,
    adjusted_tables,
    comparison_tables,
    compute_pvalues,
    load_counts,
)

__version__ = "0.1.0"
