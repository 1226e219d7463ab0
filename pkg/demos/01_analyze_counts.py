"""Analyse one study: three exact tests, their combination and the decisions.

The counts below give p-values near (.04, .03, .04).  Bonferroni at alpha/2
rejects nothing, while the gatekeeping procedure that first tests the union
of (i) and (iii) with Fisher's combination rejects all three nulls.

    python3 demos/01_analyze_counts.py
"""

from tnswac import StudyCounts, comparison_tables, compute_pvalues, decide

counts = StudyCounts(n_P1=40, n_P0=360, n_N1=0, n_N0=40, n_C1=3, n_C0=97)

tables = comparison_tables(counts)
for name, t in zip(("(i)   positives vs negatives", "(ii)  positives vs controls", "(iii) tested vs controls"), tables):
    print(f"{name}: {t.as_array().tolist()}")

p = compute_pvalues(tables)
print(f"\np_i = {p.p_i:.4f}   p_ii = {p.p_ii:.4f}   p_iii = {p.p_iii:.4f}")
print(f"combined p for (i) and (iii): {p.p_i_and_iii:.4f}\n")

for procedure, variant in (
    ("standard", "example_consistent"),
    ("method1", "example_consistent"),
    ("method2", "strict_lambda"),
    ("method2", "example_consistent"),
):
    d = decide(p, 0.05, procedure, variant)
    label = procedure if procedure != "method2" else f"method2 ({variant})"
    print(f"{label:30s} reject (i, ii, iii) = {d.rejections}")
