"""Decision procedures for the three comparisons.

``standard``
    Bonferroni: (i) and (ii) each at alpha/2; (iii) is not tested.
``method1``
    (i) and (ii) at alpha/2; only if both reject, (iii) at alpha.
``method2``
    (ii) at alpha/2 sets the level lambda (alpha if rejected, else alpha/2);
    the intersection null of (i) and (iii) is tested by Fisher's combination
    at lambda; if rejected, (i) and (iii) are tested individually; if lambda
    stayed at alpha/2 and both fell, (ii) gets a second look at alpha.

Method 2 has two variants for the level of the individual tests of (i) and
(iii).  ``strict_lambda`` uses lambda, the level of the combination test.
``example_consistent`` uses alpha, so that p = (.04, .03, .04) at alpha .05
rejects all three nulls.  The variants coincide
whenever p_ii <= alpha/2.

Every rule rejects when ``p <= level``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact_tests import fisher_combine_many
from .study_model import PValueSet

__all__ = [
    "PROCEDURES",
    "VARIANTS",
    "DEFAULT_VARIANT",
    "DecisionSet",
    "decide",
    "decide_arrays",
    "method1",
    "method2",
    "standard_bonferroni",
]

PROCEDURES = ("standard", "method1", "method2")
VARIANTS = ("strict_lambda", "example_consistent")
DEFAULT_VARIANT = "example_consistent"


@dataclass(frozen=True)
class DecisionSet:
    """Rejection flags for H0(i), H0(ii), H0(iii) and how they were reached.

    ``r_union``, ``lambda_`` and ``variant`` are only meaningful for method 2
    and are None otherwise.
    """

    procedure: str
    alpha: float
    r_i: bool
    r_ii: bool
    r_iii: bool
    r_union: bool | None = None
    lambda_: float | None = None
    variant: str | None = None
    pvalues: PValueSet | None = None

    @property
    def rejections(self) -> tuple[bool, bool, bool]:
        return (self.r_i, self.r_ii, self.r_iii)

    def to_dict(self) -> dict:
        p = self.pvalues.to_dict() if self.pvalues is not None else None
        return {
            "procedure": self.procedure,
            "variant": self.variant,
            "alpha": self.alpha,
            "lambda": self.lambda_,
            "p": p,
            "reject": {
                "i": self.r_i,
                "ii": self.r_ii,
                "iii": self.r_iii,
                "union_i_iii": self.r_union,
            },
        }


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return variant


def decide_arrays(procedure, p_i, p_ii, p_iii, alpha, variant=DEFAULT_VARIANT, p_i_and_iii=None):
    """Apply a procedure elementwise to arrays of p-values.

    Returns a dict of boolean arrays ``r_i``, ``r_ii``, ``r_iii`` and, for
    method 2, ``r_union`` plus the float array ``lambda``.  ``p_i_and_iii``
    is computed from ``p_i`` and ``p_iii`` when not given.
    """
    alpha = _check_alpha(alpha)
    half = alpha / 2
    p_i, p_ii, p_iii = np.broadcast_arrays(
        *(np.asarray(x, dtype=np.float64) for x in (p_i, p_ii, p_iii))
    )

    if procedure == "standard":
        return {"r_i": p_i <= half, "r_ii": p_ii <= half, "r_iii": np.zeros(p_i.shape, bool)}

    if procedure == "method1":
        r_i = p_i <= half
        r_ii = p_ii <= half
        return {"r_i": r_i, "r_ii": r_ii, "r_iii": r_i & r_ii & (p_iii <= alpha)}

    if procedure == "method2":
        _check_variant(variant)
        if p_i_and_iii is None:
            p_i_and_iii = fisher_combine_many(p_i, p_iii)
        p_union = np.broadcast_to(np.asarray(p_i_and_iii, dtype=np.float64), p_i.shape)

        # step 1
        r_ii_first = p_ii <= half
        lam = np.where(r_ii_first, alpha, half)
        # step 2
        r_union = p_union <= lam
        # step 3
        level = lam if variant == "strict_lambda" else alpha
        r_i = r_union & (p_i <= level)
        r_iii = r_union & (p_iii <= level)
        # step 4
        second_look = ~r_ii_first & r_i & r_iii & (p_ii <= alpha)
        return {
            "r_i": r_i,
            "r_ii": r_ii_first | second_look,
            "r_iii": r_iii,
            "r_union": r_union,
            "lambda": lam,
        }

    raise ValueError(f"procedure must be one of {PROCEDURES}, got {procedure!r}")


def decide(p: PValueSet, alpha: float, procedure: str, variant: str = DEFAULT_VARIANT) -> DecisionSet:
    """Run one procedure on a single p-value triple."""
    out = decide_arrays(procedure, p.p_i, p.p_ii, p.p_iii, alpha, variant, p.p_i_and_iii)
    is_m2 = procedure == "method2"
    return DecisionSet(
        procedure=procedure,
        alpha=float(alpha),
        r_i=bool(out["r_i"]),
        r_ii=bool(out["r_ii"]),
        r_iii=bool(out["r_iii"]),
        r_union=bool(out["r_union"]) if is_m2 else None,
        lambda_=float(out["lambda"]) if is_m2 else None,
        variant=variant if is_m2 else None,
        pvalues=p,
    )


def standard_bonferroni(p: PValueSet, alpha: float = 0.05) -> DecisionSet:
    return decide(p, alpha, "standard")


def method1(p: PValueSet, alpha: float = 0.05) -> DecisionSet:
    return decide(p, alpha, "method1")


def method2(p: PValueSet, alpha: float = 0.05, variant: str = DEFAULT_VARIANT) -> DecisionSet:
    """Method 2; see the module docstring for the two variants."""
    return decide(p, alpha, "method2", variant)
