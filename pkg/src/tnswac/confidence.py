"""Confidence sets for attributable effects by inverting a decision procedure.

A hypothesised effect triple (A_PN, A_PC, A_NC) of net moved persons is kept
unless the procedure, applied to the adjusted tables, rejects all three
comparisons.  The scan runs over the integer lattice
``[-n_PN1, n_PN1] x [-n_PC1, n_PC1] x [-n_NC1, n_NC1]``, thinned by ``stride``
around the origin.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exact_tests import fisher_combine_many, fisher_exact_many
from .procedures import DEFAULT_VARIANT, PROCEDURES, decide, decide_arrays
from .study_model import NetEffectCounts, StudyCounts, adjusted_tables, compute_pvalues

__all__ = [
    "DEFAULT_BUDGET",
    "RULES",
    "BudgetError",
    "ConfidenceSet",
    "Membership",
    "confidence_set",
    "confset_membership",
]

DEFAULT_BUDGET = 10**8
# "product": exclude only when all three comparisons reject.
# "any": exclude when any comparison rejects (a tighter, non-default extension).
RULES = ("product", "any")
AXES = ("A_PN", "A_PC", "A_NC")


class BudgetError(RuntimeError):
    """The lattice to scan is larger than the allowed budget."""


class Membership(str, Enum):
    MEMBER = "member"
    NON_MEMBER = "non-member"
    INFEASIBLE = "infeasible"


def _check_args(alpha, procedure, rule):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if procedure not in PROCEDURES:
        raise ValueError(f"procedure must be one of {PROCEDURES}, got {procedure!r}")
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}, got {rule!r}")


def confset_membership(
    counts: StudyCounts,
    effects: NetEffectCounts,
    alpha: float = 0.05,
    procedure: str = "method2",
    variant: str = DEFAULT_VARIANT,
    rule: str = "product",
) -> Membership:
    """Is ``effects`` in the confidence set?  Evaluated one point at a time."""
    _check_args(alpha, procedure, rule)
    tables = adjusted_tables(counts, effects)
    if tables is None:
        return Membership.INFEASIBLE
    decision = decide(compute_pvalues(tables), alpha, procedure, variant)
    flags = decision.rejections
    excluded = all(flags) if rule == "product" else any(flags)
    return Membership.NON_MEMBER if excluded else Membership.MEMBER


@dataclass
class ConfidenceSet:
    counts: StudyCounts
    alpha: float
    procedure: str
    variant: str | None
    rule: str
    stride: int
    n_members: int
    feasible_evaluated: int
    infeasible_skipped: int
    # per axis (lo, hi) of the members; None for an empty set
    projections: dict[str, tuple[int, int]] | None
    members: np.ndarray | None = field(default=None, repr=False)
    members_truncated: bool = False

    @property
    def theta_projections(self) -> dict[str, tuple[Fraction, Fraction] | None] | None:
        if self.projections is None:
            return None
        denominators = {
            "theta_PN": self.counts.n_PN1,
            "theta_PC": self.counts.n_PC1,
            "theta_NC": self.counts.n_NC1,
        }
        out = {}
        for axis, (name, den) in zip(AXES, denominators.items()):
            lo, hi = self.projections[axis]
            out[name] = (Fraction(lo, den), Fraction(hi, den)) if den else None
        return out

    def contains(self, effects: NetEffectCounts) -> bool:
        if self.members is None or self.members_truncated:
            raise ValueError("membership lookup needs the complete member list (emit_members=True)")
        if self.members.size == 0:
            return False
        return bool(np.any(np.all(self.members == np.array(effects.as_tuple()), axis=1)))

    def to_dict(self, members_file: str | None = None) -> dict:
        projections = None
        if self.projections is not None:
            projections = {axis: list(self.projections[axis]) for axis in AXES}
            for name, bounds in self.theta_projections.items():
                projections[name] = None if bounds is None else [float(x) for x in bounds]
                projections[name + "_exact"] = None if bounds is None else [str(x) for x in bounds]
        return {
            "alpha": self.alpha,
            "procedure": self.procedure,
            "variant": self.variant,
            "rule": self.rule,
            "stride": self.stride,
            "projections": projections,
            "members_count": self.n_members,
            "counts_evaluated": self.feasible_evaluated,
            "infeasible_skipped": self.infeasible_skipped,
            "members_file": members_file,
        }

    def write_members_csv(self, dest) -> None:
        """Write ``A_PN,A_PC,A_NC`` rows to a path or an open text file."""
        if self.members is None:
            raise ValueError("no members were kept (emit_members=False)")
        if hasattr(dest, "write"):
            writer = csv.writer(dest, lineterminator="\n")
            writer.writerow(AXES)
            writer.writerows(self.members.tolist())
            return
        with open(Path(dest), "w", newline="") as fh:
            self.write_members_csv(fh)


def _axis(bound: int, stride: int) -> np.ndarray:
    k = bound // stride
    return stride * np.arange(-k, k + 1, dtype=np.int64)


def lattice_size(counts: StudyCounts, stride: int) -> int:
    return (
        (2 * (counts.n_PN1 // stride) + 1)
        * (2 * (counts.n_PC1 // stride) + 1)
        * (2 * (counts.n_NC1 // stride) + 1)
    )


class _Grid:
    """p-value lookup tables for one (counts, stride) pair.

    Adjusted table (i) depends on the effects only through u = A_PN + A_PC
    and v = A_PN - A_NC, table (ii) through (u, w) with w = A_PC + A_NC, and
    table (iii) through w alone, so O(n^2) exact tests cover the O(n^3)
    lattice.
    """

    def __init__(self, counts: StudyCounts, stride: int):
        c = counts
        self.counts = c
        self.a_pn = _axis(c.n_PN1, stride)
        self.a_pc = _axis(c.n_PC1, stride)
        self.a_nc = _axis(c.n_NC1, stride)

        # only values with non-negative adjusted cells are ever looked up
        u = np.unique(np.add.outer(self.a_pn, self.a_pc))
        v = np.unique(np.subtract.outer(self.a_pn, self.a_nc))
        w = np.unique(np.add.outer(self.a_pc, self.a_nc))
        self.u = u[u <= c.n_P1]
        self.v = v[v >= -c.n_N1]
        self.w = w[(w >= -c.n_C1) & (w <= c.n_PN1)]
        self.stride = stride

        p1 = c.n_P1 - self.u
        n1 = c.n_N1 + self.v
        c1 = c.n_C1 + self.w
        self.p_i = fisher_exact_many(p1[:, None], c.n_P0, n1[None, :], c.n_N0)
        self.p_ii = fisher_exact_many(p1[:, None], c.n_P0, c1[None, :], c.n_C0)
        self.p_iii = fisher_exact_many(c.n_PN1 - self.w, c.n_PN0, c1, c.n_C0)

    def _index(self, values: np.ndarray, axis_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if axis_values.size == 0:
            return np.zeros(values.shape, np.int64), np.zeros(values.shape, bool)
        idx = (values - axis_values[0]) // self.stride
        ok = (idx >= 0) & (idx < axis_values.size)
        return np.clip(idx, 0, axis_values.size - 1), ok

    def slice_pvalues(self, a_pn: int):
        """p-values on the (A_PC, A_NC) plane at fixed A_PN, plus feasibility."""
        iu, ok_u = self._index(a_pn + self.a_pc, self.u)
        iv, ok_v = self._index(a_pn - self.a_nc, self.v)
        iw, ok_w = self._index(np.add.outer(self.a_pc, self.a_nc), self.w)
        feasible = ok_u[:, None] & ok_v[None, :] & ok_w
        if self.u.size == 0 or self.v.size == 0 or self.w.size == 0:
            nan = np.full(feasible.shape, np.nan)
            return nan, nan, nan, feasible
        p_i = self.p_i[iu[:, None], iv[None, :]]
        p_ii = self.p_ii[iu[:, None], iw]
        p_iii = self.p_iii[iw]
        return p_i, p_ii, p_iii, feasible


@dataclass
class _Partial:
    """Associative, commutative summary of a group of lattice slices."""

    n_members: int = 0
    feasible: int = 0
    infeasible: int = 0
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    members: list = field(default_factory=list)

    def merge(self, other: "_Partial") -> "_Partial":
        if self.lo is None:
            lo, hi = other.lo, other.hi
        elif other.lo is None:
            lo, hi = self.lo, self.hi
        else:
            lo, hi = np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi)
        return _Partial(
            self.n_members + other.n_members,
            self.feasible + other.feasible,
            self.infeasible + other.infeasible,
            lo,
            hi,
            self.members + other.members,
        )


def _scan(grid: _Grid, a_pn_values, alpha, procedure, variant, rule, keep_members) -> _Partial:
    acc = _Partial()
    for a_pn in a_pn_values:
        p_i, p_ii, p_iii, feasible = grid.slice_pvalues(int(a_pn))
        n_feasible = int(feasible.sum())
        part = _Partial(feasible=n_feasible, infeasible=feasible.size - n_feasible)
        if n_feasible:
            p_i, p_ii, p_iii = (np.where(feasible, x, 1.0) for x in (p_i, p_ii, p_iii))
            p_union = fisher_combine_many(p_i, p_iii) if procedure == "method2" else None
            r = decide_arrays(procedure, p_i, p_ii, p_iii, alpha, variant, p_union)
            if rule == "product":
                excluded = r["r_i"] & r["r_ii"] & r["r_iii"]
            else:
                excluded = r["r_i"] | r["r_ii"] | r["r_iii"]
            member = feasible & ~excluded
            ij = np.argwhere(member)
            if ij.size:
                pts = np.column_stack(
                    [np.full(len(ij), a_pn), grid.a_pc[ij[:, 0]], grid.a_nc[ij[:, 1]]]
                )
                part.n_members = len(pts)
                part.lo = pts.min(axis=0)
                part.hi = pts.max(axis=0)
                if keep_members:
                    part.members = [pts]
        acc = acc.merge(part)
    return acc


def confidence_set(
    counts: StudyCounts,
    alpha: float = 0.05,
    procedure: str = "method2",
    variant: str = DEFAULT_VARIANT,
    stride: int = 1,
    emit_members: bool = False,
    *,
    rule: str = "product",
    budget: int = DEFAULT_BUDGET,
    max_members: int = 1_000_000,
    workers: int = 1,
) -> ConfidenceSet:
    """Scan the effect lattice and collect the non-excluded feasible points.

    Parameters
    ----------
    stride
        Lattice step; points are multiples of ``stride`` so the origin is
        always scanned.
    emit_members
        Keep the member list (at most ``max_members`` rows, in lexicographic
        order).  Projections are always exact regardless of the cap.
    budget
        Largest lattice (feasible or not) that may be scanned.
    workers
        Threads to split the A_PN slices over; the result does not depend on
        it.

    Raises
    ------
    BudgetError
        If the lattice at this stride exceeds ``budget`` points.
    """
    _check_args(alpha, procedure, rule)
    if isinstance(stride, bool) or int(stride) != stride or stride < 1:
        raise ValueError(f"stride must be a positive integer, got {stride!r}")
    stride = int(stride)
    size = lattice_size(counts, stride)
    if size > budget:
        needed = stride
        while lattice_size(counts, needed) > budget:
            needed += 1
        raise BudgetError(
            f"lattice has {size} points at stride {stride}, over the budget of {budget}; "
            f"use stride >= {needed} or raise the budget"
        )

    grid = _Grid(counts, stride)
    if workers > 1 and grid.a_pn.size > 1:
        parts = np.array_split(grid.a_pn, min(workers, grid.a_pn.size))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(
                pool.map(
                    lambda vals: _scan(grid, vals, alpha, procedure, variant, rule, emit_members),
                    parts,
                )
            )
        acc = _Partial()
        for part in partials:
            acc = acc.merge(part)
    else:
        acc = _scan(grid, grid.a_pn, alpha, procedure, variant, rule, emit_members)

    members = None
    truncated = False
    if emit_members:
        members = np.concatenate(acc.members) if acc.members else np.empty((0, 3), np.int64)
        if len(members) > max_members:
            members, truncated = members[:max_members], True
    projections = None
    if acc.lo is not None:
        projections = {axis: (int(acc.lo[k]), int(acc.hi[k])) for k, axis in enumerate(AXES)}
    return ConfidenceSet(
        counts=counts,
        alpha=float(alpha),
        procedure=procedure,
        variant=variant if procedure == "method2" else None,
        rule=rule,
        stride=stride,
        n_members=acc.n_members,
        feasible_evaluated=acc.feasible,
        infeasible_skipped=acc.infeasible,
        projections=projections,
        members=members,
        members_truncated=truncated,
    )
