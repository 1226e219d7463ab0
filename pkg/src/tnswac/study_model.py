"""Aggregate counts of a test-negative study with added controls.

Three groups are counted by exposure: test-positives (P), test-negatives (N)
and untested controls (C).  Suffix 1 means exposed, 0 unexposed.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exact_tests import (
    TwoByTwoTable,
    fisher_combine,
    fisher_exact_two_sided,
)

__all__ = [
    "COUNT_FIELDS",
    "NetEffectCounts",
    "PValueSet",
    "SchemaError",
    "StudyCounts",
    "adjusted_tables",
    "comparison_tables",
    "compute_pvalues",
    "load_counts",
    "parse_counts",
]

COUNT_FIELDS = ("n_P1", "n_P0", "n_N1", "n_N0", "n_C1", "n_C0")


class SchemaError(ValueError):
    """Input data does not follow the StudyCounts schema."""


@dataclass(frozen=True)
class StudyCounts:
    n_P1: int
    n_P0: int
    n_N1: int
    n_N0: int
    n_C1: int
    n_C0: int

    def __post_init__(self):
        for name in COUNT_FIELDS:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise SchemaError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise SchemaError(f"{name} must be >= 0, got {value}")
            object.__setattr__(self, name, int(value))

    @property
    def n_PN1(self) -> int:
        return self.n_P1 + self.n_N1

    @property
    def n_PN0(self) -> int:
        return self.n_P0 + self.n_N0

    @property
    def n_PC1(self) -> int:
        return self.n_P1 + self.n_C1

    @property
    def n_NC1(self) -> int:
        return self.n_N1 + self.n_C1

    @property
    def n_PNC1(self) -> int:
        return self.n_P1 + self.n_N1 + self.n_C1

    @property
    def n_PNC0(self) -> int:
        return self.n_P0 + self.n_N0 + self.n_C0

    @property
    def total(self) -> int:
        return self.n_PNC1 + self.n_PNC0

    def to_dict(self) -> dict:
        return asdict(self)


def parse_counts(data: dict) -> StudyCounts:
    """Build StudyCounts from a mapping, naming the offending field on error."""
    if not isinstance(data, dict):
        raise SchemaError(f"counts must be a JSON object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(COUNT_FIELDS))
    if unknown:
        raise SchemaError(f"unknown field(s): {', '.join(unknown)}")
    values = {}
    for name in COUNT_FIELDS:
        if name not in data:
            raise SchemaError(f"missing field {name}")
        value = data[name]
        if isinstance(value, str):
            try:
                value = int(value.strip())
            except ValueError:
                raise SchemaError(f"{name} must be an integer, got {data[name]!r}") from None
        elif isinstance(value, float) and value.is_integer():
            value = int(value)
        values[name] = value
    return StudyCounts(**values)


def _parse_csv(text: str) -> StudyCounts:
    rows = list(csv.DictReader(io.StringIO(text)))
    if len(rows) != 1:
        raise SchemaError(f"counts CSV must have exactly one data row, found {len(rows)}")
    return parse_counts(rows[0])


def load_counts(source: str | Path) -> StudyCounts:
    """Read StudyCounts from a JSON or one-row CSV file, or from inline JSON text."""
    text = str(source)
    if text.lstrip().startswith("{"):
        try:
            return parse_counts(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"inline counts are not valid JSON: {exc}") from None
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read counts file {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".csv" or not text.lstrip().startswith("{"):
        return _parse_csv(text)
    try:
        return parse_counts(json.loads(text))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from None


@dataclass(frozen=True)
class NetEffectCounts:
    """Hypothesised net numbers of exposed persons moved between groups.

    ``A_PN > 0`` means exposure moved people into the test-positive group out
    of the test-negative group; likewise for ``A_PC`` (positives vs controls)
    and ``A_NC`` (negatives vs controls).
    """

    A_PN: int = 0
    A_PC: int = 0
    A_NC: int = 0

    def __post_init__(self):
        for name in ("A_PN", "A_PC", "A_NC"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.A_PN, self.A_PC, self.A_NC)

    def within_bounds(self, counts: StudyCounts) -> bool:
        return (
            abs(self.A_PN) <= counts.n_PN1
            and abs(self.A_PC) <= counts.n_PC1
            and abs(self.A_NC) <= counts.n_NC1
        )

    def thetas(self, counts: StudyCounts) -> tuple[Fraction | None, ...]:
        """Attributable effects as exact ratios; None where the denominator is 0."""
        pairs = ((self.A_PN, counts.n_PN1), (self.A_PC, counts.n_PC1), (self.A_NC, counts.n_NC1))
        return tuple(Fraction(a, n) if n else None for a, n in pairs)


@dataclass(frozen=True)
class PValueSet:
    """p-values of comparisons (i), (ii), (iii)."""

    p_i: float
    p_ii: float
    p_iii: float

    def __post_init__(self):
        for name in ("p_i", "p_ii", "p_iii"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
            object.__setattr__(self, name, value)

    @property
    def p_i_and_iii(self) -> float:
        """Fisher combination of p_i and p_iii."""
        return fisher_combine(self.p_i, self.p_iii)

    def to_dict(self) -> dict:
        return {"i": self.p_i, "ii": self.p_ii, "iii": self.p_iii, "i_and_iii": self.p_i_and_iii}


Tables = tuple[TwoByTwoTable, TwoByTwoTable, TwoByTwoTable]


def comparison_tables(counts: StudyCounts) -> Tables:
    """Tables for (i) P vs N, (ii) P vs C and (iii) pooled P+N vs C."""
    return adjusted_tables(counts, NetEffectCounts())


def adjusted_tables(counts: StudyCounts, effects: NetEffectCounts) -> Tables | None:
    """Tables of potential outcomes without exposure under hypothesised effects.

    Only the exposed cells move.  Returns None when the effects cannot hold
    for these counts: a movement larger than the exposed persons available
    (``|A_PN| > n_PN1`` etc.) or any negative adjusted cell.
    """
    if not effects.within_bounds(counts):
        return None
    a_pn, a_pc, a_nc = effects.as_tuple()
    p1 = counts.n_P1 - a_pn - a_pc
    n1 = counts.n_N1 + a_pn - a_nc
    c1 = counts.n_C1 + a_pc + a_nc
    if p1 < 0 or n1 < 0 or c1 < 0:
        return None
    return (
        TwoByTwoTable(p1, counts.n_P0, n1, counts.n_N0),
        TwoByTwoTable(p1, counts.n_P0, c1, counts.n_C0),
        TwoByTwoTable(p1 + n1, counts.n_PN0, c1, counts.n_C0),
    )


def compute_pvalues(tables: Tables) -> PValueSet:
    t_i, t_ii, t_iii = tables
    return PValueSet(
        fisher_exact_two_sided(t_i),
        fisher_exact_two_sided(t_ii),
        fisher_exact_two_sided(t_iii),
    )
