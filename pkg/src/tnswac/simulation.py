"""Monte Carlo engine for familywise error rate, p-value dependence and power.

Each replicate draws a study of ``n_total`` people: group sizes are
multinomial on ``group_probs`` and exposure within each group is binomial,
which is the aggregate of independent per-person categorical draws.  The
random stream of replicate ``r`` is seeded from ``(seed, r)`` alone, so any
partition of the replicates over workers reproduces the same numbers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .exact_tests import fisher_combine_many, fisher_exact_many
from .procedures import decide_arrays
from .study_model import COUNT_FIELDS, StudyCounts

__all__ = [
    "DEFAULT_PROCEDURES",
    "HYPOTHESES",
    "SCENARIOS",
    "SimulationConfig",
    "SimulationSummary",
    "or_to_prob",
    "pvalue_scatter",
    "run_study",
    "scenario",
    "simulate_count_array",
    "simulate_counts",
    "simulate_pvalues",
    "truth_from_config",
]

HYPOTHESES = ("i", "ii", "iii")
# (procedure, method 2 variant)
DEFAULT_PROCEDURES = (
    ("standard", None),
    ("method1", None),
    ("method2", "strict_lambda"),
    ("method2", "example_consistent"),
)
JOINT_TAIL_GRID = (0.05, 0.1, 0.25, 0.5)


def or_to_prob(base_prob: float, odds_ratio: float) -> float:
    """Probability whose odds are ``odds_ratio`` times the odds of ``base_prob``."""
    if not 0.0 < base_prob < 1.0:
        raise ValueError(f"base_prob must lie in (0, 1), got {base_prob}")
    if not odds_ratio > 0.0:
        raise ValueError(f"odds_ratio must be > 0, got {odds_ratio}")
    odds = odds_ratio * base_prob / (1.0 - base_prob)
    return odds / (1.0 + odds)


def _procedure_key(procedure: str, variant: str | None) -> str:
    return procedure if variant is None else f"{procedure}:{variant}"


@dataclass(frozen=True)
class SimulationConfig:
    """Study design for the simulation.

    Probabilities are ordered (test-positive, test-negative, control).
    """

    n_total: int = 1250
    group_probs: tuple[float, float, float] = (0.3, 0.3, 0.4)
    exposure_probs: tuple[float, float, float] = (0.2, 0.2, 0.2)
    alpha: float = 0.05
    replicates: int = 10_000
    seed: int = 0
    procedures: tuple = DEFAULT_PROCEDURES

    def __post_init__(self):
        object.__setattr__(self, "group_probs", tuple(float(x) for x in self.group_probs))
        object.__setattr__(self, "exposure_probs", tuple(float(x) for x in self.exposure_probs))
        object.__setattr__(
            self, "procedures", tuple((p, v) for p, v in (tuple(x) for x in self.procedures))
        )
        if int(self.n_total) != self.n_total or self.n_total < 0:
            raise ValueError(f"n_total must be a non-negative integer, got {self.n_total}")
        if len(self.group_probs) != 3 or len(self.exposure_probs) != 3:
            raise ValueError("group_probs and exposure_probs need three entries (P, N, C)")
        for name in ("group_probs", "exposure_probs"):
            if any(not 0.0 <= x <= 1.0 for x in getattr(self, name)):
                raise ValueError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if abs(sum(self.group_probs) - 1.0) > 1e-12:
            raise ValueError(f"group_probs must sum to 1, got {sum(self.group_probs)}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ValueError(f"replicates must be a positive integer, got {self.replicates}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an integer in [0, 2**64), got {self.seed}")

    @classmethod
    def from_odds_ratios(
        cls, control_prob: float, or_pc: float = 1.0, or_pn: float = 1.0, **kwargs
    ) -> "SimulationConfig":
        """Exposure of test-positives set by their odds ratio against controls,
        test-negatives by the test-positive vs test-negative odds ratio."""
        q_p = or_to_prob(control_prob, or_pc)
        q_n = or_to_prob(q_p, 1.0 / or_pn)
        return cls(exposure_probs=(q_p, q_n, control_prob), **kwargs)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["procedures"] = [_procedure_key(p, v) for p, v in self.procedures]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown simulation config field(s): {', '.join(unknown)}")
        data = dict(data)
        if "procedures" in data:
            procs = []
            for key in data["procedures"]:
                name, _, variant = str(key).partition(":")
                procs.append((name, variant or None))
            data["procedures"] = tuple(procs)
        return cls(**data)


_NULL_SHIFT = 0.3
SCENARIOS = {
    "fig1-null": SimulationConfig(),
    "fig1-alt": SimulationConfig.from_odds_ratios(0.2, or_pc=1.75, or_pn=1.75),
    # only H0(i) true: controls' exposure shifted
    "config-b": SimulationConfig(exposure_probs=(0.2, 0.2, _NULL_SHIFT)),
    # only H0(ii) true: test-negatives' exposure shifted
    "config-c": SimulationConfig(exposure_probs=(0.2, _NULL_SHIFT, 0.2)),
}


def scenario(name: str, **overrides) -> SimulationConfig:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return replace(SCENARIOS[name], **overrides)


def truth_from_config(config: SimulationConfig) -> dict[str, bool]:
    """Which nulls hold, from the exposure probabilities.

    H0(iii) is taken as true exactly when H0(i) and H0(ii) both are.
    """
    q_p, q_n, q_c = config.exposure_probs
    t_i = q_p == q_n
    t_ii = q_p == q_c
    return {"i": t_i, "ii": t_ii, "iii": t_i and t_ii}


# ---------------------------------------------------------------------------
# generation


def _generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _draw(config: SimulationConfig, index: int) -> np.ndarray:
    rng = _generator(config.seed, index)
    sizes = rng.multinomial(config.n_total, config.group_probs)
    exposed = rng.binomial(sizes, config.exposure_probs)
    # (n_P1, n_P0, n_N1, n_N0, n_C1, n_C0)
    return np.column_stack([exposed, sizes - exposed]).ravel()


def simulate_counts(config: SimulationConfig, replicate_index: int) -> StudyCounts:
    """The study drawn for one replicate; depends only on (seed, index)."""
    return StudyCounts(*(int(x) for x in _draw(config, replicate_index)))


def simulate_count_array(config: SimulationConfig, start: int, stop: int) -> np.ndarray:
    """Counts for replicates ``start..stop-1`` as rows in COUNT_FIELDS order."""
    if stop <= start:
        return np.empty((0, len(COUNT_FIELDS)), dtype=np.int64)
    return np.stack([_draw(config, r) for r in range(start, stop)]).astype(np.int64)


def _pvalues(counts: np.ndarray) -> np.ndarray:
    p1, p0, n1, n0, c1, c0 = counts.T
    return np.column_stack(
        [
            fisher_exact_many(p1, p0, n1, n0),
            fisher_exact_many(p1, p0, c1, c0),
            fisher_exact_many(p1 + n1, p0 + n0, c1, c0),
        ]
    )


def _pvalue_block(args) -> np.ndarray:
    config, start, stop = args
    return _pvalues(simulate_count_array(config, start, stop))


def simulate_pvalues(
    config: SimulationConfig,
    replicates: int | None = None,
    *,
    chunk_size: int = 2000,
    workers: int = 1,
) -> np.ndarray:
    """p-value triples (p_i, p_ii, p_iii), one row per replicate.

    The result is identical for every ``chunk_size`` and ``workers``.
    """
    n = config.replicates if replicates is None else int(replicates)
    if n < 0:
        raise ValueError(f"replicates must be >= 0, got {n}")
    if n == 0:
        return np.empty((0, 3))
    chunk_size = max(1, int(chunk_size))
    blocks = [(config, s, min(n, s + chunk_size)) for s in range(0, n, chunk_size)]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_pvalue_block, blocks))
    else:
        parts = [_pvalue_block(b) for b in blocks]
    return np.concatenate(parts)


def pvalue_scatter(config: SimulationConfig, replicates: int | None = None):
    """Yield ``(replicate, p_i, p_ii, p_iii)`` for each replicate in order."""
    n = config.replicates if replicates is None else int(replicates)
    chunk = 1000
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        block = _pvalues(simulate_count_array(config, start, stop))
        for offset, row in enumerate(block):
            yield (start + offset, float(row[0]), float(row[1]), float(row[2]))


# ---------------------------------------------------------------------------
# summaries


def _mcse(freq: float, n: int) -> float:
    return math.sqrt(freq * (1.0 - freq) / n) if n else float("nan")


def _rate(flags: np.ndarray) -> dict:
    n = flags.size
    f = float(flags.mean()) if n else float("nan")
    return {"rate": f, "mcse": _mcse(f, n)}


@dataclass
class SimulationSummary:
    config: SimulationConfig
    truth: dict[str, bool]
    replicates: int
    # procedure key -> metric -> {"rate", "mcse"}
    procedures: dict[str, dict[str, dict]] = field(default_factory=dict)
    correlation: dict[str, float] = field(default_factory=dict)
    # rows of {"p", "q", "joint", "excess", "mcse"}
    joint_tail: list[dict] = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def max_joint_tail_excess(self) -> float:
        return max((row["excess"] for row in self.joint_tail), default=float("nan"))

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "truth_null": self.truth,
            "replicates": self.replicates,
            "seed": self.seed,
            "procedures": self.procedures,
            "correlation": self.correlation,
            "joint_tail_i_iii": self.joint_tail,
            "max_joint_tail_excess": self.max_joint_tail_excess,
        }

    def tsv_rows(self) -> list[list]:
        rows = [["procedure", "hypothesis", "metric", "value", "mcse"]]
        for key, metrics in self.procedures.items():
            for metric, val in metrics.items():
                hyp, _, name = metric.partition(":")
                if not name:
                    hyp, name = "all", metric
                rows.append([key, hyp, name, val["rate"], val["mcse"]])
        for pair, value in self.correlation.items():
            rows.append(["pvalues", pair, "correlation", value, ""])
        for row in self.joint_tail:
            rows.append(
                ["pvalues", "i,iii", f"joint_tail_excess@{row['p']},{row['q']}", row["excess"], row["mcse"]]
            )
        return rows

    def to_tsv(self) -> str:
        return "".join("\t".join(_fmt(x) for x in row) + "\n" for row in self.tsv_rows())


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _check_truth(truth: dict[str, bool]) -> dict[str, bool]:
    if set(truth) != set(HYPOTHESES):
        raise ValueError(f"truth labels must cover exactly {HYPOTHESES}, got {sorted(truth)}")
    truth = {h: bool(truth[h]) for h in HYPOTHESES}
    if truth["iii"] != (truth["i"] and truth["ii"]):
        raise ValueError(
            "inconsistent truth labels: H0(iii) holds exactly when H0(i) and H0(ii) both hold"
        )
    return truth


def summarize(config: SimulationConfig, pvals: np.ndarray, truth: dict[str, bool]) -> SimulationSummary:
    """Aggregate per-replicate p-value triples into a SimulationSummary."""
    truth = _check_truth(truth)
    n = len(pvals)
    p_i, p_ii, p_iii = pvals.T
    p_union = fisher_combine_many(p_i, p_iii)
    true_mask = np.array([truth[h] for h in HYPOTHESES])

    procs = {}
    for procedure, variant in config.procedures:
        r = decide_arrays(
            procedure, p_i, p_ii, p_iii, config.alpha, variant or "example_consistent", p_union
        )
        flags = np.column_stack([r["r_i"], r["r_ii"], r["r_iii"]])
        metrics = {f"{h}:reject": _rate(flags[:, k]) for k, h in enumerate(HYPOTHESES)}
        metrics["fwer"] = _rate(np.any(flags[:, true_mask], axis=1))
        metrics["any_reject"] = _rate(flags.any(axis=1))
        metrics["all_reject"] = _rate(flags.all(axis=1))
        if procedure == "method2":
            metrics["union_i_iii:reject"] = _rate(r["r_union"])
        procs[_procedure_key(procedure, variant)] = metrics

    corr = {}
    joint = []
    if n > 1:
        with np.errstate(invalid="ignore", divide="ignore"):
            corr["i,ii"] = float(np.corrcoef(p_i, p_ii)[0, 1])
            corr["i,iii"] = float(np.corrcoef(p_i, p_iii)[0, 1])
        for p in JOINT_TAIL_GRID:
            for q in JOINT_TAIL_GRID:
                f = float(np.mean((p_i <= p) & (p_iii <= q)))
                joint.append({"p": p, "q": q, "joint": f, "excess": f - p * q, "mcse": _mcse(f, n)})
    return SimulationSummary(config, truth, n, procs, corr, joint)


def run_study(
    config: SimulationConfig,
    truth_labels: dict[str, bool] | None = None,
    *,
    chunk_size: int = 2000,
    workers: int = 1,
) -> SimulationSummary:
    """Simulate ``config.replicates`` studies and summarise every procedure.

    ``truth_labels`` maps each hypothesis ("i", "ii", "iii") to whether its
    null is true; it defaults to :func:`truth_from_config`.  FWER counts the
    replicates rejecting at least one true null.
    """
    truth = _check_truth(truth_from_config(config) if truth_labels is None else truth_labels)
    pvals = simulate_pvalues(config, chunk_size=chunk_size, workers=workers)
    return summarize(config, pvals, truth)
