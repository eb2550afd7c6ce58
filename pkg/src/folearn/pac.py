"""Sample sizes, generalisation error, PAC and agnostic experiment harnesses, VC dimension."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

from .bruteforce import concept_table
from .distributions import DEFAULT_SUPPORT_LIMIT, LabeledWeighted, trial_rng
from .evaluation import hyp_value
from .hypotheses import Hypothesis, Reject
from .learn import (
    ExplicitFormulas,
    LearnerConfig,
    TrainingSequence,
    learn_consistent,
    learn_min_error,
    training_error,
)
from .structure import LocalAccessOracle, RelStructure

# ---------------------------------------------------------------------------
# sample sizes


def _check_unit(name: str, x: float) -> None:
    if not 0 < x < 1:
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {x}")


def _ceil(x: float) -> int:
    # Floating-point noise must not push exact integers (e.g. ln(e)/0.5) up by one.
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


def sample_size_finite(h_size: int, epsilon: float, delta: float) -> int:
    """ceil(ln(|H|/delta)/epsilon), at least 1."""
    if h_size < 1:
        raise ValueError("h_size must be at least 1")
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    return max(1, _ceil(math.log(h_size / delta) / epsilon))


def sample_size_vc(vc: int, epsilon: float, delta: float, c: float = 8.0) -> int:
    """ceil(c*(VC + ln(1/delta))/epsilon), at least 1."""
    if vc < 0:
        raise ValueError("vc must be non-negative")
    if c <= 0:
        raise ValueError("c must be positive")
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie strictly between 0 and 1, got {delta}")
    return max(1, _ceil(c * (vc + math.log(1 / delta)) / epsilon))


def sample_size_uniform_convergence(h_size: int, epsilon: float, delta: float) -> int:
    """ceil(ln(2|H|/delta)/epsilon^2), at least 1."""
    if h_size < 1:
        raise ValueError("h_size must be at least 1")
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    return max(1, _ceil(math.log(2 * h_size / delta) / epsilon**2))


# ---------------------------------------------------------------------------
# errors


def _backing(oracle) -> RelStructure:
    return oracle.backing if isinstance(oracle, LocalAccessOracle) else oracle


def _oracle(x) -> LocalAccessOracle:
    return x if isinstance(x, LocalAccessOracle) else LocalAccessOracle(x)


def exact_generalization_error(
    oracle, h: Hypothesis, target: Hypothesis, dist, limit: int = DEFAULT_SUPPORT_LIMIT
) -> Fraction:
    """Exact probability mass on which ``h`` and ``target`` disagree."""
    oracle = _oracle(oracle)
    support = dist.support(_backing(oracle).sorted_universe, limit)
    return sum(
        (w for tup, w in support if hyp_value(oracle, h, tup) != hyp_value(oracle, target, tup)),
        Fraction(0),
    )


def labeled_error(oracle, h: Hypothesis, dist: LabeledWeighted) -> Fraction:
    """Probability that ``h`` mislabels a draw from a labelled distribution."""
    oracle = _oracle(oracle)
    values: dict[tuple, int] = {}
    total = Fraction(0)
    for tup, label, w in dist.support():
        v = values.get(tup)
        if v is None:
            v = values[tup] = hyp_value(oracle, h, tup)
        if v != label:
            total += w
    return total


def empirical_error(oracle, h: Hypothesis, target: Hypothesis, dist, m: int, seed: int) -> float:
    """Disagreement rate of ``h`` and ``target`` on ``m`` fresh draws."""
    oracle = _oracle(oracle)
    draws = dist.sample(trial_rng(seed), _backing(oracle).sorted_universe, m)
    disagree: dict[tuple, bool] = {}
    wrong = 0
    for tup in draws:
        d = disagree.get(tup)
        if d is None:
            d = disagree[tup] = hyp_value(oracle, h, tup) != hyp_value(oracle, target, tup)
        wrong += d
    return wrong / m


# ---------------------------------------------------------------------------
# experiments

SAMPLE_SIZE_RULES = ("finite", "vc", "uniform_convergence", "manual")


@dataclass(frozen=True)
class ExperimentConfig:
    epsilon: float
    delta: float
    trials: int = 1
    test_mode: str = "exact"
    test_samples: int = 10_000
    sample_size_rule: str = "finite"
    vc_c: float = 8.0
    vc_value: int | None = None
    manual_t: int | None = None
    h_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        _check_unit("delta", self.delta)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.test_mode not in ("exact", "empirical"):
            raise ValueError(f"unknown test_mode {self.test_mode!r}")
        if self.sample_size_rule not in SAMPLE_SIZE_RULES:
            raise ValueError(f"unknown sample_size_rule {self.sample_size_rule!r}")
        if self.sample_size_rule == "vc" and self.vc_value is None:
            raise ValueError("the vc rule needs vc_value")
        if self.sample_size_rule == "manual" and (self.manual_t is None or self.manual_t < 0):
            raise ValueError("the manual rule needs a non-negative manual_t")


def effective_space_size(space, n: int, ell: int) -> int:
    """|space| * n^ell, the size of the finite class the learner can output.

    For realized types the space is not finite up front; the caller has to
    supply ``h_size`` explicitly.
    """
    if isinstance(space, ExplicitFormulas):
        return max(1, len(space) * n**ell)
    raise ValueError("space size is only known for explicit formula spaces; pass h_size")


def resolve_sample_size(cfg: ExperimentConfig, space, n: int, ell: int) -> int:
    rule = cfg.sample_size_rule
    if rule == "manual":
        return cfg.manual_t
    if rule == "vc":
        return sample_size_vc(cfg.vc_value, cfg.epsilon, cfg.delta, cfg.vc_c)
    h = cfg.h_size if cfg.h_size is not None else effective_space_size(space, n, ell)
    eps = min(cfg.epsilon, 1 - 1e-12)
    if rule == "finite":
        return sample_size_finite(h, eps, cfg.delta)
    return sample_size_uniform_convergence(h, eps, cfg.delta)


@dataclass
class TrialResult:
    trial: int
    t_used: int
    training_error: Fraction | None
    generalization_error: Fraction | float | None
    regret: Fraction | float | None
    success: bool
    rejected: bool
    learner_queries: int
    seconds: float


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    trials: list[TrialResult] = field(default_factory=list)
    reference_error: Fraction | None = None
    wall_seconds: float = 0.0

    @property
    def success_fraction(self) -> Fraction:
        if not self.trials:
            return Fraction(0)
        return Fraction(sum(tr.success for tr in self.trials), len(self.trials))

    @property
    def rejections(self) -> int:
        return sum(tr.rejected for tr in self.trials)


def _run_trial(kind, trial, structure, T, space, lcfg, evaluate):
    oracle = LocalAccessOracle(structure)
    started = time.perf_counter()
    if kind == "pac":
        h = learn_consistent(oracle, T, space, lcfg)
    else:
        h = learn_min_error(oracle, T, space, lcfg)
    queries = oracle.snapshot().total
    if isinstance(h, Reject):
        return TrialResult(trial, len(T), None, None, None, False, True, queries, time.perf_counter() - started)
    train_err = training_error(LocalAccessOracle(structure), h, T) if len(T) else Fraction(0)
    gen_err, regret, success = evaluate(h)
    return TrialResult(
        trial, len(T), train_err, gen_err, regret, success, False, queries, time.perf_counter() - started
    )


def run_pac_experiment(
    oracle,
    target: Hypothesis,
    dist,
    space,
    lcfg: LearnerConfig,
    cfg: ExperimentConfig,
) -> ExperimentReport:
    """Draw, learn consistently, score; one row per trial, reproducible from ``cfg.seed``.

    A learner REJECT is recorded as a failed trial with ``rejected`` set.
    """
    structure = _backing(oracle)
    eval_oracle = LocalAccessOracle(structure)
    universe = structure.sorted_universe
    t = resolve_sample_size(cfg, space, len(universe), lcfg.ell)
    target_cache: dict[tuple, int] = {}

    def target_value(tup):
        v = target_cache.get(tup)
        if v is None:
            v = target_cache[tup] = hyp_value(eval_oracle, target, tup)
        return v

    support = dist.support(universe) if cfg.test_mode == "exact" else None
    report = ExperimentReport("pac", _config_doc(cfg, lcfg, t))
    started = time.perf_counter()
    for trial in range(cfg.trials):
        draws = dist.sample(trial_rng(cfg.seed, trial, 0), universe, t)
        T = TrainingSequence(tuple((tup, target_value(tup)) for tup in draws), k=dist.k)

        def evaluate(h, trial=trial):
            if support is not None:
                err = sum(
                    (w for tup, w in support if hyp_value(eval_oracle, h, tup) != target_value(tup)), Fraction(0)
                )
            else:
                test = dist.sample(trial_rng(cfg.seed, trial, 1), universe, cfg.test_samples)
                err = sum(hyp_value(eval_oracle, h, tup) != target_value(tup) for tup in test) / cfg.test_samples
            return err, None, err <= cfg.epsilon

        report.trials.append(_run_trial("pac", trial, structure, T, space, lcfg, evaluate))
    report.wall_seconds = time.perf_counter() - started
    return report


def reference_error(structure: RelStructure, dist: LabeledWeighted, space: ExplicitFormulas, ell: int) -> Fraction:
    """min over (template, params in U^ell) of the labelled error, on the full structure."""
    support = dist.support()
    domain = sorted({tup for tup, _, _ in support})
    index = {tup: i for i, tup in enumerate(domain)}
    best = Fraction(1)
    for params in product(structure.sorted_universe, repeat=ell):
        for t in space.templates:
            table = concept_table(structure, t, params, domain)
            err = sum((w for tup, label, w in support if table[index[tup]] != label), Fraction(0))
            if err < best:
                best = err
    return best


def run_agnostic_experiment(
    oracle,
    dist: LabeledWeighted,
    space: ExplicitFormulas,
    lcfg: LearnerConfig,
    cfg: ExperimentConfig,
    reference: Fraction | None = None,
) -> ExperimentReport:
    """Draw labelled pairs, minimise training error, score regret against the best in class."""
    structure = _backing(oracle)
    eval_oracle = LocalAccessOracle(structure)
    universe = structure.sorted_universe
    t = resolve_sample_size(cfg, space, len(universe), lcfg.ell)
    if reference is None:
        reference = reference_error(structure, dist, space, lcfg.ell)
    report = ExperimentReport("agnostic", _config_doc(cfg, lcfg, t), reference_error=reference)
    started = time.perf_counter()
    for trial in range(cfg.trials):
        T = TrainingSequence(tuple(dist.sample(trial_rng(cfg.seed, trial, 0), universe, t)), k=dist.k)

        def evaluate(h, trial=trial):
            if cfg.test_mode == "exact":
                err = labeled_error(eval_oracle, h, dist)
            else:
                test = dist.sample(trial_rng(cfg.seed, trial, 1), universe, cfg.test_samples)
                err = sum(hyp_value(eval_oracle, h, tup) != label for tup, label in test) / cfg.test_samples
            regret = err - reference
            return err, regret, regret <= cfg.epsilon

        report.trials.append(_run_trial("agnostic", trial, structure, T, space, lcfg, evaluate))
    report.wall_seconds = time.perf_counter() - started
    return report


def _config_doc(cfg: ExperimentConfig, lcfg: LearnerConfig, t: int) -> dict:
    return {"experiment": asdict(cfg), "learner": asdict(lcfg), "t": t}


# ---------------------------------------------------------------------------
# VC dimension

DEFAULT_VC_DOMAIN_LIMIT = 20


def vc_dimension_bruteforce(
    concepts: Sequence[Sequence[int]], domain_limit: int = DEFAULT_VC_DOMAIN_LIMIT
) -> int:
    """Size of the largest shattered subset of the domain.

    Shattered sets are closed under subsets, so the search goes level by
    level, only extending sets that were shattered one level down, and stops
    at the first empty level.
    """
    concepts = [tuple(c) for c in concepts]
    if not concepts:
        return 0
    n = len(concepts[0])
    if any(len(c) != n for c in concepts):
        raise ValueError("all concepts must have the same length")
    if n > domain_limit:
        raise ValueError(f"domain of {n} points exceeds the limit of {domain_limit}")
    masks = list({sum(1 << i for i, bit in enumerate(c) if bit) for c in concepts})
    max_possible = len(masks).bit_length() - 1  # 2^d <= number of concepts

    def shattered(points: tuple[int, ...]) -> bool:
        m = sum(1 << i for i in points)
        return len({c & m for c in masks}) == 1 << len(points)

    level = [()]
    best = 0
    for size in range(1, min(n, max_possible) + 1):
        nxt = []
        for base in level:
            start = base[-1] + 1 if base else 0
            for p in range(start, n):
                cand = base + (p,)
                if shattered(cand):
                    nxt.append(cand)
        if not nxt:
            break
        best, level = size, nxt
    return best


# ---------------------------------------------------------------------------
# reports


def _rational(x) -> dict | None:
    if x is None:
        return None
    if isinstance(x, Fraction):
        return {"fraction": f"{x.numerator}/{x.denominator}", "value": f"{float(x):.6f}"}
    return {"fraction": None, "value": f"{float(x):.6f}"}


def report_to_doc(report: ExperimentReport) -> dict:
    return {
        "kind": report.kind,
        "config": report.config,
        "success_fraction": _rational(report.success_fraction),
        "reference_error": _rational(report.reference_error),
        "rejections": report.rejections,
        "wall_seconds": f"{report.wall_seconds:.6f}",
        "trials": [
            {
                "trial": tr.trial,
                "t_used": tr.t_used,
                "training_error": _rational(tr.training_error),
                "generalization_error": _rational(tr.generalization_error),
                "regret": _rational(tr.regret),
                "success": tr.success,
                "rejected": tr.rejected,
                "learner_queries": tr.learner_queries,
                "seconds": f"{tr.seconds:.6f}",
            }
            for tr in report.trials
        ],
    }


CSV_COLUMNS = (
    "trial",
    "t_used",
    "training_error",
    "generalization_error",
    "regret",
    "success",
    "rejected",
    "learner_queries",
    "seconds",
)


def _csv_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def render_report(report: ExperimentReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report_to_doc(report), sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for tr in report.trials:
            w.writerow([_csv_cell(getattr(tr, col)) for col in CSV_COLUMNS])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: ExperimentReport, path, fmt: str = "json") -> None:
    atomic_write(path, render_report(report, fmt))
