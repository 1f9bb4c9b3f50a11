"""Statistical comparison machinery: seeded bootstrap resampling summaries
(mean, SD, percentile CI), the two-tailed Wilcoxon rank-sum test, and
Bonferroni correction for the multi-model comparisons."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


@dataclass(frozen=True)
class BootstrapConfig:
    sample_size: int = 30
    repetitions: int = 100
    seed: int = 0
    ci_level: float = 0.95

    def __post_init__(self):
        if self.sample_size < 1 or self.repetitions < 1:
            raise ValueError("sample_size and repetitions must be positive")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must lie in (0, 1)")


@dataclass(frozen=True)
class BootstrapSummary:
    mean: float
    sd: float
    ci_low: float
    ci_high: float
    replicate_means: tuple[float, ...]


class EmptyScores(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class MissingReference(KeyError):
    pass


class InstanceSetMismatch(ValueError):
    pass


def resample_indices(cfg: BootstrapConfig, n: int) -> np.ndarray:
    """(repetitions, sample_size) index matrix; drawing is with replacement."""
    rng = np.random.default_rng(cfg.seed)
    return rng.integers(0, n, size=(cfg.repetitions, cfg.sample_size))


def _summarize(replicates: np.ndarray, ci_level: float) -> BootstrapSummary:
    mean = float(replicates.mean())
    if np.ptp(replicates) == 0.0:
        # identical replicates have zero spread; avoid float-summation noise
        value = float(replicates[0])
        return BootstrapSummary(value, 0.0, value, value,
                                tuple(float(x) for x in replicates))
    sd = float(replicates.std(ddof=1)) if len(replicates) > 1 else 0.0
    alpha = (1.0 - ci_level) / 2.0
    ci_low, ci_high = np.quantile(replicates, [alpha, 1.0 - alpha])
    return BootstrapSummary(mean, sd, float(ci_low), float(ci_high),
                            tuple(float(x) for x in replicates))


def bootstrap(scores, cfg: BootstrapConfig = BootstrapConfig()) -> BootstrapSummary:
    """Resample `sample_size` scores with replacement, `repetitions` times;
    summarize the replicate means."""
    arr = np.asarray(list(scores), dtype=float)
    if arr.size == 0:
        raise EmptyScores("no scores to bootstrap")
    idx = resample_indices(cfg, arr.size)
    replicates = arr[idx].mean(axis=1)
    return _summarize(replicates, cfg.ci_level)


# ---------------------------------------------------------------------------
# Wilcoxon rank-sum (Mann-Whitney) test, two-sided.

def _midranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j < len(values) and values[order[j]] == values[order[i]]:
            j += 1
        mid = (i + j + 1) / 2.0  # average of 1-based ranks i+1 .. j
        for k in range(i, j):
            ranks[order[k]] = mid
        i = j
    return ranks


def _exact_tail_counts(n: int, big_n: int) -> dict[int, int]:
    """Number of ways to choose n distinct ranks from 1..big_n with each sum.

    Plain subset-sum counting; equivalent to enumerating all rank assignments.
    """
    chosen = [dict() for _ in range(n + 1)]
    chosen[0][0] = 1
    for r in range(1, big_n + 1):
        for k in range(min(n, r) - 1, -1, -1):
            for s, c in list(chosen[k].items()):
                tgt = chosen[k + 1]
                tgt[s + r] = tgt.get(s + r, 0) + c
    return chosen[n]


def _exact_two_sided(n: int, m: int, w: float) -> float:
    big_n = n + m
    dist = _exact_tail_counts(n, big_n)
    total = sum(dist.values())
    mu2 = n * (big_n + 1)  # 2 * mean, integral
    observed = abs(round(2 * w) - mu2)
    count = sum(c for s, c in dist.items() if abs(2 * s - mu2) >= observed)
    return count / total


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _approx_two_sided(ranks_a, pooled_ranks, n: int, m: int) -> float:
    """Tie-corrected normal approximation with continuity correction."""
    big_n = n + m
    w = sum(ranks_a)
    mu = n * (big_n + 1) / 2.0
    # tie correction: sum over tie groups of (t^3 - t)
    tie_sum = 0
    seen = {}
    for r in pooled_ranks:
        seen[r] = seen.get(r, 0) + 1
    for t in seen.values():
        tie_sum += t ** 3 - t
    if big_n < 2:
        return 1.0
    var = n * m / 12.0 * ((big_n + 1) - tie_sum / (big_n * (big_n - 1)))
    if var <= 0:
        return 1.0
    z = (abs(w - mu) - 0.5) / math.sqrt(var)
    if z < 0:
        z = 0.0
    return min(1.0, 2.0 * _normal_sf(z))


EXACT_SIZE_LIMIT = 12


def ranksum_test(a, b, method: str = "auto") -> float:
    """Two-sided Wilcoxon rank-sum p-value.

    With n + m <= 12 and no ties the null distribution is evaluated exactly
    (all rank assignments); otherwise the tie-corrected, continuity-corrected
    normal approximation is used. `method` forces "exact" or "approx".
    """
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    if not a or not b:
        raise EmptyInput("both samples must be non-empty")
    n, m = len(a), len(b)
    pooled = a + b
    ranks = _midranks(pooled)
    ranks_a = ranks[:n]
    has_ties = len(set(pooled)) != len(pooled)

    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact":
        if has_ties:
            raise ValueError("exact method requires tie-free samples")
        return _exact_two_sided(n, m, sum(ranks_a))
    if method == "approx":
        return _approx_two_sided(ranks_a, ranks, n, m)
    if n + m <= EXACT_SIZE_LIMIT and not has_ties:
        return _exact_two_sided(n, m, sum(ranks_a))
    return _approx_two_sided(ranks_a, ranks, n, m)


def bonferroni(p_raw: float, m: int) -> float:
    """min(1, p * m)."""
    if not 0.0 <= p_raw <= 1.0:
        raise ValueError(f"p_raw {p_raw} outside [0, 1]")
    if m < 1:
        raise ValueError("m must be a positive integer")
    return min(1.0, p_raw * m)


class Marker(str, Enum):
    NONE = ""
    STAR = "*"
    DAGGER = "†"


STAR_THRESHOLD = 0.05
DAGGER_THRESHOLD = 0.0001


def marker_for(p_adjusted: float) -> Marker:
    if p_adjusted < DAGGER_THRESHOLD:
        return Marker.DAGGER
    if p_adjusted < STAR_THRESHOLD:
        return Marker.STAR
    return Marker.NONE


@dataclass(frozen=True)
class ComparisonResult:
    model_a: str
    model_b: str
    p_raw: float
    p_adjusted: float
    n_comparisons: int
    marker: Marker


def compare_models(per_model_scores, reference_model: str,
                   cfg: BootstrapConfig = BootstrapConfig(),
                   n_comparisons: int | None = None):
    """Bootstrap every model on shared resample indices (paired resampling),
    rank-sum the reference's replicate means against each other model's, and
    Bonferroni-correct over the comparison count.

    Returns (summaries: {model: BootstrapSummary}, comparisons: [ComparisonResult]).
    """
    per_model_scores = {k: list(v) for k, v in per_model_scores.items()}
    if reference_model not in per_model_scores:
        raise MissingReference(reference_model)
    lengths = {len(v) for v in per_model_scores.values()}
    if len(lengths) != 1:
        raise InstanceSetMismatch(f"score lists differ in length: {sorted(lengths)}")
    n = lengths.pop()
    if n == 0:
        raise EmptyScores("empty score lists")

    idx = resample_indices(cfg, n)
    summaries = {}
    for model, scores in per_model_scores.items():
        replicates = np.asarray(scores, dtype=float)[idx].mean(axis=1)
        summaries[model] = _summarize(replicates, cfg.ci_level)

    others = [mdl for mdl in per_model_scores if mdl != reference_model]
    m = n_comparisons if n_comparisons is not None else max(len(others), 1)
    comparisons = []
    ref_reps = summaries[reference_model].replicate_means
    for model in others:
        p_raw = ranksum_test(ref_reps, summaries[model].replicate_means)
        p_adj = bonferroni(p_raw, m)
        comparisons.append(ComparisonResult(
            model_a=reference_model,
            model_b=model,
            p_raw=p_raw,
            p_adjusted=p_adj,
            n_comparisons=m,
            marker=marker_for(p_adj),
        ))
    return summaries, comparisons
