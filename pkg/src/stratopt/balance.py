"""Between-arm imbalance metrics and the min-max objective.

The objective of an assignment is the maximum over unordered arm pairs of

    d_num(p, q) + alpha * d_cat(p, q)

where d_num sums, over numerical covariates, the absolute mean difference
plus ``variance_weight`` times the absolute standard-deviation difference,
each divided by the whole-cohort pooled sample standard deviation of that
covariate, and d_cat sums the total variation distance between the arms'
empirical category distributions over categorical covariates.

Conventions: within-arm standard deviations use the n-1 denominator and a
singleton arm contributes sd = 0; covariates with zero pooled variance are
dropped from scaling with a warning (they carry no balance information).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import Assignment, Cohort


@dataclass(frozen=True)
class ObjectiveConfig:
    """Weights of the imbalance objective."""

    alpha: float = 1.0
    variance_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.variance_weight < 0:
            raise ValueError("variance_weight must be >= 0")


@dataclass(frozen=True)
class CovariateScale:
    """Pooled whole-cohort sample sd per retained numerical covariate."""

    values: tuple[float, ...]
    retained: tuple[int, ...]
    dropped: tuple[str, ...] = ()


@dataclass(frozen=True)
class PairDiscrepancy:
    d_num: float
    d_cat: float
    total: float


@dataclass(frozen=True)
class PairReport(PairDiscrepancy):
    p: int
    q: int
    smd: tuple[float, ...]
    tv: tuple[float, ...]


@dataclass(frozen=True)
class DiscrepancyReport:
    objective: float
    pairs: tuple[PairReport, ...]
    numerical_names: tuple[str, ...]
    categorical_names: tuple[str, ...]
    dropped: tuple[str, ...]

    def pair(self, p: int, q: int) -> PairReport:
        p, q = min(p, q), max(p, q)
        for pr in self.pairs:
            if pr.p == p and pr.q == q:
                return pr
        raise KeyError((p, q))


def compute_scales(cohort: Cohort) -> CovariateScale:
    """Whole-cohort sample sd (ddof=1) per numerical covariate.

    Covariates with zero variance are dropped from the retained set and a
    warning is emitted naming them.
    """
    values = cohort.numerical_matrix
    names = cohort.schema.numerical_names
    retained: list[int] = []
    scales: list[float] = []
    dropped: list[str] = []
    for j, name in enumerate(names):
        sd = float(np.std(values[:, j], ddof=1))
        if sd > 0.0:
            retained.append(j)
            scales.append(sd)
        else:
            dropped.append(name)
    if dropped:
        warnings.warn(
            f"zero-variance numerical covariates dropped from scaling: {dropped}",
            stacklevel=2,
        )
    return CovariateScale(values=tuple(scales), retained=tuple(retained), dropped=tuple(dropped))


class ObjectiveEvaluator:
    """Precomputed matrices for repeated objective evaluation on one cohort.

    Numerical columns are pre-divided by their pooled scale, so per-arm means
    and sds of the scaled matrix are already in scale-free units.  Categorical
    covariates are one-hot expanded; summing |frequency differences| over all
    indicator columns gives twice the summed total variation directly.

    Instances are immutable and safe to share across threads.
    """

    def __init__(
        self,
        cohort: Cohort,
        num_arms: int,
        config: Optional[ObjectiveConfig] = None,
        scales: Optional[CovariateScale] = None,
    ) -> None:
        self.cohort = cohort
        self.num_arms = int(num_arms)
        self.config = config or ObjectiveConfig()
        self.scales = scales if scales is not None else compute_scales(cohort)
        raw = cohort.numerical_matrix[:, list(self.scales.retained)]
        self.scaled = raw / np.asarray(self.scales.values, dtype=np.float64)
        self.scaled_sq = self.scaled * self.scaled
        cats = cohort.categorical_matrix
        blocks = []
        slices: list[slice] = []
        start = 0
        for c, entry in enumerate(cohort.schema.categorical_entries):
            k = len(entry.labels)
            onehot = np.zeros((cohort.n, k), dtype=np.float64)
            onehot[np.arange(cohort.n), cats[:, c]] = 1.0
            blocks.append(onehot)
            slices.append(slice(start, start + k))
            start += k
        self.onehot = np.hstack(blocks) if blocks else np.zeros((cohort.n, 0))
        self.cat_slices = tuple(slices)

    def arm_masks(self, arm_of: np.ndarray) -> list[np.ndarray]:
        return [(arm_of == p) for p in range(self.num_arms)]

    def _arm_stats(self, mask: np.ndarray):
        """(count, mean, sd, category frequencies) for one arm; sd=0 for singletons."""
        c = int(mask.sum())
        if c == 0:
            raise ValueError("arm is empty")
        rows = self.scaled[mask]
        s = rows.sum(axis=0)
        mean = s / c
        if c > 1:
            ss = self.scaled_sq[mask].sum(axis=0)
            var = (ss - s * s / c) / (c - 1)
            sd = np.sqrt(np.maximum(var, 0.0))
        else:
            sd = np.zeros_like(s)
        freq = self.onehot[mask].sum(axis=0) / c
        return c, mean, sd, freq

    def value(self, arm_of: np.ndarray) -> float:
        """Objective value only (no per-covariate detail)."""
        stats = [self._arm_stats(mask) for mask in self.arm_masks(arm_of)]
        w = self.config.variance_weight
        alpha = self.config.alpha
        best = 0.0
        for p in range(self.num_arms):
            _, mp, sp, fp = stats[p]
            for q in range(p + 1, self.num_arms):
                _, mq, sq, fq = stats[q]
                d_num = float(np.sum(np.abs(mp - mq) + w * np.abs(sp - sq)))
                d_cat = 0.5 * float(np.sum(np.abs(fp - fq)))
                total = d_num + alpha * d_cat
                if total > best:
                    best = total
        return best

    def masked_value(self, arm_of: np.ndarray, keep: np.ndarray) -> float:
        """Objective of the sub-cohort selected by ``keep`` with scales recomputed.

        Matches evaluating a freshly built cohort of the kept patients: pooled
        sds are recomputed on the kept rows and newly-constant covariates are
        dropped for that evaluation.
        """
        sub = ObjectiveEvaluator.__new__(ObjectiveEvaluator)
        sub.cohort = self.cohort
        sub.num_arms = self.num_arms
        sub.config = self.config
        sub.scales = self.scales
        raw = self.cohort.numerical_matrix[keep]
        sds = np.std(raw, axis=0, ddof=1)
        retained = sds > 0.0
        sub.scaled = raw[:, retained] / sds[retained]
        sub.scaled_sq = sub.scaled * sub.scaled
        sub.onehot = self.onehot[keep]
        sub.cat_slices = self.cat_slices
        return sub.value(arm_of[keep])

    def report(self, assignment: Assignment) -> DiscrepancyReport:
        """Full per-pair / per-covariate report plus the min-max objective."""
        arm_of = assignment.as_array()
        stats = [self._arm_stats(mask) for mask in self.arm_masks(arm_of)]
        w = self.config.variance_weight
        alpha = self.config.alpha
        entries = self.cohort.schema.categorical_entries
        pairs: list[PairReport] = []
        best = 0.0
        for p in range(self.num_arms):
            _, mp, sp, fp = stats[p]
            for q in range(p + 1, self.num_arms):
                _, mq, sq, fq = stats[q]
                smd = tuple((mp - mq).tolist())
                tv = tuple(
                    0.5 * float(np.sum(np.abs(fp[sl] - fq[sl]))) for sl in self.cat_slices
                )
                d_num = float(np.sum(np.abs(mp - mq) + w * np.abs(sp - sq)))
                d_cat = float(sum(tv))
                total = d_num + alpha * d_cat
                best = max(best, total)
                pairs.append(
                    PairReport(p=p, q=q, d_num=d_num, d_cat=d_cat, total=total, smd=smd, tv=tv)
                )
        names = self.cohort.schema.numerical_names
        return DiscrepancyReport(
            objective=best,
            pairs=tuple(pairs),
            numerical_names=tuple(names[j] for j in self.scales.retained),
            categorical_names=tuple(e.name for e in entries),
            dropped=tuple(self.scales.dropped),
        )


def _check_pair(num_arms: int, pair: Sequence[int]) -> tuple[int, int]:
    p, q = pair
    if not (0 <= p < num_arms and 0 <= q < num_arms and p != q):
        raise ValueError(f"invalid arm pair {pair!r} for {num_arms} arms")
    return p, q


def smd(
    cohort: Cohort,
    assignment: Assignment,
    covariate: int,
    pair: Sequence[int],
    scales: Optional[CovariateScale] = None,
) -> float:
    """Signed standardized mean difference of one numerical covariate.

    ``covariate`` indexes the schema's numerical entries and must be retained
    (nonzero pooled variance).  Sign follows (mean over p) - (mean over q).
    """
    scales = scales if scales is not None else compute_scales(cohort)
    if covariate not in scales.retained:
        raise ValueError(f"numerical covariate {covariate} was dropped (zero variance)")
    p, q = pair
    arm_of = assignment.as_array()
    values = cohort.numerical_matrix[:, covariate]
    out = []
    for arm in (p, q):
        sel = values[arm_of == arm]
        if sel.size == 0:
            raise ValueError(f"arm {arm} is empty")
        out.append(float(sel.mean()))
    scale = scales.values[scales.retained.index(covariate)]
    return (out[0] - out[1]) / scale


def total_variation(
    cohort: Cohort, assignment: Assignment, covariate: int, pair: Sequence[int]
) -> float:
    """Total variation distance between the two arms' category distributions."""
    entry = cohort.schema.categorical_entries[covariate]
    p, q = pair
    arm_of = assignment.as_array()
    cats = cohort.categorical_matrix[:, covariate]
    freqs = []
    for arm in (p, q):
        sel = cats[arm_of == arm]
        if sel.size == 0:
            raise ValueError(f"arm {arm} is empty")
        freqs.append(np.bincount(sel, minlength=len(entry.labels)) / sel.size)
    return 0.5 * float(np.sum(np.abs(freqs[0] - freqs[1])))


def pair_discrepancy(
    cohort: Cohort,
    assignment: Assignment,
    pair: Sequence[int],
    config: Optional[ObjectiveConfig] = None,
    scales: Optional[CovariateScale] = None,
) -> PairDiscrepancy:
    """(d_num, d_cat, total) for one unordered arm pair."""
    config = config or ObjectiveConfig()
    arm_of = assignment.as_array()
    num_arms = int(arm_of.max()) + 1 if len(arm_of) else 2
    p, q = pair
    num_arms = max(num_arms, p + 1, q + 1)
    ev = ObjectiveEvaluator(cohort, num_arms, config, scales)
    sp = ev._arm_stats(arm_of == p)
    sq = ev._arm_stats(arm_of == q)
    w = config.variance_weight
    d_num = float(np.sum(np.abs(sp[1] - sq[1]) + w * np.abs(sp[2] - sq[2])))
    d_cat = 0.5 * float(np.sum(np.abs(sp[3] - sq[3])))
    return PairDiscrepancy(d_num=d_num, d_cat=d_cat, total=d_num + config.alpha * d_cat)


def objective(
    cohort: Cohort,
    assignment: Assignment,
    config: Optional[ObjectiveConfig] = None,
    scales: Optional[CovariateScale] = None,
    num_arms: Optional[int] = None,
) -> DiscrepancyReport:
    """Full discrepancy report; ``objective`` is the max over arm pair totals."""
    if num_arms is None:
        num_arms = max(int(max(assignment.arm_of)) + 1, 2)
    ev = ObjectiveEvaluator(cohort, num_arms, config or ObjectiveConfig(), scales)
    return ev.report(assignment)
