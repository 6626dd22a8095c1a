"""Independent oracles used to cross-check the library.

Everything in this file is deliberately written in the dumbest correct way
(full enumeration, per-time risk-set filtering, dict-based energy sums) and
must stay independent of the code paths it checks: the enumerator knows
nothing about symmetry breaking, the log-rank tabulation rebuilds risk sets
by filtering, and the QUBO energy is summed term by term.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from stratopt.balance import ObjectiveConfig, ObjectiveEvaluator
from stratopt.model import AssignmentConstraints, Cohort


def enumerate_feasible(n: int, constraints: AssignmentConstraints):
    """Yield every feasible arm vector, in lexicographic order, no symmetry breaking."""
    m = constraints.num_arms
    lo, hi = constraints.size_band(n)
    for arm_of in itertools.product(range(m), repeat=n):
        counts = [0] * m
        for a in arm_of:
            counts[a] += 1
        if all(lo <= c <= hi for c in counts):
            yield arm_of


def brute_force_minimum(
    cohort: Cohort, constraints: AssignmentConstraints, config: ObjectiveConfig | None = None
):
    """Global minimum by scoring every feasible assignment; lexicographic ties.

    Only the search is independent here: values come from the library's
    evaluator, whose arithmetic is pinned separately by hand-computed cases.
    """
    ev = ObjectiveEvaluator(cohort, constraints.num_arms, config or ObjectiveConfig())
    best_val = math.inf
    best = None
    count = 0
    for arm_of in enumerate_feasible(cohort.n, constraints):
        val = ev.value(np.array(arm_of, dtype=np.int64))
        count += 1
        if val < best_val:
            best_val = val
            best = arm_of
    return best, best_val, count


def log_rank_oracle(times, events, groups):
    """(observed-minus-expected for group 1, variance) by per-time filtering."""
    times = list(map(float, times))
    events = list(map(bool, events))
    groups = list(map(int, groups))
    event_times = sorted({t for t, e in zip(times, events) if e})
    o_minus_e = 0.0
    variance = 0.0
    for t in event_times:
        at_risk = [i for i, ti in enumerate(times) if ti >= t]
        n_t = len(at_risk)
        n1_t = sum(1 for i in at_risk if groups[i] == 1)
        d_t = sum(1 for i in at_risk if times[i] == t and events[i])
        d1_t = sum(1 for i in at_risk if times[i] == t and events[i] and groups[i] == 1)
        o_minus_e += d1_t - d_t * n1_t / n_t
        if n_t > 1:
            variance += d_t * (n1_t / n_t) * (1 - n1_t / n_t) * (n_t - d_t) / (n_t - 1)
    return o_minus_e, variance


def qubo_energy_by_terms(quadratic, offset, bits):
    """Energy of one bitstring summed coefficient by coefficient."""
    e = offset
    for (i, j), val in quadratic.items():
        e += val * bits[i] * bits[j]
    return e


def qubo_brute_minimum(quadratic, offset, n):
    """(best bitstring, minimum energy) over all 2^n bitstrings."""
    best_bits = None
    best_e = math.inf
    for k in range(2**n):
        bits = [(k >> i) & 1 for i in range(n)]
        e = qubo_energy_by_terms(quadratic, offset, bits)
        if e < best_e:
            best_e = e
            best_bits = bits
    return best_bits, best_e


def encoded_energy_spin_form(cohort, config, penalty, bits):
    """Energy of the balance relaxation evaluated directly in spin variables.

    Recomputes, from raw cohort data, the analytic expression the encoder is
    supposed to expand: scaled-column and category-indicator squared spin sums
    times 4/n^2, plus the penalty times the squared spin sum.
    """
    n = cohort.n
    z = np.asarray([2 * b - 1 for b in bits], dtype=np.float64)
    values = cohort.numerical_matrix
    total = 0.0
    for j in range(values.shape[1]):
        sd = float(np.std(values[:, j], ddof=1))
        if sd <= 0:
            continue
        total += float(z @ (values[:, j] / sd)) ** 2 * (4.0 / n**2)
    cats = cohort.categorical_matrix
    for c, entry in enumerate(cohort.schema.categorical_entries):
        for k in range(len(entry.labels)):
            indicator = (cats[:, c] == k).astype(np.float64)
            total += config.alpha * float(z @ indicator) ** 2 * (4.0 / n**2)
    total += penalty * float(z.sum()) ** 2
    return total
