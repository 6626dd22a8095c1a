import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stratopt.model import (
    AssignmentConstraints,
    Cohort,
    CovariateSchema,
    Patient,
    SchemaEntry,
    Survival,
)


def make_cohort(numerical, categorical=None, labels=None, survival=None, arms=None):
    """Build a cohort from plain lists.

    numerical: (n, k_num) nested list; categorical: (n, k_cat) index lists;
    labels: per-categorical label tuples; survival: list of (time, event);
    arms: recorded arm per patient.
    """
    numerical = [list(map(float, row)) for row in numerical]
    n = len(numerical)
    categorical = categorical or [[] for _ in range(n)]
    labels = labels or []
    entries = [SchemaEntry(f"x{j}") for j in range(len(numerical[0]))]
    entries += [
        SchemaEntry(f"c{c}", tuple(str(v) for v in labs)) for c, labs in enumerate(labels)
    ]
    schema = CovariateSchema(
        entries=tuple(entries),
        survival_time="time" if survival else None,
        event_indicator="event" if survival else None,
        arm_column="arm" if arms is not None else None,
    )
    patients = []
    for i in range(n):
        patients.append(
            Patient(
                id=f"p{i:03d}",
                numerical=tuple(numerical[i]),
                categorical=tuple(categorical[i]),
                survival=Survival(*survival[i]) if survival else None,
                original_arm=arms[i] if arms is not None else None,
            )
        )
    return Cohort(schema=schema, patients=tuple(patients))


def random_cohort(rng, n, k_num=2, cat_sizes=(2,), survival=False, arms=None):
    """Seeded random cohort: standard-normal numericals, uniform categories."""
    numerical = rng.normal(size=(n, k_num)).tolist()
    categorical = [
        [int(rng.integers(0, k)) for k in cat_sizes] for _ in range(n)
    ]
    labels = [tuple(range(k)) for k in cat_sizes]
    surv = None
    if survival:
        times = rng.exponential(scale=10.0, size=n) + 0.01
        events = rng.random(n) < 0.7
        surv = list(zip(times.tolist(), events.tolist()))
    return make_cohort(numerical, categorical, labels, survival=surv, arms=arms)


def duplicated_cohort(rng, half_n, k_num=2, cat_sizes=(2,)):
    """Cohort of cloned patient pairs plus the mirrored zero-objective assignment."""
    base = rng.normal(size=(half_n, k_num))
    numerical = np.vstack([base, base]).tolist()
    cats = [[int(rng.integers(0, k)) for k in cat_sizes] for _ in range(half_n)]
    categorical = cats + [list(c) for c in cats]
    labels = [tuple(range(k)) for k in cat_sizes]
    cohort = make_cohort(numerical, categorical, labels)
    arm_of = tuple([0] * half_n + [1] * half_n)
    return cohort, arm_of


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def two_arm():
    return AssignmentConstraints(num_arms=2, size_tolerance=0)
