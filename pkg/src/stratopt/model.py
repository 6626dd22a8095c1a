"""Patient, cohort and assignment data model.

A :class:`Cohort` is an immutable table of patients typed by a
:class:`CovariateSchema`.  Numerical covariates are stored as floats,
categorical covariates as indices into the schema's label list, so every
downstream metric is index-based and unambiguous.  Assignments map each
patient position to a treatment arm and are feasible when every arm size
lies in the tolerance band ``[floor(n/m) - tol, ceil(n/m) + tol]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class SchemaEntry:
    """One covariate column: numerical when ``labels`` is None, else categorical."""

    name: str
    labels: Optional[tuple[str, ...]] = None

    @property
    def is_categorical(self) -> bool:
        return self.labels is not None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("covariate name must be nonempty")
        if self.labels is not None:
            if len(self.labels) < 2:
                raise ValueError(f"categorical covariate {self.name!r} needs >= 2 labels")
            if len(set(self.labels)) != len(self.labels):
                raise ValueError(f"categorical covariate {self.name!r} has duplicate labels")


@dataclass(frozen=True)
class CovariateSchema:
    """Ordered covariate entries plus optional survival and arm column names."""

    entries: tuple[SchemaEntry, ...]
    survival_time: Optional[str] = None
    event_indicator: Optional[str] = None
    arm_column: Optional[str] = None

    def __post_init__(self) -> None:
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("covariate names must be unique")
        if (self.survival_time is None) != (self.event_indicator is None):
            raise ValueError("survival_time and event_indicator must be given together")

    @property
    def numerical_names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries if not e.is_categorical)

    @property
    def categorical_entries(self) -> tuple[SchemaEntry, ...]:
        return tuple(e for e in self.entries if e.is_categorical)

    @property
    def has_survival(self) -> bool:
        return self.survival_time is not None


@dataclass(frozen=True)
class Survival:
    time: float
    event: bool

    def __post_init__(self) -> None:
        if not (self.time > 0 and math.isfinite(self.time)):
            raise ValueError(f"survival time must be a finite positive real, got {self.time}")


@dataclass(frozen=True)
class Patient:
    """One row of the cohort table; lengths are validated by :class:`Cohort`."""

    id: str
    numerical: tuple[float, ...]
    categorical: tuple[int, ...]
    survival: Optional[Survival] = None
    original_arm: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("patient id must be nonempty")
        for v in self.numerical:
            if not math.isfinite(v):
                raise ValueError(f"patient {self.id!r}: non-finite numerical value {v}")


@dataclass(frozen=True)
class Cohort:
    schema: CovariateSchema
    patients: tuple[Patient, ...]

    def __post_init__(self) -> None:
        if len(self.patients) < 2:
            raise ValueError("a cohort needs at least 2 patients")
        ids = [p.id for p in self.patients]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate patient ids: {dupes}")
        n_num = len(self.schema.numerical_names)
        cat_entries = self.schema.categorical_entries
        for p in self.patients:
            if len(p.numerical) != n_num:
                raise ValueError(
                    f"patient {p.id!r}: expected {n_num} numerical values, got {len(p.numerical)}"
                )
            if len(p.categorical) != len(cat_entries):
                raise ValueError(
                    f"patient {p.id!r}: expected {len(cat_entries)} categorical values, "
                    f"got {len(p.categorical)}"
                )
            for entry, idx in zip(cat_entries, p.categorical):
                if not 0 <= idx < len(entry.labels):
                    raise ValueError(
                        f"patient {p.id!r}: category index {idx} out of range for {entry.name!r}"
                    )

    @property
    def n(self) -> int:
        return len(self.patients)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.patients)

    @cached_property
    def numerical_matrix(self) -> np.ndarray:
        """(n, k_num) float64 matrix of numerical covariate values."""
        k = len(self.schema.numerical_names)
        out = np.empty((self.n, k), dtype=np.float64)
        for i, p in enumerate(self.patients):
            out[i, :] = p.numerical
        out.flags.writeable = False
        return out

    @cached_property
    def categorical_matrix(self) -> np.ndarray:
        """(n, k_cat) int64 matrix of category indices."""
        k = len(self.schema.categorical_entries)
        out = np.empty((self.n, k), dtype=np.int64)
        for i, p in enumerate(self.patients):
            out[i, :] = p.categorical
        out.flags.writeable = False
        return out

    @cached_property
    def survival_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(times, events) arrays; raises DataError if any patient lacks survival data."""
        missing = [p.id for p in self.patients if p.survival is None]
        if missing:
            raise DataError(f"patients missing survival data: {missing[:10]}")
        times = np.array([p.survival.time for p in self.patients], dtype=np.float64)
        events = np.array([p.survival.event for p in self.patients], dtype=bool)
        times.flags.writeable = False
        events.flags.writeable = False
        return times, events


@dataclass(frozen=True)
class AssignmentConstraints:
    """Number of arms and the size tolerance defining the feasible set."""

    num_arms: int = 2
    size_tolerance: int = 0

    def __post_init__(self) -> None:
        if self.num_arms < 2:
            raise ValueError("num_arms must be >= 2")
        if self.size_tolerance < 0:
            raise ValueError("size_tolerance must be >= 0")

    def size_band(self, n: int) -> tuple[int, int]:
        """Inclusive (lo, hi) bounds every arm size must satisfy."""
        lo = max(0, n // self.num_arms - self.size_tolerance)
        hi = -(-n // self.num_arms) + self.size_tolerance
        return lo, hi


@dataclass(frozen=True)
class Assignment:
    """Arm index per patient, in cohort order."""

    arm_of: tuple[int, ...]

    def as_array(self) -> np.ndarray:
        return np.array(self.arm_of, dtype=np.int64)

    def arm_sizes(self, num_arms: int) -> tuple[int, ...]:
        counts = [0] * num_arms
        for a in self.arm_of:
            if 0 <= a < num_arms:
                counts[a] += 1
        return tuple(counts)


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    violations: tuple[str, ...] = field(default=())


def validate_assignment(
    cohort: Cohort, constraints: AssignmentConstraints, assignment: Assignment
) -> ValidationResult:
    """Check an assignment against the constraint set.

    Returns a result listing every violated constraint.  A length mismatch is
    a structural error (the vector does not describe this cohort at all) and
    raises ValueError instead of being reported as a violation.
    """
    if len(assignment.arm_of) != cohort.n:
        raise ValueError(
            f"assignment length {len(assignment.arm_of)} != cohort size {cohort.n}"
        )
    violations: list[str] = []
    m = constraints.num_arms
    for i, a in enumerate(assignment.arm_of):
        if not 0 <= a < m:
            violations.append(f"patient {cohort.ids[i]!r}: arm index {a} not in [0, {m})")
    if not violations:
        lo, hi = constraints.size_band(cohort.n)
        for p, size in enumerate(assignment.arm_sizes(m)):
            if not lo <= size <= hi:
                violations.append(f"arm {p}: size {size} outside [{lo}, {hi}]")
    return ValidationResult(valid=not violations, violations=tuple(violations))


def assignment_from_arm_column(cohort: Cohort) -> Assignment:
    """Recover the recorded trial assignment from patients' original_arm fields.

    The result is checked against constraints derived from the observed arm
    sizes (arm count = max index + 1, tolerance = smallest band containing
    every observed size).
    """
    missing = [p.id for p in cohort.patients if p.original_arm is None]
    if missing:
        raise DataError(f"patients missing a recorded arm: {missing}")
    arm_of = tuple(int(p.original_arm) for p in cohort.patients)
    if min(arm_of) < 0:
        bad = [cohort.ids[i] for i, a in enumerate(arm_of) if a < 0]
        raise DataError(f"negative arm indices for patients: {bad}")
    m = max(max(arm_of) + 1, 2)
    assignment = Assignment(arm_of)
    sizes = assignment.arm_sizes(m)
    tol = 0
    while True:
        lo, hi = AssignmentConstraints(m, tol).size_band(cohort.n)
        if all(lo <= s <= hi for s in sizes):
            break
        tol += 1
    result = validate_assignment(cohort, AssignmentConstraints(m, tol), assignment)
    if not result.valid:
        raise DataError(f"recorded arms do not form a valid assignment: {result.violations}")
    return assignment


def observed_constraints(cohort: Cohort, assignment: Assignment) -> AssignmentConstraints:
    """Smallest-tolerance constraints under which ``assignment`` is valid."""
    m = max(max(assignment.arm_of) + 1, 2)
    sizes = Assignment(assignment.arm_of).arm_sizes(m)
    tol = 0
    while True:
        c = AssignmentConstraints(m, tol)
        lo, hi = c.size_band(cohort.n)
        if all(lo <= s <= hi for s in sizes):
            return c
        tol += 1
