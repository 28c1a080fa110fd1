"""Ensemble experiments comparing matching policies under shared random seeds.

Every arm replays the same per-run seeds, so arrivals, attributes, crossmatch
outcomes, departures, and execution luck are identical across arms and any
difference in outcomes is attributable to the matching policy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .clearing import ClearingMode
from .graph import PROFILE_IDS, BloodClass
from .simulator import RunMetrics, SimulationConfig, run_simulation
from .weights import WeightVector

UNDERDEMANDED_ONLY = frozenset({BloodClass.UNDERDEMANDED})
NON_UNDERDEMANDED = frozenset(
    {BloodClass.OVERDEMANDED, BloodClass.SELF_DEMANDED, BloodClass.RECIPROCAL}
)

GROUPS: dict[str, frozenset[BloodClass] | None] = {
    "all": None,
    "underdemanded": UNDERDEMANDED_ONLY,
    "non_underdemanded": NON_UNDERDEMANDED,
}


class ExperimentKind(str, Enum):
    PROFILE_PROPORTIONS = "profile_proportions"
    BLOOD_CLASS_BREAKDOWN = "blood_class_breakdown"
    WEIGHT_TRANSFORM = "weight_transform"


@dataclass(frozen=True)
class Arm:
    label: str
    mode: ClearingMode
    weights: WeightVector


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: ExperimentKind
    base_config: SimulationConfig
    arms: tuple[Arm, ...]
    runs: int = 20

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("need at least one run")
        if not self.arms:
            raise ValueError("need at least one arm")


@dataclass(frozen=True)
class RawRow:
    arm: str
    run: int
    profile: int
    blood_class: BloodClass
    entered: int
    matched: int

    @property
    def proportion(self) -> float:
        return self.matched / self.entered


@dataclass(frozen=True)
class BoxplotStats:
    """Five-number summary with 1.5 IQR whiskers over per-run proportions."""

    q1: float
    median: float
    q3: float
    lo_whisker: float
    hi_whisker: float
    outliers: tuple[float, ...]
    n: int


BoxplotSummary = dict[tuple[str, int, str], BoxplotStats]


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    raw_rows: tuple[RawRow, ...]
    summary: BoxplotSummary
    metrics: dict[tuple[str, int], RunMetrics]

    def run_proportions(self, arm: str, profile: int, group: str = "all") -> list[float]:
        """Per-run matched proportions, skipping runs where nothing entered."""
        classes = GROUPS[group]
        values = []
        for (arm_label, run), metrics in self.metrics.items():
            if arm_label != arm:
                continue
            prop = metrics.matched_proportion(profile=profile, blood_classes=classes)
            if prop is not None:
                values.append(prop)
        return values

    def mean_proportion(self, arm: str, profile: int, group: str = "all") -> float:
        values = self.run_proportions(arm, profile, group)
        if not values:
            raise ValueError(f"no data for arm={arm} profile={profile} group={group}")
        return float(np.mean(values))


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every (arm, run) simulation and summarize per-run proportions."""
    rows: list[RawRow] = []
    metrics: dict[tuple[str, int], RunMetrics] = {}
    for arm in spec.arms:
        for run in range(spec.runs):
            config = replace(
                spec.base_config,
                mode=arm.mode,
                weights=arm.weights,
                seed=spec.base_config.seed + run,
            )
            try:
                result = run_simulation(config)
            except Exception as exc:
                raise RuntimeError(f"simulation failed in arm {arm.label!r}, run {run}") from exc
            metrics[(arm.label, run)] = result
            for (pid, bclass), counts in sorted(
                result.cells.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
            ):
                if counts.entered > 0:
                    rows.append(
                        RawRow(arm.label, run, pid, bclass, counts.entered, counts.matched)
                    )
    row_tuple = tuple(rows)
    return ExperimentResult(
        spec=spec,
        raw_rows=row_tuple,
        summary=summarize(row_tuple),
        metrics=metrics,
    )


def _box_stats(values: Sequence[float]) -> BoxplotStats:
    arr = np.asarray(sorted(values), dtype=float)
    q1, median, q3 = (float(np.percentile(arr, q)) for q in (25, 50, 75))
    iqr = q3 - q1
    inside = arr[(arr >= q1 - 1.5 * iqr) & (arr <= q3 + 1.5 * iqr)]
    outliers = arr[(arr < q1 - 1.5 * iqr) | (arr > q3 + 1.5 * iqr)]
    return BoxplotStats(
        q1=q1,
        median=median,
        q3=q3,
        lo_whisker=float(inside.min()),
        hi_whisker=float(inside.max()),
        outliers=tuple(float(x) for x in outliers),
        n=len(arr),
    )


def summarize(rows: Iterable[RawRow]) -> BoxplotSummary:
    """Boxplot statistics per (arm, profile, group) over per-run proportions.

    A (run, profile, group) cell with no entrants contributes nothing; groups
    with no data at all are absent from the result.
    """
    tallies: dict[tuple[str, int, str, int], list[int]] = {}
    for row in rows:
        for group, classes in GROUPS.items():
            if classes is not None and row.blood_class not in classes:
                continue
            key = (row.arm, row.profile, group, row.run)
            entry = tallies.setdefault(key, [0, 0])
            entry[0] += row.entered
            entry[1] += row.matched
    per_run: dict[tuple[str, int, str], list[float]] = {}
    for (arm, profile, group, _run), (entered, matched) in sorted(tallies.items()):
        if entered > 0:
            per_run.setdefault((arm, profile, group), []).append(matched / entered)
    return {key: _box_stats(values) for key, values in per_run.items()}


def experiment_spec_from_dict(data: dict) -> ExperimentSpec:
    from .simulator import config_from_dict
    from .weights import weight_vector_from_spec

    arms = tuple(
        Arm(
            label=a["label"],
            mode=ClearingMode(a["mode"]),
            weights=weight_vector_from_spec(a["weights"]),
        )
        for a in data["arms"]
    )
    return ExperimentSpec(
        experiment=ExperimentKind(data["experiment"]),
        base_config=config_from_dict(data.get("base_config", {})),
        arms=arms,
        runs=int(data.get("runs", 20)),
    )


# --- CSV output -----------------------------------------------------------------

RAW_HEADER = ["arm", "run", "profile", "blood_class", "entered", "matched", "proportion"]
SUMMARY_HEADER = [
    "arm", "profile", "group", "q1", "median", "q3", "lo_whisker", "hi_whisker", "n_outliers",
]


def write_raw_csv(rows: Iterable[RawRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RAW_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.arm,
                    row.run,
                    row.profile,
                    row.blood_class.value,
                    row.entered,
                    row.matched,
                    f"{row.proportion:.6f}",
                ]
            )


def write_summary_csv(summary: BoxplotSummary, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for (arm, profile, group), stats in sorted(summary.items()):
            writer.writerow(
                [
                    arm,
                    profile,
                    group,
                    f"{stats.q1:.6f}",
                    f"{stats.median:.6f}",
                    f"{stats.q3:.6f}",
                    f"{stats.lo_whisker:.6f}",
                    f"{stats.hi_whisker:.6f}",
                    len(stats.outliers),
                ]
            )


def render_summary_table(path: str | Path) -> str:
    """Align a summary CSV into a fixed-width text table."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return ""
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for idx, row in enumerate(rows):
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
