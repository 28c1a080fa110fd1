"""Bradley-Terry estimation of patient profile scores from pairwise choices.

Two fitting routes: a free score per profile (minorization-maximization
fixed point), and a linear model over the three binary profile attributes
(Newton-Raphson logistic fit).  Scores are reported with the most-preferred
profile pinned at 1.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import PROFILE_IDS, PROFILES

N_PROFILES = 8


class PresentationOrder(str, Enum):
    ORIGINAL = "original"
    REVERSED = "reversed"


@dataclass(frozen=True)
class ComparisonRecord:
    """One respondent's choice between two patient profiles."""

    respondent_id: str
    profile_a: int
    profile_b: int
    chosen: int
    presentation_order: PresentationOrder = PresentationOrder.ORIGINAL

    def __post_init__(self) -> None:
        for pid in (self.profile_a, self.profile_b):
            if not 1 <= pid <= N_PROFILES:
                raise ValueError(f"profile id {pid} out of range 1..{N_PROFILES}")
        if self.profile_a == self.profile_b:
            raise ValueError("a comparison needs two distinct profiles")
        if self.chosen not in (self.profile_a, self.profile_b):
            raise ValueError(f"chosen profile {self.chosen} was not one of the pair")


@dataclass(frozen=True)
class BTScores:
    """Fitted scores, normalized so the top profile scores 1."""

    scores: dict[int, float]
    log_likelihood: float
    iterations: int
    converged: bool
    normalization: str = "max_is_one"

    def to_json_dict(self) -> dict:
        return {
            "normalization": self.normalization,
            "scores": {str(pid): s for pid, s in sorted(self.scores.items())},
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class AttributeModel:
    """Logistic fit over (age, drinking, health) indicator differences."""

    betas: dict[str, float]
    derived_scores: BTScores
    separated: bool = field(default=False)


ATTRIBUTE_NAMES = ("age", "drinking", "health")

# 0/1 indicator rows per profile id, in ATTRIBUTE_NAMES order
_ATTRIBUTE_MATRIX = np.array([PROFILES[pid - 1].attributes for pid in PROFILE_IDS], dtype=float)

_BETA_CAP = 20.0


def win_matrix(records: Iterable[ComparisonRecord]) -> np.ndarray:
    """8x8 counts; entry [i-1, j-1] is how often profile i beat profile j."""
    wins = np.zeros((N_PROFILES, N_PROFILES), dtype=np.int64)
    for rec in records:
        loser = rec.profile_b if rec.chosen == rec.profile_a else rec.profile_a
        wins[rec.chosen - 1, loser - 1] += 1
    return wins


def _log_likelihood(wins: np.ndarray, p: np.ndarray) -> float:
    ll = 0.0
    n = wins.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j and wins[i, j] > 0:
                ll += wins[i, j] * math.log(p[i] / (p[i] + p[j]))
    return ll


def fit_direct(
    wins: np.ndarray,
    tolerance: float = 1e-10,
    max_iterations: int = 10_000,
    pseudo_count: float = 0.5,
) -> BTScores:
    """Maximum-likelihood scores via the minorization-maximization fixed point.

    `pseudo_count` is added to every ordered pair of profiles that appear in
    the data, which keeps scores finite for profiles that never win.
    Profiles absent from the data are left out of the result entirely.
    """
    wins = np.asarray(wins, dtype=float)
    appears = (wins + wins.T).sum(axis=1) > 0
    active = np.flatnonzero(appears)
    if active.size == 0:
        return BTScores({}, 0.0, 0, True)

    w = wins[np.ix_(active, active)].copy()
    if pseudo_count > 0.0:
        w += pseudo_count
        np.fill_diagonal(w, 0.0)
    n_ij = w + w.T
    total_wins = w.sum(axis=1)

    k = active.size
    p = np.ones(k)
    prev_ll = _log_likelihood(w, p)
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        denom = np.zeros(k)
        for i in range(k):
            for j in range(k):
                if i != j and n_ij[i, j] > 0:
                    denom[i] += n_ij[i, j] / (p[i] + p[j])
        p_new = np.where(denom > 0, total_wins / np.maximum(denom, 1e-300), 0.0)
        top = p_new.max()
        if top <= 0:
            p = p_new
            break
        p_new /= top
        ll = _log_likelihood(w, p_new)
        if ll < prev_ll - 1e-9 * (1.0 + abs(prev_ll)):
            raise AssertionError(
                f"likelihood decreased on sweep {iterations}: {prev_ll} -> {ll}"
            )
        delta = np.max(np.abs(p_new - p) / np.maximum(p, 1e-300))
        p = p_new
        prev_ll = ll
        if delta < tolerance:
            converged = True
            break

    scores = {int(active[i]) + 1: float(p[i]) for i in range(k)}
    return BTScores(scores, float(prev_ll), iterations, converged)


def predict(scores: BTScores | Mapping[int, float], i: int, j: int) -> float:
    """Probability that profile i is chosen over profile j."""
    if i == j:
        raise ValueError("cannot compare a profile with itself")
    table = scores.scores if isinstance(scores, BTScores) else scores
    return table[i] / (table[i] + table[j])


def fit_attribute(
    records: Sequence[ComparisonRecord],
    tolerance: float = 1e-10,
    max_iterations: int = 200,
) -> AttributeModel:
    """Newton-Raphson logistic fit of choice on attribute differences.

    The win probability is sigma(sum_r beta_r (x_ir - x_jr)).  Coefficients
    are capped at +/-20; hitting the cap flags (quasi-)separation.
    """
    wins = win_matrix(records)
    # per ordered pair (i, j): k = wins of i, n = comparisons
    n_mat = wins + wins.T
    beta = np.zeros(3)
    iterations = 0
    converged = False
    separated = False
    pairs = [(i, j) for i in range(N_PROFILES) for j in range(i + 1, N_PROFILES) if n_mat[i, j] > 0]

    def pair_terms(b: np.ndarray):
        for i, j in pairs:
            x = _ATTRIBUTE_MATRIX[i] - _ATTRIBUTE_MATRIX[j]
            eta = float(x @ b)
            prob = 1.0 / (1.0 + math.exp(-eta))
            yield i, j, x, prob

    for iterations in range(1, max_iterations + 1):
        grad = np.zeros(3)
        hess = np.zeros((3, 3))
        for i, j, x, prob in pair_terms(beta):
            n = n_mat[i, j]
            k = wins[i, j]
            grad += (k - n * prob) * x
            hess += n * prob * (1.0 - prob) * np.outer(x, x)
        step, *_ = np.linalg.lstsq(hess, grad, rcond=None)
        beta = beta + step
        clipped = np.clip(beta, -_BETA_CAP, _BETA_CAP)
        if not np.array_equal(clipped, beta):
            separated = True
            beta = clipped
        if np.max(np.abs(step)) < tolerance:
            converged = True
            break

    ll = 0.0
    for i, j, x, prob in pair_terms(beta):
        prob = min(max(prob, 1e-300), 1.0 - 1e-16)
        ll += wins[i, j] * math.log(prob) + wins[j, i] * math.log(1.0 - prob)

    raw = np.exp(_ATTRIBUTE_MATRIX @ beta)
    raw /= raw.max()
    derived = BTScores(
        {pid: float(raw[pid - 1]) for pid in PROFILE_IDS},
        float(ll),
        iterations,
        converged,
    )
    betas = {name: float(b) for name, b in zip(ATTRIBUTE_NAMES, beta)}
    return AttributeModel(betas=betas, derived_scores=derived, separated=separated)


def preference_rates(records: Iterable[ComparisonRecord]) -> dict[int, float]:
    """Percentage of appearances in which each profile was the one chosen."""
    chosen = {pid: 0 for pid in PROFILE_IDS}
    appeared = {pid: 0 for pid in PROFILE_IDS}
    for rec in records:
        appeared[rec.profile_a] += 1
        appeared[rec.profile_b] += 1
        chosen[rec.chosen] += 1
    return {
        pid: 100.0 * chosen[pid] / appeared[pid]
        for pid in PROFILE_IDS
        if appeared[pid] > 0
    }


# --- CSV / JSON interfaces ---------------------------------------------------

CSV_HEADER = ["respondent_id", "profile_a", "profile_b", "chosen", "order"]


class ComparisonIngestError(ValueError):
    """A malformed comparisons CSV row, reported with its line number."""


def read_comparisons_csv(path: str | Path) -> list[ComparisonRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ComparisonIngestError(f"missing columns: {sorted(missing)}")
        for row in reader:
            try:
                records.append(
                    ComparisonRecord(
                        respondent_id=row["respondent_id"],
                        profile_a=int(row["profile_a"]),
                        profile_b=int(row["profile_b"]),
                        chosen=int(row["chosen"]),
                        presentation_order=PresentationOrder(row["order"]),
                    )
                )
            except (ValueError, TypeError) as exc:
                raise ComparisonIngestError(f"line {reader.line_num}: {exc}") from exc
    return records


def write_scores_json(scores: BTScores, path: str | Path, extra: dict | None = None) -> None:
    payload = scores.to_json_dict()
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
