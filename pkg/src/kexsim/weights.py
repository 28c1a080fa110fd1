"""Weight vectors for prioritized clearing, derived from fitted scores.

Besides using fitted scores directly, weights can be transformed while
preserving the profile ordering; rank-linear weights keep the ranking but
flatten the gaps to a constant step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping

from .btmodel import BTScores
from .graph import PROFILE_IDS


@dataclass(frozen=True)
class WeightVector:
    weights: dict[int, float]
    label: str

    def __post_init__(self) -> None:
        if sorted(self.weights) != list(PROFILE_IDS):
            raise ValueError("weights must cover exactly profiles 1..8")
        if any(w <= 0 for w in self.weights.values()):
            raise ValueError("weights must be strictly positive")

    def to_json_dict(self) -> dict:
        payload: dict = {"label": self.label, "scores": {str(pid): w for pid, w in sorted(self.weights.items())}}
        if max(self.weights.values()) == 1.0:
            payload["normalization"] = "max_is_one"
        return payload


class Transform(str, Enum):
    IDENTITY = "identity"
    SQUARE_ROOT = "sqrt"
    RANK = "rank"


def _score_map(scores: BTScores | Mapping[int, float]) -> dict[int, float]:
    table = scores.scores if isinstance(scores, BTScores) else dict(scores)
    if sorted(table) != list(PROFILE_IDS):
        raise ValueError("need a score for every profile 1..8")
    return dict(table)


def ranking(scores: BTScores | Mapping[int, float]) -> list[int]:
    """Profile ids from most to least preferred; ties broken by smaller id."""
    table = _score_map(scores)
    return sorted(table, key=lambda pid: (-table[pid], pid))


def rank_linear(
    scores: BTScores | Mapping[int, float], top: float = 1.0, step: float = 0.001
) -> WeightVector:
    """Weights linear in the rank: the r-th ranked profile gets top - (r-1)*step."""
    if step <= 0:
        raise ValueError("step must be positive")
    if top - (len(PROFILE_IDS) - 1) * step <= 0:
        raise ValueError("top is too small: the last rank's weight would not be positive")
    weights = {pid: top - r * step for r, pid in enumerate(ranking(scores))}
    return WeightVector(weights, label=f"rank_linear(top={top}, step={step})")


def monotone_transform(
    scores: BTScores | Mapping[int, float], transform: Transform
) -> WeightVector:
    """Apply an order-preserving transform to the scores."""
    if transform is Transform.RANK:
        return rank_linear(scores)
    table = _score_map(scores)
    if transform is Transform.SQUARE_ROOT:
        return WeightVector({pid: s**0.5 for pid, s in table.items()}, label="sqrt")
    return WeightVector(table, label="identity")


def unit_weight_vector() -> WeightVector:
    return WeightVector({pid: 1.0 for pid in PROFILE_IDS}, label="unit")


# --- bundled survey-fitted scores --------------------------------------------

def _load_bundled(name: str) -> dict[int, float]:
    raw = json.loads(resources.files(__package__).joinpath("data", name).read_text())
    return {int(pid): float(s) for pid, s in raw["scores"].items()}


def survey_direct_scores() -> dict[int, float]:
    """Per-profile scores fitted directly from the pairwise-comparison survey."""
    return _load_bundled("survey_scores_direct.json")


def survey_attribute_scores() -> dict[int, float]:
    """Scores implied by the attribute-based fit of the same survey (reference)."""
    return _load_bundled("survey_scores_attribute.json")


def survey_weight_vector() -> WeightVector:
    return WeightVector(survey_direct_scores(), label="survey_direct")


def weight_vector_from_spec(value) -> WeightVector:
    """Resolve a weights entry from config/experiment JSON.

    Accepts the shorthand strings "unit", "survey_direct", and "rank_linear",
    or an inline profile-id -> weight map.
    """
    if isinstance(value, str):
        if value == "unit":
            return unit_weight_vector()
        if value == "survey_direct":
            return survey_weight_vector()
        if value == "rank_linear":
            return rank_linear(survey_direct_scores())
        raise ValueError(f"unknown weights shorthand {value!r}")
    return WeightVector(load_weight_map(value), label="custom")


def load_weight_map(source: str | Path | Mapping) -> dict[int, float]:
    """Read a weight/score map from a JSON file or dict.

    Accepts either the full scores schema ({"scores": {...}}) or a bare
    profile-id -> weight map.
    """
    if isinstance(source, (str, Path)):
        data = json.loads(Path(source).read_text())
    else:
        data = source
    if isinstance(data, Mapping) and "scores" in data:
        data = data["scores"]
    return {int(pid): float(w) for pid, w in data.items()}
