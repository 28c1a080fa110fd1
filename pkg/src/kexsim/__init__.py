"""Kidney exchange clearing with survey-derived prioritization weights.

The package covers the full pipeline: fitting per-profile scores from
pairwise-comparison data, turning scores into weight vectors, clearing
compatibility graphs with an exact cardinality-then-weight optimizer, and
simulating multi-year daily matching to measure who the prioritization
actually reaches.
"""

from .btmodel import (
    AttributeModel,
    BTScores,
    ComparisonRecord,
    PresentationOrder,
    fit_attribute,
    fit_direct,
    predict,
    preference_rates,
    win_matrix,
)
from .clearing import (
    ClearingMode,
    ClearingResult,
    Matching,
    clear,
    solve_max_cardinality,
    solve_prioritized,
)
from .cycles import ExchangeCycle, ExchangeKind, cycle_value, enumerate_exchanges
from .experiments import (
    Arm,
    BoxplotStats,
    ExperimentKind,
    ExperimentResult,
    ExperimentSpec,
    run_experiment,
    summarize,
)
from .graph import (
    PROFILE_IDS,
    PROFILES,
    BloodClass,
    BloodType,
    CompatibilityGraph,
    PatientProfile,
    Vertex,
    VertexKind,
    altruist,
    blood_compatible,
    classify_pair,
    derive_edges,
    pair,
)
from .simulator import (
    RandomStreams,
    RunMetrics,
    SimulationConfig,
    SimulationState,
    generate_pair,
    run_simulation,
    step_day,
)
from .weights import (
    Transform,
    WeightVector,
    monotone_transform,
    rank_linear,
    survey_direct_scores,
    survey_weight_vector,
    unit_weight_vector,
)

__version__ = "0.1.0"
