"""Constrained-diversity exploration of grid-based complex systems.

Sampling loops (goal exploration with ROI-aware candidate selection) over
Gray-Scott and Lenia simulators, texture-feature spaces for behavior /
constraints / evaluation, bin-occupancy diversity metrics, a benchmark
runner, and an HTTP service for live steering.
"""

from .explorer import (
    Constraint,
    Explorer,
    ExplorerConfig,
    History,
    HistoryEntry,
    Roi,
    UnknownFeature,
    classify,
    mutate,
    run_exploration,
    sample_goal,
    select_candidate,
    update_roi,
)
from .features import (
    behavior_vector,
    constraint_features,
    haralick13,
    hu_moments,
    mean_pixel,
    pca_fit,
    pca_project,
    signed_log,
    standardize,
    tamura_features,
    volume,
)
from .metrics import (
    BinningSpec,
    DiversityTracker,
    InsufficientHistory,
    acceptance_rate,
    bin_index,
    constrained_diversity,
    diversity,
)
from .systems import (
    DivergentRollout,
    RolloutConfig,
    System,
    ZeroKernel,
    gray_scott_system,
    lenia_system,
    make_system,
)

__version__ = "0.1.0"
