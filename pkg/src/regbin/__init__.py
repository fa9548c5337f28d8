"""Regulation-guided binarization of gene expression snapshots, with an
ODE-based validation harness."""

__version__ = "0.1.0"

from .binarizer import BinarizerConfig, NormMode, binarize, min_max_normalize  # noqa: E402
from .evaluation import (  # noqa: E402
    DissimilarityReport,
    SweepConfig,
    SweepReport,
    dissimilarity,
    parameter_sweep,
    run_validation,
)
from .graph import (  # noqa: E402
    BooleanNetwork,
    InteractionSign,
    RegulatoryGraph,
    interaction_graph_of,
    parse_boolean_network,
    parse_graph,
)
from .odesim import (  # noqa: E402
    AtTimes,
    HillParams,
    LateK,
    build_ode,
    detect_steady_state,
    extract_snapshots,
    integrate_rk4,
    threshold_binarize,
)
from .profile import BinaryProfile, Provenance, TriState  # noqa: E402

__all__ = [
    "__version__",
    "AtTimes",
    "BinarizerConfig",
    "BinaryProfile",
    "BooleanNetwork",
    "DissimilarityReport",
    "HillParams",
    "InteractionSign",
    "LateK",
    "NormMode",
    "Provenance",
    "RegulatoryGraph",
    "SweepConfig",
    "SweepReport",
    "TriState",
    "binarize",
    "build_ode",
    "detect_steady_state",
    "dissimilarity",
    "extract_snapshots",
    "integrate_rk4",
    "interaction_graph_of",
    "min_max_normalize",
    "parameter_sweep",
    "parse_boolean_network",
    "parse_graph",
    "run_validation",
    "threshold_binarize",
]
