"""Floating-content anchor-zone simulation and dimensioning toolkit."""

from .cost import CostReport, CostWeights, availability, build_report, constraint_met
from .engine import (
    AzConfig,
    Contact,
    SimTrace,
    detect_contacts,
    erase_on_exit,
    exchange,
    run_interval,
    seed,
)
from .errors import (
    DataSchemaError,
    FcazError,
    InfeasibleError,
    NetworkFormatError,
    NetworkValidationError,
    ValidationError,
)
from .features import (
    CommFeatures,
    DatasetTriple,
    LinkFeatures,
    MobilityFeatures,
    aggregate,
    export_dataset,
    features_from_trace,
    import_dataset,
    make_triple,
    sample_frame,
)
from .ml import (
    DecisionTreeAzClassifier,
    KNeighborsAzClassifier,
    RandomForestAzClassifier,
    clone,
    load_model,
    save_model,
)
from .evaluation import (
    EvalReport,
    cross_validate,
    evaluate_rejection,
    metrics,
    predict_configs,
    preprocess,
    resources_saved,
)
from .mobility import TripSchedule, VehicleState, route, spawn_trips, step
from .optimizer import OptimizeResult, brute_force, greedy, trivial_bounds
from .roadnet import Link, RoadNet, build_grid, load_roadnet, save_roadnet
from .scenario import Scenario, load_scenario, save_scenario

__version__ = "0.1.0"
