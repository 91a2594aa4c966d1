"""Multi-sensor multi-object tracking with sampled trajectory posteriors.

The package estimates labelled multi-object states from cluttered, missed,
and unlabelled detections gathered by several sensors at once.  Posteriors
over whole association histories are kept as weighted components; Gibbs
samplers propose histories, exact weight evaluation scores them, and
smoothing runs either over a whole recorded window or scan by scan.
"""

from .errors import (ConfigError, MsglmbError, NumericalError,
                     StateSpaceOverflow)
from .gaussian import (GaussianDensity, MotionModel, SensorModel,
                       TrajectoryPosterior, predict, smooth, update)
from .gibbs_factor import (SampleStats, chain_rng, dedup_components,
                           factor_gibbs, factor_sample_joint)
from .gibbs_full import full_gibbs
from .metrics import OspaParams, ospa, ospa2
from .oracle import enumerate_histories, naive_log_weight
from .simulator import (ScenarioConfig, TruthTrack, context_from_scenario,
                        generate_measurements, generate_truth, load_scenario)
from .smoother import (GlmbPosterior, TrackEstimate, TrackerParams, batch,
                       estimate, recursive_track, smoothing_while_filtering,
                       statistics)
from .types import (AssociationHistory, GlmbComponent, Label,
                    MeasurementFrame, MultiSensorAssociation)
from .weights import (BirthComponent, WeightContext, WeightEngine,
                      component_log_weight)

__version__ = "0.1.0"

__all__ = [
    "AssociationHistory",
    "BirthComponent",
    "ConfigError",
    "GaussianDensity",
    "GlmbComponent",
    "GlmbPosterior",
    "Label",
    "MeasurementFrame",
    "MotionModel",
    "MsglmbError",
    "MultiSensorAssociation",
    "NumericalError",
    "OspaParams",
    "SampleStats",
    "ScenarioConfig",
    "SensorModel",
    "StateSpaceOverflow",
    "TrackEstimate",
    "TrackerParams",
    "TrajectoryPosterior",
    "TruthTrack",
    "WeightContext",
    "WeightEngine",
    "batch",
    "chain_rng",
    "component_log_weight",
    "context_from_scenario",
    "dedup_components",
    "enumerate_histories",
    "estimate",
    "factor_gibbs",
    "factor_sample_joint",
    "full_gibbs",
    "generate_measurements",
    "generate_truth",
    "load_scenario",
    "naive_log_weight",
    "ospa",
    "ospa2",
    "predict",
    "recursive_track",
    "smooth",
    "smoothing_while_filtering",
    "statistics",
    "update",
]
