"""Distributional realism scoring for stochastic multi-agent traffic simulation.

The library scores sampled joint futures against logged ground truth by
fitting per-metric histograms to the samples and measuring the negative log
likelihood the induced categorical distributions assign to the log, then
combining nine such component metrics into one composite.  A closed-loop
rollout harness with reproducible baseline policies and a synthetic scenario
generator make the whole pipeline runnable at desk scale.
"""

from .aggregation import (
    MetricsBundle,
    MetricWeights,
    ade,
    composite,
    dataset_composite,
    min_ade,
    scenario_component,
)
from .config import DEFAULT_CONFIG, EvalConfig, config_from_dict, config_to_dict
from .errors import (
    EmptySampleSet,
    IncompleteBundle,
    InconsistentRollouts,
    MalformedScenario,
    MetricUnscorable,
    NoValidSteps,
    ParseError,
    PolicyContractViolation,
    SimRealError,
)
from .estimators import (
    DEFAULT_HISTOGRAM_SPECS,
    FittedDistribution,
    HistogramSpec,
    LikelihoodEstimate,
    fit_bernoulli,
    fit_histogram,
    pool_simulated_samples,
    time_series_likelihood,
)
from .evaluate import DatasetSummary, evaluate_dataset, evaluate_scenario, summarize
from .features import (
    BOOLEAN_METRICS,
    FeatureParams,
    FeatureSeries,
    MetricKind,
    SceneStates,
    angular_accel_magnitude,
    angular_speed,
    collision_indication,
    distance_to_nearest_object,
    distance_to_road_edge,
    extract_features,
    linear_accel_magnitude,
    linear_speed,
    offroad_indication,
    time_to_collision,
)
from .geometry import (
    OrientedBox2D,
    Side,
    angle_diff,
    box_signed_distance,
    box_signed_distance_batch,
    point_to_polyline_distance,
    signed_angle_step,
)
from .harness import (
    AuditReport,
    Policy,
    PolicyContext,
    RolloutTrace,
    audit_trace,
    closed_loop_rollout,
    generate_submission,
)
from .policies import (
    POLICY_REGISTRY,
    ConstantVelocityPolicy,
    LoggedOraclePolicy,
    NoisyPlanPolicy,
    RandomAgentPolicy,
    ReplanWrapper,
    create_policy,
)
from .scene import (
    JointScene,
    MapFeature,
    MapFeatureKind,
    ObjectState,
    ObjectType,
    Scenario,
    ScenarioRollouts,
    Track,
    normalize_heading,
    simulated_object_ids,
    strip_late_spawns,
)
from .synth import SynthScenario, SynthSpec, Template, generate, make_suite

__version__ = "0.1.0"
