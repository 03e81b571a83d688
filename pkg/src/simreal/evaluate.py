"""End-to-end scoring: logged scenario + 32 rollouts -> metrics bundle.

The logged side is stripped of late-spawning objects first, then every
simulated object is scored per metric against the distribution fitted to its
own pooled rollout samples.  Metrics that cannot be scored for any object
(for example road-edge distance on a map without road edges) are excluded
and the remaining weights renormalized; exclusions are recorded on the
bundle so reports can surface them.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .aggregation import (
    MetricsBundle,
    ade,
    composite,
    dataset_composite,
    min_ade,
    scenario_component,
)
from .config import DEFAULT_CONFIG, EvalConfig
from .errors import EmptySampleSet, MetricUnscorable, NoValidSteps
from .estimators import (
    LikelihoodEstimate,
    fit_metric_distribution,
    pool_from_features,
    rollout_features,
    time_series_likelihood,
)
from .features import MetricKind, SceneStates, extract_features
from .scene import Scenario, ScenarioRollouts, simulated_object_ids, strip_late_spawns


def evaluate_scenario(
    scenario: Scenario,
    rollouts: ScenarioRollouts,
    config: EvalConfig = DEFAULT_CONFIG,
) -> MetricsBundle:
    """Score one scenario's rollouts against its logged future."""
    logged = strip_late_spawns(scenario)
    scored_ids = sorted(simulated_object_ids(logged) & rollouts.object_ids)

    logged_states = SceneStates.from_logged_future(logged)
    logged_feats = extract_features(logged_states, logged.map_features, config.features)
    sim_feats = rollout_features(logged, rollouts, config.features)

    components: dict[MetricKind, float] = {}
    excluded: list[MetricKind] = []
    for metric in MetricKind:
        estimates = _metric_estimates(metric, scored_ids, logged_feats, sim_feats, config)
        try:
            components[metric] = scenario_component(
                estimates, metric, config.object_aggregation
            )
        except MetricUnscorable:
            excluded.append(metric)

    weights = config.weights
    if excluded:
        weights = weights.renormalized(components.keys())
    score = composite(components, weights)
    return MetricsBundle(
        scenario_id=scenario.scenario_id,
        components=components,
        composite=score,
        ade=ade(rollouts, logged),
        min_ade=min_ade(rollouts, logged),
        excluded=tuple(excluded),
    )


def _metric_estimates(
    metric: MetricKind,
    scored_ids: Sequence[int],
    logged_feats,
    sim_feats,
    config: EvalConfig,
) -> list[LikelihoodEstimate]:
    estimates: list[LikelihoodEstimate] = []
    shared_dist = None
    if not config.per_object_histograms:
        pooled = [pool_from_features(sim_feats, oid, metric) for oid in scored_ids]
        flat = np.concatenate([p for p in pooled if len(p)]) if pooled else np.empty(0)
        if len(flat):
            shared_dist = fit_metric_distribution(flat, metric, config.histograms)
    for oid in scored_ids:
        logged_series = logged_feats[metric][oid]
        if logged_series.num_valid == 0:
            continue
        samples = pool_from_features(sim_feats, oid, metric)
        if len(samples) == 0 and shared_dist is None:
            continue
        try:
            dist = shared_dist or fit_metric_distribution(samples, metric, config.histograms)
            estimates.append(time_series_likelihood(logged_series, dist))
        except (EmptySampleSet, NoValidSteps):
            continue
    return estimates


@dataclass(frozen=True)
class DatasetSummary:
    scenario_count: int
    composite: float
    mean_ade: float
    mean_min_ade: float
    component_means: Mapping[MetricKind, float]

    def __post_init__(self):
        object.__setattr__(self, "component_means", dict(self.component_means))


def summarize(bundles: Sequence[MetricsBundle]) -> DatasetSummary:
    comp_means = {}
    for metric in MetricKind:
        vals = [b.components[metric] for b in bundles if metric in b.components]
        if vals:
            comp_means[metric] = float(np.mean(vals))
    return DatasetSummary(
        scenario_count=len(bundles),
        composite=dataset_composite(bundles),
        mean_ade=float(np.mean([b.ade for b in bundles])),
        mean_min_ade=float(np.mean([b.min_ade for b in bundles])),
        component_means=comp_means,
    )


def _evaluate_one(args) -> MetricsBundle:
    scenario, rollouts, config = args
    return evaluate_scenario(scenario, rollouts, config)


def evaluate_dataset(
    pairs: Iterable[tuple[Scenario, ScenarioRollouts]],
    config: EvalConfig = DEFAULT_CONFIG,
    jobs: int = 1,
) -> tuple[list[MetricsBundle], DatasetSummary]:
    """Score many scenarios, optionally across worker processes."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no scenarios to evaluate")
    if jobs > 1 and len(pairs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            bundles = list(pool.map(_evaluate_one, [(s, r, config) for s, r in pairs]))
    else:
        bundles = [evaluate_scenario(s, r, config) for s, r in pairs]
    bundles.sort(key=lambda b: b.scenario_id)
    return bundles, summarize(bundles)
