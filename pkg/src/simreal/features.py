"""Per-object scalar feature series extracted from a joint scene.

Nine measurements are produced for every object over the 80-step future
window: four kinematic (linear speed, linear acceleration, angular speed,
angular acceleration), three interaction (signed distance to the nearest
object, a collided-at-any-time indication, time-to-collision against a
followed object), and two map-based (signed distance to the nearest road
edge, an off-road-at-any-time indication).

Derivatives are backward differences over the future window only, so a
k-step derivative marks its first k steps invalid and is otherwise valid at
step t exactly when all k+1 underlying poses are valid.  The two indications
are collapsed to a single event per object and represented as a constant
boolean series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from .geometry import box_signed_distance_batch, polyline_distance_batch
from .errors import InconsistentRollouts, MalformedScenario
from .scene import JointScene, MapFeature, MapFeatureKind, ObjectState, Scenario

TWO_PI = 2.0 * math.pi


class MetricKind(Enum):
    LINEAR_SPEED = "linear_speed"
    LINEAR_ACCEL = "linear_accel"
    ANGULAR_SPEED = "angular_speed"
    ANGULAR_ACCEL = "angular_accel"
    DIST_TO_NEAREST_OBJECT = "dist_to_nearest_object"
    COLLISION = "collision"
    TIME_TO_COLLISION = "time_to_collision"
    DIST_TO_ROAD_EDGE = "dist_to_road_edge"
    OFFROAD = "offroad"


#: Metrics whose value is a single boolean event per object per rollout.
BOOLEAN_METRICS = frozenset({MetricKind.COLLISION, MetricKind.OFFROAD})

METRIC_ORDER = tuple(MetricKind)


@dataclass(frozen=True)
class FeatureParams:
    """Knobs for the features whose thresholds are conventions, not data."""

    ttc_max: float = 5.0
    ttc_heading_threshold: float = math.pi / 4.0
    ttc_min_lateral: float = 1.0
    ttc_closing_eps: float = 1e-3


DEFAULT_FEATURE_PARAMS = FeatureParams()


@dataclass(frozen=True)
class FeatureSeries:
    """One metric's values for one object, aligned to future steps 1..T."""

    object_id: int
    metric: MetricKind
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        ok = np.array(self.valid, dtype=bool)
        if vals.shape != ok.shape or vals.ndim != 1:
            raise ValueError("values and valid must be equal-length 1D arrays")
        vals.setflags(write=False)
        ok.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "valid", ok)

    @property
    def num_valid(self) -> int:
        return int(self.valid.sum())

    def valid_values(self) -> np.ndarray:
        return self.values[self.valid]


@dataclass(frozen=True)
class SceneStates:
    """Array view of one scene's future window, shared by all feature ops.

    ``centers`` is (A, T, 3), ``headings`` and ``valid`` are (A, T), ``dims``
    is (A, 3) as [length, width, height].  Row order follows ``ids``.
    """

    ids: tuple[int, ...]
    centers: np.ndarray
    headings: np.ndarray
    valid: np.ndarray
    dims: np.ndarray
    dt: float

    @classmethod
    def from_logged_future(cls, scenario: Scenario) -> "SceneStates":
        """All logged tracks over the future window, with logged validity."""
        ids = tuple(sorted(t.object_id for t in scenario.tracks))
        return cls._from_states(
            ids,
            {oid: scenario.future_states(oid) for oid in ids},
            {oid: scenario.track(oid) for oid in ids},
            scenario.timestep,
        )

    @classmethod
    def from_rollout(cls, scenario: Scenario, joint: JointScene) -> "SceneStates":
        """A simulated joint scene; box extents come from the source scenario."""
        ids = tuple(sorted(joint.object_ids))
        tracks = {}
        for oid in ids:
            if not scenario.has_track(oid):
                raise InconsistentRollouts(
                    f"rollout object {oid} is absent from scenario {scenario.scenario_id!r}"
                )
            tracks[oid] = scenario.track(oid)
        if joint.num_steps != scenario.future_length:
            raise MalformedScenario(
                f"rollout has {joint.num_steps} steps, scenario expects {scenario.future_length}"
            )
        return cls._from_states(ids, dict(joint.trajectories), tracks, scenario.timestep)

    @classmethod
    def _from_states(cls, ids, states_by_id, tracks_by_id, dt) -> "SceneStates":
        n = len(ids)
        t = len(next(iter(states_by_id.values()))) if n else 0
        centers = np.zeros((n, t, 3))
        headings = np.zeros((n, t))
        valid = np.zeros((n, t), dtype=bool)
        dims = np.zeros((n, 3))
        for row, oid in enumerate(ids):
            seq = states_by_id[oid]
            centers[row] = [(s.x, s.y, s.z) for s in seq]
            headings[row] = [s.heading for s in seq]
            valid[row] = [s.valid for s in seq]
            trk = tracks_by_id[oid]
            dims[row] = (trk.length, trk.width, trk.height)
        return cls(ids=tuple(ids), centers=centers, headings=headings, valid=valid, dims=dims, dt=dt)

    @property
    def num_objects(self) -> int:
        return len(self.ids)

    @property
    def num_steps(self) -> int:
        return self.valid.shape[1]

    def row_of(self, object_id: int) -> int:
        return self.ids.index(object_id)


# ---------------------------------------------------------------------------
# Array kernels.  All return (values, valid) pairs shaped (A, T); masked
# slots hold 0 so downstream pooling can never pick up garbage.


def _masked(vals: np.ndarray, ok: np.ndarray) -> np.ndarray:
    return np.where(ok, vals, 0.0)


def _speed_arrays(centers: np.ndarray, valid: np.ndarray, dt: float):
    vals = np.zeros(valid.shape)
    ok = np.zeros(valid.shape, dtype=bool)
    if valid.shape[1] >= 2:
        step = np.linalg.norm(np.diff(centers, axis=1), axis=-1) / dt
        vals[:, 1:] = step
        ok[:, 1:] = valid[:, 1:] & valid[:, :-1]
    return _masked(vals, ok), ok


def _derivative_arrays(vals: np.ndarray, ok: np.ndarray, dt: float):
    out = np.zeros_like(vals)
    out_ok = np.zeros_like(ok)
    if vals.shape[1] >= 2:
        out[:, 1:] = np.diff(vals, axis=1) / dt
        out_ok[:, 1:] = ok[:, 1:] & ok[:, :-1]
    return _masked(out, out_ok), out_ok


def _wrap_signed(delta: np.ndarray) -> np.ndarray:
    m = delta % TWO_PI
    return np.where(m > math.pi, m - TWO_PI, m)


def _angular_speed_arrays(headings: np.ndarray, valid: np.ndarray, dt: float):
    vals = np.zeros(valid.shape)
    ok = np.zeros(valid.shape, dtype=bool)
    if valid.shape[1] >= 2:
        vals[:, 1:] = _wrap_signed(np.diff(headings, axis=1)) / dt
        ok[:, 1:] = valid[:, 1:] & valid[:, :-1]
    return _masked(vals, ok), ok


def _nearest_object_arrays(states: SceneStates):
    a, t = states.valid.shape
    vals = np.zeros((a, t))
    ok = np.zeros((a, t), dtype=bool)
    if a < 2:
        return vals, ok
    iu, ju = np.triu_indices(a, 1)
    boxes = np.concatenate(
        [
            states.centers[:, :, :2],
            states.headings[:, :, None],
            np.broadcast_to(states.dims[:, None, 0:1], (a, t, 1)),
            np.broadcast_to(states.dims[:, None, 1:2], (a, t, 1)),
        ],
        axis=-1,
    )
    pair_d = box_signed_distance_batch(boxes[iu], boxes[ju])  # (P, T)

    dist = np.full((a, a, t), np.inf)
    dist[iu, ju] = pair_d
    dist[ju, iu] = pair_d

    both_valid = states.valid[:, None, :] & states.valid[None, :, :]
    diag = np.arange(a)
    both_valid[diag, diag, :] = False  # no self pairs

    z = states.centers[:, :, 2]
    half_heights = states.dims[:, 2] / 2.0
    zgap = np.abs(z[:, None, :] - z[None, :, :])
    zlim = half_heights[:, None] + half_heights[None, :]
    gated = both_valid & (zgap <= zlim[:, :, None])

    gated_min = np.where(gated, dist, np.inf).min(axis=1)
    any_min = np.where(both_valid, dist, np.inf).min(axis=1)
    has_gated = gated.any(axis=1)
    has_any = both_valid.any(axis=1)

    # Pairs with no vertical overlap fall back to the plain 2D minimum so the
    # step still scores.
    vals = np.where(has_gated, gated_min, np.where(has_any, any_min, 0.0))
    ok = has_any
    return _masked(vals, ok), ok


def _event_series(per_step_vals, per_step_ok, predicate):
    event = (predicate(per_step_vals) & per_step_ok).any(axis=1)
    defined = per_step_ok.any(axis=1)
    t = per_step_ok.shape[1]
    vals = np.broadcast_to(event[:, None].astype(float), (len(event), t)).copy()
    ok = np.broadcast_to(defined[:, None], (len(event), t)).copy()
    return _masked(vals, ok), ok


def _ttc_arrays(states: SceneStates, speed_vals, speed_ok, params: FeatureParams):
    a, t = states.valid.shape
    cap = params.ttc_max
    vals = np.full((a, t), cap)
    ok = speed_ok.copy()
    if a >= 2:
        # Follower/leader tensors are (A, A, T); small agent counts keep this
        # comfortably in memory.
        h = states.headings
        hx, hy = np.cos(h), np.sin(h)
        x, y = states.centers[:, :, 0], states.centers[:, :, 1]
        dx = x[None, :, :] - x[:, None, :]
        dy = y[None, :, :] - y[:, None, :]
        lon = hx[:, None, :] * dx + hy[:, None, :] * dy
        lat = -hy[:, None, :] * dx + hx[:, None, :] * dy
        hd = np.abs(_wrap_signed(h[None, :, :] - h[:, None, :]))
        half_len = states.dims[:, 0] / 2.0
        gap = lon - (half_len[:, None] + half_len[None, :])[:, :, None]
        lat_lim = np.maximum(
            params.ttc_min_lateral,
            (states.dims[:, 1][:, None] + states.dims[:, 1][None, :]) / 2.0,
        )[:, :, None]
        leaders = (states.valid & speed_ok)[None, :, :]
        cand = (
            leaders
            & ~np.eye(a, dtype=bool)[:, :, None]
            & (hd <= params.ttc_heading_threshold)
            & (lon > 0.0)
            & (np.abs(lat) <= lat_lim)
            & (gap > 0.0)
        )
        gap_sel = np.where(cand, gap, np.inf)
        lead = np.argmin(gap_sel, axis=1)  # (A, T) leader row per follower/step
        best_gap = np.take_along_axis(gap_sel, lead[:, None, :], axis=1)[:, 0, :]
        has_lead = np.isfinite(best_gap)
        cols = np.arange(t)[None, :]
        closing = speed_vals - speed_vals[lead, cols]
        ttc = np.where(
            closing > params.ttc_closing_eps,
            np.minimum(cap, best_gap / np.maximum(closing, params.ttc_closing_eps)),
            cap,
        )
        vals = np.where(speed_ok & has_lead, ttc, cap)
    return _masked(vals, ok), ok


_POLYLINE_CHUNK = 200_000  # max points*segments handled in one batch call


def _road_edge_arrays(states: SceneStates, map_features: Sequence[MapFeature]):
    a, t = states.valid.shape
    vals = np.zeros((a, t))
    ok = np.zeros((a, t), dtype=bool)
    starts, ends = _road_edge_segments(map_features)
    if starts is None or a == 0:
        return vals, ok

    c, s = np.cos(states.headings), np.sin(states.headings)
    dx = np.stack([c, s], axis=-1) * (states.dims[:, 0] / 2.0)[:, None, None]
    dy = np.stack([-s, c], axis=-1) * (states.dims[:, 1] / 2.0)[:, None, None]
    ctr = states.centers[:, :, :2]
    corners = np.stack(
        [ctr + dx + dy, ctr + dx - dy, ctr - dx - dy, ctr - dx + dy], axis=2
    )  # (A, T, 4, 2)
    pts = corners.reshape(-1, 2)

    chunk = max(1, _POLYLINE_CHUNK // max(1, len(starts)))
    signed = np.empty(len(pts))
    for lo in range(0, len(pts), chunk):
        d, side = polyline_distance_batch(pts[lo : lo + chunk], starts, ends)
        # Drivable area sits on the right of road-edge polylines, so the left
        # side is off-road and signs positive.
        signed[lo : lo + chunk] = d * side
    vals = signed.reshape(a, t, 4).max(axis=2)
    ok = states.valid.copy()
    return _masked(vals, ok), ok


@lru_cache(maxsize=64)
def _road_edge_segments_cached(map_features: tuple):
    starts: list[np.ndarray] = []
    ends: list[np.ndarray] = []
    for feat in map_features:
        if feat.kind is not MapFeatureKind.ROAD_EDGE:
            continue
        pts = np.asarray(feat.polyline)
        starts.append(pts[:-1])
        ends.append(pts[1:])
    if not starts:
        return None, None
    return np.concatenate(starts), np.concatenate(ends)


def _road_edge_segments(map_features: Sequence[MapFeature]):
    return _road_edge_segments_cached(tuple(map_features))


# ---------------------------------------------------------------------------
# Per-track operations.


def _single_track(states: Sequence[ObjectState]):
    centers = np.array([(s.x, s.y, s.z) for s in states])[None, :, :]
    headings = np.array([s.heading for s in states])[None, :]
    valid = np.array([s.valid for s in states], dtype=bool)[None, :]
    return centers, headings, valid


def linear_speed(states: Sequence[ObjectState], dt: float, object_id: int = 0) -> FeatureSeries:
    """3D speed from one-step position differences."""
    centers, _, valid = _single_track(states)
    vals, ok = _speed_arrays(centers, valid, dt)
    return FeatureSeries(object_id, MetricKind.LINEAR_SPEED, vals[0], ok[0])


def linear_accel_magnitude(
    states: Sequence[ObjectState], dt: float, object_id: int = 0
) -> FeatureSeries:
    """Signed one-step difference of consecutive speeds."""
    centers, _, valid = _single_track(states)
    sv, sok = _speed_arrays(centers, valid, dt)
    vals, ok = _derivative_arrays(sv, sok, dt)
    return FeatureSeries(object_id, MetricKind.LINEAR_ACCEL, vals[0], ok[0])


def angular_speed(states: Sequence[ObjectState], dt: float, object_id: int = 0) -> FeatureSeries:
    """Signed heading rate using the shortest rotation between steps."""
    _, headings, valid = _single_track(states)
    vals, ok = _angular_speed_arrays(headings, valid, dt)
    return FeatureSeries(object_id, MetricKind.ANGULAR_SPEED, vals[0], ok[0])


def angular_accel_magnitude(
    states: Sequence[ObjectState], dt: float, object_id: int = 0
) -> FeatureSeries:
    """One-step difference of signed angular speed."""
    _, headings, valid = _single_track(states)
    wv, wok = _angular_speed_arrays(headings, valid, dt)
    vals, ok = _derivative_arrays(wv, wok, dt)
    return FeatureSeries(object_id, MetricKind.ANGULAR_ACCEL, vals[0], ok[0])


# ---------------------------------------------------------------------------
# Scene-level operations.


def _wrap_series(states: SceneStates, metric: MetricKind, vals, ok) -> dict[int, FeatureSeries]:
    return {
        oid: FeatureSeries(oid, metric, vals[row], ok[row])
        for row, oid in enumerate(states.ids)
    }


def distance_to_nearest_object(states: SceneStates) -> dict[int, FeatureSeries]:
    """Signed box distance to the nearest other object, per object per step.

    Pairs are gated on vertical overlap of the two boxes; when no other
    object overlaps vertically the plain 2D minimum is used instead.  A scene
    with a single object yields an all-invalid series.
    """
    vals, ok = _nearest_object_arrays(states)
    return _wrap_series(states, MetricKind.DIST_TO_NEAREST_OBJECT, vals, ok)


def collision_indication(states: SceneStates) -> dict[int, FeatureSeries]:
    """Constant boolean series: the object overlapped someone at some valid step."""
    vals, ok = _nearest_object_arrays(states)
    ev, eok = _event_series(vals, ok, lambda v: v < 0.0)
    return _wrap_series(states, MetricKind.COLLISION, ev, eok)


def time_to_collision(
    states: SceneStates, params: FeatureParams = DEFAULT_FEATURE_PARAMS
) -> dict[int, FeatureSeries]:
    """Constant-speed time to reach the followed object, capped at ttc_max.

    An object follows a leader when the leader is longitudinally ahead with a
    positive bumper gap, laterally within the shared corridor, and heading
    within the alignment threshold.  Steps with no followed object, a
    non-closing follower, or an already-overlapping pair take the cap.
    """
    sv, sok = _speed_arrays(states.centers, states.valid, states.dt)
    vals, ok = _ttc_arrays(states, sv, sok, params)
    return _wrap_series(states, MetricKind.TIME_TO_COLLISION, vals, ok)


def distance_to_road_edge(
    states: SceneStates, map_features: Sequence[MapFeature]
) -> dict[int, FeatureSeries]:
    """Signed distance from the most off-road box corner to the nearest road edge.

    Positive values are off the drivable area (left of the edge direction),
    negative values are inside.  A map without road edges yields all-invalid
    series.
    """
    vals, ok = _road_edge_arrays(states, map_features)
    return _wrap_series(states, MetricKind.DIST_TO_ROAD_EDGE, vals, ok)


def offroad_indication(
    states: SceneStates, map_features: Sequence[MapFeature]
) -> dict[int, FeatureSeries]:
    """Constant boolean series: some corner left the road at some valid step."""
    vals, ok = _road_edge_arrays(states, map_features)
    ev, eok = _event_series(vals, ok, lambda v: v > 0.0)
    return _wrap_series(states, MetricKind.OFFROAD, ev, eok)


def extract_features(
    states: SceneStates,
    map_features: Sequence[MapFeature],
    params: FeatureParams = DEFAULT_FEATURE_PARAMS,
) -> dict[MetricKind, dict[int, FeatureSeries]]:
    """All nine feature series for every object in the scene.

    Shared intermediates (speeds, pairwise distances) are computed once.
    """
    dt = states.dt
    out: dict[MetricKind, dict[int, FeatureSeries]] = {}

    sv, sok = _speed_arrays(states.centers, states.valid, dt)
    out[MetricKind.LINEAR_SPEED] = _wrap_series(states, MetricKind.LINEAR_SPEED, sv, sok)
    av, aok = _derivative_arrays(sv, sok, dt)
    out[MetricKind.LINEAR_ACCEL] = _wrap_series(states, MetricKind.LINEAR_ACCEL, av, aok)

    wv, wok = _angular_speed_arrays(states.headings, states.valid, dt)
    out[MetricKind.ANGULAR_SPEED] = _wrap_series(states, MetricKind.ANGULAR_SPEED, wv, wok)
    aav, aaok = _derivative_arrays(wv, wok, dt)
    out[MetricKind.ANGULAR_ACCEL] = _wrap_series(states, MetricKind.ANGULAR_ACCEL, aav, aaok)

    nv, nok = _nearest_object_arrays(states)
    out[MetricKind.DIST_TO_NEAREST_OBJECT] = _wrap_series(
        states, MetricKind.DIST_TO_NEAREST_OBJECT, nv, nok
    )
    cv, cok = _event_series(nv, nok, lambda v: v < 0.0)
    out[MetricKind.COLLISION] = _wrap_series(states, MetricKind.COLLISION, cv, cok)

    tv, tok = _ttc_arrays(states, sv, sok, params)
    out[MetricKind.TIME_TO_COLLISION] = _wrap_series(states, MetricKind.TIME_TO_COLLISION, tv, tok)

    rv, rok = _road_edge_arrays(states, map_features)
    out[MetricKind.DIST_TO_ROAD_EDGE] = _wrap_series(states, MetricKind.DIST_TO_ROAD_EDGE, rv, rok)
    ov, ook = _event_series(rv, rok, lambda v: v > 0.0)
    out[MetricKind.OFFROAD] = _wrap_series(states, MetricKind.OFFROAD, ov, ook)

    return out
