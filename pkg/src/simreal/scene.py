"""Scene and rollout value types shared by every other module.

A scenario is a history/future pair sampled at a fixed rate: 11 history
observations (1.1 s, the last of which is the handover step t=0) followed by
80 future steps (8 s) at 10 Hz.  Time indexing is relative: history steps
-10..0 map to array indices 0..10 and future steps 1..80 map to 11..90, so a
track's state buffer is one contiguous sequence of length 91.

All types are immutable values after construction and safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import InconsistentRollouts, MalformedScenario

TWO_PI = 2.0 * math.pi

DEFAULT_TIMESTEP = 0.1
DEFAULT_HISTORY_LENGTH = 11
DEFAULT_FUTURE_LENGTH = 80
DEFAULT_ROLLOUT_COUNT = 32
MAX_SIMULATED_OBJECTS = 128


def normalize_heading(theta: float) -> float:
    """Wrap an angle into [0, 2*pi). Non-finite input is returned unchanged."""
    if not math.isfinite(theta):
        return theta
    wrapped = theta % TWO_PI
    if wrapped >= TWO_PI:  # theta % TWO_PI can round up to TWO_PI itself
        wrapped -= TWO_PI
    return wrapped


class ObjectType(Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"
    CYCLIST = "cyclist"


class MapFeatureKind(Enum):
    ROAD_EDGE = "road_edge"
    LANE_CENTER = "lane_center"
    OTHER = "other"


@dataclass(frozen=True)
class ObjectState:
    """One 3D centroid pose with heading.

    When ``valid`` is False the pose fields carry no meaning and consumers
    must ignore them.  Headings are normalized to [0, 2*pi) on construction.
    """

    x: float
    y: float
    z: float
    heading: float
    valid: bool = True

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_heading(float(self.heading)))


@dataclass(frozen=True)
class Track:
    """An object's box extents plus its state at every relative time index.

    Extents are fixed for the whole window; they are taken once and never
    vary over time.
    """

    object_id: int
    object_type: ObjectType
    length: float
    width: float
    height: float
    states: tuple[ObjectState, ...]

    def __post_init__(self):
        if min(self.length, self.width, self.height) <= 0.0:
            raise MalformedScenario(
                f"track {self.object_id}: box extents must be strictly positive"
            )
        object.__setattr__(self, "states", tuple(self.states))


@dataclass(frozen=True)
class MapFeature:
    """A polyline map element (road edge, lane center, or other)."""

    feature_id: int
    kind: MapFeatureKind
    polyline: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.polyline)
        if len(pts) < 2:
            raise MalformedScenario(f"map feature {self.feature_id}: polyline needs >= 2 points")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise MalformedScenario(
                    f"map feature {self.feature_id}: consecutive polyline points must differ"
                )
        object.__setattr__(self, "polyline", pts)


@dataclass(frozen=True)
class Scenario:
    """A logged scene: tracks with validity over history+future, plus the map."""

    scenario_id: str
    tracks: tuple[Track, ...]
    map_features: tuple[MapFeature, ...]
    av_track_id: int
    timestep: float = DEFAULT_TIMESTEP
    history_length: int = DEFAULT_HISTORY_LENGTH
    future_length: int = DEFAULT_FUTURE_LENGTH
    _by_id: Mapping[int, Track] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        object.__setattr__(self, "map_features", tuple(self.map_features))
        if self.timestep <= 0.0:
            raise MalformedScenario("timestep must be positive")
        if self.history_length < 1 or self.future_length < 1:
            raise MalformedScenario("history and future lengths must be >= 1")
        expected = self.history_length + self.future_length
        by_id: dict[int, Track] = {}
        for track in self.tracks:
            if track.object_id in by_id:
                raise MalformedScenario(f"duplicate object_id {track.object_id}")
            if len(track.states) != expected:
                raise MalformedScenario(
                    f"track {track.object_id}: expected {expected} states, got {len(track.states)}"
                )
            by_id[track.object_id] = track
        if self.av_track_id not in by_id:
            raise MalformedScenario(f"AV track {self.av_track_id} not present")
        t0 = self.history_length - 1
        n_simulated = sum(1 for t in self.tracks if t.states[t0].valid)
        if n_simulated > MAX_SIMULATED_OBJECTS:
            raise MalformedScenario(
                f"{n_simulated} objects valid at t=0 exceeds the {MAX_SIMULATED_OBJECTS} limit"
            )
        object.__setattr__(self, "_by_id", by_id)

    @property
    def t0_index(self) -> int:
        """Array index of the handover step t=0 (last history observation)."""
        return self.history_length - 1

    def track(self, object_id: int) -> Track:
        return self._by_id[object_id]

    def has_track(self, object_id: int) -> bool:
        return object_id in self._by_id

    def future_states(self, object_id: int) -> tuple[ObjectState, ...]:
        """The logged future window (steps 1..future_length) of one track."""
        return self._by_id[object_id].states[self.history_length :]

    def history_states(self, object_id: int) -> tuple[ObjectState, ...]:
        return self._by_id[object_id].states[: self.history_length]


@dataclass(frozen=True)
class JointScene:
    """One simulated future: a pose for every simulated object at every step.

    Simulators always produce poses, so every state is valid by construction.
    """

    scenario_id: str
    trajectories: dict[int, tuple[ObjectState, ...]]

    def __post_init__(self):
        traj = {int(k): tuple(v) for k, v in self.trajectories.items()}
        lengths = {len(v) for v in traj.values()}
        if len(lengths) > 1:
            raise MalformedScenario("all trajectories in a joint scene must share one length")
        for oid, states in traj.items():
            for s in states:
                if not s.valid:
                    raise MalformedScenario(f"object {oid}: simulated states must all be valid")
        object.__setattr__(self, "trajectories", traj)

    @property
    def object_ids(self) -> frozenset[int]:
        return frozenset(self.trajectories)

    @property
    def num_steps(self) -> int:
        if not self.trajectories:
            return 0
        return len(next(iter(self.trajectories.values())))


@dataclass(frozen=True)
class ScenarioRollouts:
    """A bundle of sampled joint futures for one scenario (32 for scoring)."""

    scenario_id: str
    rollouts: tuple[JointScene, ...]

    def __post_init__(self):
        object.__setattr__(self, "rollouts", tuple(self.rollouts))
        if not self.rollouts:
            raise MalformedScenario("a rollout bundle needs at least one rollout")
        ids = self.rollouts[0].object_ids
        for k, joint in enumerate(self.rollouts):
            if joint.scenario_id != self.scenario_id:
                raise InconsistentRollouts(
                    f"rollout {k} belongs to scenario {joint.scenario_id!r}"
                )
            if joint.object_ids != ids:
                raise InconsistentRollouts(f"rollout {k} covers a different object set")

    @property
    def object_ids(self) -> frozenset[int]:
        return self.rollouts[0].object_ids


def simulated_object_ids(scenario: Scenario) -> frozenset[int]:
    """Objects that must be simulated: everything valid at the handover step.

    The AV is always part of this set; an AV that is invalid at t=0 makes the
    scenario unusable.
    """
    t0 = scenario.t0_index
    ids = frozenset(t.object_id for t in scenario.tracks if t.states[t0].valid)
    if scenario.av_track_id not in ids:
        raise MalformedScenario(f"AV track {scenario.av_track_id} is invalid at t=0")
    return ids


def strip_late_spawns(scenario: Scenario) -> Scenario:
    """Drop objects that only appear after the history window.

    Applied to logged data before evaluation so that objects spawning during
    the future cannot bias the logged feature distribution.
    """
    h = scenario.history_length
    keep = tuple(
        t for t in scenario.tracks if any(s.valid for s in t.states[:h])
    )
    if len(keep) == len(scenario.tracks):
        return scenario
    return Scenario(
        scenario_id=scenario.scenario_id,
        tracks=keep,
        map_features=scenario.map_features,
        av_track_id=scenario.av_track_id,
        timestep=scenario.timestep,
        history_length=scenario.history_length,
        future_length=scenario.future_length,
    )


def states_tuple(
    xs: Iterable[float],
    ys: Iterable[float],
    zs: Iterable[float],
    headings: Iterable[float],
    valid: Iterable[bool] | None = None,
) -> tuple[ObjectState, ...]:
    """Zip coordinate sequences into a state tuple (all-valid by default)."""
    xs, ys, zs, headings = list(xs), list(ys), list(zs), list(headings)
    flags = [True] * len(xs) if valid is None else list(valid)
    return tuple(
        ObjectState(x, y, z, h, v)
        for x, y, z, h, v in zip(xs, ys, zs, headings, flags)
    )
