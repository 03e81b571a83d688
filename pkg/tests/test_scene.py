from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from simreal.errors import InconsistentRollouts, MalformedScenario
from simreal.scene import (
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

TWO_PI = 2.0 * math.pi


def make_states(valid_mask=None, n=91):
    mask = [True] * n if valid_mask is None else valid_mask
    return tuple(ObjectState(float(i), 0.0, 0.0, 0.0, mask[i]) for i in range(n))


def make_track(object_id, valid_mask=None):
    return Track(object_id, ObjectType.VEHICLE, 4.6, 2.0, 1.8, make_states(valid_mask))


def make_scenario(tracks, av_track_id=0):
    return Scenario(
        scenario_id="test",
        tracks=tuple(tracks),
        map_features=(
            MapFeature(0, MapFeatureKind.ROAD_EDGE, ((-100.0, 7.0), (100.0, 7.0))),
        ),
        av_track_id=av_track_id,
    )


class TestHeadingNormalization:
    def test_wraps_positive(self):
        assert ObjectState(0, 0, 0, 7.0).heading == pytest.approx(7.0 - TWO_PI)

    def test_wraps_negative(self):
        assert ObjectState(0, 0, 0, -0.5).heading == pytest.approx(TWO_PI - 0.5)

    @given(st.floats(-1e6, 1e6, allow_nan=False))
    def test_round_trip_in_range_and_congruent(self, theta):
        h = normalize_heading(theta)
        assert 0.0 <= h < TWO_PI
        assert math.isclose(
            math.cos(h), math.cos(theta), abs_tol=1e-6
        ) and math.isclose(math.sin(h), math.sin(theta), abs_tol=1e-6)

    def test_boundary_rounding_stays_in_range(self):
        assert 0.0 <= normalize_heading(-1e-18) < TWO_PI


class TestScenarioInvariants:
    def test_rejects_bad_extent(self):
        with pytest.raises(MalformedScenario):
            make_track_bad = Track(0, ObjectType.VEHICLE, 0.0, 2.0, 1.8, make_states())

    def test_rejects_wrong_state_count(self):
        with pytest.raises(MalformedScenario):
            make_scenario([Track(0, ObjectType.VEHICLE, 4.6, 2.0, 1.8, make_states(n=90))])

    def test_rejects_missing_av(self):
        with pytest.raises(MalformedScenario):
            make_scenario([make_track(1)], av_track_id=0)

    def test_rejects_duplicate_ids(self):
        with pytest.raises(MalformedScenario):
            make_scenario([make_track(0), make_track(0)])

    def test_rejects_degenerate_polyline(self):
        with pytest.raises(MalformedScenario):
            MapFeature(0, MapFeatureKind.ROAD_EDGE, ((0.0, 0.0), (0.0, 0.0)))

    def test_accepts_128_simulated_objects(self):
        scenario = make_scenario([make_track(i) for i in range(128)])
        assert len(simulated_object_ids(scenario)) == 128

    def test_rejects_129_simulated_objects(self):
        with pytest.raises(MalformedScenario):
            make_scenario([make_track(i) for i in range(129)])

    def test_129th_track_ok_if_invalid_at_t0(self):
        never_valid_at_t0 = [True] * 5 + [False] * 86
        tracks = [make_track(i) for i in range(128)]
        tracks.append(make_track(128, never_valid_at_t0))
        scenario = make_scenario(tracks)
        assert len(simulated_object_ids(scenario)) == 128


class TestSimulatedObjectIds:
    def test_excludes_invalid_at_t0(self):
        mask = [True] * 91
        mask[10] = False  # t=0 is array index history_length - 1 == 10
        tracks = [make_track(0), make_track(1, mask), make_track(2)]
        assert simulated_object_ids(make_scenario(tracks)) == {0, 2}

    def test_av_invalid_at_t0_raises(self):
        mask = [True] * 91
        mask[10] = False
        with pytest.raises(MalformedScenario):
            simulated_object_ids(make_scenario([make_track(0, mask), make_track(1)]))

    def test_synthetic_two_agent_scenario(self):
        from simreal.synth import SynthSpec, Template, generate

        synth = generate(SynthSpec(Template.FOLLOWING_PAIR, seed=1))
        assert simulated_object_ids(synth.scenario) == {0, 1}


class TestStripLateSpawns:
    def test_removes_future_only_object(self):
        late = [False] * 16 + [True] * 75  # first valid at future step 5 (index 15)
        tracks = [make_track(0), make_track(1, late)]
        stripped = strip_late_spawns(make_scenario(tracks))
        assert {t.object_id for t in stripped.tracks} == {0}

    def test_identity_when_all_valid_in_history(self):
        scenario = make_scenario([make_track(0), make_track(1)])
        assert strip_late_spawns(scenario) is scenario

    def test_one_late_spawn_among_four(self):
        late = [False] * 11 + [True] * 80
        tracks = [make_track(0), make_track(1), make_track(2), make_track(3, late)]
        stripped = strip_late_spawns(make_scenario(tracks))
        assert len(stripped.tracks) == 3

    def test_idempotent(self):
        late = [False] * 20 + [True] * 71
        scenario = make_scenario([make_track(0), make_track(1, late)])
        once = strip_late_spawns(scenario)
        assert strip_late_spawns(once) is once

    def test_preserves_simulated_ids(self):
        late = [False] * 20 + [True] * 71
        partial_history = [False] * 9 + [True] * 82
        scenario = make_scenario(
            [make_track(0), make_track(1, late), make_track(2, partial_history)]
        )
        assert simulated_object_ids(strip_late_spawns(scenario)) == simulated_object_ids(scenario)


class TestJointSceneAndRollouts:
    def _joint(self, ids=(0, 1), n=80, scenario_id="test"):
        return JointScene(
            scenario_id=scenario_id,
            trajectories={
                oid: tuple(ObjectState(float(i), 0.0, 0.0, 0.0) for i in range(n))
                for oid in ids
            },
        )

    def test_rejects_invalid_states(self):
        with pytest.raises(MalformedScenario):
            JointScene("test", {0: (ObjectState(0, 0, 0, 0, valid=False),)})

    def test_rejects_mismatched_object_sets(self):
        with pytest.raises(InconsistentRollouts):
            ScenarioRollouts("test", (self._joint((0, 1)), self._joint((0, 2))))

    def test_rejects_wrong_scenario_id(self):
        with pytest.raises(InconsistentRollouts):
            ScenarioRollouts("test", (self._joint(scenario_id="other"),))

    def test_object_ids(self):
        rollouts = ScenarioRollouts("test", (self._joint(), self._joint()))
        assert rollouts.object_ids == {0, 1}
