"""Closed-loop rollout engine.

The engine enforces the autoregression contract structurally: at every step
policies receive a context holding only the map and the poses produced
strictly before that step, then the environment policy and the AV policy are
queried for the same step against that same context.  Neither can observe
the other's current-step output, matching the required factorization of the
world model into an AV policy and an environment policy.

Each rollout also records a trace: per step, the ids queried and a running
hash of everything the context exposed.  The audit recomputes that hash
chain from the finished rollout, which catches any future leakage through
the harness as well as forged or reordered traces.
"""

from __future__ import annotations

import hashlib
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import PolicyContractViolation
from .scene import (
    JointScene,
    MapFeature,
    ObjectState,
    Scenario,
    ScenarioRollouts,
    simulated_object_ids,
)


@dataclass(frozen=True)
class PolicyContext:
    """Everything a policy may condition on at one simulation step.

    ``poses`` is (A, L, 4) as [x, y, z, heading] and ``valid`` is (A, L),
    where L covers the history window plus all previously simulated steps;
    states at or after the current step are structurally absent.  Arrays are
    read-only views; policies must not retain them beyond the call.
    """

    scenario_id: str
    map_features: tuple[MapFeature, ...]
    signals: tuple = ()  # reserved for traffic-signal observations; unused
    ids: tuple[int, ...] = ()
    av_id: int = 0
    step: int = 1
    t0_index: int = 10
    dt: float = 0.1
    seed: int = 0
    poses: np.ndarray | None = None
    valid: np.ndarray | None = None

    def row_of(self, object_id: int) -> int:
        return self.ids.index(object_id)

    def rng(self, object_id: int) -> np.random.Generator:
        """Counter-based stream keyed by (seed, step, object).

        The keying makes draws independent of call order, so plans computed
        ahead of time and step-by-step execution see identical noise.
        """
        key = np.random.SeedSequence((self.seed, self.step, int(object_id)))
        return np.random.Generator(np.random.Philox(key))

    def last_valid_pose(self, object_id: int) -> np.ndarray:
        row = self.row_of(object_id)
        idx = np.nonzero(self.valid[row])[0]
        if len(idx) == 0:
            raise PolicyContractViolation(f"object {object_id} has no valid state in context")
        return self.poses[row, idx[-1]]

    def history_motion(self, object_id: int) -> tuple[float, float, float]:
        """(speed, heading, z) from the logged history window only.

        Speed comes from the two most recent valid history observations;
        objects with a single valid observation get zero speed.
        """
        row = self.row_of(object_id)
        hist_valid = self.valid[row, : self.t0_index + 1]
        idx = np.nonzero(hist_valid)[0]
        if len(idx) == 0:
            raise PolicyContractViolation(f"object {object_id} has no valid history")
        last = self.poses[row, idx[-1]]
        heading = float(last[3])
        z = float(last[2])
        if len(idx) < 2:
            return 0.0, heading, z
        prev = self.poses[row, idx[-2]]
        gap_steps = int(idx[-1] - idx[-2])
        speed = float(np.hypot(last[0] - prev[0], last[1] - prev[1]) / (gap_steps * self.dt))
        return speed, heading, z


class Policy(ABC):
    """A per-step pose producer for a fixed set of controlled objects."""

    @abstractmethod
    def step(
        self, context: PolicyContext, controlled_ids: frozenset[int]
    ) -> Mapping[int, ObjectState]:
        """Return a valid state for every controlled id, for context.step."""

    def plan(
        self, context: PolicyContext, controlled_ids: frozenset[int], horizon: int
    ) -> list[dict[int, ObjectState]]:
        """Produce ``horizon`` consecutive steps without re-observing others.

        The default rolls :meth:`step` forward against virtually extended
        contexts in which only the policy's own outputs advance; other
        objects stay frozen at their last known (now stale) state.  Plan
        holders use this to emulate slower replanning.
        """
        outputs: list[dict[int, ObjectState]] = []
        poses = np.array(context.poses)
        valid = np.array(context.valid)
        ctx = context
        for j in range(horizon):
            out = dict(self.step(ctx, controlled_ids))
            outputs.append(out)
            if j == horizon - 1:
                break
            new_col_pose = np.zeros((poses.shape[0], 1, 4))
            new_col_valid = np.zeros((poses.shape[0], 1), dtype=bool)
            for oid, state in out.items():
                row = context.ids.index(oid)
                new_col_pose[row, 0] = (state.x, state.y, state.z, state.heading)
                new_col_valid[row, 0] = True
            poses = np.concatenate([poses, new_col_pose], axis=1)
            valid = np.concatenate([valid, new_col_valid], axis=1)
            ro_poses = poses.view()
            ro_poses.setflags(write=False)
            ro_valid = valid.view()
            ro_valid.setflags(write=False)
            ctx = replace(ctx, step=ctx.step + 1, poses=ro_poses, valid=ro_valid)
        return outputs


@dataclass(frozen=True)
class TraceStep:
    step: int
    ids_queried: tuple[int, ...]
    context_hash: str


@dataclass(frozen=True)
class RolloutTrace:
    scenario_id: str
    seed: int
    steps: tuple[TraceStep, ...]
    final_hash: str


@dataclass(frozen=True)
class AuditReport:
    ok: bool
    hybrid: bool
    replan_interval: int
    issues: tuple[str, ...]


def _hash_step(hasher, step: int, ids: Sequence[int], states: Mapping[int, ObjectState]):
    hasher.update(struct.pack("<i", step))
    for oid in ids:
        s = states[oid]
        hasher.update(struct.pack("<q4d", oid, s.x, s.y, s.z, s.heading))


def _validate_policy_output(
    out: Mapping[int, ObjectState], controlled: frozenset[int], who: str, step: int
) -> None:
    got = frozenset(out)
    if got != controlled:
        missing = sorted(controlled - got)
        extra = sorted(got - controlled)
        raise PolicyContractViolation(
            f"{who} policy at step {step}: missing ids {missing}, extra ids {extra}"
        )
    for oid, state in out.items():
        if not state.valid:
            raise PolicyContractViolation(
                f"{who} policy at step {step}: object {oid} returned an invalid state"
            )
        if not all(np.isfinite([state.x, state.y, state.z, state.heading])):
            raise PolicyContractViolation(
                f"{who} policy at step {step}: object {oid} returned a non-finite pose"
            )


def closed_loop_rollout(
    scenario: Scenario,
    av_policy: Policy,
    env_policy: Policy,
    seed: int = 0,
) -> tuple[JointScene, RolloutTrace]:
    """Roll the scene forward one step at a time for the whole future window.

    Controlled sets partition the simulated objects into {AV} and the rest;
    both policies are stepped against the identical context each step and
    their outputs merged afterwards.
    """
    if av_policy is env_policy:
        raise PolicyContractViolation("AV and environment policies must be distinct objects")
    sim_ids = tuple(sorted(simulated_object_ids(scenario)))
    av_id = scenario.av_track_id
    env_ids = frozenset(sim_ids) - {av_id}
    av_ids = frozenset({av_id})

    h, t_total = scenario.history_length, scenario.future_length
    n = len(sim_ids)
    poses = np.zeros((n, h + t_total, 4))
    valid = np.zeros((n, h + t_total), dtype=bool)
    for row, oid in enumerate(sim_ids):
        for i, s in enumerate(scenario.track(oid).states[:h]):
            if s.valid:
                poses[row, i] = (s.x, s.y, s.z, s.heading)
                valid[row, i] = True

    hasher = hashlib.sha256(scenario.scenario_id.encode("utf-8"))
    steps: list[TraceStep] = []
    for t in range(1, t_total + 1):
        context_hash = hasher.copy().hexdigest()
        upto = h + t - 1
        ctx_poses = poses[:, :upto]
        ctx_valid = valid[:, :upto]
        ctx_poses.setflags(write=False)
        ctx_valid.setflags(write=False)
        ctx = PolicyContext(
            scenario_id=scenario.scenario_id,
            map_features=scenario.map_features,
            ids=sim_ids,
            av_id=av_id,
            step=t,
            t0_index=h - 1,
            dt=scenario.timestep,
            seed=seed,
            poses=ctx_poses,
            valid=ctx_valid,
        )
        env_out = dict(env_policy.step(ctx, env_ids)) if env_ids else {}
        av_out = dict(av_policy.step(ctx, av_ids))
        _validate_policy_output(env_out, env_ids, "environment", t)
        _validate_policy_output(av_out, av_ids, "AV", t)
        merged = {**env_out, **av_out}
        for row, oid in enumerate(sim_ids):
            s = merged[oid]
            poses[row, upto] = (s.x, s.y, s.z, s.heading)
            valid[row, upto] = True
        _hash_step(hasher, t, sim_ids, merged)
        steps.append(TraceStep(step=t, ids_queried=sim_ids, context_hash=context_hash))

    trajectories = {
        oid: tuple(
            ObjectState(*poses[row, h + j], valid=True) for j in range(t_total)
        )
        for row, oid in enumerate(sim_ids)
    }
    joint = JointScene(scenario_id=scenario.scenario_id, trajectories=trajectories)
    trace = RolloutTrace(
        scenario_id=scenario.scenario_id,
        seed=seed,
        steps=tuple(steps),
        final_hash=hasher.hexdigest(),
    )
    return joint, trace


def generate_submission(
    scenario: Scenario,
    av_policy: Policy,
    env_policy: Policy,
    k: int = 32,
    base_seed: int = 0,
    with_traces: bool = False,
):
    """Run ``k`` independent rollouts seeded base_seed .. base_seed+k-1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    joints: list[JointScene] = []
    traces: list[RolloutTrace] = []
    for i in range(k):
        joint, trace = closed_loop_rollout(scenario, av_policy, env_policy, seed=base_seed + i)
        joints.append(joint)
        traces.append(trace)
    rollouts = ScenarioRollouts(scenario_id=scenario.scenario_id, rollouts=tuple(joints))
    if with_traces:
        return rollouts, tuple(traces)
    return rollouts


def audit_trace(
    trace: RolloutTrace,
    joint: JointScene | None = None,
    replan_interval: int = 1,
    expected_steps: int | None = None,
) -> AuditReport:
    """Best-effort mechanical check of a rollout trace.

    Verifies strictly increasing, gap-free steps; constant queried-id sets
    (matching the rollout when one is provided); and, given the rollout, the
    per-step context-hash chain.  A declared replan interval above one step
    is flagged as hybrid open/closed loop rather than failed.
    """
    issues: list[str] = []
    steps = trace.steps
    n = expected_steps if expected_steps is not None else (joint.num_steps if joint else len(steps))
    if [s.step for s in steps] != list(range(1, n + 1)):
        issues.append(f"expected steps 1..{n} strictly increasing, got {len(steps)} records")
    if steps:
        id_sets = {s.ids_queried for s in steps}
        if len(id_sets) != 1:
            issues.append("queried id set changed between steps")
        elif joint is not None and set(steps[0].ids_queried) != set(joint.object_ids):
            issues.append("queried ids do not match the rollout's object set")

    if joint is not None and not issues:
        ids = steps[0].ids_queried
        hasher = hashlib.sha256(trace.scenario_id.encode("utf-8"))
        for s in steps:
            if hasher.copy().hexdigest() != s.context_hash:
                issues.append(f"context hash mismatch at step {s.step}")
                break
            states = {oid: joint.trajectories[oid][s.step - 1] for oid in ids}
            _hash_step(hasher, s.step, ids, states)
        else:
            if hasher.hexdigest() != trace.final_hash:
                issues.append("final hash mismatch")

    hybrid = replan_interval > 1
    return AuditReport(
        ok=not issues,
        hybrid=hybrid,
        replan_interval=replan_interval,
        issues=tuple(issues),
    )
