"""Reproducible baseline policies and the plugin registry.

All baselines read only the policy context.  The logged-oracle is the one
deliberate exception: it is constructed with the scenario so it can replay
the logged future, which is exactly its job as a scoring ceiling.
"""

from __future__ import annotations

import math
from typing import Any, Callable, Mapping

from .errors import PolicyContractViolation
from .harness import Policy, PolicyContext
from .scene import ObjectState, Scenario, simulated_object_ids


class ConstantVelocityPolicy(Policy):
    """Extrapolate each object along its last recorded heading and speed.

    Speed is the displacement rate between the two most recent valid history
    observations; an object with a single valid observation holds still.
    Memoryless, so plan-holding wrappers reproduce it exactly.
    """

    def step(self, context: PolicyContext, controlled_ids):
        out = {}
        dt = context.dt
        for oid in sorted(controlled_ids):
            speed, heading, z = context.history_motion(oid)
            last = context.last_valid_pose(oid)
            out[oid] = ObjectState(
                x=last[0] + speed * dt * math.cos(heading),
                y=last[1] + speed * dt * math.sin(heading),
                z=z,
                heading=heading,
            )
        return out


class RandomAgentPolicy(Policy):
    """Draw x, y, heading independently from N(mu, sigma^2) in the AV frame.

    The frame is anchored at the AV's pose at the handover step.  Heights are
    held at each object's last history value.
    """

    def __init__(self, mu: float = 1.0, sigma: float = 0.1):
        self.mu = mu
        self.sigma = sigma

    def step(self, context: PolicyContext, controlled_ids):
        av = context.poses[context.row_of(context.av_id), context.t0_index]
        c, s = math.cos(av[3]), math.sin(av[3])
        out = {}
        for oid in sorted(controlled_ids):
            dx, dy, dh = context.rng(oid).normal(self.mu, self.sigma, size=3)
            _, _, z = context.history_motion(oid)
            out[oid] = ObjectState(
                x=av[0] + c * dx - s * dy,
                y=av[1] + s * dx + c * dy,
                z=z,
                heading=av[3] + dh,
            )
        return out


class LoggedOraclePolicy(Policy):
    """Replay the logged future; gaps hold the last valid pose."""

    def __init__(self, scenario: Scenario):
        h = scenario.history_length
        self._future: dict[int, list[ObjectState]] = {}
        for oid in simulated_object_ids(scenario):
            track = scenario.track(oid)
            last = track.states[h - 1]
            seq = []
            for state in track.states[h:]:
                if state.valid:
                    last = state
                seq.append(ObjectState(last.x, last.y, last.z, last.heading, valid=True))
            self._future[oid] = seq

    def step(self, context: PolicyContext, controlled_ids):
        out = {}
        for oid in sorted(controlled_ids):
            if oid not in self._future:
                raise PolicyContractViolation(f"oracle has no logged future for object {oid}")
            out[oid] = self._future[oid][context.step - 1]
        return out


class NoisyPlanPolicy(Policy):
    """Constant-velocity plans with fresh heading/speed noise at each replan.

    Every plan perturbs the history-derived heading and speed once, then
    extrapolates for the whole horizon.  Held for longer horizons the motion
    stays smooth; replanned every step it turns jerky, which is the behavior
    the replan-interval ablation needs to expose.
    """

    def __init__(self, heading_sigma: float = 0.15, speed_sigma: float = 1.0):
        self.heading_sigma = heading_sigma
        self.speed_sigma = speed_sigma

    def plan(self, context: PolicyContext, controlled_ids, horizon: int):
        outputs: list[dict[int, ObjectState]] = [dict() for _ in range(horizon)]
        dt = context.dt
        for oid in sorted(controlled_ids):
            speed, heading, z = context.history_motion(oid)
            g = context.rng(oid)
            heading = heading + float(g.normal(0.0, self.heading_sigma))
            speed = max(0.0, speed + float(g.normal(0.0, self.speed_sigma)))
            last = context.last_valid_pose(oid)
            x, y = float(last[0]), float(last[1])
            vx, vy = speed * dt * math.cos(heading), speed * dt * math.sin(heading)
            for j in range(horizon):
                x += vx
                y += vy
                outputs[j][oid] = ObjectState(x=x, y=y, z=z, heading=heading)
        return outputs

    def step(self, context: PolicyContext, controlled_ids):
        return self.plan(context, controlled_ids, 1)[0]


class ReplanWrapper(Policy):
    """Hold a policy's multi-step plan and re-invoke it every ``interval`` steps.

    Interval 1 is fully closed-loop; larger intervals emulate the hybrid
    open/closed-loop pattern of slower replanning.  Instances carry plan
    state, so use one wrapper per rollout stream (a restart is detected when
    the step counter moves backwards).
    """

    def __init__(self, inner: Policy, interval: int):
        if interval < 1:
            raise ValueError("replan interval must be >= 1")
        self.inner = inner
        self.interval = interval
        self._plan: list[Mapping[int, ObjectState]] = []
        self._plan_start = -1

    def step(self, context: PolicyContext, controlled_ids):
        t = context.step
        stale = (
            self._plan_start < 0
            or t < self._plan_start
            or t >= self._plan_start + len(self._plan)
        )
        if stale:
            self._plan = self.inner.plan(context, controlled_ids, self.interval)
            self._plan_start = t
        return self._plan[t - self._plan_start]


PolicyFactory = Callable[[Scenario, Mapping[str, Any]], Policy]

POLICY_REGISTRY: dict[str, PolicyFactory] = {
    "constant-velocity": lambda scenario, opts: ConstantVelocityPolicy(),
    "random": lambda scenario, opts: RandomAgentPolicy(
        mu=float(opts.get("mu", 1.0)), sigma=float(opts.get("sigma", 0.1))
    ),
    "logged-oracle": lambda scenario, opts: LoggedOraclePolicy(scenario),
    "noisy-plan": lambda scenario, opts: NoisyPlanPolicy(
        heading_sigma=float(opts.get("heading_sigma", 0.15)),
        speed_sigma=float(opts.get("speed_sigma", 1.0)),
    ),
}


def create_policy(
    name: str,
    scenario: Scenario,
    options: Mapping[str, Any] | None = None,
    replan_interval: int = 1,
) -> Policy:
    """Instantiate a registered policy, optionally wrapped for slow replanning."""
    if name not in POLICY_REGISTRY:
        known = ", ".join(sorted(POLICY_REGISTRY))
        raise KeyError(f"unknown policy {name!r}; registered: {known}")
    policy = POLICY_REGISTRY[name](scenario, options or {})
    if replan_interval > 1:
        policy = ReplanWrapper(policy, replan_interval)
    return policy
