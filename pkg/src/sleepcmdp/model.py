"""Finite constrained MDP with a uniform disturbance and Monte Carlo rollouts.

The next-state function, reward and cost are piecewise constant in the
disturbance ``w``: every (state, action) pair owns an ordered list of
half-open segments ``[lo, hi)`` that partition ``[0, 1)``. Segment lengths are
therefore transition probabilities, which is what lets :mod:`sleepcmdp.oracle`
evaluate policies exactly.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from functools import cached_property

import numpy as np

PARTITION_TOL = 1e-12


class ModelError(ValueError):
    """Raised when a model or policy violates its invariants."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    next_state: int
    reward: float
    cost: float


@dataclass(frozen=True)
class CmdpModel:
    """A finite CMDP.

    ``dynamics[x][a]`` is the segment list of action ``a`` in state ``x``;
    the admissible actions of ``x`` are ``range(len(dynamics[x]))``.
    """

    dynamics: tuple[tuple[tuple[Segment, ...], ...], ...]
    gamma: float
    beta: float
    r_max: float
    c_max: float
    initial_state: int = 0

    def __post_init__(self):
        dyn = tuple(tuple(tuple(segs) for segs in acts) for acts in self.dynamics)
        object.__setattr__(self, "dynamics", dyn)

    @property
    def num_states(self) -> int:
        return len(self.dynamics)

    def actions(self, state: int) -> range:
        return range(len(self.dynamics[state]))

    @cached_property
    def tables(self):
        """Padded arrays used by the vectorised rollout kernel.

        Returns ``(offset, hi, nxt, rew, cst)`` where ``offset[x]`` is the row of
        ``(x, 0)`` and row ``offset[x] + a`` holds the segment upper bounds
        (padded with +inf) and per-segment outcomes of ``(x, a)``.
        """
        counts = [len(acts) for acts in self.dynamics]
        offset = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
        rows = [segs for acts in self.dynamics for segs in acts]
        width = max(len(segs) for segs in rows)
        hi = np.full((len(rows), width), np.inf)
        nxt = np.zeros((len(rows), width), dtype=np.int64)
        rew = np.zeros((len(rows), width))
        cst = np.zeros((len(rows), width))
        for i, segs in enumerate(rows):
            for k, s in enumerate(segs):
                hi[i, k] = s.hi
                nxt[i, k] = s.next_state
                rew[i, k] = s.reward
                cst[i, k] = s.cost
            # the last segment absorbs w up to 1 regardless of rounding in hi
            hi[i, len(segs) - 1] = np.inf
        return offset, hi, nxt, rew, cst


@dataclass(frozen=True)
class Policy:
    """Deterministic stationary policy; ``actions[x]`` is the action taken in ``x``."""

    actions: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))

    def action_of(self, state: int) -> int:
        return self.actions[state]

    def __len__(self):
        return len(self.actions)


@dataclass(frozen=True)
class RolloutSample:
    value_sum: float
    cost_sum: float
    horizon: int


def validate_model(model: CmdpModel) -> list[str]:
    """Return the list of violated invariants (empty when the model is valid)."""
    problems = []
    if not 0.0 < model.gamma < 1.0:
        problems.append("gamma must lie in (0,1)")
    if not 0.0 < model.beta < 1.0:
        problems.append("beta must lie in (0,1)")
    if model.r_max < 0:
        problems.append("r_max must be nonnegative")
    if model.c_max < 0:
        problems.append("c_max must be nonnegative")
    n = model.num_states
    if n == 0:
        problems.append("model has no states")
        return problems
    if not 0 <= model.initial_state < n:
        problems.append("initial_state is not a valid state")
    for x, acts in enumerate(model.dynamics):
        if len(acts) == 0:
            problems.append(f"A({x}) is empty")
        for a, segs in enumerate(acts):
            where = f"(x={x}, a={a})"
            if len(segs) == 0:
                problems.append(f"segments do not partition [0,1) at {where}")
                continue
            edge = 0.0
            ok = True
            for s in segs:
                if not s.lo < s.hi:
                    problems.append(f"empty segment [{s.lo}, {s.hi}) at {where}")
                    ok = False
                if abs(s.lo - edge) > PARTITION_TOL:
                    ok = False
                edge = s.hi
                if not 0 <= s.next_state < n:
                    problems.append(f"next_state {s.next_state} out of range at {where}")
                if not 0.0 <= s.reward <= model.r_max + PARTITION_TOL:
                    problems.append(f"reward {s.reward} outside [0, r_max] at {where}")
                if not 0.0 <= s.cost <= model.c_max + PARTITION_TOL:
                    problems.append(f"cost {s.cost} outside [0, c_max] at {where}")
            if not ok or abs(edge - 1.0) > PARTITION_TOL:
                problems.append(f"segments do not partition [0,1) at {where}")
    return problems


def validate_policies(model: CmdpModel, policies) -> list[str]:
    problems = []
    if len(policies) == 0:
        problems.append("policy set is empty")
    seen = {}
    for i, pol in enumerate(policies):
        if len(pol) != model.num_states:
            problems.append(f"policy {i} has {len(pol)} entries, expected {model.num_states}")
            continue
        for x, a in enumerate(pol.actions):
            if a not in model.actions(x):
                problems.append(f"policy {i}: action {a} not in A({x})")
        if pol in seen:
            problems.append(f"policy {i} duplicates policy {seen[pol]}")
        seen.setdefault(pol, i)
    return problems


def check_model(model: CmdpModel) -> CmdpModel:
    problems = validate_model(model)
    if problems:
        raise ModelError(problems)
    return model


def check_policies(model: CmdpModel, policies) -> tuple[Policy, ...]:
    policies = tuple(p if isinstance(p, Policy) else Policy(p) for p in policies)
    problems = validate_policies(model, policies)
    if problems:
        raise ModelError(problems)
    return policies


def normalize_model(model: CmdpModel) -> CmdpModel:
    """Rescale rewards and costs so every discounted sample lies in [0, 1].

    Rewards are multiplied by ``(1 - gamma) / r_max`` and costs by
    ``(1 - beta) / c_max``; a zero supremum leaves that stream untouched.
    """
    rs = (1.0 - model.gamma) / model.r_max if model.r_max > 0 else 1.0
    cs = (1.0 - model.beta) / model.c_max if model.c_max > 0 else 1.0
    dyn = tuple(
        tuple(
            tuple(Segment(s.lo, s.hi, s.next_state, s.reward * rs, s.cost * cs) for s in segs)
            for segs in acts
        )
        for acts in model.dynamics
    )
    return CmdpModel(
        dynamics=dyn,
        gamma=model.gamma,
        beta=model.beta,
        r_max=model.r_max * rs,
        c_max=model.c_max * cs,
        initial_state=model.initial_state,
    )


def step(model: CmdpModel, state: int, action: int, w: float) -> tuple[int, float, float]:
    """Apply the segment of ``(state, action)`` containing ``w``."""
    if action not in model.actions(state):
        raise ModelError(f"action not in A(x): action {action}, state {state}")
    offset, hi, nxt, rew, cst = model.tables
    row = offset[state] + action
    k = bisect.bisect_right(hi[row].tolist(), w)
    return int(nxt[row, k]), float(rew[row, k]), float(cst[row, k])


def rollout(model: CmdpModel, policy: Policy, horizon: int, stream: np.random.Generator) -> RolloutSample:
    """Simulate ``horizon`` steps from the initial state, drawing exactly ``horizon`` uniforms."""
    w = stream.random(horizon)
    value, cost = rollout_batch(model, policy, w[None, :])
    return RolloutSample(float(value[0]), float(cost[0]), horizon)


def rollout_batch(model: CmdpModel, policy: Policy, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised rollouts; row ``i`` of ``w`` (shape ``(m, H)``) drives rollout ``i``.

    Returns the discounted reward sums and discounted cost sums, both shape ``(m,)``.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    m, horizon = w.shape
    offset, hi, nxt, rew, cst = model.tables
    rowmap = offset + np.asarray(policy.actions, dtype=np.int64)
    state = np.full(m, model.initial_state, dtype=np.int64)
    value = np.zeros(m)
    cost = np.zeros(m)
    gt, bt = 1.0, 1.0
    for t in range(horizon):
        row = rowmap[state]
        k = (hi[row] <= w[:, t, None]).sum(axis=1)
        value += gt * rew[row, k]
        cost += bt * cst[row, k]
        state = nxt[row, k]
        gt *= model.gamma
        bt *= model.beta
    return value, cost
