"""Exact policy evaluation for small instances.

Because outcomes are piecewise constant in the disturbance, each policy
induces a finite Markov chain whose transition probabilities are segment
lengths. Infinite-horizon values come from a direct linear solve, finite
horizons from backward recursion. None of this is needed by the selection
algorithms; it is the ground truth the simulations are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import CmdpModel, Policy

RESIDUAL_TOL = 1e-12


class InfeasibleProblem(Exception):
    """No policy of the set satisfies the cost budget."""


@dataclass(frozen=True)
class PolicyChain:
    transition: np.ndarray
    expected_reward: np.ndarray
    expected_cost: np.ndarray


def build_chain(model: CmdpModel, policy: Policy) -> PolicyChain:
    n = model.num_states
    P = np.zeros((n, n))
    r = np.zeros(n)
    c = np.zeros(n)
    for x in range(n):
        for s in model.dynamics[x][policy.action_of(x)]:
            length = s.hi - s.lo
            P[x, s.next_state] += length
            r[x] += length * s.reward
            c[x] += length * s.cost
    return PolicyChain(P, r, c)


def _solve(P: np.ndarray, r: np.ndarray, discount: float) -> np.ndarray:
    A = np.eye(len(r)) - discount * P
    v = np.linalg.solve(A, r)
    # one step of iterative refinement keeps the residual at round-off level
    resid = r - A @ v
    if np.max(np.abs(resid), initial=0.0) > RESIDUAL_TOL:
        v = v + np.linalg.solve(A, resid)
    return v


def exact_value(chain: PolicyChain, gamma: float) -> np.ndarray:
    """Solve ``v = r + gamma P v`` for the expected discounted reward of every state."""
    return _solve(chain.transition, chain.expected_reward, gamma)


def exact_cost(chain: PolicyChain, beta: float) -> np.ndarray:
    return _solve(chain.transition, chain.expected_cost, beta)


def _recurse(P, r, discount, horizon):
    v = np.zeros(len(r))
    for _ in range(horizon):
        v = r + discount * (P @ v)
    return v


def exact_finite_value(chain: PolicyChain, gamma: float, horizon: int) -> np.ndarray:
    """Expected ``horizon``-step discounted reward, i.e. the mean of a rollout sample."""
    return _recurse(chain.transition, chain.expected_reward, gamma, horizon)


def exact_finite_cost(chain: PolicyChain, beta: float, horizon: int) -> np.ndarray:
    return _recurse(chain.transition, chain.expected_cost, beta, horizon)


@dataclass
class OracleReport:
    """Exact values and costs at the initial state, one entry per policy."""

    value: np.ndarray
    cost: np.ndarray
    finite_value: dict[int, np.ndarray] = field(default_factory=dict)
    finite_cost: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def num_policies(self) -> int:
        return len(self.value)

    def feasible_set(self, budget: float, epsilon: float = 0.0) -> frozenset[int]:
        return exact_feasible_set(self.cost, budget, epsilon)

    def optimum(self, budget: float):
        return feasible_optimal(self.value, self.cost, budget)


def evaluate(model: CmdpModel, policies, horizons=()) -> OracleReport:
    x0 = model.initial_state
    value, cost = [], []
    fv = {h: [] for h in horizons}
    fc = {h: [] for h in horizons}
    for pol in policies:
        chain = build_chain(model, pol)
        value.append(exact_value(chain, model.gamma)[x0])
        cost.append(exact_cost(chain, model.beta)[x0])
        for h in horizons:
            fv[h].append(exact_finite_value(chain, model.gamma, h)[x0])
            fc[h].append(exact_finite_cost(chain, model.beta, h)[x0])
    return OracleReport(
        value=np.array(value),
        cost=np.array(cost),
        finite_value={h: np.array(v) for h, v in fv.items()},
        finite_cost={h: np.array(v) for h, v in fc.items()},
    )


def exact_feasible_set(costs, budget: float, epsilon: float = 0.0) -> frozenset[int]:
    """Indices whose exact cost is at most ``budget + epsilon``; ``epsilon`` may be negative."""
    costs = np.asarray(costs)
    return frozenset(int(i) for i in np.flatnonzero(costs <= budget + epsilon))


def feasible_optimal(values, costs, budget: float) -> tuple[frozenset[int], float]:
    """All maximisers of the value over the 0-feasible set, with their value.

    Raises :class:`InfeasibleProblem` when no policy is feasible.
    """
    feasible = sorted(exact_feasible_set(costs, budget))
    if not feasible:
        raise InfeasibleProblem(f"no policy has exact cost <= {budget}")
    values = np.asarray(values)
    best = float(values[feasible].max())
    return frozenset(i for i in feasible if values[i] == best), best
