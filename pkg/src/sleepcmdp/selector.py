"""Sleeping-experts (FTAL) and sleeping-bandits (AUER) policy selection.

Each iteration first re-estimates the feasible set from running means of
cost samples of every policy, then picks a policy among the currently
feasible ("awake") ones:

* FTAL follows the awake leader and refreshes the value mean of every awake
  policy.
* AUER picks the awake policy with the largest upper estimate
  ``mean + sqrt(8 ln n / tau)`` and refreshes only that one.

Unspecified choices are resolved deterministically: untried awake policies
and argmax ties go to the lowest index, and an empty feasible set falls back
to policy 0 with the iteration flagged infeasible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .model import CmdpModel, check_model, check_policies, rollout_batch
from .streams import COST, VALUE, uniform_block

FTAL = "FTAL"
AUER = "AUER"
ALGORITHMS = (FTAL, AUER)
FALLBACK_POLICY = 0

TRACE_COLUMNS = ("n", "feasible_mask", "chosen", "chosen_value_mean", "infeasible")


def update_running_mean(prev_mean: float, count_after: int, sample: float) -> float:
    """Fold one sample into a mean that already averaged ``count_after - 1`` samples."""
    if count_after < 1:
        raise ValueError("count_after must be >= 1")
    if count_after == 1:
        return float(sample)
    return ((count_after - 1) * prev_mean + sample) / count_after


class RolloutSampler:
    """Lazily computes rollout sums for (policy, iteration), a chunk of iterations at a time.

    Cost samples (feasibility step) and value samples (selection step) come
    from independent streams.
    """

    def __init__(self, model: CmdpModel, policies, horizon: int, seed: int, replication: int = 0, chunk: int = 256):
        self.model = model
        self.policies = tuple(policies)
        self.horizon = int(horizon)
        self.seed = int(seed)
        self.replication = int(replication)
        self.chunk = int(chunk)
        self._cache = {}

    def _block(self, purpose: int, policy: int, c: int) -> np.ndarray:
        key = (purpose, policy, c)
        if key not in self._cache:
            w = uniform_block(self.seed, self.replication, purpose, policy, c * self.chunk + 1, self.chunk, self.horizon)
            value, cost = rollout_batch(self.model, self.policies[policy], w)
            self._cache[key] = cost if purpose == COST else value
        return self._cache[key]

    def sample(self, purpose: int, policy: int, n: int) -> float:
        c, r = divmod(n - 1, self.chunk)
        return float(self._block(purpose, policy, c)[r])

    def cost_samples(self, n: int) -> np.ndarray:
        c, r = divmod(n - 1, self.chunk)
        return np.array([self._block(COST, p, c)[r] for p in range(len(self.policies))])

    def value_sample(self, policy: int, n: int) -> float:
        return self.sample(VALUE, policy, n)

    def drop_before(self, n: int):
        """Forget chunks that end before iteration ``n``."""
        c = (n - 1) // self.chunk
        for key in [k for k in self._cache if k[2] < c]:
            del self._cache[key]


@dataclass
class SelectorState:
    num_policies: int
    n: int = 1
    cost_mean: np.ndarray = None
    value_mean: np.ndarray = None
    tau: np.ndarray = None
    feasible_now: np.ndarray = None
    chosen: list = field(default_factory=list)
    infeasible_flags: list = field(default_factory=list)

    def __post_init__(self):
        p = self.num_policies
        if self.cost_mean is None:
            self.cost_mean = np.zeros(p)
        if self.value_mean is None:
            # nan marks "never simulated" (tau == 0)
            self.value_mean = np.full(p, np.nan)
        if self.tau is None:
            self.tau = np.zeros(p, dtype=np.int64)
        if self.feasible_now is None:
            self.feasible_now = np.zeros(p, dtype=bool)


def estimate_feasible_set(state: SelectorState, budget: float) -> np.ndarray:
    """Boolean mask of policies whose running cost mean is at most ``budget``."""
    state.feasible_now = state.cost_mean <= budget
    return state.feasible_now


def _untried(state: SelectorState):
    idx = np.flatnonzero(state.feasible_now & (state.tau == 0))
    return int(idx[0]) if idx.size else None


def _argmax_awake(state: SelectorState, score: np.ndarray) -> int:
    masked = np.where(state.feasible_now, score, -np.inf)
    # np.argmax returns the first maximiser, i.e. the lowest index
    return int(np.argmax(masked))


def ftal_select(state: SelectorState) -> int:
    if not state.feasible_now.any():
        return FALLBACK_POLICY
    i = _untried(state)
    if i is not None:
        return i
    return _argmax_awake(state, state.value_mean)


def auer_index(value_mean, tau, n: int) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.asarray(value_mean) + np.sqrt(8.0 * math.log(n) / tau)


def auer_select(state: SelectorState) -> int:
    if not state.feasible_now.any():
        return FALLBACK_POLICY
    i = _untried(state)
    if i is not None:
        return i
    return _argmax_awake(state, auer_index(state.value_mean, state.tau, state.n))


def _feasibility_step(state: SelectorState, sampler: RolloutSampler, budget: float):
    samples = sampler.cost_samples(state.n)
    if state.n == 1:
        state.cost_mean = samples.copy()
    else:
        state.cost_mean = ((state.n - 1) * state.cost_mean + samples) / state.n
    return estimate_feasible_set(state, budget)


def _simulate_value(state: SelectorState, sampler: RolloutSampler, policy: int):
    count = int(state.tau[policy]) + 1
    sample = sampler.value_sample(policy, state.n)
    state.value_mean[policy] = update_running_mean(state.value_mean[policy], count, sample)
    state.tau[policy] = count


def ftal_iteration(state: SelectorState, sampler: RolloutSampler, budget: float) -> SelectorState:
    awake = _feasibility_step(state, sampler, budget)
    chosen = ftal_select(state)
    for p in np.flatnonzero(awake):
        _simulate_value(state, sampler, int(p))
    state.chosen.append(chosen)
    state.infeasible_flags.append(not awake.any())
    state.n += 1
    return state


def auer_iteration(state: SelectorState, sampler: RolloutSampler, budget: float) -> SelectorState:
    awake = _feasibility_step(state, sampler, budget)
    chosen = auer_select(state)
    if awake.any():
        _simulate_value(state, sampler, chosen)
    state.chosen.append(chosen)
    state.infeasible_flags.append(not awake.any())
    state.n += 1
    return state


@dataclass
class RunTrace:
    """Per-iteration record of one run; row ``k`` describes iteration ``n = k + 1``."""

    algorithm: str
    budget: float
    horizon: int
    seed: int
    replication: int
    feasible: np.ndarray
    chosen: np.ndarray
    cost_mean: np.ndarray
    value_mean: np.ndarray
    tau: np.ndarray
    final: SelectorState = None

    @property
    def num_iterations(self) -> int:
        return len(self.chosen)

    @property
    def infeasible(self) -> np.ndarray:
        return ~self.feasible.any(axis=1)

    @property
    def chosen_value_mean(self) -> np.ndarray:
        return self.value_mean[np.arange(len(self.chosen)), self.chosen]

    def prefix(self, n: int) -> RunTrace:
        """The trace a run of ``n`` iterations with the same seed would have produced."""
        if not 1 <= n <= self.num_iterations:
            raise ValueError("prefix length out of range")
        return RunTrace(
            self.algorithm, self.budget, self.horizon, self.seed, self.replication,
            self.feasible[:n], self.chosen[:n], self.cost_mean[:n], self.value_mean[:n], self.tau[:n],
        )

    def rows(self):
        cvm = self.chosen_value_mean
        infeasible = self.infeasible
        for k in range(self.num_iterations):
            mask = "".join("1" if b else "0" for b in self.feasible[k])
            yield {
                "n": k + 1,
                "feasible_mask": mask,
                "chosen": int(self.chosen[k]),
                "chosen_value_mean": repr(float(cvm[k])),
                "infeasible": int(infeasible[k]),
            }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows())


def run(algorithm: str, model: CmdpModel, policies, budget: float, iterations: int, horizon: int,
        seed: int, replication: int = 0) -> RunTrace:
    """Run FTAL or AUER for ``iterations`` steps with simulation horizon ``horizon``."""
    algorithm = algorithm.upper()
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if iterations < 1 or horizon < 1:
        raise ValueError("iterations and horizon must be >= 1")
    check_model(model)
    policies = check_policies(model, policies)
    p = len(policies)
    sampler = RolloutSampler(model, policies, horizon, seed, replication)
    state = SelectorState(p)
    iterate = ftal_iteration if algorithm == FTAL else auer_iteration

    feasible = np.zeros((iterations, p), dtype=bool)
    cost_mean = np.zeros((iterations, p))
    value_mean = np.zeros((iterations, p))
    tau = np.zeros((iterations, p), dtype=np.int64)
    for k in range(iterations):
        iterate(state, sampler, budget)
        feasible[k] = state.feasible_now
        cost_mean[k] = state.cost_mean
        value_mean[k] = state.value_mean
        tau[k] = state.tau
        if k % sampler.chunk == 0:
            sampler.drop_before(state.n)
    return RunTrace(
        algorithm, budget, horizon, seed, replication,
        feasible, np.array(state.chosen, dtype=np.int64), cost_mean, value_mean, tau, state,
    )


def insolvability_check(trace: RunTrace, window: int) -> bool:
    """True when the estimated feasible set was empty throughout the last ``window`` iterations."""
    if not 1 <= window <= trace.num_iterations:
        raise ValueError("window must lie in [1, N]")
    return bool(trace.infeasible[-window:].all())
