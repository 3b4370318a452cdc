"""Closed-form guarantees and empirical performance metrics.

Position indices in :class:`GapStructure` are 0-based: ``order[0]`` is the
policy with the largest finite-horizon value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VALUE_TIE_TOL = 1e-12


@dataclass(frozen=True)
class TruncationConstants:
    alpha_H: float
    r_H: float


def truncation_constants(model, horizon: int) -> TruncationConstants:
    """Worst-case tail of the discounted cost (``alpha_H``) and reward (``r_H``) past ``horizon``."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    alpha = model.beta**horizon * model.c_max / (1.0 - model.beta)
    r = model.gamma**horizon * model.r_max / (1.0 - model.gamma)
    return TruncationConstants(alpha, r)


def horizon_for(discount: float, sup: float, target: float) -> int:
    """Smallest H with ``discount**H * sup / (1 - discount) <= target``."""
    tail = sup / (1.0 - discount)
    if tail <= target:
        return 0
    h = math.ceil(math.log(target / tail) / math.log(discount))
    while discount ** (h - 1) * tail <= target:
        h -= 1
    while discount**h * tail > target:
        h += 1
    return h


def theorem1_bound(num_policies: int, epsilon: float, alpha_H: float, iterations: int, clamp: bool = True) -> float:
    """Lower bound on P(the estimated feasible set is sandwiched between the -eps and +eps sets)."""
    if not epsilon > alpha_H:
        raise ValueError(f"epsilon ({epsilon}) must exceed alpha_H ({alpha_H})")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    raw = 1.0 - 2.0 * num_policies * math.exp(-2.0 * (epsilon - alpha_H) ** 2 * iterations)
    return min(1.0, max(0.0, raw)) if clamp else raw


def theorem1_min_iterations(num_policies: int, epsilon: float, alpha_H: float, level: float) -> int:
    """Smallest N at which :func:`theorem1_bound` reaches ``level``."""
    gap = epsilon - alpha_H
    if gap <= 0:
        raise ValueError("epsilon must exceed alpha_H")
    n = max(1, math.ceil(math.log(2.0 * num_policies / (1.0 - level)) / (2.0 * gap * gap)))
    while n > 1 and theorem1_bound(num_policies, epsilon, alpha_H, n - 1, clamp=False) >= level:
        n -= 1
    while theorem1_bound(num_policies, epsilon, alpha_H, n, clamp=False) < level:
        n += 1
    return n


def sandwich_rate(epsilon: float, alpha_H: float) -> float:
    """Per-iteration contraction factor ``exp(-2 (eps - alpha_H)^2)`` of the feasible-set error."""
    return math.exp(-2.0 * (epsilon - alpha_H) ** 2)


@dataclass(frozen=True)
class Theorem2Bound:
    value: float
    sandwich_factor: float
    selection_factor: float
    leader: int
    vacuous: tuple[int, ...]


def theorem2_bound(values, feasible, num_policies: int, epsilon: float, constants: TruncationConstants,
                   iterations: int) -> Theorem2Bound:
    """Lower bound on P(the FTAL choice at N lies between the -eps and +eps optima).

    ``values`` are the exact infinite-horizon values of all policies and
    ``feasible`` the estimated feasible set at iteration N. Policies whose gap
    to the leader is at most ``2 r_H`` make the selection factor vacuous; they
    are listed in ``vacuous`` and the bound is reported as 0.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    for a, b in zip(order[:-1], order[1:]):
        if abs(values[b] - values[a]) <= VALUE_TIE_TOL:
            raise ValueError(f"policies {int(a)} and {int(b)} have equal exact values")
    feasible = sorted(int(i) for i in feasible)
    if not feasible:
        raise ValueError("the estimated feasible set is empty")
    sandwich = theorem1_bound(num_policies, epsilon, constants.alpha_H, iterations, clamp=False)
    leader = max(feasible, key=lambda i: values[i])
    top = values[leader]
    total = 0.0
    vacuous = []
    for i in feasible:
        if i == leader:
            continue
        margin = (top - values[i]) / 2.0 - constants.r_H
        if margin <= 0:
            vacuous.append(i)
            continue
        total += 2.0 * math.exp(-2.0 * margin * margin * iterations)
    selection = 1.0 - total
    bound = 0.0 if vacuous else max(0.0, sandwich) * max(0.0, selection)
    return Theorem2Bound(min(1.0, bound), sandwich, selection, leader, tuple(vacuous))


@dataclass(frozen=True)
class GapStructure:
    """Policies ranked by finite-horizon value and the derived index maps.

    ``i_y[j]`` is the first rank whose value is within ``y`` of rank ``j``
    (looking upward), ``j_y[i]`` the last rank within ``y`` of rank ``i``
    (looking downward).
    """

    values: np.ndarray
    order: np.ndarray
    gaps: np.ndarray
    y: float
    i_y: np.ndarray
    j_y: np.ndarray
    min_positive_gap: float | None

    def ranked_gap(self, i: int, j: int) -> float:
        return float(self.gaps[self.order[i], self.order[j]])


def gap_structure(values, y: float = 0.0) -> GapStructure:
    values = np.asarray(values, dtype=float)
    p = len(values)
    order = np.lexsort((np.arange(p), -values))
    gaps = values[:, None] - values[None, :]
    ranked = values[order]
    i_y = np.empty(p, dtype=np.int64)
    j_y = np.empty(p, dtype=np.int64)
    for j in range(p):
        i_y[j] = next(i for i in range(j + 1) if ranked[i] - ranked[j] <= y)
    for i in range(p):
        j_y[i] = max(j for j in range(i, p) if ranked[i] - ranked[j] <= y)
    positive = gaps[gaps > 0]
    min_gap = float(positive.min()) if positive.size else None
    return GapStructure(values, order, gaps, y, i_y, j_y, min_gap)


@dataclass(frozen=True)
class RegretBound:
    value: float
    delta: float
    undefined_terms: int


def regret_bound(gs: GapStructure, iterations: int, algorithm: str = "FTAL", delta: float | None = None,
                 constant: float = 1.0) -> RegretBound:
    """Right-hand side of the expected-regret bounds with the hidden constant set to ``constant``.

    FTAL terms scale like ``1/N``, AUER terms like ``ln N / N``. A term whose
    neighbouring rank does not exist uses ``delta`` as its gap and is counted
    in ``undefined_terms``.
    """
    n = iterations
    if delta is None:
        delta = 1.0 / n
    c = constant * (math.log(n) if algorithm.upper() == "AUER" else 1.0)
    p = len(gs.values)
    base = gs if gs.y == 0 else gap_structure(gs.values, 0.0)
    i0, j0 = base.i_y, base.j_y
    total = 2.0 * delta
    undefined = 0

    def term(a, b):
        nonlocal undefined
        if 0 <= a < p and 0 <= b < p:
            gap = gs.ranked_gap(a, b)
        else:
            undefined += 1
            gap = delta
        denom = n * max(delta, gap)
        return c / denom if denom > 0 else math.inf

    for j in range(j0[0] + 1, p):
        total += term(i0[j] - 1, i0[j])
    for i in range(0, j0[p - 1]):
        total += term(j0[i], j0[i] + 1)
    return RegretBound(total, delta, undefined)


@dataclass(frozen=True)
class RegretMetric:
    avg_best: float
    avg_chosen: float
    regret: float
    counted: int


def regret_metric(trace, finite_values) -> RegretMetric | None:
    """Average best awake value minus average chosen value over feasible iterations.

    Iterations with an empty feasible-set estimate are skipped. Returns ``None``
    when every iteration was infeasible.
    """
    v = np.asarray(finite_values, dtype=float)
    feas = trace.feasible
    keep = feas.any(axis=1)
    if not keep.any():
        return None
    best = np.where(feas[keep], v[None, :], -np.inf).max(axis=1)
    chosen = v[trace.chosen[keep]]
    avg_best = float(best.mean())
    avg_chosen = float(chosen.mean())
    return RegretMetric(avg_best, avg_chosen, float((best - chosen).mean()), int(keep.sum()))


def regret_curve(trace, finite_values, checkpoints) -> np.ndarray:
    """Regret of each prefix ``trace.prefix(N)`` for N in ``checkpoints`` (nan when undefined)."""
    v = np.asarray(finite_values, dtype=float)
    keep = trace.feasible.any(axis=1)
    best = np.where(trace.feasible, v[None, :], -np.inf).max(axis=1)
    inst = np.where(keep, best - v[trace.chosen], 0.0)
    csum = np.cumsum(inst)
    ccount = np.cumsum(keep)
    out = np.full(len(checkpoints), np.nan)
    for k, n in enumerate(checkpoints):
        if ccount[n - 1] > 0:
            out[k] = csum[n - 1] / ccount[n - 1]
    return out


RATE_MODELS = {
    "1/N": lambda n: 1.0 / n,
    "lnN/N": lambda n: np.log(n) / n,
}


UNFILTERED = object()


@dataclass(frozen=True)
class RateFit:
    model: str
    constant: float | None
    residual: float | None
    violated: bool
    skipped: bool = False
    points: int = 0


def rate_check(iterations, regrets, model: str, min_gap=UNFILTERED, stderr=None,
               slack: float = 2.0, min_points: int = 5) -> RateFit:
    """Least-squares fit ``regret ~ C g(N)`` on the admissible range ``N >= 1 / min_gap``.

    The check is violated when any point exceeds ``slack * C * g(N)`` by more
    than its standard error (zero when ``stderr`` is omitted). ``min_gap=None``
    means all policy values coincide: the range is undefined and the fit is
    skipped.
    """
    if model not in RATE_MODELS:
        raise ValueError(f"unknown rate model {model!r}")
    if min_gap is None:
        return skipped_fit(model)
    n = np.asarray(iterations, dtype=float)
    r = np.asarray(regrets, dtype=float)
    se = np.zeros_like(r) if stderr is None else np.asarray(stderr, dtype=float)
    if min_gap is not UNFILTERED:
        if min_gap <= 0:
            raise ValueError("min_gap must be positive")
        keep = n >= 1.0 / min_gap
        n, r, se = n[keep], r[keep], se[keep]
    if len(n) < min_points:
        raise ValueError(f"need at least {min_points} admissible points, got {len(n)}")
    g = RATE_MODELS[model](n)
    c = float(np.dot(g, r) / np.dot(g, g))
    resid = float(np.sqrt(np.mean((r - c * g) ** 2)))
    violated = bool(np.any(r - se > slack * c * g))
    return RateFit(model, c, resid, violated, False, len(n))


def skipped_fit(model: str) -> RateFit:
    return RateFit(model, None, None, False, skipped=True)


def binomial_stderr(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def hoeffding_radius(samples: int, confidence: float) -> float:
    """Half-width of the two-sided Hoeffding band for means of [0,1] samples."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * samples))
