"""Instance generation and replicated experiments.

All randomness in an experiment derives from the master seed: instance
generation uses its own generator, and run ``r`` of every algorithm uses the
stream keys ``(seed, r, purpose, policy)``. FTAL and AUER runs with the same
replication index therefore see identical cost samples.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from pathlib import Path

import numpy as np

from . import bounds, io, oracle
from .model import CmdpModel, Policy, Segment, check_model, check_policies, normalize_model
from .selector import ALGORITHMS, FTAL, run
from .streams import PURPOSES, stream_key

log = logging.getLogger(__name__)


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    num_states: int = 5
    num_actions: int = 2
    num_segments: int = 2
    gamma: float = 0.8
    beta: float = 0.8
    num_policies: int = 10
    seed: int = 0
    budget: float | None = None
    force_feasible: bool = False
    distinct_values: bool = False
    margin: float = 0.0
    # every exact cost must sit at least this far from the budget
    cost_margin: float = 0.0
    max_attempts: int = 200

    def __post_init__(self):
        for name in ("num_states", "num_actions", "num_segments", "num_policies", "max_attempts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.margin < 0 or self.cost_margin < 0:
            raise ValueError("margins must be nonnegative")
        if (self.force_feasible or self.cost_margin > 0) and self.budget is None:
            raise ValueError("force_feasible and cost_margin need a budget")


def random_model(spec: InstanceSpec, rng: np.random.Generator) -> CmdpModel:
    """Stick-breaking segment partitions with uniform rewards and costs, then normalised."""
    dyn = []
    for _ in range(spec.num_states):
        acts = []
        for _ in range(spec.num_actions):
            cuts = np.sort(rng.random(spec.num_segments - 1))
            edges = np.concatenate([[0.0], cuts, [1.0]])
            nxt = rng.integers(spec.num_states, size=spec.num_segments)
            rew = rng.random(spec.num_segments)
            cst = rng.random(spec.num_segments)
            segs = [
                Segment(float(edges[k]), float(edges[k + 1]), int(nxt[k]), float(rew[k]), float(cst[k]))
                for k in range(spec.num_segments)
                if edges[k] < edges[k + 1]
            ]
            acts.append(segs)
        dyn.append(acts)
    raw = CmdpModel(dyn, spec.gamma, spec.beta, 1.0, 1.0, 0)
    return check_model(normalize_model(raw))


def _random_policy(spec, rng) -> Policy:
    return Policy(tuple(int(a) for a in rng.integers(spec.num_actions, size=spec.num_states)))


def _sample_policies(spec, model, rng):
    """Distinct uniform policies; with ``distinct_values`` each newcomer must clear ``margin``."""
    chosen: list[Policy] = []
    values: list[float] = []
    tries = 0
    limit = 50 * spec.num_policies
    while len(chosen) < spec.num_policies:
        tries += 1
        if tries > limit:
            return None
        pol = _random_policy(spec, rng)
        if pol in chosen:
            continue
        if spec.distinct_values:
            v = oracle.evaluate(model, [pol]).value[0]
            if any(abs(v - u) < max(spec.margin, bounds.VALUE_TIE_TOL) for u in values):
                continue
            values.append(v)
        chosen.append(pol)
    return tuple(chosen)


def _accept(spec, model, policies) -> bool:
    rep = oracle.evaluate(model, policies)
    if spec.force_feasible and not rep.feasible_set(spec.budget):
        return False
    if spec.cost_margin > 0 and np.any(np.abs(rep.cost - spec.budget) < spec.cost_margin):
        return False
    if spec.distinct_values:
        v = np.sort(rep.value)
        if np.any(np.diff(v) < max(spec.margin, bounds.VALUE_TIE_TOL)):
            return False
    return True


def generate_instance(spec: InstanceSpec, directory=None) -> tuple[CmdpModel, tuple[Policy, ...]]:
    """Draw a random normalised instance honouring the rejection flags of ``spec``.

    When ``directory`` is given, ``model.json`` and ``policies.json`` are written there.
    """
    if spec.num_actions**spec.num_states < spec.num_policies:
        raise GenerationError("fewer admissible policies than requested; increase states or actions")
    rng = np.random.default_rng(spec.seed)
    for attempt in range(1, spec.max_attempts + 1):
        model = random_model(spec, rng)
        policies = _sample_policies(spec, model, rng)
        if policies is None or not _accept(spec, model, policies):
            continue
        log.debug("instance accepted after %d attempt(s)", attempt)
        if directory is not None:
            d = Path(directory)
            d.mkdir(parents=True, exist_ok=True)
            io.save_model(model, d / "model.json")
            io.save_policies(policies, d / "policies.json")
        return model, policies
    raise GenerationError(
        f"no instance satisfied the spec within {spec.max_attempts} attempts; "
        "relax margin/cost_margin or change the budget"
    )


@dataclass
class ExperimentConfig:
    """One experiment: instance source, schedules and output location.

    ``iterations`` is a list of N values; alternatively ``gap_multiples`` sets
    N = ceil(1 / min positive gap) * m for each multiple m. Both may be given;
    the schedule is their union and rate fits use the gap multiples when present.
    """

    model: str | None = None
    policies: str | None = None
    instance: dict | None = None
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    budget: float = 0.5
    iterations: list = field(default_factory=list)
    gap_multiples: list | None = None
    horizons: list = field(default_factory=lambda: [20])
    epsilons: list = field(default_factory=lambda: [0.1])
    delta: float | None = None
    replications: int = 10
    seed: int = 0
    output: str = "results"
    write_traces: bool = True

    def __post_init__(self):
        self.algorithms = [a.upper() for a in self.algorithms]
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithm(s): {bad}")
        if not self.horizons or not self.algorithms or not self.epsilons:
            raise ValueError("schedules must be nonempty")
        if not self.iterations and not self.gap_multiples:
            raise ValueError("schedules must be nonempty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.budget > 0:
            raise ValueError("budget K must be positive")
        if self.instance is None and (self.model is None or self.policies is None):
            raise ValueError("give model and policies files, or an instance spec")

    @classmethod
    def from_file(cls, path, **overrides) -> ExperimentConfig:
        data = json.loads(Path(path).read_text())
        base = Path(path).parent
        for key in ("model", "policies"):
            if data.get(key) is not None and not Path(data[key]).is_absolute():
                data[key] = str(base / data[key])
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def load_instance(self):
        if self.instance is not None:
            return generate_instance(InstanceSpec(**self.instance))
        model = io.load_model(self.model)
        return model, io.load_policies(self.policies, model)


def gap_schedule(config: ExperimentConfig, min_gap: float | None) -> list[int]:
    """N = ceil(1 / min gap) * m for each configured multiple m."""
    if not config.gap_multiples:
        return []
    if min_gap is None:
        raise ValueError("gap_multiples needs a positive minimum gap")
    base = math.ceil(1.0 / min_gap)
    return sorted({base * int(m) for m in config.gap_multiples})


def iteration_schedule(config: ExperimentConfig, min_gap: float | None) -> list[int]:
    return sorted({int(n) for n in config.iterations or []} | set(gap_schedule(config, min_gap)))


def stream_keys(config: ExperimentConfig, num_policies: int) -> list[tuple]:
    """Every stream key an experiment touches (for the disjointness audit)."""
    return [
        stream_key(config.seed, r, purpose, p)
        for r in range(config.replications)
        for purpose in PURPOSES.values()
        for p in range(num_policies)
    ]


SANDWICH_COLUMNS = ("epsilon", "N", "H", "alpha_H", "replications", "frequency", "stderr", "bound")
SELECTION_COLUMNS = ("algo", "epsilon", "N", "H", "replications", "optimum_frequency", "optimum_stderr",
                     "value_sandwich_frequency", "theorem2_bound")
REGRET_COLUMNS = ("algo", "N", "H", "replications", "avg_best", "avg_chosen", "regret", "stderr")
FITS_COLUMNS = ("algo", "H", "model", "C", "residual", "violated", "skipped", "points")
BOUNDS_COLUMNS = ("N", "H", "epsilon", "delta", "alpha_H", "r_H", "theorem1", "min_gap",
                  "regret_bound_FTAL", "regret_bound_AUER", "undefined_terms")
FAILURE_COLUMNS = ("algo", "H", "replication", "error")


@dataclass
class ExperimentResult:
    oracle: oracle.OracleReport
    schedule: list
    sandwich: list
    selection: list
    regret: list
    fits: list
    bounds: list
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    x = x[~np.isnan(x)]
    if x.size == 0:
        return math.nan, math.nan
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


def sandwich_holds(feasible_mask, report, budget, epsilon) -> bool:
    est = set(np.flatnonzero(feasible_mask).tolist())
    inner = report.feasible_set(budget, -epsilon)
    outer = report.feasible_set(budget, epsilon)
    return inner <= est <= outer


def _value_sandwich(chosen, report, budget, epsilon) -> bool:
    inner = report.feasible_set(budget, -epsilon)
    outer = report.feasible_set(budget, epsilon)
    if not outer:
        return False
    v = report.value[chosen]
    lo = max(report.value[i] for i in inner) if inner else -math.inf
    hi = max(report.value[i] for i in outer)
    return lo <= v <= hi


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    model, policies = config.load_instance()
    policies = check_policies(model, policies)
    p = len(policies)
    horizons = sorted({int(h) for h in config.horizons})
    report = oracle.evaluate(model, policies, horizons)
    out = Path(config.output)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        io.write_oracle_csv(report, out / "oracle.csv")

    distinct = np.all(np.diff(np.sort(report.value)) > bounds.VALUE_TIE_TOL)
    try:
        optimum, _ = report.optimum(config.budget)
    except oracle.InfeasibleProblem:
        optimum = frozenset()

    sandwich, selection, regret, fits, bound_rows, failures = [], [], [], [], [], []
    schedules = {}
    for h in horizons:
        const = bounds.truncation_constants(model, h)
        gs = bounds.gap_structure(report.finite_value[h])
        schedule = iteration_schedule(config, gs.min_positive_gap)
        fit_points = gap_schedule(config, gs.min_positive_gap) or schedule
        schedules[h] = schedule
        nmax = schedule[-1]
        traces = {a: [] for a in config.algorithms}
        for algo, r in product(config.algorithms, range(config.replications)):
            try:
                tr = run(algo, model, policies, config.budget, nmax, h, config.seed, r)
            except Exception as exc:  # noqa: BLE001 - recorded, experiment continues
                log.exception("run failed: %s H=%d r=%d", algo, h, r)
                failures.append({"algo": algo, "H": h, "replication": r, "error": repr(exc)})
                continue
            traces[algo].append(tr)
            if write and config.write_traces:
                for n in schedule:
                    tr.prefix(n).write_csv(out / f"trace_{algo}_H{h}_N{n}_r{r}.csv")

        # cost streams are shared across algorithms, so any algorithm's traces serve here
        ref = next((traces[a] for a in config.algorithms if traces[a]), [])
        for eps, n in product(config.epsilons, schedule):
            if ref:
                hits = [sandwich_holds(tr.feasible[n - 1], report, config.budget, eps) for tr in ref]
                freq = float(np.mean(hits))
            else:
                freq = math.nan
            bound = bounds.theorem1_bound(p, eps, const.alpha_H, n) if eps > const.alpha_H else math.nan
            sandwich.append({
                "epsilon": eps, "N": n, "H": h, "alpha_H": const.alpha_H, "replications": len(ref),
                "frequency": freq, "stderr": bounds.binomial_stderr(freq, len(ref)) if ref else math.nan,
                "bound": bound,
            })

        for algo in config.algorithms:
            trs = traces[algo]
            curves = np.array([bounds.regret_curve(tr, report.finite_value[h], schedule) for tr in trs]) \
                if trs else np.full((0, len(schedule)), np.nan)
            means, ses = [], []
            for k, n in enumerate(schedule):
                col = curves[:, k] if trs else []
                m, se = _mean_se(col)
                means.append(m)
                ses.append(se)
                metrics = [bounds.regret_metric(tr.prefix(n), report.finite_value[h]) for tr in trs]
                metrics = [x for x in metrics if x is not None]
                regret.append({
                    "algo": algo, "N": n, "H": h, "replications": len(metrics),
                    "avg_best": _mean_se([x.avg_best for x in metrics])[0],
                    "avg_chosen": _mean_se([x.avg_chosen for x in metrics])[0],
                    "regret": m, "stderr": se,
                })
                for eps in config.epsilons:
                    if not trs:
                        continue
                    picks = [int(tr.chosen[n - 1]) for tr in trs]
                    opt_freq = float(np.mean([c in optimum for c in picks]))
                    vs = float(np.mean([_value_sandwich(c, report, config.budget, eps) for c in picks]))
                    t2 = math.nan
                    if algo == FTAL and distinct and eps > const.alpha_H:
                        vals = []
                        for tr in trs:
                            fs = np.flatnonzero(tr.feasible[n - 1])
                            if fs.size:
                                vals.append(bounds.theorem2_bound(report.value, fs, p, eps, const, n).value)
                            else:
                                vals.append(0.0)
                        t2 = float(np.mean(vals))
                    selection.append({
                        "algo": algo, "epsilon": eps, "N": n, "H": h, "replications": len(trs),
                        "optimum_frequency": opt_freq, "optimum_stderr": bounds.binomial_stderr(opt_freq, len(trs)),
                        "value_sandwich_frequency": vs, "theorem2_bound": t2,
                    })
            sel = [schedule.index(n) for n in fit_points]
            for rate in bounds.RATE_MODELS:
                try:
                    fit = bounds.rate_check(fit_points, np.take(means, sel), rate, min_gap=gs.min_positive_gap,
                                            stderr=np.take(ses, sel))
                except ValueError:
                    fit = bounds.skipped_fit(rate)
                fits.append({"algo": algo, "H": h, "model": rate, **_fit_row(fit)})

        for eps, n in product(config.epsilons, schedule):
            delta = config.delta if config.delta is not None else 1.0 / n
            rb_f = bounds.regret_bound(gs, n, "FTAL", delta)
            rb_a = bounds.regret_bound(gs, n, "AUER", delta)
            bound_rows.append({
                "N": n, "H": h, "epsilon": eps, "delta": delta, "alpha_H": const.alpha_H, "r_H": const.r_H,
                "theorem1": bounds.theorem1_bound(p, eps, const.alpha_H, n) if eps > const.alpha_H else math.nan,
                "min_gap": gs.min_positive_gap if gs.min_positive_gap is not None else math.nan,
                "regret_bound_FTAL": rb_f.value, "regret_bound_AUER": rb_a.value,
                "undefined_terms": rb_f.undefined_terms,
            })

    result = ExperimentResult(report, schedules, sandwich, selection, regret, fits, bound_rows, failures)
    if write:
        io.write_csv(out / "sandwich.csv", SANDWICH_COLUMNS, sandwich)
        io.write_csv(out / "selection.csv", SELECTION_COLUMNS, selection)
        io.write_csv(out / "regret.csv", REGRET_COLUMNS, regret)
        io.write_csv(out / "fits.csv", FITS_COLUMNS, fits)
        io.write_csv(out / "bounds.csv", BOUNDS_COLUMNS, bound_rows)
        if failures:
            io.write_csv(out / "failures.csv", FAILURE_COLUMNS, failures)
    return result


def _fit_row(fit: bounds.RateFit) -> dict:
    d = asdict(fit)
    d.pop("model")
    d["C"] = d.pop("constant")
    return d
