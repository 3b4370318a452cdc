"""JSON model/policy files and CSV reports.

Model file::

    {
      "format": "sleepcmdp-model/1",
      "gamma": 0.8, "beta": 0.8, "r_max": 0.2, "c_max": 0.2, "initial_state": 0,
      "states": [                       # one entry per state
        [                               # one entry per admissible action
          [{"lo": 0.0, "hi": 0.4, "next": 1, "reward": 0.1, "cost": 0.05}, ...]
        ],
        ...
      ]
    }

Policy file::

    {"format": "sleepcmdp-policies/1", "policies": [[0, 1, 0], [1, 1, 0], ...]}

Entry ``x`` of a policy is the action index taken in state ``x``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .model import CmdpModel, ModelError, Policy, Segment, check_model, check_policies

MODEL_FORMAT = "sleepcmdp-model/1"
POLICY_FORMAT = "sleepcmdp-policies/1"


def model_to_dict(model: CmdpModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "gamma": model.gamma,
        "beta": model.beta,
        "r_max": model.r_max,
        "c_max": model.c_max,
        "initial_state": model.initial_state,
        "states": [
            [
                [{"lo": s.lo, "hi": s.hi, "next": s.next_state, "reward": s.reward, "cost": s.cost} for s in segs]
                for segs in acts
            ]
            for acts in model.dynamics
        ],
    }


def model_from_dict(data: dict, validate: bool = True) -> CmdpModel:
    try:
        dyn = [
            [
                [Segment(float(s["lo"]), float(s["hi"]), int(s["next"]), float(s["reward"]), float(s["cost"]))
                 for s in segs]
                for segs in acts
            ]
            for acts in data["states"]
        ]
        model = CmdpModel(
            dynamics=dyn,
            gamma=float(data["gamma"]),
            beta=float(data["beta"]),
            r_max=float(data["r_max"]),
            c_max=float(data["c_max"]),
            initial_state=int(data.get("initial_state", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model document: {exc!r}") from exc
    return check_model(model) if validate else model


def policies_to_dict(policies) -> dict:
    return {"format": POLICY_FORMAT, "policies": [list(p.actions) for p in policies]}


def policies_from_dict(data: dict) -> tuple[Policy, ...]:
    try:
        return tuple(Policy(tuple(p)) for p in data["policies"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed policy document: {exc!r}") from exc


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def _load(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from exc


def save_model(model: CmdpModel, path):
    _dump(model_to_dict(model), path)


def load_model(path, validate: bool = True) -> CmdpModel:
    return model_from_dict(_load(path), validate=validate)


def save_policies(policies, path):
    _dump(policies_to_dict(policies), path)


def load_policies(path, model: CmdpModel | None = None) -> tuple[Policy, ...]:
    policies = policies_from_dict(_load(path))
    if model is not None:
        policies = check_policies(model, policies)
    return policies


def fmt(x) -> str:
    """Stable text form for CSV cells: shortest round-trip repr, empty for missing."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    if hasattr(x, "item"):
        return fmt(x.item())
    return str(x)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in columns])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def oracle_columns(horizons) -> list[str]:
    cols = ["policy", "V", "J"]
    for h in horizons:
        cols += [f"V_H{h}", f"J_H{h}"]
    return cols


def oracle_rows(report):
    horizons = sorted(report.finite_value)
    for i in range(report.num_policies):
        row = {"policy": i, "V": float(report.value[i]), "J": float(report.cost[i])}
        for h in horizons:
            row[f"V_H{h}"] = float(report.finite_value[h][i])
            row[f"J_H{h}"] = float(report.finite_cost[h][i])
        yield row


def write_oracle_csv(report, path):
    write_csv(path, oracle_columns(sorted(report.finite_value)), oracle_rows(report))
