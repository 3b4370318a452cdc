"""Draw a small constrained MDP, compute the exact answer, then let FTAL and AUER find it."""

# %%
import numpy as np

from sleepcmdp import oracle
from sleepcmdp.harness import InstanceSpec, generate_instance
from sleepcmdp.selector import run

spec = InstanceSpec(num_states=5, num_actions=4, seed=1, budget=0.62, force_feasible=True,
                    distinct_values=True, margin=0.05, cost_margin=0.02)
model, policies = generate_instance(spec)
print(f"{model.num_states} states, {len(policies)} candidate policies")

# %% exact values and costs from the initial state
report = oracle.evaluate(model, policies)
np.set_printoptions(precision=3, suppress=True)
print("V:", report.value)
print("J:", report.cost)
best, v_star = report.optimum(0.62)
print("feasible under K=0.62:", sorted(report.feasible_set(0.62, 0.0)))
print("optimum:", sorted(best), "value", round(v_star, 4))

# %% both selectors, same seed
for algo in ("FTAL", "AUER"):
    tr = run(algo, model, policies, budget=0.62, iterations=2000, horizon=18, seed=7)
    hits = np.mean(np.isin(tr.chosen[-500:], sorted(best)))
    print(f"{algo}: pi(N) = {tr.chosen[-1]}, optimal in {hits:.0%} of the last 500 iterations, "
          f"simulations spent = {tr.final.tau.sum()}")
