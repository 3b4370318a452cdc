"""A budget no policy can meet: the estimated feasible set drains to empty."""

# %%
from sleepcmdp import bounds, oracle
from sleepcmdp.harness import InstanceSpec, generate_instance
from sleepcmdp.selector import insolvability_check, run

model, policies = generate_instance(InstanceSpec(num_states=5, num_actions=4, seed=1))
report = oracle.evaluate(model, policies)
alpha = bounds.truncation_constants(model, 18).alpha_H
K = report.cost.min() - 2 * alpha - 1e-3
print(f"cheapest policy costs {report.cost.min():.4f}; budget K = {K:.4f}")

# %%
tr = run("FTAL", model, policies, K, 2000, 18, seed=5)
nonempty = (~tr.infeasible).nonzero()[0]
print("feasible set sizes at n=1,10,100:", [int(tr.feasible[n - 1].sum()) for n in (1, 10, 100)])
print("last iteration with a nonempty estimate:", int(nonempty[-1]) + 1 if nonempty.size else None)
print("insolvable over the last N/2:", insolvability_check(tr, 1000))
