"""Monte Carlo rollouts against the exact finite-horizon values, and the truncation tail."""

# %%
import numpy as np

from sleepcmdp import bounds, oracle
from sleepcmdp.harness import InstanceSpec, generate_instance
from sleepcmdp.model import rollout_batch
from sleepcmdp.streams import VALUE, uniform_block

model, policies = generate_instance(InstanceSpec(num_states=6, num_policies=4, seed=3))
H = 20
report = oracle.evaluate(model, policies, [H])

# %% 1e5 rollouts per policy; the Hoeffding band is the 99.99% radius for [0,1] sums
m = 100_000
radius = bounds.hoeffding_radius(m, 0.9999)
for i, pol in enumerate(policies):
    w = uniform_block(0, 0, VALUE, i, 1, m, H)
    v, c = rollout_batch(model, pol, w)
    print(f"policy {i}: MC {v.mean():.4f} exact {report.finite_value[H][i]:.4f} (band +-{radius:.4f})")

# %% how fast V_H approaches V
for h in (1, 5, 10, 20, 40):
    rep = oracle.evaluate(model, policies, [h])
    err = np.abs(rep.finite_value[h] - rep.value).max()
    print(f"H={h:3d}  max |V_H - V| = {err:.2e}  <=  r_H = {bounds.truncation_constants(model, h).r_H:.2e}")
