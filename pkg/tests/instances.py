"""Hand-built and generated instances shared by the tests."""

import numpy as np

from sleepcmdp.harness import InstanceSpec, generate_instance
from sleepcmdp.model import CmdpModel, Policy, Segment


def self_loop(reward=0.3, cost=0.1, gamma=0.5, beta=0.5, r_max=1.0, c_max=1.0):
    return CmdpModel([[[Segment(0.0, 1.0, 0, reward, cost)]]], gamma, beta, r_max, c_max)


def split_model(gamma=0.9, beta=0.9):
    """Two states; action 0 of state 0 splits at w = 0.5."""
    s0a0 = [Segment(0.0, 0.5, 0, 0.2, 0.0), Segment(0.5, 1.0, 1, 0.7, 0.4)]
    s0a1 = [Segment(0.0, 1.0, 1, 0.1, 0.9)]
    s1a0 = [Segment(0.0, 0.3, 0, 1.0, 0.2), Segment(0.3, 1.0, 1, 0.0, 0.6)]
    return CmdpModel([[s0a0, s0a1], [s1a0]], gamma, beta, 1.0, 1.0)


def three_state_model():
    segs = [
        [[Segment(0.0, 0.25, 1, 0.5, 0.1), Segment(0.25, 0.75, 2, 0.1, 0.3), Segment(0.75, 1.0, 0, 0.9, 0.0)],
         [Segment(0.0, 1.0, 2, 0.4, 0.4)]],
        [[Segment(0.0, 0.6, 0, 0.2, 0.2), Segment(0.6, 1.0, 1, 0.8, 0.5)]],
        [[Segment(0.0, 0.1, 2, 0.0, 1.0), Segment(0.1, 1.0, 0, 0.6, 0.7)],
         [Segment(0.0, 0.5, 1, 0.3, 0.1), Segment(0.5, 1.0, 2, 0.3, 0.9)]],
    ]
    return CmdpModel(segs, 0.8, 0.7, 1.0, 1.0)


DESK_SPEC = InstanceSpec(num_states=5, num_actions=4, num_segments=2, gamma=0.8, beta=0.8,
                         num_policies=10, seed=1, budget=0.62, force_feasible=True,
                         distinct_values=True, margin=0.05, cost_margin=0.02)


def random_instances(count, seed=100, **kw):
    out = []
    for k in range(count):
        rng = np.random.default_rng(seed + k)
        spec = InstanceSpec(
            num_states=int(rng.integers(2, 11)), num_actions=int(rng.integers(2, 4)),
            num_segments=int(rng.integers(1, 4)), gamma=float(rng.uniform(0.5, 0.95)),
            beta=float(rng.uniform(0.5, 0.95)), num_policies=int(rng.integers(2, 9)), seed=seed + k, **kw)
        out.append(generate_instance(spec))
    return out
