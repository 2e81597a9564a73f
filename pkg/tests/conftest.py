import numpy as np
import pytest

from lutpolicy.lutnet import PolicyConfig, init_policy


def make_frozen_policy(seed=0, d_in=3, d_act=2, width=16, bits=7, arity=4,
                       n_layers=2, squash="tanh"):
    """Random policy with plausible frozen statistics, ready to compile."""
    pol = init_policy(d_in=d_in, d_act=d_act,
                      config=PolicyConfig(n_layers=n_layers, width=width,
                                          arity=arity, bits=bits, squash=squash),
                      seed=seed)
    rng = np.random.default_rng(seed + 1000)
    pol.stats.count = 50
    pol.stats.mean = rng.normal(0.0, 2.0, size=d_in)
    pol.stats.m2 = rng.uniform(0.5, 9.0, size=d_in) * pol.stats.count
    pol.stats.freeze()
    return pol


@pytest.fixture
def frozen_policy():
    return make_frozen_policy()
