"""Built-in scenarios: the four-follower van der Pol replication and its variants."""
from __future__ import annotations

import copy

import numpy as np

from .config import SimConfig, from_dict

# One edge per graph; each is disconnected on its own, their union is the
# chain 0 -> 1 -> 2 -> 3 -> 4 rooted at the leader.
DEFAULT_EDGES = ([0, 1], [1, 2], [2, 3], [3, 4])

VAN_DER_POL_DOC = {
    "exosystem": {
        "r": 2,
        "alpha": [-1.0, 0.0],
        "Sb": [[0.0, 0.5], [-0.5, 0.0]],
        "v0": [-2.0, 1.0, -1.0, 3.0],
    },
    "agents": [
        {"name": "vdp1", "regressor": "van_der_pol", "theta": [4.0, 5.0], "disturbance": "w1^2*w2^2"},
        {"name": "vdp2", "regressor": "van_der_pol", "theta": [3.0, 1.0], "disturbance": "w1*w2^3"},
        {"name": "vdp3", "regressor": "van_der_pol", "theta": [2.0, 5.0], "disturbance": "w1^3 + w1*w2"},
        {"name": "vdp4", "regressor": "van_der_pol", "theta": [5.0, 3.0], "disturbance": "w2^4"},
    ],
    "graphs": {"node_count": 5, "family": [{"edges": [e]} for e in DEFAULT_EDGES]},
    "schedule": {"type": "periodic", "T0": 1.0, "cycle": [1, 2, 3, 4]},
    "observer": {"mu0": 12.0, "mu1": 3.0, "mu2": 12.0},
    "controller": {"beta": [1.0], "k": 3.0},
    "init": {
        "x": [[1.0, -4.0], [-2.0, 3.0], [3.0, 1.0], [-5.0, 2.0]],
        "v_hat": [[1.0, -2.0, 2.0, 1.0], [-5.0, 4.0, 1.0, 5.0], [0.0, 2.0, -4.0, 3.0], [-3.0, 1.0, -2.0, 4.0]],
        "S_a_hat": [[0.0, 1.0], [0.0, 0.0]],
        "S_b_hat": [[0.0, 0.0], [0.0, 0.0]],
        "theta_hat": [[0.0, 0.0]] * 4,
    },
    "sim": {"dt": 1e-3, "T": 100.0, "law": "distributed"},
}


def van_der_pol_document() -> dict:
    return copy.deepcopy(VAN_DER_POL_DOC)


def van_der_pol_config(**overrides) -> SimConfig:
    """Van der Pol replication config; keyword overrides go to ``SimConfig.replace``."""
    config = from_dict(van_der_pol_document())
    return config.replace(**overrides) if overrides else config


def truth_initialized(config: SimConfig, *, plants: bool = True, parameters: bool = True) -> SimConfig:
    """Observers started at the leader's true ``(S, v)``; optionally also plants
    at ``x0(0)`` and parameter estimates at the true ``theta``."""
    n = len(config.agents)
    r = config.exosystem.r
    init = config.init
    x = np.tile(config.v0[:r], (n, 1)) if plants else init.x
    theta_hat = tuple(a.theta.copy() for a in config.agents) if parameters else init.theta_hat
    new_init = type(init)(x=x, v_hat=np.tile(config.v0, (n, 1)),
                          S_hat=np.tile(config.exosystem.S, (n, 1, 1)), theta_hat=theta_hat)
    return config.replace(init=new_init)
