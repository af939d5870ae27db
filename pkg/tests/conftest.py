import numpy as np
import pytest

from robustbf.channel import ChannelModelParams, SystemConfig, gen_channel, to_angular
from robustbf.coneprog import ProblemSpec
from robustbf.numerics import RngStream

GAMMA_3DB = 10.0**0.3


def table1_instance(seed: int, eps_rel: float, gamma: float = GAMMA_3DB, users: int = 4):
    """One 4x8 multi-user instance with the default multipath parameters.

    Returns (hhat, gammas, sigma, epsilons, true_h): estimates carry a sparse
    error drawn inside the relative l1 ball, noise follows the mean-power rule.
    """
    from robustbf.channel import UncertaintyModel, make_estimate, sample_error

    cfg = SystemConfig(4, 8, users)
    params = ChannelModelParams()
    rng = RngStream(seed)
    h, hhat, eps = [], [], []
    for k in range(users):
        hk = to_angular(gen_channel(params, cfg, rng.substream(k, 0)), cfg)
        model = UncertaintyModel(kind="l1", epsilon=eps_rel, relative=True)
        dk = sample_error(model, 12, hk, rng.substream(k, 1))
        h.append(hk)
        hhat.append(make_estimate(hk, dk))
        eps.append(model.radius(hk))
    sigma = float(np.sqrt(0.1 * np.mean([np.linalg.norm(x) ** 2 for x in h])))
    return hhat, (gamma,) * users, sigma, tuple(eps), h


def small_instance(seed: int, eps_rel: float, users: int = 2, n_v: int = 2, n_h: int = 2,
                   gamma: float = GAMMA_3DB):
    """Tiny instance for fast solver-backed unit tests."""
    from robustbf.channel import UncertaintyModel, make_estimate, sample_error

    cfg = SystemConfig(n_v, n_h, users)
    params = ChannelModelParams(taps=2)
    rng = RngStream(seed)
    h, hhat, eps = [], [], []
    for k in range(users):
        hk = to_angular(gen_channel(params, cfg, rng.substream(k, 0)), cfg)
        model = UncertaintyModel(kind="l1", epsilon=eps_rel, relative=True)
        dk = sample_error(model, min(4, cfg.n_t), hk, rng.substream(k, 1))
        h.append(hk)
        hhat.append(make_estimate(hk, dk))
        eps.append(model.radius(hk))
    sigma = float(np.sqrt(0.1 * np.mean([np.linalg.norm(x) ** 2 for x in h])))
    return hhat, (gamma,) * users, sigma, tuple(eps), h


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def make_spec(hhat, gammas, sigma, eps, kind="l1") -> ProblemSpec:
    return ProblemSpec(tuple(hhat), tuple(gammas), sigma, tuple(eps), kind=kind)
