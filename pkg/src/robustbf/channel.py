"""Physical 3D multipath channel synthesis and sparse CSI error models.

Channels are generated in the spatial domain as sums of planar-array
steering vectors with random per-tap gains, then moved to the angular
(beam) domain where they concentrate energy on few entries.  CSI errors
are synthesized directly as sparse vectors inside a declared uncertainty
ball; the estimate is defined by the exact identity h = hhat + delta.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .numerics import RngStream, dft_basis


@dataclass(frozen=True)
class SystemConfig:
    """Planar-array geometry and user count."""

    n_v: int = 4
    n_h: int = 8
    users: int = 4

    @property
    def n_t(self) -> int:
        return self.n_v * self.n_h


@dataclass(frozen=True)
class ChannelModelParams:
    """Multipath model: tap count, spacing, angle ranges, gain law.

    Defaults: 6 taps, half-wavelength spacing, vertical angle uniform on
    [0, pi/2], horizontal angle uniform on [0, pi], tap gain magnitude
    uniform on [0, 1].  When complex_gain_phase is set, each tap gain also
    carries an independent uniform phase; a pure-magnitude gain would make
    all taps add coherently at broadside, which is an unphysical special
    case kept available only for tests.
    """

    taps: int = 6
    spacing_wavelengths: float = 0.5
    theta_range: tuple[float, float] = (0.0, np.pi / 2)
    phi_range: tuple[float, float] = (0.0, np.pi)
    gain_range: tuple[float, float] = (0.0, 1.0)
    complex_gain_phase: bool = True

    def __post_init__(self):
        if self.taps < 1:
            raise ValueError("tap count must be >= 1")
        if self.spacing_wavelengths <= 0:
            raise ValueError("antenna spacing must be positive")


@dataclass(frozen=True)
class UncertaintyModel:
    """CSI error ball: kind 'l1' or 'l2', radius epsilon (relative or absolute).

    With relative=True the per-user radius is epsilon * ||h_k||_2.
    """

    kind: str = "l1"
    epsilon: float = 0.1
    relative: bool = True

    def __post_init__(self):
        if self.kind not in ("l1", "l2"):
            raise ValueError(f"unknown uncertainty kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError("uncertainty radius must be nonnegative")

    def radius(self, h_true: np.ndarray) -> float:
        if self.relative:
            return self.epsilon * float(np.linalg.norm(h_true))
        return self.epsilon


@dataclass
class ChannelSet:
    """Per-user true channel, estimate, and injected error (angular domain).

    Invariant: h = hhat + delta holds exactly for every user.
    """

    config: SystemConfig
    h: list[np.ndarray]
    hhat: list[np.ndarray]
    delta: list[np.ndarray]
    seed: int | None = None

    def __post_init__(self):
        for hk, hh, dk in zip(self.h, self.hhat, self.delta):
            if hk.shape != (self.config.n_t,) or hh.shape != hk.shape or dk.shape != hk.shape:
                raise ValueError("channel vectors must all have length n_t")


def steering_vector(theta: float, phi: float, cfg: SystemConfig) -> np.ndarray:
    """Planar-array response for departure angles (theta, phi), unit-modulus entries.

    Phase convention: entry (m, n) = exp(j*pi*(m*cos(theta) + n*sin(theta)*cos(phi)))
    for vertical index m and horizontal index n, half-wavelength spacing folded
    into the factor pi, vector ordering vertical-fastest.  Any fixed convention
    works downstream; this one is the documented choice.
    """
    if not (0.0 <= theta <= np.pi / 2 + 1e-12):
        raise ValueError(f"theta {theta} outside [0, pi/2]")
    if not (0.0 <= phi <= np.pi + 1e-12):
        raise ValueError(f"phi {phi} outside [0, pi]")
    m = np.arange(cfg.n_v)
    n = np.arange(cfg.n_h)
    a_v = np.exp(1j * np.pi * m * np.cos(theta))
    a_h = np.exp(1j * np.pi * n * np.sin(theta) * np.cos(phi))
    return np.kron(a_h, a_v)


def gen_channel(params: ChannelModelParams, cfg: SystemConfig, rng: RngStream) -> np.ndarray:
    """Spatial-domain channel: sum of `taps` steering vectors with random gains."""
    g = rng.generator()
    h = np.zeros(cfg.n_t, dtype=complex)
    for _ in range(params.taps):
        theta = g.uniform(*params.theta_range)
        phi = g.uniform(*params.phi_range)
        gain = g.uniform(*params.gain_range)
        if params.complex_gain_phase:
            gain = gain * np.exp(1j * g.uniform(0.0, 2 * np.pi))
        h += gain * steering_vector(theta, phi, cfg)
    return h


def to_angular(h_spatial: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Angular-domain representation U^H h (unitary, norm-preserving)."""
    return dft_basis(cfg.n_v, cfg.n_h).conj().T @ h_spatial


def to_spatial(h_angular: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Inverse of to_angular."""
    return dft_basis(cfg.n_v, cfg.n_h) @ h_angular


def sparsity_stats(h: np.ndarray, k: int) -> float:
    """Fraction of squared energy captured by the k largest-modulus entries."""
    e = np.abs(np.asarray(h)) ** 2
    if not 1 <= k <= e.size:
        raise ValueError(f"k={k} outside [1, {e.size}]")
    total = e.sum()
    if total == 0.0:
        return 1.0
    top = np.sort(e)[::-1][:k].sum()
    return float(top / total)


def error_direction(support_size: int, h_true: np.ndarray, rng: RngStream) -> tuple[np.ndarray, float]:
    """Unit-l1-norm sparse error pattern plus an interior scale factor in (0, 1).

    Support: ceil(support_size/2) indices from the top-energy support of the
    true channel, the remainder uniform from the complement.  Magnitudes on
    the support are flat-Dirichlet distributed; phases uniform.  Returned
    separately from the radius so sweeps can scale one draw across a grid
    of uncertainty levels.
    """
    n_t = h_true.size
    if not 0 <= support_size <= n_t:
        raise ValueError(f"support_size={support_size} outside [0, {n_t}]")
    g = rng.generator()
    if support_size == 0:
        return np.zeros(n_t, dtype=complex), float(g.uniform(0.0, 1.0))
    k_top = int(np.ceil(support_size / 2))
    order = np.argsort(-np.abs(h_true), kind="stable")
    top = order[:k_top]
    complement = order[k_top:]
    rest = g.choice(complement, size=support_size - k_top, replace=False)
    support = np.concatenate([top, rest])
    mags = g.dirichlet(np.ones(support_size))
    phases = g.uniform(0.0, 2 * np.pi, support_size)
    d = np.zeros(n_t, dtype=complex)
    d[support] = mags * np.exp(1j * phases)
    return d, float(g.uniform(0.0, 1.0))


def sample_error(
    model: UncertaintyModel, support_size: int, h_true: np.ndarray, rng: RngStream
) -> np.ndarray:
    """Sparse CSI error strictly inside the model's ball around the estimate."""
    eps_k = model.radius(h_true)
    d, rho = error_direction(support_size, h_true, rng)
    if eps_k == 0.0:
        return np.zeros(h_true.size, dtype=complex)
    if model.kind == "l1":
        return rho * eps_k * d
    d2 = float(np.linalg.norm(d))
    if d2 == 0.0:
        return np.zeros(h_true.size, dtype=complex)
    return rho * eps_k * d / d2


def make_estimate(h: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Estimate defined by the exact error identity: hhat = h - delta."""
    if h.shape != delta.shape:
        raise ValueError("channel and error must have equal length")
    return h - delta


def build_channel_set(
    params: ChannelModelParams,
    cfg: SystemConfig,
    model: UncertaintyModel,
    support_size: int,
    rng: RngStream,
    seed: int | None = None,
) -> ChannelSet:
    """Generate one multi-user channel set with synthesized errors (angular domain)."""
    hs, hhats, deltas = [], [], []
    for k in range(cfg.users):
        h = to_angular(gen_channel(params, cfg, rng.substream(k, 0)), cfg)
        delta = sample_error(model, support_size, h, rng.substream(k, 1))
        hhat = make_estimate(h, delta)
        hs.append(hhat + delta)  # re-derived so h = hhat + delta holds bitwise
        hhats.append(hhat)
        deltas.append(delta)
    return ChannelSet(config=cfg, h=hs, hhat=hhats, delta=deltas, seed=seed)


def _vec(values: np.ndarray) -> list[float]:
    return [float(v) for v in values]


def save_channel_set(cs: ChannelSet, path: str) -> None:
    doc = {
        "config": {"n_v": cs.config.n_v, "n_h": cs.config.n_h, "users": cs.config.users},
        "seed": cs.seed,
        "users": [
            {
                "h_re": _vec(h.real),
                "h_im": _vec(h.imag),
                "hhat_re": _vec(hh.real),
                "hhat_im": _vec(hh.imag),
                "delta_re": _vec(d.real),
                "delta_im": _vec(d.imag),
            }
            for h, hh, d in zip(cs.h, cs.hhat, cs.delta)
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def load_channel_set(path: str) -> ChannelSet:
    with open(path) as f:
        doc = json.load(f)
    cfg = SystemConfig(
        n_v=int(doc["config"]["n_v"]),
        n_h=int(doc["config"]["n_h"]),
        users=int(doc["config"]["users"]),
    )

    def cvec(u, key):
        return np.asarray(u[f"{key}_re"], dtype=float) + 1j * np.asarray(u[f"{key}_im"], dtype=float)

    users = doc["users"]
    if len(users) != cfg.users:
        raise ValueError("user count mismatch in channel file")
    return ChannelSet(
        config=cfg,
        h=[cvec(u, "h") for u in users],
        hhat=[cvec(u, "hhat") for u in users],
        delta=[cvec(u, "delta") for u in users],
        seed=doc.get("seed"),
    )
