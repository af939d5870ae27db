"""SINR evaluation, exact worst-case oracles over the l1 error ball, and
Monte Carlo falsification of robust designs.

The decoupled certificate checks beta_k * (worst-case numerator lower bound)
against the worst-case denominator upper bound; both sides are computed
exactly (not via the bounding constants the program builders use), because
the extreme points of the complex l1 ball are the single-coordinate vectors
eps * exp(j phase) * e_n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coneprog import ProblemSpec, build_l1_robust, build_l2_robust, structurally_infeasible
from .numerics import RngStream
from .solver import SolverSettings, solve


def sinr_all(h: list[np.ndarray], w: np.ndarray, sigma_n: float) -> np.ndarray:
    """Per-user SINR |h_k^H w_k|^2 / (sum_{j != k} |h_k^H w_j|^2 + sigma^2)."""
    if sigma_n <= 0:
        raise ValueError("noise std must be positive")
    users = w.shape[1]
    out = np.empty(users)
    for k in range(users):
        gains = np.abs(h[k].conj() @ w) ** 2
        out[k] = gains[k] / (gains.sum() - gains[k] + sigma_n**2)
    return out


def wc_num_l1(hhat: np.ndarray, eps: float, w: np.ndarray) -> float:
    """Exact min of |h^H w| over the l1 ball of radius eps around hhat.

    delta^H w sweeps the full complex disk of radius eps*||w||_inf (extreme
    points of the ball are eps*exp(j phi)*e_n), so the minimum modulus is the
    clamped difference below.
    """
    if eps < 0:
        raise ValueError("radius must be nonnegative")
    nominal = abs(np.vdot(hhat, w))
    return max(nominal - eps * float(np.max(np.abs(w), initial=0.0)), 0.0)


def wc_den_l1(hhat: np.ndarray, eps: float, w: np.ndarray, sigma_n: float) -> float:
    """Exact max of ||[h^H W, sigma]||_2 over the l1 ball around hhat.

    The objective is convex in the error, so the max sits at an extreme point
    eps*exp(j phi)*e_n; optimizing the phase analytically per antenna index n
    gives ||a||^2 + 2 eps |<a, v(n)>| + eps^2 ||v(n)||^2 with a = hhat^H W and
    v(n) the n-th row of W.
    """
    if eps < 0:
        raise ValueError("radius must be nonnegative")
    a = hhat.conj() @ w  # length-K row of beamforming gains
    base = float(np.real(np.vdot(a, a)))
    cross = np.abs(w.conj() @ a)  # |<a, v(n)>| per antenna row n
    row_sq = np.sum(np.abs(w) ** 2, axis=1)
    peak = float(np.max(base + 2.0 * eps * cross + eps**2 * row_sq, initial=base))
    return float(np.sqrt(peak + sigma_n**2))


@dataclass(frozen=True)
class Certificate:
    """Exact decoupled worst-case check for one user."""

    num_lower: float
    den_upper: float
    margin: float
    certified: bool


def certify(
    hhat: list[np.ndarray],
    epsilons,
    w: np.ndarray,
    sigma_n: float,
    gammas,
    margin_tol: float = 1e-6,
) -> list[Certificate]:
    """Per-user margins beta_k * num_lower - den_upper; certified at >= -margin_tol.

    A certified user meets SINR >= gamma_k for every channel in its ball:
    beta |h^H w_k| >= ||[h^H W, sigma]|| is exactly SINR >= gamma, and the
    decoupled bounds only strengthen it.
    """
    if not (len(hhat) == len(epsilons) == len(gammas) == w.shape[1]):
        raise ValueError("per-user inputs and beamformer columns must agree")
    out = []
    for k, (h, eps, gamma) in enumerate(zip(hhat, epsilons, gammas)):
        beta = np.sqrt(1.0 + 1.0 / gamma)
        num = wc_num_l1(h, eps, w[:, k])
        den = wc_den_l1(h, eps, w, sigma_n)
        margin = beta * num - den
        out.append(Certificate(num, den, float(margin), bool(margin >= -margin_tol)))
    return out


def _batched_sinr(h_rows: np.ndarray, w: np.ndarray, sigma_n: float, k: int) -> np.ndarray:
    """SINR of user k for a batch of channel realizations (rows of h_rows)."""
    g = np.abs(h_rows.conj() @ w) ** 2
    own = g[..., k]
    rest = g.sum(axis=-1) - own + sigma_n**2
    return own / rest


def mc_min_sinr(
    hhat: list[np.ndarray],
    epsilons,
    w: np.ndarray,
    sigma_n: float,
    samples: int,
    rng: RngStream,
    support_size: int | None = None,
    phase_grid: int = 360,
) -> np.ndarray:
    """Per-user minimum SINR over sampled l1-ball errors plus all extreme points.

    An upper bound on the true (coupled) worst-case SINR.  Interior samples
    follow the sparse error model (top-energy half of the support plus random
    remainder, flat-Dirichlet magnitudes, uniform phases, interior scale);
    each random component uses its own substream so the first s samples of a
    larger run coincide with a run of s samples.  Every single-coordinate
    extreme point eps*exp(j phi)*e_n is swept on a phase grid.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    n_t, users = w.shape
    if support_size is None:
        support_size = n_t
    if not 1 <= support_size <= n_t:
        raise ValueError(f"support_size={support_size} outside [1, {n_t}]")
    mins = np.empty(users)
    phases = np.exp(1j * 2 * np.pi * np.arange(phase_grid) / phase_grid)
    k_top = int(np.ceil(support_size / 2))
    n_rest = support_size - k_top
    for k in range(users):
        h0 = hhat[k]
        eps = epsilons[k]
        worst = float(_batched_sinr(h0[None, :], w, sigma_n, k)[0])
        if eps > 0:
            sub = rng.substream(k)
            order = np.argsort(-np.abs(h0), kind="stable")
            top = order[:k_top]
            complement = order[k_top:]
            cols = np.broadcast_to(top, (samples, k_top))
            if n_rest > 0:
                keys = sub.substream(0).generator().random((samples, complement.size))
                picks = np.argpartition(keys, n_rest - 1, axis=1)[:, :n_rest]
                cols = np.concatenate([cols, complement[picks]], axis=1)
            mags = sub.substream(1).generator().dirichlet(np.ones(support_size), size=samples)
            phi = sub.substream(2).generator().uniform(0.0, 2 * np.pi, (samples, support_size))
            rho = sub.substream(3).generator().uniform(0.0, 1.0, samples)
            vals = rho[:, None] * eps * mags * np.exp(1j * phi)
            deltas = np.zeros((samples, n_t), dtype=complex)
            np.put_along_axis(deltas, cols, vals, axis=1)
            worst = min(worst, float(np.min(_batched_sinr(h0[None, :] + deltas, w, sigma_n, k))))
            # extreme points: gains shift by conj(eps e^{j phi}) * w[n, :]
            gains0 = h0.conj() @ w
            bump = np.conj(eps * phases)[None, :, None] * w[:, None, :]  # (n_t, grid, K)
            g = np.abs(gains0[None, None, :] + bump) ** 2
            own = g[..., k]
            rest = g.sum(axis=-1) - own + sigma_n**2
            worst = min(worst, float(np.min(own / rest)))
        mins[k] = worst
    return mins


@dataclass(frozen=True)
class DominanceResult:
    p_l1: float | None
    p_l2: float | None
    dominance: bool | None  # None when either side is unsolved
    status_l1: str
    status_l2: str


def theorem1_check(
    hhat: list[np.ndarray],
    gammas,
    sigma_n: float,
    epsilons,
    settings: SolverSettings | None = None,
    rel_tol: float = 1e-6,
) -> DominanceResult:
    """Solve the l1 and l2 robust designs at equal radii and compare powers.

    Dominance means p_l1 <= p_l2 + rel_tol * max(1, p_l2).  If either program
    is provably or heuristically infeasible (or unsolved), the comparison is
    flagged indeterminate rather than decided.
    """
    spec1 = ProblemSpec(tuple(hhat), tuple(gammas), sigma_n, tuple(epsilons), kind="l1")
    spec2 = ProblemSpec(tuple(hhat), tuple(gammas), sigma_n, tuple(epsilons), kind="l2")
    results = {}
    for name, spec, builder in (("l1", spec1, build_l1_robust), ("l2", spec2, build_l2_robust)):
        if structurally_infeasible(spec):
            results[name] = (None, "infeasible_presolve")
            continue
        prog, _ = builder(spec)
        res = solve(prog, settings)
        results[name] = (res.objective if res.optimal else None, res.status)
    p1, s1 = results["l1"]
    p2, s2 = results["l2"]
    dom = None
    if p1 is not None and p2 is not None:
        dom = bool(p1 <= p2 + rel_tol * max(1.0, p2))
    return DominanceResult(p_l1=p1, p_l2=p2, dominance=dom, status_l1=s1, status_l2=s2)
