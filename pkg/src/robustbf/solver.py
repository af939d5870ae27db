"""Operator-splitting (ADMM) solver for the conic programs built in coneprog.

One cached factorization of the regularized normal equations, closed-form
cone projections, residual-based termination.  The iteration on
min c'x s.t. Ax + s = b, s in K is

    x    <- (A'A + sigma I)^-1 (A'(b - z + u) - c/rho)
    shat <- b - A x;   shat_r <- lambda shat + (1 - lambda) z
    z    <- Pi_K(shat_r + u);   u <- u + shat_r - z

with scaled residuals r_p = ||shat - z|| / (1 + ||b||) and
r_d = rho ||A'(z - z_prev)|| / (1 + ||c||).

The penalty starts at settings.rho and is rebalanced deterministically at
a fixed iteration cadence toward equal primal/dual residuals; runs whose
primal residual has stopped improving above the stagnation threshold with
a non-shrinking (unscaled) dual state are declared infeasible
heuristically.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .coneprog import Cone, ConeProgram


@dataclass(frozen=True)
class SolverSettings:
    rho: float = 1.0
    sigma_reg: float = 1e-8
    max_iter: int = 50000
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    over_relaxation: float = 1.6
    # residual balancing: every rho_adapt_every iterations scale the penalty
    # by sqrt(r_p / r_d), clamped per update and globally; the scaled dual
    # state u is rescaled so the unscaled dual rho*u is preserved
    rho_adapt_every: int = 500
    rho_adapt_clamp: float = 5.0
    rho_min: float = 1e-2
    rho_max: float = 1e3
    # infeasibility heuristic: no meaningful r_p improvement for stag_window
    # iterations while r_p sits above stag_level and the unscaled dual norm
    # has not shrunk.
    stag_window: int = 5000
    stag_level: float = 1e-3
    stag_improvement: float = 1e-3

    def __post_init__(self):
        if min(self.rho, self.sigma_reg, self.tol_primal, self.tol_dual) <= 0:
            raise ValueError("rho, sigma_reg and tolerances must be positive")
        if not 0 < self.over_relaxation < 2:
            raise ValueError("over-relaxation factor must lie in (0, 2)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.rho_adapt_every < 1 or self.rho_adapt_clamp <= 1 or self.rho_min > self.rho_max:
            raise ValueError("bad rho adaptation settings")


@dataclass
class SolveResult:
    status: str  # "optimal" | "max_iters" | "infeasible_heuristic"
    x: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    wall_time_s: float
    # warm-start state (permuted row space of this program's shape)
    z: np.ndarray = field(repr=False, default=None)
    u: np.ndarray = field(repr=False, default=None)
    rho_final: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def project_soc(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the second-order cone {(t, z): ||z|| <= t}."""
    v = np.asarray(v, dtype=float)
    if v.size < 2:
        raise ValueError("SOC blocks need dim >= 2")
    t, z = v[0], v[1:]
    nz = float(np.linalg.norm(z))
    if nz <= t:
        return v.copy()
    if nz <= -t:
        return np.zeros_like(v)
    scale = 0.5 * (t + nz)
    out = np.empty_like(v)
    out[0] = scale
    out[1:] = (scale / nz) * z
    return out


class ConeProjector:
    """Blockwise projection onto a product cone, batched over equal-dim SOCs.

    The constructor records a row permutation placing the zero rows first,
    then the nonneg rows, then SOC blocks grouped by dimension, so each
    projection is a handful of vectorized operations with no gathers.
    """

    def __init__(self, cones: list[Cone]):
        zero, nonneg, soc = [], [], {}
        off = 0
        for kind, dim in cones:
            if kind == "zero":
                zero.extend(range(off, off + dim))
            elif kind == "nonneg":
                nonneg.extend(range(off, off + dim))
            else:
                soc.setdefault(dim, []).append(off)
            off += dim
        self.m = off
        perm = list(zero) + list(nonneg)
        self.n_zero = len(zero)
        self.n_nonneg = len(nonneg)
        self.groups = []  # (slice in permuted space, count, dim)
        for dim in sorted(soc):
            starts = soc[dim]
            begin = len(perm)
            for s in starts:
                perm.extend(range(s, s + dim))
            self.groups.append((slice(begin, begin + len(starts) * dim), len(starts), dim))
        self.perm = np.asarray(perm, dtype=np.intp)
        self.inv_perm = np.argsort(self.perm)

    def project_permuted(self, s: np.ndarray) -> np.ndarray:
        """In-place projection of a vector already living in permuted row order."""
        s[: self.n_zero] = 0.0
        nn = s[self.n_zero : self.n_zero + self.n_nonneg]
        np.maximum(nn, 0.0, out=nn)
        for sl, count, dim in self.groups:
            v = s[sl].reshape(count, dim)
            t = v[:, 0]
            z = v[:, 1:]
            nz = np.linalg.norm(z, axis=1)
            polar = nz <= -t
            boundary = ~polar & (nz > t)
            if boundary.any():
                scale = 0.5 * (t[boundary] + nz[boundary])
                v[boundary, 0] = scale
                v[boundary, 1:] *= (scale / nz[boundary])[:, None]
            if polar.any():
                v[polar] = 0.0
        return s

    def __call__(self, s: np.ndarray) -> np.ndarray:
        out = np.asarray(s, dtype=float)[self.perm]
        return self.project_permuted(out)[self.inv_perm]


def project_cones(s: np.ndarray, cones: list[Cone]) -> np.ndarray:
    """Projection onto the product cone in the natural row order."""
    if sum(d for _, d in cones) != np.size(s):
        raise ValueError("cone dims do not cover the vector")
    return ConeProjector(cones)(s)


def solve(
    prog: ConeProgram,
    settings: SolverSettings | None = None,
    warm_start: "SolveResult | np.ndarray | None" = None,
    log=None,
) -> SolveResult:
    """Run the ADMM iteration on one program.

    warm_start may be a previous SolveResult for a program of the same shape
    (restores the full splitting state including the adapted penalty) or a
    bare primal vector (state is rebuilt by projecting b - Ax).  `log`, if
    given, is a writable text stream receiving "iter,r_p,r_d,objective" rows.
    """
    cfg = settings or SolverSettings()
    proj = ConeProjector(prog.cones)
    m, n = prog.m, prog.n
    a_p = np.ascontiguousarray(prog.A[proj.perm])
    b_p = np.ascontiguousarray(prog.b[proj.perm])
    a_pt = np.ascontiguousarray(a_p.T)
    gram = a_pt @ a_p + cfg.sigma_reg * np.eye(n)
    m_inv = sla.cho_solve(sla.cho_factor(gram, lower=True), np.eye(n))

    rho = cfg.rho
    if warm_start is None:
        z = np.zeros(m)
        u = np.zeros(m)
    elif isinstance(warm_start, SolveResult):
        if warm_start.z is None or warm_start.z.shape != (m,):
            raise ValueError("warm-start state does not match program shape")
        z = warm_start.z.copy()
        u = warm_start.u.copy()
        if warm_start.rho_final > 0:
            rho = warm_start.rho_final
    else:
        x0 = np.asarray(warm_start, dtype=float)
        if x0.shape != (n,):
            raise ValueError("warm-start vector does not match program shape")
        z = proj.project_permuted(b_p - a_p @ x0)
        u = np.zeros(m)

    norm_b = 1.0 + float(np.linalg.norm(b_p))
    norm_c = 1.0 + float(np.linalg.norm(prog.c))
    lam = cfg.over_relaxation

    best_rp = np.inf
    since_best = 0
    y_ref = 0.0
    rp = rd = np.inf
    x = np.zeros(n)
    if log is not None:
        log.write("iter,r_p,r_d,objective\n")

    t0 = time.perf_counter()
    it = 0
    status = "max_iters"
    for it in range(1, cfg.max_iter + 1):
        x = m_inv @ (a_pt @ (b_p - z + u) - prog.c / rho)
        shat = b_p - a_p @ x
        shat_r = lam * shat + (1.0 - lam) * z
        z_prev = z
        z = proj.project_permuted(shat_r + u)
        u = u + shat_r - z

        rp = float(np.linalg.norm(shat - z)) / norm_b
        adapt = it % cfg.rho_adapt_every == 0
        if rp <= cfg.tol_primal or adapt or log is not None:
            rd = rho * float(np.linalg.norm(a_pt @ (z - z_prev))) / norm_c
        if log is not None:
            log.write(f"{it},{rp:.6e},{rd:.6e},{float(prog.c @ x):.9e}\n")
        if rp <= cfg.tol_primal and rd <= cfg.tol_dual:
            status = "optimal"
            break

        # the unscaled dual norm rho*||u|| is invariant under penalty rescaling
        if rp < best_rp * (1.0 - cfg.stag_improvement):
            best_rp = rp
            since_best = 0
            y_ref = rho * float(np.linalg.norm(u))
        else:
            since_best += 1
            if (
                since_best >= cfg.stag_window
                and best_rp > cfg.stag_level
                and rho * float(np.linalg.norm(u)) >= y_ref
            ):
                status = "infeasible_heuristic"
                break
        if adapt and rd > 0:
            factor = float(np.clip(np.sqrt(rp / rd), 1.0 / cfg.rho_adapt_clamp, cfg.rho_adapt_clamp))
            rho_new = float(np.clip(rho * factor, cfg.rho_min, cfg.rho_max))
            if rho_new != rho:
                u *= rho / rho_new
                rho = rho_new

    if status != "optimal" and np.isinf(rd):
        rd = rho * float(np.linalg.norm(a_pt @ (z - z_prev))) / norm_c
    return SolveResult(
        status=status,
        x=x,
        objective=float(prog.c @ x),
        iterations=it,
        primal_residual=rp,
        dual_residual=rd,
        wall_time_s=time.perf_counter() - t0,
        z=z,
        u=u,
        rho_final=rho,
    )
