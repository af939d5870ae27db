"""Real-valued conic programs (min c'x s.t. Ax + s = b, s in K) for beamforming.

Three builders share one variable layout over x = (Re W, Im W, p, t, eta, alpha):

* perfect-CSI power minimization,
* the l1-ball robust design (per-entry beamformer bound eta and per-antenna-row
  bound alpha convert the worst-case SINR surrogate into linear + SOC rows),
* an l2-ball analog of the same relaxation pattern (Cauchy-Schwarz numerator
  bound with eta >= ||w_k||_2, Frobenius denominator bound alpha >= ||W||_F),
  kept as a clearly-labeled conservative comparator.

Complex constraints are lowered to real SOC blocks; rows are rescaled
per separable row / per SOC block (uniformly, so cone membership is
preserved) before handoff to the solver.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

Cone = tuple[str, int]  # ("zero" | "nonneg" | "soc", dim)


@dataclass(frozen=True)
class VariableLayout:
    """Offsets of (Re W, Im W, p, t_k, eta, alpha) inside the real variable vector."""

    n_t: int
    users: int

    @property
    def n(self) -> int:
        return 2 * self.users * self.n_t + self.users + 3

    def re_w(self, k: int) -> slice:
        return slice(k * self.n_t, (k + 1) * self.n_t)

    def im_w(self, k: int) -> slice:
        base = self.users * self.n_t
        return slice(base + k * self.n_t, base + (k + 1) * self.n_t)

    @property
    def p_index(self) -> int:
        return 2 * self.users * self.n_t

    def t_index(self, k: int) -> int:
        return self.p_index + 1 + k

    @property
    def eta_index(self) -> int:
        return self.p_index + 1 + self.users

    @property
    def alpha_index(self) -> int:
        return self.eta_index + 1


@dataclass
class ConeProgram:
    """Immutable conic program data; row_scales records the normalization applied."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: list[Cone]
    row_scales: np.ndarray = field(default=None)

    def __post_init__(self):
        m, n = self.A.shape
        if self.b.shape != (m,) or self.c.shape != (n,):
            raise ValueError("inconsistent program dimensions")
        if sum(d for _, d in self.cones) != m:
            raise ValueError("cone dims do not cover the rows")
        for kind, dim in self.cones:
            if kind not in ("zero", "nonneg", "soc"):
                raise ValueError(f"unknown cone kind {kind!r}")
            if kind == "soc" and dim < 2:
                raise ValueError("SOC blocks need dim >= 2")
        if self.row_scales is None:
            self.row_scales = np.ones(m)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class ProblemSpec:
    """One beamforming instance: estimates, SINR targets, noise, uncertainty radii."""

    hhat: tuple[np.ndarray, ...]
    gammas: tuple[float, ...]
    sigma_n: float
    epsilons: tuple[float, ...]
    kind: str = "l1"  # uncertainty ball for the robust builders

    def __post_init__(self):
        if self.sigma_n <= 0:
            raise ValueError("noise std must be positive")
        if any(g <= 0 for g in self.gammas):
            raise ValueError("SINR targets must be positive")
        if any(e < 0 for e in self.epsilons):
            raise ValueError("uncertainty radii must be nonnegative")
        if not (len(self.hhat) == len(self.gammas) == len(self.epsilons)):
            raise ValueError("per-user field lengths differ")
        if self.kind not in ("l1", "l2"):
            raise ValueError(f"unknown uncertainty kind {self.kind!r}")

    @property
    def users(self) -> int:
        return len(self.hhat)

    @property
    def n_t(self) -> int:
        return self.hhat[0].size

    @property
    def betas(self) -> np.ndarray:
        return np.sqrt(1.0 + 1.0 / np.asarray(self.gammas))


class _Rows:
    """Row accumulator: each constraint contributes s_i = b_i - a_i'x."""

    def __init__(self, n: int):
        self.n = n
        self.rows: list[np.ndarray] = []
        self.rhs: list[float] = []
        self.cones: list[Cone] = []

    def add(self, expr_coeffs: np.ndarray, const: float = 0.0):
        """Append a row with s = const + expr_coeffs'x."""
        self.rows.append(expr_coeffs)
        self.rhs.append(const)

    def add_const(self, const: float):
        self.add(np.zeros(self.n), const)

    def close(self, kind: str, dim: int):
        self.cones.append((kind, dim))

    def build(self, c: np.ndarray) -> ConeProgram:
        a = -np.vstack(self.rows)  # s = b - Ax with s = const + coeffs'x
        b = np.asarray(self.rhs, dtype=float)
        return _normalize_rows(ConeProgram(c=c, A=a, b=b, cones=self.cones, row_scales=np.ones(len(b))))


def _re_row(h: np.ndarray, layout: VariableLayout, j: int) -> np.ndarray:
    """Coefficients of Re(h^H w_j) in x."""
    r = np.zeros(layout.n)
    r[layout.re_w(j)] = h.real
    r[layout.im_w(j)] = h.imag
    return r


def _im_row(h: np.ndarray, layout: VariableLayout, j: int) -> np.ndarray:
    """Coefficients of Im(h^H w_j) in x."""
    r = np.zeros(layout.n)
    r[layout.re_w(j)] = -h.imag
    r[layout.im_w(j)] = h.real
    return r


def _unit(layout: VariableLayout, idx: int, scale: float = 1.0) -> np.ndarray:
    r = np.zeros(layout.n)
    r[idx] = scale
    return r


def _add_power_cone(rows: _Rows, layout: VariableLayout):
    """sum_k ||w_k||^2 <= p as the rotated-cone SOC ||[2 vec(W); p-1]|| <= p+1."""
    rows.add(_unit(layout, layout.p_index), 1.0)
    nw = 2 * layout.users * layout.n_t
    for i in range(nw):
        rows.add(_unit(layout, i, 2.0))
    rows.add(_unit(layout, layout.p_index), -1.0)
    rows.close("soc", nw + 2)


def _add_den_cone(rows: _Rows, layout: VariableLayout, hhat_k: np.ndarray, eps_k: float, sigma_n: float, k: int):
    """||[hhat_k^H W, eps_k*alpha, sigma_n]|| <= t_k  (SOC dim 2K+3)."""
    rows.add(_unit(layout, layout.t_index(k)))
    for j in range(layout.users):
        rows.add(_re_row(hhat_k, layout, j))
    for j in range(layout.users):
        rows.add(_im_row(hhat_k, layout, j))
    rows.add(_unit(layout, layout.alpha_index, eps_k))
    rows.add_const(sigma_n)
    rows.close("soc", 2 * layout.users + 3)


def build_perfect_csi(spec: ProblemSpec) -> tuple[ConeProgram, VariableLayout]:
    """Power-min SOCP for exact CSI: ||[hhat_k^H W, sigma]|| <= beta_k Re(hhat_k^H w_k).

    Uncertainty radii are ignored.  Im(hhat_k^H w_k) is pinned to zero (the
    standard phase-rotation argument); the unused t, eta, alpha variables are
    pinned to zero so the layout and normal equations stay full rank.
    """
    layout = VariableLayout(n_t=spec.n_t, users=spec.users)
    rows = _Rows(layout.n)
    betas = spec.betas
    for k in range(spec.users):
        rows.add(_im_row(spec.hhat[k], layout, k))
        rows.close("zero", 1)
    for k in range(spec.users):
        rows.add(_unit(layout, layout.t_index(k)))
        rows.close("zero", 1)
    rows.add(_unit(layout, layout.eta_index))
    rows.close("zero", 1)
    rows.add(_unit(layout, layout.alpha_index))
    rows.close("zero", 1)
    for k in range(spec.users):
        rows.add(_re_row(spec.hhat[k], layout, k) * betas[k])
        for j in range(spec.users):
            rows.add(_re_row(spec.hhat[k], layout, j))
        for j in range(spec.users):
            rows.add(_im_row(spec.hhat[k], layout, j))
        rows.add_const(spec.sigma_n)
        rows.close("soc", 2 * spec.users + 2)
    _add_power_cone(rows, layout)
    c = _unit(layout, layout.p_index)
    return rows.build(c), layout


def build_l1_robust(spec: ProblemSpec) -> tuple[ConeProgram, VariableLayout]:
    """Robust design for the l1 error ball.

    Per user k: Re(hhat_k^H w_k) - eps_k*eta - t_k/beta_k >= 0 with the shared
    eta bounding every |w_k(n)| (SOC dim 3 per user-antenna pair), and
    ||[hhat_k^H W, eps_k*alpha, sigma]|| <= t_k with the shared alpha bounding
    every antenna-row norm ||v(n)||_2 (SOC dim 2K+1 per antenna).
    """
    if spec.kind != "l1":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'l1'")
    layout = VariableLayout(n_t=spec.n_t, users=spec.users)
    rows = _Rows(layout.n)
    betas = spec.betas
    for k in range(spec.users):
        r = _re_row(spec.hhat[k], layout, k)
        r[layout.eta_index] -= spec.epsilons[k]
        r[layout.t_index(k)] -= 1.0 / betas[k]
        rows.add(r)
    rows.close("nonneg", spec.users)
    for k in range(spec.users):
        for i in range(spec.n_t):
            rows.add(_unit(layout, layout.eta_index))
            rows.add(_unit(layout, layout.re_w(k).start + i))
            rows.add(_unit(layout, layout.im_w(k).start + i))
            rows.close("soc", 3)
    for i in range(spec.n_t):
        rows.add(_unit(layout, layout.alpha_index))
        for k in range(spec.users):
            rows.add(_unit(layout, layout.re_w(k).start + i))
        for k in range(spec.users):
            rows.add(_unit(layout, layout.im_w(k).start + i))
        rows.close("soc", 2 * spec.users + 1)
    for k in range(spec.users):
        _add_den_cone(rows, layout, spec.hhat[k], spec.epsilons[k], spec.sigma_n, k)
    _add_power_cone(rows, layout)
    c = _unit(layout, layout.p_index)
    return rows.build(c), layout


def build_l2_robust(spec: ProblemSpec) -> tuple[ConeProgram, VariableLayout]:
    """Conservative l2-ball comparator with the same relaxation pattern.

    The numerator bound uses |delta^H w| <= eps*||w||_2 (Cauchy-Schwarz, tight
    on the l2 ball) via the shared eta >= ||w_k||_2; the denominator bound uses
    ||delta^H W||_2 <= eps*||W||_F via alpha >= ||W||_F.  Every feasible point
    maps to a feasible point of the l1 builder at equal radii (the bounding
    constants only shrink), so its optimal power dominates the l1 one.
    """
    if spec.kind != "l2":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'l2'")
    layout = VariableLayout(n_t=spec.n_t, users=spec.users)
    rows = _Rows(layout.n)
    betas = spec.betas
    for k in range(spec.users):
        r = _re_row(spec.hhat[k], layout, k)
        r[layout.eta_index] -= spec.epsilons[k]
        r[layout.t_index(k)] -= 1.0 / betas[k]
        rows.add(r)
    rows.close("nonneg", spec.users)
    for k in range(spec.users):
        rows.add(_unit(layout, layout.eta_index))
        for i in range(spec.n_t):
            rows.add(_unit(layout, layout.re_w(k).start + i))
        for i in range(spec.n_t):
            rows.add(_unit(layout, layout.im_w(k).start + i))
        rows.close("soc", 2 * spec.n_t + 1)
    rows.add(_unit(layout, layout.alpha_index))
    for i in range(2 * spec.users * spec.n_t):
        rows.add(_unit(layout, i))
    rows.close("soc", 2 * spec.users * spec.n_t + 1)
    for k in range(spec.users):
        _add_den_cone(rows, layout, spec.hhat[k], spec.epsilons[k], spec.sigma_n, k)
    _add_power_cone(rows, layout)
    c = _unit(layout, layout.p_index)
    return rows.build(c), layout


def _normalize_rows(prog: ConeProgram) -> ConeProgram:
    """Rescale rows to O(1): per-row for separable cones, per-block for SOCs.

    A SOC block must be scaled uniformly or membership changes; separable
    cones tolerate per-row positive scaling.  b is scaled along with A, so
    the feasible set and objective are untouched.
    """
    a = prog.A.copy()
    b = prog.b.copy()
    scales = np.ones(prog.m)
    off = 0
    for kind, dim in prog.cones:
        sl = slice(off, off + dim)
        if kind == "soc":
            sc = max(float(np.max(np.linalg.norm(a[sl], axis=1))), float(np.max(np.abs(b[sl]))), 1e-12)
            a[sl] /= sc
            b[sl] /= sc
            scales[sl] = sc
        else:
            for i in range(off, off + dim):
                sc = max(float(np.linalg.norm(a[i])), abs(float(b[i])), 1e-12)
                a[i] /= sc
                b[i] /= sc
                scales[i] = sc
        off += dim
    return ConeProgram(c=prog.c, A=a, b=b, cones=prog.cones, row_scales=scales)


def extract_solution(x: np.ndarray, layout: VariableLayout):
    """Map a solver vector back to (W, p, t, eta, alpha); W is n_t x users complex."""
    if x.shape != (layout.n,):
        raise ValueError(f"x has length {x.shape}, layout expects {layout.n}")
    w = np.empty((layout.n_t, layout.users), dtype=complex)
    for k in range(layout.users):
        w[:, k] = x[layout.re_w(k)] + 1j * x[layout.im_w(k)]
    t = np.array([x[layout.t_index(k)] for k in range(layout.users)])
    return w, float(x[layout.p_index]), t, float(x[layout.eta_index]), float(x[layout.alpha_index])


def encode_solution(layout: VariableLayout, w: np.ndarray, p: float, t, eta: float, alpha: float) -> np.ndarray:
    """Inverse of extract_solution (used by round-trip and feasibility tests)."""
    x = np.zeros(layout.n)
    for k in range(layout.users):
        x[layout.re_w(k)] = w[:, k].real
        x[layout.im_w(k)] = w[:, k].imag
    x[layout.p_index] = p
    for k in range(layout.users):
        x[layout.t_index(k)] = t[k]
    x[layout.eta_index] = eta
    x[layout.alpha_index] = alpha
    return x


def max_violation(prog: ConeProgram, x: np.ndarray) -> float:
    """Largest blockwise cone violation of s = b - Ax (0 means feasible)."""
    s = prog.b - prog.A @ x
    worst = 0.0
    off = 0
    for kind, dim in prog.cones:
        blk = s[off : off + dim]
        if kind == "zero":
            worst = max(worst, float(np.max(np.abs(blk))))
        elif kind == "nonneg":
            worst = max(worst, float(np.max(-blk, initial=0.0)))
        else:
            worst = max(worst, float(np.linalg.norm(blk[1:]) - blk[0]))
        off += dim
    return worst


def structurally_infeasible(spec: ProblemSpec) -> bool:
    """Cheap per-user necessary-condition check for the robust builders.

    For any beamformer with ||w_k||_2 = 1, the shared bound variables satisfy
    eta >= f and alpha >= f with f = 1/sqrt(n_t) for the l1 builder (entrywise
    and row bounds) and f = 1 for the l2 builder (norm and Frobenius bounds),
    while Re(hhat^H w_k) <= ||hhat_k||.  The numerator/denominator pair is
    then unsatisfiable at every scale unless
        beta_k^2 (||hhat_k|| - eps_k f)^2 > ||hhat_k||^2 + (eps_k f)^2.
    Returns True only when that fails for some user, i.e. the program is
    provably infeasible; False is inconclusive.
    """
    f = 1.0 / np.sqrt(spec.n_t) if spec.kind == "l1" else 1.0
    betas = spec.betas
    for k in range(spec.users):
        big_h = float(np.linalg.norm(spec.hhat[k]))
        pen = spec.epsilons[k] * f
        lhs = betas[k] ** 2 * max(big_h - pen, 0.0) ** 2
        rhs = big_h**2 + pen**2
        if lhs <= rhs:
            return True
    return False


def save_program(prog: ConeProgram, path: str) -> None:
    doc = {
        "m": prog.m,
        "n": prog.n,
        "c": [float(v) for v in prog.c],
        "A": [float(v) for v in prog.A.reshape(-1)],
        "b": [float(v) for v in prog.b],
        "cones": [{"type": kind, "dim": dim} for kind, dim in prog.cones],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_program(path: str) -> ConeProgram:
    with open(path) as fh:
        doc = json.load(fh)
    m, n = int(doc["m"]), int(doc["n"])
    return ConeProgram(
        c=np.asarray(doc["c"], dtype=float),
        A=np.asarray(doc["A"], dtype=float).reshape(m, n),
        b=np.asarray(doc["b"], dtype=float),
        cones=[(blk["type"], int(blk["dim"])) for blk in doc["cones"]],
    )
