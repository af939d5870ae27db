"""Complex linear-algebra primitives, the angular DFT basis, and seeded RNG streams.

Everything downstream (channel synthesis, cone program builders, oracles)
works with dense complex vectors in the angular beam basis built here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla


@dataclass(frozen=True)
class RngStream:
    """Splittable deterministic random stream.

    A stream is identified by a 64-bit seed plus a path of substream ids.
    Identical (seed, path) always yields a bit-identical draw sequence,
    independent of when or where the stream is consumed, so Monte Carlo
    cells can run in any order (or in parallel) and reproduce exactly.
    """

    seed: int
    path: tuple[int, ...] = field(default=())

    def substream(self, *ids: int) -> "RngStream":
        """Child stream; distinct id paths are statistically independent."""
        return RngStream(self.seed, self.path + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))


def inner(x: np.ndarray, y: np.ndarray) -> complex:
    """Hermitian inner product x^H y (conjugate-linear in x)."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"shape mismatch for inner product: {x.shape} vs {y.shape}")
    return complex(np.vdot(x, y))


def norms(x: np.ndarray) -> tuple[float, float, float]:
    """(l1, l2, linf) of a complex vector, over entry moduli."""
    a = np.abs(np.asarray(x))
    return float(a.sum()), float(np.sqrt((a * a).sum())), float(a.max(initial=0.0))


def _dft_matrix(n: int) -> np.ndarray:
    m = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(m, m) / n) / np.sqrt(n)


@lru_cache(maxsize=32)
def dft_basis(n_v: int, n_h: int) -> np.ndarray:
    """Unitary angular basis U = F_{n_h} kron F_{n_v} for an n_v x n_h planar array.

    Channels are stored column-stacked with the vertical index fastest, which
    is exactly the ordering the Kronecker product above assumes.  Columns of U
    are mutually orthogonal beams; the angular representation of a spatial
    channel h is U^H h.
    """
    if n_v < 1 or n_h < 1:
        raise ValueError("array dimensions must be >= 1")
    return np.kron(_dft_matrix(n_h), _dft_matrix(n_v))


def chol_solve(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve M X = B for symmetric positive-definite M via Cholesky.

    Raises scipy.linalg.LinAlgError when M is not SPD.
    """
    factor = sla.cho_factor(np.asarray(m, dtype=float), lower=True)
    return sla.cho_solve(factor, np.asarray(b, dtype=float))
