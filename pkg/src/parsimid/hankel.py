"""Block-Hankel data matrices and empirical covariances.

Conventions: past data is anchored at sample 1, so with past horizon p the
future block rows start at sample p+1, and a record of length
nbar = N + p + f - 1 is consumed exactly by N Hankel columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ModelInvariantError, NotPositiveDefiniteError
from .lti import Trajectory


@dataclass(frozen=True)
class HorizonConfig:
    """Past/future horizons and Hankel column count."""

    p: int
    f: int
    n: int

    def __post_init__(self):
        if self.p < 1 or self.f < 1 or self.n < 1:
            raise ModelInvariantError(
                f"p, f, n must all be >= 1, got ({self.p}, {self.f}, {self.n})")

    @property
    def nbar(self) -> int:
        return self.n + self.p + self.f - 1

    @classmethod
    def from_nbar(cls, p: int, f: int, nbar: int) -> "HorizonConfig":
        """Largest column count N that a record of length nbar supports."""
        n = nbar - p - f + 1
        if n < 1:
            raise ModelInvariantError(
                f"need nbar >= p + f = {p + f}, got {nbar}")
        return cls(p=p, f=f, n=n)


def block_hankel(data: np.ndarray, start: int, blocks: int,
                 n_cols: int) -> np.ndarray:
    """Stack ``blocks`` consecutive rows of lagged data.

    Block r, column c equals data[start + c + r], i.e. the sample at time
    start + c + r + 1 in 1-based indexing.
    """
    d = data.shape[1]
    out = np.empty((blocks * d, n_cols))
    for r in range(blocks):
        out[r * d:(r + 1) * d] = data[start + r:start + r + n_cols].T
    return out


@dataclass(frozen=True)
class RegressorBundle:
    """All data matrices derived from one trajectory at a fixed horizon.

    ``zp_plus`` is ``zp`` shifted forward one step and trimmed to N-1
    columns, so (zp[:, :N-1], zp_plus) are aligned column pairs; ``uf1`` and
    ``yf1`` carry the same N-1 alignment.
    """

    cfg: HorizonConfig
    n_u: int
    n_y: int
    zp: np.ndarray       # (p(n_y+n_u), N)   [Y_p; U_p]
    uf: np.ndarray       # (f n_u, N)
    yf: np.ndarray       # (f n_y, N)
    zp_plus: np.ndarray  # (p(n_y+n_u), N-1)
    uf1: np.ndarray      # (n_u, N-1)
    yf1: np.ndarray      # (n_y, N-1)

    @property
    def p(self) -> int:
        return self.cfg.p

    @property
    def f(self) -> int:
        return self.cfg.f

    @property
    def n(self) -> int:
        return self.cfg.n

    def u_i(self, i: int) -> np.ndarray:
        """First i block rows of U_f, shape (i n_u, N)."""
        if not 0 <= i <= self.f:
            raise ModelInvariantError(f"need 0 <= i <= f={self.f}, got {i}")
        return self.uf[:i * self.n_u]

    def y_fi(self, i: int) -> np.ndarray:
        """i-th future output block row (1-based), shape (n_y, N)."""
        if not 1 <= i <= self.f:
            raise ModelInvariantError(f"need 1 <= i <= f={self.f}, got {i}")
        return self.yf[(i - 1) * self.n_y:i * self.n_y]

    def phi(self, i: int) -> np.ndarray:
        """Regressor Phi_{p,i} = [Z_p; U_i]; Phi_{p,0} = Z_p."""
        if i == 0:
            return self.zp
        return np.vstack([self.zp, self.u_i(i)])

    def problem_dimension(self, i: int) -> int:
        return self.p * (self.n_u + self.n_y) + i * self.n_u


def build_bundle(traj: Trajectory, cfg: HorizonConfig) -> RegressorBundle:
    """Build every Hankel matrix of the bundle from a trajectory.

    Raises:
        ModelInvariantError: if the record is shorter than N + p + f - 1.
    """
    if traj.nbar < cfg.nbar:
        raise ModelInvariantError(
            f"trajectory too short: need p+f+N-1 = {cfg.nbar} samples, "
            f"have {traj.nbar}")
    p, f, n = cfg.p, cfg.f, cfg.n
    yp = block_hankel(traj.y, 0, p, n)
    up = block_hankel(traj.u, 0, p, n)
    zp = np.vstack([yp, up])
    uf = block_hankel(traj.u, p, f, n)
    yf = block_hankel(traj.y, p, f, n)
    n_y = traj.n_y
    n_u = traj.n_u
    return RegressorBundle(
        cfg=cfg, n_u=n_u, n_y=n_y, zp=zp, uf=uf, yf=yf,
        zp_plus=zp[:, 1:], uf1=uf[:n_u, :n - 1] if n > 1 else uf[:n_u, :0],
        yf1=yf[:n_y, :n - 1] if n > 1 else yf[:n_y, :0])


def projector_complement(uf: np.ndarray) -> np.ndarray:
    """Orthogonal-complement projector I - U_f'(U_f U_f')^{-1} U_f (N x N).

    This forms the full N x N matrix and is intended for diagnostics and
    small problems; the regression and weighting code uses the factored
    products instead.

    Raises:
        NotPositiveDefiniteError: U_f U_f' numerically singular.
    """
    s = uf @ uf.T
    w = np.linalg.eigvalsh(s)
    if w[0] <= 1e-12 * max(w[-1], 1e-300):
        raise NotPositiveDefiniteError(
            f"U_f U_f' is singular (min eigenvalue {w[0]:.3g}); the future "
            f"input rows do not span an invertible Gram matrix",
            min_eigenvalue=float(w[0]))
    n = uf.shape[1]
    return np.eye(n) - uf.T @ np.linalg.solve(s, uf)


def empirical_covariance(bundle: RegressorBundle, i: int) -> np.ndarray:
    """Empirical regressor covariance Phi_{p,i} Phi_{p,i}' / N."""
    phi = bundle.phi(i)
    return (phi @ phi.T) / bundle.n
