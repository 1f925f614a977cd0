"""Step 1 of the pipeline: Hankel-matrix estimation by least squares.

Two routes are provided: the bank of f causal ARX regressions (PARSIM) and
the classical one-step regression that estimates the Hankel matrix and the
input Toeplitz matrix simultaneously.  Both solve their least-squares
problems through a rank-revealing SVD (LAPACK gelsd) rather than the normal
equations, since the regressor conditioning degrades with large past
horizons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lstsq

from .exceptions import RankDeficiencyError
from .hankel import HorizonConfig, RegressorBundle, empirical_covariance

DEFAULT_RANK_TOL = 1e-10  # relative sigma_min threshold for PE failure

PARSIM_BANK = "parsim_bank"
ONE_STEP = "one_step"


@dataclass(frozen=True)
class HankelEstimate:
    """Estimated Hankel-like matrix plus the per-block regression estimates.

    For method="parsim_bank", ``thetas[i-1]`` is the full i-th regression
    estimate [Gamma_fi L_p, G_fi] and row block i of ``hfp`` equals its
    leading p(n_y+n_u) columns by construction.  For method="one_step"
    there is a single theta = [H_fp, G_f].
    """

    hfp: np.ndarray
    thetas: tuple[np.ndarray, ...]
    method: str
    cfg: HorizonConfig

    def g_fi(self, i: int, n_y: int, n_u: int) -> np.ndarray:
        """Estimated input-channel block G_fi of the i-th regression."""
        if self.method != PARSIM_BANK:
            raise ValueError("g_fi is only defined for the PARSIM bank")
        d0 = self.hfp.shape[1]
        return self.thetas[i - 1][:, d0:d0 + i * n_u]


def _solve_block(phi: np.ndarray, target: np.ndarray, rank_tol: float | None,
                 block: int | None) -> np.ndarray:
    """Least squares target = Theta @ phi, with a PE rank gate.

    rank_tol=None applies DEFAULT_RANK_TOL; rank_tol=0 disables the gate and
    returns the minimum-norm solution (needed for noise-free records, whose
    regressors are exactly rank deficient).
    """
    tol = DEFAULT_RANK_TOL if rank_tol is None else rank_tol
    theta_t, _, _, sv = lstsq(phi.T, target.T, lapack_driver="gelsd")
    if tol > 0:
        # the Gram Phi Phi' (d x d) is invertible iff Phi has d singular
        # values above the threshold; a wide shortfall (N < d) counts too
        d = phi.shape[0]
        smin = float(sv[-1]) if len(sv) == d else 0.0
        if sv[0] == 0.0 or smin < tol * sv[0]:
            where = f" in block i={block}" if block is not None else ""
            raise RankDeficiencyError(
                f"regressor rank deficient{where}: sigma_min = {smin:.3g}, "
                f"sigma_max = {sv[0]:.3g}; persistence of excitation fails "
                f"(more samples or a richer input are required)",
                block=block, sigma_min=smin, sigma_max=float(sv[0]))
    return theta_t.T


def fit_parsim(bundle: RegressorBundle,
               rank_tol: float | None = None) -> HankelEstimate:
    """Estimate the Hankel-like matrix by the bank of f ARX regressions.

    For each i = 1..f the i-th future output block is regressed on
    [Z_p; U_i]; the leading p(n_y+n_u) columns of the f estimates are
    stacked into the Hankel estimate.  The f regressions are independent.

    Raises:
        RankDeficiencyError: some regressor fails the PE gate (identifies
            the offending i and its smallest singular value).
    """
    d0 = bundle.p * (bundle.n_y + bundle.n_u)
    thetas = []
    rows = []
    for i in range(1, bundle.f + 1):
        theta = _solve_block(bundle.phi(i), bundle.y_fi(i), rank_tol, i)
        thetas.append(theta)
        rows.append(theta[:, :d0])
    return HankelEstimate(hfp=np.vstack(rows), thetas=tuple(thetas),
                          method=PARSIM_BANK, cfg=bundle.cfg)


def fit_one_step(bundle: RegressorBundle,
                 rank_tol: float | None = None) -> HankelEstimate:
    """Estimate [H_fp, G_f] in a single regression of Y_f on [Z_p; U_f]."""
    theta = _solve_block(bundle.phi(bundle.f), bundle.yf, rank_tol, None)
    d0 = bundle.p * (bundle.n_y + bundle.n_u)
    return HankelEstimate(hfp=theta[:, :d0], thetas=(theta,),
                          method=ONE_STEP, cfg=bundle.cfg)


def projection_hankel(bundle: RegressorBundle) -> np.ndarray:
    """Hankel estimate by the explicit projection formula
    Y_f P Z_p' (Z_p P Z_p')^{-1} with P the U_f-complement projector.

    Computed through factored products (no N x N projector is formed); equal
    to the leading block of :func:`fit_one_step` by the block-inverse
    identity, which the tests assert.  Kept as an independent route.
    """
    uf, zp, yf = bundle.uf, bundle.zp, bundle.yf
    s = uf @ uf.T
    zu = zp @ uf.T
    yu = yf @ uf.T
    y_pi_z = yf @ zp.T - yu @ np.linalg.solve(s, zu.T)
    z_pi_z = zp @ zp.T - zu @ np.linalg.solve(s, zu.T)
    return np.linalg.solve(z_pi_z.T, y_pi_z.T).T


@dataclass(frozen=True)
class PeCheck:
    satisfied: bool
    lambda_min: float
    floor: float


def check_pe(bundle: RegressorBundle, i: int, sigma_bar_sq: float) -> PeCheck:
    """Compare the smallest empirical covariance eigenvalue to a PE floor."""
    lam = float(np.linalg.eigvalsh(empirical_covariance(bundle, i))[0])
    return PeCheck(satisfied=bool(lam >= sigma_bar_sq), lambda_min=lam,
                   floor=float(sigma_bar_sq))
