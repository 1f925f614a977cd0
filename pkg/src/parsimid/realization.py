"""Steps 2 and 3: weighted SVD truncation and system-matrix realization.

The truncation produces balanced factors

    Gamma_f = W1^{-1} U1 L1^{1/2},   L_p = L1^{1/2} V1' W2^{-1},

whose product is the best rank-n_x approximation of the weighted Hankel
estimate (Eckart-Young).  Two realizations follow: a regression route using
the reconstructed state sequence, and a shift-invariance route reading the
matrices off the balanced factors directly.  All accuracy statements about
realizations are phrased through similarity invariants (eigenvalues, Markov
parameters), never raw matrix entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lstsq

from .exceptions import ModelInvariantError, OrderTieError, RankDeficiencyError
from .hankel import RegressorBundle
from .regression import HankelEstimate
from .weighting import WeightingKind, WeightingPair

CVA_TYPE = "cva"
MOESP_TYPE = "moesp"

SVD_TIE_TOL = 1e-12


@dataclass(frozen=True)
class BalancedRealization:
    """Rank-n_x balanced factors of a weighted Hankel estimate."""

    gamma_f: np.ndarray          # (f n_y, n_x)
    lp: np.ndarray               # (n_x, p(n_y+n_u))
    singular_values: np.ndarray  # full descending spectrum of W1 H W2
    n_x: int
    weighting: WeightingKind


@dataclass(frozen=True)
class SystemEstimate:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    realization: str
    weighting: WeightingKind

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.a)

    def markov(self, count: int) -> np.ndarray:
        from .lti import markov_sequence

        return markov_sequence(self.a, self.b, self.c, count)


def weighted_svd_truncate(est: HankelEstimate, pair: WeightingPair,
                          n_x: int) -> BalancedRealization:
    """Truncate the weighted Hankel estimate to rank n_x balanced factors.

    Raises:
        OrderTieError: singular values n_x and n_x+1 agree to within
            1e-12 of the largest one, making the order cut ambiguous.
        ModelInvariantError: n_x exceeds the matrix dimensions.
    """
    m = pair.w1 @ est.hfp @ pair.w2
    if n_x < 1 or n_x > min(m.shape):
        raise ModelInvariantError(
            f"order n_x={n_x} out of range for a {m.shape} matrix")
    u, sv, vt = np.linalg.svd(m)
    if n_x < len(sv) and sv[n_x - 1] - sv[n_x] <= SVD_TIE_TOL * max(sv[0], 1e-300):
        raise OrderTieError(
            f"singular values sigma_{n_x} = {sv[n_x - 1]:.6g} and "
            f"sigma_{n_x + 1} = {sv[n_x]:.6g} are tied; the order-{n_x} "
            f"truncation is ambiguous")
    root = np.sqrt(sv[:n_x])
    gamma = np.linalg.solve(pair.w1, u[:, :n_x] * root)
    lp = np.linalg.solve(pair.w2.T, vt[:n_x].T * root).T
    return BalancedRealization(gamma_f=gamma, lp=lp, singular_values=sv,
                               n_x=n_x, weighting=pair.kind)


def suggest_order(singular_values: np.ndarray) -> int:
    """Largest-relative-gap order suggestion (diagnostic only, never applied)."""
    sv = np.asarray(singular_values, dtype=float)
    sv = sv[sv > 0]
    if len(sv) < 2:
        return max(len(sv), 1)
    ratios = sv[:-1] / sv[1:]
    return int(np.argmax(ratios)) + 1


def realize_cva(real: BalancedRealization,
                bundle: RegressorBundle) -> SystemEstimate:
    """System matrices by regression on the reconstructed state sequence.

    The state estimates X = L_p Z_p and its one-step shift use the bundle's
    aligned N-1 column pairs; C comes from the output equation and [A, B]
    from the state equation.

    Raises:
        RankDeficiencyError: reconstructed state sequence not full row rank.
    """
    n = bundle.n
    xk = real.lp @ bundle.zp[:, :n - 1]
    xk_plus = real.lp @ bundle.zp_plus
    sv = np.linalg.svd(xk, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= 1e-12 * sv[0]:
        raise RankDeficiencyError(
            f"state-sequence estimate is rank deficient "
            f"(sigma_min = {sv[-1]:.3g})", sigma_min=float(sv[-1]),
            sigma_max=float(sv[0]))
    c_t, *_ = lstsq(xk.T, bundle.yf1.T, lapack_driver="gelsd")
    reg = np.vstack([xk, bundle.uf1])
    ab_t, *_ = lstsq(reg.T, xk_plus.T, lapack_driver="gelsd")
    ab = ab_t.T
    n_x = real.n_x
    return SystemEstimate(a=ab[:, :n_x], b=ab[:, n_x:], c=c_t.T,
                          realization=CVA_TYPE, weighting=real.weighting)


def realize_moesp(real: BalancedRealization, n_y: int,
                  n_u: int) -> SystemEstimate:
    """System matrices by shift invariance of the balanced factors.

    C is the first n_y rows of Gamma_f; A solves the shift equation between
    the first and last f-1 block rows; B is the last n_u columns of L_p
    (the reverse-ordered controllability factor ends in the B block; the
    published index form assumes n_u = n_y and reduces to this).

    Raises:
        ModelInvariantError: f = 1 (shift invariance needs two block rows).
        RankDeficiencyError: leading f-1 block rows of Gamma_f rank deficient.
    """
    fny = real.gamma_f.shape[0]
    if fny < 2 * n_y:
        raise ModelInvariantError(
            "shift-invariance realization requires f >= 2")
    gm = real.gamma_f[:fny - n_y]
    gp = real.gamma_f[n_y:]
    sv = np.linalg.svd(gm, compute_uv=False)
    if sv[0] == 0.0 or sv[min(real.n_x, len(sv)) - 1] <= 1e-12 * sv[0]:
        raise RankDeficiencyError(
            f"leading block rows of Gamma_f are rank deficient "
            f"(sigma_{real.n_x} = {sv[-1]:.3g})",
            sigma_min=float(sv[-1]), sigma_max=float(sv[0]))
    a_t, *_ = lstsq(gm, gp, lapack_driver="gelsd")
    return SystemEstimate(a=a_t, b=real.lp[:, -n_u:],
                          c=real.gamma_f[:n_y],
                          realization=MOESP_TYPE, weighting=real.weighting)


def procrustes_align(factor: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Orthogonal T minimizing ||factor - reference T||_F.

    Solves the orthogonal Procrustes problem through the SVD of
    reference' factor.

    Raises:
        RankDeficiencyError: the cross-Gramian is rank deficient, so the
            minimizer is not unique.
    """
    m = reference.T @ factor
    u, sv, vt = np.linalg.svd(m)
    if sv[0] == 0.0 or sv[-1] <= 1e-12 * sv[0]:
        raise RankDeficiencyError(
            f"cross-Gramian is degenerate (sigma_min = {sv[-1]:.3g}); "
            f"orthogonal alignment is not unique",
            sigma_min=float(sv[-1]), sigma_max=float(sv[0]))
    return u @ vt
