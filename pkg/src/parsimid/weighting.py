"""Weighting-matrix pairs for the SVD step.

The five standard pairs:

    OKID    W1 = I                                W2 = I
    N4SID   W1 = I                                W2 = (Z Z'/N)^{1/2}
    MOESP   W1 = I                                W2 = (Z P Z'/N)^{1/2}
    IVM     W1 = (Y P Y'/N)^{-1/2}                W2 = (Z P Z'/N)(Z Z'/N)^{-1/2}
    CVA     W1 = (Y P Y'/N)^{-1/2}                W2 = (Z P Z'/N)^{1/2}

with Z = Z_p, Y = Y_f and P the orthogonal complement projector of U_f.
Matrix square roots are symmetric principal roots via eigendecomposition;
near-singular inner matrices fail loudly instead of being clamped or
regularized, since every downstream robustness quantity assumes the strictly
positive-definite regime.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import NotPositiveDefiniteError
from .hankel import RegressorBundle


class WeightingKind(str, Enum):
    OKID = "okid"
    N4SID = "n4sid"
    MOESP = "moesp"
    IVM = "ivm"
    CVA = "cva"
    CUSTOM = "custom"

    def __str__(self) -> str:  # CLI / CSV friendliness
        return self.value


DATA_DEPENDENT = (WeightingKind.N4SID, WeightingKind.MOESP, WeightingKind.IVM,
                  WeightingKind.CVA)


def _eig_floor(m: np.ndarray) -> float:
    return 1e-12 * max(float(np.trace(m)) / m.shape[0], 1e-300)


def _eigh_checked(m: np.ndarray, what: str):
    sym_err = np.linalg.norm(m - m.T) / max(np.linalg.norm(m), 1e-300)
    if sym_err > 1e-10:
        raise NotPositiveDefiniteError(
            f"{what} is not symmetric (relative asymmetry {sym_err:.3g})")
    return np.linalg.eigh(0.5 * (m + m.T))


def sqrt_psd(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Symmetric principal square root of a symmetric PSD matrix.

    Raises:
        NotPositiveDefiniteError: an eigenvalue falls below -floor, where
            floor = 1e-12 trace(m)/dim.  No clamping is applied beyond
            flushing roundoff-negative eigenvalues inside the floor to zero.
    """
    w, v = _eigh_checked(m, what)
    floor = _eig_floor(m)
    if w[0] < -floor:
        raise NotPositiveDefiniteError(
            f"{what} is not PSD: min eigenvalue {w[0]:.6g} "
            f"(floor {-floor:.3g})", min_eigenvalue=float(w[0]))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def inv_sqrt_psd(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Symmetric principal root of the inverse of a symmetric PD matrix.

    Raises:
        NotPositiveDefiniteError: min eigenvalue at or below the floor
            1e-12 trace(m)/dim (insufficient excitation or N too small).
    """
    w, v = _eigh_checked(m, what)
    floor = _eig_floor(m)
    if w[0] <= floor:
        raise NotPositiveDefiniteError(
            f"{what} is numerically singular: min eigenvalue {w[0]:.6g} "
            f"<= floor {floor:.3g}", min_eigenvalue=float(w[0]))
    return (v / np.sqrt(w)) @ v.T


@dataclass(frozen=True)
class WeightingDiagnostics:
    w1_norm: float
    w2_norm: float
    w1_inv_norm: float
    w2_inv_norm: float
    min_eig_before_sqrt: float


@dataclass(frozen=True)
class WeightingPair:
    """An invertible (W1, W2) pair with conditioning diagnostics."""

    w1: np.ndarray
    w2: np.ndarray
    kind: WeightingKind
    diagnostics: WeightingDiagnostics

    @property
    def w1_inv_norm(self) -> float:
        return self.diagnostics.w1_inv_norm

    @property
    def w2_inv_norm(self) -> float:
        return self.diagnostics.w2_inv_norm


def _check_invertible(m: np.ndarray, what: str) -> float:
    """Return ||m^{-1}|| (spectral), failing when m is near singular."""
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise NotPositiveDefiniteError(
            f"{what} is numerically singular "
            f"(sigma_min/sigma_max = {sv[-1] / max(sv[0], 1e-300):.3g})",
            min_eigenvalue=float(sv[-1]))
    return float(1.0 / sv[-1])


def _pair(w1: np.ndarray, w2: np.ndarray, kind: WeightingKind,
          min_eig: float) -> WeightingPair:
    diag = WeightingDiagnostics(
        w1_norm=float(np.linalg.norm(w1, 2)),
        w2_norm=float(np.linalg.norm(w2, 2)),
        w1_inv_norm=_check_invertible(w1, "W1"),
        w2_inv_norm=_check_invertible(w2, "W2"),
        min_eig_before_sqrt=float(min_eig),
    )
    return WeightingPair(w1=w1, w2=w2, kind=kind, diagnostics=diag)


def custom_pair(w1: np.ndarray, w2: np.ndarray) -> WeightingPair:
    return _pair(np.asarray(w1, dtype=float), np.asarray(w2, dtype=float),
                 WeightingKind.CUSTOM, min_eig=float("nan"))


def build_weighting(kind: WeightingKind | str,
                    bundle: RegressorBundle) -> WeightingPair:
    """Construct the (W1, W2) pair of the requested kind from the data.

    The U_f-complement products are computed in factored form
    Z P Z' = Z Z' - (Z U') (U U')^{-1} (U Z'); the N x N projector is never
    materialized.

    Raises:
        NotPositiveDefiniteError: an inner matrix that must be PD before a
            (inverse) square root is not; the error carries its smallest
            eigenvalue, which signals insufficient excitation or too few
            samples.
    """
    kind = WeightingKind(kind)
    n = bundle.n
    fny = bundle.f * bundle.n_y
    dz = bundle.zp.shape[0]
    if kind is WeightingKind.OKID:
        return _pair(np.eye(fny), np.eye(dz), kind, min_eig=float("nan"))

    zp, uf, yf = bundle.zp, bundle.uf, bundle.yf
    s = uf @ uf.T
    w_s = np.linalg.eigvalsh(s)
    if w_s[0] <= 1e-12 * max(w_s[-1], 1e-300):
        raise NotPositiveDefiniteError(
            f"U_f U_f' is singular (min eigenvalue {w_s[0]:.3g}); "
            f"data-dependent weightings are undefined",
            min_eigenvalue=float(w_s[0]))
    zu = zp @ uf.T
    z_pi_z = (zp @ zp.T - zu @ np.linalg.solve(s, zu.T)) / n
    z_pi_z = 0.5 * (z_pi_z + z_pi_z.T)

    if kind is WeightingKind.N4SID:
        inner = (zp @ zp.T) / n
        min_eig = float(np.linalg.eigvalsh(inner)[0])
        return _pair(np.eye(fny), sqrt_psd(inner, "Z_p Z_p'/N"), kind, min_eig)

    min_eig = float(np.linalg.eigvalsh(z_pi_z)[0])
    floor = _eig_floor(z_pi_z)
    if min_eig <= floor:
        raise NotPositiveDefiniteError(
            f"Z_p P Z_p'/N is not positive definite "
            f"(min eigenvalue {min_eig:.6g}); weighting {kind.value!r} "
            f"requires more excitation or samples", min_eigenvalue=min_eig)

    if kind is WeightingKind.MOESP:
        return _pair(np.eye(fny), sqrt_psd(z_pi_z, "Z_p P Z_p'/N"), kind,
                     min_eig)

    yu = yf @ uf.T
    y_pi_y = (yf @ yf.T - yu @ np.linalg.solve(s, yu.T)) / n
    y_pi_y = 0.5 * (y_pi_y + y_pi_y.T)
    w1 = inv_sqrt_psd(y_pi_y, "Y_f P Y_f'/N")
    min_eig = min(min_eig, float(np.linalg.eigvalsh(y_pi_y)[0]))

    if kind is WeightingKind.CVA:
        return _pair(w1, sqrt_psd(z_pi_z, "Z_p P Z_p'/N"), kind, min_eig)

    if kind is WeightingKind.IVM:
        # W2 = (Z P Z'/N)(Z Z'/N)^{-1/2}: intentionally non-symmetric.
        w2 = z_pi_z @ inv_sqrt_psd((zp @ zp.T) / n, "Z_p Z_p'/N")
        return _pair(w1, w2, kind, min_eig)

    raise NotPositiveDefiniteError(f"cannot build pair for kind {kind!r}")
