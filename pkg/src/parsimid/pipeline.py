"""End-to-end identification: regression -> weighted SVD -> realization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hankel import HorizonConfig, RegressorBundle, build_bundle
from .lti import Trajectory
from .realization import (
    BalancedRealization,
    SystemEstimate,
    realize_cva,
    realize_moesp,
    weighted_svd_truncate,
)
from .regression import HankelEstimate, fit_parsim
from .weighting import WeightingKind, WeightingPair, build_weighting


@dataclass(frozen=True)
class PipelineResult:
    bundle: RegressorBundle
    estimate: HankelEstimate
    pair: WeightingPair
    balanced: BalancedRealization
    systems: dict[str, SystemEstimate]


def identify(traj: Trajectory, p: int, f: int, n_x: int,
             weighting: WeightingKind | str = WeightingKind.MOESP,
             realizations: tuple[str, ...] = ("moesp", "cva"),
             n: int | None = None,
             rank_tol: float | None = None) -> PipelineResult:
    """Run the full pipeline on a trajectory.

    Args:
        traj: input/output record.
        p, f: past and future horizons.
        n_x: model order for the rank truncation (always explicit).
        weighting: weighting pair kind for the SVD step.
        realizations: subset of {"moesp", "cva"} to realize.
        n: Hankel column count; defaults to the largest the record allows.
        rank_tol: PE gate for the regressions (0 disables; needed for
            noise-free records, whose regressors are exactly rank deficient).
    """
    cfg = HorizonConfig(p=p, f=f, n=n) if n is not None \
        else HorizonConfig.from_nbar(p, f, traj.nbar)
    bundle = build_bundle(traj, cfg)
    estimate = fit_parsim(bundle, rank_tol=rank_tol)
    pair = build_weighting(weighting, bundle)
    balanced = weighted_svd_truncate(estimate, pair, n_x)
    systems: dict[str, SystemEstimate] = {}
    for kind in realizations:
        if kind == "moesp":
            systems[kind] = realize_moesp(balanced, bundle.n_y, bundle.n_u)
        elif kind == "cva":
            systems[kind] = realize_cva(balanced, bundle)
        else:
            raise ValueError(f"unknown realization {kind!r}")
    return PipelineResult(bundle=bundle, estimate=estimate, pair=pair,
                          balanced=balanced, systems=systems)


def dominant_pole_error(est: SystemEstimate, true_a: np.ndarray) -> float:
    """Normalized error of the dominant pole, |lam_hat - lam|/|lam|.

    The dominant true eigenvalue is compared against the nearest estimated
    eigenvalue, which keeps the metric similarity invariant.
    """
    true_eigs = np.linalg.eigvals(np.atleast_2d(true_a))
    lam = true_eigs[np.argmax(np.abs(true_eigs))]
    est_eigs = np.linalg.eigvals(np.atleast_2d(est.a))
    nearest = est_eigs[np.argmin(np.abs(est_eigs - lam))]
    return float(np.abs(nearest - lam) / np.abs(lam))
