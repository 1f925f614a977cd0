"""Computable finite-sample quantities: PE floors, burn-in times, error
budgets, SVD robustness, and realization error bounds.

Everything here is deterministic formula evaluation against a known model
(oracle mode) or against data products.  Statements that the underlying
theory makes "with probability at least 1 - delta" are evaluated as their
right-hand sides only; no probabilistic certification is attempted.

A note on the PE floor: the floor is implemented as

    sigma_bar^2 = sigma_min(T_{p,i} Lambda_{u,e})^2 / 4,

the smallest singular value of the noise-to-regressor mixing matrix, which
is the quantity the underlying argument actually controls (the regressor
covariance dominates T Lambda Lambda' T' / 4 on the relevant event).  A
spectral-norm variant of the same expression appears in some statements of
the result but is strictly larger than the smallest covariance eigenvalue
on any well-conditioned example, so it cannot serve as a floor; the
min-singular-value form is both provable and empirically tight (a factor
of about 4 below the true smallest eigenvalue on the benchmark system).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ModelInvariantError,
    NotPositiveDefiniteError,
    SearchLimitError,
)
from .hankel import RegressorBundle
from .lti import (
    StateSpaceModel,
    extended_observability,
    markov_sequence,
    reversed_controllability,
    state_covariance,
    true_hankel,
)
from .realization import (
    BalancedRealization,
    procrustes_align,
    realize_cva,
    realize_moesp,
    weighted_svd_truncate,
)
from .regression import HankelEstimate
from .weighting import WeightingPair

SEARCH_CAP = 1 << 40


@dataclass(frozen=True)
class UniversalConstants:
    """Multipliers for the unspecified universal constants.

    They default to 1 and are reported separately; no acceptance-level
    statement asserts an absolute value that depends on them.
    """

    c: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0

    def as_dict(self) -> dict[str, float]:
        return {"c": self.c, "c1": self.c1, "c2": self.c2, "c3": self.c3}


@dataclass(frozen=True)
class BoundInputs:
    """Inputs for oracle-mode bound evaluation."""

    model: StateSpaceModel
    sigma_u: float
    p: int
    f: int
    i: int
    n: int
    delta: float
    beta: float | None = None
    constants: UniversalConstants = field(default_factory=UniversalConstants)

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ModelInvariantError(f"delta must be in (0,1), got {self.delta}")
        if self.i > self.f:
            raise ModelInvariantError(f"need i <= f, got i={self.i} f={self.f}")
        if self.p < 1 or self.f < 1 or self.i < 0 or self.n < 1:
            raise ModelInvariantError("p, f >= 1; i >= 0; n >= 1 required")


def problem_dimension(p: int, i: int, n_u: int, n_y: int) -> int:
    """Regression dimension p(n_u + n_y) + i n_u."""
    if p < 1 or i < 0:
        raise ModelInvariantError(f"need p >= 1 and i >= 0, got p={p} i={i}")
    return p * (n_u + n_y) + i * n_u


def toeplitz_g(model: StateSpaceModel, p: int) -> np.ndarray:
    """Lower-triangular input Toeplitz block: zero diagonal, subdiagonals
    C A^{j-1} B."""
    n_y, n_u = model.n_y, model.n_u
    mk = markov_sequence(model.a, model.b, model.c, max(p - 1, 0))
    g = np.zeros((p * n_y, p * n_u))
    for r in range(p):
        for c in range(r):
            g[r * n_y:(r + 1) * n_y, c * n_u:(c + 1) * n_u] = mk[r - c - 1]
    return g


def toeplitz_h(model: StateSpaceModel, p: int) -> np.ndarray:
    """Noise Toeplitz block: Sigma_e^{1/2} on the diagonal, subdiagonals
    C A^{j-1} K Sigma_e^{1/2}."""
    n_y = model.n_y
    ks = model.k @ model.sigma_e_half
    mk = markov_sequence(model.a, ks, model.c, max(p - 1, 0))
    h = np.zeros((p * n_y, p * n_y))
    for r in range(p):
        h[r * n_y:(r + 1) * n_y, r * n_y:(r + 1) * n_y] = model.sigma_e_half
        for c in range(r):
            h[r * n_y:(r + 1) * n_y, c * n_y:(c + 1) * n_y] = mk[r - c - 1]
    return h


def regressor_mixing(model: StateSpaceModel, p: int, i: int) -> np.ndarray:
    """Mixing matrix T_{p,i} mapping normalized noise/input stacks to the
    regressor: rows (y_p, u_p, u_i) against columns (u_p, u_i, e_p).

    For i = 0 the u_i row/column blocks are absent.
    """
    n_u, n_y = model.n_u, model.n_y
    gp = toeplitz_g(model, p)
    hp = toeplitz_h(model, p)
    d = problem_dimension(p, i, n_u, n_y)
    t = np.zeros((d, d))
    pu, iu, py = p * n_u, i * n_u, p * n_y
    t[:py, :pu] = gp
    t[:py, pu + iu:] = hp
    t[py:py + pu, :pu] = np.eye(pu)
    if i > 0:
        t[py + pu:, pu:pu + iu] = np.eye(iu)
    return t


def lambda_ue(model: StateSpaceModel, sigma_u: float, p: int,
              i: int) -> np.ndarray:
    """Diagonal normalizer: sigma_u on the (p+i) n_u input entries, 1 on the
    p n_y innovation entries."""
    return np.concatenate([
        np.full((p + i) * model.n_u, sigma_u),
        np.ones(p * model.n_y),
    ])


def sigma_bar_sq(model: StateSpaceModel, sigma_u: float, p: int,
                 i: int) -> float:
    """PE floor sigma_bar^2 = (sigma_min(T_{p,i} Lambda_{u,e}) / 2)^2."""
    t = regressor_mixing(model, p, i)
    tl = t * lambda_ue(model, sigma_u, p, i)[None, :]
    smin = float(np.linalg.svd(tl, compute_uv=False)[-1])
    return (smin / 2.0) ** 2


def mixing_norms(model: StateSpaceModel, sigma_u: float, p: int,
                 i: int) -> tuple[float, float]:
    """(||T_{p,i}||, ||Lambda_{u,e}||), the spectral norms used by the
    cross-term threshold."""
    t_norm = float(np.linalg.norm(regressor_mixing(model, p, i), 2))
    l_norm = float(max(sigma_u, 1.0))
    return t_norm, l_norm


def u_bar(n: int, delta: float, n_u: int) -> float:
    """Normalized input-magnitude envelope over n samples at confidence
    delta."""
    return n_u * math.sqrt(2.0 * n_u * math.log(32.0 * n_u * n / delta))


def e_bar(n: int, delta: float, n_y: int) -> float:
    return n_y * math.sqrt(2.0 * n_y * math.log(32.0 * n_y * n / delta))


def w_bar(n: int, delta: float, p: int, i: int, n_u: int, n_y: int) -> float:
    """Envelope for the normalized regressor noise stack."""
    return e_bar(n, delta, n_y) * math.sqrt(p) \
        + u_bar(n, delta, n_u) * math.sqrt(p + i)


def r_bar(n: int, delta: float, p: int, i: int, n_u: int, n_y: int) -> float:
    """Matrix-concentration radius 2 w_bar^2 sqrt(2 log(d/delta))."""
    d = problem_dimension(p, i, n_u, n_y)
    return 2.0 * w_bar(n, delta, p, i, n_u, n_y) ** 2 \
        * math.sqrt(2.0 * math.log(d / delta))


def c_ixe(model: StateSpaceModel, sigma_u: float, p: int, i: int, n: int,
          delta: float) -> float:
    """Cross-term envelope constant (grows logarithmically with n)."""
    d = problem_dimension(p, i, model.n_u, model.n_y)
    sx = state_covariance(model, sigma_u, n)
    sign, logdet = np.linalg.slogdet(
        np.eye(model.n_x) + (2.0 * model.n_x / delta) * sx)
    if sign <= 0:
        raise NotPositiveDefiniteError("state covariance term not PD")
    return 4.0 * float(logdet) + 8.0 * (d * math.log(5.0)
                                        + math.log(2.0 / delta))


def gamma_in(model: StateSpaceModel, sigma_u: float, p: int, i: int, n: int,
             delta: float) -> float:
    """Cross-term to excitation ratio 2 ||T|| ||Lambda|| sqrt(C/n)."""
    t_norm, l_norm = mixing_norms(model, sigma_u, p, i)
    return 2.0 * t_norm * l_norm \
        * math.sqrt(c_ixe(model, sigma_u, p, i, n, delta) / n)


def _search_smallest(pred, what: str) -> int:
    """Smallest integer n >= 1 with pred(n) true, by doubling + bisection.

    The returned n satisfies pred(n) and not pred(n-1); the predicates here
    are monotone in n apart from negligible logarithmic wiggle, which the
    bisection invariant tolerates.
    """
    n = 1
    while not pred(n):
        n *= 2
        if n > SEARCH_CAP:
            raise SearchLimitError(
                f"{what} exceeds the search cap 2^40; delta is too small or "
                f"the problem dimensions too large")
    if n == 1:
        return 1
    lo, hi = n // 2, n  # pred(lo) false, pred(hi) true
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class BurnIn:
    n_w: int
    n_phi: int
    n_pe: int


def burn_in(inputs: BoundInputs) -> BurnIn:
    """Resolve the implicit burn-in thresholds.

    N_W is the smallest n with n >= 4 r_bar(n)^2; N_Phi the smallest n with
    gamma_{i,n} <= min(1, sigma_bar^2); N_pe the smallest n satisfying both.
    Each returned value satisfies its defining inequality and violates it at
    n - 1.
    """
    m, su, p, i, dl = inputs.model, inputs.sigma_u, inputs.p, inputs.i, \
        inputs.delta
    n_w = _search_smallest(
        lambda n: n >= 4.0 * r_bar(n, dl, p, i, m.n_u, m.n_y) ** 2, "N_W")
    thresh = min(1.0, sigma_bar_sq(m, su, p, i))
    n_phi = _search_smallest(
        lambda n: gamma_in(m, su, p, i, n, dl) <= thresh, "N_Phi")
    return BurnIn(n_w=n_w, n_phi=n_phi, n_pe=max(n_w, n_phi))


def burn_in_growing_horizon(inputs: BoundInputs) -> BurnIn:
    """Burn-in thresholds with the past horizon tied to the sample count,
    p(n) = max(1, ceil(beta log n)).

    This is the regime the stacked-error statements quantify over; it needs
    ``inputs.beta``.  Each threshold is the smallest n satisfying its
    defining inequality with p evaluated at that same n.
    """
    if inputs.beta is None:
        raise ModelInvariantError("growing-horizon burn-in requires beta")
    m, su, i, dl, beta = inputs.model, inputs.sigma_u, inputs.i, \
        inputs.delta, inputs.beta

    def p_of(n: int) -> int:
        return max(1, math.ceil(beta * math.log(max(n, 2))))

    n_w = _search_smallest(
        lambda n: n >= 4.0 * r_bar(n, dl, p_of(n), i, m.n_u, m.n_y) ** 2,
        "N_W(growing p)")

    def phi_pred(n: int) -> bool:
        p = p_of(n)
        thresh = min(1.0, sigma_bar_sq(m, su, p, i))
        return gamma_in(m, su, p, i, n, dl) <= thresh

    n_phi = _search_smallest(phi_pred, "N_Phi(growing p)")
    return BurnIn(n_w=n_w, n_phi=n_phi, n_pe=max(n_w, n_phi))


def delta_u_log10(n: int, f: int, n_u: int) -> float:
    """log10 of the future-input Gram failure probability (diagnostic).

    The probability itself underflows double precision for any realistic n,
    so only its log is reported.
    """
    x = 2.0 * (n + f - 1) * n_u
    a = math.log(2.0 * f * n_u) ** 2
    return -a * math.log(x) ** 2 / math.log(10.0)


def population_covariance(model: StateSpaceModel, sigma_u: float, p: int,
                          i: int, n: int) -> np.ndarray:
    """Exact covariance of the regressor vector at the terminal column.

    With white input and white innovations, the state entering the column is
    independent of the window's inputs and innovations, so the covariance
    assembles from the state covariance at step n, the Toeplitz blocks, and
    diagonal input blocks.
    """
    if n < p + i:
        raise ModelInvariantError(f"need n >= p + i = {p + i}, got {n}")
    gp = toeplitz_g(model, p)
    hp = toeplitz_h(model, p)
    gam = extended_observability(model, p)
    sx = state_covariance(model, sigma_u, n)
    pu, iu, py = p * model.n_u, i * model.n_u, p * model.n_y
    d = py + pu + iu
    s = np.zeros((d, d))
    s[:py, :py] = gam @ sx @ gam.T + sigma_u ** 2 * (gp @ gp.T) + hp @ hp.T
    s[:py, py:py + pu] = sigma_u ** 2 * gp
    s[py:py + pu, :py] = sigma_u ** 2 * gp.T
    s[py:py + pu, py:py + pu] = sigma_u ** 2 * np.eye(pu)
    if iu:
        s[py + pu:, py + pu:] = sigma_u ** 2 * np.eye(iu)
    return 0.5 * (s + s.T)


def true_block_row(model: StateSpaceModel, p: int, i: int) -> np.ndarray:
    """Exact regression target of block i: [C A^{i-1} L_p, G_fi], the
    coefficient the i-th bank regression estimates up to truncation bias."""
    gamma_fi = model.c @ np.linalg.matrix_power(model.a, i - 1)
    gl = gamma_fi @ reversed_controllability(model, p)
    mk = markov_sequence(model.a, model.b, model.c, max(i - 1, 0))
    blocks = [mk[j] for j in range(i - 2, -1, -1)]
    blocks.append(np.zeros((model.n_y, model.n_u)))
    return np.hstack([gl] + blocks)


def h_fi_norm(model: StateSpaceModel, i: int) -> float:
    """Spectral norm of the i-th noise Toeplitz row block
    [C A^{i-2} K S, ..., C K S, S]; for i = 0 the bare noise gain ||S||."""
    if i <= 0:
        return float(np.linalg.norm(model.sigma_e_half, 2))
    ks = model.k @ model.sigma_e_half
    mk = markov_sequence(model.a, ks, model.c, i - 1)
    blocks = [mk[j] for j in range(i - 2, -1, -1)] + [model.sigma_e_half]
    return float(np.linalg.norm(np.hstack(blocks), 2))


def _log_det_ratio(model: StateSpaceModel, sigma_u: float, p: int, i: int,
                   n: int, sbar_sq: float) -> float:
    cov = population_covariance(model, sigma_u, p, i, n)
    sign, logdet = np.linalg.slogdet(cov / sbar_sq)
    if sign <= 0:
        raise NotPositiveDefiniteError(
            "population covariance ratio inside log det is not PD")
    return float(logdet)


@dataclass(frozen=True)
class ErrorBudgets:
    """Per-block and stacked error budgets at the given (p, f, i, n, delta)."""

    eps_e: float          # cross-term budget at block i
    eps_b: float          # truncation-bias budget at block i
    eps_i: float          # union-inflated per-block budget at block i
    eps_i_all: tuple[float, ...]  # union-inflated budgets, blocks 1..f
    hankel_bound: float   # sqrt(c f / n) max_i eps_i


def _eps_e_generic(model: StateSpaceModel, sigma_u: float, p: int, j: int,
                   n: int, conf: float) -> float:
    """Cross-term budget ||H_fj||/sigma_bar sqrt(d log(d/conf) + log det).

    Degenerate noise (zero noise gain) gives a genuinely zero cross term;
    a zero PE floor with a nonzero gain gives an infinite budget (the
    theory does not cover degenerate innovations).
    """
    h_norm = h_fi_norm(model, j)
    if h_norm == 0.0:
        return 0.0
    sb = sigma_bar_sq(model, sigma_u, p, j)
    if sb == 0.0:
        return math.inf
    d = problem_dimension(p, j, model.n_u, model.n_y)
    bracket = d * math.log(d / conf) + _log_det_ratio(model, sigma_u, p, j,
                                                      n, sb)
    return h_norm / math.sqrt(sb) * math.sqrt(max(bracket, 0.0))


def error_budgets(inputs: BoundInputs) -> ErrorBudgets:
    """Evaluate the cross-term, bias, and stacked-Hankel budgets.

    The stacked bound inflates the per-block confidence by f (union bound)
    and applies the configurable universal multiplier ``c``.
    """
    m, su, p, f, n, dl = inputs.model, inputs.sigma_u, inputs.p, inputs.f, \
        inputs.n, inputs.delta
    i = inputs.i
    sb_i = sigma_bar_sq(m, su, p, i)
    eps_e = _eps_e_generic(m, su, p, i, n, dl)
    if sb_i == 0.0:
        eps_b = math.inf
    else:
        eps_b = math.sqrt(m.n_x / sb_i * math.log(1.0 / dl))

    eps_all = tuple(_eps_e_generic(m, su, p, j, n, dl / f)
                    for j in range(1, f + 1))
    hankel = math.sqrt(inputs.constants.c * f / n) * max(eps_all)
    eps_i_val = eps_all[i - 1] if i >= 1 else eps_all[0]
    return ErrorBudgets(eps_e=eps_e, eps_b=eps_b, eps_i=eps_i_val,
                        eps_i_all=eps_all, hankel_bound=hankel)


def _eps_e_i0(inputs: BoundInputs) -> float:
    """Cross-term budget of the output-equation regression (i = 0)."""
    return _eps_e_generic(inputs.model, inputs.sigma_u, inputs.p, 0,
                          inputs.n, inputs.delta)


# ---------------------------------------------------------------------------
# SVD robustness (weighted truncation) and realization bounds.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SvdRobustness:
    condition_met: bool
    margin: float
    kappa: float
    w_gamma: float
    w_l: float
    bound_gamma: float
    bound_l: float


def svd_robustness(est: HankelEstimate, pair: WeightingPair,
                   truth: np.ndarray, n_x: int) -> SvdRobustness:
    """Check the quarter-gap robustness condition and evaluate the factor
    error bounds.

    ``truth`` is the exact Hankel-like matrix; kappa is the weighted error
    norm over the n_x-th weighted singular value, and the bounds carry the
    weighting conditioning factors W_Gamma, W_L.
    """
    diff = pair.w1 @ (est.hfp - truth) @ pair.w2
    err_w = float(np.linalg.norm(diff, 2))
    s_true = np.linalg.svd(pair.w1 @ truth @ pair.w2, compute_uv=False)
    s_nx = float(s_true[n_x - 1])
    kappa = err_w / s_nx if s_nx > 0 else math.inf
    d = pair.diagnostics
    w_gamma = d.w1_norm * d.w2_norm * d.w1_inv_norm ** 1.5 * d.w2_inv_norm ** 0.5
    w_l = d.w1_norm * d.w2_norm * d.w2_inv_norm ** 1.5 * d.w1_inv_norm ** 0.5
    s_nx_raw = float(np.linalg.svd(truth, compute_uv=False)[n_x - 1])
    err_raw = float(np.linalg.norm(est.hfp - truth, 2))
    factor = math.sqrt(40.0 * n_x / s_nx_raw) * err_raw
    return SvdRobustness(
        condition_met=bool(err_w <= s_nx / 4.0),
        margin=float(s_nx / 4.0 - err_w),
        kappa=float(kappa),
        w_gamma=float(w_gamma), w_l=float(w_l),
        bound_gamma=float(factor * w_gamma), bound_l=float(factor * w_l))


def oracle_balanced(model: StateSpaceModel, pair: WeightingPair, f: int,
                    p: int) -> BalancedRealization:
    """Balanced factors of the exact Hankel matrix under the given pair."""
    h = true_hankel(model, f, p)
    fake = HankelEstimate(hfp=h, thetas=(), method="oracle", cfg=None)
    return weighted_svd_truncate(fake, pair, model.n_x)


@dataclass(frozen=True)
class CvaBoundReport:
    constants: dict[str, float]      # c4..c9 surrogates
    cond_phi0: float
    cond_phi1: float
    eps_0_e: float
    eps_0_b: float
    eps_1_e: float
    eps_1_b: float
    rhs_c: float
    rhs_ab: float
    measured_c: float
    measured_ab: float


@dataclass(frozen=True)
class MoespBoundReport:
    sigma_o: float
    rhs_c: float
    rhs_b: float
    rhs_a: float
    measured_c: float
    measured_b: float
    measured_a: float


@dataclass(frozen=True)
class RealizationBounds:
    err_gamma: float
    err_lp: float
    cva: CvaBoundReport
    moesp: MoespBoundReport


def _cond_surrogate(gram: np.ndarray, lhat: np.ndarray) -> float:
    """Spectral norm of Gram L' (L Gram L')^{-1}: the conditioning factor that
    maps factor errors into regression errors."""
    lg = lhat @ gram
    inner = lg @ lhat.T
    return float(np.linalg.norm(
        np.linalg.solve(inner.T, lg).T, 2))


def realization_bounds(real: BalancedRealization, bundle: RegressorBundle,
                       model: StateSpaceModel, pair: WeightingPair,
                       constants: UniversalConstants | None = None,
                       inputs: BoundInputs | None = None) -> RealizationBounds:
    """Evaluate both realization error bounds in oracle mode.

    The orthogonal alignment T comes from the Procrustes fit of the
    estimated observability factor to the oracle balanced factor under the
    same weighting pair; the same T is reused across all inequalities.

    Raises:
        RankDeficiencyError / NotPositiveDefiniteError propagated from
        degenerate factors; sigma_o = 0 raises.
    """
    constants = constants or UniversalConstants()
    p, f, n = bundle.p, bundle.f, bundle.n
    n_x = real.n_x
    bar = oracle_balanced(model, pair, f, p)
    t = procrustes_align(real.gamma_f, bar.gamma_f)
    err_gamma = float(np.linalg.norm(real.gamma_f - bar.gamma_f @ t, 2))
    err_lp = float(np.linalg.norm(real.lp - t.T @ bar.lp, 2))

    # Oracle balanced system matrices (exact by shift invariance / structure).
    c_bar = bar.gamma_f[:model.n_y]
    from scipy.linalg import lstsq as _lstsq

    a_bar, *_ = _lstsq(bar.gamma_f[:-model.n_y], bar.gamma_f[model.n_y:],
                       lapack_driver="gelsd")
    b_bar = bar.lp[:, -model.n_u:]

    # Conditioning surrogates on the aligned columns used by the regressions.
    zp_al = bundle.zp[:, :n - 1]
    gram0 = zp_al @ zp_al.T
    cond0 = _cond_surrogate(gram0, real.lp)
    phi1 = np.vstack([zp_al, bundle.uf1])
    lp1 = np.zeros((n_x + bundle.n_u, real.lp.shape[1] + bundle.n_u))
    lp1[:n_x, :real.lp.shape[1]] = real.lp
    lp1[n_x:, real.lp.shape[1]:] = np.eye(bundle.n_u)
    cond1 = _cond_surrogate(phi1 @ phi1.T, lp1)

    if inputs is None:
        inputs = BoundInputs(model=model, sigma_u=1.0, p=p, f=f, i=1, n=n,
                             delta=0.05, constants=constants)
    eps0_e = _eps_e_i0(inputs)
    sb0 = sigma_bar_sq(inputs.model, inputs.sigma_u, p, 0)
    eps0_b = math.inf if sb0 == 0.0 else \
        math.sqrt(model.n_x / sb0 * math.log(1.0 / inputs.delta))
    b1 = error_budgets(BoundInputs(
        model=model, sigma_u=inputs.sigma_u, p=p, f=f, i=1, n=n,
        delta=inputs.delta, constants=constants))
    eps1_e, eps1_b = b1.eps_e, b1.eps_b

    c4 = float(np.linalg.norm(c_bar @ t, 2)) * cond0
    c5 = constants.c2 * float(np.linalg.norm(model.c, 2)) * cond0
    c6 = constants.c1 * cond0
    c7 = (float(np.linalg.norm(t.T @ a_bar @ t, 2)) + 1.0) * cond1
    c8 = float(np.linalg.norm(model.a + np.eye(model.n_x), 2)) * cond1
    c9 = float(np.linalg.norm(model.k @ model.sigma_e_half, 2)) * cond1

    est_cva = realize_cva(real, bundle)
    meas_c = float(np.linalg.norm(est_cva.c - c_bar @ t, 2))
    meas_ab = max(
        float(np.linalg.norm(est_cva.a - t.T @ a_bar @ t, 2)),
        float(np.linalg.norm(est_cva.b - t.T @ b_bar, 2)))
    rhs_c = c4 * err_lp + c5 * eps0_b / n + c6 * eps0_e / math.sqrt(n)
    rhs_ab = c7 * err_lp + c8 * eps1_b / n + c9 * eps1_e / math.sqrt(n)
    cva = CvaBoundReport(
        constants={"c4": c4, "c5": c5, "c6": c6, "c7": c7, "c8": c8, "c9": c9},
        cond_phi0=cond0, cond_phi1=cond1,
        eps_0_e=eps0_e, eps_0_b=eps0_b, eps_1_e=eps1_e, eps_1_b=eps1_b,
        rhs_c=rhs_c, rhs_ab=rhs_ab, measured_c=meas_c, measured_ab=meas_ab)

    est_m = realize_moesp(real, model.n_y, model.n_u)
    bar_m = realize_moesp(bar, model.n_y, model.n_u)
    gm_hat = real.gamma_f[:-model.n_y]
    gm_bar = bar.gamma_f[:-model.n_y]
    sigma_o = min(float(np.linalg.svd(gm_hat, compute_uv=False)[n_x - 1]),
                  float(np.linalg.svd(gm_bar, compute_uv=False)[n_x - 1]))
    if sigma_o <= 0:
        raise NotPositiveDefiniteError(
            "sigma_o = 0: shift-invariance bound undefined",
            min_eigenvalue=sigma_o)
    h_norm = float(np.linalg.norm(true_hankel(model, f, p), 2))
    rhs_a = (math.sqrt(h_norm) + sigma_o) / sigma_o ** 2 * err_gamma
    moesp = MoespBoundReport(
        sigma_o=sigma_o,
        rhs_c=err_gamma, rhs_b=err_lp, rhs_a=rhs_a,
        measured_c=float(np.linalg.norm(est_m.c - bar_m.c @ t, 2)),
        measured_b=float(np.linalg.norm(est_m.b - t.T @ bar_m.b, 2)),
        measured_a=float(np.linalg.norm(est_m.a - t.T @ bar_m.a @ t, 2)))
    return RealizationBounds(err_gamma=err_gamma, err_lp=err_lp, cva=cva,
                             moesp=moesp)


# ---------------------------------------------------------------------------
# Aggregate report.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    """Every computable finite-sample quantity at one configuration.

    Estimate-dependent fields are None unless an estimate/weighting pair was
    supplied.
    """

    p: int
    f: int
    i: int
    n: int
    delta: float
    beta: float | None
    d_pi: int
    sigma_bar_sq: float
    u_bar: float
    e_bar: float
    w_bar: float
    r_bar: float
    n_w: int
    n_phi: int
    n_pe: int
    c_ixe: float
    gamma_in: float
    delta_u_log10: float
    eps_e: float
    eps_b: float
    eps_total: float
    hankel_bound: float
    universal_constants: dict[str, float]
    n_pe_growing: int | None = None
    kappa: float | None = None
    svd_condition_met: bool | None = None
    svd_margin: float | None = None
    w_gamma: float | None = None
    w_l: float | None = None
    bound_gamma: float | None = None
    bound_l: float | None = None
    sigma_o: float | None = None
    cva_constants: dict[str, float] | None = None

    def lines(self) -> list[str]:
        """Aligned key/value lines for terminal output (stable ordering)."""
        items: list[tuple[str, object]] = [
            ("p", self.p), ("f", self.f), ("i", self.i), ("N", self.n),
            ("delta", self.delta), ("beta", self.beta),
            ("d_pi", self.d_pi), ("sigma_bar_sq", self.sigma_bar_sq),
            ("u_bar", self.u_bar), ("e_bar", self.e_bar),
            ("w_bar", self.w_bar), ("r_bar", self.r_bar),
            ("N_W", self.n_w), ("N_Phi", self.n_phi), ("N_pe", self.n_pe),
            ("C_iXE", self.c_ixe), ("gamma_iN", self.gamma_in),
            ("log10_delta_u", self.delta_u_log10),
            ("eps_E", self.eps_e), ("eps_B", self.eps_b),
            ("eps_i", self.eps_total), ("hankel_bound", self.hankel_bound),
        ]
        for name, val in sorted(self.universal_constants.items()):
            items.append((f"const_{name}", val))
        opt = [("N_pe_growing_p", self.n_pe_growing),
               ("kappa", self.kappa),
               ("svd_condition_met", self.svd_condition_met),
               ("svd_margin", self.svd_margin),
               ("W_Gamma", self.w_gamma), ("W_L", self.w_l),
               ("bound_Gamma", self.bound_gamma), ("bound_L", self.bound_l),
               ("sigma_o", self.sigma_o)]
        items.extend((k, v) for k, v in opt if v is not None)
        if self.cva_constants:
            items.extend(sorted(self.cva_constants.items()))
        width = max(len(k) for k, _ in items)
        out = []
        for k, v in items:
            if isinstance(v, float):
                out.append(f"{k:<{width}}  {v:.10g}")
            else:
                out.append(f"{k:<{width}}  {v}")
        return out

    def csv_rows(self) -> list[tuple[str, str]]:
        rows = []
        for line in self.lines():
            key, val = line.split(None, 1)
            rows.append((key, val.strip()))
        return rows


def bound_report(inputs: BoundInputs,
                 estimate: HankelEstimate | None = None,
                 pair: WeightingPair | None = None,
                 bundle: RegressorBundle | None = None) -> BoundReport:
    """Assemble the full report; estimate-dependent entries appear when an
    estimate and weighting pair are provided."""
    m, su, p, f, i, n, dl = inputs.model, inputs.sigma_u, inputs.p, \
        inputs.f, inputs.i, inputs.n, inputs.delta
    bi = burn_in(inputs)
    budgets = error_budgets(inputs)
    rep = dict(
        p=p, f=f, i=i, n=n, delta=dl, beta=inputs.beta,
        d_pi=problem_dimension(p, i, m.n_u, m.n_y),
        sigma_bar_sq=sigma_bar_sq(m, su, p, i),
        u_bar=u_bar(n, dl, m.n_u), e_bar=e_bar(n, dl, m.n_y),
        w_bar=w_bar(n, dl, p, i, m.n_u, m.n_y),
        r_bar=r_bar(n, dl, p, i, m.n_u, m.n_y),
        n_w=bi.n_w, n_phi=bi.n_phi, n_pe=bi.n_pe,
        c_ixe=c_ixe(m, su, p, i, n, dl),
        gamma_in=gamma_in(m, su, p, i, n, dl),
        delta_u_log10=delta_u_log10(n, f, m.n_u),
        eps_e=budgets.eps_e, eps_b=budgets.eps_b,
        eps_total=budgets.eps_i, hankel_bound=budgets.hankel_bound,
        universal_constants=inputs.constants.as_dict(),
        n_pe_growing=(burn_in_growing_horizon(inputs).n_pe
                      if inputs.beta is not None else None),
    )
    if estimate is not None and pair is not None:
        truth = true_hankel(m, f, p)
        rob = svd_robustness(estimate, pair, truth, m.n_x)
        rep.update(kappa=rob.kappa, svd_condition_met=rob.condition_met,
                   svd_margin=rob.margin, w_gamma=rob.w_gamma, w_l=rob.w_l,
                   bound_gamma=rob.bound_gamma, bound_l=rob.bound_l)
        if bundle is not None:
            real = weighted_svd_truncate(estimate, pair, m.n_x)
            rb = realization_bounds(real, bundle, m, pair,
                                    constants=inputs.constants, inputs=inputs)
            rep.update(sigma_o=rb.moesp.sigma_o,
                       cva_constants=rb.cva.constants)
    return BoundReport(**rep)
