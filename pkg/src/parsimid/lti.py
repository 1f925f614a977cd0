"""Innovations-form LTI models: representation, conversion, simulation.

The central object is :class:`StateSpaceModel`, an innovations-form system

    x_{k+1} = A x_k + B u_k + K S e_k,      y_k = C x_k + S e_k,

with ``S`` a symmetric PSD square root of the innovations covariance and
``e_k`` i.i.d. standard normal.  The equivalent predictor form uses
``A_K = A - K C``.  All operations here are pure and deterministic given
their inputs; randomness only enters through explicitly seeded generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConvergenceError,
    DataFormatError,
    ModelInvariantError,
)

RANK_TOL = 1e-8  # singular-value threshold for minimality checks


def _as_matrix(m, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if rows is not None and a.shape != (rows, cols):
        raise ModelInvariantError(
            f"expected a {rows}x{cols} matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class StateSpaceModel:
    """Innovations-form LTI system (A, B, C, K, Sigma_e^{1/2}).

    Invariants checked at construction:
      * spectral radii rho(A) < 1 and rho(A - K C) < 1,
      * (A, [B, K]) controllable and (A, C) observable,
      * ``sigma_e_half`` symmetric with nonnegative eigenvalues.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    k: np.ndarray
    sigma_e_half: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.a)
        n_x = a.shape[0]
        if a.shape != (n_x, n_x):
            raise ModelInvariantError(f"A must be square, got {a.shape}")
        b = _as_matrix(self.b)
        if b.shape[0] != n_x:
            raise ModelInvariantError(
                f"B has {b.shape[0]} rows, expected n_x={n_x}")
        c = _as_matrix(self.c)
        if c.shape[1] != n_x:
            raise ModelInvariantError(
                f"C has {c.shape[1]} columns, expected n_x={n_x}")
        n_y = c.shape[0]
        k = _as_matrix(self.k, n_x, n_y)
        s = _as_matrix(self.sigma_e_half, n_y, n_y)
        for name, m in (("a", a), ("b", b), ("c", c), ("k", k),
                        ("sigma_e_half", s)):
            object.__setattr__(self, name, m)

        rho_a = self.spectral_radius()
        if rho_a >= 1.0:
            raise ModelInvariantError(
                f"rho(A) = {rho_a:.6g} >= 1; open-loop stability required")
        rho_ak = self.predictor_spectral_radius()
        if rho_ak >= 1.0:
            raise ModelInvariantError(
                f"rho(A - K C) = {rho_ak:.6g} >= 1; predictor stability required")
        if not np.allclose(s, s.T, atol=1e-10 * max(1.0, float(np.abs(s).max()))):
            raise ModelInvariantError("sigma_e_half must be symmetric")
        eig_s = np.linalg.eigvalsh(s)
        if eig_s.min() < -1e-10 * max(1.0, eig_s.max()):
            raise ModelInvariantError(
                f"sigma_e_half has negative eigenvalue {eig_s.min():.3g}")
        self._check_minimal()

    def _check_minimal(self):
        n_x = self.n_x
        bk = np.hstack([self.b, self.k])
        ctrb = np.hstack([np.linalg.matrix_power(self.a, j) @ bk
                          for j in range(n_x)])
        obsv = np.vstack([self.c @ np.linalg.matrix_power(self.a, j)
                          for j in range(n_x)])
        for name, m in (("(A,[B,K]) controllability", ctrb),
                        ("(A,C) observability", obsv)):
            sv = np.linalg.svd(m, compute_uv=False)
            if sv[0] == 0.0 or sv[min(n_x, len(sv)) - 1] <= RANK_TOL * sv[0]:
                raise ModelInvariantError(
                    f"{name} matrix is rank deficient "
                    f"(sigma_min/sigma_max = {sv[-1] / max(sv[0], 1e-300):.3g})")

    @property
    def n_x(self) -> int:
        return self.a.shape[0]

    @property
    def n_u(self) -> int:
        return self.b.shape[1]

    @property
    def n_y(self) -> int:
        return self.c.shape[0]

    @property
    def a_k(self) -> np.ndarray:
        """Predictor-form state matrix A - K C."""
        return self.a - self.k @ self.c

    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.a)).max())

    def predictor_spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.a - self.k @ self.c)).max())

    def sigma_e(self) -> np.ndarray:
        """Innovations covariance Sigma_e = S S."""
        return self.sigma_e_half @ self.sigma_e_half

    def to_json_dict(self) -> dict:
        return {name: getattr(self, name).tolist()
                for name in ("a", "b", "c", "k", "sigma_e_half")}

    @classmethod
    def from_json_dict(cls, d: dict) -> "StateSpaceModel":
        try:
            return cls(**{name: np.asarray(d[name], dtype=float)
                          for name in ("a", "b", "c", "k", "sigma_e_half")})
        except KeyError as exc:
            raise DataFormatError(f"model file missing key {exc}") from exc


@dataclass(frozen=True)
class StandardNoiseModel:
    """Standard state-space form with independent process/measurement noise.

    x_{k+1} = A x_k + B u_k + w_k,  y_k = C x_k + v_k, with
    cov(w) = sigma_w (PSD) and cov(v) = sigma_v (PD), w independent of v.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    sigma_w: np.ndarray
    sigma_v: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.a)
        n_x = a.shape[0]
        b = _as_matrix(self.b)
        c = _as_matrix(self.c)
        n_y = c.shape[0]
        sw = _as_matrix(self.sigma_w, n_x, n_x)
        sv = _as_matrix(self.sigma_v, n_y, n_y)
        for name, m in (("a", a), ("b", b), ("c", c), ("sigma_w", sw),
                        ("sigma_v", sv)):
            object.__setattr__(self, name, m)
        if np.linalg.eigvalsh(sv).min() <= 0:
            raise ModelInvariantError("sigma_v must be strictly positive definite")
        if np.linalg.eigvalsh(sw).min() < -1e-12 * max(1.0, float(np.abs(sw).max())):
            raise ModelInvariantError("sigma_w must be positive semidefinite")


@dataclass(frozen=True)
class InputSpec:
    """Seeded input process: white Gaussian or an AR(2)-filtered noise.

    ``colored_ar2`` draws r_k ~ N(0,1) and filters through
    gain / (1 - a1 q^{-1} - a2 q^{-2}); the filter is run for a warm-up
    period before samples are recorded so the input is close to stationary.
    """

    kind: str  # "white" | "colored_ar2"
    seed: int
    sigma_u: float = 1.0
    gain: float = 1.0
    a1: float = 0.0
    a2: float = 0.0
    warmup: int = field(default=200, repr=False)

    def __post_init__(self):
        if self.kind not in ("white", "colored_ar2"):
            raise ModelInvariantError(f"unknown input kind {self.kind!r}")
        if self.kind == "white" and self.sigma_u <= 0:
            raise ModelInvariantError("sigma_u must be positive")
        if self.kind == "colored_ar2":
            roots = np.roots([1.0, -self.a1, -self.a2])
            if np.abs(roots).max() >= 1.0:
                raise ModelInvariantError(
                    f"AR(2) filter unstable: pole magnitude "
                    f"{np.abs(roots).max():.6g} >= 1")

    @classmethod
    def white(cls, sigma_u: float, seed: int) -> "InputSpec":
        return cls(kind="white", seed=seed, sigma_u=sigma_u)

    @classmethod
    def colored_ar2(cls, gain: float, a1: float, a2: float,
                    seed: int) -> "InputSpec":
        return cls(kind="colored_ar2", seed=seed, gain=gain, a1=a1, a2=a2)

    def generate(self, nbar: int, n_u: int = 1) -> np.ndarray:
        """Draw an (nbar, n_u) input record from the seeded generator."""
        rng = np.random.default_rng(self.seed)
        if self.kind == "white":
            return self.sigma_u * rng.standard_normal((nbar, n_u))
        r = rng.standard_normal((self.warmup + nbar, n_u))
        u = np.empty_like(r)
        u1 = np.zeros(n_u)
        u2 = np.zeros(n_u)
        for t in range(r.shape[0]):
            u[t] = self.a1 * u1 + self.a2 * u2 + self.gain * r[t]
            u2 = u1
            u1 = u[t]
        return u[self.warmup:]


@dataclass(frozen=True)
class Trajectory:
    """Simulated or loaded input/output record of common length nbar.

    ``e`` (innovations) and ``x`` (states) are only present for simulated
    trajectories; loading from CSV drops them.
    """

    u: np.ndarray  # (nbar, n_u)
    y: np.ndarray  # (nbar, n_y)
    seed: int      # noise seed used by simulate(); input seed is in InputSpec
    input_seed: int | None = None
    e: np.ndarray | None = None
    x: np.ndarray | None = None

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.u, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if u.shape[0] == 1 and u.shape[1] > 1:
            u = u.T
        if y.shape[0] == 1 and y.shape[1] > 1:
            y = y.T
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)
        if u.shape[0] != y.shape[0]:
            raise DataFormatError(
                f"u and y lengths differ: {u.shape[0]} vs {y.shape[0]}")
        for name in ("e", "x"):
            v = getattr(self, name)
            if v is not None and np.asarray(v).shape[0] != u.shape[0]:
                raise DataFormatError(f"{name} length differs from u/y")

    @property
    def nbar(self) -> int:
        return self.u.shape[0]

    @property
    def n_u(self) -> int:
        return self.u.shape[1]

    @property
    def n_y(self) -> int:
        return self.y.shape[1]


def simulate(model: StateSpaceModel, nbar: int, input_spec: InputSpec,
             noise_seed: int) -> Trajectory:
    """Simulate the innovations form from x_1 = 0.

    Args:
        model: validated innovations-form system.
        nbar: number of recorded samples (>= 1).
        input_spec: seeded input process.
        noise_seed: seed for the innovations stream e_k ~ N(0, I).

    Returns:
        Trajectory with u, y and the ground-truth e and x records.
    """
    if nbar < 1:
        raise ModelInvariantError(f"nbar must be >= 1, got {nbar}")
    u = input_spec.generate(nbar, model.n_u)
    rng = np.random.default_rng(noise_seed)
    e = rng.standard_normal((nbar, model.n_y))

    a, b, c, ks = model.a, model.b, model.c, model.k @ model.sigma_e_half
    s = model.sigma_e_half
    x = np.zeros((nbar, model.n_x))
    y = np.empty((nbar, model.n_y))
    xk = np.zeros(model.n_x)
    for t in range(nbar):
        x[t] = xk
        y[t] = c @ xk + s @ e[t]
        xk = a @ xk + b @ u[t] + ks @ e[t]
    return Trajectory(u=u, y=y, seed=noise_seed, input_seed=input_spec.seed,
                      e=e, x=x)


def dare_to_innovations(std: StandardNoiseModel, tol: float = 1e-12,
                        max_iter: int = 100_000) -> StateSpaceModel:
    """Convert a standard-noise model to innovations form via its Kalman filter.

    The steady-state filter covariance P is obtained by fixed-point iteration
    of P <- A P A' + Sigma_w - A P C' (C P C' + Sigma_v)^{-1} C P A' starting
    from P_0 = Sigma_w, stopping when the update residual falls below ``tol``
    (relative to ||P||).  The gain is returned with the sign that makes the
    innovations recursion reproduce the standard model's output statistics,
    i.e. K = A P C' (C P C' + Sigma_v)^{-1}.

    Raises:
        ConvergenceError: no fixed point within max_iter; carries the last
            residual.
    """
    a, c = std.a, std.c
    p = std.sigma_w.copy()
    residual = np.inf
    for _ in range(max_iter):
        cpc = c @ p @ c.T + std.sigma_v
        apc = a @ p @ c.T
        p_next = a @ p @ a.T + std.sigma_w - apc @ np.linalg.solve(cpc, apc.T)
        p_next = 0.5 * (p_next + p_next.T)
        residual = float(np.linalg.norm(p_next - p) / max(1.0, np.linalg.norm(p_next)))
        p = p_next
        if residual <= tol:
            break
    else:
        raise ConvergenceError(
            f"Riccati fixed point not reached after {max_iter} iterations "
            f"(last residual {residual:.3g})", residual=residual)

    sigma_e = c @ p @ c.T + std.sigma_v
    k = std.a @ p @ c.T @ np.linalg.inv(sigma_e)
    w, v = np.linalg.eigh(0.5 * (sigma_e + sigma_e.T))
    s_half = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return StateSpaceModel(a=std.a, b=std.b, c=std.c, k=k, sigma_e_half=s_half)


def armax_to_ss(a: float, b: float, c: float,
                sigma_e_sq: float) -> StateSpaceModel:
    """State-space form of the scalar ARMAX model
    y_k + a y_{k-1} = b u_{k-1} + e_k + c e_{k-1}, var(e) = sigma_e_sq.

    Returns (A=-a, B=b, C=1, K=c-a, S=sqrt(sigma_e_sq)); both transfer
    functions (u->y and e->y) match the ARMAX model.
    """
    if abs(a) >= 1.0:
        raise ModelInvariantError(f"|a| = {abs(a)} >= 1: unstable pole")
    if abs(c) >= 1.0:
        raise ModelInvariantError(f"|c| = {abs(c)} >= 1: unstable predictor")
    if sigma_e_sq < 0:
        raise ModelInvariantError("sigma_e_sq must be nonnegative")
    return StateSpaceModel(
        a=[[-a]], b=[[b]], c=[[1.0]], k=[[c - a]],
        sigma_e_half=[[float(np.sqrt(sigma_e_sq))]])


def markov_sequence(a: np.ndarray, b: np.ndarray, c: np.ndarray,
                    count: int) -> np.ndarray:
    """Markov parameters [C B, C A B, ..., C A^{count-1} B] of (a, b, c)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    c = np.atleast_2d(c)
    out = np.empty((count, c.shape[0], b.shape[1]))
    acc = b
    for j in range(count):
        out[j] = c @ acc
        acc = a @ acc
    return out


def markov_parameters(model: StateSpaceModel, count: int) -> np.ndarray:
    """Input-channel Markov parameters of the model, shape (count, n_y, n_u)."""
    if count < 0:
        raise ModelInvariantError("count must be >= 0")
    return markov_sequence(model.a, model.b, model.c, count)


def extended_observability(model: StateSpaceModel, f: int) -> np.ndarray:
    """Gamma_f = [C; CA; ...; CA^{f-1}], shape (f n_y, n_x)."""
    rows = []
    acc = model.c
    for _ in range(f):
        rows.append(acc)
        acc = acc @ model.a
    return np.vstack(rows)


def reversed_controllability(model: StateSpaceModel, p: int) -> np.ndarray:
    """L_p = [A_K^{p-1} K ... K,  A_K^{p-1} B ... B], shape (n_x, p(n_y+n_u)).

    This is the predictor-form extended controllability matrix in reverse
    order: applied to a stacked window [y_p; u_p] it reconstructs the state
    at the end of the window up to the A_K^p truncation term.
    """
    ak = model.a_k
    powers = [np.eye(model.n_x)]
    for _ in range(p - 1):
        powers.append(ak @ powers[-1])
    k_blocks = [powers[p - 1 - j] @ model.k for j in range(p)]
    b_blocks = [powers[p - 1 - j] @ model.b for j in range(p)]
    return np.hstack(k_blocks + b_blocks)


def true_hankel(model: StateSpaceModel, f: int, p: int) -> np.ndarray:
    """Rank-n_x Hankel-like matrix Gamma_f L_p, shape (f n_y, p(n_y+n_u))."""
    if f < 1 or p < 1:
        raise ModelInvariantError("f and p must be >= 1")
    return extended_observability(model, f) @ reversed_controllability(model, p)


def state_covariance(model: StateSpaceModel, sigma_u: float,
                     n: int) -> np.ndarray:
    """State covariance Sigma_{x,n} = E[x_n x_n'] under white N(0, sigma_u^2 I)
    input, by the exact n-step recursion from Sigma_{x,1} = 0.

    The recursion stops early once the iterate reaches its fixed point to
    double precision; the result is still the exact n-step value.
    """
    if n < 1:
        raise ModelInvariantError("n must be >= 1")
    q = sigma_u ** 2 * (model.b @ model.b.T) \
        + (model.k @ model.sigma_e()) @ model.k.T
    sx = np.zeros((model.n_x, model.n_x))
    for _ in range(n - 1):
        nxt = model.a @ sx @ model.a.T + q
        if np.array_equal(nxt, sx):
            break
        sx = nxt
    return sx


def stationary_state_covariance(model: StateSpaceModel,
                                sigma_u: float) -> np.ndarray:
    """Fixed point of the state-covariance recursion (discrete Lyapunov)."""
    from scipy.linalg import solve_discrete_lyapunov

    q = sigma_u ** 2 * (model.b @ model.b.T) \
        + (model.k @ model.sigma_e()) @ model.k.T
    return solve_discrete_lyapunov(model.a, q)


# ---------------------------------------------------------------------------
# Trajectory CSV serialization: header k,u_1..u_nu,y_1..y_ny, one row per
# step, 17 significant digits.
# ---------------------------------------------------------------------------

def write_trajectory_csv(traj: Trajectory, path) -> None:
    cols = [f"u_{j + 1}" for j in range(traj.n_u)] \
        + [f"y_{j + 1}" for j in range(traj.n_y)]
    with open(path, "w", newline="") as fh:
        fh.write("k," + ",".join(cols) + "\n")
        for t in range(traj.nbar):
            vals = [format(v, ".17g") for v in traj.u[t]] \
                + [format(v, ".17g") for v in traj.y[t]]
            fh.write(f"{t + 1}," + ",".join(vals) + "\n")


def read_trajectory_csv(path) -> Trajectory:
    with open(path) as fh:
        header = fh.readline().strip()
        names = header.split(",")
        if not names or names[0] != "k":
            raise DataFormatError(
                f"bad trajectory header {header!r}: first column must be 'k'",
                line=1)
        n_u = sum(1 for n in names if n.startswith("u_"))
        n_y = sum(1 for n in names if n.startswith("y_"))
        if n_u == 0 or n_y == 0 or 1 + n_u + n_y != len(names):
            raise DataFormatError(
                f"bad trajectory header {header!r}: expected k,u_1..,y_1..",
                line=1)
        us, ys = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                raise DataFormatError(
                    f"row has {len(parts)} fields, expected {len(names)}",
                    line=lineno)
            try:
                vals = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise DataFormatError(f"non-numeric field: {exc}",
                                      line=lineno) from exc
            us.append(vals[:n_u])
            ys.append(vals[n_u:])
    if not us:
        raise DataFormatError("trajectory file has no data rows", line=2)
    return Trajectory(u=np.array(us), y=np.array(ys), seed=-1)
