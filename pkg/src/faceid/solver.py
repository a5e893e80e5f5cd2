"""Reweighted ADMM solver for robust face coding.

One engine covers the whole method family: the outer loop re-estimates pixel
weights from the current residual, the inner ADMM codes the face against the
dictionary under those weights with an optional low-rank treatment of the
residual grid and a choice of coefficient regularizer (nonnegativity, l1, or
ridge). Method presets select the combinations by name.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigError, GeometryError, NumericError
from .model import Dictionary, FaceVector
from .prox import project_nonneg, shrink_weighted, soft_threshold, svt
from .weights import WeightFunction, WeightVector, phi_value, weight_update

REGULARIZERS = ("nonneg", "l1", "l2")

# Engine configurations behind the published method names. Entries are
# (regularizer kind, low-rank flag, weight scheme, outer cap override).
METHODS = {
    "F-LR-IRNNLS": ("nonneg", True, "logistic", None),
    "F-IRNNLS": ("nonneg", False, "logistic", None),
    "F-IRLS": ("l2", False, "logistic", None),
    "F-IRSC": ("l1", False, "logistic", None),
    "F-LR-IRLS": ("l2", True, "logistic", None),
    "F-LR-IRSC": ("l1", True, "logistic", None),
    "SRC": ("l1", False, "constant", None),
    "CR-RLS": ("l2", False, "constant", 1),
    "LR3": ("l2", True, "constant", None),
}

_gram_factorizations = 0


def gram_factorization_count() -> int:
    """How many Gram factorizations have run since import (instrumentation)."""
    return _gram_factorizations


@dataclass(frozen=True)
class SolverConfig:
    """Engine knobs; the defaults give the robust nonnegative low-rank solver.

    lambda_star weighs the nuclear norm of the residual grid (low-rank path
    only). lambda_reg weighs the coefficient penalty for the l1/l2 kinds; the
    default is a working convention, not a published value. eps1/eps2 bound
    the inner primal residuals ||y - Ta - e|| and ||a - z||, eps3 the relative
    change of consecutive weight vectors that stops the outer loop.
    """

    lambda_star: float = 0.05
    rho1: float = 1.0
    rho2: float = 0.1
    lambda_reg: float = 1e-3
    eps1: float = 1e-2
    eps2: float = 1e-1
    eps3: float = 1e-2
    t_max: int = 100
    s_max: int = 500
    regularizer: str = "nonneg"
    low_rank: bool = True
    weights: WeightFunction = field(default_factory=WeightFunction.logistic)
    trace_objective: bool = False
    warm_start_duals: bool = False

    def __post_init__(self):
        if self.regularizer not in REGULARIZERS:
            raise ConfigError(f"regularizer must be one of {REGULARIZERS}, got {self.regularizer!r}")
        if self.lambda_star < 0.0 or self.lambda_reg < 0.0:
            raise ConfigError("penalty weights must be nonnegative")
        if self.rho1 <= 0.0 or self.rho2 <= 0.0:
            raise ConfigError("rho1 and rho2 must be positive")
        if self.eps1 <= 0.0 or self.eps2 <= 0.0 or self.eps3 <= 0.0:
            raise ConfigError("tolerances must be positive")
        if self.t_max < 1 or self.s_max < 1:
            raise ConfigError("iteration caps must be at least 1")
        if not isinstance(self.weights, WeightFunction):
            raise ConfigError("weights must be a WeightFunction")

    @property
    def gram_ratio(self) -> float:
        """Diagonal shift of the cached Gram system for this configuration."""
        if self.regularizer == "l2":
            return 2.0 * self.lambda_reg / self.rho1
        return self.rho2 / self.rho1


@dataclass
class GramCache:
    """Cholesky factorization of T'T + ratio * I, reused across iterations."""

    ratio: float
    n: int
    _factor: tuple

    def apply(self, b: np.ndarray) -> np.ndarray:
        """Solve (T'T + ratio I) x = b from the cached factorization."""
        return cho_solve(self._factor, b, check_finite=False)


def _columns(T) -> np.ndarray:
    return T.columns if isinstance(T, Dictionary) else np.asarray(T, dtype=float)


def precompute_gram(T, ratio: float) -> GramCache:
    """Factor T'T + ratio * I once so every coefficient update is a pair of
    triangular solves instead of a fresh inversion."""
    A = _columns(T)
    if ratio <= 0.0:
        raise ConfigError(f"gram ratio must be positive, got {ratio}")
    gram = A.T @ A + ratio * np.eye(A.shape[1])
    global _gram_factorizations
    _gram_factorizations += 1
    try:
        factor = cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"gram matrix ({A.shape[1]}x{A.shape[1]}) is not positive definite") from exc
    return GramCache(ratio=float(ratio), n=A.shape[1], _factor=factor)


@dataclass
class AdmmState:
    """Mutable inner-loop state; z is None when the l2 kind drops the split."""

    a: np.ndarray
    z: Optional[np.ndarray]
    e: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    w: np.ndarray
    s: int = 0
    t: int = 0


def e_update(state: AdmmState, y, T, config: SolverConfig) -> np.ndarray:
    """Residual-variable update: weighted shrink, then SVT on the grid when
    the low-rank path is on."""
    A = _columns(T)
    r = y - A @ state.a + state.u1 / config.rho1
    e = shrink_weighted(r, state.w, config.rho1)
    if config.low_rank:
        if not isinstance(T, Dictionary):
            raise ConfigError("low-rank path needs a Dictionary carrying image geometry")
        shape = T.geometry.shape
        E = svt(e.reshape(shape, order="F"), config.lambda_star / config.rho1)
        e = E.reshape(-1, order="F")
    return e


def z_update(state: AdmmState, config: SolverConfig) -> np.ndarray:
    """Split-variable update: nonneg projection or soft threshold of a + u2/rho2."""
    v = state.a + state.u2 / config.rho2
    if config.regularizer == "nonneg":
        return project_nonneg(v)
    if config.regularizer == "l1":
        return soft_threshold(v, config.lambda_reg / config.rho2)
    raise ConfigError("the l2 kind has no split variable z")


def a_update(state: AdmmState, y, T, cache: GramCache, config: SolverConfig) -> np.ndarray:
    """Coefficient update through the cached Gram factorization."""
    A = _columns(T)
    expected = config.gram_ratio
    if cache.n != A.shape[1] or abs(cache.ratio - expected) > 1e-12 * max(1.0, expected):
        raise ConfigError(
            f"gram cache (n={cache.n}, ratio={cache.ratio}) does not match the "
            f"configuration (n={A.shape[1]}, ratio={expected})"
        )
    rhs = A.T @ (y - state.e + state.u1 / config.rho1)
    if config.regularizer != "l2":
        rhs = rhs + (config.rho2 / config.rho1) * state.z - state.u2 / config.rho1
    return cache.apply(rhs)


def dual_update(state: AdmmState, y, T, rho1: float, rho2: float):
    """Scaled dual ascent on both constraints; u2 is untouched on the l2 path."""
    A = _columns(T)
    u1 = state.u1 + rho1 * (y - A @ state.a - state.e)
    if state.z is None:
        u2 = state.u2
    else:
        u2 = state.u2 + rho2 * (state.a - state.z)
    return u1, u2


@dataclass
class CodingResult:
    """Outcome of one inner ADMM run under fixed weights."""

    a: np.ndarray
    e: np.ndarray
    z: Optional[np.ndarray]
    u1: np.ndarray
    u2: np.ndarray
    iterations: int
    converged: bool
    fit_residual: float
    split_residual: float


def coding_step(
    y,
    T,
    w,
    cache: GramCache,
    config: SolverConfig,
    a0=None,
    duals=None,
    t: int = 0,
    on_iterate: Optional[Callable[[AdmmState], None]] = None,
) -> CodingResult:
    """Code y against T under fixed weights w by inner ADMM.

    Args:
        y: observation vector (FaceVector or array of length d).
        w: pixel weights (WeightVector or array of length d).
        cache: Gram factorization matching config.gram_ratio.
        a0: warm-start coefficients; defaults to the flat vector 1/n.
        duals: optional (u1, u2) warm start; both default to zero.
        t: outer-iteration tag recorded on the state.
        on_iterate: called with the live AdmmState after every iteration
            (arrays are reused by the caller; copy anything you keep).

    Returns:
        CodingResult; convergence means ||y - Ta - e|| <= eps1 and, unless the
        l2 kind dropped the split, ||a - z|| <= eps2.
    """
    A = _columns(T)
    d, n = A.shape
    y = np.asarray(getattr(y, "values", y), dtype=float).ravel()
    w = np.asarray(getattr(w, "values", w), dtype=float).ravel()
    if y.size != d or w.size != d:
        raise GeometryError(f"y and w must have length d={d}")
    if a0 is None:
        a = np.full(n, 1.0 / n)
    else:
        a = np.array(a0, dtype=float).ravel()
        if a.size != n:
            raise GeometryError(f"a0 must have length n={n}")
    drop_split = config.regularizer == "l2"
    state = AdmmState(
        a=a,
        z=None if drop_split else np.zeros(n),
        e=np.zeros(d),
        u1=np.zeros(d),
        u2=np.zeros(n),
        w=w,
        s=0,
        t=t,
    )
    if duals is not None:
        state.u1 = np.array(duals[0], dtype=float).ravel()
        state.u2 = np.array(duals[1], dtype=float).ravel()
    converged = False
    fit = split = float("inf")
    for s in range(1, config.s_max + 1):
        state.s = s
        state.e = e_update(state, y, T, config)
        if not drop_split:
            state.z = z_update(state, config)
        state.a = a_update(state, y, T, cache, config)
        u1, u2 = dual_update(state, y, T, config.rho1, config.rho2)
        # The dual increments are rho * (primal residuals); reuse them.
        fit = float(np.linalg.norm(u1 - state.u1)) / config.rho1
        split = 0.0 if drop_split else float(np.linalg.norm(u2 - state.u2)) / config.rho2
        state.u1, state.u2 = u1, u2
        if on_iterate is not None:
            on_iterate(state)
        if fit <= config.eps1 and (drop_split or split <= config.eps2):
            converged = True
            break
    return CodingResult(
        a=state.a,
        e=state.e,
        z=state.z,
        u1=state.u1,
        u2=state.u2,
        iterations=state.s,
        converged=converged,
        fit_residual=fit,
        split_residual=split,
    )


def objective_value(
    a,
    y,
    T,
    config: SolverConfig,
    wf: Optional[WeightFunction] = None,
    feas_tol: float = 1e-8,
) -> float:
    """Objective sum(phi(r_i)) + lambda_star ||grid(r)||_* + theta(a) at a.

    wf defaults to config.weights and must be frozen (phi is undefined while
    the weights still move). The nuclear term is only charged on the low-rank
    path. For the nonneg kind theta is an indicator: entries below -feas_tol
    make the value infinite.
    """
    wf = config.weights if wf is None else wf
    A = _columns(T)
    y = np.asarray(getattr(y, "values", y), dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    r = y - A @ a
    total = float(sum(phi_value(x, wf) for x in r))
    if config.low_rank and config.lambda_star > 0.0:
        if not isinstance(T, Dictionary):
            raise ConfigError("nuclear term needs a Dictionary carrying image geometry")
        sigma = np.linalg.svd(r.reshape(T.geometry.shape, order="F"), compute_uv=False)
        total += config.lambda_star * float(sigma.sum())
    if config.regularizer == "nonneg":
        if (a < -feas_tol).any():
            return float("inf")
    elif config.regularizer == "l1":
        total += config.lambda_reg * float(np.abs(a).sum())
    else:
        total += config.lambda_reg * float(a @ a)
    return total


@dataclass
class SolveResult:
    """Final iterates plus per-iteration accounting for one solve."""

    a: np.ndarray
    e: np.ndarray
    w: WeightVector
    outer_iterations: int
    inner_iterations: list
    inner_converged: list
    converged: bool
    objective_trace: Optional[list]
    wall_seconds: float

    @property
    def total_inner_iterations(self) -> int:
        return int(sum(self.inner_iterations))


def solve(
    y,
    T,
    config: Optional[SolverConfig] = None,
    cache: Optional[GramCache] = None,
    on_inner_iterate: Optional[Callable[[AdmmState], None]] = None,
) -> SolveResult:
    """Full reweighted solve of one observation against a dictionary.

    Alternates weight updates (from the residual of the current coefficients)
    with inner ADMM coding steps until the relative change of the weight
    vector drops below eps3 or t_max outer iterations have run. Coefficients
    warm-start each coding step; duals restart at zero unless
    config.warm_start_duals is set.

    Args:
        y: observation (FaceVector or length-d array), typically unit l2.
        T: Dictionary of training faces.
        cache: optional precomputed Gram factorization; built here when absent.
        on_inner_iterate: forwarded to every coding step.

    Returns:
        SolveResult with final a, e, w and the iteration bookkeeping.
    """
    t0 = time.perf_counter()
    config = SolverConfig() if config is None else config
    A = _columns(T)
    yv = np.asarray(getattr(y, "values", y), dtype=float).ravel()
    if yv.size != A.shape[0]:
        raise GeometryError(f"observation length {yv.size} does not match dictionary d={A.shape[0]}")
    if cache is None:
        cache = precompute_gram(T, config.gram_ratio)
    n = A.shape[1]
    trace = None
    if config.trace_objective:
        if config.weights.adaptive:
            raise ConfigError("objective tracing needs a frozen weight function")
        trace = []
    a = np.full(n, 1.0 / n)
    if trace is not None:
        trace.append(objective_value(a, yv, T, config))
    prev_w = None
    duals = None
    wv = None
    inner_iterations = []
    inner_converged = []
    converged = False
    t = 0
    for t in range(1, config.t_max + 1):
        wv = weight_update(yv - A @ a, config.weights)
        w = wv.values
        step = coding_step(yv, T, w, cache, config, a0=a, duals=duals, t=t, on_iterate=on_inner_iterate)
        a = step.a
        if config.warm_start_duals:
            duals = (step.u1, step.u2)
        inner_iterations.append(step.iterations)
        inner_converged.append(step.converged)
        if trace is not None:
            trace.append(objective_value(a, yv, T, config))
        if prev_w is not None:
            if np.linalg.norm(w - prev_w) / np.linalg.norm(prev_w) < config.eps3:
                converged = True
        prev_w = w
        if converged:
            break
    return SolveResult(
        a=a,
        e=step.e,
        w=wv,
        outer_iterations=t,
        inner_iterations=inner_iterations,
        inner_converged=inner_converged,
        converged=converged,
        objective_trace=trace,
        wall_seconds=time.perf_counter() - t0,
    )


def method_config(name: str, gamma: Optional[float] = None, **overrides) -> SolverConfig:
    """SolverConfig for a published method name.

    Args:
        name: one of METHODS.
        gamma: saturation fraction for the logistic weight schedule (ignored
            by the constant-weight baselines); defaults to the WeightFunction
            default.
        overrides: any SolverConfig field, applied last.
    """
    if name not in METHODS:
        raise ConfigError(f"unknown method {name!r}; choose from {sorted(METHODS)}")
    kind, low_rank, scheme, t_cap = METHODS[name]
    if scheme == "constant":
        wf = WeightFunction.constant_one()
    elif gamma is None:
        wf = WeightFunction.logistic()
    else:
        wf = WeightFunction.logistic(gamma=gamma)
    config = SolverConfig(regularizer=kind, low_rank=low_rank, weights=wf)
    if t_cap is not None:
        config = replace(config, t_max=t_cap)
    if overrides:
        config = replace(config, **overrides)
    return config


def solve_baseline(
    kind: str,
    y,
    T,
    lambda_reg: float = 1e-3,
    lambda_star: float = 0.05,
    cache: Optional[GramCache] = None,
    **overrides,
) -> SolveResult:
    """Classic unweighted baselines as configurations of the same engine.

    kind "SRC" is l1 coding, "CR-RLS" one ridge solve, "LR3" ridge coding
    with the low-rank residual treatment. lambda_reg weighs the coefficient
    penalty of the traced objective (phi units, where least squares is
    x^2 / 2); the engine's split threshold works in doubled units, so the
    ridge fixed point is (T'T + 2 lambda_reg I)^-1 T'y.
    """
    if kind not in ("SRC", "CR-RLS", "LR3"):
        raise ConfigError(f"unknown baseline {kind!r}")
    config = method_config(kind, lambda_reg=2.0 * lambda_reg, lambda_star=lambda_star, **overrides)
    return solve(y, T, config, cache=cache)
