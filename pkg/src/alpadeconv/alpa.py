"""Alternating lp-l2 projections for sparse blind deconvolution.

Each outer iteration runs an IRLS e-step with the filter fixed, then a filter
step with the excitation fixed. Both steps are exact minimizations (or
majorize-minimize steps) of F_eps, so the recorded F_eps sequence never
increases; see :func:`verify_trace`.

The e-step solves (H^T H + (delta/2) W) e = H^T y either directly (an M x M
system) or through the push-through identity

    (D + H^T H)^-1 H^T = D^-1 H^T (I + H D^-1 H^T)^-1,   D = (delta/2) W,

which needs only D^-1 and stays well conditioned as entries of e shrink and
the corresponding weights blow up.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_toeplitz, solve_triangular
from scipy.optimize import brentq
from scipy.signal import lfilter

from .convolution import as_signal, autocorrelation, make_operator
from .costs import (
    CostPair,
    PenaltyParams,
    cost_pair,
    gap_bound,
    inverse_irls_weights,
    irls_weights,
    stationarity_residual,
)
from .errors import DegenerateExcitation, DimensionMismatch, InvalidArgument, NumericalFailure
from .init_bounds import reg_ls_init

log = logging.getLogger(__name__)

NORMALIZATIONS = ("unit_norm_projection", "ls_rescale", "ridge")
SOLVE_PATHS = ("direct", "mil", "auto")
H_INITS = ("unit_impulse", "smoothed_random", "lp", "user")


@dataclass(frozen=True)
class AlpaConfig:
    """Solver settings.

    normalization
        ``unit_norm_projection`` minimizes ||y - E h|| over the unit sphere
        (exact, keeps descent); ``ls_rescale`` takes the unconstrained least
        squares filter and rescales it to unit norm, moving the scale into e;
        ``ridge`` solves (E^T E + beta I) h = E^T y with no rescaling.
    solve_path
        ``auto`` uses the push-through path whenever min(e_i^2) < epsilon.
    h_init
        ``lp`` uses the impulse response of an order-``lp_order`` linear
        predictor fitted to y; ``smoothed_random`` is moving-averaged white
        noise drawn with ``seed``; ``user`` takes ``h_user``.
    """

    filter_len: int
    penalty: PenaltyParams = field(default_factory=PenaltyParams)
    inner_iters: int = 10
    inner_tol: float = 1e-8
    max_outer: int = 100
    outer_tol: float = 1e-6
    normalization: str = "unit_norm_projection"
    beta: float | None = None
    solve_path: str = "auto"
    h_init: str = "unit_impulse"
    seed: int = 0
    lp_order: int = 20
    h_user: tuple | None = None

    def __post_init__(self):
        if int(self.filter_len) != self.filter_len or self.filter_len < 1:
            raise InvalidArgument(f"filter_len must be a positive integer, got {self.filter_len}")
        if self.inner_iters < 1 or self.max_outer < 1:
            raise InvalidArgument("inner_iters and max_outer must be positive")
        if not (self.inner_tol > 0 and self.outer_tol > 0):
            raise InvalidArgument("tolerances must be positive")
        if self.normalization not in NORMALIZATIONS:
            raise InvalidArgument(f"unknown normalization {self.normalization!r}")
        if self.normalization == "ridge" and not (self.beta is not None and self.beta > 0):
            raise InvalidArgument("ridge normalization needs beta > 0")
        if self.solve_path not in SOLVE_PATHS:
            raise InvalidArgument(f"unknown solve_path {self.solve_path!r}")
        if self.h_init not in H_INITS:
            raise InvalidArgument(f"unknown h_init {self.h_init!r}")
        if self.h_init == "user":
            if self.h_user is None or len(self.h_user) != self.filter_len:
                raise InvalidArgument("h_init='user' needs h_user of length filter_len")
            as_signal(self.h_user, "h_user")
        if self.h_init == "lp" and self.lp_order < 1:
            raise InvalidArgument("lp_order must be positive")

    def to_dict(self):
        d = asdict(self)
        if d["h_user"] is not None:
            d["h_user"] = [float(v) for v in d["h_user"]]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["penalty"] = PenaltyParams(**d["penalty"])
        if d.get("h_user") is not None:
            d["h_user"] = tuple(d["h_user"])
        return cls(**d)


@dataclass
class EStep:
    e: np.ndarray
    residuals: list
    paths: list

    @property
    def iterations(self):
        return len(self.residuals)


@dataclass
class IterationRecord:
    k: int
    h: np.ndarray
    e: np.ndarray
    costs: CostPair
    inner_residuals: list
    relative_change: float
    paths: list = field(default_factory=list)


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def __iter__(self):
        return iter(self.records)

    def append(self, rec):
        self.records.append(rec)

    @property
    def f_eps(self):
        return np.array([r.costs.f_eps for r in self.records])

    @property
    def f_exact(self):
        return np.array([r.costs.f_exact for r in self.records])

    @property
    def gaps(self):
        return np.array([r.costs.gap for r in self.records])

    @property
    def relative_changes(self):
        return np.array([r.relative_change for r in self.records])


@dataclass
class DeconvolutionResult:
    h: np.ndarray
    e: np.ndarray
    trace: IterationTrace
    termination: str  # "tolerance_met" | "max_iters"
    config: AlpaConfig

    @property
    def iterations(self):
        return len(self.trace) - 1


# -- initialization -----------------------------------------------------------

def lp_filter(y, order, length):
    """Unit-norm impulse response (first ``length`` taps) of the all-pole LP model of ``y``.

    Autocorrelation method; the predictor solves the Toeplitz normal equations.
    """
    y = as_signal(y, "y")
    if not 1 <= order < y.size:
        raise InvalidArgument(f"LP order must lie in [1, {y.size - 1}], got {order}")
    r = autocorrelation(y)
    if r[0] == 0.0:
        raise InvalidArgument("cannot fit a predictor to an all-zero signal")
    a = solve_toeplitz(r[:order], r[1:order + 1])
    impulse = np.zeros(length)
    impulse[0] = 1.0
    h = lfilter([1.0], np.r_[1.0, -a], impulse)
    return h / np.linalg.norm(h)


def initial_filter(y, cfg):
    L = cfg.filter_len
    if cfg.h_init == "unit_impulse":
        h = np.zeros(L)
        h[0] = 1.0
        return h
    if cfg.h_init == "smoothed_random":
        width = min(5, L)
        rng = np.random.default_rng(cfg.seed)
        h = np.convolve(rng.standard_normal(L + width - 1), np.ones(width) / width, mode="valid")
        return h / np.linalg.norm(h)
    if cfg.h_init == "lp":
        return lp_filter(y, cfg.lp_order, L)
    h = np.asarray(cfg.h_user, dtype=np.float64)
    norm = np.linalg.norm(h)
    if norm == 0:
        raise InvalidArgument("user filter is identically zero")
    return h / norm


# -- e-step -------------------------------------------------------------------

def _choose_path(path, e, params):
    if path == "auto":
        if params.delta > 0 and float(np.min(e * e)) < params.epsilon:
            return "mil"
        return "direct"
    if path == "mil" and params.delta == 0:
        raise InvalidArgument("the matrix-inversion-lemma path needs delta > 0")
    return path


def e_step(y, h, e_prev, cfg, path=None, weights=None):
    """Run up to ``cfg.inner_iters`` IRLS iterations starting from ``e_prev``.

    ``weights`` overrides W for the first iteration only (e.g. frozen weights).
    Each inner iteration is a majorize-minimize step, so F_eps(h, e) is
    non-increasing along the inner iterates.
    """
    y, h, e = as_signal(y, "y"), as_signal(h, "h"), as_signal(e_prev, "e_prev")
    if y.size != h.size + e.size - 1:
        raise DimensionMismatch(f"len(y)={y.size} but len(h)+len(e)-1={h.size + e.size - 1}")
    params = cfg.penalty
    path = path or cfg.solve_path
    op = make_operator(h, e.size)
    Hm = op.matrix()
    rhs = Hm.T @ y
    gram = None

    residuals, paths = [], []
    for j in range(cfg.inner_iters):
        use = _choose_path(path, e, params)
        if j == 0 and weights is not None:
            w = np.asarray(weights, dtype=np.float64)
            winv = 1.0 / w
        else:
            w = irls_weights(e, params)
            winv = inverse_irls_weights(e, params)
        try:
            if use == "direct":
                if gram is None:
                    gram = Hm.T @ Hm
                A = gram + np.diag(0.5 * params.delta * w)
                e_new = cho_solve(cho_factor(A), rhs)
            else:
                dinv = (2.0 / params.delta) * winv
                S = (Hm * dinv) @ Hm.T
                S[np.diag_indices_from(S)] += 1.0
                e_new = dinv * (Hm.T @ cho_solve(cho_factor(S), y))
        except LinAlgError as exc:
            raise NumericalFailure(f"e-step {use} solve failed: {exc}") from exc
        if not np.all(np.isfinite(e_new)):
            raise NumericalFailure(f"e-step {use} solve produced non-finite values")
        residuals.append(stationarity_residual(y, h, e_new, params))
        paths.append(use)
        norm = np.linalg.norm(e)
        change = np.linalg.norm(e_new - e) / norm if norm > 0 else math.inf
        e = e_new
        if change < cfg.inner_tol:
            break
    return EStep(e=e, residuals=residuals, paths=paths)


def e_step_direct(y, h, e_prev, cfg, weights=None):
    return e_step(y, h, e_prev, cfg, path="direct", weights=weights).e


def e_step_mil(y, h, e_prev, cfg, weights=None):
    return e_step(y, h, e_prev, cfg, path="mil", weights=weights).e


# -- h-step -------------------------------------------------------------------

def sphere_lstsq(A, b):
    """Global minimizer of ||A x - b||_2 subject to ||x||_2 = 1.

    Stationary points satisfy (A^T A - mu I) x = A^T b; the global minimum has
    mu <= lambda_min(A^T A), found by a bracketed root search on the secular
    equation ||x(mu)|| = 1.
    """
    lam, V = np.linalg.eigh(A.T @ A)
    c = V.T @ (A.T @ b)
    cn = np.linalg.norm(c)
    if cn == 0.0:
        return V[:, 0].copy()
    tiny = np.finfo(float).eps * max(1.0, abs(lam[-1]))
    if abs(c[0]) <= tiny * cn:
        # hard case: check whether mu = lambda_min already gives norm <= 1
        gaps = lam - lam[0]
        mask = gaps > tiny
        x = np.zeros_like(c)
        x[mask] = c[mask] / gaps[mask]
        nx = np.linalg.norm(x)
        if nx <= 1.0:
            x[~mask] = 0.0
            x[0] = math.sqrt(max(0.0, 1.0 - nx * nx))
            return V @ x

    def secular(mu):
        return np.linalg.norm(c / (lam - mu)) - 1.0

    # secular(lo) <= 0 <= secular(hi) by construction
    lo, hi = lam[0] - cn, lam[0] - max(abs(c[0]), tiny)
    if secular(lo) >= 0:
        mu = lo
    elif secular(hi) <= 0:  # only by rounding, e.g. when c has a single nonzero entry
        mu = hi
    else:
        mu = brentq(secular, lo, hi, xtol=1e-15 * max(1.0, abs(lo)), rtol=4 * np.finfo(float).eps,
                    maxiter=500)
    x = V @ (c / (lam - mu))
    return x / np.linalg.norm(x)


def _filter_update(y, e, cfg):
    """Return (h, gain): the new filter and the factor the excitation must be multiplied by."""
    if not np.any(e):
        raise DegenerateExcitation(
            "excitation estimate is identically zero; decrease delta or change the initial filter")
    E = make_operator(e, cfg.filter_len).matrix()
    if cfg.normalization == "unit_norm_projection":
        return sphere_lstsq(E, y), 1.0
    if cfg.normalization == "ridge":
        A = E.T @ E
        A[np.diag_indices_from(A)] += cfg.beta
        return cho_solve(cho_factor(A), E.T @ y), 1.0
    Q, R = np.linalg.qr(E)
    h = solve_triangular(R, Q.T @ y)
    s = float(np.linalg.norm(h))
    if s == 0.0 or not math.isfinite(s):
        raise NumericalFailure("least-squares filter has zero or non-finite norm")
    return h / s, s


def h_step(y, e, cfg):
    """Filter update with the excitation held fixed.

    No sign convention is applied here (flipping h alone would change h*e);
    :func:`run_alpa` flips h and e together.
    """
    y, e = as_signal(y, "y"), as_signal(e, "e")
    if y.size != cfg.filter_len + e.size - 1:
        raise DimensionMismatch(f"len(y)={y.size} but L+len(e)-1={cfg.filter_len + e.size - 1}")
    return _filter_update(y, e, cfg)[0]


def fix_sign(h, e):
    """Flip (h, e) jointly so that the largest-magnitude filter tap is positive."""
    if h[np.argmax(np.abs(h))] < 0:
        return -h, -e
    return h, e


# -- driver -------------------------------------------------------------------

def run_alpa(y, cfg):
    y = as_signal(y, "y")
    L = cfg.filter_len
    if y.size <= L:
        raise InvalidArgument(f"len(y)={y.size} must exceed filter_len={L}")
    M = y.size - L + 1
    params = cfg.penalty

    h = initial_filter(y, cfg)
    # W^(0,0) = I: the starting excitation is the regularized LS estimate
    e = reg_ls_init(y, h, params.delta)
    trace = IterationTrace()
    trace.append(IterationRecord(0, h.copy(), e.copy(), cost_pair(y, h, e, params), [], math.nan))

    termination = "max_iters"
    for k in range(1, cfg.max_outer + 1):
        try:
            step = e_step(y, h, e, cfg)
            h_new, gain = _filter_update(y, step.e, cfg)
        except NumericalFailure as exc:
            exc.trace = trace
            raise
        e_new = step.e * gain
        if cfg.normalization != "ridge":
            h_new, e_new = fix_sign(h_new, e_new)
        costs = cost_pair(y, h_new, e_new, params)
        if not (math.isfinite(costs.f_eps) and math.isfinite(costs.f_exact)):
            raise NumericalFailure(f"non-finite cost at outer iteration {k}", trace=trace)
        prev = float(e @ e)
        rel = float(np.sum((e_new - e) ** 2) / prev) if prev > 0 else math.inf
        trace.append(IterationRecord(k, h_new.copy(), e_new.copy(), costs, step.residuals, rel, step.paths))
        h, e = h_new, e_new
        log.debug("outer %d: F_eps=%.6g F=%.6g change=%.3g", k, costs.f_eps, costs.f_exact, rel)
        if rel <= cfg.outer_tol:
            termination = "tolerance_met"
            break
    return DeconvolutionResult(h=h, e=e, trace=trace, termination=termination, config=cfg)


@dataclass(frozen=True)
class TraceCheck:
    descent: bool
    sandwich: bool
    bounded_rise: bool
    worst_increase: float  # max over k of F_eps(k+1) - F_eps(k) - slack
    worst_gap_excess: float  # max over k of gap - delta*M*eps^(p/2)
    min_gap: float
    worst_rise_excess: float

    @property
    def ok(self):
        return self.descent and self.sandwich and self.bounded_rise


def verify_trace(trace, M, params, rel_slack=1e-10, abs_slack=1e-10):
    """Check descent of F_eps, the F <= F_eps <= F + bound sandwich and the bounded rise of F.

    The descent slack is ``rel_slack * (1 + |F_eps(k)|)``.
    """
    f_eps = trace.f_eps
    f = trace.f_exact
    gaps = trace.gaps
    bound = gap_bound(M, params)
    if len(f_eps) > 1:
        inc = np.diff(f_eps) - rel_slack * (1 + np.abs(f_eps[:-1]))
        rise = np.diff(f) - bound - abs_slack
        worst_inc, worst_rise = float(inc.max()), float(rise.max())
    else:
        worst_inc = worst_rise = -math.inf
    return TraceCheck(
        descent=worst_inc <= 0,
        sandwich=bool(np.all(gaps > 0) and np.all(gaps <= bound)),
        bounded_rise=worst_rise <= 0,
        worst_increase=worst_inc,
        worst_gap_excess=float(np.max(gaps - bound)),
        min_gap=float(np.min(gaps)),
        worst_rise_excess=worst_rise,
    )
