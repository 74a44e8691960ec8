"""Non-blind comparison methods: regularized least squares and l1 (LASSO) deconvolution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .convolution import as_signal, make_operator
from .errors import DimensionMismatch, InvalidArgument, NumericalFailure
from .init_bounds import reg_ls_init

__all__ = ["LassoConfig", "LassoResult", "lasso_objective", "lasso_irls", "lasso_irls_path",
           "lasso_matched_residual",
           "reg_ls", "sdmm_delta_rule"]


def reg_ls(y, h, delta):
    """Non-blind regularized least squares with the filter known."""
    return reg_ls_init(y, h, delta)


@dataclass(frozen=True)
class LassoConfig:
    delta: float
    max_iters: int = 1000
    tol: float = 1e-6
    epsilon_w: float = 1e-8

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidArgument("delta must be positive")
        if self.max_iters < 1:
            raise InvalidArgument("max_iters must be positive")
        if not (self.tol > 0 and self.epsilon_w > 0):
            raise InvalidArgument("tol and epsilon_w must be positive")


@dataclass
class LassoResult:
    e: np.ndarray
    objective: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self):
        return len(self.objective) - 1


def lasso_objective(y, h, e, delta):
    r = y - np.convolve(h, e)
    return float(r @ r + delta * np.sum(np.abs(e)))


def lasso_irls_path(y, h, cfg, e0=None):
    """IRLS for ||y - H e||^2 + delta ||e||_1 keeping the objective history.

    Each step is the majorize-minimize update
    (H^T H + (delta/2) diag(1/(|e_k| + epsilon_w))) e = H^T y. The floor keeps
    the weights below 1/epsilon_w, so the M x M system stays positive definite
    and a plain Cholesky solve suffices. The start is ``e0`` if given, else the
    ridge solution with ridge ``delta``.
    """
    y, h = as_signal(y, "y"), as_signal(h, "h")
    M = y.size - h.size + 1
    if M < 1:
        raise DimensionMismatch("observation shorter than the filter")
    op = make_operator(h, M)
    gram = op.gram()
    rhs = op.adjoint(y)
    if e0 is None:
        e = reg_ls_init(y, h, cfg.delta)
    else:
        e = as_signal(e0, "e0").copy()
        if e.size != M:
            raise DimensionMismatch(f"e0 has length {e.size}, expected {M}")
    res = LassoResult(e=e, objective=[lasso_objective(y, h, e, cfg.delta)])
    diag = np.diag_indices(M)
    for _ in range(cfg.max_iters):
        A = gram.copy()
        A[diag] += 0.5 * cfg.delta / (np.abs(e) + cfg.epsilon_w)
        try:
            e_new = cho_solve(cho_factor(A), rhs)
        except LinAlgError as exc:
            raise NumericalFailure(f"LASSO IRLS solve failed: {exc}") from exc
        if not np.all(np.isfinite(e_new)):
            raise NumericalFailure("LASSO IRLS produced non-finite values")
        norm = float(np.linalg.norm(e))
        change = float(np.linalg.norm(e_new - e)) / norm if norm > 0 else math.inf
        e = e_new
        res.objective.append(lasso_objective(y, h, e, cfg.delta))
        if change < cfg.tol:
            res.converged = True
            break
    res.e = e
    return res


def lasso_irls(y, h, cfg, e0=None):
    return lasso_irls_path(y, h, cfg, e0).e


def lasso_matched_residual(y, h, target, cfg=None, lo=1e-2, hi=1.0, rtol=2e-3, max_steps=40):
    """LASSO solution whose residual norm ||y - H e|| matches ``target``.

    The LASSO residual grows with delta. The bracket [lo, hi] is widened by
    decades until it straddles ``target``, then refined by Illinois-type
    regula falsi on log(residual) against log(delta), warm-starting every
    solve from the previous one. Returns (e, delta).
    """
    cfg = cfg or LassoConfig(delta=1.0)
    y, h = as_signal(y, "y"), as_signal(h, "h")
    warm = [None]

    def solve(log_d):
        d = math.exp(log_d)
        e = lasso_irls(y, h, LassoConfig(d, cfg.max_iters, cfg.tol, cfg.epsilon_w), warm[0])
        warm[0] = e
        return e, math.log(float(np.linalg.norm(y - np.convolve(h, e))) / target)

    a, b = math.log(lo), math.log(hi)
    ea, fa = solve(a)
    eb, fb = solve(b)
    for _ in range(12):
        if fa <= 0 <= fb:
            break
        if fa > 0:
            b, eb, fb = a, ea, fa
            a -= math.log(10.0)
            ea, fa = solve(a)
        else:
            a, ea, fa = b, eb, fb
            b += math.log(10.0)
            eb, fb = solve(b)
    else:
        # target unreachable inside the search range; return the nearer end
        return (ea, math.exp(a)) if abs(fa) <= abs(fb) else (eb, math.exp(b))

    best = min(((abs(fa), ea, a), (abs(fb), eb, b)), key=lambda t: t[0])
    side = 0
    for _ in range(max_steps):
        if best[0] <= math.log1p(rtol):
            break
        c = b - fb * (b - a) / (fb - fa) if fb != fa else 0.5 * (a + b)
        ec, fc = solve(c)
        if abs(fc) < best[0]:
            best = (abs(fc), ec, c)
        if fc > 0:
            b, fb = c, fc
            if side == 1:
                fa *= 0.5
            side = 1
        else:
            a, fa = c, fc
            if side == -1:
                fb *= 0.5
            side = -1
    return best[1], math.exp(best[2])


def sdmm_delta_rule(h, sigma):
    """Recommended lower bound 3 sigma ||h||_2 for the LASSO weight."""
    if sigma < 0:
        raise InvalidArgument("sigma must be >= 0")
    return 3.0 * float(sigma) * float(np.linalg.norm(as_signal(h, "h")))
