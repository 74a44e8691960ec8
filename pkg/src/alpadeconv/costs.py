"""Exact and epsilon-smoothed lp costs, IRLS weights and stationarity.

The cost being minimized is

    F(h, e)     = ||y - h*e||^2 + delta * sum |e_i|^p
    F_eps(h, e) = ||y - h*e||^2 + delta * sum (e_i^2 + eps)^(p/2)

``delta`` is the regularization weight (the same knob is sometimes written
lambda). The data term carries no 1/2 factor, so

    grad_e F_eps = 2 H^T (H e - y) + delta * w * e,   w_i = p (e_i^2 + eps)^(p/2 - 1)

and the majorize-minimize IRLS step for F_eps solves
(H^T H + (delta/2) diag(w)) e = H^T y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convolution import as_signal, make_operator
from .errors import DimensionMismatch, InvalidArgument


@dataclass(frozen=True)
class PenaltyParams:
    p: float = 0.1
    delta: float = 1.0
    epsilon: float = 1e-6

    def __post_init__(self):
        # p = 0 would zero every IRLS weight and silently turn the e-step into plain LS
        if not 0.0 < self.p <= 1.0:
            raise InvalidArgument(f"p must lie in (0, 1], got {self.p}")
        if not self.delta >= 0.0:
            raise InvalidArgument(f"delta must be >= 0, got {self.delta}")
        if not self.epsilon > 0.0:
            raise InvalidArgument(f"epsilon must be > 0, got {self.epsilon}")


def _check_p(p):
    if not 0.0 < p <= 1.0:
        raise InvalidArgument(f"p must lie in (0, 1], got {p}")


def lp_norm_p(e, p):
    """sum |e_i|^p."""
    _check_p(p)
    e = as_signal(e, "e")
    return float(np.sum(np.abs(e) ** p))


def lp_eps(e, params):
    """sum (e_i^2 + eps)^(p/2)."""
    e = as_signal(e, "e")
    return float(np.sum((e * e + params.epsilon) ** (params.p / 2)))


def smoothing_gap(e, params):
    """Elementwise (e_i^2 + eps)^(p/2) - |e_i|^p, evaluated without cancellation.

    Each entry lies in (0, eps^(p/2)] for finite e.
    """
    e = as_signal(e, "e")
    a = np.abs(e)
    a2 = a * a
    q = 0.5 * params.p
    gap = np.empty_like(a)
    # cancellation only bites when e_i^2 >> eps; below that the direct form is exact enough
    big = a2 >= params.epsilon
    gap[big] = a[big] ** params.p * np.expm1(q * np.log1p(params.epsilon / a2[big]))
    small = ~big
    gap[small] = (a2[small] + params.epsilon) ** q - a[small] ** params.p
    return gap


def gap_bound(M, params):
    """Upper bound delta * M * eps^(p/2) on F_eps - F."""
    return params.delta * M * params.epsilon ** (params.p / 2)


@dataclass(frozen=True)
class CostPair:
    f_exact: float
    f_eps: float
    data_term: float
    penalty_exact: float
    penalty_eps: float
    gap: float  # F_eps - F, computed elementwise

    def as_dict(self):
        return dict(self.__dict__)


def _check_dims(y, h, e):
    if y.size != h.size + e.size - 1:
        raise DimensionMismatch(
            f"len(y)={y.size} but len(h)+len(e)-1={h.size + e.size - 1}")


def residual(y, h, e):
    y, h, e = as_signal(y, "y"), as_signal(h, "h"), as_signal(e, "e")
    _check_dims(y, h, e)
    return y - np.convolve(h, e)


def cost_pair(y, h, e, params):
    r = residual(y, h, e)
    e = np.asarray(e, dtype=np.float64)
    data = float(r @ r)
    pen = lp_norm_p(e, params.p)
    pen_eps = lp_eps(e, params)
    return CostPair(
        f_exact=data + params.delta * pen,
        f_eps=data + params.delta * pen_eps,
        data_term=data,
        penalty_exact=pen,
        penalty_eps=pen_eps,
        gap=params.delta * float(np.sum(smoothing_gap(e, params))),
    )


def irls_weights(e, params):
    """w_i = p (e_i^2 + eps)^(p/2 - 1); strictly positive and finite for eps > 0."""
    e = as_signal(e, "e")
    return params.p * (e * e + params.epsilon) ** (params.p / 2 - 1)


def inverse_irls_weights(e, params):
    """1/w_i = (e_i^2 + eps)^(1 - p/2) / p, computed directly so tiny e_i cannot overflow."""
    e = as_signal(e, "e")
    return (e * e + params.epsilon) ** (1 - params.p / 2) / params.p


def gradient_f_eps(y, h, e, params):
    r = residual(y, h, e)
    e = np.asarray(e, dtype=np.float64)
    op = make_operator(h, e.size)
    return -2.0 * op.adjoint(r) + params.delta * irls_weights(e, params) * e


def stationarity_residual(y, h, e, params, weights=None):
    """|| H^T (H e - y) + (delta/2) W e ||_2, i.e. half the gradient norm of F_eps.

    With ``weights=None`` W is evaluated at ``e`` itself (the nonlinear
    stationarity condition); passing frozen weights gives the residual of the
    weighted normal equations solved by one IRLS step.
    """
    r = residual(y, h, e)
    e = np.asarray(e, dtype=np.float64)
    w = irls_weights(e, params) if weights is None else np.asarray(weights, dtype=np.float64)
    op = make_operator(h, e.size)
    return float(np.linalg.norm(-op.adjoint(r) + 0.5 * params.delta * w * e))
