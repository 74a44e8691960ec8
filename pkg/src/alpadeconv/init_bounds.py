"""Regularized least-squares initialization and its error concentration.

Notation: h* is the true unit-norm filter, h~ the estimate used to build the
convolution matrix, dh = h* - h~, and

    kappa_q = sigma_max(H*) / (sigma_min(H*)^2 + delta)
    C_dh    = sqrt(M) * kappa_q * ||dh||_2.

For C_dh < 1/2 the mean absolute error of e_hat = (H~^T H~ + delta I)^-1 H~^T y
is bounded by

    MAE <= ((kappa_q + C_dh) ||w|| + (delta + C_dh) ||e*||) / (sqrt(M) (1 - 2 C_dh))

(first order in ||dh||). The tail bounds follow from the event
MAE > xi  =>  ||w|| > tau,  tau = (sqrt(M)(1 - 2 C_dh) xi - (delta + C_dh)||e*||) / (kappa_q + C_dh).

Two forms of each tail bound are available:

``form="derived"``
    Markov: M sigma^2 / tau^2, from E||w||^2 = M sigma^2.
    Hoeffding: exp(-M/(2a^2) (tau^2/M - sigma^2)^2) for tau^2/M > sigma^2.
``form="printed"``
    Markov: sigma^2 / tau^2.
    Hoeffding: exp(-M/(2a^2) (tau^2 - sigma^2)^2) for tau^2 > sigma^2.

The printed forms are kept for comparison; they are not valid upper bounds on
well-conditioned instances (the Monte-Carlo validator exposes this).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .convolution import as_signal, make_operator
from .errors import BoundInapplicable, InvalidArgument, ModelMismatch

FORMS = ("derived", "printed")


def reg_ls_init(y, h_tilde, delta):
    """e_hat = (H~^T H~ + delta I)^-1 H~^T y with M = len(y) - len(h~) + 1."""
    y, h = as_signal(y, "y"), as_signal(h_tilde, "h_tilde")
    if delta < 0:
        raise InvalidArgument(f"delta must be >= 0, got {delta}")
    M = y.size - h.size + 1
    if M < 1:
        raise InvalidArgument("observation shorter than the filter")
    if not np.any(h):
        raise InvalidArgument("filter is identically zero; the normal equations are singular")
    Hm = make_operator(h, M).matrix()
    A = Hm.T @ Hm
    A[np.diag_indices_from(A)] += delta
    return cho_solve(cho_factor(A), Hm.T @ y)


def quasi_condition(h, input_len, delta):
    """kappa_q = sigma_max / (sigma_min^2 + delta) of the convolution matrix of ``h``."""
    sv = np.linalg.svd(make_operator(h, input_len).matrix(), compute_uv=False)
    return float(sv[0] / (sv[-1] ** 2 + delta))


@dataclass(frozen=True)
class GaussianNoise:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidArgument("sigma must be positive")

    def sample(self, rng, size):
        return rng.normal(0.0, self.sigma, size)


@dataclass(frozen=True)
class BoundedNoise:
    """i.i.d. noise on [-a, a]. Sampling is uniform, whose standard deviation is a/sqrt(3).

    ``sigma`` may be set explicitly (0 < sigma <= a) to evaluate the bounds
    analytically for another bounded law, e.g. the worst case sigma = a; the
    sampler stays uniform.
    """

    a: float
    sigma: float | None = None

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidArgument("a must be positive")
        if self.sigma is None:
            object.__setattr__(self, "sigma", self.a / math.sqrt(3.0))
        if not 0 < self.sigma <= self.a:
            raise InvalidArgument("need 0 < sigma <= a")

    def sample(self, rng, size):
        return rng.uniform(-self.a, self.a, size)


@dataclass(frozen=True, eq=False)
class BoundInputs:
    h_star: np.ndarray
    h_tilde: np.ndarray
    e_star: np.ndarray
    delta: float
    noise: GaussianNoise | BoundedNoise

    def __post_init__(self):
        object.__setattr__(self, "h_star", as_signal(self.h_star, "h_star"))
        object.__setattr__(self, "h_tilde", as_signal(self.h_tilde, "h_tilde"))
        object.__setattr__(self, "e_star", as_signal(self.e_star, "e_star"))
        if abs(np.linalg.norm(self.h_star) - 1.0) > 1e-12:
            raise InvalidArgument("h_star must have unit l2 norm")
        if self.h_tilde.size != self.h_star.size:
            raise InvalidArgument("h_tilde and h_star must have the same length")
        if self.delta < 0:
            raise InvalidArgument("delta must be >= 0")

    @property
    def M(self):
        return self.e_star.size

    @property
    def N(self):
        return self.e_star.size + self.h_star.size - 1

    @property
    def dh_norm(self):
        return float(np.linalg.norm(self.h_star - self.h_tilde))

    @property
    def kappa_q(self):
        return quasi_condition(self.h_star, self.M, self.delta)

    @property
    def c_delta_h(self):
        return math.sqrt(self.M) * self.kappa_q * self.dh_norm

    def max_dh_norm(self):
        """Largest ||dh|| allowed by C_dh < 1/2."""
        return 1.0 / (2.0 * math.sqrt(self.M) * self.kappa_q)


def _geometry(inp):
    kq = inp.kappa_q
    c = math.sqrt(inp.M) * kq * inp.dh_norm
    if c >= 0.5:
        raise BoundInapplicable(
            f"C_dh = {c:.4g} >= 1/2; need ||dh|| < {1 / (2 * math.sqrt(inp.M) * kq):.4g}")
    return kq, c, float(np.linalg.norm(inp.e_star))


def mae_upper_bound(inp, w):
    """Right-hand side of the MAE bound for one noise realization ``w``."""
    kq, c, e_norm = _geometry(inp)
    w = as_signal(w, "w")
    return ((kq + c) * float(np.linalg.norm(w)) + (inp.delta + c) * e_norm) / (
        math.sqrt(inp.M) * (1 - 2 * c))


def actual_mae(inp, w):
    """(1/M) ||e* - e_hat|| with e_hat the regularized LS estimate from y = h* * e* + w."""
    y = np.convolve(inp.h_star, inp.e_star) + as_signal(w, "w")
    e_hat = reg_ls_init(y, inp.h_tilde, inp.delta)
    return float(np.mean(np.abs(inp.e_star - e_hat)))


def _tau(inp, xi):
    kq, c, e_norm = _geometry(inp)
    den = math.sqrt(inp.M) * (1 - 2 * c) * xi - (inp.delta + c) * e_norm
    return den, den / (kq + c)


def _check_form(form):
    if form not in FORMS:
        raise InvalidArgument(f"form must be one of {FORMS}, got {form!r}")


def markov_tail_bound(inp, xi, form="derived"):
    """Bound on P(MAE > xi), clamped to [0, 1]. Returns 1 when the bound is vacuous."""
    _check_form(form)
    den, tau = _tau(inp, xi)
    if den <= 0:
        return 1.0
    moment = inp.noise.sigma ** 2 * (inp.M if form == "derived" else 1)
    return min(1.0, moment / tau ** 2)


def hoeffding_tail_bound(inp, xi, form="derived"):
    """Hoeffding-type bound on P(MAE > xi) for bounded i.i.d. noise, clamped to [0, 1]."""
    _check_form(form)
    if not isinstance(inp.noise, BoundedNoise):
        raise ModelMismatch("the Hoeffding bound needs a bounded noise model")
    den, tau = _tau(inp, xi)
    if den <= 0:
        return 1.0
    a, s2, M = inp.noise.a, inp.noise.sigma ** 2, inp.M
    level = tau ** 2 / M if form == "derived" else tau ** 2
    if level <= s2:
        return 1.0
    return min(1.0, math.exp(-M / (2 * a * a) * (level - s2) ** 2))


def markov_nontrivial_threshold(inp, form="derived"):
    """Smallest xi at which the Markov bound drops below one."""
    _check_form(form)
    kq, c, e_norm = _geometry(inp)
    scale = math.sqrt(inp.M) if form == "derived" else 1.0
    return ((inp.delta + c) * e_norm + scale * inp.noise.sigma * (kq + c)) / (
        math.sqrt(inp.M) * (1 - 2 * c))


def printed_dh_condition(inp, xi):
    """Filter-error level (xi/(sigma kappa_q) - 1) / ((sigma + 2) sqrt(M) + ||e*||).

    Informational only: the expression mixes sigma into a dimensionless term,
    so it is reported as is and not used by any bound.
    """
    kq = inp.kappa_q
    s = inp.noise.sigma
    return (xi / (s * kq) - 1.0) / ((s + 2.0) * math.sqrt(inp.M) + float(np.linalg.norm(inp.e_star)))


# least-squares special cases (C_dh = 0, delta = 0), printed form

def ls_hoeffding(M, kappa_q, a, sigma, xi):
    return min(1.0, math.exp(-M ** 3 / (2 * a * a) * (xi ** 2 / kappa_q ** 2 - sigma ** 2 / M) ** 2))


def ls_hoeffding_n_sigma(M, kappa_q, a, sigma, n):
    return min(1.0, math.exp(-M ** 3 * sigma ** 4 / (2 * a * a) * (n ** 2 / kappa_q ** 2 - 1.0 / M) ** 2))


def ls_hoeffding_worst_case(M, kappa_q, a, n):
    return min(1.0, math.exp(-M ** 3 * a * a / 2 * (n ** 2 / kappa_q ** 2 - 1.0 / M) ** 2))


@dataclass
class BoundReport:
    kappa_q: float
    c_delta_h: float
    mae_upper_bound: float  # evaluated at ||w|| = sqrt(N) * sigma
    xi: np.ndarray
    markov_tail: np.ndarray
    hoeffding_tail: np.ndarray | None
    nontrivial_threshold: float
    form: str
    vacuous: np.ndarray  # True where the tail denominator is <= 0 and the bound is set to 1

    def table(self):
        return dict(zip(self.xi.tolist(), self.markov_tail.tolist()))


def bound_report(inp, xi_grid, form="derived"):
    kq, c, _ = _geometry(inp)
    xi = np.asarray(xi_grid, dtype=np.float64)
    typical_w = np.full(inp.N, inp.noise.sigma)
    hoeff = None
    if isinstance(inp.noise, BoundedNoise):
        hoeff = np.array([hoeffding_tail_bound(inp, x, form) for x in xi])
    return BoundReport(
        kappa_q=kq,
        c_delta_h=c,
        mae_upper_bound=mae_upper_bound(inp, typical_w),
        xi=xi,
        markov_tail=np.array([markov_tail_bound(inp, x, form) for x in xi]),
        hoeffding_tail=hoeff,
        nontrivial_threshold=markov_nontrivial_threshold(inp, form),
        form=form,
        vacuous=np.array([_tau(inp, x)[0] <= 0 for x in xi]),
    )


@dataclass
class ValidationTable:
    xi: np.ndarray
    empirical: np.ndarray
    markov: np.ndarray
    hoeffding: np.ndarray  # NaN where not applicable
    trials: int
    eq17_violations: int  # draws whose MAE exceeded the per-draw bound
    mae: np.ndarray = field(repr=False)

    def rows(self):
        return list(zip(self.xi, self.empirical, self.markov, self.hoeffding))

    def markov_dominates(self, where_nontrivial=True):
        mask = self.markov < 1 if where_nontrivial else np.ones_like(self.markov, bool)
        return bool(np.all(self.empirical[mask] <= self.markov[mask]))

    def hoeffding_dominates(self, where_nontrivial=True):
        ok = np.isfinite(self.hoeffding)
        mask = ok & (self.hoeffding < 1) if where_nontrivial else ok
        return bool(np.all(self.empirical[mask] <= self.hoeffding[mask]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["xi", "empirical", "markov", "hoeffding"])
            for x, emp, mk, hf in self.rows():
                writer.writerow([repr(float(x)), repr(float(emp)), repr(float(mk)),
                                 "" if not np.isfinite(hf) else repr(float(hf))])


def trial_rng(seed, trial):
    """Independent stream for one trial, identical however trials are scheduled."""
    return np.random.default_rng([int(seed), int(trial)])


def monte_carlo_validate(inp, xi_grid, trials, seed, form="derived"):
    """Empirical P(MAE > xi) over ``trials`` noise draws next to the analytic bounds."""
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    xi = np.asarray(xi_grid, dtype=np.float64)
    kq, c, e_norm = _geometry(inp)
    M, N = inp.M, inp.N
    Ht = make_operator(inp.h_tilde, M).matrix()
    A = Ht.T @ Ht
    A[np.diag_indices_from(A)] += inp.delta
    solver = cho_solve(cho_factor(A), Ht.T)  # M x N
    clean = np.convolve(inp.h_star, inp.e_star)

    W = np.stack([inp.noise.sample(trial_rng(seed, t), N) for t in range(trials)])
    E = (clean[None, :] + W) @ solver.T
    mae = np.mean(np.abs(E - inp.e_star[None, :]), axis=1)
    per_draw = ((kq + c) * np.linalg.norm(W, axis=1) + (inp.delta + c) * e_norm) / (
        math.sqrt(M) * (1 - 2 * c))

    empirical = np.array([np.mean(mae > x) for x in xi])
    markov = np.array([markov_tail_bound(inp, x, form) for x in xi])
    if isinstance(inp.noise, BoundedNoise):
        hoeff = np.array([hoeffding_tail_bound(inp, x, form) for x in xi])
    else:
        hoeff = np.full(xi.shape, np.nan)
    return ValidationTable(xi=xi, empirical=empirical, markov=markov, hoeffding=hoeff,
                           trials=int(trials), eq17_violations=int(np.sum(mae > per_draw)), mae=mae)
