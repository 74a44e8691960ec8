"""Error measures with shift/scale alignment.

dB conventions (the reference ``x`` is never zero):

    MSE_dB = 10 log10(||x - x_hat||_2^2 / ||x||_2^2)
    MAE_dB = 20 log10(mean|x - x_hat| / mean|x|)

Both are clamped to [-300, 300] dB. The SNR of a signal x observed as x + w is
10 log10(||x||^2 / (N sigma^2)) with sigma^2 = ||w||^2 / N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convolution import as_signal
from .errors import DimensionMismatch, InvalidArgument

DB_CLAMP = 300.0


def _pair(x, x_hat):
    x, x_hat = as_signal(x, "x"), as_signal(x_hat, "x_hat")
    if x.size != x_hat.size:
        raise DimensionMismatch(f"length mismatch: {x.size} vs {x_hat.size}")
    return x, x_hat


def clamp_db(value):
    return float(min(DB_CLAMP, max(-DB_CLAMP, value)))


def ratio_db(num, den, power=True):
    """10 log10(num/den) (or 20 log10 when ``power`` is False), clamped."""
    if den <= 0:
        raise InvalidArgument("reference has zero energy; dB ratio undefined")
    if num <= 0:
        return -DB_CLAMP
    return clamp_db((10.0 if power else 20.0) * math.log10(num / den))


def mae(x, x_hat):
    x, x_hat = _pair(x, x_hat)
    return float(np.mean(np.abs(x - x_hat)))


def mse(x, x_hat):
    x, x_hat = _pair(x, x_hat)
    return float(np.mean((x - x_hat) ** 2))


def mse_db(x, x_hat):
    x, x_hat = _pair(x, x_hat)
    return ratio_db(float(np.sum((x - x_hat) ** 2)), float(x @ x))


def mae_db(x, x_hat):
    x, x_hat = _pair(x, x_hat)
    return ratio_db(float(np.mean(np.abs(x - x_hat))), float(np.mean(np.abs(x))), power=False)


@dataclass(frozen=True)
class AlignedError:
    best_shift: int  # aligned estimate is np.roll(x_hat, -best_shift)
    best_scale: float  # multiplies the rolled estimate
    mse_db: float
    mae_db: float
    support_hits: int
    aligned: np.ndarray

    def as_dict(self):
        return {"best_shift": self.best_shift, "best_scale": self.best_scale,
                "mse_db": self.mse_db, "mae_db": self.mae_db, "support_hits": self.support_hits}


def top_support(x, k):
    """Indices of the ``k`` largest |x| entries, sorted ascending."""
    x = np.asarray(x)
    k = min(int(k), x.size)
    return np.sort(np.argsort(-np.abs(x), kind="stable")[:k])


def support_match(true_idx, est_idx, tol=0):
    """Number of true indices having an estimated index within +-tol."""
    est = np.asarray(est_idx)
    if est.size == 0:
        return 0
    return int(sum(np.min(np.abs(est - t)) <= tol for t in true_idx))


def aligned_error(x_ref, x_hat, align_scale=True, support_k=None, support_tol=0):
    """Best cyclic shift (and least-squares scale) of ``x_hat`` against ``x_ref``.

    All cyclic shifts are scored in one FFT cross-correlation; with
    ``align_scale`` the residual at shift s is ||x||^2 - c_s^2/||x_hat||^2,
    otherwise ||x||^2 - 2 c_s + ||x_hat||^2, where c_s = <x, roll(x_hat, -s)>.
    ``support_hits`` compares the top-``support_k`` entries of both (k defaults
    to the number of nonzeros in ``x_ref``).
    """
    x, xh = _pair(x_ref, x_hat)
    ex = float(x @ x)
    if ex == 0:
        raise InvalidArgument("reference is identically zero; dB errors undefined")
    n = x.size
    # c[s] = sum_i x[i] xh[(i+s) mod n]
    c = np.fft.irfft(np.conj(np.fft.rfft(x)) * np.fft.rfft(xh), n)
    eh = float(xh @ xh)
    if align_scale and eh > 0:
        score = -c * c
    else:
        score = -2.0 * c
    shift = int(np.argmin(score))
    rolled = np.roll(xh, -shift)
    scale = float(x @ rolled) / eh if (align_scale and eh > 0) else 1.0
    aligned = scale * rolled
    k = int(np.count_nonzero(x)) if support_k is None else int(support_k)
    hits = support_match(top_support(x, k), top_support(aligned, k), support_tol)
    return AlignedError(shift, scale, mse_db(x, aligned), mae_db(x, aligned), hits, aligned)


def snr_db(y_noisy, y_clean):
    """SNR of ``y_noisy`` as an observation of ``y_clean``, clamped at +-300 dB."""
    y_noisy, y_clean = _pair(y_noisy, y_clean)
    w = y_noisy - y_clean
    pn = float(w @ w)
    ps = float(y_clean @ y_clean)
    if pn == 0:
        return DB_CLAMP
    if ps == 0:
        return -DB_CLAMP
    return clamp_db(10.0 * math.log10(ps / pn))


def snr_improvement_db(y_noisy, y_clean, y_reconstructed):
    y_noisy, y_clean = _pair(y_noisy, y_clean)
    _pair(y_clean, y_reconstructed)
    return snr_db(y_reconstructed, y_clean) - snr_db(y_noisy, y_clean)


def sparsity_ratio(x):
    """||x||_1 / ||x||_2, i.e. the l1 norm after unit-energy normalization."""
    x = as_signal(x, "x")
    n2 = float(np.linalg.norm(x))
    if n2 == 0:
        raise InvalidArgument("sparsity ratio undefined for the zero vector")
    return float(np.sum(np.abs(x)) / n2)
