"""Linear convolution, convolution operators and Riesz-bound analysis.

All signals are 1-D float64 arrays. A kernel ``h`` of length L acting on an
input of length M produces an output of length N = L + M - 1 (full linear
convolution, never circular).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import convolution_matrix, toeplitz

from .errors import InvalidArgument


def as_signal(x, name="signal"):
    """Validate and convert ``x`` to a finite, nonempty 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgument(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidArgument(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} contains NaN or Inf")
    return arr


def convolve(h, e):
    """Full linear convolution ``h * e`` (direct summation, length L+M-1)."""
    h = as_signal(h, "h")
    e = as_signal(e, "e")
    return np.convolve(h, e)


@dataclass(frozen=True, eq=False)
class ConvOperator:
    """The N x M matrix of convolution with ``kernel``, applied matrix-free.

    Column ``s`` of :meth:`matrix` is the kernel shifted down by ``s`` samples
    and zero padded. The same type serves for H (kernel = filter, input =
    excitation) and E (kernel = excitation, input = filter).
    """

    kernel: np.ndarray
    input_len: int

    @property
    def output_len(self):
        return self.kernel.size + self.input_len - 1

    @property
    def shape(self):
        return (self.output_len, self.input_len)

    def apply(self, x):
        x = as_signal(x, "x")
        if x.size != self.input_len:
            raise InvalidArgument(f"expected input of length {self.input_len}, got {x.size}")
        return np.convolve(self.kernel, x)

    def adjoint(self, y):
        """Apply the transpose: correlate ``y`` with the kernel, keep ``input_len`` lags."""
        y = as_signal(y, "y")
        if y.size != self.output_len:
            raise InvalidArgument(f"expected input of length {self.output_len}, got {y.size}")
        return np.correlate(y, self.kernel, mode="valid")

    def matrix(self):
        return convolution_matrix(self.kernel, self.input_len, mode="full")

    def gram(self):
        """H^T H built from the kernel autocorrelation (symmetric Toeplitz)."""
        r = autocorrelation(self.kernel)
        col = np.zeros(self.input_len)
        n = min(r.size, self.input_len)
        col[:n] = r[:n]
        return toeplitz(col)


def make_operator(kernel, input_len):
    kernel = as_signal(kernel, "kernel")
    if int(input_len) != input_len or input_len < 1:
        raise InvalidArgument(f"input_len must be a positive integer, got {input_len}")
    return ConvOperator(kernel=kernel.copy(), input_len=int(input_len))


def autocorrelation(h):
    """Deterministic autocorrelation r(l) = sum_n h[n] h[n+l] for l = 0..L-1."""
    h = as_signal(h, "h")
    return np.correlate(h, h, mode="full")[h.size - 1:]


@dataclass(frozen=True)
class RieszReport:
    """Riesz bounds of the columns of a convolution operator.

    All bounds refer to the unit-norm version of the kernel; ``scale`` is the
    original kernel norm. ``gersh_*`` come from Gerschgorin discs of the exact
    Gram matrix, ``svd_*`` are the extreme squared singular values.
    ``half_lag_sum`` is the lag sum up to ceil((M-1)/2) used by the
    odd-M sufficiency test, reported for comparison only.
    """

    gersh_lower: float
    gersh_upper: float
    svd_lower: float
    svd_upper: float
    eta: float
    eta_sufficient: bool
    autocorr_abs_sum: float
    half_lag_sum: float
    half_lag_sufficient: bool
    scale: float

    def as_dict(self):
        return dict(self.__dict__)


def riesz_report(kernel, input_len, eta):
    kernel = as_signal(kernel, "kernel")
    if not 0.0 < eta <= 1.0:
        raise InvalidArgument(f"eta must lie in (0, 1], got {eta}")
    scale = float(np.linalg.norm(kernel))
    if scale == 0.0:
        raise InvalidArgument("kernel is identically zero")
    op = make_operator(kernel / scale, input_len)

    gram = op.gram()
    off = np.abs(gram).sum(axis=1) - np.abs(np.diag(gram))
    radius = float(off.max())
    diag = float(gram[0, 0])

    sv = np.linalg.svd(op.matrix(), compute_uv=False)
    r = np.abs(autocorrelation(op.kernel))
    lag_sum = float(r[1:].sum())
    half = int(np.ceil((op.input_len - 1) / 2))
    half_sum = float(r[1:half + 1].sum())
    return RieszReport(
        gersh_lower=diag - radius,
        gersh_upper=diag + radius,
        svd_lower=float(sv[-1] ** 2),
        svd_upper=float(sv[0] ** 2),
        eta=float(eta),
        eta_sufficient=lag_sum <= (1.0 - eta) / 2.0,
        autocorr_abs_sum=lag_sum,
        half_lag_sum=half_sum,
        half_lag_sufficient=half_sum <= (1.0 - eta) / 2.0,
        scale=scale,
    )
