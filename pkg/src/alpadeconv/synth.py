"""Synthetic ground-truth instances y = h * e + w.

Filters are sums of exponentially decaying cosines sampled at n = 1, ..., L
(the first tap is n = 1, not n = 0) and normalized to unit energy.
Excitations are spike trains or i.i.d. generalized p-Gaussian draws.
The SNR convention throughout is 10 log10(||y_clean||^2 / (N sigma_w^2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .convolution import as_signal, convolve
from .errors import InvalidArgument


def _positive_int(value, name):
    if int(value) != value or value < 1:
        raise InvalidArgument(f"{name} must be a positive integer, got {value}")
    return int(value)


# -- excitations --------------------------------------------------------------

@dataclass(frozen=True)
class Impulses:
    """Kronecker spikes at ``indices`` (amplitude 1 unless ``amplitudes`` is given)."""

    indices: tuple
    length: int
    amplitudes: tuple | None = None
    kind: str = field(default="impulses", init=False)

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        _positive_int(self.length, "length")
        if not idx:
            raise InvalidArgument("at least one impulse index is required")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidArgument("impulse indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.length:
            raise InvalidArgument(f"impulse indices must lie in [0, {self.length})")
        if self.amplitudes is not None:
            amps = tuple(float(a) for a in self.amplitudes)
            if len(amps) != len(idx):
                raise InvalidArgument("need one amplitude per impulse")
            object.__setattr__(self, "amplitudes", amps)

    def generate(self):
        e = np.zeros(self.length)
        e[list(self.indices)] = 1.0 if self.amplitudes is None else self.amplitudes
        return e


@dataclass(frozen=True)
class Periodic:
    """``count`` spikes spaced ``period`` apart starting at 0; length period * count."""

    period: int
    count: int
    amplitudes: tuple | None = None
    kind: str = field(default="periodic", init=False)

    def __post_init__(self):
        _positive_int(self.period, "period")
        _positive_int(self.count, "count")
        if self.amplitudes is not None:
            amps = tuple(float(a) for a in self.amplitudes)
            if len(amps) != self.count:
                raise InvalidArgument("need one amplitude per period")
            object.__setattr__(self, "amplitudes", amps)

    @property
    def length(self):
        return self.period * self.count

    def generate(self):
        e = np.zeros(self.length)
        e[:: self.period] = 1.0 if self.amplitudes is None else self.amplitudes
        return e


@dataclass(frozen=True)
class GpG:
    p: float
    sigma_e: float
    length: int
    seed: int = 0
    kind: str = field(default="gpg", init=False)

    def __post_init__(self):
        _check_gpg(self.p, self.sigma_e)
        _positive_int(self.length, "length")

    def generate(self):
        return sample_gpg(self.p, self.sigma_e, self.length, self.seed)


def _check_gpg(p, sigma_e):
    if not 0 < p <= 1:
        raise InvalidArgument(f"p must lie in (0, 1], got {p}")
    if not sigma_e > 0:
        raise InvalidArgument(f"sigma_e must be positive, got {sigma_e}")


def gpg_gamma(p):
    """Scale factor making sigma_e the standard deviation of the gpG law."""
    return math.exp(0.5 * (gammaln(1.0 / p) - gammaln(3.0 / p)))


def sample_gpg(p, sigma_e, length, seed):
    """i.i.d. draws with density proportional to exp(-(|e| / (gamma sigma_e))^p).

    If G ~ Gamma(1/p, 1) then G^(1/p) has density proportional to exp(-t^p) on
    t > 0, so a random sign times gamma sigma_e G^(1/p) is exact.
    """
    _check_gpg(p, sigma_e)
    length = _positive_int(length, "length")
    rng = np.random.default_rng(seed)
    g = rng.gamma(1.0 / p, 1.0, length)
    sign = np.where(rng.random(length) < 0.5, -1.0, 1.0)
    return sign * gpg_gamma(p) * sigma_e * g ** (1.0 / p)


# -- filters ------------------------------------------------------------------

@dataclass(frozen=True)
class DecayingCosines:
    """h(n) = sum_k exp(-alpha_k n) cos(omega_k n), n = 1..length, unit-normalized."""

    alphas: tuple
    omegas: tuple
    length: int
    kind: str = field(default="decaying_cosines", init=False)

    def __post_init__(self):
        a = tuple(float(v) for v in self.alphas)
        w = tuple(float(v) for v in self.omegas)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "omegas", w)
        _positive_int(self.length, "length")
        if not a or len(a) != len(w):
            raise InvalidArgument("alphas and omegas must be nonempty and of equal length")
        if any(v <= 0 for v in a):
            raise InvalidArgument("alphas must be positive")

    def generate(self):
        n = np.arange(1, self.length + 1, dtype=np.float64)
        h = sum(np.exp(-al * n) * np.cos(om * n) for al, om in zip(self.alphas, self.omegas))
        norm = np.linalg.norm(h)
        if norm == 0:
            raise InvalidArgument("filter is identically zero")
        return h / norm


@dataclass(frozen=True)
class UserFilter:
    taps: tuple
    kind: str = field(default="user", init=False)

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(float(v) for v in as_signal(self.taps, "taps")))

    @property
    def length(self):
        return len(self.taps)

    def generate(self):
        h = np.asarray(self.taps)
        norm = np.linalg.norm(h)
        if norm == 0:
            raise InvalidArgument("filter is identically zero")
        return h / norm


# -- noise --------------------------------------------------------------------

@dataclass(frozen=True)
class NoNoise:
    kind: str = field(default="none", init=False)


@dataclass(frozen=True)
class AwgnSnr:
    """White Gaussian noise rescaled so that the realized SNR equals ``snr_db`` exactly."""

    snr_db: float
    seed: int = 0
    kind: str = field(default="awgn_snr_db", init=False)

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise InvalidArgument("snr_db must be finite")


@dataclass(frozen=True)
class AwgnSigma:
    """i.i.d. N(0, sigma^2) noise."""

    sigma: float
    seed: int = 0
    kind: str = field(default="awgn_sigma", init=False)

    def __post_init__(self):
        if not self.sigma >= 0:
            raise InvalidArgument("sigma must be >= 0")


_EXCITATIONS = {"impulses": Impulses, "periodic": Periodic, "gpg": GpG}
_FILTERS = {"decaying_cosines": DecayingCosines, "user": UserFilter}
_NOISES = {"none": NoNoise, "awgn_snr_db": AwgnSnr, "awgn_sigma": AwgnSigma}


def _to_dict(obj):
    d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in obj.__dict__.items() if k != "kind"}
    return {"kind": obj.kind, **d}


def _from_dict(table, d, what):
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in table:
        raise InvalidArgument(f"unknown {what} kind {kind!r}; expected one of {sorted(table)}")
    try:
        return table[kind](**d)
    except TypeError as exc:
        raise InvalidArgument(f"bad {what} fields: {exc}") from exc


@dataclass(frozen=True)
class SynthSpec:
    excitation: Impulses | Periodic | GpG
    filter: DecayingCosines | UserFilter
    noise: NoNoise | AwgnSnr | AwgnSigma = field(default_factory=NoNoise)

    def to_dict(self):
        return {"excitation": _to_dict(self.excitation), "filter": _to_dict(self.filter),
                "noise": _to_dict(self.noise)}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(excitation=_from_dict(_EXCITATIONS, d["excitation"], "excitation"),
                       filter=_from_dict(_FILTERS, d["filter"], "filter"),
                       noise=_from_dict(_NOISES, d.get("noise", {"kind": "none"}), "noise"))
        except KeyError as exc:
            raise InvalidArgument(f"missing spec section {exc}") from exc

    def with_noise(self, noise):
        return SynthSpec(self.excitation, self.filter, noise)


@dataclass(eq=False)
class Instance:
    h_true: np.ndarray
    e_true: np.ndarray
    y_clean: np.ndarray
    y: np.ndarray
    snr_actual_db: float  # +inf without noise

    @property
    def noise(self):
        return self.y - self.y_clean


def snr_db(clean, noise):
    """10 log10(||clean||^2 / (N sigma_w^2)) with sigma_w^2 = ||noise||^2 / N."""
    pn = float(noise @ noise)
    if pn == 0:
        return math.inf
    return 10.0 * math.log10(float(clean @ clean) / pn)


def make_instance(spec):
    h = spec.filter.generate()
    e = spec.excitation.generate()
    y_clean = convolve(h, e)
    N = y_clean.size
    noise = spec.noise
    if isinstance(noise, NoNoise) or (isinstance(noise, AwgnSigma) and noise.sigma == 0):
        return Instance(h, e, y_clean, y_clean.copy(), math.inf)
    rng = np.random.default_rng(noise.seed)
    w = rng.standard_normal(N)
    if isinstance(noise, AwgnSnr):
        target = float(y_clean @ y_clean) / (N * 10.0 ** (noise.snr_db / 10.0))
        w *= math.sqrt(target * N / float(w @ w))
    else:
        w *= noise.sigma
    return Instance(h, e, y_clean, y_clean + w, snr_db(y_clean, w))


SEC4_INDICES = (10, 62, 85, 100, 150, 182)
SEC4_ALPHAS = (0.01, 0.014, 0.025)
SEC4_OMEGAS = (0.075, 0.138, 0.375)


def sec4_spec(noise=None, amplitudes=None):
    """Six unit spikes in M = 200 samples through a 100-tap three-cosine filter (N = 299)."""
    return SynthSpec(
        excitation=Impulses(SEC4_INDICES, 200, amplitudes),
        filter=DecayingCosines(SEC4_ALPHAS, SEC4_OMEGAS, 100),
        noise=noise if noise is not None else NoNoise(),
    )


PRESETS = {"sec4": sec4_spec}
