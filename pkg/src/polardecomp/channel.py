"""Binary-input AWGN channel model.

Inputs take values in {0, A}. Everything here works with the Euclidean
distance ``d`` between the two noiseless output points: the physical channel
has ``d = A`` and a merged (virtual) observation has some other distance.
All entropies are differential entropies in bits.

SNR convention: ``snr = A**2 / (4 * sigma2)``, i.e. the SNR of the
equivalent antipodal constellation {-A/2, +A/2}. Uncoded hard-decision
BER is then ``Q(sqrt(snr))``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .errors import DomainError

LN2 = np.log(2.0)
FIT_GRID = np.linspace(0.0, 1.0, 10_000)
FIT_TOL = 1e-3
_BISECT_SPAN = 60.0
_BISECT_TOL = 1e-12


@lru_cache(maxsize=None)
def fit_log_poly(rho):
    """Least-squares fit of ``log2(1 + x)`` on [0, 1].

    Parameters
    ----------
    rho : int
        Number of coefficients (polynomial degree ``rho - 1``).

    Returns
    -------
    tuple of float
        Coefficients ``gamma_0 .. gamma_{rho-1}`` in increasing power.
    """
    rho = int(rho)
    if rho < 1:
        raise DomainError(f"poly_order must be >= 1, got {rho}")
    target = np.log2(1.0 + FIT_GRID)
    coef = np.polynomial.polynomial.polyfit(FIT_GRID, target, rho - 1)
    return tuple(float(c) for c in coef)


@lru_cache(maxsize=64)
def fit_error(gamma):
    """Max-abs error of the polynomial ``gamma`` against log2(1+x) on the grid."""
    approx = np.polynomial.polynomial.polyval(FIT_GRID, np.asarray(gamma))
    return float(np.max(np.abs(approx - np.log2(1.0 + FIT_GRID))))


@dataclass(frozen=True)
class ChannelSpec:
    """AWGN channel description.

    Parameters
    ----------
    sigma2 : float
        Noise variance.
    amplitude : float
        Input level A; inputs are {0, A}.
    poly_order : int
        Number of fitted coefficients rho.
    gamma : tuple of float, optional
        Coefficients of the log2(1+x) fit. Fitted from ``poly_order`` when
        omitted.
    """

    sigma2: float
    amplitude: float = 1.0
    poly_order: int = 7
    gamma: tuple = None

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        if not np.isfinite(self.amplitude) or self.amplitude <= 0:
            raise DomainError(f"amplitude must be positive, got {self.amplitude}")
        if int(self.poly_order) != self.poly_order or self.poly_order < 1:
            raise DomainError(f"poly_order must be a positive integer, got {self.poly_order}")
        if self.gamma is None:
            object.__setattr__(self, "gamma", fit_log_poly(self.poly_order))
        else:
            object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if len(self.gamma) != self.poly_order:
            raise DomainError("gamma must hold exactly poly_order coefficients")
        if fit_error(self.gamma) > FIT_TOL:
            raise DomainError("gamma does not fit log2(1+x) to within 1e-3")

    @classmethod
    def from_snr_db(cls, snr_db, amplitude=1.0, poly_order=7):
        """Build a spec from an SNR in dB (see module docstring)."""
        snr = 10.0 ** (float(snr_db) / 10.0)
        return cls(sigma2=amplitude**2 / (4.0 * snr), amplitude=amplitude, poly_order=poly_order)

    @property
    def sigma(self):
        return float(np.sqrt(self.sigma2))

    @property
    def snr_db(self):
        return float(10.0 * np.log10(self.amplitude**2 / (4.0 * self.sigma2)))


@dataclass(frozen=True)
class VirtualChannel:
    """A merged binary observation, described by its effective distance."""

    distance: float
    spec: ChannelSpec

    @property
    def err(self):
        return float(error_prob(self.distance, self.spec))

    @classmethod
    def from_err(cls, err, spec):
        return cls(float(inv_error_prob(err, spec)), spec)


def _check_distance(d):
    d = np.asarray(d, dtype=float)
    if np.any(np.isnan(d)) or np.any(d < 0):
        raise DomainError("distance must be non-negative")
    return d


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def noise_entropy(spec):
    """Differential entropy of the Gaussian noise, 0.5*log2(2*pi*e*sigma2)."""
    return float(0.5 * np.log2(2.0 * np.pi * np.e * spec.sigma2))


def output_entropy(d, spec):
    """Closed-form approximation of the output entropy h_Y(d).

    The mixture 0.5*N(0, s2) + 0.5*N(d, s2) is symmetric about d/2, so the
    integral is taken over y <= d/2 only, where the likelihood ratio
    ``r = f(y - d) / f(y)`` lies in (0, 1]. There ``log2(1 + r)`` is replaced
    by the fitted polynomial, and every remaining term is a Gaussian
    moment or tail probability.

    Parameters
    ----------
    d : float or ndarray
        Distance between the two input points, d >= 0. ``inf`` is allowed.
    spec : ChannelSpec

    Returns
    -------
    float or ndarray
        Entropy in bits.
    """
    d = _check_distance(d)
    s = spec.sigma
    gamma = np.asarray(spec.gamma)
    finite = np.isfinite(d)
    dd = np.where(finite, d, 0.0)
    c = dd / 2.0
    # truncated second moments of both components below c
    z = c / s
    e0 = spec.sigma2 * special.ndtr(z) - s * stats.norm.pdf(z) * c
    e1 = (dd**2 + spec.sigma2) * special.ndtr(-z) - s * stats.norm.pdf(z) * (dd + c)
    j = np.arange(len(gamma) + 1)
    u = (dd**2 / (2.0 * spec.sigma2))[..., None]
    log_m = (j * j - j) * u + special.log_ndtr((0.5 - j) * (dd / s)[..., None])
    m = np.exp(log_m)
    poly = np.sum(gamma * (m[..., :-1] + m[..., 1:]), axis=-1)
    h = 1.0 + 0.5 * np.log2(2.0 * np.pi * spec.sigma2) + (e0 + e1) / (2.0 * spec.sigma2 * LN2) - poly
    h = np.where(finite, h, noise_entropy(spec) + 1.0 - gamma[0])
    return _out(h)


def error_prob(d, spec):
    """ML detection error probability Q(d / (2 sigma)) at distance d."""
    d = _check_distance(d)
    return _out(special.ndtr(-d / (2.0 * spec.sigma)))


def _inv_error_prob(e, spec):
    # bisection on [0, 60 sigma]; e = 0 maps to an infinite distance
    e = np.asarray(e, dtype=float)
    sigma = spec.sigma
    lo = np.zeros(e.shape)
    hi = np.full(e.shape, _BISECT_SPAN * sigma)
    n_iter = int(np.ceil(np.log2(_BISECT_SPAN * sigma / _BISECT_TOL))) + 1
    for _ in range(max(n_iter, 1)):
        mid = 0.5 * (lo + hi)
        above = special.ndtr(-mid / (2.0 * sigma)) > e
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    d = 0.5 * (lo + hi)
    d = np.where(e >= 0.5, 0.0, d)
    return np.where(e <= 0.0, np.inf, d)


def inv_error_prob(e, spec):
    """Distance d >= 0 with error_prob(d) = e, found by bisection.

    Parameters
    ----------
    e : float or ndarray
        Error probability in (0, 1/2].
    spec : ChannelSpec

    Returns
    -------
    float or ndarray
    """
    e = np.asarray(e, dtype=float)
    if np.any(np.isnan(e)) or np.any(e <= 0) or np.any(e > 0.5):
        raise DomainError("error probability must lie in (0, 1/2]")
    return _out(_inv_error_prob(e, spec))


def combined_error(e1, p):
    """Error probability of the XOR of ``p`` independent estimates.

    Sums the probabilities of an odd number of wrong estimates; equal to
    ``(1 - (1 - 2 e1)**p) / 2``.
    """
    p = int(p)
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    e1 = np.asarray(e1, dtype=float)
    if np.any(e1 < 0) or np.any(e1 > 0.5):
        raise DomainError("e1 must lie in [0, 1/2]")
    k = np.arange(1, p + 1, 2)
    total = np.sum(stats.binom.pmf(k, p, e1[..., None]), axis=-1)
    return _out(np.clip(total, 0.0, 0.5))


def serial_error(errs):
    """Error probability of the XOR of independent estimates with errors ``errs``."""
    errs = np.asarray(errs, dtype=float)
    with np.errstate(divide="ignore"):
        log_rel = np.sum(np.log1p(-2.0 * errs))
    return float(-np.expm1(log_rel) / 2.0)


def merge_serial(distances, spec):
    """Virtual distance of the XOR of independent observations (SC merge)."""
    distances = _check_distance(distances)
    if distances.size == 0:
        raise DomainError("nothing to merge")
    e = serial_error(error_prob(distances.ravel(), spec))
    return float(_inv_error_prob(e, spec))


def merge_parallel(distances):
    """Virtual distance of repeated observations of one bit (PC merge)."""
    distances = _check_distance(distances)
    return float(np.sqrt(np.sum(distances**2)))


def pf_value(d, spec):
    """Conditional entropy h(Y | merged observation at distance d).

    ``h(Y, Y') - h(Y')`` for the target output Y and a virtual output Y'
    of the same bit: the pair is a binary input at distance sqrt(A^2 + d^2).
    ``d = 0`` gives h(Y) exactly; ``d = inf`` (bit known) gives h(N).
    """
    d = _check_distance(d)
    finite = np.isfinite(d)
    dd = np.where(finite, d, 0.0)
    joint = output_entropy(np.hypot(spec.amplitude, dd), spec)
    # information carried by the virtual output, measured from the fit's own
    # zero so that d = 0 is exact and the map stays continuous
    virtual = np.asarray(output_entropy(dd, spec)) - output_entropy(0.0, spec)
    val = np.asarray(joint) - virtual
    return _out(np.where(finite, val, noise_entropy(spec)))


def sc_distance(p, spec):
    """Virtual distance after SC merging of ``p`` independent channel outputs."""
    if int(p) == 1:
        return float(spec.amplitude)
    e = combined_error(error_prob(spec.amplitude, spec), p)
    return float(_inv_error_prob(e, spec))


def sc_entropy(p, spec):
    """SC entropy h_S(p): the target is the XOR of p independent bits."""
    p = int(p)
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    return pf_value(sc_distance(p, spec), spec)


def pc_entropy(p, spec):
    """PC entropy h_P(p): the target is observed p more times."""
    p = int(p)
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    return pf_value(np.sqrt(p) * spec.amplitude, spec)


def _log_reliability(d, sigma):
    # log(1 - 2 Q(d / 2 sigma)) without cancellation at either end
    x = np.asarray(d, dtype=float) / (2.0 * sigma * np.sqrt(2.0))
    with np.errstate(divide="ignore"):
        small = np.log(special.erf(x))
        big = np.log1p(-special.erfc(x))
    return np.where(x < 0.5, small, big)


def _distance_from_log_reliability(log_rel, sigma):
    # inverse of _log_reliability via library quantiles (fast path)
    rel = np.exp(log_rel)
    e = -np.expm1(log_rel) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(rel < 0.5, np.sqrt(2.0) * special.erfinv(rel), -special.ndtri(e))
    return 2.0 * sigma * x
