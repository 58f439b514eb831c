"""Information-set selection.

Every method scores the subchannels (higher means more reliable) and keeps
the top K, breaking ties toward the higher index.

* ``pf``  -- decomposed mutual information.
* ``ga``  -- Gaussian approximation of density evolution.
* ``bpa`` -- Bhattacharyya recursion of the erasure channel.
* ``pw``  -- polarization weight with beta = 2^(1/4).
* ``mc``  -- genie-aided Monte Carlo mutual information.
"""

import json
import time
from dataclasses import dataclass

import numpy as np

from .codec import PolarCode, simulate
from .decompose import capacity_profile
from .errors import DomainError
from .oracle import mi_monte_carlo
from .params import check_block_length

METHODS = ("pf", "ga", "bpa", "pw", "mc")
FORMAT_VERSION = 1

# two-segment GA fit of the density-evolution function
_GA_ALPHA, _GA_GAMMA, _GA_SWITCH = -0.4527, 0.0218, 10.0
PW_BETA = 2.0**0.25


def _log_phi(x):
    # log of the two-segment phi; the low segment exceeds 1 for x < 0.03,
    # so phi is capped at phi(0) = 1
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        low = _GA_ALPHA * np.power(x, 0.86) + _GA_GAMMA
        high = 0.5 * np.log(np.pi / x) - x / 4.0 + np.log1p(-10.0 / (7.0 * x))
    out = np.minimum(np.where(x < _GA_SWITCH, low, high), 0.0)
    return np.where(x <= 0, 0.0, out)


def _phi(x):
    return np.exp(_log_phi(x))


def _check_mean(m):
    # phi^-1(1 - (1 - phi(m))^2), inverted by bisection on [0, m] in log space
    m = np.asarray(m, dtype=float)
    lp = _log_phi(m)
    target = lp + np.log(2.0 - np.exp(lp))
    lo, hi = np.zeros(m.shape), m.copy()
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        above = _log_phi(mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.where(target >= 0.0, 0.0, 0.5 * (lo + hi))


def _butterfly(n, value, check, var):
    # index bits are consumed MSB first: bit 0 -> check node, bit 1 -> variable node
    vals = np.array([value], dtype=float)
    while vals.size < n:
        vals = np.stack([check(vals), var(vals)], axis=1).ravel()
    return vals


def ga_means(L, spec):
    """Mean LLRs of all subchannels under the Gaussian approximation."""
    check_block_length(L)
    m0 = spec.amplitude**2 / (2.0 * spec.sigma2)

    return _butterfly(L, m0, _check_mean, lambda m: 2.0 * m)


def bhattacharyya(L, spec=None, z0=None):
    """Bhattacharyya parameters from the erasure recursion z -> (2z - z^2, z^2)."""
    check_block_length(L)
    if z0 is None:
        if spec is None:
            raise DomainError("need spec or z0")
        z0 = float(np.exp(-spec.amplitude**2 / (8.0 * spec.sigma2)))
    return _butterfly(L, float(z0), lambda z: 2 * z - z * z, lambda z: z * z)


def polarization_weight(L, beta=PW_BETA):
    """sum_b bit_b(i - 1) * beta^b."""
    l = check_block_length(L)
    r = np.arange(L)
    return sum(((r >> b) & 1) * beta**b for b in range(l)).astype(float)


def reliabilities(method, L, spec, frames=100_000, seed=0, z0=None):
    """Per-subchannel reliability score of ``method`` (higher is better)."""
    if method == "pf":
        return np.array(capacity_profile(L, spec).capacities)
    if method == "ga":
        return ga_means(L, spec)
    if method == "bpa":
        return -bhattacharyya(L, spec, z0)
    if method == "pw":
        return polarization_weight(L)
    if method == "mc":
        return mi_monte_carlo(L, spec, frames=frames, seed=seed)[0]
    raise DomainError(f"unknown method {method!r}; choose from {METHODS}")


def top_k(scores, K):
    """1-based indices of the K best scores, ties toward the higher index."""
    scores = np.asarray(scores, dtype=float)
    L = scores.size
    if not 0 <= K <= L:
        raise DomainError(f"K must lie in [0, {L}], got {K}")
    order = sorted(range(L), key=lambda k: (scores[k], k), reverse=True)
    return tuple(sorted(k + 1 for k in order[:K]))


def construct(method, L, K, spec, frames=100_000, seed=0, z0=None):
    """Polar code of dimension K chosen by ``method``.

    Examples
    --------
    >>> construct("bpa", 2, 1, None, z0=0.5).info_set
    (2,)
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
    check_block_length(L)
    if not 0 <= K <= L:
        raise DomainError(f"K must lie in [0, {L}], got {K}")
    scores = reliabilities(method, L, spec, frames=frames, seed=seed, z0=z0)
    snr = None if spec is None else round(spec.snr_db, 12)
    return PolarCode(L, top_k(scores, K), method=method, snr_db=snr)


def dominates(j, i):
    """True if subchannel j is at least as reliable as i on every channel.

    With r = index - 1, this holds when every suffix of high-order bits of
    r_j carries at least as many ones as the same suffix of r_i.
    """
    a, b = i - 1, j - 1
    width = max(a.bit_length(), b.bit_length())
    for k in range(width + 1):
        if bin(a >> k).count("1") > bin(b >> k).count("1"):
            return False
    return True


def respects_partial_order(code):
    """True if no frozen index dominates an information index."""
    info = set(code.info_set)
    for i in info:
        for j in range(1, code.L + 1):
            if j not in info and j != i and dominates(j, i):
                return False
    return True


def code_to_json(code):
    return json.dumps(
        {
            "format_version": FORMAT_VERSION,
            "L": code.L,
            "info_set": list(code.info_set),
            "method": code.method,
            "snr_db": code.snr_db,
        }
    )


def code_from_json(text):
    data = json.loads(text)
    if data.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
        raise DomainError(f"unsupported format_version {data.get('format_version')}")
    try:
        return PolarCode(int(data["L"]), data["info_set"], method=data.get("method"), snr_db=data.get("snr_db"))
    except KeyError as exc:
        raise DomainError(f"code file lacks {exc.args[0]!r}") from None


@dataclass(frozen=True)
class MethodResult:
    method: str
    seconds: float
    code: PolarCode
    table: object


def compare(methods, L, K, spec, snr_grid, frames, seed=0, mc_frames=100_000):
    """Construct with each method, time it, and simulate every code."""
    out = []
    for m in methods:
        t0 = time.perf_counter()
        code = construct(m, L, K, spec, frames=mc_frames, seed=seed)
        elapsed = time.perf_counter() - t0
        out.append(MethodResult(m, elapsed, code, simulate(code, spec, snr_grid, frames, seed=seed)))
    return tuple(out)
