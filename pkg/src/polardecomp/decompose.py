"""Subchannel capacities from polarization-factor decompositions.

``I(W_L^(i))`` is a signed sum of conditional entropies, one pair per
nonzero column of row ``i``: the target column given the columns outside the
row and the earlier columns of the row, without and with ``U_i`` known.

Two evaluation paths exist. :func:`subchannel_mi` goes term by term through
the relation algebra and tree pruning. :func:`capacity_profile` evaluates
all terms of all subchannels at once on dense distance arrays, which is what
makes large block lengths cheap; the two agree to numerical precision.
"""

from dataclasses import dataclass

import numpy as np

from .channel import (
    _distance_from_log_reliability,
    _log_reliability,
    noise_entropy,
    output_entropy,
    pc_entropy,
    pf_value,
    sc_entropy,
)
from .errors import DomainError
from .params import check_block_length
from .pftree import pf_of
from .relation import enumerate_terms, staging_threshold, support


@dataclass(frozen=True)
class CapacityProfile:
    """Capacities of all subchannels at one operating point.

    ``capacities`` are clamped to [0, 1]; ``raw`` keeps the unclamped sums.
    """

    L: int
    snr_db: float
    capacities: tuple
    channel_capacity: float
    raw: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "capacities", tuple(float(c) for c in self.capacities))
        object.__setattr__(self, "raw", tuple(float(c) for c in self.raw))


def channel_capacity(spec):
    """I(W) = h(Y) - h(N) for the physical channel."""
    return float(output_entropy(spec.amplitude, spec) - noise_entropy(spec))


def a_threshold(L, i):
    """Staging threshold A_t = L / 2^ceil(log2 i) used when pruning subchannel i."""
    return staging_threshold(L, i)


def subchannel_mi(L, i, spec):
    """I(W_L^(i)) as the signed sum of pruned polarization factors.

    Examples
    --------
    >>> from polardecomp.channel import ChannelSpec
    >>> spec = ChannelSpec.from_snr_db(2.0)
    >>> total = subchannel_mi(2, 1, spec) + subchannel_mi(2, 2, spec)
    >>> abs(total - 2 * channel_capacity(spec)) < 1e-12
    True
    """
    A_t = a_threshold(L, i)
    return float(sum(sign * pf_of(expr, spec, A_t) for expr, sign in enumerate_terms(L, i)))


def _sc(a, b, sigma):
    return _distance_from_log_reliability(_log_reliability(a, sigma) + _log_reliability(b, sigma), sigma)


def _group_distances(L, r0, rows, A, sigma):
    # all terms whose subcode starts at row r0 share one sequence of merges
    cols = np.arange(L)
    blocks, target = [], []
    for r in rows:
        D = np.array(support(L, r + 1))
        inside = (cols[None, :] & ~r) == 0
        observed = ~inside | (inside & (cols[None, :] < D[:, None]))
        blocks.append(np.where(observed, A, 0.0))
        target.append(D)
    obs = np.vstack(blocks)
    k = np.concatenate(target)
    idx = np.arange(obs.shape[0])
    n, rc, ops = L, r0, []
    while n > 1:
        h = n // 2
        hi = k >= h
        lo = k - h * hi
        partner = obs[idx, np.where(hi, lo, lo + h)]
        parallel = rc >= h
        if parallel:
            nxt = np.hypot(obs[:, :h], obs[:, h:])
            rc -= h
        else:
            nxt = _sc(obs[:, :h], obs[:, h:], sigma)
        nxt[idx, lo] = 0.0
        ops.append((parallel, partner))
        k, obs, n = lo, nxt, h
    v = np.full(obs.shape[0], np.inf if rc >= 1 else 0.0)
    for parallel, partner in reversed(ops):
        v = np.hypot(partner, v) if parallel else _sc(partner, v, sigma)
    return v


def term_distances(L, spec):
    """Effective distances of every decomposition term.

    Returns
    -------
    dict
        ``(i, prior) -> ndarray`` over j = 1..|D_i|, for i < L.
    """
    check_block_length(L)
    A, sigma = float(spec.amplitude), spec.sigma
    out = {}
    for r0 in range(L):
        # no-prior terms of row r0 and prior terms of row r0 - 1
        members = [(r0, False)] if r0 < L - 1 else []
        if r0 >= 1:
            members.append((r0 - 1, True))
        if not members:
            continue
        v = _group_distances(L, r0, [r for r, _ in members], A, sigma)
        start = 0
        for r, prior in members:
            size = 2 ** bin(r).count("1")
            out[(r + 1, prior)] = v[start : start + size]
            start += size
    return out


def _last_subchannel(L, spec):
    p = np.arange(1, L)
    hp = pf_value(np.sqrt(p) * spec.amplitude, spec)
    return float(output_entropy(spec.amplitude, spec) + np.sum(hp) - L * noise_entropy(spec))


def capacity_profile(L, spec, clamp=True):
    """Capacities of all ``L`` subchannels.

    Parameters
    ----------
    L : int
        Block length, a power of two.
    spec : ChannelSpec
    clamp : bool
        Clamp capacities to [0, 1] (raw values are kept either way).
    """
    dist = term_distances(L, spec)
    raw = np.empty(L)
    if L > 1:
        keys = sorted(dist)
        flat = np.concatenate([dist[k] for k in keys])
        vals = np.asarray(pf_value(flat, spec), dtype=float)
        sums, start = {}, 0
        for key in keys:
            n = dist[key].size
            sums[key] = vals[start : start + n].sum()
            start += n
        for i in range(1, L):
            raw[i - 1] = sums[(i, False)] - sums[(i, True)]
    raw[L - 1] = _last_subchannel(L, spec)
    caps = np.clip(raw, 0.0, 1.0) if clamp else raw
    return CapacityProfile(
        L=L,
        snr_db=spec.snr_db,
        capacities=tuple(caps),
        channel_capacity=channel_capacity(spec),
        raw=tuple(raw),
    )


def closed_form_small(L, i, spec):
    """Hand-derived capacities for L = 2 and L = 4."""
    hY = float(output_entropy(spec.amplitude, spec))
    hN = noise_entropy(spec)
    hS = lambda p: sc_entropy(p, spec)  # noqa: E731
    hP = lambda p: pc_entropy(p, spec)  # noqa: E731
    forms = {
        (2, 1): lambda: hY - hS(1),
        (2, 2): lambda: hY + hP(1) - 2 * hN,
        (4, 1): lambda: hY - hS(3),
        (4, 2): lambda: hY + hS(3) - 2 * hS(1),
        (4, 3): lambda: hY + hS(1) - hP(2) - hP(3),
        (4, 4): lambda: hY + hP(1) + hP(2) + hP(3) - 4 * hN,
    }
    if (L, i) not in forms:
        raise DomainError(f"closed forms exist only for L in {{2, 4}}, got (L={L}, i={i})")
    return float(forms[(L, i)]())


def rate_loss(profile, info_set):
    """(1/L) times the total capacity of the frozen subchannels."""
    info = set(int(i) for i in info_set)
    bad = [i for i in info if not 1 <= i <= profile.L]
    if bad:
        raise DomainError(f"info set indices out of range [1, {profile.L}]: {sorted(bad)}")
    frozen = [c for i, c in enumerate(profile.capacities, start=1) if i not in info]
    return float(sum(frozen) / profile.L)
