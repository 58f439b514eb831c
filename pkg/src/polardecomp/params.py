"""Per-subchannel structural parameters of the natural-order polar transform.

Subchannel ``i`` (1-based) corresponds to row ``r = i - 1`` of
``B_L = F^{(x) l}``; its nonzero columns are exactly the subsets of ``r``
in binary, which is what most of the closed forms below exploit.
"""

from dataclasses import dataclass, field

from .errors import DomainError


def _ceil_log2(x):
    return (int(x) - 1).bit_length()


def check_block_length(L):
    """Return ``log2(L)`` or raise DomainError if L is not a power of two >= 2."""
    if int(L) != L or L < 2 or (int(L) & (int(L) - 1)):
        raise DomainError(f"block length must be a power of two >= 2, got {L}")
    return int(L).bit_length() - 1


def _check(L, i):
    l = check_block_length(L)
    if int(i) != i or not 1 <= i <= L:
        raise DomainError(f"subchannel index must lie in [1, {L}], got {i}")
    return l


def hamming(L, i):
    """H_L(i): weight of row i, via H(i) = 2 H(i - 2^(ceil(log i) - 1))."""
    _check(L, i)
    h = 1
    while i > 1:
        i -= 2 ** (_ceil_log2(i) - 1)
        h *= 2
    return h


def repetition(L, i):
    """beta_L(i) = L / 2^ceil(log(L + 1 - i))."""
    _check(L, i)
    return L // 2 ** _ceil_log2(L + 1 - i)


def leading_ones(L, i):
    """C_L(i): length of the initial run of ones in row i.

    Row ``i - 1`` covers columns ``c`` with ``c`` a binary subset of ``i - 1``,
    so the run is ``2^(trailing ones of i - 1)``. This coincides with the
    K-table rule (4, 1, 2, 1) for L <= 16 and corrects it beyond.
    """
    _check(L, i)
    r = i - 1
    t = 0
    while r & 1:
        r >>= 1
        t += 1
    return 2**t


def theta_table(L):
    """theta_L(2..L) from the nesting [theta + 1, 1, theta] of tail blocks."""
    check_block_length(L)
    seq = [1]
    while len(seq) < L - 1:
        seq = [t + 1 for t in seq] + [1] + seq
    return seq


def epsilon(L, i):
    """epsilon_L(i) = log L + 1 - ceil(log i), for i >= 2."""
    l = _check(L, i)
    if i == 1:
        return None
    return l + 1 - _ceil_log2(i)


@dataclass(frozen=True)
class SubchannelParams:
    L: int
    i: int
    hamming: int
    repetition: int
    leading_ones: int
    theta: int = None
    epsilon: int = None

    @property
    def theta_hat(self):
        return None if self.theta is None else 2**self.theta - 1

    @property
    def epsilon_hat(self):
        return None if self.epsilon is None else 2**self.epsilon - 1


def subchannel_params(L, i):
    """The five structural parameters of subchannel ``i``.

    Examples
    --------
    >>> p = subchannel_params(8, 6)
    >>> (p.hamming, p.repetition, p.leading_ones, p.theta, p.epsilon)
    (4, 2, 2, 2, 1)
    """
    _check(L, i)
    theta = None if i == 1 else theta_table(L)[i - 2]
    return SubchannelParams(
        L=L,
        i=i,
        hamming=hamming(L, i),
        repetition=repetition(L, i),
        leading_ones=leading_ones(L, i),
        theta=theta,
        epsilon=epsilon(L, i),
    )


@dataclass(frozen=True)
class LayerStructure:
    """Layer decomposition of D_i: ``Q[0] = C`` and ``Q[1..M]`` covering counts."""

    M: int
    Q: tuple
    t: tuple = field(default=())


def layer_structure(L, i):
    """Layer count M and the Q / t sequences of subchannel ``i``.

    Q_M, Q_{M-1}, ... are peeled off from the outermost covering matrix
    inwards: each is the repetition count of the covering matrix of the
    current row index ``t``, capped so the product never exceeds
    H / C (or H / (C beta) in the upper half, where beta copies sit on top).
    """
    _check(L, i)
    H = hamming(L, i)
    C = leading_ones(L, i)
    upper = i > L // 2
    beta = repetition(L, i)
    budget = H // (C * beta) if upper else H // C
    t = i % (L // beta) if upper else i
    ts, qs = [], []
    while t >= 1 and budget > 1:
        size = 2 ** _ceil_log2(t)
        rep = repetition(size, t) if size >= 2 else 1
        q = min(budget, rep)
        if q <= 1:
            break
        ts.append(t)
        qs.append(q)
        budget //= q
        t = t % (size // rep)
    # qs holds Q_M, Q_{M-1}, ... ; store as Q_0, Q_1, ..., Q_M
    return LayerStructure(M=len(qs), Q=(C,) + tuple(reversed(qs)), t=tuple(ts))
