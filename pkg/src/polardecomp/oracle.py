"""Independent reference computations.

Nothing here uses the relation algebra's evaluation path: representations
come from linear algebra over GF(2), mutual information from genie-aided
SC simulation and output entropies from numerical quadrature.
"""

from collections import Counter

import numpy as np
from scipy import integrate, special, stats

from .channel import noise_entropy
from .errors import CapacityError, DomainError
from .params import check_block_length
from .relation import KNOWN, LEAF, expand

MAX_ORACLE_LENGTH = 64


def polar_matrix(L):
    """B_L = F^{(x) log L} over GF(2), natural order."""
    check_block_length(L)
    F = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    B = np.ones((1, 1), dtype=np.uint8)
    while B.shape[0] < L:
        B = np.kron(B, F)
    return B


def subcode_matrix(L, first_row):
    """Generator of C_L(first_row): rows first_row..L of B_L (1-based)."""
    if not 1 <= first_row <= L + 1:
        raise DomainError(f"first_row must lie in [1, {L + 1}], got {first_row}")
    return polar_matrix(L)[first_row - 1 :]


def _column_masks(G):
    weights = 1 << np.arange(G.shape[0], dtype=object)
    return [int(np.dot(G[:, c].astype(object), weights)) if G.shape[0] else 0 for c in range(G.shape[1])]


def _reduce(v, basis):
    for b in basis:
        v = min(v, v ^ b)
    return v


def _insert(v, basis):
    v = _reduce(v, basis)
    if not v:
        return None
    return sorted(basis + [v], reverse=True)


def _setup(L, first_row, target, observed):
    check_block_length(L)
    if L > MAX_ORACLE_LENGTH:
        raise CapacityError(f"GF(2) oracle supports L <= {MAX_ORACLE_LENGTH}")
    cols = _column_masks(subcode_matrix(L, first_row))
    classes = {}
    for c in sorted(set(observed) - {target}):
        if cols[c]:
            classes.setdefault(cols[c], []).append(c)
    return cols, cols[target], classes


def _minimal_solutions(t, classes, max_count):
    # independent sets of distinct column values XOR-ing to t, by DFS with
    # span pruning on the remaining candidates
    vals = list(classes)
    n = len(vals)
    suffix = [[] for _ in range(n + 1)]
    for k in range(n - 1, -1, -1):
        nb = _insert(vals[k], suffix[k + 1])
        suffix[k] = suffix[k + 1] if nb is None else nb
    found = 0
    stack = [(0, t, [], ())]
    while stack:
        k, resid, basis, chosen = stack.pop()
        if resid == 0:
            found += 1
            if found > max_count:
                raise CapacityError(f"more than {max_count} representations")
            yield chosen
            continue
        if k == n or _reduce(resid, suffix[k]):
            continue
        stack.append((k + 1, resid, basis, chosen))
        nb = _insert(vals[k], basis)
        if nb is not None:
            stack.append((k + 1, resid ^ vals[k], nb, chosen + (vals[k],)))


def gf2_size_counts(L, first_row, target, observed, max_count=10**6):
    """Multiset ``{size: count}`` of the minimal representations of a bit.

    Columns with identical values are solved once and counted with their
    multiplicity, so this stays cheap where the expanded set is huge.
    """
    _, t, classes = _setup(L, first_row, target, observed)
    if t == 0:
        return Counter({0: 1})
    out = Counter()
    for sol in _minimal_solutions(t, classes, max_count):
        mult = 1
        for v in sol:
            mult *= len(classes[v])
        out[len(sol)] += mult
    return out


def gf2_representations(L, first_row, target, observed, max_count=10**6, minimal=True):
    """Column subsets whose XOR equals the target column on the subcode.

    Parameters
    ----------
    L : int
    first_row : int
        1-based first generator row of the subcode C_L(first_row).
    target : int
        0-based target column.
    observed : iterable of int
        0-based candidate columns.
    max_count : int
        Abort with CapacityError beyond this many subsets.
    minimal : bool
        True: only linearly independent subsets (the target plus the subset
        form a circuit). False: every solution, an affine space over the
        null space of the observed columns.

    Returns
    -------
    set of frozenset of int
    """
    cols, t, classes = _setup(L, first_row, target, observed)
    if minimal:
        if t == 0:
            return {frozenset()}
        out = set()
        for sol in _minimal_solutions(t, classes, max_count):
            picks = [()]
            for v in sol:
                picks = [p + (c,) for p in picks for c in classes[v]]
                if len(out) + len(picks) > max_count:
                    raise CapacityError(f"more than {max_count} representations")
            out.update(frozenset(p) for p in picks)
        return out
    obs = sorted(set(observed) - {target})
    # particular solution and null space by elimination with subset tracking
    pivots = []
    null = []
    for c in obs:
        v, m = cols[c], 1 << c
        for pv, pm in pivots:
            if v ^ pv < v:
                v, m = v ^ pv, m ^ pm
        if v:
            pivots.append((v, m))
            pivots.sort(reverse=True)
        else:
            null.append(m)
    v, m = t, 0
    for pv, pm in pivots:
        if v ^ pv < v:
            v, m = v ^ pv, m ^ pm
    if v:
        return set()
    if len(null) > 20 or 2 ** len(null) > max_count:
        raise CapacityError(f"null space of dimension {len(null)} is too large to enumerate")
    out = set()
    for k in range(2 ** len(null)):
        mm = m
        for b, nm in enumerate(null):
            if k >> b & 1:
                mm ^= nm
        out.add(frozenset(c for c in range(L) if mm >> c & 1))
    return out


def null_space(L, first_row, observed):
    """Bit masks (over columns) spanning the null space of the observed columns."""
    cols, _, _ = _setup(L, first_row, 0, [])
    pivots, null = [], []
    for c in sorted(set(observed)):
        v, m = cols[c], 1 << c
        for pv, pm in pivots:
            if v ^ pv < v:
                v, m = v ^ pv, m ^ pm
        if v:
            pivots.append((v, m))
            pivots.sort(reverse=True)
        else:
            null.append(m)
    return null


def term_representations(L, i, j, prior=False, max_count=10**6):
    """GF(2) representation sizes of the (i, j) summand's target bit."""
    B = polar_matrix(L)
    D = [c for c in range(L) if B[i - 1, c]]
    if not 1 <= j <= len(D):
        raise DomainError(f"j must lie in [1, {len(D)}], got {j}")
    observed = [c for c in range(L) if not B[i - 1, c]] + D[: j - 1]
    return gf2_size_counts(L, i + 1 if prior else i, D[j - 1], observed, max_count)


def entropy_quadrature(d, spec):
    """h_Y(d) by adaptive quadrature of the two-component Gaussian mixture."""
    d = float(d)
    if d < 0:
        raise DomainError("distance must be non-negative")
    if np.isinf(d):
        return noise_entropy(spec) + 1.0
    s = spec.sigma

    def integrand(y):
        la = stats.norm.logpdf(y, 0.0, s)
        lb = stats.norm.logpdf(y, d, s)
        lf = np.logaddexp(la, lb) - np.log(2.0)
        return -np.exp(lf) * lf / np.log(2.0)

    lo, hi = -12.0 * s, d + 12.0 * s
    pts = sorted({0.0, d / 2.0, d})
    val, _ = integrate.quad(integrand, lo, hi, points=pts, limit=400, epsabs=1e-12, epsrel=1e-12)
    return float(val)


def _encode(u):
    x = u.copy()
    n = x.shape[-1]
    h = 1
    while h < n:
        for s in range(0, n, 2 * h):
            x[..., s : s + h] ^= x[..., s + h : s + 2 * h]
        h *= 2
    return x


def boxplus(a, b):
    """Exact LLR of the XOR of two independent bits."""
    return np.logaddexp(0.0, a + b) - np.logaddexp(a, b)


def _genie_llr(llr, u):
    n = llr.shape[1]
    if n == 1:
        return llr
    h = n // 2
    la, lb = llr[:, :h], llr[:, h:]
    top = _genie_llr(boxplus(la, lb), u[:, :h])
    sign = 1.0 - 2.0 * _encode(u[:, :h]).astype(float)
    bottom = _genie_llr(lb + sign * la, u[:, h:])
    return np.concatenate([top, bottom], axis=1)


def channel_llr(y, spec):
    """log p(y | 0) / p(y | 1) for inputs {0, A}."""
    A = spec.amplitude
    return (A * A - 2.0 * A * y) / (2.0 * spec.sigma2)


def mi_monte_carlo(L, spec, frames=100_000, seed=0, chunk=50_000):
    """Genie-aided SC estimate of every I(W_L^(i)).

    Returns
    -------
    mean, stderr : ndarray of shape (L,)
    """
    check_block_length(L)
    rng = np.random.default_rng(seed)
    total = np.zeros(L)
    total_sq = np.zeros(L)
    done = 0
    while done < frames:
        m = min(chunk, frames - done)
        u = rng.integers(0, 2, (m, L)).astype(np.uint8)
        y = spec.amplitude * _encode(u) + rng.normal(0.0, spec.sigma, (m, L))
        llr = _genie_llr(channel_llr(y, spec), u)
        info = 1.0 - np.logaddexp(0.0, -(1.0 - 2.0 * u) * llr) / np.log(2.0)
        total += info.sum(0)
        total_sq += (info**2).sum(0)
        done += m
    mean = total / frames
    var = np.maximum(total_sq / frames - mean**2, 0.0)
    return mean, np.sqrt(var / frames)


def _tree_llr(node, spec, rng, n):
    if node is None:
        return np.zeros(n)
    if node == KNOWN:
        return np.full(n, np.inf)
    if node == LEAF:
        return channel_llr(rng.normal(0.0, spec.sigma, n), spec)
    kids = [_tree_llr(c, spec, rng, n) for c in node[1]]
    if node[0] == "P":
        return np.sum(kids, axis=0)
    out = kids[0]
    for k in kids[1:]:
        out = boxplus(out, k)
    return out


def _h_bin(llr):
    with np.errstate(over="ignore"):
        return np.logaddexp(0.0, -llr) / np.log(2.0)


def conditional_entropy_mc(expr, spec, samples=200_000, seed=0, A_t=None):
    """Monte Carlo estimate of the PF value of a relation.

    The target bit (zero, by symmetry) is seen through the channel once and
    through the relation's observations, which are decoded exactly with
    belief propagation on the relation tree. Returns ``(mean, stderr)`` of
    h(Y | observations) = h(N) + H(X | obs) - H(X | Y, obs).
    """
    rng = np.random.default_rng(seed)
    tree = expand(expr, A_t)
    lz = _tree_llr(tree, spec, rng, samples)
    ly = channel_llr(rng.normal(0.0, spec.sigma, samples), spec)
    with np.errstate(invalid="ignore"):
        joint = np.where(np.isinf(lz), lz, lz + ly)
    vals = noise_entropy(spec) + _h_bin(lz) - _h_bin(joint)
    return float(vals.mean()), float(vals.std() / np.sqrt(samples))


def uncoded_ber(spec):
    """Q(A / (2 sigma)): hard-decision error rate of the raw channel."""
    return float(special.ndtr(-spec.amplitude / (2.0 * spec.sigma)))
