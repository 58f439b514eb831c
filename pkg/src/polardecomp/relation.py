"""Relation algebra for polarization factors.

A relation describes how a target codeword bit ``x`` of a subcode is tied to
other observed bits. Factor semantics, in terms of the virtual observation of
``x`` that they produce:

* ``(a)``        -- ``x`` is the XOR of ``a`` distinct observed bits.
* ``(a)^b_S``    -- ``b`` disjoint representations of size ``a``. When a
  staging threshold ``A_t`` is in force and ``a > A_t``, the ``b``
  representations agree block-wise on groups of ``A_t`` elements, so the
  factor stands for the XOR of ``a / A_t`` group sums, each seen ``b`` times.
* ``(a)^b_P``    -- the XOR of ``a`` bits, each of which is observed ``b``
  times. ``(1)^b_P`` is ``b`` plain repeats of ``x``.
* ``(X)^b_S``    -- ``b`` independent copies of the nested relation ``X``.
* ``(X)^b_P``    -- ``X`` with every observed bit repeated ``b`` times.

A relation ``[t1, t2, ... <- o]`` combines its terms in parallel (each term
is a separate route to the target) and, when an overlap ``o`` is present, XORs
the result with the common elements ``o``. Printed sizes of scalar terms
include the width of a scalar overlap, so ``[(3)^3_S<-1]`` has three
representations of two private elements plus one shared element.

Trees
-----
Exact dependency structures are nested tuples: ``LEAF`` for an observed bit,
``("S", children)`` for an XOR, ``("P", children)`` for independent routes to
the same bit, ``KNOWN`` for a determined bit and ``None`` for no information.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import DomainError, InvariantError, StructureError
from .params import check_block_length, layer_structure, subchannel_params

LEAF = ("L",)
KNOWN = ("K",)


@dataclass(frozen=True)
class Factor:
    base: object
    power: object = 1
    combiner: str = "S"

    def __post_init__(self):
        if self.combiner not in ("S", "P"):
            raise StructureError(f"combiner must be 'S' or 'P', got {self.combiner!r}")
        if isinstance(self.base, bool) or not isinstance(self.base, (int, RelationExpr)):
            raise StructureError(f"factor base must be an int or RelationExpr, got {self.base!r}")
        if isinstance(self.base, int) and self.base < 0:
            raise StructureError("factor base must be >= 0")
        if self.power != math.inf and (not isinstance(self.power, int) or self.power < 0):
            raise StructureError(f"factor power must be a non-negative int, got {self.power!r}")
        if self.power == math.inf and not (self.base == 1 and self.combiner == "P"):
            raise StructureError("only (1)^inf_P may have an infinite power")


@dataclass(frozen=True)
class RelationExpr:
    terms: tuple = ()
    overlap: "RelationExpr" = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not isinstance(t, Factor):
                raise StructureError(f"terms must be Factor instances, got {t!r}")
        if self.overlap is not None and not isinstance(self.overlap, RelationExpr):
            raise StructureError("overlap must be a RelationExpr")

    def __str__(self):
        return serialize(self)

    @property
    def is_empty(self):
        return not self.terms and self.overlap is None


EMPTY = RelationExpr()
KNOWN_EXPR = RelationExpr((Factor(1, math.inf, "P"),))


def scalar(a, power=1, combiner="S"):
    return RelationExpr((Factor(a, power, combiner),))


# ---------------------------------------------------------------- counting


def factor_count(f):
    """Number of observed elements covered by a factor."""
    inner = f.base if isinstance(f.base, int) else element_count(f.base)
    return inner * f.power


def element_count(expr):
    """Total element count p of a relation (``inf`` for a determined bit)."""
    total = sum(factor_count(f) for f in expr.terms)
    if expr.overlap is not None:
        total += element_count(expr.overlap)
    return total


# ------------------------------------------------------------- simplify


def _staged(base, A_t):
    return A_t is not None and isinstance(base, int) and base > A_t


def _simplify_factor(f, A_t):
    base = f.base
    if isinstance(base, RelationExpr):
        base = simplify(base, A_t)
        if base.is_empty:
            return None
        if base.overlap is None and len(base.terms) == 1:
            inner = base.terms[0]
            if f.power == 1:
                return inner
            # merging S into S would change the staged meaning of a > A_t
            blocked = f.combiner == "S" and inner.combiner == "S" and _staged(inner.base, A_t)
            if not blocked and (inner.power == 1 or inner.combiner == f.combiner or inner.base == 1):
                comb = "P" if inner.base == 1 else f.combiner
                return _simplify_factor(Factor(inner.base, inner.power * f.power, comb), A_t)
    if f.power == 0 or base == 0:
        return None
    if base == 1 and f.power != 1:
        return Factor(1, f.power, "P")
    if f.power == 1:
        return Factor(base, 1, "S")
    return Factor(base, f.power, f.combiner)


def simplify(expr, A_t=None):
    """Normal form under the factor rules.

    Adjacent identical operations merge (``((a)^b1_S)^b2_S = (a)^(b1 b2)_S``),
    power 1 drops the combiner, zero counts or powers vanish, and relations
    without any term carry no information about the target. With a staging
    threshold ``A_t``, S-into-S merges of scalar bases above ``A_t`` are kept
    apart, since staging gives them a different meaning.
    """
    if not isinstance(expr, RelationExpr):
        raise StructureError(f"expected RelationExpr, got {expr!r}")
    terms = tuple(g for g in (_simplify_factor(f, A_t) for f in expr.terms) if g is not None)
    overlap = None if expr.overlap is None else simplify(expr.overlap, A_t)
    if overlap is not None and overlap.is_empty:
        overlap = None
    if not terms:
        return EMPTY
    if overlap is not None and _is_known(overlap):
        overlap = None
    return RelationExpr(terms, overlap)


def _is_known(expr):
    return any(f.power == math.inf for f in expr.terms)


# ------------------------------------------------------- serialization


def _overlap_width(overlap):
    if overlap is not None and overlap.overlap is None and len(overlap.terms) == 1:
        f = overlap.terms[0]
        if isinstance(f.base, int) and f.power == 1:
            return f.base
    return 1 if overlap is not None else 0


def _fmt_power(p):
    return "inf" if p == math.inf else str(p)


def _fmt_factor(f, width):
    if isinstance(f.base, int):
        base = str(f.base + width)
    else:
        base = serialize(f.base)
    if f.power == 1:
        return f"({base})"
    return f"({base})^{_fmt_power(f.power)}_{f.combiner}"


def serialize(expr):
    """Bracket notation, e.g. ``[(3)^3_S<-1]`` or ``[(1),(3)^2_P]``."""
    if expr.is_empty:
        return "[(0)]"
    width = _overlap_width(expr.overlap)
    body = ",".join(_fmt_factor(f, width) for f in expr.terms)
    if expr.overlap is None:
        return f"[{body}]"
    o = expr.overlap
    if o.overlap is None and len(o.terms) == 1 and isinstance(o.terms[0].base, int) and o.terms[0].power == 1:
        return f"[{body}<-{o.terms[0].base}]"
    return f"[{body}<-{serialize(o)}]"


_TOKEN = re.compile(r"\s*(<-|←|\^|_|,|\(|\)|\[|\]|inf|\d+|S|P|K)")


def _tokenize(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise StructureError(f"unexpected character at {pos} in {text!r}")
        tok = m.group(1)
        out.append("<-" if tok == "←" else tok)
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.k = 0
        self.text = text

    def peek(self):
        return self.toks[self.k] if self.k < len(self.toks) else None

    def take(self, want=None):
        tok = self.peek()
        if tok is None or (want is not None and tok != want):
            raise StructureError(f"expected {want!r} in {self.text!r}")
        self.k += 1
        return tok

    def expr(self):
        self.take("[")
        raw = [self.factor()]
        while self.peek() == ",":
            self.take(",")
            raw.append(self.factor())
        overlap = None
        if self.peek() == "<-":
            self.take("<-")
            tok = self.peek()
            if tok == "[":
                overlap = self.expr()
            elif tok == "(":
                overlap = RelationExpr((self.factor(),))
            elif tok is not None and tok.isdigit():
                overlap = scalar(int(self.take()))
            else:
                raise StructureError(f"bad overlap in {self.text!r}")
        self.take("]")
        width = _overlap_width(overlap)
        terms = []
        for f in raw:
            if isinstance(f.base, int) and width:
                if f.base - width < 0:
                    raise StructureError(f"term smaller than its overlap in {self.text!r}")
                f = Factor(f.base - width, f.power, f.combiner)
            terms.append(f)
        if len(terms) == 1 and terms[0] == Factor(0) and overlap is None:
            return EMPTY
        return RelationExpr(tuple(terms), overlap)

    def factor(self):
        self.take("(")
        if self.peek() == "[":
            base = self.expr()
        else:
            tok = self.take()
            if not tok.isdigit():
                raise StructureError(f"bad factor base in {self.text!r}")
            base = int(tok)
        self.take(")")
        power, comb = 1, "S"
        if self.peek() == "^":
            self.take("^")
            tok = self.take()
            power = math.inf if tok == "inf" else int(tok)
            self.take("_")
            comb = self.take()
            if comb == "K":
                comb = "P"
            if comb not in ("S", "P"):
                raise StructureError(f"bad combiner in {self.text!r}")
        return Factor(base, power, comb)


def parse(text):
    """Inverse of :func:`serialize`; also accepts ``←`` and ``(1)`` overlaps."""
    p = _Parser(text)
    e = p.expr()
    if p.peek() is not None:
        raise StructureError(f"trailing input in {text!r}")
    return e


# ------------------------------------------------------- tree utilities


def _key(node):
    return repr(node)


def sc_node(*children):
    """XOR node with flattening; any missing child makes the XOR unknown."""
    flat = []
    for c in children:
        if c is None:
            return None
        if c == KNOWN:
            continue
        if c[0] == "S":
            flat.extend(c[1])
        else:
            flat.append(c)
    if not flat:
        return KNOWN
    if len(flat) == 1:
        return flat[0]
    return ("S", tuple(sorted(flat, key=_key)))


def pc_node(*children):
    """Parallel node with flattening; a determined child determines the bit."""
    flat = []
    for c in children:
        if c is None:
            continue
        if c == KNOWN:
            return KNOWN
        if c[0] == "P":
            flat.extend(c[1])
        else:
            flat.append(c)
    if not flat:
        return None
    if len(flat) == 1:
        return flat[0]
    return ("P", tuple(sorted(flat, key=_key)))


def _subsets(r):
    out = [0]
    b = 1
    while b <= r:
        if r & b:
            out = out + [x | b for x in out]
        b <<= 1
    return sorted(out)


def support(L, i):
    """D_i: 0-based columns where row i of B_L is nonzero, in increasing order."""
    check_block_length(L)
    if not 1 <= i <= L:
        raise DomainError(f"subchannel index must lie in [1, {L}], got {i}")
    return _subsets(i - 1)


def _post(n, r0, k, obs):
    # structure of the posterior on bit k of a length-n subcode with rows
    # r0..n-1 active, given observations obs (tree or None per bit)
    if n == 1:
        return None if r0 == 0 else KNOWN
    h = n // 2
    khi, klo = divmod(k, h)
    partner = obs[(1 - khi) * h + klo]
    if r0 >= h:
        sub = [None if c == klo else pc_node(obs[c], obs[h + c]) for c in range(h)]
        return pc_node(partner, _post(h, r0 - h, klo, sub))
    sub = [None if c == klo else sc_node(obs[c], obs[h + c]) for c in range(h)]
    return sc_node(partner, _post(h, r0, klo, sub))


def dependency_tree(L, first_row, target, observed):
    """Exact dependency tree of bit ``target`` given bits ``observed``.

    Parameters
    ----------
    L : int
        Block length.
    first_row : int
        1-based index of the first active generator row (subcode C_L(first_row));
        ``L + 1`` means the all-zero code.
    target : int
        0-based target column.
    observed : iterable of int
        0-based observed columns (the target itself is ignored).
    """
    check_block_length(L)
    observed = set(observed)
    obs = [LEAF if (c in observed and c != target) else None for c in range(L)]
    return _post(L, first_row - 1, target, obs)


def term_tree(L, i, j, prior=False):
    """Dependency tree of the (i, j) summand, without or with U_i known."""
    D = support(L, i)
    if not 1 <= j <= len(D):
        raise DomainError(f"j must lie in [1, {len(D)}], got {j}")
    r = i - 1
    t = D[j - 1]
    observed = [c for c in range(L) if c & ~r] + D[: j - 1]
    return dependency_tree(L, i + 1 if prior else i, t, observed)


def staging_threshold(L, i):
    """A_t = L / 2^ceil(log2 i)."""
    check_block_length(L)
    return L // 2 ** ((i - 1).bit_length())


# ---------------------------------------------------- tree <-> notation


def _leaf_count(node):
    if node == LEAF:
        return 1
    return sum(_leaf_count(c) for c in node[1])


def _all_leaves(node):
    return node[0] in ("S", "P") and all(c == LEAF for c in node[1])


def _group(children):
    counts = Counter(children)
    seen, out = set(), []
    for c in children:
        if c not in seen:
            seen.add(c)
            out.append((c, counts[c]))
    return out


def _pc_of_sc_block(node, A_t):
    # PC_b(SC_{A_t}) with b > 1 -> b, else None
    if node[0] != "P" or len(node[1]) < 2:
        return None
    first = node[1][0]
    if first == LEAF or first[0] != "S" or not _all_leaves(first) or len(first[1]) != A_t:
        return None
    if any(c != first for c in node[1]):
        return None
    return len(node[1])


def _sc_as_factor(children, A_t):
    # single factor for an XOR of identical parallel blocks, if one exists
    groups = _group(children)
    if len(groups) != 1:
        return None
    node, m = groups[0]
    if node == LEAF:
        return Factor(m)
    if node[0] == "P" and _all_leaves(node):
        return Factor(m, len(node[1]), "P")
    b = _pc_of_sc_block(node, A_t) if A_t else None
    if b is not None:
        return Factor(m * A_t, b, "S")
    return None


def _wrap(f, mult, A_t):
    if mult == 1:
        return f
    if f.power == 1 and isinstance(f.base, int) and not _staged(f.base, A_t):
        return Factor(f.base, mult, "S")
    if f.power == 1 and isinstance(f.base, RelationExpr):
        return Factor(f.base, mult, "S")
    return Factor(RelationExpr((f,)), mult, "S")


def _term_factor(node, A_t):
    if node == LEAF:
        return Factor(1)
    if node[0] == "S":
        f = _sc_as_factor(node[1], A_t)
        if f is not None:
            return f
        return Factor(_sc_expr(node[1], A_t))
    if node[0] == "P":
        return Factor(RelationExpr(_pc_terms(node[1], A_t)))
    raise InvariantError(f"unexpected node {node!r}")


def _pc_terms(children, A_t):
    terms = []
    for node, mult in _group(children):
        if node == LEAF:
            terms.append(Factor(1) if mult == 1 else Factor(1, mult, "P"))
        else:
            terms.append(_wrap(_term_factor(node, A_t), mult, A_t))
    return tuple(terms)


def _sc_expr(children, A_t):
    f = _sc_as_factor(children, A_t)
    if f is not None:
        return RelationExpr((f,))
    leaves = [c for c in children if c == LEAF]
    blocks = [c for c in children if c != LEAF]
    groups = _group(blocks)
    chosen = None
    for node, m in groups:
        g = _sc_as_factor([node] * m, A_t)
        if g is not None and node[0] == "P":
            chosen = (node, m, (g,))
            break
    if chosen is None:
        node = groups[-1][0]
        chosen = (node, 1, _pc_terms(node[1], A_t))
    node, m, terms = chosen
    rest = list(leaves)
    for other, cnt in groups:
        rest.extend([other] * (cnt - m if other == node else cnt))
    overlap = tree_to_expr(sc_node(*rest) if len(rest) > 1 else rest[0], A_t)
    return RelationExpr(terms, overlap)


def tree_to_expr(node, A_t=None):
    """Render an exact dependency tree in the relation notation.

    An XOR of ``m`` identical blocks ``PC_b(SC_{A_t})`` is written
    ``(m A_t)^b_S``, which :func:`expand` stages back into the same tree.
    """
    if node is None:
        return EMPTY
    if node == KNOWN:
        return KNOWN_EXPR
    if node == LEAF:
        return scalar(1)
    if node[0] == "P":
        return RelationExpr(_pc_terms(node[1], A_t))
    return _sc_expr(node[1], A_t)


def _repeat_leaves(node, b):
    if node == LEAF:
        return pc_node(*([LEAF] * b))
    if node in (KNOWN, None):
        return node
    kids = [_repeat_leaves(c, b) for c in node[1]]
    return sc_node(*kids) if node[0] == "S" else pc_node(*kids)


def _expand_factor(f, A_t):
    if f.power == math.inf:
        return KNOWN
    if isinstance(f.base, RelationExpr):
        inner = expand(f.base, A_t)
        if f.combiner == "P" and f.power > 1:
            return _repeat_leaves(inner, f.power)
        return pc_node(*([inner] * f.power))
    a, b = f.base, f.power
    if a == 0 or b == 0:
        return None
    if a == 1:
        return pc_node(*([LEAF] * b))
    if f.combiner == "P" and b > 1:
        return sc_node(*([pc_node(*([LEAF] * b))] * a))
    if b > 1 and A_t is not None and a > A_t:
        if a % A_t:
            raise InvariantError(f"staged merge needs A_t | a, got a={a}, A_t={A_t}")
        block = pc_node(*([sc_node(*([LEAF] * A_t))] * b))
        return sc_node(*([block] * (a // A_t)))
    return pc_node(*([sc_node(*([LEAF] * a))] * b))


def expand(expr, A_t=None):
    """Exact dependency tree denoted by ``expr`` under staging threshold ``A_t``."""
    if expr.is_empty:
        return None
    routes = pc_node(*[_expand_factor(f, A_t) for f in expr.terms])
    if expr.overlap is None:
        return routes
    return sc_node(expand(expr.overlap, A_t), routes)


def tree_sizes(node):
    """Multiset of representation sizes implied by a dependency tree."""
    if node is None:
        return Counter()
    if node == KNOWN:
        return Counter({0: 1})
    if node == LEAF:
        return Counter({1: 1})
    parts = [tree_sizes(c) for c in node[1]]
    if node[0] == "P":
        out = Counter()
        for p in parts:
            out.update(p)
        return out
    out = Counter({0: 1})
    for p in parts:
        nxt = Counter()
        for a, x in out.items():
            for b, y in p.items():
                nxt[a + b] += x * y
        out = nxt
    return out


def representation_sizes(expr, A_t=None):
    """Multiset {size: count} of the representations of the target."""
    return tree_sizes(expand(expr, A_t))


def tree_depth(node):
    if node is None or node in (LEAF, KNOWN):
        return 0
    return 1 + max(tree_depth(c) for c in node[1])


# ----------------------------------------------------- generators


@lru_cache(maxsize=4096)
def relation_term(L, i, j, prior=False):
    """Relation whose PF is the (i, j) summand of the subchannel decomposition.

    ``prior=False`` conditions on the subcode C_L(i), ``prior=True`` on
    C_L(i+1) (U_i known). The target is the j-th column of D_i and the observed
    bits are D_i's complement plus the earlier columns of D_i.

    Examples
    --------
    >>> str(relation_term(4, 1, 1, prior=True))
    '[(3)]'
    """
    return tree_to_expr(term_tree(L, i, j, prior), staging_threshold(L, i))


def last_row_terms(L):
    """Signed terms of I(W_L^(L)) = h(Y) + sum_{p<L} h_P(p) - L h(N)."""
    out = [(EMPTY, 1)]
    out += [(scalar(1, p, "P") if p > 1 else scalar(1), 1) for p in range(1, L)]
    out += [(KNOWN_EXPR, -1)] * L
    return out


def enumerate_terms(L, i):
    """Signed PF relations whose values sum to I(W_L^(i))."""
    D = support(L, i)
    if i == L:
        return last_row_terms(L)
    out = []
    for j in range(1, len(D) + 1):
        out.append((relation_term(L, i, j, False), 1))
        out.append((relation_term(L, i, j, True), -1))
    return out


# --------------------------------------------- layered closed-form data


@dataclass(frozen=True)
class TheoremExpansion:
    """Ingredients of the layered closed form for one index vector ``q``.

    Kept as structured data for inspection; relation generation itself goes
    through :func:`term_tree`, which is exact.
    """

    T: tuple
    E_minus: tuple
    E_plus: tuple
    Omega_minus: tuple = field(default=())
    Omega_plus: tuple = field(default=())
    Theta: tuple = field(default=())
    V_minus: tuple = field(default=())
    V_plus: tuple = field(default=())
    final: RelationExpr = None


def theorem_expansion(L, i, q):
    """Build the layered expansion for layer indices ``q = (q_0, ..., q_M)``."""
    ls = layer_structure(L, i)
    M, Q = ls.M, ls.Q
    q = tuple(q)
    if len(q) != M + 1 or any(not 1 <= q[k] <= Q[k] for k in range(M + 1)):
        raise DomainError(f"q must satisfy 1 <= q_k <= Q_k for {Q}")
    prm = subchannel_params(L, i)
    theta = prm.theta or 1
    eps = prm.epsilon or 1

    def T(k):
        return max(2 ** (theta - k) - 1, 0) if theta - k >= 0 else 0

    def prod_q(lo, hi):
        return math.prod(Q[h] for h in range(lo, hi + 1)) if lo <= hi else 1

    e_minus = {1: ((q[M],),)} if M >= 1 else {}
    e_plus = {1: ((q[M] - 1,),)} if M >= 1 else {}
    for h in range(2, M + 1):
        qq, QQ = q[M - h + 1], Q[M - h + 1]
        e_minus[h] = tuple(r + (qq,) for r in e_minus[h - 1]) + tuple(r + (QQ - qq,) for r in e_plus[h - 1])
        e_plus[h] = tuple(r + (qq - 1,) for r in e_minus[h - 1]) + tuple(r + (QQ - qq + 1,) for r in e_plus[h - 1])

    def phi(row):
        f = Factor(T(M + 1), max(row[0], 0), "S")
        for k in range(2, len(row) + 1):
            pair = RelationExpr((f, Factor(T(M - k + 3), prod_q(M - k + 2, M), "S")))
            f = Factor(pair, max(row[k - 1], 0), "S")
        return f

    omega_m, omega_p, v_m, v_p = [], [], [], []
    theta_k = [EMPTY]
    for k in range(M):
        om = RelationExpr(tuple(phi(r) for r in e_minus.get(M - k, ())))
        op = RelationExpr(tuple(phi(r) for r in e_plus.get(M - k, ())))
        omega_m.append(om)
        omega_p.append(op)
        rep = prod_q(k + 1, M)
        vm = Factor(RelationExpr((Factor(T(k), rep, "S"),), om), q[k] - 1, "S")
        vp = Factor(RelationExpr((Factor(T(k), rep, "S"),), op), Q[k] - q[k], "S")
        v_m.append(vm)
        v_p.append(vp)
        common = scalar(max(T(k + 1) - T(k + 2), 0), rep, "S")
        theta_k.append(RelationExpr((vm, vp, Factor(theta_k[-1])), common))
    final = RelationExpr(
        (Factor(2**eps - 1, q[M] - 1, "S"), Factor(theta_k[-1])),
        scalar(2 ** (eps - 1) - 1),
    )
    return TheoremExpansion(
        T=tuple(T(k) for k in range(M + 2)),
        E_minus=tuple(e_minus[h] for h in sorted(e_minus)),
        E_plus=tuple(e_plus[h] for h in sorted(e_plus)),
        Omega_minus=tuple(omega_m),
        Omega_plus=tuple(omega_p),
        Theta=tuple(theta_k),
        V_minus=tuple(v_m),
        V_plus=tuple(v_p),
        final=final,
    )
