"""Tree form of a relation and its pruning to a single conditional entropy.

The overlap argument of a relation becomes the parent payload and each term
becomes a child. Pruning works bottom-up on effective distances: repeated
observations merge in parallel (distances add in quadrature) and XOR
combinations merge serially (through the detection error probability).
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import merge_parallel, merge_serial, pf_value
from .errors import DomainError, InvariantError
from .relation import Factor, RelationExpr


@dataclass(frozen=True)
class PfTree:
    """One node of a relation tree.

    Parameters
    ----------
    payload : Factor, PfTree or None
        Common elements of the node: a scalar factor, a nested tree for a
        compound overlap, or None when the terms share nothing.
    children : tuple of PfTree
        Term subtrees, combined in parallel.
    copies : int
        For a nested term, how many times the subtree is taken.
    combiner : str
        'S' for independent copies, 'P' for repeating every observed bit.
    """

    payload: object = None
    children: tuple = ()
    copies: int = 1
    combiner: str = "S"

    @property
    def depth(self):
        own = 1 + max((c.depth for c in self.children), default=0)
        if isinstance(self.payload, PfTree):
            own = max(own, self.payload.depth)
        return own


def _factor_node(f):
    if isinstance(f.base, RelationExpr):
        sub = build_tree(f.base)
        return PfTree(sub.payload, sub.children, copies=f.power, combiner=f.combiner)
    return PfTree(payload=f)


def build_tree(expr):
    """Tree of a relation expression.

    Examples
    --------
    >>> from polardecomp.relation import parse
    >>> build_tree(parse("[(7)^2_S<-(1)]")).depth
    2
    """
    if expr.is_empty:
        return PfTree()
    kids = tuple(_factor_node(f) for f in expr.terms)
    if expr.overlap is None:
        if len(kids) == 1 and kids[0].copies == 1 and not kids[0].children:
            return kids[0]
        return PfTree(payload=None, children=kids)
    o = expr.overlap
    if o.overlap is None and len(o.terms) == 1 and isinstance(o.terms[0].base, int):
        payload = o.terms[0]
    else:
        payload = build_tree(o)
    return PfTree(payload=payload, children=kids)


def _scalar_distance(f, leaf, spec, A_t):
    a, b = f.base, f.power
    if b == math.inf:
        return math.inf
    if a == 0 or b == 0:
        return 0.0
    if a == 1:
        return math.sqrt(b) * leaf
    if f.combiner == "P" and b > 1:
        return merge_serial(np.full(a, math.sqrt(b) * leaf), spec)
    if b > 1 and a > A_t:
        # staged: (a)^b_S -> (a/A_t)^b_P -> (a/A_t) -> (1)
        if a % A_t:
            raise InvariantError(f"staged merge needs A_t | a, got a={a}, A_t={A_t}")
        block = merge_serial(np.full(A_t, leaf), spec) if A_t > 1 else leaf
        return merge_serial(np.full(a // A_t, math.sqrt(b) * block), spec)
    inner = merge_serial(np.full(a, leaf), spec)
    return math.sqrt(b) * inner


def _node_distance(node, leaf, spec, A_t):
    if node.copies != 1 and node.combiner == "P":
        inner = PfTree(node.payload, node.children)
        return _node_distance(inner, math.sqrt(node.copies) * leaf, spec, A_t)
    if node.copies != 1:
        inner = PfTree(node.payload, node.children)
        return math.sqrt(node.copies) * _node_distance(inner, leaf, spec, A_t)
    p = node.payload
    if isinstance(p, Factor):
        common = _scalar_distance(p, leaf, spec, A_t)
    elif isinstance(p, PfTree):
        common = _node_distance(p, leaf, spec, A_t)
    else:
        common = None
    if not node.children:
        return 0.0 if common is None else common
    # PC of the sibling routes, in child order
    routes = [_node_distance(c, leaf, spec, A_t) for c in node.children]
    if any(math.isinf(r) for r in routes):
        merged = math.inf
    else:
        merged = merge_parallel(routes)
    if common is None:
        return merged
    # final SC step with the common elements
    if math.isinf(common):
        return merged
    if math.isinf(merged):
        return common
    return merge_serial([common, merged], spec)


def prune_distance(tree, spec, A_t=None):
    """Effective distance of the virtual observation a tree collapses to."""
    if A_t is not None and A_t < 1:
        raise DomainError(f"A_t must be >= 1, got {A_t}")
    return _node_distance(tree, float(spec.amplitude), spec, A_t if A_t is not None else math.inf)


def prune(tree, spec, A_t=None):
    """Conditional entropy h(Y | observations) of a relation tree in bits.

    Parameters
    ----------
    tree : PfTree
    spec : ChannelSpec
    A_t : int, optional
        Staging threshold; SC factors ``(a)^b_S`` with ``a > A_t`` merge in
        blocks of ``A_t``. None disables staging.
    """
    return float(pf_value(prune_distance(tree, spec, A_t), spec))


def pf_of(expr, spec, A_t=None):
    """Shortcut for ``prune(build_tree(expr), spec, A_t)``."""
    return prune(build_tree(expr), spec, A_t)
