"""Polar subchannel capacities over the binary-input AWGN channel.

Each I(W_L^(i)) is decomposed into conditional entropies indexed by GF(2)
relations between codeword bits; the relations are pruned to single
virtual observations and evaluated in closed form.
"""

from .channel import ChannelSpec, VirtualChannel
from .codec import PolarCode, encode, sc_decode, simulate
from .construct import compare, construct
from .decompose import CapacityProfile, capacity_profile, rate_loss, subchannel_mi
from .errors import CapacityError, DomainError, InvariantError, StructureError
from .params import LayerStructure, SubchannelParams, layer_structure, subchannel_params
from .pftree import PfTree, build_tree, prune
from .relation import Factor, RelationExpr, enumerate_terms, parse, relation_term, serialize, simplify

__all__ = [
    "CapacityError",
    "CapacityProfile",
    "ChannelSpec",
    "DomainError",
    "Factor",
    "InvariantError",
    "LayerStructure",
    "PfTree",
    "PolarCode",
    "RelationExpr",
    "StructureError",
    "SubchannelParams",
    "VirtualChannel",
    "build_tree",
    "capacity_profile",
    "compare",
    "construct",
    "encode",
    "enumerate_terms",
    "layer_structure",
    "parse",
    "prune",
    "rate_loss",
    "relation_term",
    "sc_decode",
    "serialize",
    "simplify",
    "simulate",
    "subchannel_mi",
    "subchannel_params",
]
