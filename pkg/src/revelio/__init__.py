"""Unfoldings of safe Petri nets and the reveals relation between their events."""

from ._backend import NAME as BACKEND
from .facets import FacetPartition, QuotientNet, compute_facets, quotient
from .net import (
    NetError,
    NotEnabledError,
    ParseError,
    PetriNet,
    Run,
    SafetyVerdict,
    build_net,
    check_safety,
    enabled,
    fire,
    load_net,
    parse_canonical,
    parse_llnet,
    serialize_canonical,
)
from .occnet import Configuration, EventSet, OccurrenceNet, StructureError
from .reveals import (
    PairVerdict,
    RevealsMatrix,
    WitnessReport,
    check_pair,
    pass1_post,
    pass2_conf,
    pass3_rev,
    reveals_all,
    reveals_of_prefix,
    root_conflicts,
    witness_predicate,
)
from .unfold import (
    CutoffPolicy,
    ResourceLimitError,
    UnfoldingPrefix,
    UnsafeNetError,
    bound_k,
    exact_ui,
    level_cutoffs,
    unfold,
)

__version__ = "0.1.0"
