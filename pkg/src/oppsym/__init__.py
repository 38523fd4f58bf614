"""Graph automorphism generators by search over ordered partition pairs."""
from .graph import (
    ColoredGraph,
    GraphFormatError,
    Permutation,
    apply_permutation,
    format_graph,
    is_automorphism,
    parse_cnf_to_graph,
    parse_graph,
)
from .oracle import OrbitPartition, brute_force_aut, generated_group_order, orbits_of
from .partition import (
    OPP,
    Conflict,
    OppClass,
    OrderedPartition,
    RefinedOPP,
    RefineMode,
    classify,
    individualize,
    initial_opp,
    is_equitable,
    opp_permutations,
    refine_baseline,
    refine_enhanced,
    refine_one,
)
from .search import Heuristic, SearchStats, TheoremViolation, run_comparison, search, select_target

__version__ = "0.1.0"
