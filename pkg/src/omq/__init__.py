"""Ontology-mediated query compiler toolkit.

Rewrites OWL 2 QL ontology-mediated queries into nonrecursive datalog,
evaluates the programs over data instances, and checks them against a
chase-based certain-answer oracle.
"""

__version__ = "1.0.0"

from .core_syntax import (
    Atom,
    ConceptName,
    ConjunctiveQuery,
    DataInstance,
    Eq,
    Exists,
    NdlClause,
    NdlQuery,
    Ontology,
    ParseError,
    Role,
    Top,
    TOP_PRED,
    parse_cq,
    parse_data,
    parse_ndl,
    parse_ontology,
    serialize_cq,
    serialize_data,
    serialize_ndl,
    serialize_ontology,
)
from .ql_reasoner import (
    Depth,
    build_closures,
    check_consistency,
    depth,
    normalize,
    role_successors,
    saturate,
    words,
)
from .cq_analysis import (
    TreeDecomposition,
    centroid,
    classify,
    slices,
    split_plan,
    tree_decompose,
)
from .chase_oracle import (
    CanonicalModel,
    InconsistentInstance,
    build_chase,
    certain_answers,
    complete,
    tree_witnesses,
)
from .ndl_core import (
    NdlMetrics,
    inline_single_use,
    is_ordered,
    linear_arbitrary_transform,
    metrics,
    min_weight,
    program_depth,
    star_transform,
    to_skinny,
)
from .ndl_eval import evaluate, naive_evaluate, run_evaluation, stats
from .rewriters import rewrite, rewrite_lin, rewrite_log, rewrite_tw
from .generators import (
    gen_clique_omq,
    gen_er_data,
    gen_hitting_set_omq,
    gen_logcfl_query,
    gen_sat_omq,
    gen_sequence_query,
    gen_tree_instance_and_query,
    has_hitting_set,
    has_multicolored_clique,
    in_hardest_logcfl,
    is_satisfiable,
    logcfl_ontology,
    sat_ontology,
)
