"""Rewriting ontology-mediated queries into nonrecursive datalog.

Three constructions turn a (finite-depth, for the first two) ontology and a
conjunctive query into an ordered NDL program whose answers over complete
data coincide with the certain answers of the original query:

* :func:`rewrite_log` — recursion over a balanced split of a tree
  decomposition; polynomial size, depth logarithmic in the query.
* :func:`rewrite_lin` — for tree-shaped queries, one predicate per distance
  slice from a root variable; produces linear programs.
* :func:`rewrite_tw` — tree-witness based recursion over subqueries, splitting
  at a centroid variable; works for any ontology (including infinite-depth
  ones) but may be exponential in the query.

The :func:`rewrite` facade dispatches on an algorithm name and applies the
arbitrary-data transforms from :mod:`omq.ndl_core` when the data is not
assumed complete.

The common machinery is the notion of a *type*: an assignment of words over
roles to query variables, ``()`` meaning "mapped to a named individual" and a
word w meaning "mapped to the anonymous element reached along w".  A clause
is emitted per compatible type, with equalities gluing variables that fold
into the same anonymous path and guard atoms requiring the path to exist.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .chase_oracle import certain_answers, tree_witnesses
from .core_syntax import (
    TOP_PRED,
    Atom,
    BodyItem,
    ConjunctiveQuery,
    DataInstance,
    Eq,
    NdlClause,
    NdlQuery,
    Ontology,
    Role,
)
from .cq_analysis import (
    TreeDecomposition,
    atom_components,
    centroid,
    classify,
    slices,
    sort_vars,
    split_plan,
    tree_decompose,
    var_order_key,
)
from .ndl_core import inline_single_use, linear_arbitrary_transform, star_transform
from .ql_reasoner import (
    EPSILON,
    ClosureTables,
    InfiniteDepthError,
    Word,
    build_closures,
    depth,
    normalize,
    words,
)

__all__ = ["rewrite", "rewrite_log", "rewrite_lin", "rewrite_tw"]


# ---------------------------------------------------------------------------
# Types (variable -> word assignments) and their clause material
# ---------------------------------------------------------------------------

TypeKey = tuple[tuple[str, Word], ...]


def _type_key(typ: Mapping[str, Word]) -> TypeKey:
    return tuple(sorted(typ.items()))


def _word_sig(w: Word) -> str:
    return "".join(r.name + ("i" if r.inverse else "") for r in w)


def _type_suffix(typ: Mapping[str, Word]) -> str:
    parts = [f"{v}_{_word_sig(typ[v])}" for v in sort_vars(typ) if typ[v]]
    return "__" + "__".join(parts) if parts else ""


def _fresh_name(base: str, taken: set[str]) -> str:
    name, k = base, 1
    while name in taken:
        k += 1
        name = f"{base}_{k}"
    taken.add(name)
    return name


def _binary_fold_ok(tables: ClosureTables, role: Role, wy: Word, wz: Word) -> bool:
    """Can P(y,z) hold in the canonical model with y, z at words wy, wz?

    Either both variables sit on a named individual (the atom stays as data),
    or they sit on the same anonymous element and P is reflexive, or one word
    extends the other by a single letter generating P (in the right
    direction).
    """
    if wy == wz:
        return wy == EPSILON or tables.is_reflexive(role)
    if len(wz) == len(wy) + 1 and wz[: len(wy)] == wy:
        return tables.sub_role(wz[-1], role)
    if len(wy) == len(wz) + 1 and wy[: len(wz)] == wz:
        return tables.sub_role(wy[-1].inv, role)
    return False


def _type_compatible(
    tables: ClosureTables, typ: Mapping[str, Word], atoms: Iterable[Atom]
) -> bool:
    """Check the atoms (with all variables in dom(typ)) against the type."""
    for a in atoms:
        if a.arity == 1:
            w = typ[a.args[0]]
            if w and not tables.incoming_implies_concept(w[-1], a.pred):
                return False
        else:
            if not _binary_fold_ok(tables, Role(a.pred), typ[a.args[0]], typ[a.args[1]]):
                return False
    return True


def _at_conjuncts(
    onto: Ontology, typ: Mapping[str, Word], atoms: Iterable[Atom]
) -> set[BodyItem]:
    """Body items realising the atoms under the type.

    All-individual atoms stay as data atoms; a binary atom with an anonymous
    endpoint collapses into an equality of its two variables; every variable
    assigned a word w needs the guard of w's first letter to spawn the path.
    """
    out: set[BodyItem] = set()
    for a in atoms:
        if a.arity == 1:
            if typ[a.args[0]] == EPSILON:
                out.add(a)
        else:
            y, z = a.args
            if typ[y] == EPSILON and typ[z] == EPSILON:
                out.add(a)
            elif y != z:
                lo, hi = sorted((y, z), key=var_order_key)
                out.add(Eq(lo, hi))
    for v in typ:
        w = typ[v]
        if w:
            out.add(Atom(onto.guard_name(w[0]), (v,)))
    return out


def _item_sort_key(item: BodyItem) -> tuple:
    if isinstance(item, Atom):
        return (tuple(sorted(var_order_key(v) for v in item.args)), 0, item.pred)
    return ((var_order_key(item.lhs), var_order_key(item.rhs)), 1, "=")


def _finish_body(head: Atom, body: set[BodyItem]) -> tuple[BodyItem, ...]:
    """Sort the body deterministically, covering head variables if needed."""
    covered: set[str] = set()
    for item in body:
        covered |= {item.lhs, item.rhs} if isinstance(item, Eq) else set(item.args)
    for v in head.args:
        if v not in covered:
            body.add(Atom(TOP_PRED, (v,)))
    return tuple(sorted(body, key=_item_sort_key))


def _answer_params(args: Sequence[str], answer_vars: Iterable[str]) -> tuple[int, ...]:
    answers = set(answer_vars)
    return tuple(i for i, v in enumerate(args) if v in answers)


# ---------------------------------------------------------------------------
# Log: recursion over a balanced split of a tree decomposition
# ---------------------------------------------------------------------------


def rewrite_log(
    ontology: Ontology,
    cq: ConjunctiveQuery,
    decomposition: TreeDecomposition | None = None,
) -> NdlQuery:
    """Rewrite over a balanced recursive split of a tree decomposition.

    One predicate per subtree of the split and boundary type; clause bodies
    join the splitter bag's type material with the children's predicates.
    Subtrees of a single node are inlined into their parent's clauses.  Width
    stays within 3*(width+1); depth is logarithmic in the decomposition size.
    """
    onto = normalize(ontology)
    tables = build_closures(onto)
    if depth(onto, tables).is_infinite:
        raise InfiniteDepthError(
            "rewrite_log needs an ontology of finite depth (finite word space)"
        )
    wspace = words(onto, tables)
    decomp = decomposition if decomposition is not None else tree_decompose(cq)
    decomp.validate(cq)
    plan = split_plan(decomp, cq.answer_vars, cq)
    answers = set(cq.answer_vars)

    def head_args(subtree, typ: Mapping[str, Word]) -> tuple[str, ...]:
        free = sort_vars(set(plan.boundary[subtree]) - set(plan.answer[subtree]))
        return tuple(free) + tuple(plan.answer[subtree])

    taken = (
        set(onto.concept_names)
        | set(onto.role_names)
        | {a.pred for a in cq.atoms}
        | {TOP_PRED}
    )
    order = {d: i for i, d in enumerate(plan.subtrees)}
    names: dict[tuple, str] = {}

    def pred_name(subtree, key: TypeKey) -> str:
        if (subtree, key) not in names:
            base = "G" if subtree == plan.root else f"G_D{order[subtree]}"
            base += _type_suffix(dict(key))
            names[(subtree, key)] = _fresh_name(base, taken)
        return names[(subtree, key)]

    def bag_of(subtree) -> frozenset[str]:
        return decomp.bags[plan.splitter[subtree]]

    def type_options(var: str) -> tuple[Word, ...]:
        return (EPSILON,) if var in answers else (EPSILON, *wspace)

    def leaf_alternatives(
        leaf, fixed: Mapping[str, Word]
    ) -> list[set[BodyItem]]:
        """Inlined bodies of a single-node subtree under a fixed boundary type."""
        bag = sort_vars(bag_of(leaf))
        bag_atoms = [a for a in cq.atoms if set(a.args) <= set(bag)]
        out: list[set[BodyItem]] = []
        for combo in itertools.product(*(type_options(v) for v in bag)):
            typ = dict(zip(bag, combo))
            if any(typ[v] != w for v, w in fixed.items()):
                continue
            if _type_compatible(tables, typ, bag_atoms):
                out.append(_at_conjuncts(onto, typ, bag_atoms))
        return out

    # Candidate clauses per needed (subtree, boundary type), generated on
    # demand from the root downward.
    Candidate = tuple[frozenset, tuple]  # (body items, child predicate keys)
    candidates: dict[tuple, list[Candidate]] = {}
    root_key = (plan.root, _type_key({}))
    queue: deque[tuple] = deque([root_key])
    pred_name(plan.root, root_key[1])
    while queue:
        subtree, key = task = queue.popleft()
        if task in candidates:
            continue
        candidates[task] = []
        fixed = dict(key)
        bag = sort_vars(bag_of(subtree))
        bag_atoms = [a for a in cq.atoms if set(a.args) <= set(bag)]
        seen_bodies: set[Candidate] = set()
        for combo in itertools.product(*(type_options(v) for v in bag)):
            styp = dict(zip(bag, combo))
            if any(v in styp and styp[v] != w for v, w in fixed.items()):
                continue
            if not _type_compatible(tables, styp, bag_atoms):
                continue
            union = {**fixed, **styp}
            base_body = _at_conjuncts(onto, styp, bag_atoms)
            child_keys: list[tuple] = []
            inline_sets: list[list[set[BodyItem]]] = []
            dead = False
            for child in plan.children[subtree]:
                ctyp = {v: union[v] for v in plan.boundary[child]}
                if len(child) == 1:
                    alts = leaf_alternatives(child, ctyp)
                    if not alts:
                        dead = True
                        break
                    inline_sets.append(alts)
                else:
                    ckey = (child, _type_key(ctyp))
                    child_keys.append(ckey)
                    base_body.add(
                        Atom(pred_name(child, ckey[1]), head_args(child, ctyp))
                    )
                    queue.append(ckey)
            if dead:
                continue
            for chosen in itertools.product(*inline_sets):
                body = set(base_body)
                for alt in chosen:
                    body |= alt
                cand = (frozenset(body), tuple(child_keys))
                if cand not in seen_bodies:
                    seen_bodies.add(cand)
                    candidates[task].append(cand)

    # A predicate is definable once some clause has all children definable;
    # clauses referencing undefinable predicates are dead ends, and so are
    # predicates unreachable from the goal after that filtering.
    defined: set[tuple] = set()
    changed = True
    while changed:
        changed = False
        for task, cands in candidates.items():
            if task in defined:
                continue
            if any(all(ck in defined for ck in cs) for _b, cs in cands):
                defined.add(task)
                changed = True
    if root_key not in defined:
        raise AssertionError("goal predicate has no definable clause")
    kept = {
        task: [c for c in cands if all(ck in defined for ck in c[1])]
        for task, cands in candidates.items()
        if task in defined
    }
    live: set[tuple] = set()
    queue = deque([root_key])
    while queue:
        task = queue.popleft()
        if task in live:
            continue
        live.add(task)
        for _body, child_keys in kept[task]:
            queue.extend(child_keys)

    clauses: list[NdlClause] = []
    params: dict[str, tuple[int, ...]] = {}
    for task in sorted(live, key=lambda t: (order[t[0]], t[1])):
        subtree, key = task
        head = Atom(pred_name(subtree, key), head_args(subtree, dict(key)))
        params[head.pred] = _answer_params(head.args, answers)
        for body, _children in sorted(
            kept[task], key=lambda c: sorted(map(_item_sort_key, c[0]))
        ):
            clauses.append(NdlClause(head, _finish_body(head, set(body))))
    goal = pred_name(plan.root, root_key[1])
    return NdlQuery(tuple(clauses), goal, len(cq.answer_vars), params)


# ---------------------------------------------------------------------------
# Lin: one predicate per distance slice of a tree-shaped query
# ---------------------------------------------------------------------------


def rewrite_lin(
    ontology: Ontology,
    cq: ConjunctiveQuery,
    root: str | None = None,
    dead_ends: str = "prune",
) -> NdlQuery:
    """Rewrite a tree-shaped query into a linear program over distance slices.

    Variables are grouped by distance from the root; level n gets one
    predicate per type of slice n, its clauses joining the type material of
    slices n and n+1 with the level-(n+1) predicate.  With
    ``dead_ends="keep"``, types unreachable from the goal keep their clauses
    (only undefinable predicates are dropped); the default prunes both.
    """
    if dead_ends not in ("prune", "keep"):
        raise ValueError(f"dead_ends must be 'prune' or 'keep', not {dead_ends!r}")
    onto = normalize(ontology)
    tables = build_closures(onto)
    if depth(onto, tables).is_infinite:
        raise InfiniteDepthError(
            "rewrite_lin needs an ontology of finite depth (finite word space)"
        )
    shape = classify(cq)
    if not shape.tree_shaped:
        raise ValueError("rewrite_lin needs a tree-shaped query")
    if root is None:
        root = cq.answer_vars[0] if cq.answer_vars else sort_vars(cq.variables)[0]
    layers = slices(cq, root)
    last = len(layers) - 1
    answers = set(cq.answer_vars)

    # Tail queries q_n (atoms entirely in slices >= n) and their answer vars.
    tail_atoms: list[list[Atom]] = []
    reach: set[str] = set()
    for n in range(last, -1, -1):
        reach |= layers[n]
        tail_atoms.append([a for a in cq.atoms if set(a.args) <= reach])
    tail_atoms.reverse()
    tail_vars = [{v for a in atoms for v in a.args} for atoms in tail_atoms]
    drop_terminal = not tail_atoms[last]

    def head_args(n: int) -> tuple[str, ...]:
        free = sort_vars((layers[n] & tail_vars[n]) - answers)
        return tuple(free) + tuple(v for v in cq.answer_vars if v in tail_vars[n])

    def level_atoms(n: int) -> list[Atom]:
        scope = layers[n] | (layers[n + 1] if n < last else frozenset())
        return [a for a in cq.atoms if set(a.args) <= scope]

    wspace = words(onto, tables)

    def local_types(n: int) -> list[dict[str, Word]]:
        vs = sort_vars(layers[n])
        local = [a for a in cq.atoms if set(a.args) <= layers[n]]
        out = []
        for combo in itertools.product(
            *((EPSILON,) if v in answers else (EPSILON, *wspace) for v in vs)
        ):
            typ = dict(zip(vs, combo))
            if _type_compatible(tables, typ, local):
                out.append(typ)
        return out

    types = [local_types(n) for n in range(last + 1)]
    straddle = [
        [
            a
            for a in cq.atoms
            if a.arity == 2
            and a.args[0] != a.args[1]
            and {a.args[0], a.args[1]} & layers[n]
            and {a.args[0], a.args[1]} & layers[n + 1]
        ]
        for n in range(last)
    ]

    taken = (
        set(onto.concept_names)
        | set(onto.role_names)
        | {a.pred for a in cq.atoms}
        | {TOP_PRED}
    )
    goal_name = _fresh_name("G", taken)
    names: dict[tuple[int, TypeKey], str] = {}

    def pred_name(n: int, typ: Mapping[str, Word]) -> str:
        key = (n, _type_key(typ))
        if key not in names:
            names[key] = _fresh_name(f"G_{n}{_type_suffix(typ)}", taken)
        return names[key]

    raw: list[tuple[Atom, set[BodyItem], str | None]] = []  # head, body, child pred
    for n in range(last):
        terminal_next = n + 1 == last and drop_terminal
        for wtyp in types[n]:
            head = Atom(pred_name(n, wtyp), head_args(n))
            for styp in types[n + 1]:
                both = {**wtyp, **styp}
                if not all(
                    _binary_fold_ok(
                        tables, Role(a.pred), both[a.args[0]], both[a.args[1]]
                    )
                    for a in straddle[n]
                ):
                    continue
                body = _at_conjuncts(onto, both, level_atoms(n))
                child: str | None = None
                if not terminal_next:
                    child = pred_name(n + 1, styp)
                    body.add(Atom(child, head_args(n + 1)))
                raw.append((head, body, child))
    if not drop_terminal:
        for wtyp in types[last]:
            head = Atom(pred_name(last, wtyp), head_args(last))
            raw.append((head, _at_conjuncts(onto, wtyp, level_atoms(last)), None))

    # A level-n predicate is definable when some clause's child is definable;
    # keep only clauses over definable predicates, then (under "prune") only
    # those reachable from the goal.
    defined = {h.pred for h, _b, child in raw if child is None}
    changed = True
    while changed:
        changed = False
        for head, _body, child in raw:
            if head.pred not in defined and child in defined:
                defined.add(head.pred)
                changed = True
    raw = [r for r in raw if r[0].pred in defined and (r[2] is None or r[2] in defined)]
    goal_args = tuple(cq.answer_vars)
    level0 = [
        p for p in (pred_name(0, typ) for typ in types[0]) if p in defined
    ]
    wrappers = [
        (Atom(goal_name, goal_args), {Atom(p, head_args(0))}, p) for p in level0
    ]
    if dead_ends == "prune":
        used = {goal_name}
        frontier = {c for _h, _b, c in wrappers}
        while frontier:
            used |= frontier
            frontier = {
                c for h, _b, c in raw if h.pred in used and c is not None
            } - used
        raw = [r for r in raw if r[0].pred in used]
        wrappers = [w for w in wrappers if w[2] in used]

    clause_order: dict[str, int] = {goal_name: -1}
    for key, name in names.items():
        clause_order[name] = key[0]
    clauses = []
    params: dict[str, tuple[int, ...]] = {goal_name: tuple(range(len(goal_args)))}
    for head, body, _child in sorted(
        wrappers + raw,
        key=lambda r: (clause_order[r[0].pred], r[0].pred,
                       sorted(map(_item_sort_key, r[1]))),
    ):
        params.setdefault(head.pred, _answer_params(head.args, answers))
        clauses.append(NdlClause(head, _finish_body(head, set(body))))
    return NdlQuery(tuple(clauses), goal_name, len(goal_args), params)


# ---------------------------------------------------------------------------
# Tw: tree-witness recursion over subqueries split at a centroid
# ---------------------------------------------------------------------------


def rewrite_tw(ontology: Ontology, cq: ConjunctiveQuery) -> NdlQuery:
    """Rewrite a tree-shaped query by recursion on centroid splits.

    Each task is a subquery with interface variables.  Its clauses either map
    the splitting variable to a named individual (joining the components
    around it) or fold a tree witness containing it into the anonymous part
    (a guard atom spawning the witness, equalities merging its roots, and
    recursive subqueries for the remainder).  Works for ontologies of
    infinite depth; the program's depth is logarithmic in the query size.
    """
    onto = normalize(ontology)
    shape = classify(cq)
    if not shape.tree_shaped:
        raise ValueError("rewrite_tw needs a tree-shaped query")
    answers = set(cq.answer_vars)

    taken = (
        set(onto.concept_names)
        | set(onto.role_names)
        | {a.pred for a in cq.atoms}
        | {TOP_PRED}
    )
    goal_name = _fresh_name("G", taken)
    names: dict[tuple, str] = {}

    def pred_name(atoms: frozenset[Atom], args: tuple[str, ...]) -> str:
        key = (atoms, args)
        if key not in names:
            stems = {v.rstrip("0123456789") for v in args}
            stem = stems.pop() if len(stems) == 1 else None
            if args and stem and all(len(v) > len(stem) for v in args):
                base = "G_" + "".join(v[len(stem):] for v in args)
            else:
                base = "G_" + "_".join(args)
            names[key] = _fresh_name(base, taken)
        return names[key]

    clauses: list[NdlClause] = []
    emitted: set[tuple] = set()
    params: dict[str, tuple[int, ...]] = {}
    done: set[tuple] = set()
    queue: deque[tuple[frozenset[Atom], tuple[str, ...], str]] = deque()

    def subtask_atom(atoms: Iterable[Atom], args: Sequence[str]) -> Atom:
        atoms = frozenset(atoms)
        args = tuple(args)
        name = pred_name(atoms, args)
        queue.append((atoms, args, name))
        return Atom(name, args)

    def emit(pred: str, head_args: tuple[str, ...], body: set[BodyItem]) -> None:
        head = Atom(pred, head_args)
        finished = _finish_body(head, body)
        if (head, finished) not in emitted:
            emitted.add((head, finished))
            params.setdefault(pred, _answer_params(head_args, answers))
            clauses.append(NdlClause(head, finished))

    def process(atoms: frozenset[Atom], args: tuple[str, ...], pred: str) -> None:
        variables = {v for a in atoms for v in a.args}
        if variables <= set(args):
            emit(pred, args, set(atoms))
            return
        sub = ConjunctiveQuery(atoms, args)
        z = centroid(sub)
        interface = set(args)

        # Splitting variable on a named individual: join the components left
        # after removing it, inlining those without existential variables.
        z_only = {a for a in atoms if set(a.args) == {z}}
        rest = [a for a in atoms if set(a.args) != {z}]
        body: set[BodyItem] = set(z_only)
        for comp in _var_components(rest, z):
            comp_atoms = [a for a in rest if set(a.args) - {z} <= comp]
            comp_vars = {v for a in comp_atoms for v in a.args}
            if comp_vars <= interface | {z}:
                body |= set(comp_atoms)
            else:
                comp_args = sort_vars({z} | (comp_vars & interface))
                body.add(subtask_atom(comp_atoms, comp_args))
        emit(pred, args, body)

        # Splitting variable inside a tree witness: spawn the witness with a
        # guard atom, equate its roots, and handle the leftover atoms.
        for wit in tree_witnesses(onto, sub):
            if z not in wit.inner or not wit.roots:
                continue
            roots = sort_vars(wit.roots)
            z0 = roots[0]
            for role in wit.roles:
                body = {Atom(onto.guard_name(role), (z0,))}
                body |= {Eq(z0, r) for r in roots[1:]}
                leftover = [a for a in atoms if a not in wit.atoms]
                for comp_atoms in _atom_groups(leftover):
                    comp_vars = {v for a in comp_atoms for v in a.args}
                    scope = interface | set(roots)
                    if comp_vars <= scope:
                        body |= set(comp_atoms)
                    else:
                        comp_args = sort_vars(comp_vars & scope)
                        body.add(subtask_atom(comp_atoms, comp_args))
                emit(pred, args, body)

        # A Boolean query may also fold entirely into the anonymous tree
        # spawned by a single data element; probe each unary seed.
        if not args:
            seeds = sorted(
                set(onto.concept_names) | {a.pred for a in atoms if a.arity == 1}
            )
            for concept in seeds:
                seed = DataInstance()
                seed.add(Atom(concept, ("w",)))
                if certain_answers(onto, ConjunctiveQuery(atoms, ()), seed):
                    emit(pred, args, {Atom(concept, ("x",))})

    process(frozenset(cq.atoms), tuple(cq.answer_vars), goal_name)
    done.add((frozenset(cq.atoms), tuple(cq.answer_vars)))
    while queue:
        atoms, args, pred = queue.popleft()
        if (atoms, args) in done:
            continue
        done.add((atoms, args))
        process(atoms, args, pred)

    params[goal_name] = tuple(range(len(cq.answer_vars)))
    return NdlQuery(tuple(clauses), goal_name, len(cq.answer_vars), params)


def _var_components(atoms: Sequence[Atom], removed: str) -> list[frozenset[str]]:
    """Connected variable sets of the atoms after deleting one variable."""
    g = nx.Graph()
    for a in atoms:
        vs = [v for v in a.args if v != removed]
        g.add_nodes_from(vs)
        if len(vs) == 2:
            g.add_edge(*vs)
    return sorted(
        (frozenset(c) for c in nx.connected_components(g)),
        key=lambda c: sorted(map(var_order_key, c)),
    )


def _atom_groups(atoms: Sequence[Atom]) -> list[list[Atom]]:
    """Connected components of an atom list under shared variables."""
    return [sorted(comp) for comp in atom_components(atoms)]


# ---------------------------------------------------------------------------
# Facade
# ---------------------------------------------------------------------------

_ALGOS = ("log", "lin", "tw", "twstar")
_REGIMES = ("complete", "arbitrary")


def rewrite(
    ontology: Ontology,
    cq: ConjunctiveQuery,
    algo: str = "log",
    data_regime: str = "complete",
) -> NdlQuery:
    """Rewrite an ontology-mediated query with the chosen algorithm.

    ``algo`` is one of ``log``, ``lin``, ``tw``, ``twstar`` (``tw`` followed
    by inlining of single-use predicates).  With ``data_regime="arbitrary"``
    the program is post-composed with the completion transform (``lin`` uses
    the linearity-preserving variant), so its answers over raw data equal the
    certain answers; ``complete`` assumes the data already contains every
    entailed fact.
    """
    if algo not in _ALGOS:
        raise ValueError(f"algo must be one of {_ALGOS}, not {algo!r}")
    if data_regime not in _REGIMES:
        raise ValueError(f"data_regime must be one of {_REGIMES}, not {data_regime!r}")
    if algo == "log":
        ndl = rewrite_log(ontology, cq)
    elif algo == "lin":
        ndl = rewrite_lin(ontology, cq)
    elif algo == "tw":
        ndl = rewrite_tw(ontology, cq)
    else:
        ndl = inline_single_use(rewrite_tw(ontology, cq))
    if data_regime == "arbitrary":
        if algo == "lin":
            ndl = linear_arbitrary_transform(ndl, ontology)
        else:
            ndl = star_transform(ndl, ontology)
    return ndl
