"""NDL program analytics and equivalence-preserving transforms.

Provides the structural metrics used throughout (depth, width, minimal weight
function, skinny depth), conversion to skinny form via Huffman pairing of
clause bodies, the star transform that re-derives complete-data rewritings
over raw data, a linearity-preserving variant of the same, and inlining of
single-use predicates.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx

from .core_syntax import (
    Atom,
    BodyItem,
    ConceptName,
    Eq,
    Exists,
    NdlClause,
    NdlQuery,
    Ontology,
    Role,
    Top,
    TOP_PRED,
)
from .cq_analysis import sort_vars
from .ql_reasoner import ClosureTables, build_closures, normalize


def _ceil_log2(n: int) -> int:
    return 0 if n <= 1 else (n - 1).bit_length()


def dependence_graph(ndl: NdlQuery) -> nx.DiGraph:
    """Edges head predicate → body predicate, over all predicates (EDB too)."""
    g = nx.DiGraph()
    g.add_nodes_from(ndl.predicates)
    for clause in ndl.clauses:
        for atom in clause.body_atoms:
            g.add_edge(clause.head.pred, atom.pred)
    return g


def _find_cycle(g: nx.DiGraph) -> list[str] | None:
    try:
        cyc = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        return None
    return [u for u, _v in cyc] + [cyc[-1][1]]


def program_depth(ndl: NdlQuery) -> int:
    """Longest dependence path from the goal (a single clause G ← A has depth 1)."""
    g = dependence_graph(ndl)
    cycle = _find_cycle(g)
    if cycle is not None:
        raise ValueError(f"recursive program: cycle {' -> '.join(cycle)}")
    if ndl.goal_pred not in g:
        return 0
    depth: dict[str, int] = {}
    for node in reversed(list(nx.topological_sort(g))):
        succs = list(g.successors(node))
        depth[node] = 1 + max(depth[s] for s in succs) if succs else 0
    return depth[ndl.goal_pred]


def min_weight(ndl: NdlQuery) -> dict[str, int]:
    """The pointwise-minimal weight function: EDB 0, IDB by bottom-up maxima."""
    g = dependence_graph(ndl)
    if _find_cycle(g) is not None:
        raise ValueError("recursive program has no weight function")
    idb = ndl.idb_predicates
    nu: dict[str, int] = {p: 0 for p in ndl.predicates if p not in idb}
    for node in reversed(list(nx.topological_sort(g))):
        if node not in idb:
            continue
        best = 1
        for clause in ndl.clauses_for(node):
            total = sum(nu[a.pred] for a in clause.body_atoms if a.pred in idb)
            best = max(best, total)
        nu[node] = best
    for p in idb:
        nu.setdefault(p, 1)
    return nu


def _param_names(ndl: NdlQuery, atom: Atom) -> tuple[str, ...]:
    positions = ndl.params.get(atom.pred, ())
    return tuple(atom.args[i] for i in positions if i < len(atom.args))


def is_ordered(ndl: NdlQuery) -> bool:
    """The three ordered-ness conditions with the declared parameter positions."""
    goal_params = ndl.params.get(ndl.goal_pred, ())
    if tuple(goal_params) != tuple(range(ndl.goal_arity)):
        return False
    idb = ndl.idb_predicates

    occurrences: list[Atom] = []
    for clause in ndl.clauses:
        occurrences.append(clause.head)
        occurrences.extend(a for a in clause.body_atoms if a.pred in idb)

    names_of: dict[str, tuple[str, ...]] = {}
    for atom in occurrences:
        names = _param_names(ndl, atom)
        if atom.pred in names_of and names_of[atom.pred] != names:
            return False
        names_of[atom.pred] = names
    goal_names = set(names_of.get(ndl.goal_pred, ()))
    if ndl.goal_pred in names_of:
        for names in names_of.values():
            if not set(names) <= goal_names:
                return False
    for clause in ndl.clauses:
        head_names = set(_param_names(ndl, clause.head))
        for atom in clause.body_atoms:
            if atom.pred in idb and not set(_param_names(ndl, atom)) <= head_names:
                return False
    return True


def clause_width(ndl: NdlQuery, clause: NdlClause) -> int:
    params = set(_param_names(ndl, clause.head))
    for atom in clause.body_atoms:
        if atom.pred in ndl.idb_predicates:
            params |= set(_param_names(ndl, atom))
    return len(clause.variables - params)


def _edb_conjuncts(ndl: NdlQuery, clause: NdlClause) -> int:
    idb = ndl.idb_predicates
    n = sum(1 for a in clause.body_atoms if a.pred not in idb)
    return n + len(clause.body_eqs)


@dataclass(frozen=True)
class NdlMetrics:
    nonrecursive: bool
    linear: bool
    ordered: bool
    width: int
    depth: int
    min_weight_at_goal: int
    skinny_depth: int

    def as_dict(self) -> dict:
        return {
            "nonrecursive": self.nonrecursive,
            "linear": self.linear,
            "ordered": self.ordered,
            "width": self.width,
            "depth": self.depth,
            "min_weight_at_goal": self.min_weight_at_goal,
            "skinny_depth": self.skinny_depth,
        }


def metrics(ndl: NdlQuery) -> NdlMetrics:
    """Structural summary; rejects recursive programs naming the cycle."""
    cycle = _find_cycle(dependence_graph(ndl))
    if cycle is not None:
        raise ValueError(f"recursive program: cycle {' -> '.join(cycle)}")
    idb = ndl.idb_predicates
    linear = all(
        sum(1 for a in c.body_atoms if a.pred in idb) <= 1 for c in ndl.clauses
    )
    width = max((clause_width(ndl, c) for c in ndl.clauses), default=0)
    d = program_depth(ndl)
    nu_goal = min_weight(ndl).get(ndl.goal_pred, 1)
    e_pi = max((_edb_conjuncts(ndl, c) for c in ndl.clauses), default=0)
    sd = 2 * d + _ceil_log2(nu_goal) + _ceil_log2(e_pi)
    return NdlMetrics(True, linear, is_ordered(ndl), width, d, nu_goal, sd)


# ---------------------------------------------------------------------------
# Helpers for the transforms
# ---------------------------------------------------------------------------


class _Names:
    def __init__(self, taken: Iterable[str]):
        self.taken = set(taken)

    def fresh(self, base: str) -> str:
        name = base
        k = 1
        while name in self.taken:
            k += 1
            name = f"{base}_{k}"
        self.taken.add(name)
        return name


def _item_vars(item: BodyItem) -> frozenset[str]:
    if isinstance(item, Atom):
        return frozenset(item.args)
    return frozenset((item.lhs, item.rhs))


def _ordered_args(
    vs: Iterable[str], param_names: Sequence[str]
) -> tuple[tuple[str, ...], tuple[int, ...]]:
    """Argument tuple (non-parameters first) and the parameter positions."""
    vs = set(vs)
    params = [p for p in param_names if p in vs]
    rest = sort_vars(vs - set(params))
    args = tuple(rest) + tuple(params)
    positions = tuple(range(len(rest), len(args)))
    return args, positions


def _item_key(item: BodyItem) -> tuple:
    if isinstance(item, Atom):
        return (0, item.pred, item.args)
    return (1, item.lhs, item.rhs)


# ---------------------------------------------------------------------------
# to_skinny (Huffman pairing)
# ---------------------------------------------------------------------------


def to_skinny(ndl: NdlQuery) -> NdlQuery:
    """Equivalent program with at most two body atoms per clause.

    Each long clause is split into an EDB part (balanced pairwise merging,
    equalities included) and an IDB part (Huffman merging weighted by the
    minimal weight function, ties broken by predicate name), joined by one
    final two-atom clause.
    """
    nu = min_weight(ndl)
    idb = ndl.idb_predicates
    names = _Names(ndl.predicates)
    out_clauses: list[NdlClause] = []
    out_params: dict[str, tuple[int, ...]] = dict(ndl.params)

    for ci, clause in enumerate(ndl.clauses):
        if len(clause.body) <= 2:
            out_clauses.append(clause)
            continue
        params = _param_names(ndl, clause.head)
        base = f"{clause.head.pred}_sk{ci}"
        fresh_idx = itertools.count(1)

        def merge(left: BodyItem, right: BodyItem) -> Atom:
            """Fresh predicate defined by the two items; returns its head atom."""
            vs = _item_vars(left) | _item_vars(right)
            args, positions = _ordered_args(vs, params)
            pred = names.fresh(f"{base}_{next(fresh_idx)}")
            out_clauses.append(NdlClause(Atom(pred, args), (left, right)))
            out_params[pred] = positions
            return Atom(pred, args)

        edb_items = sorted(
            (i for i in clause.body if not (isinstance(i, Atom) and i.pred in idb)),
            key=_item_key,
        )
        idb_items = [i for i in clause.body if isinstance(i, Atom) and i.pred in idb]

        # EDB part: balanced rounds of pairwise merging, stopping once the
        # remaining items fit into the final two-slot clause.
        edb_slots = 2 if not idb_items else 1
        layer: list[BodyItem] = list(edb_items)
        while len(layer) > edb_slots:
            nxt: list[BodyItem] = []
            for j in range(0, len(layer) - 1, 2):
                nxt.append(merge(layer[j], layer[j + 1]))
            if len(layer) % 2:
                nxt.append(layer[-1])
            layer = nxt

        # IDB part: Huffman merging by weight, ties by predicate name; the
        # last merge is the final clause itself, so heavy subgoals stay high.
        heap: list[tuple[int, tuple, BodyItem]] = []
        for atom in sorted(idb_items, key=_item_key):
            heapq.heappush(heap, (nu[atom.pred], _item_key(atom), atom))
        while len(heap) + len(layer) > 2:
            w1, _k1, a1 = heapq.heappop(heap)
            w2, _k2, a2 = heapq.heappop(heap)
            merged = merge(a1, a2)
            heapq.heappush(heap, (w1 + w2, _item_key(merged), merged))

        final_body = tuple(a for _w, _k, a in sorted(heap)) + tuple(layer)
        out_clauses.append(NdlClause(clause.head, final_body))

    return NdlQuery(tuple(out_clauses), ndl.goal_pred, ndl.goal_arity, out_params)


# ---------------------------------------------------------------------------
# Star transform (complete-data rewriting → arbitrary data)
# ---------------------------------------------------------------------------


def _concept_atom(c, x: str, y: str) -> Atom:
    """Body atom expressing membership in a basic concept at x (witness y)."""
    if isinstance(c, Top):
        return Atom(TOP_PRED, (x,))
    if isinstance(c, ConceptName):
        return Atom(c.name, (x,))
    if isinstance(c, Exists):
        pred, a, b = c.role.apply(x, y)
        return Atom(pred, (a, b))
    raise TypeError(c)


def star_transform(ndl: NdlQuery, ontology: Ontology) -> NdlQuery:
    """Replace EDB predicates S by IDB S_star derived from all implying shapes.

    A_star(x) gets one clause per basic concept below A (concept name, exists,
    or top); P_star(x,y) one clause per role below P, plus the reflexive loop
    clause when the ontology entails P(x,x).  The active-domain predicate is
    left untouched.
    """
    onto = normalize(ontology)
    tables = build_closures(onto)
    idb = ndl.idb_predicates
    names = _Names(ndl.predicates)

    edb_preds = sorted(
        {
            a.pred
            for c in ndl.clauses
            for a in c.body_atoms
            if a.pred not in idb and a.pred != TOP_PRED
        }
    )
    star_of = {p: names.fresh(f"{p}_star") for p in edb_preds}

    out_clauses: list[NdlClause] = []
    out_params: dict[str, tuple[int, ...]] = dict(ndl.params)
    for clause in ndl.clauses:
        body = tuple(
            Atom(star_of.get(i.pred, i.pred), i.args) if isinstance(i, Atom) else i
            for i in clause.body
        )
        out_clauses.append(NdlClause(clause.head, body))

    for pred in edb_preds:
        star = star_of[pred]
        arity = ndl.arity_of(pred)
        if arity == 1:
            concepts = sorted(tables.concepts_below(ConceptName(pred)), key=str)
            if not concepts:  # data-only predicate: completion adds nothing
                out_clauses.append(NdlClause(Atom(star, ("x",)), (Atom(pred, ("x",)),)))
            for c in concepts:
                out_clauses.append(
                    NdlClause(Atom(star, ("x",)), (_concept_atom(c, "x", "y"),))
                )
        else:
            roles = sorted(tables.roles_below(Role(pred)), key=lambda r: (r.name, r.inverse))
            if not roles:
                out_clauses.append(
                    NdlClause(Atom(star, ("x", "y")), (Atom(pred, ("x", "y")),))
                )
            for r in roles:
                p, a, b = r.apply("x", "y")
                out_clauses.append(
                    NdlClause(Atom(star, ("x", "y")), (Atom(p, (a, b)),))
                )
            if tables.is_reflexive(Role(pred)):
                out_clauses.append(
                    NdlClause(
                        Atom(star, ("x", "x")), (Atom(TOP_PRED, ("x",)),)
                    )
                )
        out_params[star] = ()

    return NdlQuery(tuple(out_clauses), ndl.goal_pred, ndl.goal_arity, out_params)


# ---------------------------------------------------------------------------
# Linear arbitrary-data transform
# ---------------------------------------------------------------------------


def _upsilon(
    atom: Atom, tables: ClosureTables, fresh_var: "itertools.count[int]"
) -> list[tuple[BodyItem, ...]]:
    """All body-item variants whose truth over raw data implies the atom over
    the completed data (unknown predicates pass through unchanged)."""
    variants: list[tuple[BodyItem, ...]] = []
    if atom.pred == TOP_PRED:
        return [(atom,)]
    if atom.arity == 1:
        target = ConceptName(atom.pred)
        below = tables.concepts_below(target)
        if not below:  # not an ontology concept: data-only predicate
            return [(atom,)]
        x = atom.args[0]
        for c in sorted(below, key=str):
            y = f"w{next(fresh_var)}"
            variants.append((_concept_atom(c, x, y),))
        return variants
    x, yv = atom.args
    role = Role(atom.pred)
    roles = tables.roles_below(role)
    if not roles:
        return [(atom,)]
    for r in sorted(roles, key=lambda r: (r.name, r.inverse)):
        p, a, b = r.apply(x, yv)
        variants.append((Atom(p, (a, b)),))
    if tables.is_reflexive(role):
        # P(x,y) also holds when x = y, for reflexive P.
        variants.append((Atom(TOP_PRED, (x,)), Eq(x, yv)))
    return variants


def linear_arbitrary_transform(ndl: NdlQuery, ontology: Ontology) -> NdlQuery:
    """Rewrite a linear complete-data program to run on raw data, linearly.

    Every clause Q(z) ← I ∧ eqs ∧ E_1 … E_n (one IDB atom I, EDB atoms E_i)
    becomes a chain Q_0 ← I; Q_i ← Q_{i-1} ∧ E_i'; Q ← Q_n ∧ eqs, with one
    clause per variant E_i' of E_i that implies it over completed data.  Chain
    predicates carry exactly the variables joining their prefix to the rest.
    """
    onto = normalize(ontology)
    tables = build_closures(onto)
    idb = ndl.idb_predicates
    names = _Names(ndl.predicates)
    goal_param_names: tuple[str, ...] = ()
    goal_clauses = ndl.clauses_for(ndl.goal_pred)
    if goal_clauses:
        goal_param_names = _param_names(ndl, goal_clauses[0].head)

    out_clauses: list[NdlClause] = []
    out_params: dict[str, tuple[int, ...]] = dict(ndl.params)
    fresh_var = itertools.count(1)

    for ci, clause in enumerate(ndl.clauses):
        idb_atoms = [a for a in clause.body_atoms if a.pred in idb]
        if len(idb_atoms) > 1:
            raise ValueError("linear_arbitrary_transform requires a linear program")
        edb_atoms = [a for a in clause.body_atoms if a.pred not in idb]
        eqs = list(clause.body_eqs)
        if not edb_atoms:
            out_clauses.append(clause)
            continue

        params = _param_names(ndl, clause.head)
        suffix_vars: list[frozenset[str]] = [frozenset()] * (len(edb_atoms) + 1)
        tail = frozenset(clause.head.args) | frozenset(
            v for e in eqs for v in (e.lhs, e.rhs)
        )
        for i in range(len(edb_atoms), 0, -1):
            suffix_vars[i - 1] = suffix_vars[i] | frozenset(edb_atoms[i - 1].args)
        suffix_vars = [s | tail for s in suffix_vars]

        prefix: set[str] = set()
        for a in idb_atoms:
            prefix |= set(a.args)

        def stage_vars(i: int) -> frozenset[str]:
            # variables occurring both in (I, E_1..E_i) and in the rest
            return frozenset(prefix) & suffix_vars[i]

        base = f"{clause.head.pred}_ar{ci}"
        prev_atom: Atom | None = None
        if idb_atoms:
            z0 = stage_vars(0)
            args, positions = _ordered_args(z0, params)
            pred = names.fresh(f"{base}_0")
            out_clauses.append(NdlClause(Atom(pred, args), (idb_atoms[0],)))
            out_params[pred] = positions
            prev_atom = Atom(pred, args)

        for i, e in enumerate(edb_atoms, start=1):
            prefix |= set(e.args)
            zi = stage_vars(i)
            args, positions = _ordered_args(zi, params)
            pred = names.fresh(f"{base}_{i}")
            for variant in _upsilon(e, tables, fresh_var):
                body = ((prev_atom,) if prev_atom else ()) + variant
                out_clauses.append(NdlClause(Atom(pred, args), body))
            out_params[pred] = positions
            prev_atom = Atom(pred, args)

        assert prev_atom is not None
        out_clauses.append(NdlClause(clause.head, (prev_atom, *eqs)))

    return NdlQuery(tuple(out_clauses), ndl.goal_pred, ndl.goal_arity, out_params)


# ---------------------------------------------------------------------------
# Single-use inlining (Tw*)
# ---------------------------------------------------------------------------


def inline_single_use(ndl: NdlQuery) -> NdlQuery:
    """Substitute away non-goal predicates with one clause used at most twice.

    Iterated to fixpoint; local variables of the inlined body are renamed when
    they collide with the host clause.
    """
    clauses = list(ndl.clauses)
    params = dict(ndl.params)

    while True:
        defs: dict[str, list[NdlClause]] = {}
        uses: dict[str, int] = {}
        for c in clauses:
            defs.setdefault(c.head.pred, []).append(c)
            for a in c.body_atoms:
                uses[a.pred] = uses.get(a.pred, 0) + 1
        target = None
        for pred in sorted(defs):
            if pred == ndl.goal_pred:
                continue
            if len(defs[pred]) == 1 and uses.get(pred, 0) <= 2:
                target = pred
                break
        if target is None:
            break
        definition = defs[target][0]
        clauses.remove(definition)
        params.pop(target, None)

        new_clauses: list[NdlClause] = []
        for c in clauses:
            if all(a.pred != target for a in c.body_atoms):
                new_clauses.append(c)
                continue
            body: list[BodyItem] = []
            host_vars = set(c.variables)
            for item in c.body:
                if not (isinstance(item, Atom) and item.pred == target):
                    body.append(item)
                    continue
                rename = dict(zip(definition.head.args, item.args))
                for v in sorted(definition.variables):
                    if v in rename:
                        continue
                    nv = v
                    k = 1
                    while nv in host_vars or nv in rename.values():
                        k += 1
                        nv = f"{v}_i{k}"
                    rename[v] = nv
                    host_vars.add(nv)
                for sub in definition.body:
                    if isinstance(sub, Atom):
                        body.append(
                            Atom(sub.pred, tuple(rename[v] for v in sub.args))
                        )
                    else:
                        body.append(Eq(rename[sub.lhs], rename[sub.rhs]))
            new_clauses.append(NdlClause(c.head, tuple(body)))
        clauses = new_clauses

    return NdlQuery(tuple(clauses), ndl.goal_pred, ndl.goal_arity, params)
