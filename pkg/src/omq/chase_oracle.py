"""Certain-answer oracle via the canonical model (chase).

The canonical model of an ontology + data instance extends the saturated
instance with anonymous tree parts: a null a.w exists for every individual a
and word w = r1...rn over the roles such that the existential concept of r1
holds at a and consecutive letters are compatible (see ql_reasoner.words).
Certain answers of a CQ are computed by homomorphism search into a
sufficiently deep finite portion of that model.

Everything here is deliberately independent of the rewriting machinery so it
can serve as ground truth when verifying rewritings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .core_syntax import (
    Atom,
    ConceptName,
    ConjunctiveQuery,
    DataInstance,
    Exists,
    Ontology,
    Role,
    Top,
)
from .ql_reasoner import (
    ClosureTables,
    ConsistencyResult,
    build_closures,
    build_role_graph,
    check_consistency,
    depth,
    normalize,
    saturate,
    words,
)


class InconsistentInstance(Exception):
    """Raised when an operation requires a consistent ontology + data pair."""

    def __init__(self, witness: str):
        self.witness = witness
        super().__init__(f"inconsistent instance: {witness}")


@dataclass(frozen=True, order=True)
class ChaseElement:
    """An individual (empty word) or a null a.r1...rn below individual `root`."""

    root: str
    word: tuple[Role, ...] = ()

    @property
    def is_null(self) -> bool:
        return bool(self.word)

    @property
    def last(self) -> Role:
        return self.word[-1]

    def child(self, role: Role) -> "ChaseElement":
        return ChaseElement(self.root, self.word + (role,))

    def __str__(self) -> str:
        return self.root + "".join(
            "." + r.name + ("-" if r.inverse else "") for r in self.word
        )


class CanonicalModel:
    """A materialized finite portion of the canonical model."""

    def __init__(self, individuals: Sequence[str]):
        self.individuals: dict[str, ChaseElement] = {
            a: ChaseElement(a) for a in individuals
        }
        self.elements: set[ChaseElement] = set(self.individuals.values())
        self.unary: dict[str, set[ChaseElement]] = {}
        self.out: dict[str, dict[ChaseElement, set[ChaseElement]]] = {}
        self.inc: dict[str, dict[ChaseElement, set[ChaseElement]]] = {}

    # -- construction -------------------------------------------------------

    def add_element(self, e: ChaseElement) -> None:
        self.elements.add(e)

    def add_unary(self, pred: str, e: ChaseElement) -> None:
        self.unary.setdefault(pred, set()).add(e)

    def add_binary(self, pred: str, u: ChaseElement, v: ChaseElement) -> None:
        self.out.setdefault(pred, {}).setdefault(u, set()).add(v)
        self.inc.setdefault(pred, {}).setdefault(v, set()).add(u)

    # -- queries ------------------------------------------------------------

    def unary_holds(self, pred: str, e: ChaseElement) -> bool:
        return e in self.unary.get(pred, ())

    def binary_holds(self, pred: str, u: ChaseElement, v: ChaseElement) -> bool:
        return v in self.out.get(pred, {}).get(u, ())

    def successors(self, pred: str, u: ChaseElement) -> set[ChaseElement]:
        return self.out.get(pred, {}).get(u, set())

    def predecessors(self, pred: str, v: ChaseElement) -> set[ChaseElement]:
        return self.inc.get(pred, {}).get(v, set())

    def atoms(self) -> Iterator[tuple[str, tuple[str, ...]]]:
        for pred in sorted(self.unary):
            for e in sorted(self.unary[pred], key=str):
                yield pred, (str(e),)
        for pred in sorted(self.out):
            for u in sorted(self.out[pred], key=str):
                for v in sorted(self.out[pred][u], key=str):
                    yield pred, (str(u), str(v))

    def __len__(self) -> int:
        n = sum(len(s) for s in self.unary.values())
        n += sum(len(vs) for d in self.out.values() for vs in d.values())
        return n


def satisfied_concepts(
    tables: ClosureTables, data: DataInstance
) -> dict[str, set]:
    """For each individual, the set of concepts entailed to hold there.

    `data` must already be saturated (role facts closed under inclusions).
    """
    base: dict[str, set] = {a: {Top()} for a in data.individuals}
    for pred, a in data.unary_facts:
        base[a].add(ConceptName(pred))
    for pred, a, b in data.binary_facts:
        base[a].add(Exists(Role(pred)))
        base[b].add(Exists(Role(pred, inverse=True)))
    out: dict[str, set] = {}
    for a, concepts in base.items():
        closed = set()
        for c in concepts:
            closed |= tables.sups_of_concept(c)
        out[a] = closed
    return out


def build_chase(
    ontology: Ontology,
    data: DataInstance,
    max_depth: int | None = None,
) -> CanonicalModel:
    """Materialize the canonical model up to nulls of the given word length.

    With max_depth=None the full model is built, which requires the ontology
    to have finite depth.
    """
    tables = build_closures(ontology)
    if max_depth is None:
        d = depth(ontology)
        if d.is_infinite:
            raise ValueError("infinite-depth ontology requires an explicit max_depth")
        max_depth = d.value
    saturated = saturate(ontology, data, tables)
    inds = sorted(saturated.individuals)
    model = CanonicalModel(inds)
    concepts_at = satisfied_concepts(tables, saturated)

    # Saturated individual part: cases A(u) for u individual and P(u,v) (i).
    for pred, a in saturated.unary_facts:
        model.add_unary(pred, model.individuals[a])
    for pred, a, b in saturated.binary_facts:
        model.add_binary(pred, model.individuals[a], model.individuals[b])

    word_list = words(ontology, tables, max_length=max_depth) if max_depth else []

    # Unary facts on a null ending in r: concepts implied by an incoming r-edge.
    null_concepts: dict[Role, list[str]] = {}
    edge_preds: dict[Role, list[tuple[str, bool]]] = {}
    for r in tables.roles:
        null_concepts[r] = sorted(
            c.name
            for c in tables.sups_of_concept(Exists(r.inv))
            if isinstance(c, ConceptName)
        )
        # (pred, flipped): edge u -r-> u.r yields pred(u, u.r) or pred(u.r, u)
        edge_preds[r] = sorted(
            (s.name, s.inverse) for s in tables.sups_of_role(r)
        )

    reflexive_names = sorted(
        {r.name for r in tables.reflexive_roles if not r.inverse}
    )

    new_nulls: list[ChaseElement] = []
    for a in inds:
        root = model.individuals[a]
        have = concepts_at[a]
        for w in word_list:
            if Exists(w[0]) not in have:
                continue
            e = ChaseElement(a, w)
            model.add_element(e)
            new_nulls.append(e)

    for e in new_nulls:
        r = e.last
        for c in null_concepts.get(r, ()):
            model.add_unary(c, e)
        parent = ChaseElement(e.root, e.word[:-1]) if len(e.word) > 1 else model.individuals[e.root]
        for pred, flipped in edge_preds.get(r, ()):
            if flipped:
                model.add_binary(pred, e, parent)
            else:
                model.add_binary(pred, parent, e)

    # Case (ii): reflexive roles loop on every element, nulls included.
    for pred in reflexive_names:
        for e in model.elements:
            model.add_binary(pred, e, e)

    return model


# ---------------------------------------------------------------------------
# Homomorphism search
# ---------------------------------------------------------------------------


def _hom_solutions(
    model: CanonicalModel,
    atoms: Iterable[Atom],
    var_candidates: Mapping[str, set[ChaseElement] | None],
) -> Iterator[dict[str, ChaseElement]]:
    """All homomorphisms from the atom set into the model.

    var_candidates maps each variable to an allowed element set, or None for
    "any element".  Deterministic search order: variables by decreasing atom
    degree, preferring those adjacent to already-assigned variables.
    """
    atoms = list(atoms)
    variables = sorted({v for a in atoms for v in a.args})
    if not variables:
        yield {}
        return

    unary_atoms: dict[str, list[str]] = {v: [] for v in variables}
    loop_atoms: dict[str, list[str]] = {v: [] for v in variables}
    binary: list[tuple[str, str, str]] = []  # (pred, u, v) with u != v
    for a in atoms:
        if a.arity == 1:
            unary_atoms[a.args[0]].append(a.pred)
        elif a.args[0] == a.args[1]:
            loop_atoms[a.args[0]].append(a.pred)
        else:
            binary.append((a.pred, a.args[0], a.args[1]))

    def base_candidates(v: str) -> set[ChaseElement]:
        cand = var_candidates.get(v)
        cand = set(model.elements) if cand is None else set(cand)
        for pred in unary_atoms[v]:
            cand &= model.unary.get(pred, set())
        for pred in loop_atoms[v]:
            cand = {e for e in cand if model.binary_holds(pred, e, e)}
        for pred, x, y in binary:
            if x == v:
                cand &= set(model.out.get(pred, {}))
            if y == v:
                cand &= set(model.inc.get(pred, {}))
        return cand

    candidates = {v: base_candidates(v) for v in variables}
    if any(not c for c in candidates.values()):
        return

    degree = {v: 0 for v in variables}
    for _pred, x, y in binary:
        degree[x] += 1
        degree[y] += 1

    assigned: dict[str, ChaseElement] = {}
    remaining = set(variables)

    def next_var() -> str:
        linked = [
            v
            for v in remaining
            if any(
                (x == v and y in assigned) or (y == v and x in assigned)
                for _p, x, y in binary
            )
        ]
        pool = linked or list(remaining)
        return min(pool, key=lambda v: (len(candidates[v]), -degree[v], v))

    def narrowed(v: str) -> set[ChaseElement]:
        """Candidates for v consistent with every assigned binary neighbor."""
        cand = candidates[v]
        for pred, x, y in binary:
            if x == v and y in assigned:
                cand = cand & model.predecessors(pred, assigned[y])
            elif y == v and x in assigned:
                cand = cand & model.successors(pred, assigned[x])
        return cand

    def search() -> Iterator[dict[str, ChaseElement]]:
        if not remaining:
            yield dict(assigned)
            return
        v = next_var()
        remaining.discard(v)
        for e in sorted(narrowed(v), key=str):
            assigned[v] = e
            yield from search()
            del assigned[v]
        remaining.add(v)

    yield from search()


def hom_depth_bound(ontology: Ontology, data: DataInstance, cq: ConjunctiveQuery) -> int:
    """Chase truncation depth that decides entailment of the CQ.

    Every model edge changes depth by at most one, so any homomorphism can
    be rearranged to keep each variable v within depth shift + ecc(v), where
    ecc(v) is the eccentricity in the query's Gaifman graph and shift the
    longest shortest word realised over this data: a query path running
    through a variable mapped to an individual bounds the depth from that
    individual directly (edges leave an anonymous tree only at its root),
    and a piece whose topmost null has no neighbour at the parent sits in
    the uniform subtree determined by the null's last letter, so it can be
    shifted up to hang below a null at the end of a shortest word realising
    that letter.  A variable carrying a unary atom whose predicate never
    holds at a null is pinned to the individuals, capping nearby variables
    by their distance to it.  The full (finite) ontology depth always
    suffices, so it caps the bound.
    """
    onto = normalize(ontology)
    tables = build_closures(onto)
    graph = build_role_graph(onto, tables)
    saturated = saturate(onto, data, tables)
    satisfied = satisfied_concepts(tables, saturated)
    shortest: dict[Role, int] = {
        r: 1
        for r in graph.nodes
        if any(Exists(r) in sats for sats in satisfied.values())
    }
    frontier = list(shortest)
    while frontier:
        nxt = []
        for r in frontier:
            for s in graph.successors(r):
                if s not in shortest:
                    shortest[s] = shortest[r] + 1
                    nxt.append(s)
        frontier = nxt
    shift = max(shortest.values(), default=0)
    if not shift:
        return 0

    adjacent: dict[str, set[str]] = {v: set() for v in cq.variables}
    for a in cq.atoms:
        if a.arity == 2 and a.args[0] != a.args[1]:
            adjacent[a.args[0]].add(a.args[1])
            adjacent[a.args[1]].add(a.args[0])

    def distances(v: str) -> dict[str, int]:
        dist = {v: 0}
        frontier = [v]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adjacent[u] - dist.keys():
                    dist[w] = dist[u] + 1
                    nxt.append(w)
            frontier = nxt
        return dist

    per_var = {
        v: shift + max(distances(v).values()) for v in cq.variables
    }
    null_unary = {
        c.name
        for r in graph.nodes
        for c in tables.sups_of_concept(Exists(r.inv))
        if isinstance(c, ConceptName)
    }
    pinned = {
        a.args[0]
        for a in cq.atoms
        if a.arity == 1 and a.pred not in null_unary
    }
    for m in pinned:
        for u, d in distances(m).items():
            per_var[u] = min(per_var[u], d)
    bound = max(per_var.values(), default=0)
    d = depth(onto, tables)
    if not d.is_infinite:
        bound = min(bound, d.value)
    return bound


def certain_answers(
    ontology: Ontology,
    cq: ConjunctiveQuery,
    data: DataInstance,
) -> frozenset[tuple[str, ...]]:
    """All certain answers of the CQ over the given instance.

    For an inconsistent instance every tuple of individuals is certain.
    """
    consistency = check_consistency(ontology, data)
    inds = sorted(data.individuals)
    if not consistency:
        if cq.is_boolean:
            return frozenset({()})
        return frozenset(itertools.product(inds, repeat=len(cq.answer_vars)))

    model = build_chase(
        ontology, data, max_depth=hom_depth_bound(ontology, data, cq)
    )

    ind_elems = set(model.individuals.values())
    var_candidates: dict[str, set[ChaseElement] | None] = {
        v: (ind_elems if v in cq.answer_vars else None) for v in cq.variables
    }
    answers: set[tuple[str, ...]] = set()
    for h in _hom_solutions(model, cq.atoms, var_candidates):
        answers.add(tuple(h[v].root for v in cq.answer_vars))
        if cq.is_boolean:
            break
    return frozenset(answers)


def complete(ontology: Ontology, data: DataInstance) -> DataInstance:
    """The complete instance: data closed under all entailed ground facts.

    The ontology is normalized first, so the closure includes the guard
    concepts that complete-regime rewritings test for.  Raises
    InconsistentInstance when ontology + data are contradictory.
    """
    onto = normalize(ontology)
    res: ConsistencyResult = check_consistency(onto, data)
    if not res:
        raise InconsistentInstance(res.witness or "unsatisfiable instance")
    return saturate(onto, data, build_closures(onto))


# ---------------------------------------------------------------------------
# Tree witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeWitness:
    """A pair (roots, inner) of variable sets foldable into an anonymous tree.

    `inner` is a connected set of existential variables, `roots` its outside
    neighborhood; `atoms` are the query atoms touching `inner`; `roles` lists
    every role r such that the witness subquery maps homomorphically into the
    canonical tree spawned by an r-successor, with all root variables at the
    tree's origin.
    """

    roots: frozenset[str]
    inner: frozenset[str]
    atoms: frozenset[Atom]
    roles: tuple[Role, ...]


def tree_witnesses(ontology: Ontology, cq: ConjunctiveQuery) -> list[TreeWitness]:
    """Enumerate all tree witnesses of the query, with their generating roles."""
    onto = normalize(ontology)
    tables = build_closures(onto)
    existential = sorted(cq.existential_vars)
    if not existential:
        return []

    neighbors: dict[str, set[str]] = {v: set() for v in cq.variables}
    for a in cq.atoms:
        if a.arity == 2 and a.args[0] != a.args[1]:
            u, v = a.args
            neighbors[u].add(v)
            neighbors[v].add(u)

    def connected(sub: frozenset[str]) -> bool:
        sub_set = set(sub)
        start = next(iter(sub))
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in neighbors[u] & sub_set - seen:
                seen.add(w)
                stack.append(w)
        return seen == sub_set

    chase_cache: dict[tuple[Role, int], CanonicalModel] = {}

    def generating_roles(
        roots: frozenset[str], inner: frozenset[str], atoms: frozenset[Atom]
    ) -> list[Role]:
        out = []
        for r in sorted(tables.roles, key=lambda r: (r.name, r.inverse)):
            if tables.is_reflexive(r):
                # A reflexive role keeps its origin in the individual part;
                # folding into it never leaves the root, so no witness arises.
                continue
            key = (r, len(inner))
            if key not in chase_cache:
                guard = onto.guard_name(r)
                seed = DataInstance()
                seed.add(Atom(guard, ("w",)))
                chase_cache[key] = build_chase(onto, seed, max_depth=len(inner))
            model = chase_cache[key]
            root_elem = model.individuals["w"]
            subtree = {
                e for e in model.elements if e.word and e.word[0] == r
            }
            if not subtree:
                continue
            var_candidates: dict[str, set[ChaseElement] | None] = {}
            for v in roots:
                var_candidates[v] = {root_elem}
            for v in inner:
                var_candidates[v] = subtree
            if any(True for _ in _hom_solutions(model, atoms, var_candidates)):
                out.append(r)
        return out

    witnesses: list[TreeWitness] = []
    for size in range(1, len(existential) + 1):
        for combo in itertools.combinations(existential, size):
            inner = frozenset(combo)
            if not connected(inner):
                continue
            roots = frozenset(
                w for v in inner for w in neighbors[v] if w not in inner
            )
            atoms = frozenset(
                a for a in cq.atoms if any(v in inner for v in a.args)
            )
            roles = generating_roles(roots, inner, atoms)
            if roles:
                witnesses.append(TreeWitness(roots, inner, atoms, tuple(roles)))
    return witnesses
