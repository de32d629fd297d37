"""Generators for benchmark OMQ families, paired with brute-force oracles.

Each family encodes a classical combinatorial problem as an ontology-mediated
query: the OMQ is certain over the generated data instance exactly when the
combinatorial instance is a yes-instance.  The paired ``has_*``/``is_*``
functions decide that ground truth independently by brute force, so generated
instances double as end-to-end tests of the rewriting and evaluation pipeline.

Families:

- Erdos-Renyi style random data and chain-shaped queries for benchmarks;
- hitting set: certain iff the hypergraph has a hitting set of size k;
- multicolored clique: certain iff one vertex per part forms a clique;
- CNF satisfiability over a fixed infinite-depth ontology, both as a Boolean
  star query over ``{A(a)}`` and as a unary query over full binary trees
  whose leaf labels select the active clauses;
- membership of a word in the hardest LOGCFL language, as a chain-shaped
  Boolean query over ``{A(a)}``.
"""

from __future__ import annotations

import itertools
import random
from typing import Collection, Iterable, Sequence

from .core_syntax import (
    Atom,
    ConceptName,
    ConjunctiveQuery,
    DataInstance,
    Exists,
    Ontology,
    Role,
    SubClass,
    SubRole,
)

__all__ = [
    "gen_er_data",
    "gen_sequence_query",
    "gen_hitting_set_omq",
    "has_hitting_set",
    "gen_clique_omq",
    "has_multicolored_clique",
    "sat_ontology",
    "gen_sat_omq",
    "gen_tree_instance_and_query",
    "is_satisfiable",
    "logcfl_ontology",
    "gen_logcfl_query",
    "in_hardest_logcfl",
]


def _concept(name: str) -> ConceptName:
    return ConceptName(name)


def _exists(name: str, inverse: bool = False) -> Exists:
    return Exists(Role(name, inverse=inverse))


# ---------------------------------------------------------------------------
# Random data and chain queries
# ---------------------------------------------------------------------------


def gen_er_data(num_vertices: int, p: float, q: float, seed: int) -> DataInstance:
    """A random instance over roles R and concepts A, B.

    Every ordered pair of distinct vertices carries an R-edge independently
    with probability p; every vertex carries A and, independently, B with
    probability q each.  No S-edges are generated.  The draw order (edges in
    row-major vertex order, then A and B per vertex) is fixed, so the output
    is fully determined by the seed.
    """
    if num_vertices < 0:
        raise ValueError("num_vertices must be nonnegative")
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = random.Random(seed)
    names = [f"v{i}" for i in range(num_vertices)]
    data = DataInstance()
    for u in range(num_vertices):
        for v in range(num_vertices):
            if u != v and rng.random() < p:
                data.add(Atom("R", (names[u], names[v])))
    for u in range(num_vertices):
        if rng.random() < q:
            data.add(Atom("A", (names[u],)))
        if rng.random() < q:
            data.add(Atom("B", (names[u],)))
    return data


def gen_sequence_query(word: str, n: int) -> ConjunctiveQuery:
    """The chain query over the first n letters of a role-name sequence.

    ``gen_sequence_query("RSR", 2)`` is ``q(x0, x2) :- R(x0, x1), S(x1, x2).``
    """
    if not 1 <= n <= len(word):
        raise ValueError(f"n must lie in 1..{len(word)}")
    atoms = {
        Atom(word[i], (f"x{i}", f"x{i + 1}")) for i in range(n)
    }
    return ConjunctiveQuery(frozenset(atoms), ("x0", f"x{n}"))


# ---------------------------------------------------------------------------
# Hitting set
# ---------------------------------------------------------------------------


def _check_hypergraph(num_vertices: int, edges: Sequence[Collection[int]]) -> list[set[int]]:
    if num_vertices < 1:
        raise ValueError("num_vertices must be positive")
    edge_sets = []
    for e in edges:
        es = set(e)
        if not es:
            raise ValueError("edges must be nonempty")
        if not all(isinstance(v, int) and 1 <= v <= num_vertices for v in es):
            raise ValueError(f"edge {sorted(es)} mentions a vertex outside 1..{num_vertices}")
        edge_sets.append(es)
    return edge_sets


def has_hitting_set(num_vertices: int, edges: Sequence[Collection[int]], k: int) -> bool:
    """Whether some k-element vertex subset meets every edge (brute force)."""
    edge_sets = _check_hypergraph(num_vertices, edges)
    return any(
        all(es & set(combo) for es in edge_sets)
        for combo in itertools.combinations(range(1, num_vertices + 1), k)
    )


def gen_hitting_set_omq(
    num_vertices: int, edges: Sequence[Collection[int]], k: int
) -> tuple[Ontology, ConjunctiveQuery, DataInstance]:
    """An OMQ certain iff the hypergraph has a hitting set of size k.

    Vertices are 1..num_vertices; each edge is a nonempty set of vertices;
    k >= 1.  The ontology grows chains that pick k vertices in increasing
    order, the Boolean star query checks one ray per edge, and the data is a
    single seed individual.
    """
    edge_sets = _check_hypergraph(num_vertices, edges)
    if k < 1:
        raise ValueError("k must be positive")
    if not edge_sets:
        raise ValueError("at least one edge is required")
    n, m = num_vertices, len(edge_sets)

    axioms = []
    # Vertex-picking chains: a V-point at level l-1 acquires, for every
    # larger vertex i2, a predecessor carrying V at level l.
    for level in range(1, k + 1):
        for i2 in range(1, n + 1):
            picker = f"u{i2}_{level}"
            axioms.append(SubRole(Role(picker), Role("P", inverse=True)))
            axioms.append(SubClass(_exists(picker, inverse=True), _concept(f"V{i2}_{level}")))
            for i in range(i2):
                axioms.append(SubClass(_concept(f"V{i}_{level - 1}"), _exists(picker)))
    # Edge membership: picking vertex i at level l covers every edge j with i in it.
    for level in range(1, k + 1):
        for j, es in enumerate(edge_sets, start=1):
            for i in sorted(es):
                axioms.append(SubClass(_concept(f"V{i}_{level}"), _concept(f"E{j}_{level}")))
    # Countdown chains: an E-point at level l grows a successor at level l-1.
    for level in range(1, k + 1):
        for j in range(1, m + 1):
            chain = f"h{j}_{level}"
            axioms.append(SubClass(_concept(f"E{j}_{level}"), _exists(chain)))
            axioms.append(SubRole(Role(chain), Role("P")))
            axioms.append(SubClass(_exists(chain, inverse=True), _concept(f"E{j}_{level - 1}")))
    ontology = Ontology(tuple(axioms))

    atoms = set()
    for j in range(1, m + 1):
        for level in range(k, 0, -1):
            src = "y" if level == k else f"z{j}_{level}"
            atoms.add(Atom("P", (src, f"z{j}_{level - 1}")))
        atoms.add(Atom(f"E{j}_0", (f"z{j}_0",)))
    cq = ConjunctiveQuery(frozenset(atoms), ())

    data = DataInstance()
    data.add(Atom("V0_0", ("a",)))
    return ontology, cq, data


# ---------------------------------------------------------------------------
# Multicolored clique
# ---------------------------------------------------------------------------


def _check_partition(
    num_vertices: int, edges: Iterable[Collection[int]], partition: Sequence[Collection[int]]
) -> tuple[list[list[int]], set[frozenset[int]]]:
    if num_vertices < 1:
        raise ValueError("num_vertices must be positive")
    parts = [sorted(set(part)) for part in partition]
    flat = [v for part in parts for v in part]
    if sorted(flat) != list(range(1, num_vertices + 1)):
        raise ValueError("partition must split 1..num_vertices into disjoint parts")
    edge_set = set()
    for e in edges:
        es = frozenset(e)
        if len(es) != 2 or not all(1 <= v <= num_vertices for v in es):
            raise ValueError(f"edge {sorted(es)} is not a pair of vertices in 1..{num_vertices}")
        edge_set.add(es)
    return parts, edge_set


def has_multicolored_clique(
    num_vertices: int, edges: Iterable[Collection[int]], partition: Sequence[Collection[int]]
) -> bool:
    """Whether one vertex per part can be chosen pairwise adjacent (brute force)."""
    parts, edge_set = _check_partition(num_vertices, edges, partition)
    return any(
        all(frozenset(pair) in edge_set for pair in itertools.combinations(combo, 2))
        for combo in itertools.product(*parts)
    )


def gen_clique_omq(
    num_vertices: int, edges: Iterable[Collection[int]], partition: Sequence[Collection[int]]
) -> tuple[Ontology, ConjunctiveQuery, DataInstance]:
    """An OMQ certain iff the partitioned graph has a multicolored clique.

    Vertices are 1..num_vertices, edges are unordered pairs, and the parts
    list the vertices available per color.  The ontology grows one chain of
    2*num_vertices slots per chosen vertex, part after part; each slot emits
    an upward U-edge, the two slots owned by the chosen vertex emit S-edges,
    and slots owned by neighbors of the chosen vertex emit Y-edges.  The
    Boolean query climbs from the end marker B with one chain per adjacent
    pair of parts, matching S-pairs against Y-pairs.
    """
    parts, edge_set = _check_partition(num_vertices, edges, partition)
    M = num_vertices
    p = len(parts)
    span = 2 * M

    def slot(j: int, k: int) -> str:
        return f"L{j}_{k}"

    axioms = []
    for j in parts[0]:
        axioms.append(SubClass(_concept("A"), _exists(slot(j, 1))))
    for j in range(1, M + 1):
        for k in range(1, span):
            axioms.append(SubClass(_exists(slot(j, k), inverse=True), _exists(slot(j, k + 1))))
    for i in range(p - 1):
        for j in parts[i]:
            for j2 in parts[i + 1]:
                axioms.append(SubClass(_exists(slot(j, span), inverse=True), _exists(slot(j2, 1))))
    for j in range(1, M + 1):
        for k in (2 * j - 1, 2 * j):
            axioms.append(SubRole(Role(slot(j, k)), Role("S", inverse=True)))
        for j2 in range(1, M + 1):
            if frozenset((j, j2)) in edge_set:
                for k in (2 * j2 - 1, 2 * j2):
                    axioms.append(SubRole(Role(slot(j, k)), Role("Y", inverse=True)))
        for k in range(1, span + 1):
            axioms.append(SubRole(Role(slot(j, k)), Role("U", inverse=True)))
    for j in parts[-1]:
        axioms.append(SubClass(_exists(slot(j, span), inverse=True), _concept("B")))
    axioms.append(SubClass(_concept("B"), _exists("Pad")))
    axioms.append(SubRole(Role("Pad"), Role("U")))
    axioms.append(SubRole(Role("Pad"), Role("U", inverse=True)))
    ontology = Ontology(tuple(axioms))

    atoms = {Atom("B", ("y",))}
    for i in range(1, p):
        seq = ["U"] * (span - 2) + (["Y", "Y"] + ["U"] * (span - 2)) * i + ["S", "S"]
        cur = "y"
        for t, pred in enumerate(seq):
            dst = f"z{i}" if t == len(seq) - 1 else f"c{i}_{t + 1}"
            atoms.add(Atom(pred, (cur, dst)))
            cur = dst
    cq = ConjunctiveQuery(frozenset(atoms), ())

    data = DataInstance()
    data.add(Atom("A", ("a",)))
    return ontology, cq, data


# ---------------------------------------------------------------------------
# CNF satisfiability
# ---------------------------------------------------------------------------


def _check_cnf(
    clauses: Sequence[Sequence[int]], num_vars: int | None, forbid_tautologies: bool
) -> tuple[list[tuple[int, ...]], int]:
    checked = []
    widest = 0
    for clause in clauses:
        lits = tuple(clause)
        if not all(isinstance(l, int) and l != 0 for l in lits):
            raise ValueError(f"clause {lits} must contain nonzero integer literals")
        if forbid_tautologies and any(-l in lits for l in lits):
            raise ValueError(f"clause {lits} contains complementary literals")
        widest = max(widest, max((abs(l) for l in lits), default=0))
        checked.append(lits)
    if num_vars is None:
        num_vars = widest
    elif num_vars < widest:
        raise ValueError(f"num_vars={num_vars} is below the widest literal {widest}")
    return checked, num_vars


def is_satisfiable(clauses: Sequence[Sequence[int]], num_vars: int | None = None) -> bool:
    """Truth-table satisfiability of a CNF given as lists of nonzero literals."""
    checked, k = _check_cnf(clauses, num_vars, forbid_tautologies=False)
    if not checked:
        return True
    return any(
        all(any((lit > 0) == bits[abs(lit) - 1] for lit in clause) for clause in checked)
        for bits in itertools.product((False, True), repeat=k)
    )


def sat_ontology() -> Ontology:
    """The fixed infinite-depth ontology behind the satisfiability families.

    Every A-point has two predecessors that are again A-points: one reached
    by flipping the current variable to false (role up, covering Pp and P0
    toward the A-point and carrying Bm) and one for true (role um, covering
    Pm and P0, carrying Bp).  Bm and Bp points emit one committed edge (Pm
    resp. Pp) to a B0-point, whose descendants absorb arbitrary suffixes
    through h0, which covers all three edge predicates.
    """
    axioms = []
    for branch, covered, marker in (("up", "Pp", "Bm"), ("um", "Pm", "Bp")):
        axioms.append(SubClass(_concept("A"), _exists(branch)))
        axioms.append(SubRole(Role(branch), Role(covered, inverse=True)))
        axioms.append(SubRole(Role(branch), Role("P0", inverse=True)))
        axioms.append(SubClass(_exists(branch, inverse=True), _concept(marker)))
        axioms.append(SubClass(_exists(branch, inverse=True), _concept("A")))
    for marker, commit, covered in (("Bm", "hm", "Pm"), ("Bp", "hp", "Pp")):
        axioms.append(SubClass(_concept(marker), _exists(commit)))
        axioms.append(SubRole(Role(commit), Role(covered)))
        axioms.append(SubClass(_exists(commit, inverse=True), _concept("B0")))
    axioms.append(SubClass(_concept("B0"), _exists("h0")))
    for covered in ("Pp", "Pm", "P0"):
        axioms.append(SubRole(Role("h0"), Role(covered)))
    axioms.append(SubClass(_exists("h0", inverse=True), _concept("B0")))
    return Ontology(tuple(axioms))


def _ray_pred(clause: tuple[int, ...], level: int) -> str:
    if level in clause:
        return "Pp"
    if -level in clause:
        return "Pm"
    return "P0"


def gen_sat_omq(
    clauses: Sequence[Sequence[int]], num_vars: int | None = None
) -> tuple[Ontology, ConjunctiveQuery, DataInstance]:
    """An OMQ certain iff the CNF is satisfiable.

    Literals are nonzero integers (sign = polarity, magnitude = variable
    index in 1..num_vars); clauses must not contain complementary literals.
    The Boolean star query walks one ray per clause down from a shared
    A-point; the data is a single seed individual.
    """
    checked, k = _check_cnf(clauses, num_vars, forbid_tautologies=True)
    atoms = {Atom("A", ("y",))}
    for j, clause in enumerate(checked, start=1):
        for level in range(k, 0, -1):
            src = "y" if level == k else f"z{j}_{level}"
            atoms.add(Atom(_ray_pred(clause, level), (src, f"z{j}_{level - 1}")))
        tip = "y" if k == 0 else f"z{j}_0"
        atoms.add(Atom("B0", (tip,)))
    cq = ConjunctiveQuery(frozenset(atoms), ())
    data = DataInstance()
    data.add(Atom("A", ("a",)))
    return sat_ontology(), cq, data


def gen_tree_instance_and_query(
    clauses: Sequence[Sequence[int]],
    alpha: Sequence[int],
    num_vars: int | None = None,
) -> tuple[ConjunctiveQuery, DataInstance]:
    """A unary query and tree instance deciding a leaf-masked CNF.

    The CNF must have m = 2**l clauses.  The instance is the full binary
    tree of depth l over Pm (left) and Pp (right) with A at the root and B0
    at leaf i iff alpha[i-1] is truthy; evaluated over ``sat_ontology()``,
    the query answers the root iff the CNF restricted to the clauses with
    alpha zero is satisfiable.  Rays for masked clauses escape into the data
    tree: the trailing bit edges of ray j spell j-1 in binary, most
    significant bit first, so the ray can end on leaf j exactly when that
    leaf carries B0.
    """
    checked, k = _check_cnf(clauses, num_vars, forbid_tautologies=True)
    m = len(checked)
    if m < 1 or m & (m - 1):
        raise ValueError("the number of clauses must be a power of two")
    if len(alpha) != m:
        raise ValueError("alpha must assign one bit per clause")
    ell = m.bit_length() - 1

    atoms = set()
    prev = "x"
    for level in range(1, k + 1):
        atoms.add(Atom("P0", (f"y{level}", prev)))
        prev = f"y{level}"
    top = prev
    for j, clause in enumerate(checked, start=1):
        for level in range(k, 0, -1):
            src = top if level == k else f"z{j}_{level}"
            atoms.add(Atom(_ray_pred(clause, level), (src, f"z{j}_{level - 1}")))
        cur = top if k == 0 else f"z{j}_0"
        for t in range(ell):
            bit = (j - 1) >> (ell - 1 - t) & 1
            nxt = f"w{j}_{t + 1}"
            atoms.add(Atom("Pp" if bit else "Pm", (cur, nxt)))
            cur = nxt
        atoms.add(Atom("B0", (cur,)))
    cq = ConjunctiveQuery(frozenset(atoms), ("x",))

    data = DataInstance()
    data.add(Atom("A", ("a",)))
    for depth_ in range(ell):
        for node in range(2**depth_):
            name = "a" + format(node, f"0{depth_}b") if depth_ else "a"
            data.add(Atom("Pm", (name, name + "0")))
            data.add(Atom("Pp", (name, name + "1")))
    for i in range(1, m + 1):
        if alpha[i - 1]:
            leaf = "a" + format(i - 1, f"0{ell}b") if ell else "a"
            data.add(Atom("B0", (leaf,)))
    return cq, data


# ---------------------------------------------------------------------------
# Hardest LOGCFL language
# ---------------------------------------------------------------------------

_SIGMA0 = ("a1", "b1", "a2", "b2")
_SYMBOL_NAMES = {"[": "lb", "]": "rb", "#": "hash", **{c: c for c in _SIGMA0}}
_MATCHING = {"b1": "a1", "b2": "a2"}


def _tokenize(word: str) -> list[str]:
    symbols = []
    i = 0
    while i < len(word):
        c = word[i]
        if c.isspace():
            i += 1
        elif c in "[]#":
            symbols.append(c)
            i += 1
        elif c in "ab" and i + 1 < len(word) and word[i + 1] in "12":
            symbols.append(word[i : i + 2])
            i += 2
        else:
            raise ValueError(f"unexpected character {c!r} at position {i}")
    return symbols


def _first_violation(symbols: Sequence[str]) -> int | None:
    """Index of the first symbol breaking block form, len(symbols) for a
    premature end, or None when the word is block-formed."""
    state = "start"  # start -> open (no content yet) -> content -> closed
    for i, c in enumerate(symbols):
        if state == "start" or state == "closed":
            if c != "[":
                return i
            state = "open"
        elif c == "[":
            return i
        elif c == "]":
            if state == "open":
                return i
            state = "closed"
        else:
            state = "content"
    return None if state == "closed" else len(symbols)


def _choices(symbols: Sequence[str]) -> list[list[tuple[str, ...]]]:
    """Per block, the candidate segments obtained by cutting its content at #."""
    blocks = []
    content: list[str] = []
    for c in symbols:
        if c == "[":
            content = []
        elif c == "]":
            choices = [[]]
            for s in content:
                if s == "#":
                    choices.append([])
                else:
                    choices[-1].append(s)
            blocks.append([tuple(choice) for choice in choices])
        else:
            content.append(c)
    return blocks


def in_hardest_logcfl(word: str) -> bool:
    """Membership of a word in the hardest LOGCFL language (brute force).

    The word must be a sequence of blocks ``[...]`` whose contents are cut
    into segments at each ``#``; it belongs to the language iff one segment
    per block can be chosen so that their concatenation is a balanced word
    over the bracket pairs a1/b1 and a2/b2.  Decided by dynamic programming
    over the set of reachable bracket stacks.
    """
    symbols = _tokenize(word)
    if _first_violation(symbols) is not None:
        return False
    stacks = {()}
    for choices in _choices(symbols):
        nxt = set()
        for stack in stacks:
            for choice in choices:
                cur: tuple[str, ...] | None = stack
                for c in choice:
                    if c in _MATCHING:
                        if cur and cur[-1] == _MATCHING[c]:
                            cur = cur[:-1]
                        else:
                            cur = None
                            break
                    else:
                        cur = cur + (c,)
                if cur is not None:
                    nxt.add(cur)
        stacks = nxt
        if not stacks:
            return False
    return () in stacks


def logcfl_ontology() -> Ontology:
    """The fixed infinite-depth ontology recognizing the hardest LOGCFL words.

    Each D-point grows, per bracket pair i, a two-step branch matching
    ``a_i ... b_i`` around a nested D-point, plus four block-navigation
    branches that open or close a block (Rlb/Srb pairs) or skip leading and
    trailing segments around an F-point, which in turn absorbs arbitrary
    single symbols.  The query-side error marker E holds nowhere.
    """
    axioms = [SubClass(_concept("A"), _concept("D"))]
    for i in ("1", "2"):
        down, nest = f"g{i}", f"h{i}"
        axioms.append(SubClass(_concept("D"), _exists(down)))
        axioms.append(SubRole(Role(down), Role(f"Ra{i}")))
        axioms.append(SubRole(Role(down), Role(f"Sb{i}", inverse=True)))
        axioms.append(SubClass(_exists(down, inverse=True), _exists(nest)))
        axioms.append(SubRole(Role(nest), Role(f"Sa{i}")))
        axioms.append(SubRole(Role(nest), Role(f"Rb{i}", inverse=True)))
        axioms.append(SubClass(_exists(nest, inverse=True), _concept("D")))
    # One-step branches: open a block ([ then [ back) or close one (] then ]).
    for branch, forward, backward in (("pl", "Rlb", "Slb"), ("pn", "Rrb", "Srb")):
        axioms.append(SubClass(_concept("D"), _exists(branch)))
        axioms.append(SubRole(Role(branch), Role(forward)))
        axioms.append(SubRole(Role(branch), Role(backward, inverse=True)))
    # Two-step branches: skip a leading "[...#" or a trailing "#...]".
    for branch, nest, fwd1, back1, fwd2, back2 in (
        ("pb", "qb", "Rlb", "Shash", "Slb", "Rhash"),
        ("pe", "qe", "Rhash", "Srb", "Shash", "Rrb"),
    ):
        axioms.append(SubClass(_concept("D"), _exists(branch)))
        axioms.append(SubRole(Role(branch), Role(fwd1)))
        axioms.append(SubRole(Role(branch), Role(back1, inverse=True)))
        axioms.append(SubClass(_exists(branch, inverse=True), _exists(nest)))
        axioms.append(SubRole(Role(nest), Role(fwd2)))
        axioms.append(SubRole(Role(nest), Role(back2, inverse=True)))
        axioms.append(SubClass(_exists(nest, inverse=True), _concept("F")))
    for sym in (*_SIGMA0, "#"):
        name = _SYMBOL_NAMES[sym]
        skip = f"f{name}"
        axioms.append(SubClass(_concept("F"), _exists(skip)))
        axioms.append(SubRole(Role(skip), Role(f"R{name}")))
        axioms.append(SubRole(Role(skip), Role(f"S{name}", inverse=True)))
    return Ontology(tuple(axioms))


def gen_logcfl_query(word: str) -> tuple[Ontology, ConjunctiveQuery]:
    """An OMQ over ``{A(a)}`` certain iff the word is in the hardest LOGCFL
    language.

    Each symbol c becomes a forward Rc-atom and a backward Sc-atom, so the
    chain traces a round trip through the canonical tree.  A word that is
    not block-formed is cut at its first violation and terminated with the
    never-satisfiable marker E.
    """
    symbols = _tokenize(word)
    violation = _first_violation(symbols)
    kept = len(symbols) if violation is None else violation
    atoms = {Atom("A", ("u0",))}
    for i in range(kept):
        name = _SYMBOL_NAMES[symbols[i]]
        atoms.add(Atom(f"R{name}", (f"u{i}", f"v{i}")))
        atoms.add(Atom(f"S{name}", (f"v{i}", f"u{i + 1}")))
    if violation is None:
        atoms.add(Atom("A", (f"u{len(symbols)}",)))
    else:
        atoms.add(Atom("E", (f"u{kept}",)))
    return logcfl_ontology(), ConjunctiveQuery(frozenset(atoms), ())
