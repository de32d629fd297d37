"""Query-shape analysis: Gaifman graphs, tree decompositions, splitting plans.

A CQ's Gaifman graph has the query variables as vertices and an edge {u, v}
for every binary atom P(u,v) with u != v (self-loops are not edges).  The
decomposition machinery feeds the divide-and-conquer rewriters: a balanced
recursive split of a tree decomposition, and the centroid of a tree-shaped
query's Gaifman tree.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
from networkx.algorithms.approximation import treewidth_min_fill_in

from .core_syntax import Atom, ConjunctiveQuery

_NATURAL_RE = re.compile(r"(\d+)")


def var_order_key(v: str) -> tuple:
    """Natural sort key so x2 < x10; the canonical variable order everywhere."""
    return tuple(int(t) if t.isdigit() else t for t in _NATURAL_RE.split(v))


def sort_vars(vs: Iterable[str]) -> list[str]:
    return sorted(vs, key=var_order_key)


def gaifman_graph(cq: ConjunctiveQuery) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(cq.variables)
    for a in cq.atoms:
        if a.arity == 2 and a.args[0] != a.args[1]:
            g.add_edge(a.args[0], a.args[1])
    return g


@dataclass(frozen=True)
class ShapeInfo:
    connected: bool
    tree_shaped: bool
    linear: bool
    leaves: int | None
    variables: int

    def __str__(self) -> str:
        shape = "linear" if self.linear else "tree-shaped" if self.tree_shaped else (
            "connected" if self.connected else "disconnected"
        )
        leaves = f", {self.leaves} leaves" if self.leaves is not None else ""
        return f"{shape} ({self.variables} variables{leaves})"


def classify(cq: ConjunctiveQuery) -> ShapeInfo:
    """Shape flags per the Gaifman graph; leaf count only for tree-shaped CQs."""
    g = gaifman_graph(cq)
    n = g.number_of_nodes()
    if n == 0:
        raise ValueError("empty query")
    connected = nx.is_connected(g)
    tree = connected and g.number_of_edges() == n - 1
    leaves = None
    if tree:
        leaves = sum(1 for v in g if g.degree(v) <= 1) if n > 1 else 1
    return ShapeInfo(connected, tree, tree and leaves is not None and leaves <= 2, leaves, n)


# ---------------------------------------------------------------------------
# Tree decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeDecomposition:
    """A tree over node ids with a bag of variables per node."""

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    bags: dict[int, frozenset[str]]

    @property
    def width(self) -> int:
        return max(len(b) for b in self.bags.values()) - 1

    def tree(self) -> nx.Graph:
        t = nx.Graph()
        t.add_nodes_from(self.nodes)
        t.add_edges_from(self.edges)
        return t

    def neighbors(self, node: int) -> list[int]:
        out = [b for a, b in self.edges if a == node]
        out += [a for a, b in self.edges if b == node]
        return sorted(out)

    def validate(self, cq: ConjunctiveQuery) -> None:
        """Check the three decomposition conditions; raise ValueError if broken."""
        t = self.tree()
        if len(self.nodes) and not nx.is_tree(t):
            raise ValueError("decomposition graph is not a tree")
        covered = set().union(*self.bags.values()) if self.bags else set()
        if covered != set(cq.variables):
            raise ValueError("bags do not cover exactly the query variables")
        for a in cq.atoms:
            if a.arity == 2 and not any(set(a.args) <= bag for bag in self.bags.values()):
                raise ValueError(f"no bag covers atom {a}")
        for v in cq.variables:
            holding = [n for n in self.nodes if v in self.bags[n]]
            if not nx.is_connected(t.subgraph(holding)):
                raise ValueError(f"bags containing {v} are not connected")


class WidthNotAchieved(ValueError):
    def __init__(self, target: int, achieved: int):
        self.target, self.achieved = target, achieved
        super().__init__(f"requested width {target}, achieved {achieved}")


def tree_decompose(cq: ConjunctiveQuery, target_width: int | None = None) -> TreeDecomposition:
    """A valid tree decomposition of the query's Gaifman graph.

    Tree-shaped queries get the canonical width-1 decomposition with one bag
    per Gaifman edge.  Otherwise a min-fill heuristic is used, replaced by an
    exact subset-DP search when the query has at most 12 variables.
    """
    g = gaifman_graph(cq)
    if not nx.is_connected(g):
        raise ValueError("tree_decompose requires a connected query")

    shape = classify(cq)
    if shape.tree_shaped:
        decomp = _tree_shaped_decomposition(g)
    elif g.number_of_nodes() <= 12:
        order = _exact_elimination_order(g)
        decomp = _decomposition_from_elimination(g, order)
    else:
        _w, junction = treewidth_min_fill_in(g)
        decomp = _from_junction_tree(junction)

    decomp.validate(cq)
    if target_width is not None and decomp.width > target_width:
        raise WidthNotAchieved(target_width, decomp.width)
    return decomp


def _tree_shaped_decomposition(g: nx.Graph) -> TreeDecomposition:
    vs = sort_vars(g.nodes)
    if len(vs) == 1:
        return TreeDecomposition((0,), (), {0: frozenset(vs)})
    root = vs[0]
    parent = {root: None}
    order = [root]
    for u, v in nx.bfs_edges(g, root, sort_neighbors=sort_vars):
        parent[v] = u
        order.append(v)
    node_of: dict[str, int] = {}
    bags: dict[int, frozenset[str]] = {}
    edges: list[tuple[int, int]] = []
    anchor: int | None = None  # node for the first child of the root
    for v in order[1:]:
        nid = len(bags)
        node_of[v] = nid
        bags[nid] = frozenset({v, parent[v]})
        p = parent[v]
        if p == root:
            if anchor is None:
                anchor = nid
            else:
                edges.append((anchor, nid))
        else:
            edges.append((node_of[p], nid))
    return TreeDecomposition(tuple(bags), tuple(edges), bags)


def _from_junction_tree(junction: nx.Graph) -> TreeDecomposition:
    nodes = sorted(junction.nodes, key=lambda b: sort_vars(b))
    index = {b: i for i, b in enumerate(nodes)}
    bags = {i: frozenset(b) for b, i in index.items()}
    edges = tuple(sorted((min(index[a], index[b]), max(index[a], index[b])) for a, b in junction.edges))
    return TreeDecomposition(tuple(range(len(nodes))), edges, bags)


def _exact_elimination_order(g: nx.Graph) -> list[str]:
    """Optimal elimination order by DP over vertex subsets (n <= 12)."""
    vs = sort_vars(g.nodes)
    n = len(vs)
    idx = {v: i for i, v in enumerate(vs)}
    adj = [0] * n
    for u, v in g.edges:
        adj[idx[u]] |= 1 << idx[v]
        adj[idx[v]] |= 1 << idx[u]

    def back_degree(eliminated: int, v: int) -> int:
        """Neighbors of v outside `eliminated` reachable through eliminated vertices."""
        seen = 1 << v
        stack = [v]
        out = 0
        while stack:
            u = stack.pop()
            frontier = adj[u] & ~seen
            seen |= frontier
            rest = frontier
            while rest:
                w = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                if (eliminated >> w) & 1:
                    stack.append(w)
                else:
                    out |= 1 << w
        return bin(out).count("1")

    best = {0: 0}
    choice: dict[int, int] = {}
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            s = 0
            for v in subset:
                s |= 1 << v
            val, pick = None, None
            for v in subset:
                prev = s & ~(1 << v)
                cand = max(best[prev], back_degree(prev, v))
                if val is None or cand < val:
                    val, pick = cand, v
            best[s] = val
            choice[s] = pick
    order_idx: list[int] = []
    s = (1 << n) - 1
    while s:
        v = choice[s]
        order_idx.append(v)
        s &= ~(1 << v)
    order_idx.reverse()  # first eliminated first
    return [vs[i] for i in order_idx]


def _decomposition_from_elimination(g: nx.Graph, order: list[str]) -> TreeDecomposition:
    work = g.copy()
    bags: dict[int, frozenset[str]] = {}
    eliminated_at: dict[str, int] = {}
    edges: list[tuple[int, int]] = []
    for i, v in enumerate(order):
        nbrs = set(work.neighbors(v))
        bags[i] = frozenset({v} | nbrs)
        eliminated_at[v] = i
        work.add_edges_from((a, b) for a in nbrs for b in nbrs if a != b)
        work.remove_node(v)
    for i, v in enumerate(order):
        later = [eliminated_at[u] for u in bags[i] if u != v]
        if later:
            edges.append((i, min(later)))
    return TreeDecomposition(tuple(bags), tuple(edges), bags)


# ---------------------------------------------------------------------------
# Recursive splitting of a decomposition
# ---------------------------------------------------------------------------


Subtree = frozenset  # of decomposition node ids


@dataclass
class SubtreePlan:
    """Balanced recursive split of a tree decomposition.

    Each subtree D (a connected node set with at most two boundary nodes) is
    assigned a splitter node sigma(D); removing it yields the child subtrees.
    The boundary variables of D are those shared between a bag of D and an
    adjacent bag outside D.
    """

    root: Subtree
    children: dict[Subtree, tuple[Subtree, ...]]
    splitter: dict[Subtree, int]
    boundary: dict[Subtree, frozenset[str]]
    subquery: dict[Subtree, frozenset[Atom]] = field(default_factory=dict)
    answer: dict[Subtree, tuple[str, ...]] = field(default_factory=dict)

    @property
    def subtrees(self) -> list[Subtree]:
        return list(self.splitter)


def split_plan(
    decomp: TreeDecomposition,
    answer_vars: Sequence[str],
    cq: ConjunctiveQuery | None = None,
) -> SubtreePlan:
    """Recursively split the whole decomposition tree into balanced subtrees.

    Splitter choice per subtree D of size n: a node t of D is valid when every
    component of D minus t has at most 2 boundary nodes and, if D itself has
    fewer than 2 boundary nodes, size at most n/2; when D has 2 boundary
    nodes, components of boundary degree 2 must have size at most n/2 and at
    most one component may be larger, with boundary degree at most 1 and size
    strictly below n-1.  Among valid nodes the one minimizing (largest
    component size, node id) is chosen.
    """
    tree = decomp.tree()
    all_nodes = Subtree(decomp.nodes)

    def boundary_nodes(d: Subtree) -> set[int]:
        return {t for t in d if any(u not in d for u in tree.neighbors(t))}

    def boundary_vars(d: Subtree) -> frozenset[str]:
        out: set[str] = set()
        for t in d:
            for u in tree.neighbors(t):
                if u not in d:
                    out |= decomp.bags[t] & decomp.bags[u]
        return frozenset(out)

    def components_without(d: Subtree, t: int) -> list[Subtree]:
        sub = tree.subgraph(d - {t})
        return [Subtree(c) for c in nx.connected_components(sub)]

    plan = SubtreePlan(all_nodes, {}, {}, {})

    def process(d: Subtree) -> None:
        plan.boundary[d] = boundary_vars(d)
        if len(d) == 1:
            (node,) = d
            plan.splitter[d] = node
            plan.children[d] = ()
            return
        n = len(d)
        deg = len(boundary_nodes(d))
        best: tuple[tuple[int, int], int, list[Subtree]] | None = None
        for t in sorted(d):
            comps = components_without(d, t)
            degs = [len(boundary_nodes(c)) for c in comps]
            if any(x > 2 for x in degs):
                continue
            if deg <= 1:
                if any(2 * len(c) > n for c in comps):
                    continue
            else:
                big = [
                    (c, dg) for c, dg in zip(comps, degs) if 2 * len(c) > n
                ]
                if len(big) > 1:
                    continue
                if big and (big[0][1] > 1 or len(big[0][0]) >= n - 1):
                    continue
                if any(dg == 2 and 2 * len(c) > n for c, dg in zip(comps, degs)):
                    continue
            key = (max(len(c) for c in comps), t)
            if best is None or key < best[0]:
                best = (key, t, comps)
        if best is None:
            raise AssertionError(f"no valid splitter for subtree of size {n}")
        _key, t, comps = best
        plan.splitter[d] = t
        ordered = tuple(sorted(comps, key=lambda c: sorted(c)))
        plan.children[d] = ordered
        for c in ordered:
            process(c)

    process(all_nodes)

    if cq is not None:
        answers = [v for v in answer_vars]

        def fill(d: Subtree) -> frozenset[Atom]:
            bag = decomp.bags[plan.splitter[d]]
            atoms = {a for a in cq.atoms if set(a.args) <= bag}
            for c in plan.children[d]:
                atoms |= fill(c)
            qd = frozenset(atoms)
            plan.subquery[d] = qd
            qd_vars = {v for a in qd for v in a.args}
            plan.answer[d] = tuple(v for v in answers if v in qd_vars)
            return qd

        fill(all_nodes)
    return plan


# ---------------------------------------------------------------------------
# Centroid and slices of tree-shaped queries
# ---------------------------------------------------------------------------


def centroid(cq: ConjunctiveQuery) -> str:
    """The splitting variable of a tree-shaped query's Gaifman tree.

    Minimizes the largest component after removal (guaranteeing components of
    at most ceil(n/2) vertices); ties prefer existential variables, then the
    canonical variable order.
    """
    g = gaifman_graph(cq)
    vs = sort_vars(g.nodes)
    if len(vs) == 1:
        return vs[0]
    existential = cq.existential_vars

    def key(v: str) -> tuple:
        comps = list(nx.connected_components(nx.restricted_view(g, [v], [])))
        worst = max((len(c) for c in comps), default=0)
        return (worst, v not in existential, var_order_key(v))

    return min(vs, key=key)


def slices(cq: ConjunctiveQuery, root: str) -> list[frozenset[str]]:
    """Variables grouped by distance from the root (slice index = distance)."""
    if root not in cq.variables:
        raise ValueError(f"root {root} is not a query variable")
    g = gaifman_graph(cq)
    dist = nx.single_source_shortest_path_length(g, root)
    if set(dist) != set(g.nodes):
        raise ValueError("query must be connected")
    out: list[set[str]] = [set() for _ in range(max(dist.values()) + 1)]
    for v, d in dist.items():
        out[d].add(v)
    for a in cq.atoms:
        if a.arity == 2 and a.args[0] != a.args[1]:
            if abs(dist[a.args[0]] - dist[a.args[1]]) != 1:
                raise ValueError(f"atom {a} does not straddle consecutive slices")
    return [frozenset(s) for s in out]


def atom_components(atoms: Iterable[Atom]) -> list[frozenset[Atom]]:
    """Connected components of an atom set under shared variables."""
    atoms = list(atoms)
    g = nx.Graph()
    for i, a in enumerate(atoms):
        g.add_node(i)
        for j in range(i):
            if set(atoms[j].args) & set(a.args):
                g.add_edge(i, j)
    return [
        frozenset(atoms[i] for i in comp)
        for comp in sorted(nx.connected_components(g), key=lambda c: sorted(c))
    ]
