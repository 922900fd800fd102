"""Congruence closure over cubes, free satisfiability, and class counting.

This is the engine behind satisfiability modulo *no* axioms: close the
equalities of a cube under congruence, check the disequalities, and read a
canonical model off the classes.  The theory layer reuses the closed form
for its own counting arguments (class sizes, chromatic bounds, quotients).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .logic import (
    SIGMA,
    App,
    Cube,
    Formula,
    Literal,
    Signature,
    Term,
    Var,
    subterms,
    term_text,
    to_dnf,
)
from .models import FiniteStructure, Interpretation, SatResult


class EffortExceeded(Exception):
    """An exact enumeration hit its configured cap."""


class UnionFind:
    """Disjoint sets over hashable items, union by rank with path compression."""

    def __init__(self) -> None:
        self.parent: dict = {}
        self.rank: dict = {}

    def add(self, x) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True

    def groups(self) -> dict:
        out: dict = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return out


@dataclass(frozen=True)
class ClosedCube:
    """A cube after congruence closure of its equalities.

    Classes are indexed densely; `s_edge` records where the unary symbol is
    forced to send a class (partial).  `consistent` is False when some
    disequality collapsed.
    """

    cube: Cube
    classes: tuple[tuple[Term, ...], ...]
    sort_of: tuple[str, ...]
    s_edge: dict[int, int]
    diseqs: frozenset[tuple[int, int]]
    consistent: bool
    _index: dict[Term, int]

    def class_of(self, t: Term) -> Optional[int]:
        return self._index.get(t)

    def classes_of_sort(self, sort: str) -> list[int]:
        return [i for i, s in enumerate(self.sort_of) if s == sort]

    def var_classes(self, sort: str) -> list[int]:
        out = []
        for i, members in enumerate(self.classes):
            if self.sort_of[i] == sort and any(isinstance(t, Var) for t in members):
                out.append(i)
        return out

    def diseq_adjacency(self, sort: str) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {i: set() for i in self.classes_of_sort(sort)}
        for a, b in self.diseqs:
            if self.sort_of[a] == sort:
                adj[a].add(b)
                adj[b].add(a)
        return adj


def close_cube(cube: Cube) -> ClosedCube:
    """Close the cube's equalities under congruence and collect class data."""
    terms: list[Term] = []
    seen: set[Term] = set()
    for lit in cube:
        for side in (lit.lhs, lit.rhs):
            for t in subterms(side):
                if t not in seen:
                    seen.add(t)
                    terms.append(t)
    uf = UnionFind()
    for t in terms:
        uf.add(t)
    apps = [t for t in terms if isinstance(t, App)]

    pending = [(lit.lhs, lit.rhs) for lit in cube if lit.positive]
    while pending:
        a, b = pending.pop()
        if not uf.union(a, b):
            continue
        for t1, t2 in itertools.combinations(apps, 2):
            if (
                t1.fn == t2.fn
                and uf.find(t1) != uf.find(t2)
                and uf.find(t1.arg) == uf.find(t2.arg)
            ):
                pending.append((t1, t2))

    groups = uf.groups()
    roots = sorted(groups, key=lambda r: min(term_text(t) for t in groups[r]))
    index_of_root = {r: i for i, r in enumerate(roots)}
    index = {t: index_of_root[uf.find(t)] for t in terms}
    classes = tuple(
        tuple(sorted(groups[r], key=term_text)) for r in roots
    )
    sort_of = tuple(cls[0].sort for cls in classes)

    s_edge: dict[int, int] = {}
    for t in apps:
        s_edge[index[t.arg]] = index[t]

    diseqs: set[tuple[int, int]] = set()
    consistent = True
    for lit in cube:
        if lit.positive:
            continue
        a, b = index[lit.lhs], index[lit.rhs]
        if a == b:
            consistent = False
        diseqs.add((min(a, b), max(a, b)))

    return ClosedCube(cube, classes, sort_of, s_edge, frozenset(diseqs), consistent, index)


def min_classes(cube: Cube, sort: str = SIGMA) -> int:
    """Classes of the cube's sort-`sort` variables after closing its equalities."""
    closed = close_cube(cube)
    return len(closed.var_classes(sort))


# ---------------------------------------------------------------------------
# graph coloring (exact, tiny instances)


def color_with(nodes: list[int], adj: dict[int, set[int]], k: int) -> Optional[dict[int, int]]:
    """A proper k-coloring, or None.  Backtracking with first-fit symmetry break."""
    if not nodes:
        return {}
    order = sorted(nodes, key=lambda v: (-len(adj.get(v, ())), v))
    colors: dict[int, int] = {}

    def bt(i: int, used: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        taken = {colors[u] for u in adj.get(v, ()) if u in colors}
        for c in range(min(used + 1, k)):
            if c in taken:
                continue
            colors[v] = c
            if bt(i + 1, max(used, c + 1)):
                return True
            del colors[v]
        return False

    return colors if bt(0, 0) else None


def chromatic_number(nodes: list[int], adj: dict[int, set[int]]) -> int:
    """Exact chromatic number of the disequality graph (0 for no nodes)."""
    if not nodes:
        return 0
    # greedy clique gives a lower bound and usually nails these instances
    clique: list[int] = []
    for v in sorted(nodes, key=lambda v: -len(adj.get(v, ()))):
        if all(v in adj.get(u, ()) for u in clique):
            clique.append(v)
    for k in range(len(clique), len(nodes) + 1):
        if color_with(nodes, adj, k) is not None:
            return k
    return len(nodes)


def least_size(closed: ClosedCube, sort: str) -> int:
    """Smallest domain the sort needs: chromatic number over its classes."""
    nodes = closed.classes_of_sort(sort)
    return chromatic_number(nodes, closed.diseq_adjacency(sort))


def exact_coloring(
    closed: ClosedCube, sort: str, m: int
) -> Optional[dict[int, int]]:
    """Color the sort's classes with *exactly* m colors all used, or None.

    Exists iff chromatic <= m <= class count: take a minimal coloring, then
    peel classes off shared colors onto fresh ones.
    """
    nodes = closed.classes_of_sort(sort)
    if m > len(nodes):
        return None
    adj = closed.diseq_adjacency(sort)
    coloring = color_with(nodes, adj, m)
    if coloring is None:
        return None
    used = sorted(set(coloring.values()))
    relabel = {c: i for i, c in enumerate(used)}
    coloring = {v: relabel[c] for v, c in coloring.items()}
    next_color = len(used)
    while next_color < m:
        counts: dict[int, list[int]] = {}
        for v, c in coloring.items():
            counts.setdefault(c, []).append(v)
        for c in sorted(counts):
            if len(counts[c]) > 1:
                coloring[sorted(counts[c])[0]] = next_color
                next_color += 1
                break
        else:
            return None
    return coloring


# ---------------------------------------------------------------------------
# free satisfiability


def build_free_model(closed: ClosedCube, signature: Signature) -> Interpretation:
    """Canonical model of a consistent closed cube: one element per class.

    Classes without a forced image take the identity; sorts with no terms get
    a one-element pad.
    """
    element: dict[int, int] = {}
    sizes: dict[str, int] = {}
    for sort in signature.sorts:
        idxs = closed.classes_of_sort(sort)
        for pos, i in enumerate(idxs):
            element[i] = pos
        sizes[sort] = max(1, len(idxs))

    tables: dict[str, tuple[int, ...]] = {}
    for f in signature.functions:
        arg_classes = closed.classes_of_sort(f.arg_sort)
        table = list(range(sizes[f.arg_sort])) if f.arg_sort == f.result_sort else [0] * sizes[f.arg_sort]
        for i in arg_classes:
            j = closed.s_edge.get(i)
            if j is not None:
                table[element[i]] = element[j]
        tables[f.name] = tuple(table)

    assignment = {}
    for i, members in enumerate(closed.classes):
        for t in members:
            if isinstance(t, Var):
                assignment[t.name] = element[i]
    structure = FiniteStructure(signature, sizes, tables)
    return Interpretation(structure, assignment)


def sat_cubes(f: Formula) -> Iterator[ClosedCube]:
    """Stream the consistent closed cubes of f, pruning as literals accrue.

    Unlike `to_dnf`, this walks the formula depth-first and closes the partial
    cube at every branch, so schemas full of implications (whose antecedents
    are usually already decided) don't explode.
    """
    from .logic import And as _And
    from .logic import Eq as _Eq
    from .logic import Not as _Not
    from .logic import Or as _Or
    from .logic import mk_literal as _mk_literal
    from .logic import nnf as _nnf

    def rec(items: list, i: int, lits: list[Literal]) -> Iterator[ClosedCube]:
        while i < len(items) and isinstance(items[i], _And):
            items = items[:i] + list(items[i].args) + items[i + 1 :]
        if i == len(items):
            closed = close_cube(tuple(lits))
            if closed.consistent:
                yield closed
            return
        g = items[i]
        if isinstance(g, _Eq):
            lit = _mk_literal(g.lhs, g.rhs, True)
        elif isinstance(g, _Not) and isinstance(g.body, _Eq):
            lit = _mk_literal(g.body.lhs, g.body.rhs, False)
        else:
            assert isinstance(g, _Or), f"unexpected node in nnf: {g!r}"
            for a in g.args:
                yield from rec(items[:i] + [a] + items[i + 1 :], i, lits)
            return
        lits.append(lit)
        if close_cube(tuple(lits)).consistent:
            yield from rec(items, i + 1, lits)
        lits.pop()

    yield from rec([_nnf(f)], 0, [])


def free_qf_sat(f: Formula, signature: Signature) -> SatResult:
    """Satisfiability with no axioms at all: some cube closes consistently."""
    for closed in sat_cubes(f):
        return SatResult(True, build_free_model(closed, signature))
    return SatResult(False, note="every cube closes inconsistently")


# ---------------------------------------------------------------------------
# quotients of a closed cube (merging classes, respecting congruence)


@dataclass(frozen=True)
class Quotient:
    """A valid merge of same-sort classes, closed under functionality."""

    blocks: tuple[frozenset[int], ...]
    s_edge: dict[int, int]  # block index -> block index, partial

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def fixed_blocks(self) -> int:
        return sum(1 for b, t in self.s_edge.items() if t == b)

    @property
    def moved_blocks(self) -> int:
        return sum(1 for b, t in self.s_edge.items() if t != b)

    def block_of(self, cls: int) -> int:
        for i, b in enumerate(self.blocks):
            if cls in b:
                return i
        raise KeyError(cls)


def _close_partition(closed: ClosedCube, blocks: list[set[int]]) -> Optional[Quotient]:
    uf = UnionFind()
    for i in range(len(closed.classes)):
        uf.add(i)
    for b in blocks:
        members = sorted(b)
        for x in members[1:]:
            uf.union(members[0], x)
    changed = True
    while changed:
        changed = False
        groups = uf.groups()
        for members in groups.values():
            targets = {uf.find(closed.s_edge[m]) for m in members if m in closed.s_edge}
            if len(targets) > 1:
                targets = sorted(targets)
                for t in targets[1:]:
                    if uf.union(targets[0], t):
                        changed = True
    for a, b in closed.diseqs:
        if uf.find(a) == uf.find(b):
            return None
    groups = uf.groups()
    roots = sorted(groups, key=lambda r: min(groups[r]))
    block_index = {r: i for i, r in enumerate(roots)}
    final = tuple(frozenset(groups[r]) for r in roots)
    s_edge: dict[int, int] = {}
    for i, members in enumerate(final):
        for m in members:
            if m in closed.s_edge:
                s_edge[i] = block_index[uf.find(closed.s_edge[m])]
                break
    return Quotient(final, s_edge)


def quotients(
    closed: ClosedCube,
    sort: str = SIGMA,
    cap: int = 9,
    restrict: Optional[list[int]] = None,
) -> Iterator[Quotient]:
    """All congruence-valid merges of the sort's classes (unique, closed).

    Enumeration is by restricted growth strings over the mergeable classes,
    then each candidate is closed and checked.  Guarded by `cap` since the
    count is a Bell number.  With `restrict`, only the listed classes may
    merge; everything else stays a singleton block.
    """
    mergeable = closed.classes_of_sort(sort) if restrict is None else list(restrict)
    others = [i for i in range(len(closed.classes)) if i not in mergeable]
    if len(mergeable) > cap:
        raise EffortExceeded(
            f"quotient enumeration over {len(mergeable)} classes exceeds cap {cap}"
        )
    seen: set[tuple[frozenset[int], ...]] = set()
    for labels in _rgs(len(mergeable)):
        blocks: dict[int, set[int]] = {}
        for cls, lab in zip(mergeable, labels):
            blocks.setdefault(lab, set()).add(cls)
        candidate = list(blocks.values()) + [{i} for i in others]
        q = _close_partition(closed, candidate)
        if q is not None and q.blocks not in seen:
            seen.add(q.blocks)
            yield q


def _rgs(n: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length n, lexicographic."""
    if n == 0:
        yield ()
        return

    labels = [0] * n

    def rec(i: int, maxi: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            yield tuple(labels)
            return
        for lab in range(maxi + 2):
            labels[i] = lab
            yield from rec(i + 1, max(maxi, lab))

    yield from rec(1, 0)
