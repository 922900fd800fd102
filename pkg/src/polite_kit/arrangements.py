"""Arrangements: total equality/disequality patterns over finite variable sets.

An arrangement partitions the variables of each sort; its formula asserts the
equalities inside blocks and one disequality per pair of blocks.  Enumeration
is by restricted growth strings per sort (lexicographic), multiplied across
sorts in sort-name order, so the stream is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

from .logic import Cube, Formula, TRUE, Var, conj, cube_formula, mk_literal

#: Optional pruning callback: called per sort with the variables and a label
#: prefix; returning False abandons every arrangement extending that prefix.
PrefixHook = Callable[[str, tuple[Var, ...], tuple[int, ...]], bool]


@dataclass(frozen=True)
class Arrangement:
    """Sort-homogeneous blocks; variables inside a block are equated."""

    blocks: tuple[tuple[Var, ...], ...]

    def __post_init__(self) -> None:
        for block in self.blocks:
            if not block:
                raise ValueError("empty block")
            if len({v.sort for v in block}) != 1:
                raise ValueError("block mixes sorts")

    def variables(self) -> tuple[Var, ...]:
        return tuple(v for block in self.blocks for v in block)

    def block_of(self, v: Var) -> int:
        for i, block in enumerate(self.blocks):
            if v in block:
                return i
        raise KeyError(v.name)

    def same_block(self, u: Var, v: Var) -> bool:
        return self.block_of(u) == self.block_of(v)

    def cube(self) -> Cube:
        lits = []
        for block in self.blocks:
            for a, b in zip(block, block[1:]):
                lits.append(mk_literal(a, b, True))
        for i, bi in enumerate(self.blocks):
            for bj in self.blocks[i + 1 :]:
                if bi[0].sort == bj[0].sort:
                    lits.append(mk_literal(bi[0], bj[0], False))
        return tuple(lits)

    def formula(self) -> Formula:
        cube = self.cube()
        return cube_formula(cube) if cube else TRUE

    def key(self) -> tuple[tuple[str, ...], ...]:
        return tuple(tuple(v.name for v in block) for block in self.blocks)


def rgs_strings(n: int, prefix_ok: Optional[Callable[[tuple[int, ...]], bool]] = None) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length n in lexicographic order.

    `prefix_ok` vetoes whole subtrees: it sees each proper prefix as soon as
    it is extended.
    """
    if n == 0:
        yield ()
        return
    labels = [0] * n
    if prefix_ok is not None and not prefix_ok((0,)):
        return

    def rec(i: int, maxi: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            yield tuple(labels)
            return
        for lab in range(maxi + 2):
            labels[i] = lab
            if prefix_ok is not None and not prefix_ok(tuple(labels[: i + 1])):
                continue
            yield from rec(i + 1, max(maxi, lab))

    yield from rec(1, 0)


def _sorted_by_sort(variables: Iterable[Var]) -> list[tuple[str, tuple[Var, ...]]]:
    by_sort: dict[str, list[Var]] = {}
    for v in variables:
        by_sort.setdefault(v.sort, []).append(v)
    return [
        (sort, tuple(sorted(by_sort[sort], key=lambda v: v.name)))
        for sort in sorted(by_sort)
    ]


def _blocks_from_labels(vs: tuple[Var, ...], labels: tuple[int, ...]) -> list[tuple[Var, ...]]:
    blocks: dict[int, list[Var]] = {}
    for v, lab in zip(vs, labels):
        blocks.setdefault(lab, []).append(v)
    return [tuple(blocks[lab]) for lab in sorted(blocks)]


def enumerate_arrangements(
    variables: Iterable[Var], prefix_hook: Optional[PrefixHook] = None
) -> Iterator[Arrangement]:
    """All arrangements of the variables, deterministic order.

    The count is a product of Bell numbers (one per sort), so callers watch
    their variable sets; `prefix_hook` lets an engine cut subtrees early.
    """
    groups = _sorted_by_sort(variables)

    def product(i: int, acc: list[tuple[Var, ...]]) -> Iterator[Arrangement]:
        if i == len(groups):
            yield Arrangement(tuple(acc))
            return
        sort, vs = groups[i]
        hook = None
        if prefix_hook is not None:
            hook = lambda prefix: prefix_hook(sort, vs, prefix)  # noqa: E731
        for labels in rgs_strings(len(vs), hook):
            yield from product(i + 1, acc + _blocks_from_labels(vs, labels))

    yield from product(0, [])


def arrangement_of(assignment: dict[str, int], variables: Iterable[Var]) -> Arrangement:
    """The arrangement a concrete assignment induces on the variables."""
    blocks: list[tuple[Var, ...]] = []
    for sort, vs in _sorted_by_sort(variables):
        by_value: dict[int, list[Var]] = {}
        for v in vs:
            by_value.setdefault(assignment[v.name], []).append(v)
        indexed = sorted(by_value.values(), key=lambda blk: blk[0].name)
        blocks.extend(tuple(blk) for blk in indexed)
    return Arrangement(tuple(blocks))


def arrangement_formula(arr: Arrangement) -> Formula:
    return arr.formula()
