"""Finite structures, assignments, and brute-force evaluation.

A structure fixes a finite domain {0..m-1} per sort and a table per function
symbol.  Evaluation is the naive recursive kind: quantifiers loop over the
domain.  Everything downstream that claims a model re-checks it here.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .logic import (
    And,
    App,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    LogicError,
    Not,
    Or,
    Signature,
    Term,
    Var,
)


@dataclass(frozen=True)
class FiniteStructure:
    """Domains {0..size-1} per sort plus one lookup table per function."""

    signature: Signature
    sizes: dict[str, int]
    tables: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for sort in self.signature.sorts:
            if self.sizes.get(sort, 0) < 1:
                raise LogicError(f"sort {sort} needs a nonempty domain")
        for f in self.signature.functions:
            table = self.tables.get(f.name)
            if table is None or len(table) != self.sizes[f.arg_sort]:
                raise LogicError(f"function {f.name} needs a total table")
            if any(not (0 <= v < self.sizes[f.result_sort]) for v in table):
                raise LogicError(f"function {f.name} maps outside its result sort")

    def apply(self, fn: str, value: int) -> int:
        return self.tables[fn][value]

    def domain(self, sort: str) -> range:
        return range(self.sizes[sort])

    def profile(self) -> dict[str, int]:
        return dict(self.sizes)

    def to_json(self) -> dict:
        return {
            "sorts": {s: self.sizes[s] for s in self.signature.sorts},
            "functions": {f.name: list(self.tables[f.name]) for f in self.signature.functions},
        }


@dataclass(frozen=True)
class Interpretation:
    """A structure together with values for free variables (by name)."""

    structure: FiniteStructure
    assignment: dict[str, int]

    def value(self, v: Var) -> int:
        try:
            return self.assignment[v.name]
        except KeyError:
            raise LogicError(f"unassigned variable {v.name}") from None

    def extended(self, extra: dict[str, int]) -> "Interpretation":
        merged = dict(self.assignment)
        merged.update(extra)
        return Interpretation(self.structure, merged)

    def to_json(self) -> dict:
        out = self.structure.to_json()
        out["assignment"] = dict(sorted(self.assignment.items()))
        return out


def eval_term(t: Term, interp: Interpretation) -> int:
    if isinstance(t, Var):
        return interp.value(t)
    return interp.structure.apply(t.fn, eval_term(t.arg, interp))


def evaluate(f: Formula, interp: Interpretation) -> bool:
    """Truth of f under the interpretation; quantifiers iterate the domain."""
    if isinstance(f, Eq):
        return eval_term(f.lhs, interp) == eval_term(f.rhs, interp)
    if isinstance(f, Not):
        return not evaluate(f.body, interp)
    if isinstance(f, And):
        return all(evaluate(a, interp) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, interp) for a in f.args)
    if isinstance(f, Implies):
        return (not evaluate(f.lhs, interp)) or evaluate(f.rhs, interp)
    if isinstance(f, (Exists, Forall)):
        domains = [interp.structure.domain(v.sort) for v in f.bound]
        names = [v.name for v in f.bound]
        want_one = isinstance(f, Exists)
        for values in itertools.product(*domains):
            sub = interp.extended(dict(zip(names, values)))
            if evaluate(f.body, sub) == want_one:
                return want_one
        return not want_one
    raise LogicError(f"not a formula: {f!r}")


def assignments(structure: FiniteStructure, variables: tuple[Var, ...]) -> Iterator[dict[str, int]]:
    """All assignments of the given variables into the structure, lexicographic."""
    domains = [structure.domain(v.sort) for v in variables]
    names = [v.name for v in variables]
    for values in itertools.product(*domains):
        yield dict(zip(names, values))


def satisfying_assignment(
    f: Formula, structure: FiniteStructure, variables: tuple[Var, ...]
) -> Optional[dict[str, int]]:
    for alpha in assignments(structure, variables):
        if evaluate(f, Interpretation(structure, alpha)):
            return alpha
    return None


def enumerate_structures(signature: Signature, sizes: dict[str, int]) -> Iterator[FiniteStructure]:
    """All structures with the given domain sizes, tables in lexicographic order."""
    fns = signature.functions
    spaces = [
        itertools.product(range(sizes[f.result_sort]), repeat=sizes[f.arg_sort])
        for f in fns
    ]
    for combo in itertools.product(*spaces):
        yield FiniteStructure(signature, dict(sizes), {f.name: t for f, t in zip(fns, combo)})


def enumerate_profiles(sorts: tuple[str, ...], bound: int) -> Iterator[dict[str, int]]:
    """All size profiles 1..bound per sort, lexicographic in sort order."""
    for values in itertools.product(range(1, bound + 1), repeat=len(sorts)):
        yield dict(zip(sorts, values))


@dataclass(frozen=True)
class SatResult:
    """Verdict plus an optional checked model and a human-readable note."""

    sat: bool
    model: Optional[Interpretation] = None
    note: str = ""

    def __bool__(self) -> bool:
        return self.sat

    def to_json(self) -> dict:
        out: dict = {"sat": self.sat}
        if self.note:
            out["note"] = self.note
        if self.model is not None:
            out["model"] = self.model.to_json()
        return out
