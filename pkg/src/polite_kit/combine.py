"""Two-theory satisfiability over disjoint signatures.

Given phi1 over one signature and phi2 over another (no shared function
symbols), the engine computes the strong witness psi of phi2, collects psi's
variables on the sorts the signatures share, and streams arrangements of
those variables.  The conjunction is satisfiable exactly when some
arrangement leaves both sides satisfiable in their own theories, so the
search returns the first such arrangement as a certificate or exhausts the
stream.  A brute-force oracle over the union signature supplies ground truth
at small domain bounds.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .arrangements import Arrangement, enumerate_arrangements
from .congruence import UnionFind, close_cube
from .logic import And, Formula, Signature, Var, conj, vars_of
from .models import (
    FiniteStructure,
    Interpretation,
    SatResult,
    assignments,
    enumerate_profiles,
    enumerate_structures,
    evaluate,
)
from .theories import Theory, TheoryError

SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class CombinationProblem:
    """phi1 and phi2 live in their own theories; variables may be shared."""

    t1: Theory
    t2: Theory
    phi1: Formula
    phi2: Formula

    def __post_init__(self) -> None:
        overlap = {f.name for f in self.t1.signature.functions} & {
            f.name for f in self.t2.signature.functions
        }
        if overlap:
            raise TheoryError(
                f"signatures must share only sorts and equality, not {sorted(overlap)}"
            )
        self.t1.validate(self.phi1)
        self.t2.validate(self.phi2)

    @property
    def shared_sorts(self) -> tuple[str, ...]:
        return tuple(
            s for s in self.t1.signature.sorts if s in self.t2.signature.sorts
        )


@dataclass(frozen=True)
class CombinationResult:
    verdict: str
    arrangement: Optional[Arrangement] = None
    t1_result: Optional[SatResult] = None
    t2_result: Optional[SatResult] = None
    tried: int = 0
    pruned: int = 0
    note: str = ""

    def to_json(self) -> dict:
        out: dict = {
            "verdict": self.verdict,
            "statistics": {"tried": self.tried, "pruned": self.pruned},
        }
        if self.arrangement is not None:
            out["arrangement"] = [list(b) for b in self.arrangement.key()]
        if self.t1_result is not None:
            out["t1"] = self.t1_result.to_json()
        if self.t2_result is not None:
            out["t2"] = self.t2_result.to_json()
        if self.note:
            out["note"] = self.note
        return out


def shared_variables(psi: Formula, shared_sorts: tuple[str, ...]) -> tuple[Var, ...]:
    """The arrangement pool: psi's variables on the shared sorts."""
    return tuple(
        sorted(
            (v for v in vars_of(psi) if v.sort in shared_sorts),
            key=lambda v: (v.sort, v.name),
        )
    )


def _top_eq_literals(phi: Formula) -> Iterator:
    """Equality conjuncts at the top level (through any And nesting)."""
    from .logic import Eq, mk_literal

    stack = [phi]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.extend(g.args)
        elif isinstance(g, Eq):
            yield mk_literal(g.lhs, g.rhs, True)


def _forced_together(problem: CombinationProblem, psi: Formula, pool: tuple[Var, ...]):
    """Union-find over pool variables whose equality one side already forces.

    Each side's top-level equality conjuncts hold in every one of its models,
    and so does their congruence closure, so separating two variables the
    closure merges dooms the arrangement.  Witness grids are held together by
    exactly such conjuncts, which is what keeps their pools enumerable.
    """
    uf = UnionFind()
    pool_names = {v.name for v in pool}
    for name in sorted(pool_names):
        uf.add(name)
    for phi in (problem.phi1, psi):
        closed = close_cube(tuple(_top_eq_literals(phi)))
        for members in closed.classes:
            names = sorted(
                t.name for t in members if isinstance(t, Var) and t.name in pool_names
            )
            for a, b in zip(names, names[1:]):
                uf.union(a, b)
    return uf


def polite_combine(
    problem: CombinationProblem,
    *,
    prune: bool = False,
    jobs: int = 1,
    effort_cap: Optional[int] = None,
    unsound_ok: bool = False,
) -> CombinationResult:
    """Decide the conjunction by strong-witness plus arrangement search.

    The second theory carries the strong witness and must be flagged stably
    infinite; `unsound_ok` lifts that requirement for experimentation and the
    result says so.  `effort_cap` bounds the arrangements examined — hitting
    it yields the explicit "unknown" verdict, never "unsat".
    """
    if problem.t2.strong_witness is None:
        raise TheoryError(f"{problem.t2.name} carries no strong witness")
    note = ""
    if problem.t2.flags.si is not True:
        if not unsound_ok:
            raise TheoryError(
                f"{problem.t2.name} is not flagged stably infinite; "
                "pass unsound_ok to search anyway"
            )
        note = "second theory not stably infinite; verdict outside the theorem"
    psi = problem.t2.strong_witness(problem.phi2)
    pool = shared_variables(psi, problem.shared_sorts)

    pruned = 0
    hook = None
    if prune:
        forced = _forced_together(problem, psi, pool)

        def hook(sort: str, vs: tuple[Var, ...], prefix: tuple[int, ...]) -> bool:
            nonlocal pruned
            j = len(prefix) - 1
            for i in range(j):
                if prefix[i] != prefix[j] and forced.find(vs[i].name) == forced.find(
                    vs[j].name
                ):
                    pruned += 1
                    return False
            return True

    def check(arr: Arrangement) -> tuple[SatResult, Optional[SatResult]]:
        delta = arr.formula()
        r1 = problem.t1.qf_sat(conj((problem.phi1, delta)))
        if not r1.sat:
            return r1, None
        return r1, problem.t2.qf_sat(conj((psi, delta)))

    stream = enumerate_arrangements(pool, hook)
    tried = 0

    if jobs <= 1:
        for arr in stream:
            if effort_cap is not None and tried >= effort_cap:
                return CombinationResult(
                    UNKNOWN,
                    tried=tried,
                    pruned=pruned,
                    note=_capped(note, effort_cap),
                )
            tried += 1
            r1, r2 = check(arr)
            if r1.sat and r2 is not None and r2.sat:
                return CombinationResult(SAT, arr, r1, r2, tried, pruned, note)
        return CombinationResult(UNSAT, tried=tried, pruned=pruned, note=note)

    with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
        while True:
            batch = list(itertools.islice(stream, jobs))
            if not batch:
                return CombinationResult(UNSAT, tried=tried, pruned=pruned, note=note)
            if effort_cap is not None and tried >= effort_cap:
                return CombinationResult(
                    UNKNOWN, tried=tried, pruned=pruned, note=_capped(note, effort_cap)
                )
            tried += len(batch)
            for arr, (r1, r2) in zip(batch, pool_exec.map(check, batch)):
                if r1.sat and r2 is not None and r2.sat:
                    return CombinationResult(SAT, arr, r1, r2, tried, pruned, note)


def _capped(note: str, cap: int) -> str:
    capped = f"effort cap of {cap} arrangements reached"
    return f"{note}; {capped}" if note else capped


def recheck_certificate(problem: CombinationProblem, result: CombinationResult) -> bool:
    """Re-run both satisfiability checks under the certificate arrangement."""
    if result.verdict != SAT or result.arrangement is None:
        return False
    if problem.t2.strong_witness is None:
        return False
    delta = result.arrangement.formula()
    psi = problem.t2.strong_witness(problem.phi2)
    return (
        problem.t1.qf_sat(conj((problem.phi1, delta))).sat
        and problem.t2.qf_sat(conj((psi, delta))).sat
    )


def union_signature(t1: Theory, t2: Theory) -> Signature:
    sorts = tuple(dict.fromkeys(t1.signature.sorts + t2.signature.sorts))
    return Signature(sorts, t1.signature.functions + t2.signature.functions)


def _reduct(structure: FiniteStructure, signature: Signature) -> FiniteStructure:
    sizes = {s: structure.sizes[s] for s in signature.sorts}
    tables = {f.name: structure.tables[f.name] for f in signature.functions}
    return FiniteStructure(signature, sizes, tables)


def oracle_combined_sat(
    t1: Theory, t2: Theory, phi: Formula, bound: int
) -> SatResult:
    """Monolithic finite search over the union signature.

    SAT means a structure with every domain of size at most `bound` whose
    reducts are members of both theories satisfies phi; the negative verdict
    is only "nothing within the bound", never theory-level unsatisfiability.
    """
    signature = union_signature(t1, t2)
    variables = tuple(sorted(vars_of(phi), key=lambda v: v.name))
    for profile in enumerate_profiles(signature.sorts, bound):
        for structure in enumerate_structures(signature, profile):
            if not t1.is_member(_reduct(structure, t1.signature)):
                continue
            if not t2.is_member(_reduct(structure, t2.signature)):
                continue
            for alpha in assignments(structure, variables):
                interp = Interpretation(structure, alpha)
                if evaluate(phi, interp):
                    return SatResult(True, interp)
    return SatResult(False, note=f"no combined member of size <= {bound}")
