"""The theory catalog: spectra, decision procedures, and registered witnesses.

Every theory here is axiomatized over the empty signature or a single unary
function symbol, so satisfiability questions reduce to counting: close the
cube, then ask whether some admissible cardinality profile accommodates the
forced classes (plus, with a function symbol around, the forced chain
structure).  Each family implements the same interface:

  qf_sat / sat_infinite / sat_at_profile / finite_sat  -- decision procedures
  is_member / member_profiles / member_structures      -- bounded model space
  mincard / small_model_bound                          -- cardinality probes
  covering_interpretation                              -- models whose domains
                                                          are exactly the
                                                          variables' values

Verdicts are exact; models are constructed then re-checked by evaluation.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from . import witnesses as wit
from .congruence import (
    ClosedCube,
    EffortExceeded,
    Quotient,
    build_free_model,
    chromatic_number,
    color_with,
    exact_coloring,
    least_size,
    min_classes,
    quotients,
    sat_cubes,
)
from .foracle import FigureOracle, FofFunction, SeededOracle, oracle_from_seed
from .logic import (
    EMPTY_1,
    EMPTY_2,
    SIGMA,
    SIGMA2,
    S_FUN,
    And,
    App,
    Formula,
    FunDecl,
    LogicError,
    Not,
    Signature,
    Term,
    TRUE,
    Var,
    conj,
    dagger,
    dagger_fun,
    dagger_links,
    dagger_vee,
    erase_s,
    is_quantifier_free,
    mk_eq,
    mk_neq,
    s_of,
    subterms,
    term_depth,
    term_root,
    term_text,
    terms_of,
    vars_of,
)
from .models import (
    FiniteStructure,
    Interpretation,
    SatResult,
    assignments,
    enumerate_structures,
    evaluate,
)

INFINITE = "infinite-only"
UNSAT = "unsat"

MincardResult = Union[int, str]


class TheoryError(Exception):
    """Unknown theory, malformed parameter, or violated precondition."""


# ---------------------------------------------------------------------------
# cardinality spectra


@dataclass(frozen=True)
class CardSet:
    """Admissible sizes for one sort: a finite set, an arithmetic tail, and/or infinity."""

    finite: frozenset[int] = frozenset()
    lo: Optional[int] = None
    step: int = 1
    infinite: bool = False

    def admits(self, m: int) -> bool:
        if m < 1:
            return False
        if m in self.finite:
            return True
        return self.lo is not None and m >= self.lo and (m - self.lo) % self.step == 0

    def min_finite_geq(self, c: int) -> Optional[int]:
        """Smallest admitted finite size >= max(c, 1), or None."""
        c = max(c, 1)
        candidates = [m for m in self.finite if m >= c]
        if self.lo is not None:
            start = max(self.lo, c)
            offset = (-(start - self.lo)) % self.step
            candidates.append(start + offset)
        return min(candidates) if candidates else None

    def finite_upto(self, bound: int) -> list[int]:
        out = {m for m in self.finite if m <= bound}
        if self.lo is not None:
            out.update(range(self.lo, bound + 1, self.step))
        return sorted(out)

    @property
    def has_finite(self) -> bool:
        return bool(self.finite) or self.lo is not None


ANY_SIZE = CardSet(lo=1, infinite=True)

Box = dict[str, CardSet]


@dataclass(frozen=True)
class TheoryFlags:
    """Expected verdicts for the five properties; None means not pinned."""

    si: Optional[bool]
    sm: Optional[bool]
    fw: Optional[bool]
    sw: Optional[bool]
    cv: Optional[bool]

    def as_dict(self) -> dict[str, Optional[bool]]:
        return {
            "stably-infinite": self.si,
            "smooth": self.sm,
            "finitely-witnessable": self.fw,
            "strongly-finitely-witnessable": self.sw,
            "convex": self.cv,
        }


# ---------------------------------------------------------------------------
# shared helpers


def fixpoint_count(table: tuple[int, ...]) -> int:
    return sum(1 for i, v in enumerate(table) if i == v)


def is_identity(table: tuple[int, ...]) -> bool:
    return fixpoint_count(table) == len(table)


def psi_vee_holds(table: tuple[int, ...]) -> bool:
    return all(table[v] in (i, v) for i, v in enumerate(table))


def _fixfree(table: tuple[int, ...]) -> bool:
    return fixpoint_count(table) == 0


def _chain_valid(s_edge: dict[int, int]) -> bool:
    """Every two-step chain closes: s(s(b)) lands on b or s(b) when forced."""
    for b, c in s_edge.items():
        if c == b:
            continue
        d = s_edge.get(c)
        if d is not None and d not in (b, c):
            return False
    return True


def _pow2_at_least(x: int) -> int:
    return max(0, (x - 1).bit_length())


class Theory:
    """Base interface; subclasses are immutable after construction."""

    name: str
    signature: Signature
    flags: TheoryFlags
    witness: Optional[wit.WitnessFn]
    strong_witness: Optional[wit.WitnessFn]

    def __init__(
        self,
        name: str,
        signature: Signature,
        flags: TheoryFlags,
        witness: Optional[wit.WitnessFn] = None,
        strong_witness: Optional[wit.WitnessFn] = None,
    ) -> None:
        self.name = name
        self.signature = signature
        self.flags = flags
        self.witness = witness
        self.strong_witness = strong_witness

    # -- plumbing ----------------------------------------------------------

    @property
    def one_sorted(self) -> bool:
        return len(self.signature.sorts) == 1

    def validate(self, phi: Formula) -> None:
        if not is_quantifier_free(phi):
            raise TheoryError("decision procedures take quantifier-free input")
        for v in vars_of(phi):
            if v.sort not in self.signature.sorts:
                raise TheoryError(f"variable {v.name} has sort {v.sort}, not in {self.name}")
        for t in terms_of(phi):
            if isinstance(t, App) and self.signature.function(t.fn) is None:
                raise TheoryError(f"function {t.fn} is not in {self.name}'s signature")

    def describe(self) -> dict:
        return {
            "name": self.name,
            "sorts": list(self.signature.sorts),
            "functions": [f.name for f in self.signature.functions],
            "flags": self.flags.as_dict(),
            "witness": self.witness.label if self.witness else None,
            "strong_witness": (
                self.strong_witness.label
                if self.strong_witness
                else (self.witness.label if self.witness and self.witness.is_strong else None)
            ),
        }

    # -- interface (implemented per family) ---------------------------------

    def qf_sat(self, phi: Formula) -> SatResult:
        raise NotImplementedError

    def sat_infinite(self, phi: Formula) -> bool:
        raise NotImplementedError

    def sat_at_profile(self, phi: Formula, profile: dict[str, int]) -> bool:
        raise NotImplementedError

    def finite_sat(self, phi: Formula) -> bool:
        raise NotImplementedError

    def is_member(self, structure: FiniteStructure) -> bool:
        raise NotImplementedError

    def member_profiles(self, bound: int) -> list[dict[str, int]]:
        raise NotImplementedError

    def member_structures(self, profile: dict[str, int]) -> list[FiniteStructure]:
        raise NotImplementedError

    def mincard(self, phi: Formula) -> MincardResult:
        raise NotImplementedError

    def small_model_bound(self, phi: Formula) -> dict[str, int]:
        raise NotImplementedError

    def covering_interpretation(self, psi: Formula) -> Optional[Interpretation]:
        raise NotImplementedError

    # -- checked helpers -----------------------------------------------------

    def _coverage_ok(self, interp: Interpretation, psi: Formula) -> bool:
        for sort in self.signature.sorts:
            hit = {
                interp.assignment[v.name]
                for v in vars_of(psi, sort)
                if v.name in interp.assignment
            }
            if hit != set(interp.structure.domain(sort)):
                return False
        return True

    def checked_cover(self, interp: Optional[Interpretation], psi: Formula) -> Optional[Interpretation]:
        """Accept a candidate covering model only if it verifies end to end."""
        if interp is None:
            return None
        if not self.is_member(interp.structure):
            return None
        if not evaluate(psi, interp):
            return None
        if not self._coverage_ok(interp, psi):
            return None
        return interp


# ---------------------------------------------------------------------------
# theories over empty signatures


class EmptyTheory(Theory):
    """A theory fixed entirely by admissible cardinality profiles (boxes)."""

    def __init__(
        self,
        name: str,
        signature: Signature,
        boxes: tuple[Box, ...],
        flags: TheoryFlags,
        witness: Optional[wit.WitnessFn] = None,
        strong_witness: Optional[wit.WitnessFn] = None,
    ) -> None:
        if not signature.is_empty:
            raise TheoryError("EmptyTheory needs an empty signature")
        super().__init__(name, signature, flags, witness, strong_witness)
        self.boxes = boxes

    # -- decision procedures -------------------------------------------------

    def _needs(self, closed: ClosedCube) -> dict[str, int]:
        return {s: least_size(closed, s) for s in self.signature.sorts}

    def qf_sat(self, phi: Formula) -> SatResult:
        self.validate(phi)
        saw_infinite = False
        for closed in sat_cubes(phi):
            needs = self._needs(closed)
            for box in self.boxes:
                finite_profile: Optional[dict[str, int]] = {}
                possible = True
                for s in self.signature.sorts:
                    m = box[s].min_finite_geq(needs[s])
                    if m is None:
                        finite_profile = None
                        if not box[s].infinite:
                            possible = False
                            break
                    elif finite_profile is not None:
                        finite_profile[s] = m
                if not possible:
                    continue
                if finite_profile is not None:
                    return SatResult(True, self._model_at(closed, finite_profile, phi))
                saw_infinite = True
        if saw_infinite:
            return SatResult(True, None, note="satisfiable; every fitting member is infinite")
        return SatResult(False)

    def _model_at(
        self, closed: ClosedCube, profile: dict[str, int], phi: Formula
    ) -> Interpretation:
        structure = FiniteStructure(self.signature, dict(profile))
        assignment: dict[str, int] = {}
        for s in self.signature.sorts:
            nodes = closed.classes_of_sort(s)
            coloring = color_with(nodes, closed.diseq_adjacency(s), profile[s])
            assert coloring is not None
            for i in nodes:
                for t in closed.classes[i]:
                    if isinstance(t, Var):
                        assignment[t.name] = coloring[i]
        return Interpretation(structure, _fill_unpinned(assignment, phi))

    def sat_infinite(self, phi: Formula) -> bool:
        self.validate(phi)
        if not any(all(box[s].infinite for s in self.signature.sorts) for box in self.boxes):
            return False
        return any(True for _ in sat_cubes(phi))

    def sat_at_profile(self, phi: Formula, profile: dict[str, int]) -> bool:
        self.validate(phi)
        if not any(all(box[s].admits(profile[s]) for s in self.signature.sorts) for box in self.boxes):
            return False
        for closed in sat_cubes(phi):
            needs = self._needs(closed)
            if all(needs[s] <= profile[s] for s in self.signature.sorts):
                return True
        return False

    def finite_sat(self, phi: Formula) -> bool:
        self.validate(phi)
        for closed in sat_cubes(phi):
            needs = self._needs(closed)
            for box in self.boxes:
                if all(box[s].min_finite_geq(needs[s]) is not None for s in self.signature.sorts):
                    return True
        return False

    # -- model space ----------------------------------------------------------

    def is_member(self, structure: FiniteStructure) -> bool:
        return any(
            all(box[s].admits(structure.sizes[s]) for s in self.signature.sorts)
            for box in self.boxes
        )

    def member_profiles(self, bound: int) -> list[dict[str, int]]:
        seen: set[tuple[int, ...]] = set()
        for box in self.boxes:
            per_sort = [box[s].finite_upto(bound) for s in self.signature.sorts]
            for combo in itertools.product(*per_sort):
                seen.add(combo)
        return [dict(zip(self.signature.sorts, combo)) for combo in sorted(seen)]

    def member_structures(self, profile: dict[str, int]) -> list[FiniteStructure]:
        probe = FiniteStructure(self.signature, dict(profile))
        return [probe] if self.is_member(probe) else []

    def mincard(self, phi: Formula) -> MincardResult:
        if not self.one_sorted:
            raise TheoryError("mincard needs a one-sorted theory")
        self.validate(phi)
        s = self.signature.sorts[0]
        best: Optional[int] = None
        consistent = False
        for closed in sat_cubes(phi):
            consistent = True
            need = least_size(closed, s)
            for box in self.boxes:
                m = box[s].min_finite_geq(need)
                if m is not None and (best is None or m < best):
                    best = m
        if best is not None:
            return best
        if consistent and self.sat_infinite(phi):
            return INFINITE
        return UNSAT

    def small_model_bound(self, phi: Formula) -> dict[str, int]:
        self.validate(phi)
        out = {s: 1 for s in self.signature.sorts}
        for closed in sat_cubes(phi):
            needs = self._needs(closed)
            for box in self.boxes:
                for s in self.signature.sorts:
                    m = box[s].min_finite_geq(needs[s])
                    if m is not None:
                        out[s] = max(out[s], m)
        return out

    # -- covering --------------------------------------------------------------

    def covering_interpretation(self, psi: Formula) -> Optional[Interpretation]:
        self.validate(psi)
        for closed in sat_cubes(psi):
            for box in self.boxes:
                profile: dict[str, int] = {}
                ok = True
                for s in self.signature.sorts:
                    t = len(closed.classes_of_sort(s))
                    chi = least_size(closed, s)
                    m = box[s].min_finite_geq(chi)
                    if m is None or m > t:
                        ok = False
                        break
                    profile[s] = m
                if not ok:
                    continue
                assignment: dict[str, int] = {}
                built = True
                for s in self.signature.sorts:
                    coloring = exact_coloring(closed, s, profile[s])
                    if coloring is None:
                        built = False
                        break
                    for i, color in coloring.items():
                        for t in closed.classes[i]:
                            if isinstance(t, Var):
                                assignment[t.name] = color
                if not built:
                    continue
                candidate = Interpretation(
                    FiniteStructure(self.signature, profile), _fill_unpinned(assignment, psi)
                )
                verified = self.checked_cover(candidate, psi)
                if verified is not None:
                    return verified
        return None


def add_sort(base: Theory, name: Optional[str] = None) -> EmptyTheory:
    """Adjoin a second, unconstrained sort to a one-sorted empty theory."""
    if not isinstance(base, EmptyTheory) or not base.one_sorted:
        raise TheoryError("add_sort needs a one-sorted theory over the empty signature")
    boxes = tuple({**box, SIGMA2: ANY_SIZE} for box in base.boxes)
    witness = (
        wit.lift_witness("add_sort_plain", base.witness) if base.witness else None
    )
    strong = (
        wit.lift_witness("add_sort_strong", base.strong_witness)
        if base.strong_witness
        else None
    )
    return EmptyTheory(name or f"add_sort({base.name})", EMPTY_2, boxes, base.flags, witness, strong)


# ---------------------------------------------------------------------------
# adjoining an identity-axiomatized function symbol


class AddFunTheory(Theory):
    """Base theory plus a unary symbol forced to be the identity."""

    def __init__(self, base: Theory, name: Optional[str] = None) -> None:
        if not base.signature.is_empty:
            raise TheoryError("add_fun needs a base theory over the empty signature")
        signature = Signature(base.signature.sorts, (FunDecl(S_FUN, SIGMA, SIGMA),))
        witness = wit.lift_witness("add_fun", base.witness) if base.witness else None
        strong = (
            wit.lift_witness("add_fun", base.strong_witness) if base.strong_witness else None
        )
        super().__init__(name or f"add_fun({base.name})", signature, base.flags, witness, strong)
        self.base = base

    def _identity_extend(self, interp: Interpretation, phi: Formula) -> Optional[Interpretation]:
        sizes = dict(interp.structure.sizes)
        table = tuple(range(sizes[SIGMA]))
        structure = FiniteStructure(self.signature, sizes, {S_FUN: table})
        out = Interpretation(structure, dict(interp.assignment))
        return out if evaluate(phi, out) else None

    def qf_sat(self, phi: Formula) -> SatResult:
        self.validate(phi)
        r = self.base.qf_sat(erase_s(phi))
        if not r.sat:
            return r
        if r.model is None:
            return SatResult(True, None, note=r.note)
        lifted = self._identity_extend(r.model, phi)
        return SatResult(True, lifted, note=r.note if lifted is None else "")

    def sat_infinite(self, phi: Formula) -> bool:
        self.validate(phi)
        return self.base.sat_infinite(erase_s(phi))

    def sat_at_profile(self, phi: Formula, profile: dict[str, int]) -> bool:
        self.validate(phi)
        return self.base.sat_at_profile(erase_s(phi), profile)

    def finite_sat(self, phi: Formula) -> bool:
        self.validate(phi)
        return self.base.finite_sat(erase_s(phi))

    def is_member(self, structure: FiniteStructure) -> bool:
        if not is_identity(structure.tables[S_FUN]):
            return False
        reduct = FiniteStructure(self.base.signature, dict(structure.sizes))
        return self.base.is_member(reduct)

    def member_profiles(self, bound: int) -> list[dict[str, int]]:
        return self.base.member_profiles(bound)

    def member_structures(self, profile: dict[str, int]) -> list[FiniteStructure]:
        out = []
        for reduct in self.base.member_structures(profile):
            table = tuple(range(profile[SIGMA]))
            out.append(FiniteStructure(self.signature, dict(profile), {S_FUN: table}))
        return out

    def mincard(self, phi: Formula) -> MincardResult:
        if not self.one_sorted:
            raise TheoryError("mincard needs a one-sorted theory")
        self.validate(phi)
        return self.base.mincard(erase_s(phi))

    def small_model_bound(self, phi: Formula) -> dict[str, int]:
        self.validate(phi)
        return self.base.small_model_bound(erase_s(phi))

    def covering_interpretation(self, psi: Formula) -> Optional[Interpretation]:
        self.validate(psi)
        inner = self.base.covering_interpretation(erase_s(psi))
        if inner is None:
            return None
        sizes = dict(inner.structure.sizes)
        table = tuple(range(sizes[SIGMA]))
        candidate = Interpretation(
            FiniteStructure(self.signature, sizes, {S_FUN: table}), dict(inner.assignment)
        )
        return self.checked_cover(candidate, psi)


# ---------------------------------------------------------------------------
# adjoining a function with the two-step chain-closure axiom


class AddNcTheory(Theory):
    """Base theory plus a unary s with: s(s(x)) = x or s(s(x)) = s(x), always."""

    QUOTIENT_CAP = 9

    def __init__(self, base: Theory, name: Optional[str] = None) -> None:
        if not isinstance(base, EmptyTheory):
            raise TheoryError("add_nc needs a base theory over the empty signature")
        signature = Signature(base.signature.sorts, (FunDecl(S_FUN, SIGMA, SIGMA),))
        flags = TheoryFlags(
            base.flags.si,
            base.flags.sm,
            base.flags.fw,
            base.flags.sw,
            False if _has_nontrivial_model(base) else None,
        )
        witness = wit.lift_witness("add_nc", base.witness) if base.witness else None
        strong = (
            wit.lift_witness("add_nc", base.strong_witness) if base.strong_witness else None
        )
        super().__init__(name or f"add_nc({base.name})", signature, flags, witness, strong)
        self.base = base

    # -- the symbol-elimination reduction -------------------------------------

    def reduction(self, phi: Formula) -> Formula:
        d = dagger(phi)
        return And((d.formula, dagger_links(d), dagger_vee(d), dagger_fun(d)))

    def qf_sat(self, phi: Formula) -> SatResult:
        """Decide by quotient search rather than by solving the reduction.

        `reduction` stays the reference construction, but running the base
        decision procedure on it re-expands the elimination grid's closure
        clauses disjunctively — hopeless once the grid has more than a few
        rows.  The quotient route decides the same question directly: a cube
        is realizable iff some congruence-valid merge of its chain-involved
        classes closes every two-step chain, and then any size from the block
        floor upward can host it (spare chain slack becomes self-loops).
        """
        self.validate(phi)
        saw_infinite = False
        for closed in sat_cubes(phi):
            for lo, q in self._quotient_views(closed):
                for box in self.base.boxes:
                    finite_profile: Optional[dict[str, int]] = {}
                    possible = True
                    for s in self.signature.sorts:
                        needs = lo if s == SIGMA else least_size(closed, s)
                        m = box[s].min_finite_geq(needs)
                        if m is None:
                            finite_profile = None
                            if not box[s].infinite:
                                possible = False
                                break
                        elif finite_profile is not None:
                            finite_profile[s] = m
                    if not possible:
                        continue
                    if finite_profile is not None:
                        return SatResult(
                            True, self._model_at(closed, q, finite_profile, phi)
                        )
                    saw_infinite = True
        if saw_infinite:
            return SatResult(True, None, note="satisfiable; every fitting member is infinite")
        return SatResult(False)

    def _model_at(
        self, closed: ClosedCube, q, profile: dict[str, int], phi: Formula
    ) -> Interpretation:
        m_sigma = profile[SIGMA]
        sigma_ids = [
            i for i, b in enumerate(q.blocks) if closed.sort_of[next(iter(b))] == SIGMA
        ]
        frees = set(_free_classes(closed, SIGMA))
        free_blocks = [i for i in sigma_ids if q.blocks[i] <= frees]
        fold = free_blocks[: max(0, len(sigma_ids) - m_sigma)]
        kept = [i for i in sigma_ids if i not in fold]
        element = {b: e for e, b in enumerate(kept)}
        for b in fold:
            element[b] = 0
        table = list(range(m_sigma))
        for b, t in q.s_edge.items():
            table[element[b]] = element[t]
        assert psi_vee_holds(tuple(table))
        assignment: dict[str, int] = {}
        for b in sigma_ids:
            for cls in q.blocks[b]:
                for t in closed.classes[cls]:
                    if isinstance(t, Var):
                        assignment[t.name] = element[b]
        for s in self.signature.sorts:
            if s == SIGMA:
                continue
            nodes = closed.classes_of_sort(s)
            coloring = color_with(nodes, closed.diseq_adjacency(s), profile[s])
            assert coloring is not None
            for i in nodes:
                for t in closed.classes[i]:
                    if isinstance(t, Var):
                        assignment[t.name] = coloring[i]
        structure = FiniteStructure(self.signature, dict(profile), {S_FUN: tuple(table)})
        return Interpretation(structure, _fill_unpinned(assignment, phi))

    def sat_infinite(self, phi: Formula) -> bool:
        self.validate(phi)
        if not any(
            all(box[s].infinite for s in self.signature.sorts) for box in self.base.boxes
        ):
            return False
        return any(
            True for closed in sat_cubes(phi) for _ in self._quotient_views(closed)
        )

    def _quotient_views(self, closed: ClosedCube) -> Iterator[tuple[int, Quotient]]:
        """Chain-valid quotients, each with its least reachable sigma size."""
        frees, qs = _constrained_quotients(closed, self.QUOTIENT_CAP)
        for q in qs:
            if not _chain_valid(q.s_edge):
                continue
            sigma_blocks = sum(
                1 for b in q.blocks if closed.sort_of[next(iter(b))] == SIGMA
            )
            yield _blocks_floor(sigma_blocks, len(frees)), q

    def sat_at_profile(self, phi: Formula, profile: dict[str, int]) -> bool:
        self.validate(phi)
        if not any(
            all(box[s].admits(profile[s]) for s in self.signature.sorts)
            for box in self.base.boxes
        ):
            return False
        for closed in sat_cubes(phi):
            if any(
                s != SIGMA and least_size(closed, s) > profile[s]
                for s in self.signature.sorts
            ):
                continue
            for lo, _q in self._quotient_views(closed):
                if lo <= profile[SIGMA]:
                    return True
        return False

    def finite_sat(self, phi: Formula) -> bool:
        self.validate(phi)
        for closed in sat_cubes(phi):
            for lo, _q in self._quotient_views(closed):
                for box in self.base.boxes:
                    if box[SIGMA].min_finite_geq(lo) is None:
                        continue
                    if all(
                        box[s].min_finite_geq(least_size(closed, s)) is not None
                        for s in self.signature.sorts
                        if s != SIGMA
                    ):
                        return True
        return False

    def is_member(self, structure: FiniteStructure) -> bool:
        if not psi_vee_holds(structure.tables[S_FUN]):
            return False
        reduct = FiniteStructure(self.base.signature, dict(structure.sizes))
        return self.base.is_member(reduct)

    def member_profiles(self, bound: int) -> list[dict[str, int]]:
        return self.base.member_profiles(bound)

    def member_structures(self, profile: dict[str, int]) -> list[FiniteStructure]:
        reduct = FiniteStructure(self.base.signature, dict(profile))
        if not self.base.is_member(reduct):
            return []
        out = []
        m = profile[SIGMA]
        for table in itertools.product(range(m), repeat=m):
            if psi_vee_holds(table):
                out.append(FiniteStructure(self.signature, dict(profile), {S_FUN: table}))
        return out

    def mincard(self, phi: Formula) -> MincardResult:
        if not self.one_sorted:
            raise TheoryError("mincard needs a one-sorted theory")
        self.validate(phi)
        best: Optional[int] = None
        consistent = False
        for closed in sat_cubes(phi):
            consistent = True
            for lo, _q in self._quotient_views(closed):
                for box in self.base.boxes:
                    m = box[SIGMA].min_finite_geq(lo)
                    if m is not None and (best is None or m < best):
                        best = m
        if best is not None:
            return best
        if consistent and self.sat_infinite(phi):
            return INFINITE
        return UNSAT

    def small_model_bound(self, phi: Formula) -> dict[str, int]:
        self.validate(phi)
        sigma_terms = len([t for t in terms_of(phi) if t.sort == SIGMA])
        out = {s: 1 for s in self.signature.sorts}
        out[SIGMA] = max(1, 3 * sigma_terms)
        for box in self.base.boxes:
            for s in self.signature.sorts:
                m = box[s].min_finite_geq(1)
                if m is not None:
                    out[s] = max(out[s], m)
        return out

    def covering_interpretation(self, psi: Formula) -> Optional[Interpretation]:
        self.validate(psi)
        for closed in sat_cubes(psi):
            sigma_classes = closed.classes_of_sort(SIGMA)
            if any(
                not any(isinstance(t, Var) for t in closed.classes[i])
                for i in sigma_classes
            ):
                continue
            if not _chain_valid(closed.s_edge):
                continue
            frees = _free_classes(closed, SIGMA)
            t_sigma = len(sigma_classes)
            for box in self.base.boxes:
                for m_sigma in range(max(1, t_sigma - len(frees)), t_sigma + 1):
                    if not box[SIGMA].admits(m_sigma):
                        continue
                    candidate = self._cover_at(closed, box, m_sigma, frees, psi)
                    if candidate is not None:
                        return candidate
        return None

    def _cover_at(
        self,
        closed: ClosedCube,
        box: Box,
        m_sigma: int,
        frees: list[int],
        psi: Formula,
    ) -> Optional[Interpretation]:
        sigma_classes = closed.classes_of_sort(SIGMA)
        t_sigma = len(sigma_classes)
        merged: dict[int, int] = {}
        to_merge = frees[: t_sigma - m_sigma]
        anchors = [i for i in sigma_classes if i not in to_merge]
        if not anchors:
            return None
        for i in to_merge:
            merged[i] = anchors[0]
        element: dict[int, int] = {}
        for pos, i in enumerate(anchors):
            element[i] = pos
        for i in to_merge:
            element[i] = element[merged[i]]

        table = list(range(m_sigma))
        for i, j in closed.s_edge.items():
            a, b = element[i], element[j]
            if table[a] != a and table[a] != b:
                return None
            table[a] = b
        if not psi_vee_holds(tuple(table)):
            return None

        profile = {SIGMA: m_sigma}
        assignment: dict[str, int] = {}
        for i in sigma_classes:
            for t in closed.classes[i]:
                if isinstance(t, Var):
                    assignment[t.name] = element[i]
        for s in self.signature.sorts:
            if s == SIGMA:
                continue
            t_s = len(closed.classes_of_sort(s))
            chi = least_size(closed, s)
            m_s = box[s].min_finite_geq(chi)
            if m_s is None or m_s > t_s:
                return None
            coloring = exact_coloring(closed, s, m_s)
            if coloring is None:
                return None
            profile[s] = m_s
            for i, color in coloring.items():
                for t in closed.classes[i]:
                    if isinstance(t, Var):
                        assignment[t.name] = color
        structure = FiniteStructure(self.signature, profile, {S_FUN: tuple(table)})
        return self.checked_cover(
            Interpretation(structure, _fill_unpinned(assignment, psi)), psi
        )


def _free_classes(closed: ClosedCube, sort: str) -> list[int]:
    """Classes that no disequality or chain edge constrains (safe to merge)."""
    pinned: set[int] = set()
    for a, b in closed.diseqs:
        pinned.add(a)
        pinned.add(b)
    for a, b in closed.s_edge.items():
        pinned.add(a)
        pinned.add(b)
    return [
        i
        for i in closed.classes_of_sort(sort)
        if i not in pinned and all(isinstance(t, Var) for t in closed.classes[i])
    ]


def _constrained_quotients(closed: ClosedCube, cap: int):
    """Quotients that merge only constrained classes; free pads stay singleton.

    A free class can join any block without invalidating anything, so the
    exact block-count range is [n_blocks - #frees (floored at one), n_blocks].
    Returns the free list plus the quotient iterator.
    """
    frees = _free_classes(closed, SIGMA)
    ground = [i for i in closed.classes_of_sort(SIGMA) if i not in frees]
    return frees, quotients(closed, SIGMA, cap=cap, restrict=ground)


def _blocks_floor(n_blocks: int, n_frees: int) -> int:
    if n_blocks > n_frees:
        return n_blocks - n_frees
    return 1 if n_blocks else 0


def _fill_unpinned(assignment: dict[str, int], phi: Formula) -> dict[str, int]:
    # variables living only in branches the cube skipped are unconstrained
    for v in vars_of(phi):
        assignment.setdefault(v.name, 0)
    return assignment


def _has_nontrivial_model(base: EmptyTheory) -> bool:
    return any(
        box[SIGMA].infinite or box[SIGMA].min_finite_geq(2) is not None
        for box in base.boxes
    )


# ---------------------------------------------------------------------------
# the fixpoint-counting family


class TfTheory(Theory):
    """One unary s; a structure of size m has exactly f1(m) fixpoints."""

    QUOTIENT_CAP = 9

    def __init__(self, f: FofFunction, name: str, flags: TheoryFlags, witness_fn) -> None:
        super().__init__(name, Signature((SIGMA,), (FunDecl(S_FUN, SIGMA, SIGMA),)), flags, witness_fn)
        self.f = f

    def _counts(self, closed: ClosedCube) -> tuple[int, int, int]:
        fixed = sum(1 for b, t in closed.s_edge.items() if t == b)
        moved = sum(1 for b, t in closed.s_edge.items() if t != b)
        return len(closed.classes), fixed, moved

    def _feasible(self, m: int, blocks: int, fixed: int, moved: int) -> bool:
        return blocks <= m and fixed <= self.f.f1(m) and moved <= self.f.f0(m)

    def _upper(self, blocks: int) -> int:
        return 2 ** (_pow2_at_least(max(blocks, 1)) + 1)

    def qf_sat(self, phi: Formula) -> SatResult:
        self.validate(phi)
        for closed in sat_cubes(phi):
            t, fixed, moved = self._counts(closed)
            for m in range(1, self._upper(t) + 1):
                if self._feasible(m, t, fixed, moved):
                    return SatResult(True, self._model_at(closed, m, phi))
        return SatResult(False)

    def _model_at(self, closed: ClosedCube, m: int, phi: Formula) -> Interpretation:
        t = len(closed.classes)
        element = {i: i for i in range(t)}
        table: list[Optional[int]] = [None] * m
        for i, j in closed.s_edge.items():
            table[element[i]] = element[j]
        forced_fixed = {element[i] for i, j in closed.s_edge.items() if i == j}
        need_fixed = self.f.f1(m) - len(forced_fixed)
        for e in range(m):
            if table[e] is None and need_fixed > 0:
                table[e] = e
                need_fixed -= 1
        for e in range(m):
            if table[e] is None:
                table[e] = (e + 1) % m if (e + 1) % m != e else (e + 2) % m
        structure = FiniteStructure(self.signature, {SIGMA: m}, {S_FUN: tuple(table)})
        assignment = {
            t2.name: element[i]
            for i, cls in enumerate(closed.classes)
            for t2 in cls
            if isinstance(t2, Var)
        }
        return Interpretation(structure, _fill_unpinned(assignment, phi))

    def sat_infinite(self, phi: Formula) -> bool:
        self.validate(phi)
        return any(True for _ in sat_cubes(phi))

    def _quotient_triples(self, phi: Formula) -> Iterator[tuple[int, int, int]]:
        for closed in sat_cubes(phi):
            frees, quots = _constrained_quotients(closed, self.QUOTIENT_CAP)
            for q in quots:
                yield (
                    _blocks_floor(q.n_blocks, len(frees)),
                    q.fixed_blocks,
                    q.moved_blocks,
                )

    def sat_at_profile(self, phi: Formula, profile: dict[str, int]) -> bool:
        self.validate(phi)
        m = profile[SIGMA]
        return any(self._feasible(m, *triple) for triple in self._quotient_triples(phi))

    def finite_sat(self, phi: Formula) -> bool:
        self.validate(phi)
        return self.qf_sat(phi).sat

    def is_member(self, structure: FiniteStructure) -> bool:
        table = structure.tables[S_FUN]
        return fixpoint_count(table) == self.f.f1(len(table))

    def member_profiles(self, bound: int) -> list[dict[str, int]]:
        return [{SIGMA: m} for m in range(1, bound + 1)]

    def member_structures(self, profile: dict[str, int]) -> list[FiniteStructure]:
        m = profile[SIGMA]
        want = self.f.f1(m)
        out = []
        for table in itertools.product(range(m), repeat=m):
            if fixpoint_count(table) == want:
                out.append(FiniteStructure(self.signature, dict(profile), {S_FUN: table}))
        return out

    def mincard(self, phi: Formula) -> MincardResult:
        self.validate(phi)
        triples = list(self._quotient_triples(phi))
        if not triples:
            return UNSAT
        upper = self._upper(max(t for t, _, _ in triples))
        for m in range(1, upper + 1):
            if any(self._feasible(m, *triple) for triple in triples):
                return m
        return INFINITE

    def small_model_bound(self, phi: Formula) -> dict[str, int]:
        self.validate(phi)
        zs = sorted(vars_of(phi, SIGMA), key=lambda v: v.name)
        depth = {z: 0 for z in zs}
        for t in terms_of(phi):
            depth[term_root(t)] = max(depth[term_root(t)], term_depth(t))
        big_m = sum(d + 2 for d in depth.values())
        k = _pow2_at_least(2 * big_m) if big_m else 1
        return {SIGMA: 2 ** (k + 1)}

    def covering_interpretation(self, psi: Formula) -> Optional[Interpretation]:
        self.validate(psi)
        for closed in sat_cubes(psi):
            if any(
                not any(isinstance(t, Var) for t in cls) for cls in closed.classes
            ):
                continue
            frees = _free_classes(closed, SIGMA)
            t, fixed, moved = self._counts(closed)
            for m in range(max(1, t - len(frees)), t + 1):
                if not (fixed <= self.f.f1(m) and moved <= self.f.f0(m)):
                    continue
                candidate = self._cover_at(closed, m, frees, psi)
                if candidate is not None:
                    return candidate
        return None

    def _cover_at(
        self, closed: ClosedCube, m: int, frees: list[int], psi: Formula
    ) -> Optional[Interpretation]:
        t = len(closed.classes)
        to_merge = frees[: t - m]
        anchors = [i for i in range(t) if i not in to_merge]
        if len(anchors) != m:
            return None
        element = {i: pos for pos, i in enumerate(anchors)}
        for i in to_merge:
            element[i] = 0
        table: list[Optional[int]] = [None] * m
        for i, j in closed.s_edge.items():
            e = element[i]
            if table[e] is not None and table[e] != element[j]:
                return None
            table[e] = element[j]
        need_fixed = self.f.f1(m) - sum(1 for e in range(m) if table[e] == e)
        if need_fixed < 0:
            return None
        for e in range(m):
            if table[e] is None and need_fixed > 0:
                table[e] = e
                need_fixed -= 1
        if need_fixed > 0:
            return None
        for e in range(m):
            if table[e] is None:
                if m == 1:
                    return None
                table[e] = (e + 1) % m if (e + 1) % m != e else (e + 2) % m
        assignment = {
            v.name: element[i]
            for i, cls in enumerate(closed.classes)
            for v in cls
            if isinstance(v, Var)
        }
        structure = FiniteStructure(self.signature, {SIGMA: m}, {S_FUN: tuple(table)})
        return self.checked_cover(
            Interpretation(structure, _fill_unpinned(assignment, psi)), psi
        )


class TfsTheory(Theory):
    """The fixpoint-counting theory with the chain-closure axiom on top.

    Elements are fixpoints, two-cycle members, or leaves pointing at a
    fixpoint, with exactly f1(m) fixpoints at size m.
    """

    QUOTIENT_CAP = 9

    def __init__(self, f: FofFunction, name: str, flags: TheoryFlags, witness_fn) -> None:
        super().__init__(name, Signature((SIGMA,), (FunDecl(S_FUN, SIGMA, SIGMA),)), flags, witness_fn)
        self.f = f

    # role letters: F fixpoint, C two-cycle member, L leaf onto a fixpoint

    def _role_options(self, s_edge: dict[int, int]) -> Iterator[dict[int, str]]:
        involved = sorted(set(s_edge) | set(s_edge.values()))
        for combo in itertools.product("FCL", repeat=len(involved)):
            roles = dict(zip(involved, combo))
            if self._roles_ok(roles, s_edge):
                yield roles

    @staticmethod
    def _roles_ok(roles: dict[int, str], s_edge: dict[int, int]) -> bool:
        for b, c in s_edge.items():
            rb, rc = roles[b], roles.get(c, None)
            if rb == "F":
                if c != b:
                    return False
            else:
                if c == b:
                    return False
                if rb == "C":
                    if rc != "C":
                        return False
                    back = s_edge.get(c)
                    if back is not None and back != b:
                        return False
                if rb == "L" and rc != "F":
                    return False
        for b, c in s_edge.items():
            if roles[b] == "C" and roles.get(c) == "C":
                third = s_edge.get(c)
                if third is not None and third != b:
                    return False
        return True

    def _role_stats(self, roles: dict[int, str], s_edge: dict[int, int]) -> tuple[int, int, int]:
        n_f = sum(1 for r in roles.values() if r == "F")
        n_moved = sum(1 for r in roles.values() if r != "F")
        unpaired_c = 0
        for b, r in roles.items():
            if r != "C":
                continue
            c = s_edge.get(b)
            if c is None or roles.get(c) != "C":
                partner_back = any(
                    s_edge.get(other) == b and roles.get(other) == "C" for other in roles
                )
                if not partner_back:
                    unpaired_c += 1
        return n_f, n_moved, unpaired_c

    def _feasible(self, m: int, blocks: int, n_f: int, n_moved: int, unpaired_c: int) -> bool:
        if blocks + unpaired_c > m:
            return False
        return n_f <= self.f.f1(m) and n_moved + unpaired_c <= self.f.f0(m)

    def _option_tuples(self, phi: Formula) -> Iterator[tuple[int, int, int, int]]:
        """(least block count, forced fixpoints, forced moved, cycle members needing pads)."""
        for closed in sat_cubes(phi):
            frees, quots = _constrained_quotients(closed, self.QUOTIENT_CAP)
            for q in quots:
                lo = _blocks_floor(q.n_blocks, len(frees))
                for roles in self._role_options(q.s_edge):
                    n_f, n_moved, unpaired_c = self._role_stats(roles, q.s_edge)
                    yield lo, n_f, n_moved, unpaired_c

    def qf_sat(self, phi: Formula) -> SatResult:
        self.validate(phi)
        for closed in sat_cubes(phi):
            _, quots = _constrained_quotients(closed, self.QUOTIENT_CAP)
            for q in quots:
                for roles in self._role_options(q.s_edge):
                    n_f, n_moved, unpaired_c = self._role_stats(roles, q.s_edge)
                    blocks = q.n_blocks
                    upper = 2 ** (_pow2_at_least(max(blocks + unpaired_c, 1)) + 1)
                    for m in range(1, upper + 1):
                        if self._feasible(m, blocks, n_f, n_moved, unpaired_c):
                            model = self._model_at(closed, q, roles, m, phi)
                            if model is not None:
                                return SatResult(True, model)
        return SatResult(False)

    def _model_at(
        self, closed: ClosedCube, q, roles: dict[int, str], m: int, phi: Formula
    ) -> Optional[Interpretation]:
        t = q.n_blocks
        element = {i: i for i in range(t)}
        table: list[Optional[int]] = [None] * m
        for i, j in q.s_edge.items():
            table[element[i]] = element[j]
        # finish the forced roles
        free_pads = list(range(t, m))
        for b, r in roles.items():
            e = element[b]
            if r == "C" and table[e] is not None:
                partner = table[e]
                if table[partner] is None:
                    table[partner] = e
            if r == "C" and table[e] is None:
                if not free_pads:
                    return None
                p = free_pads.pop()
                table[e] = p
                table[p] = e
        n_fixed = sum(1 for e in range(m) if table[e] == e)
        want_fixed = self.f.f1(m)
        slots = [e for e in range(m) if table[e] is None]
        if n_fixed > want_fixed or want_fixed - n_fixed > len(slots):
            return None
        for _ in range(want_fixed - n_fixed):
            e = slots.pop(0)
            table[e] = e
        # remaining slots become two-cycles, plus one leaf if odd
        while len(slots) >= 2:
            a, b = slots.pop(0), slots.pop(0)
            table[a], table[b] = b, a
        if slots:
            e = slots.pop()
            fixed = next((x for x in range(m) if table[x] == x), None)
            if fixed is None:
                return None
            table[e] = fixed
        tbl = tuple(table)  # type: ignore[arg-type]
        if not psi_vee_holds(tbl) or fixpoint_count(tbl) != want_fixed:
            return None
        assignment = {
            v.name: element[bi]
            for bi, block in enumerate(q.blocks)
            for cls in block
            for v in closed.classes[cls]
            if isinstance(v, Var)
        }
        structure = FiniteStructure(self.signature, {SIGMA: m}, {S_FUN: tbl})
        candidate = Interpretation(structure, assignment)
        if not evaluate(closed_cube_formula(closed), candidate):
            return None
        return Interpretation(structure, _fill_unpinned(assignment, phi))

    def sat_infinite(self, phi: Formula) -> bool:
        self.validate(phi)
        return any(True for _ in self._option_tuples(phi))

    def sat_at_profile(self, phi: Formula, profile: dict[str, int]) -> bool:
        self.validate(phi)
        m = profile[SIGMA]
        return any(self._feasible(m, *o) for o in self._option_tuples(phi))

    def finite_sat(self, phi: Formula) -> bool:
        return self.qf_sat(phi).sat

    def is_member(self, structure: FiniteStructure) -> bool:
        table = structure.tables[S_FUN]
        return psi_vee_holds(table) and fixpoint_count(table) == self.f.f1(len(table))

    def member_profiles(self, bound: int) -> list[dict[str, int]]:
        return [{SIGMA: m} for m in range(1, bound + 1)]

    def member_structures(self, profile: dict[str, int]) -> list[FiniteStructure]:
        m = profile[SIGMA]
        want = self.f.f1(m)
        out = []
        for table in itertools.product(range(m), repeat=m):
            if psi_vee_holds(table) and fixpoint_count(table) == want:
                out.append(FiniteStructure(self.signature, dict(profile), {S_FUN: table}))
        return out

    def mincard(self, phi: Formula) -> MincardResult:
        self.validate(phi)
        options = list(self._option_tuples(phi))
        if not options:
            return UNSAT
        upper = 2 ** (_pow2_at_least(max(max(o[0] + o[3] for o in options), 1)) + 1)
        for m in range(1, upper + 1):
            if any(self._feasible(m, *o) for o in options):
                return m
        return INFINITE

    def small_model_bound(self, phi: Formula) -> dict[str, int]:
        self.validate(phi)
        n = len(vars_of(phi, SIGMA))
        k = _pow2_at_least(2 * n + 1) if n else 1
        return {SIGMA: 2 ** (k + 1)}

    def covering_interpretation(self, psi: Formula) -> Optional[Interpretation]:
        self.validate(psi)
        for closed in sat_cubes(psi):
            frees, quots = _constrained_quotients(closed, self.QUOTIENT_CAP)
            free_set = set(frees)
            for q in quots:
                if any(
                    not any(
                        isinstance(t, Var)
                        for cls in block
                        for t in closed.classes[cls]
                    )
                    for block in q.blocks
                ):
                    continue
                droppable = [
                    bi
                    for bi, block in enumerate(q.blocks)
                    if len(block) == 1 and next(iter(block)) in free_set
                ]
                for roles in self._role_options(q.s_edge):
                    for k in range(len(droppable) + 1):
                        candidate = self._cover_exact(
                            closed, q, roles, droppable[:k], psi
                        )
                        if candidate is not None:
                            return candidate
        return None

    def _cover_exact(
        self, closed: ClosedCube, q, roles: dict[int, str], dropped: list[int], psi: Formula
    ) -> Optional[Interpretation]:
        kept = [bi for bi in range(q.n_blocks) if bi not in dropped]
        m = len(kept)
        if m < 1:
            return None
        element = {bi: pos for pos, bi in enumerate(kept)}
        for bi in dropped:
            element[bi] = 0
        table: list[Optional[int]] = [None] * m
        for b, c in q.s_edge.items():
            e = element[b]
            if table[e] is not None and table[e] != element[c]:
                return None
            table[e] = element[c]
        # pair up cycle members whose partner edge is implicit
        for b, r in roles.items():
            if r != "C":
                continue
            e = element[b]
            partner = table[e]
            if partner is None:
                return None  # no pads exist under coverage; partner must be forced
            if table[partner] is None:
                table[partner] = e
        slots = [e for e in range(m) if table[e] is None]
        n_fixed = sum(1 for e in range(m) if table[e] == e)
        want = self.f.f1(m)
        if n_fixed > want or want - n_fixed > len(slots):
            return None
        for _ in range(want - n_fixed):
            e = slots.pop(0)
            table[e] = e
        while len(slots) >= 2:
            a, b = slots.pop(0), slots.pop(0)
            table[a], table[b] = b, a
        if slots:
            e = slots.pop()
            fixed = next((x for x in range(m) if table[x] == x), None)
            if fixed is None:
                return None
            table[e] = fixed
        if None in table:
            return None
        tbl = tuple(table)  # type: ignore[arg-type]
        if not psi_vee_holds(tbl) or fixpoint_count(tbl) != want:
            return None
        assignment = {
            v.name: element[bi]
            for bi, block in enumerate(q.blocks)
            for cls in block
            for v in closed.classes[cls]
            if isinstance(v, Var)
        }
        structure = FiniteStructure(self.signature, {SIGMA: m}, {S_FUN: tbl})
        return self.checked_cover(
            Interpretation(structure, _fill_unpinned(assignment, psi)), psi
        )


def closed_cube_formula(closed: ClosedCube) -> Formula:
    from .logic import cube_formula

    return cube_formula(closed.cube)


# ---------------------------------------------------------------------------
# fixpoint-free (except trivially) theories


class TneqTheory(Theory):
    """s is fixpoint-free except on designated tiny structures.

    kind 'odd':    members are trivial, or fixpoint-free with odd/infinite size
    kind 'one_inf': members are trivial or infinite fixpoint-free
    kind 'two_inf': members are two elements with s = identity, or infinite
                    fixpoint-free
    """

    QUOTIENT_CAP = 9

    def __init__(self, kind: str, name: str, flags: TheoryFlags, witness_fn) -> None:
        super().__init__(name, Signature((SIGMA,), (FunDecl(S_FUN, SIGMA, SIGMA),)), flags, witness_fn)
        if kind not in ("odd", "one_inf", "two_inf"):
            raise TheoryError(f"unknown kind {kind}")
        self.kind = kind

    # -- the two branches ------------------------------------------------------

    def _small_structures(self) -> list[FiniteStructure]:
        if self.kind == "two_inf":
            return [FiniteStructure(self.signature, {SIGMA: 2}, {S_FUN: (0, 1)})]
        return [FiniteStructure(self.signature, {SIGMA: 1}, {S_FUN: (0,)})]

    def _small_sat(self, phi: Formula) -> Optional[Interpretation]:
        variables = tuple(sorted(vars_of(phi), key=lambda v: v.name))
        for structure in self._small_structures():
            for alpha in assignments(structure, variables):
                interp = Interpretation(structure, alpha)
                if evaluate(phi, interp):
                    return interp
        return None

    def _nofix(self, phi: Formula) -> Formula:
        parts = [phi]
        for t in sorted(terms_of(phi), key=term_text):
            parts.append(mk_neq(s_of(t), t))
        return And(tuple(parts))

    def _movers_min_blocks(self, phi: Formula) -> Optional[int]:
        best: Optional[int] = None
        for closed in sat_cubes(self._nofix(phi)):
            frees, quots = _constrained_quotients(closed, self.QUOTIENT_CAP)
            for q in quots:
                if any(t == b for b, t in q.s_edge.items()):
                    continue
                n = _blocks_floor(q.n_blocks, len(frees))
                if best is None or n < best:
                    best = n
        return best

    def _fixfree_model(self, phi: Formula, m: int) -> Optional[Interpretation]:
        for closed in sat_cubes(self._nofix(phi)):
            t = len(closed.classes)
            if t > m:
                continue
            element = {i: i for i in range(t)}
            table: list[Optional[int]] = [None] * m
            bad = False
            for i, j in closed.s_edge.items():
                if element[i] == element[j]:
                    bad = True
                    break
                table[element[i]] = element[j]
            if bad:
                continue
            for e in range(m):
                if table[e] is None:
                    table[e] = (e + 1) % m
                    if table[e] == e:
                        bad = True
            if bad or any(table[e] == e for e in range(m)):
                continue
            structure = FiniteStructure(self.signature, {SIGMA: m}, {S_FUN: tuple(table)})
            assignment = {
                v.name: element[i]
                for i, cls in enumerate(closed.classes)
                for v in cls
                if isinstance(v, Var)
            }
            interp = Interpretation(structure, assignment)
            if evaluate(phi, interp):
                return interp
        return None

    # -- interface --------------------------------------------------------------

    def qf_sat(self, phi: Formula) -> SatResult:
        self.validate(phi)
        small = self._small_sat(phi)
        if small is not None:
            return SatResult(True, small)
        blocks = self._movers_min_blocks(phi)
        if blocks is None:
            return SatResult(False)
        if self.kind == "odd":
            m = max(3, blocks + (blocks % 2 == 0))
            if m % 2 == 0:
                m += 1
            model = self._fixfree_model(phi, m)
            return SatResult(True, model)
        return SatResult(
            True, None, note="satisfiable; every fitting member is infinite"
        )

    def sat_infinite(self, phi: Formula) -> bool:
        self.validate(phi)
        return self._movers_min_blocks(phi) is not None

    def sat_at_profile(self, phi: Formula, profile: dict[str, int]) -> bool:
        self.validate(phi)
        m = profile[SIGMA]
        smalls = {2} if self.kind == "two_inf" else {1}
        if m in smalls:
            for structure in self._small_structures():
                if structure.sizes[SIGMA] != m:
                    continue
                variables = tuple(sorted(vars_of(phi), key=lambda v: v.name))
                for alpha in assignments(structure, variables):
                    if evaluate(phi, Interpretation(structure, alpha)):
                        return True
            return False
        if self.kind != "odd" or m % 2 == 0 or m < 3:
            return False
        blocks = self._movers_min_blocks(phi)
        return blocks is not None and blocks <= m

    def finite_sat(self, phi: Formula) -> bool:
        self.validate(phi)
        if self._small_sat(phi) is not None:
            return True
        return self.kind == "odd" and self._movers_min_blocks(phi) is not None

    def is_member(self, structure: FiniteStructure) -> bool:
        table = structure.tables[S_FUN]
        m = len(table)
        if self.kind == "two_inf":
            return m == 2 and is_identity(table)
        if m == 1:
            return True
        if self.kind == "one_inf":
            return False
        return m % 2 == 1 and _fixfree(table)

    def member_profiles(self, bound: int) -> list[dict[str, int]]:
        if self.kind == "two_inf":
            sizes = [2] if bound >= 2 else []
        elif self.kind == "one_inf":
            sizes = [1]
        else:
            sizes = [m for m in range(1, bound + 1) if m == 1 or m % 2 == 1]
        return [{SIGMA: m} for m in sizes]

    def member_structures(self, profile: dict[str, int]) -> list[FiniteStructure]:
        m = profile[SIGMA]
        out = []
        for table in itertools.product(range(m), repeat=m):
            s = FiniteStructure(self.signature, dict(profile), {S_FUN: table})
            if self.is_member(s):
                out.append(s)
        return out

    def mincard(self, phi: Formula) -> MincardResult:
        self.validate(phi)
        small = self._small_sat(phi)
        if small is not None:
            return small.structure.sizes[SIGMA]
        blocks = self._movers_min_blocks(phi)
        if blocks is None:
            return UNSAT
        if self.kind == "odd":
            m = max(3, blocks)
            if m % 2 == 0:
                m += 1
            return m
        return INFINITE

    def small_model_bound(self, phi: Formula) -> dict[str, int]:
        self.validate(phi)
        chains = len([t for t in terms_of(phi)])
        return {SIGMA: chains + 2}

    def covering_interpretation(self, psi: Formula) -> Optional[Interpretation]:
        self.validate(psi)
        if self.kind != "odd":
            return None
        # trivial branch: everything collapses onto the single element
        structure = self._small_structures()[0]
        names = {v.name for v in vars_of(psi)}
        trivial = self.checked_cover(
            Interpretation(structure, {n: 0 for n in names}), psi
        )
        if trivial is not None:
            return trivial
        for closed in sat_cubes(psi):
            if any(not any(isinstance(t, Var) for t in cls) for cls in closed.classes):
                continue
            if any(b == j for b, j in closed.s_edge.items()):
                continue
            frees = _free_classes(closed, SIGMA)
            t = len(closed.classes)
            for drop in range(0, len(frees) + 1):
                m = t - drop
                if m < 3 or m % 2 == 0:
                    continue
                to_merge = frees[:drop]
                anchors = [i for i in range(t) if i not in to_merge]
                element = {i: pos for pos, i in enumerate(anchors)}
                for i in to_merge:
                    element[i] = 0
                table: list[Optional[int]] = [None] * m
                ok = True
                for i, j in closed.s_edge.items():
                    e, g = element[i], element[j]
                    if e == g or (table[e] is not None and table[e] != g):
                        ok = False
                        break
                    table[e] = g
                if not ok:
                    continue
                for e in range(m):
                    if table[e] is None:
                        table[e] = (e + 1) % m
                tbl = tuple(table)  # type: ignore[arg-type]
                if not _fixfree(tbl):
                    continue
                assignment = {
                    v.name: element[i]
                    for i, cls in enumerate(closed.classes)
                    for v in cls
                    if isinstance(v, Var)
                }
                structure = FiniteStructure(self.signature, {SIGMA: m}, {S_FUN: tbl})
                verified = self.checked_cover(
                    Interpretation(structure, _fill_unpinned(assignment, psi)), psi
                )
                if verified is not None:
                    return verified
        return None


# ---------------------------------------------------------------------------
# the catalog


def _flags(si, sm, fw, sw, cv) -> TheoryFlags:
    return TheoryFlags(si, sm, fw, sw, cv)


def T_geq(n: int) -> EmptyTheory:
    if n < 1:
        raise TheoryError("T_geq parameter must be >= 1")
    w = wit.distinct_pads_witness(n)
    return EmptyTheory(
        f"T_geq:{n}",
        EMPTY_1,
        ({SIGMA: CardSet(lo=n, infinite=True)},),
        _flags(True, True, True, True, True),
        witness=w,
        strong_witness=w,
    )


def T_leq(n: int) -> EmptyTheory:
    if n < 1:
        raise TheoryError("T_leq parameter must be >= 1")
    w = wit.identity_witness()
    return EmptyTheory(
        f"T_leq:{n}",
        EMPTY_1,
        ({SIGMA: CardSet(finite=frozenset(range(1, n + 1)))},),
        _flags(False, False, True, True, n == 1),
        witness=w,
        strong_witness=w,
    )


def T_mn(m: int, n: int) -> EmptyTheory:
    if m < 1 or n < 1 or m == n:
        raise TheoryError("T_mn takes two distinct positive sizes")
    lo, hi = min(m, n), max(m, n)
    side_condition = lo > 1 and hi - lo > 1
    return EmptyTheory(
        f"T_mn:{lo},{hi}",
        EMPTY_1,
        ({SIGMA: CardSet(finite=frozenset((lo, hi)))},),
        _flags(False, False, True, False if side_condition else None, False),
        witness=wit.self_eq_pads_witness({SIGMA: hi}),
    )


def T_inf() -> EmptyTheory:
    return EmptyTheory(
        "T_inf",
        EMPTY_1,
        ({SIGMA: CardSet(infinite=True)},),
        _flags(True, True, False, False, True),
    )


def T_even_inf() -> EmptyTheory:
    return EmptyTheory(
        "T_even_inf",
        EMPTY_1,
        ({SIGMA: CardSet(lo=2, step=2, infinite=True)},),
        _flags(True, False, True, False, True),
        witness=wit.self_eq_pads_witness({SIGMA: 2}),
    )


def T_n_inf(n: int) -> EmptyTheory:
    if n < 1:
        raise TheoryError("T_n_inf parameter must be >= 1")
    return EmptyTheory(
        f"T_n_inf:{n}",
        EMPTY_1,
        ({SIGMA: CardSet(finite=frozenset((n,)), infinite=True)},),
        _flags(True, False, False, False, True),
    )


def T_2_3() -> EmptyTheory:
    return EmptyTheory(
        "T_2_3",
        EMPTY_2,
        (
            {SIGMA: CardSet(finite=frozenset((2,))), SIGMA2: CardSet(infinite=True)},
            {SIGMA: CardSet(lo=3, infinite=True), SIGMA2: CardSet(lo=3, infinite=True)},
        ),
        _flags(True, True, True, False, True),
        witness=wit.self_eq_pads_witness({SIGMA: 3, SIGMA2: 3}),
    )


def T_1_odd() -> EmptyTheory:
    return EmptyTheory(
        "T_1_odd",
        EMPTY_2,
        ({SIGMA: CardSet(finite=frozenset((1,))), SIGMA2: CardSet(lo=1, step=2, infinite=True)},),
        _flags(False, False, True, False, True),
        witness=wit.self_eq_pads_witness({SIGMA: 1, SIGMA2: 1}),
    )


def T_1_inf() -> EmptyTheory:
    return EmptyTheory(
        "T_1_inf",
        EMPTY_2,
        ({SIGMA: CardSet(finite=frozenset((1,))), SIGMA2: CardSet(infinite=True)},),
        _flags(False, False, False, False, True),
    )


def T_2_inf() -> EmptyTheory:
    return EmptyTheory(
        "T_2_inf",
        EMPTY_2,
        ({SIGMA: CardSet(finite=frozenset((2,))), SIGMA2: CardSet(infinite=True)},),
        _flags(False, False, False, False, False),
    )


def T_f(seed: Optional[str] = None) -> TfTheory:
    oracle = oracle_from_seed(seed) if seed else FigureOracle()
    name = "T_f" if seed in (None, "figure") else f"T_f:seed={seed}"
    return TfTheory(
        FofFunction(oracle),
        name,
        _flags(True, True, True, False, True),
        wit.fix_function_witness(),
    )


def T_f_s(seed: Optional[str] = None) -> TfsTheory:
    oracle = oracle_from_seed(seed) if seed else FigureOracle()
    name = "T_f_s" if seed in (None, "figure") else f"T_f_s:seed={seed}"
    return TfsTheory(
        FofFunction(oracle),
        name,
        _flags(True, True, True, False, False),
        wit.squared_chain_witness(),
    )


def T_neq_odd() -> TneqTheory:
    return TneqTheory(
        "odd", "T_neq_odd", _flags(False, False, True, False, True), wit.moving_chain_witness()
    )


def T_neq_1_inf() -> TneqTheory:
    return TneqTheory("one_inf", "T_neq_1_inf", _flags(False, False, False, False, True), None)


def T_neq_2_inf() -> TneqTheory:
    return TneqTheory("two_inf", "T_neq_2_inf", _flags(False, False, False, False, False), None)


def add_fun(base: Theory, name: Optional[str] = None) -> AddFunTheory:
    return AddFunTheory(base, name)


def add_nc(base: Theory, name: Optional[str] = None) -> AddNcTheory:
    return AddNcTheory(base, name)


# ---------------------------------------------------------------------------
# the string grammar


_CALL = re.compile(r"^(add_nc|add_sort|add_fun)\((.+)\)$")

BASE_NAMES = (
    "T_geq:<n>",
    "T_leq:<n>",
    "T_mn:<m>,<n>",
    "T_inf",
    "T_even_inf",
    "T_n_inf:<n>",
    "T_2_3",
    "T_1_odd",
    "T_1_inf",
    "T_2_inf",
    "T_f[:seed=<seed>]",
    "T_f_s[:seed=<seed>]",
    "T_neq_odd",
    "T_neq_1_inf",
    "T_neq_2_inf",
    "add_sort(<theory>)",
    "add_fun(<theory>)",
    "add_nc(<theory>)",
)


def get_theory(spec: str) -> Theory:
    """Resolve a theory name like `T_leq:1` or `add_nc(add_sort(T_geq:2))`."""
    spec = spec.strip()
    call = _CALL.match(spec)
    if call:
        inner = get_theory(call.group(2))
        op = call.group(1)
        try:
            if op == "add_sort":
                return add_sort(inner, spec)
            if op == "add_fun":
                return add_fun(inner, spec)
            return add_nc(inner, spec)
        except TheoryError as e:
            raise TheoryError(f"{spec}: {e}") from None
    head, _, params = spec.partition(":")
    try:
        if head == "T_geq":
            return T_geq(int(params))
        if head == "T_leq":
            return T_leq(int(params))
        if head == "T_mn":
            m, n = (int(x) for x in params.split(","))
            return T_mn(m, n)
        if head == "T_inf" and not params:
            return T_inf()
        if head == "T_even_inf" and not params:
            return T_even_inf()
        if head == "T_n_inf":
            return T_n_inf(int(params))
        if head == "T_2_3" and not params:
            return T_2_3()
        if head == "T_1_odd" and not params:
            return T_1_odd()
        if head == "T_1_inf" and not params:
            return T_1_inf()
        if head == "T_2_inf" and not params:
            return T_2_inf()
        if head == "T_f":
            return T_f(params.removeprefix("seed=") if params else None)
        if head == "T_f_s":
            return T_f_s(params.removeprefix("seed=") if params else None)
        if head == "T_neq_odd" and not params:
            return T_neq_odd()
        if head == "T_neq_1_inf" and not params:
            return T_neq_1_inf()
        if head == "T_neq_2_inf" and not params:
            return T_neq_2_inf()
    except (ValueError, TheoryError) as e:
        raise TheoryError(f"bad theory spec {spec!r}: {e}") from None
    known = "\n  ".join(BASE_NAMES)
    raise TheoryError(f"unknown theory {spec!r}; the catalog has:\n  {known}")


def catalog_specs() -> list[str]:
    """Every catalog instantiation the table report runs over."""
    out: list[str] = []

    def family(base: str) -> list[str]:
        return [base, f"add_sort({base})", f"add_fun({base})", f"add_fun(add_sort({base}))"]

    for n in (1, 2, 3):
        out.extend(family(f"T_geq:{n}"))
        out.append(f"add_nc(T_geq:{n})")
        out.append(f"add_nc(add_sort(T_geq:{n}))")
    out.extend(family("T_inf"))
    out.append("add_nc(T_inf)")
    out.append("add_nc(add_sort(T_inf))")
    out.extend(family("T_even_inf"))
    out.append("add_nc(T_even_inf)")
    out.append("add_nc(add_sort(T_even_inf))")
    for n in (1, 2, 3):
        out.extend(family(f"T_n_inf:{n}"))
        out.append(f"add_nc(T_n_inf:{n})")
        out.append(f"add_nc(add_sort(T_n_inf:{n}))")
    for n in (1, 2, 3):
        out.extend(family(f"T_leq:{n}"))
    for m, n in ((2, 5), (3, 5)):
        out.extend(family(f"T_mn:{m},{n}"))
    out.extend(["T_2_3", "add_nc(T_2_3)", "T_f", "T_f_s"])
    out.extend(["T_1_odd", "T_neq_odd", "add_fun(T_1_odd)"])
    out.extend(["T_1_inf", "T_neq_1_inf", "add_fun(T_1_inf)"])
    out.extend(["T_2_inf", "T_neq_2_inf", "add_fun(T_2_inf)"])
    return out
