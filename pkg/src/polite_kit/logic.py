"""Many-sorted equational syntax and the schematic formulas used by the catalog.

Terms are variables or nested applications of a single unary function symbol;
formulas are equalities under boolean connectives with restricted quantifiers.
The transforms here (DNF, s-erasure, daggering) are purely syntactic; evaluation
lives in `models`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Union

SIGMA = "sigma"
SIGMA2 = "sigma2"
S_FUN = "s"

MAX_TERM_DEPTH = 64
MAX_DNF_CUBES = 100_000

#: Names the parser refuses and the witness machinery owns.
RESERVED_PREFIX = "@"


class LogicError(Exception):
    """Ill-formed formula or violated transform precondition."""


# ---------------------------------------------------------------------------
# signatures


@dataclass(frozen=True, slots=True)
class FunDecl:
    name: str
    arg_sort: str
    result_sort: str


@dataclass(frozen=True, slots=True)
class Signature:
    """A set of sorts plus (at most) unary function symbols."""

    sorts: tuple[str, ...]
    functions: tuple[FunDecl, ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.sorts)) != len(self.sorts):
            raise LogicError("duplicate sort names in signature")
        for f in self.functions:
            if f.arg_sort not in self.sorts or f.result_sort not in self.sorts:
                raise LogicError(f"function {f.name} uses undeclared sorts")

    @property
    def is_empty(self) -> bool:
        return not self.functions

    def function(self, name: str) -> Optional[FunDecl]:
        for f in self.functions:
            if f.name == name:
                return f
        return None


EMPTY_1 = Signature((SIGMA,))
EMPTY_2 = Signature((SIGMA, SIGMA2))
SIG_S1 = Signature((SIGMA,), (FunDecl(S_FUN, SIGMA, SIGMA),))
SIG_S2 = Signature((SIGMA, SIGMA2), (FunDecl(S_FUN, SIGMA, SIGMA),))


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    sort: str


@dataclass(frozen=True, slots=True)
class App:
    fn: str
    arg: "Term"
    sort: str


Term = Union[Var, App]


def s_of(t: Term) -> App:
    """Apply the unary symbol once: t ↦ s(t)."""
    return App(S_FUN, t, t.sort)


def s_pow(t: Term, k: int) -> Term:
    for _ in range(k):
        t = s_of(t)
    return t


def term_depth(t: Term) -> int:
    d = 0
    while isinstance(t, App):
        d += 1
        t = t.arg
    return d


def term_root(t: Term) -> Var:
    while isinstance(t, App):
        t = t.arg
    return t


def term_text(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    return f"({t.fn} {term_text(t.arg)})"


def subterms(t: Term) -> Iterator[Term]:
    while isinstance(t, App):
        yield t
        t = t.arg
    yield t


# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True, slots=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True, slots=True)
class Not:
    body: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True, slots=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True, slots=True)
class Exists:
    bound: tuple[Var, ...]
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Forall:
    bound: tuple[Var, ...]
    body: "Formula"


Formula = Union[Eq, Not, And, Or, Implies, Exists, Forall]

TRUE = And(())
FALSE = Or(())


def mk_eq(lhs: Term, rhs: Term) -> Eq:
    """Equality with both sides in one sort, oriented lexicographically."""
    if lhs.sort != rhs.sort:
        raise LogicError(
            f"equality across sorts: {term_text(lhs)}:{lhs.sort} vs {term_text(rhs)}:{rhs.sort}"
        )
    if term_text(rhs) < term_text(lhs):
        lhs, rhs = rhs, lhs
    return Eq(lhs, rhs)


def mk_neq(lhs: Term, rhs: Term) -> Not:
    return Not(mk_eq(lhs, rhs))


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


def formula_text(f: Formula) -> str:
    """Canonical s-expression rendering (the CLI's output syntax)."""
    if isinstance(f, Eq):
        return f"(= {term_text(f.lhs)} {term_text(f.rhs)})"
    if isinstance(f, Not):
        return f"(not {formula_text(f.body)})"
    if isinstance(f, And):
        inner = " ".join(formula_text(a) for a in f.args)
        return f"(and {inner})" if inner else "(and)"
    if isinstance(f, Or):
        inner = " ".join(formula_text(a) for a in f.args)
        return f"(or {inner})" if inner else "(or)"
    if isinstance(f, Implies):
        return f"(=> {formula_text(f.lhs)} {formula_text(f.rhs)})"
    if isinstance(f, (Exists, Forall)):
        head = "exists" if isinstance(f, Exists) else "forall"
        binders = " ".join(f"({v.name} {v.sort})" for v in f.bound)
        return f"({head} ({binders}) {formula_text(f.body)})"
    raise LogicError(f"not a formula: {f!r}")


def vars_of(f: Formula, sort: Optional[str] = None) -> frozenset[Var]:
    """Free variables of f, optionally restricted to one sort."""

    out: set[Var] = set()

    def walk(g: Formula, bound: frozenset[Var]) -> None:
        if isinstance(g, Eq):
            for t in (g.lhs, g.rhs):
                v = term_root(t)
                if v not in bound:
                    out.add(v)
        elif isinstance(g, Not):
            walk(g.body, bound)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a, bound)
        elif isinstance(g, Implies):
            walk(g.lhs, bound)
            walk(g.rhs, bound)
        elif isinstance(g, (Exists, Forall)):
            walk(g.body, bound | frozenset(g.bound))
        else:
            raise LogicError(f"not a formula: {g!r}")

    walk(f, frozenset())
    if sort is not None:
        return frozenset(v for v in out if v.sort == sort)
    return frozenset(out)


def terms_of(f: Formula) -> frozenset[Term]:
    """All subterms appearing in f (free occurrences only)."""

    out: set[Term] = set()

    def walk(g: Formula, bound: frozenset[Var]) -> None:
        if isinstance(g, Eq):
            for t in (g.lhs, g.rhs):
                if term_root(t) not in bound:
                    out.update(subterms(t))
        elif isinstance(g, Not):
            walk(g.body, bound)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a, bound)
        elif isinstance(g, Implies):
            walk(g.lhs, bound)
            walk(g.rhs, bound)
        elif isinstance(g, (Exists, Forall)):
            walk(g.body, bound | frozenset(g.bound))

    walk(f, frozenset())
    return frozenset(out)


def is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, Eq):
        return True
    if isinstance(f, Not):
        return is_quantifier_free(f.body)
    if isinstance(f, (And, Or)):
        return all(is_quantifier_free(a) for a in f.args)
    if isinstance(f, Implies):
        return is_quantifier_free(f.lhs) and is_quantifier_free(f.rhs)
    return False


# ---------------------------------------------------------------------------
# literals and cubes


@dataclass(frozen=True, slots=True)
class Literal:
    lhs: Term
    rhs: Term
    positive: bool

    def formula(self) -> Formula:
        eq = Eq(self.lhs, self.rhs)
        return eq if self.positive else Not(eq)

    def negate(self) -> "Literal":
        return Literal(self.lhs, self.rhs, not self.positive)


Cube = tuple[Literal, ...]


def mk_literal(lhs: Term, rhs: Term, positive: bool) -> Literal:
    if term_text(rhs) < term_text(lhs):
        lhs, rhs = rhs, lhs
    return Literal(lhs, rhs, positive)


def cube_formula(cube: Cube) -> Formula:
    return conj(lit.formula() for lit in cube) if cube else TRUE


def to_dnf(f: Formula) -> list[Cube]:
    """Disjunctive normal form of a quantifier-free formula.

    Returns cubes whose disjunction is equivalent to f.  Literals are
    deduplicated per cube; cubes are not otherwise simplified.
    """

    def pos(g: Formula) -> list[list[Literal]]:
        if isinstance(g, Eq):
            return [[mk_literal(g.lhs, g.rhs, True)]]
        if isinstance(g, Not):
            return neg(g.body)
        if isinstance(g, And):
            return cross([pos(a) for a in g.args])
        if isinstance(g, Or):
            out: list[list[Literal]] = []
            for a in g.args:
                out.extend(pos(a))
            return out
        if isinstance(g, Implies):
            return neg(g.lhs) + pos(g.rhs)
        raise LogicError("to_dnf requires a quantifier-free formula")

    def neg(g: Formula) -> list[list[Literal]]:
        if isinstance(g, Eq):
            return [[mk_literal(g.lhs, g.rhs, False)]]
        if isinstance(g, Not):
            return pos(g.body)
        if isinstance(g, And):
            out: list[list[Literal]] = []
            for a in g.args:
                out.extend(neg(a))
            return out
        if isinstance(g, Or):
            return cross([neg(a) for a in g.args])
        if isinstance(g, Implies):
            return cross([pos(g.lhs), neg(g.rhs)])
        raise LogicError("to_dnf requires a quantifier-free formula")

    def cross(parts: list[list[list[Literal]]]) -> list[list[Literal]]:
        acc: list[list[Literal]] = [[]]
        for choices in parts:
            nxt = []
            for prefix in acc:
                for choice in choices:
                    nxt.append(prefix + choice)
                    if len(nxt) > MAX_DNF_CUBES:
                        raise LogicError("DNF blow-up beyond configured cap")
            acc = nxt
        return acc

    cubes = []
    for raw in pos(f):
        seen: dict[Literal, None] = {}
        for lit in raw:
            seen.setdefault(lit)
        cubes.append(tuple(seen))
    return cubes


def nnf(f: Formula) -> Formula:
    """Negation normal form of a quantifier-free formula."""

    def pos(g: Formula) -> Formula:
        if isinstance(g, Eq):
            return g
        if isinstance(g, Not):
            return neg(g.body)
        if isinstance(g, And):
            return And(tuple(pos(a) for a in g.args))
        if isinstance(g, Or):
            return Or(tuple(pos(a) for a in g.args))
        if isinstance(g, Implies):
            return Or((neg(g.lhs), pos(g.rhs)))
        raise LogicError("nnf requires a quantifier-free formula")

    def neg(g: Formula) -> Formula:
        if isinstance(g, Eq):
            return Not(g)
        if isinstance(g, Not):
            return pos(g.body)
        if isinstance(g, And):
            return Or(tuple(neg(a) for a in g.args))
        if isinstance(g, Or):
            return And(tuple(neg(a) for a in g.args))
        if isinstance(g, Implies):
            return And((pos(g.lhs), neg(g.rhs)))
        raise LogicError("nnf requires a quantifier-free formula")

    return pos(f)


# ---------------------------------------------------------------------------
# cardinality and fixpoint-count schemata


def _fresh_bound(sort: str, n: int, stem: str = "x") -> tuple[Var, ...]:
    return tuple(Var(f"{stem}{i}", sort) for i in range(1, n + 1))


def mk_card_geq(sort: str, n: int) -> Formula:
    """Closed formula: the sort has at least n elements."""
    if n < 0:
        raise LogicError("cardinality bound must be nonnegative")
    if n == 0:
        return TRUE
    xs = _fresh_bound(sort, n)
    body = conj(mk_neq(a, b) for a, b in itertools.combinations(xs, 2)) if n > 1 else TRUE
    return Exists(xs, body)


def mk_card_leq(sort: str, n: int) -> Formula:
    """Closed formula: the sort has at most n elements (n >= 1)."""
    if n < 1:
        raise LogicError("at-most bound must be positive (empty domains are not modeled)")
    xs = _fresh_bound(sort, n)
    y = Var("y", sort)
    return Exists(xs, Forall((y,), disj(mk_eq(y, x) for x in xs)))


def mk_card_eq(sort: str, n: int) -> Formula:
    return And((mk_card_geq(sort, n), mk_card_leq(sort, n)))


def mk_fix_count(kind: str, flavor: str, n: int, sort: str = SIGMA) -> Formula:
    """Count elements fixed (s(a)=a) or moved (s(a)≠a): at-least or exactly n."""
    if kind not in ("geq", "eq"):
        raise LogicError("kind must be 'geq' or 'eq'")
    if flavor not in ("fixed", "moved"):
        raise LogicError("flavor must be 'fixed' or 'moved'")
    if n < 0:
        raise LogicError("count must be nonnegative")

    def atom(v: Var) -> Formula:
        eq = mk_eq(s_of(v), v)
        return eq if flavor == "fixed" else Not(eq)

    def geq(k: int) -> Formula:
        if k == 0:
            return TRUE
        xs = _fresh_bound(sort, k)
        parts = [mk_neq(a, b) for a, b in itertools.combinations(xs, 2)]
        parts.extend(atom(x) for x in xs)
        return Exists(xs, conj(parts))

    if kind == "geq":
        return geq(n)
    return And((geq(n), Not(geq(n + 1))))


def mk_psi_vee(sort: str = SIGMA) -> Formula:
    """The non-convexity axiom: every s-chain closes up within two steps."""
    x = Var("x", sort)
    ssx = s_of(s_of(x))
    return Forall((x,), Or((mk_eq(ssx, x), mk_eq(ssx, s_of(x)))))


# ---------------------------------------------------------------------------
# s-erasure and daggering


def erase_s_term(t: Term) -> Var:
    return term_root(t)


def erase_s(f: Formula) -> Formula:
    """Strip every application of the unary symbol: s^k(x) becomes x."""
    if isinstance(f, Eq):
        return mk_eq(erase_s_term(f.lhs), erase_s_term(f.rhs))
    if isinstance(f, Not):
        return Not(erase_s(f.body))
    if isinstance(f, And):
        return And(tuple(erase_s(a) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(erase_s(a) for a in f.args))
    if isinstance(f, Implies):
        return Implies(erase_s(f.lhs), erase_s(f.rhs))
    if isinstance(f, (Exists, Forall)):
        kind = Exists if isinstance(f, Exists) else Forall
        return kind(f.bound, erase_s(f.body))
    raise LogicError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class DaggerResult:
    """Symbol-free image of a formula plus the grid that names its s-chains."""

    formula: Formula
    order: tuple[Var, ...]  # z_1..z_n: the sigma-sorted variables, name order
    bounds: tuple[int, ...]  # M_i: deepest s-application on z_i in the input
    rows: tuple[tuple[Var, ...], ...]  # row i holds y_{i,0} .. y_{i,M_i+2}

    def grid_vars(self) -> tuple[Var, ...]:
        return tuple(v for row in self.rows for v in row)

    def var_for(self, i: int, j: int) -> Var:
        return self.rows[i][j]


def dagger(f: Formula, sigma_sort: str = SIGMA) -> DaggerResult:
    """Replace every term s^j(z_i) by the grid variable @d{i}_{j}.

    The grid carries two spare rows beyond each variable's deepest occurrence
    (indices 0..M_i+2), which is what the chain-closure machinery needs.
    Variables of other sorts pass through untouched.
    """
    if not is_quantifier_free(f):
        raise LogicError("dagger requires a quantifier-free formula")
    allvars = vars_of(f)
    if not allvars:
        raise LogicError("dagger requires at least one variable")
    if any(v.name.startswith("@d") for v in allvars):
        raise LogicError("the @d namespace is reserved for the elimination grid")
    zs = tuple(sorted((v for v in allvars if v.sort == sigma_sort), key=lambda v: v.name))
    depth: dict[Var, int] = {z: 0 for z in zs}
    for t in terms_of(f):
        root = term_root(t)
        if root.sort == sigma_sort:
            d = term_depth(t)
            if d > MAX_TERM_DEPTH:
                raise LogicError(f"term depth {d} beyond cap {MAX_TERM_DEPTH}")
            depth[root] = max(depth[root], d)
    bounds = tuple(depth[z] for z in zs)
    rows = tuple(
        tuple(Var(f"@d{i + 1}_{j}", sigma_sort) for j in range(bounds[i] + 3))
        for i in range(len(zs))
    )
    index = {z: i for i, z in enumerate(zs)}

    def image(t: Term) -> Term:
        root = term_root(t)
        if root.sort != sigma_sort:
            return t
        return rows[index[root]][term_depth(t)]

    def walk(g: Formula) -> Formula:
        if isinstance(g, Eq):
            return mk_eq(image(g.lhs), image(g.rhs))
        if isinstance(g, Not):
            return Not(walk(g.body))
        if isinstance(g, And):
            return And(tuple(walk(a) for a in g.args))
        if isinstance(g, Or):
            return Or(tuple(walk(a) for a in g.args))
        if isinstance(g, Implies):
            return Implies(walk(g.lhs), walk(g.rhs))
        raise LogicError(f"not a quantifier-free formula: {g!r}")

    return DaggerResult(walk(f), zs, bounds, rows)


def dagger_links(d: DaggerResult) -> Formula:
    """Tie each grid row back to its source variable: y_{i,0} = z_i."""
    return conj(mk_eq(d.rows[i][0], z) for i, z in enumerate(d.order)) if d.order else TRUE


def dagger_vee(d: DaggerResult) -> Formula:
    """Chain closure along each grid row: y_{i,j+2} equals y_{i,j+1} or y_{i,j}."""
    parts = [
        Or((mk_eq(row[j + 2], row[j + 1]), mk_eq(row[j + 2], row[j])))
        for row in d.rows
        for j in range(len(row) - 2)
    ]
    return conj(parts) if parts else TRUE


def dagger_fun(d: DaggerResult) -> Formula:
    """Functionality of the grid: equal cells push equality one step along.

    Covers every cell that has a successor inside its row, which keeps the
    forced fragment of the chain map single-valued and closed.
    """
    parts: list[Formula] = []
    n = len(d.rows)
    for i in range(n):
        for p in range(n):
            for j in range(len(d.rows[i]) - 1):
                for q in range(len(d.rows[p]) - 1):
                    if i == p and j == q:
                        continue
                    parts.append(
                        Implies(
                            mk_eq(d.rows[i][j], d.rows[p][q]),
                            mk_eq(d.rows[i][j + 1], d.rows[p][q + 1]),
                        )
                    )
    return conj(parts) if parts else TRUE


# ---------------------------------------------------------------------------
# fresh variables


class FreshSupply:
    """Deterministic fresh-variable counter in the reserved @-namespace.

    One supply per witness application keeps identical inputs producing
    identical formulas.
    """

    def __init__(self, prefix: str = "@w") -> None:
        self._prefix = prefix
        self._k = 0

    def var(self, sort: str) -> Var:
        self._k += 1
        return Var(f"{self._prefix}{self._k}", sort)

    def take(self, sort: str, count: int) -> tuple[Var, ...]:
        return tuple(self.var(sort) for _ in range(count))
