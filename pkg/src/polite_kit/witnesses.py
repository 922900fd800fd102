"""Witness constructions: per-theory builders, lifts, and helper transforms.

A witness maps a quantifier-free formula phi to wit(phi) = phi ∧ (bookkeeping)
such that phi and ∃(fresh vars).wit(phi) agree on every member structure, and
satisfiable wit(phi) always has a member model whose domains are exactly the
values of wit(phi)'s variables.  Strong witnesses promise the model even with
an arbitrary arrangement of finitely many variables conjoined.

Builders here are parameterized by numbers (no theory objects); the catalog
attaches them.  Fresh variables live in the reserved '@' namespace, drawn from
a fresh supply per application, so equal inputs give equal outputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .arrangements import enumerate_arrangements
from .logic import (
    SIGMA,
    SIGMA2,
    And,
    Formula,
    FreshSupply,
    Implies,
    Or,
    TRUE,
    Var,
    conj,
    disj,
    erase_s,
    mk_eq,
    mk_neq,
    s_pow,
    subterms,
    term_depth,
    term_root,
    terms_of,
    vars_of,
)
from .models import Interpretation, eval_term

PLAIN = "plain"
STRONG = "strong"

#: psi_of(V, supply) -> the bookkeeping formula for variable set V.
PsiOf = Callable[[tuple[Var, ...], FreshSupply], Formula]
#: extend(phi, interp) -> values for the witness's fresh variables, or None.
Extend = Callable[[Formula, Interpretation], Optional[dict[str, int]]]


@dataclass
class WitnessFn:
    """A witness function: transform plus the hooks the checkers use."""

    kind: str
    label: str
    transform: Callable[[Formula], Formula]
    psi_of: Optional[PsiOf] = None
    extend: Optional[Extend] = None

    def __call__(self, phi: Formula) -> Formula:
        return self.transform(phi)

    @property
    def is_strong(self) -> bool:
        return self.kind == STRONG


def _sorted_vars(phi: Formula, sort: Optional[str] = None) -> tuple[Var, ...]:
    return tuple(sorted(vars_of(phi, sort), key=lambda v: v.name))


def _from_psi(kind: str, label: str, psi_of: PsiOf, extend: Extend) -> WitnessFn:
    """Variable-dependent witness: wit(phi) = phi ∧ psi(vars(phi))."""

    def transform(phi: Formula) -> Formula:
        return And((phi, psi_of(_sorted_vars(phi), FreshSupply())))

    return WitnessFn(kind, label, transform, psi_of, extend)


# ---------------------------------------------------------------------------
# witnesses for the base catalog theories


def identity_witness(label: str = "identity") -> WitnessFn:
    """wit(phi) = phi ∧ true; strong wherever it is registered."""

    def psi(vs: tuple[Var, ...], supply: FreshSupply) -> Formula:
        return TRUE

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        return {}

    return _from_psi(STRONG, label, psi, extend)


def distinct_pads_witness(n: int, kind: str = STRONG, label: str = "distinct-pads") -> WitnessFn:
    """n fresh sigma variables held pairwise distinct (self-equal when n = 1)."""

    def psi(vs: tuple[Var, ...], supply: FreshSupply) -> Formula:
        pads = supply.take(SIGMA, n)
        if n == 1:
            return mk_eq(pads[0], pads[0])
        return conj(mk_neq(a, b) for i, a in enumerate(pads) for b in pads[i + 1 :])

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        if interp.structure.sizes[SIGMA] < n:
            return None
        return {f"@w{i + 1}": i for i in range(n)}

    return _from_psi(kind, label, psi, extend)


def self_eq_pads_witness(
    counts: dict[str, int], kind: str = PLAIN, label: str = "self-eq-pads"
) -> WitnessFn:
    """Fresh self-equal variables per sort: pure padding for coverage."""

    order = sorted(counts)

    def psi(vs: tuple[Var, ...], supply: FreshSupply) -> Formula:
        parts = []
        for sort in order:
            for v in supply.take(sort, counts[sort]):
                parts.append(mk_eq(v, v))
        return conj(parts) if parts else TRUE

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        out: dict[str, int] = {}
        i = 0
        for sort in order:
            for _ in range(counts[sort]):
                i += 1
                out[f"@w{i}"] = 0
        return out

    return _from_psi(kind, label, psi, extend)


def _grid_rows(
    phi: Formula, top_extra: int, sigma_sort: str = SIGMA
) -> tuple[tuple[Var, ...], tuple[int, ...], tuple[tuple[Var, ...], ...]]:
    """Chain-naming grid for phi's sigma variables: rows 0..M_i+top_extra."""
    zs = _sorted_vars(phi, sigma_sort)
    depth = {z: 0 for z in zs}
    for t in terms_of(phi):
        root = term_root(t)
        if root.sort == sigma_sort:
            depth[root] = max(depth[root], term_depth(t))
    bounds = tuple(depth[z] for z in zs)
    rows = tuple(
        tuple(Var(f"@y{i + 1}_{j}", sigma_sort) for j in range(bounds[i] + top_extra + 1))
        for i in range(len(zs))
    )
    return zs, bounds, rows


def _grid_formula(zs: tuple[Var, ...], rows: tuple[tuple[Var, ...], ...]) -> Formula:
    parts = []
    for i, z in enumerate(zs):
        for j, y in enumerate(rows[i]):
            parts.append(mk_eq(y, s_pow(z, j)))
    return conj(parts) if parts else TRUE


def _grid_values(
    zs: tuple[Var, ...], rows: tuple[tuple[Var, ...], ...], interp: Interpretation
) -> dict[str, int]:
    out: dict[str, int] = {}
    for i, z in enumerate(zs):
        for j, y in enumerate(rows[i]):
            out[y.name] = eval_term(s_pow(z, j), interp)
    return out


def _pow2_at_least(x: int) -> int:
    """Smallest k with 2^k >= x (x >= 1)."""
    return max(0, (x - 1).bit_length())


def fix_function_witness(label: str = "fix-function") -> WitnessFn:
    """Chain grid to depth M_i+1 plus 2^(k+1) free pads, 2^k >= twice the grid."""

    def transform(phi: Formula) -> Formula:
        zs, bounds, rows = _grid_rows(phi, top_extra=1)
        big_m = sum(b + 2 for b in bounds)
        k = _pow2_at_least(2 * big_m) if big_m else 1
        supply = FreshSupply()
        pads = supply.take(SIGMA, 2 ** (k + 1))
        return And((phi, _grid_formula(zs, rows), conj(mk_eq(x, x) for x in pads)))

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        zs, bounds, rows = _grid_rows(phi, top_extra=1)
        big_m = sum(b + 2 for b in bounds)
        k = _pow2_at_least(2 * big_m) if big_m else 1
        out = _grid_values(zs, rows, interp)
        for i in range(2 ** (k + 1)):
            out[f"@w{i + 1}"] = 0
        return out

    return WitnessFn(PLAIN, label, transform, None, extend)


def squared_chain_witness(label: str = "squared-chain") -> WitnessFn:
    """Name s(w) and s(s(w)) per variable, plus 2^(k+1) pads with 2^k > 2n."""

    def layout(phi: Formula):
        zs = _sorted_vars(phi, SIGMA)
        n = len(zs)
        k = _pow2_at_least(2 * n + 1) if n else 1
        rows = tuple(
            (Var(f"@y{i + 1}_1", SIGMA), Var(f"@y{i + 1}_2", SIGMA)) for i in range(n)
        )
        return zs, k, rows

    def transform(phi: Formula) -> Formula:
        zs, k, rows = layout(phi)
        parts: list[Formula] = []
        for z, (y, z2) in zip(zs, rows):
            parts.append(mk_eq(y, s_pow(z, 1)))
            parts.append(mk_eq(z2, s_pow(z, 2)))
        supply = FreshSupply()
        pads = supply.take(SIGMA, 2 ** (k + 1))
        parts.extend(mk_eq(x, x) for x in pads)
        return And((phi, conj(parts)))

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        zs, k, rows = layout(phi)
        out: dict[str, int] = {}
        for z, (y, z2) in zip(zs, rows):
            out[y.name] = eval_term(s_pow(z, 1), interp)
            out[z2.name] = eval_term(s_pow(z, 2), interp)
        for i in range(2 ** (k + 1)):
            out[f"@w{i + 1}"] = 0
        return out

    return WitnessFn(PLAIN, label, transform, None, extend)


def moving_chain_witness(label: str = "moving-chain") -> WitnessFn:
    """One free pad plus a chain grid to depth M_i+1 (fixpoint-free theories)."""

    def transform(phi: Formula) -> Formula:
        zs, bounds, rows = _grid_rows(phi, top_extra=1)
        supply = FreshSupply()
        pad = supply.var(SIGMA)
        return And((phi, mk_eq(pad, pad), _grid_formula(zs, rows)))

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        zs, bounds, rows = _grid_rows(phi, top_extra=1)
        out = _grid_values(zs, rows, interp)
        out["@w1"] = 0
        return out

    return WitnessFn(PLAIN, label, transform, None, extend)


# ---------------------------------------------------------------------------
# lifts


def lift_witness(kind: str, base: WitnessFn, label: Optional[str] = None) -> WitnessFn:
    """Transfer a base witness across a signature extension.

    Kinds: `add_sort_plain` / `add_sort_strong` (new free sort, one pad there),
    `add_fun` (new symbol axiomatized as identity: erase it and witness that),
    `add_nc` (new symbol with the two-step closure axiom: name every chain,
    close it, and keep the grid functional).  add_sort and add_nc need the
    base witness in variable-dependent form.
    """
    if kind in ("add_sort_plain", "add_sort_strong"):
        return _lift_add_sort(base, kind.endswith("strong"), label)
    if kind == "add_fun":
        return _lift_add_fun(base, label)
    if kind == "add_nc":
        return _lift_add_nc(base, label)
    raise ValueError(f"unknown lift kind: {kind}")


def _lift_add_sort(base: WitnessFn, strong: bool, label: Optional[str]) -> WitnessFn:
    if base.psi_of is None:
        raise ValueError("add_sort lift needs a variable-dependent base witness")
    base_psi = base.psi_of

    def psi(vs: tuple[Var, ...], supply: FreshSupply) -> Formula:
        sigma_vs = tuple(v for v in vs if v.sort == SIGMA)
        inner = base_psi(sigma_vs, supply)
        parts = [inner]
        if not sigma_vs and not vars_of(inner, SIGMA):
            # nothing names the first sort; coverage needs at least one handle
            pad = supply.var(SIGMA)
            parts.append(mk_eq(pad, pad))
        u = supply.var(SIGMA2)
        parts.append(mk_eq(u, u))
        return And(tuple(parts))

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        out = base.extend(phi, interp) if base.extend else {}
        if out is None:
            return None
        out = dict(out)
        sigma_named = bool(out) or any(v.sort == SIGMA for v in vars_of(phi))
        if not sigma_named:
            out[f"@w{len(out) + 1}"] = 0
        out[f"@w{len(out) + 1}"] = 0
        return out

    return _from_psi(
        STRONG if strong else PLAIN,
        label or f"add-sort({base.label})",
        psi,
        extend,
    )


def _lift_add_fun(base: WitnessFn, label: Optional[str]) -> WitnessFn:
    def transform(phi: Formula) -> Formula:
        return And((phi, base.transform(erase_s(phi))))

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        if base.extend is None:
            return None
        return base.extend(erase_s(phi), interp)

    return WitnessFn(base.kind, label or f"add-fun({base.label})", transform, None, extend)


def _lift_add_nc(base: WitnessFn, label: Optional[str]) -> WitnessFn:
    if base.psi_of is None:
        raise ValueError("add_nc lift needs a variable-dependent base witness")
    base_psi = base.psi_of

    def layout(phi: Formula):
        return _grid_rows(phi, top_extra=2)

    def transform(phi: Formula) -> Formula:
        zs, bounds, rows = layout(phi)
        grid = _grid_formula(zs, rows)
        ys = tuple(v for row in rows for v in row)
        all_vars = _sorted_vars(phi) + ys
        supply = FreshSupply()
        psi = base_psi(all_vars, supply)
        vee = conj(
            Or((mk_eq(row[2], row[1]), mk_eq(row[2], row[0]))) for row in rows
        ) if rows else TRUE
        fun_parts: list[Formula] = []
        for i in range(len(rows)):
            for p in range(len(rows)):
                for j in range(bounds[i] + 1):
                    for q in range(bounds[p] + 1):
                        if i == p and j == q:
                            continue
                        fun_parts.append(
                            Implies(
                                mk_eq(rows[i][j], rows[p][q]),
                                mk_eq(rows[i][j + 1], rows[p][q + 1]),
                            )
                        )
        fun = conj(fun_parts) if fun_parts else TRUE
        return And((phi, psi, grid, vee, fun))

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        zs, bounds, rows = layout(phi)
        out = _grid_values(zs, rows, interp)
        if base.extend is not None:
            pads = base.extend(phi, interp)
            if pads is None:
                return None
            out.update(pads)
        return out

    return WitnessFn(base.kind, label or f"add-nc({base.label})", transform, None, extend)


def variable_dependent(base: WitnessFn, label: Optional[str] = None) -> WitnessFn:
    """Recast any witness over an empty signature in variable-dependent form.

    psi(V) becomes the disjunction, over every arrangement of V, of the
    witness applied to that arrangement's formula.  Kind is preserved.
    """

    def psi(vs: tuple[Var, ...], supply: FreshSupply) -> Formula:
        if not vs:
            return base.transform(TRUE) if base.psi_of is None else TRUE
        options = []
        for arr in enumerate_arrangements(vs):
            options.append(base.transform(arr.formula()))
        return disj(options)

    def extend(phi: Formula, interp: Interpretation) -> Optional[dict[str, int]]:
        if base.extend is None:
            return None
        return base.extend(phi, interp)

    return _from_psi(base.kind, label or f"var-dep({base.label})", psi, extend)


def witness_for(theory) -> Optional[WitnessFn]:
    """The theory's registered witness (plain flavor), if any."""
    return getattr(theory, "witness", None)


def strong_witness_for(theory) -> Optional[WitnessFn]:
    """The theory's registered strong witness, if any."""
    wit = getattr(theory, "strong_witness", None)
    if wit is not None:
        return wit
    wit = getattr(theory, "witness", None)
    if wit is not None and wit.is_strong:
        return wit
    return None
