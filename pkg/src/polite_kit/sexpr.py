"""S-expression reader for formula files.

The surface syntax is a small SMT-LIB-like subset:

    (declare-const x sigma)
    (assert (not (= (s x) x)))

Sorts and the function symbol come from the theory's signature; the reader
checks declarations against it and reports errors with line and column.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .logic import (
    MAX_TERM_DEPTH,
    RESERVED_PREFIX,
    And,
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
    conj,
    mk_eq,
    term_depth,
)

FORMULA_HEADS = ("=", "not", "and", "or", "=>", "exists", "forall")


class SexprError(Exception):
    """Parse or validation failure, with source position when known."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, column {col}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class SAtom:
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class SList:
    items: tuple["SNode", ...]
    line: int
    col: int


SNode = Union[SAtom, SList]


def _tokenize(text: str):
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield (c, line, col)
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and text[i] not in " \t\r\n();":
                i += 1
                col += 1
            yield (text[start:i], line, start_col)
    yield (None, line, col)


def parse_nodes(text: str) -> list[SNode]:
    """Parse source text into a list of top-level s-expressions."""
    stack: list[tuple[list[SNode], int, int]] = []
    top: list[SNode] = []
    for tok, line, col in _tokenize(text):
        if tok is None:
            if stack:
                _, l0, c0 = stack[-1]
                raise SexprError("unbalanced '(' is never closed", l0, c0)
            return top
        if tok == "(":
            stack.append(([], line, col))
        elif tok == ")":
            if not stack:
                raise SexprError("unmatched ')'", line, col)
            items, l0, c0 = stack.pop()
            node = SList(tuple(items), l0, c0)
            (stack[-1][0] if stack else top).append(node)
        else:
            node = SAtom(tok, line, col)
            (stack[-1][0] if stack else top).append(node)
    return top


@dataclass
class Problem:
    """A parsed formula file: declared constants plus the asserted formula."""

    signature: Signature
    consts: dict[str, Var]
    formula: Formula


def _check_name(name: str, what: str, node: SNode) -> None:
    if name.startswith(RESERVED_PREFIX):
        raise SexprError(
            f"{what} '{name}' uses the reserved '@' namespace", node.line, node.col
        )


class _Reader:
    def __init__(self, signature: Signature):
        self.signature = signature
        self.consts: dict[str, Var] = {}

    # -- declarations ------------------------------------------------------

    def declaration(self, node: SList) -> bool:
        if not node.items or not isinstance(node.items[0], SAtom):
            return False
        head = node.items[0].text
        if head == "declare-sort":
            self._declare_sort(node)
        elif head == "declare-fun":
            self._declare_fun(node)
        elif head == "declare-const":
            self._declare_const(node)
        else:
            return False
        return True

    def _declare_sort(self, node: SList) -> None:
        if len(node.items) != 2 or not isinstance(node.items[1], SAtom):
            raise SexprError("expected (declare-sort <name>)", node.line, node.col)
        name = node.items[1].text
        if name not in self.signature.sorts:
            known = ", ".join(self.signature.sorts)
            raise SexprError(
                f"sort '{name}' is not part of this theory (sorts: {known})",
                node.items[1].line,
                node.items[1].col,
            )

    def _declare_fun(self, node: SList) -> None:
        ok = (
            len(node.items) == 4
            and isinstance(node.items[1], SAtom)
            and isinstance(node.items[2], SList)
            and all(isinstance(a, SAtom) for a in node.items[2].items)
            and isinstance(node.items[3], SAtom)
        )
        if not ok:
            raise SexprError(
                "expected (declare-fun <name> (<sort>) <sort>)", node.line, node.col
            )
        name = node.items[1].text
        decl = self.signature.function(name)
        if decl is None:
            raise SexprError(
                f"function '{name}' is not part of this theory", node.items[1].line, node.items[1].col
            )
        args = [a.text for a in node.items[2].items]  # type: ignore[union-attr]
        res = node.items[3].text  # type: ignore[union-attr]
        if args != [decl.arg_sort] or res != decl.result_sort:
            raise SexprError(
                f"function '{name}' has rank ({decl.arg_sort}) -> {decl.result_sort}",
                node.line,
                node.col,
            )

    def _declare_const(self, node: SList) -> None:
        if (
            len(node.items) != 3
            or not isinstance(node.items[1], SAtom)
            or not isinstance(node.items[2], SAtom)
        ):
            raise SexprError("expected (declare-const <name> <sort>)", node.line, node.col)
        name = node.items[1].text
        sort = node.items[2].text
        _check_name(name, "constant", node.items[1])
        if sort not in self.signature.sorts:
            known = ", ".join(self.signature.sorts)
            raise SexprError(
                f"sort '{sort}' is not part of this theory (sorts: {known})",
                node.items[2].line,
                node.items[2].col,
            )
        if name in self.consts and self.consts[name].sort != sort:
            raise SexprError(f"constant '{name}' redeclared at a different sort", node.line, node.col)
        if self.signature.function(name) is not None:
            raise SexprError(f"'{name}' is already a function symbol", node.line, node.col)
        self.consts[name] = Var(name, sort)

    # -- terms and formulas -------------------------------------------------

    def term(self, node: SNode, scope: dict[str, Var]) -> Term:
        if isinstance(node, SAtom):
            name = node.text
            _check_name(name, "variable", node)
            v = scope.get(name) or self.consts.get(name)
            if v is None:
                raise SexprError(
                    f"undeclared constant '{name}' (declare it with (declare-const {name} <sort>))",
                    node.line,
                    node.col,
                )
            return v
        if len(node.items) != 2 or not isinstance(node.items[0], SAtom):
            raise SexprError("expected a variable or (s <term>)", node.line, node.col)
        fn = node.items[0].text
        decl = self.signature.function(fn)
        if decl is None:
            raise SexprError(f"unknown function '{fn}'", node.items[0].line, node.items[0].col)
        arg = self.term(node.items[1], scope)
        if arg.sort != decl.arg_sort:
            raise SexprError(
                f"'{fn}' expects a {decl.arg_sort} argument, got {arg.sort}",
                node.line,
                node.col,
            )
        from .logic import App

        t = App(fn, arg, decl.result_sort)
        if term_depth(t) > MAX_TERM_DEPTH:
            raise SexprError(f"term depth beyond cap {MAX_TERM_DEPTH}", node.line, node.col)
        return t

    def formula(self, node: SNode, scope: dict[str, Var]) -> Formula:
        if isinstance(node, SAtom):
            raise SexprError(
                f"expected a formula, got atom '{node.text}'", node.line, node.col
            )
        if not node.items or not isinstance(node.items[0], SAtom):
            raise SexprError("expected a formula", node.line, node.col)
        head = node.items[0].text
        rest = node.items[1:]
        if head == "=":
            if len(rest) != 2:
                raise SexprError("'=' takes exactly two terms", node.line, node.col)
            lhs = self.term(rest[0], scope)
            rhs = self.term(rest[1], scope)
            try:
                return mk_eq(lhs, rhs)
            except LogicError as e:
                raise SexprError(str(e), node.line, node.col) from None
        if head == "not":
            if len(rest) != 1:
                raise SexprError("'not' takes exactly one formula", node.line, node.col)
            return Not(self.formula(rest[0], scope))
        if head == "and":
            return And(tuple(self.formula(a, scope) for a in rest))
        if head == "or":
            return Or(tuple(self.formula(a, scope) for a in rest))
        if head == "=>":
            if len(rest) != 2:
                raise SexprError("'=>' takes exactly two formulas", node.line, node.col)
            return Implies(self.formula(rest[0], scope), self.formula(rest[1], scope))
        if head in ("exists", "forall"):
            if len(rest) != 2 or not isinstance(rest[0], SList):
                raise SexprError(
                    f"expected ({head} ((<var> <sort>) ...) <formula>)", node.line, node.col
                )
            binders: list[Var] = []
            for b in rest[0].items:
                if (
                    not isinstance(b, SList)
                    or len(b.items) != 2
                    or not isinstance(b.items[0], SAtom)
                    or not isinstance(b.items[1], SAtom)
                ):
                    raise SexprError("binder must look like (x sigma)", rest[0].line, rest[0].col)
                name, sort = b.items[0].text, b.items[1].text
                _check_name(name, "bound variable", b.items[0])
                if sort not in self.signature.sorts:
                    raise SexprError(f"unknown sort '{sort}'", b.items[1].line, b.items[1].col)
                binders.append(Var(name, sort))
            inner = dict(scope)
            inner.update({v.name: v for v in binders})
            body = self.formula(rest[1], inner)
            kind = Exists if head == "exists" else Forall
            return kind(tuple(binders), body)
        raise SexprError(
            f"unknown formula head '{head}' (expected one of: {', '.join(FORMULA_HEADS)})",
            node.items[0].line,
            node.items[0].col,
        )


def parse_problem(text: str, signature: Signature) -> Problem:
    """Read declarations and assertions; conjoin all asserted formulas."""
    reader = _Reader(signature)
    asserted: list[Formula] = []
    for node in parse_nodes(text):
        if isinstance(node, SAtom):
            raise SexprError(
                f"unexpected atom '{node.text}' at top level", node.line, node.col
            )
        if reader.declaration(node):
            continue
        if node.items and isinstance(node.items[0], SAtom) and node.items[0].text == "assert":
            if len(node.items) != 2:
                raise SexprError("expected (assert <formula>)", node.line, node.col)
            asserted.append(reader.formula(node.items[1], {}))
        elif node.items and isinstance(node.items[0], SAtom) and node.items[0].text in FORMULA_HEADS:
            asserted.append(reader.formula(node, {}))
        else:
            head = node.items[0].text if node.items and isinstance(node.items[0], SAtom) else "?"
            raise SexprError(
                f"unknown form '{head}' (expected a declaration, assert, or formula)",
                node.line,
                node.col,
            )
    if not asserted:
        raise SexprError("no formula asserted")
    return Problem(signature, reader.consts, conj(asserted))


def parse_formula_text(text: str, signature: Signature, consts: Optional[dict[str, Var]] = None) -> Formula:
    """Parse a single formula, with variables drawn from `consts` (for tests)."""
    reader = _Reader(signature)
    if consts:
        reader.consts.update(consts)
    nodes = parse_nodes(text)
    if len(nodes) != 1:
        raise SexprError("expected exactly one formula")
    return reader.formula(nodes[0], {})
