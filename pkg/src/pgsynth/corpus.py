"""Grammar extraction from corpora of mini-language programs.

A corpus file holds function definitions, optionally carrying contracts:

    (def inc ((a Int)) -> Int (+ a 1))
    (def safeHead ((l (List Int))) -> Int
      (requires (not (isEmpty l)))
      (ensures (= result (head l)))
      (head l))

Two extractors turn occurrence counts of expression kinds into weighted
grammar files.  The depth-1 extractor keys counts on the kind alone and
tags rules for the axiom pass; the depth-2 extractor keys them on the kind
plus the (parent operator, child position) context, encoded as labeled
nonterminals, and adds a Type ::= Type_TOPLEVEL start rule per type.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from . import sexpr
from .grammarfile import GrammarFile, LabelDecl, RawProduction
from .lang import (
    BOOL,
    INT,
    And,
    BoolLit,
    Cons,
    Eq,
    Expr,
    Head,
    IntLit,
    IsEmpty,
    Ite,
    LangError,
    Leq,
    ListType,
    Minus,
    Nil,
    Nonterminal,
    Not,
    Plus,
    Size,
    Tail,
    Times,
    Type,
    Var,
    children,
    expr_from_sexpr,
    is_complete,
    iter_subexprs,
    to_sexpr,
    type_from_sexpr,
    type_is_ground,
    type_of,
    type_str,
    type_vars,
)
from .sexpr import SexprError, Symbol


class CorpusError(LangError):
    """Malformed corpus program or invalid extraction configuration."""


# name the function result may be referred to by in (ensures ...) clauses
RESULT_NAME = "result"


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[tuple[str, Type], ...]
    return_type: Type
    body: Expr
    requires: Expr | None = None
    ensures: Expr | None = None

    @property
    def scope(self) -> dict[str, Type]:
        return dict(self.params)

    def validate(self) -> "FunctionDef":
        names = [n for n, _ in self.params]
        if len(set(names)) != len(names):
            raise CorpusError(f"def {self.name}: duplicate parameter name")
        if RESULT_NAME in names:
            raise CorpusError(
                f"def {self.name}: parameter {RESULT_NAME} is reserved for postconditions"
            )
        for n, t in list(self.params) + [(self.name, self.return_type)]:
            if not type_is_ground(t):
                raise CorpusError(f"def {self.name}: {n} has non-ground type {type_str(t)}")
        self._check_expr("body", self.body, self.scope, self.return_type)
        if self.requires is not None:
            self._check_expr("requires", self.requires, self.scope, BOOL)
        if self.ensures is not None:
            scope = {**self.scope, RESULT_NAME: self.return_type}
            self._check_expr("ensures", self.ensures, scope, BOOL)
        return self

    def _check_expr(self, what: str, e: Expr, scope: dict[str, Type], want: Type) -> None:
        if not is_complete(e):
            raise CorpusError(f"def {self.name}: {what} contains a hole")
        for _, sub in iter_subexprs(e):
            if isinstance(sub, Nil) and type_vars(sub.elem):
                raise CorpusError(f"def {self.name}: {what} uses a type variable")
        try:
            t = type_of(e, scope)
        except LangError as err:
            raise CorpusError(f"def {self.name}: {what}: {err}") from err
        if t != want:
            raise CorpusError(
                f"def {self.name}: {what} has type {type_str(t)}, expected {type_str(want)}"
            )


@dataclass(frozen=True)
class CorpusProgram:
    functions: tuple[FunctionDef, ...]

    def find(self, name: str) -> FunctionDef | None:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None


# ---------------------------------------------------------------------------
# Parsing


def _ident(form, what: str) -> str:
    if isinstance(form, Symbol):
        try:
            e = expr_from_sexpr(form)
        except (SexprError, LangError):
            e = None
        if isinstance(e, Var):
            return str(form)
    raise CorpusError(f"invalid {what} {sexpr.write(form)}")


def _parse_param(form) -> tuple[str, Type]:
    if not (isinstance(form, list) and len(form) == 2):
        raise CorpusError(f"parameter must be (name Type), got {sexpr.write(form)}")
    try:
        return _ident(form[0], "parameter name"), type_from_sexpr(form[1])
    except LangError as err:
        raise CorpusError(str(err)) from None


def _parse_expr(form, what: str) -> Expr:
    try:
        return expr_from_sexpr(form)
    except (SexprError, LangError) as err:
        raise CorpusError(f"{what}: {err}") from None


_CONTRACT_HEADS = ("requires", "ensures")


def _is_contract_clause(form) -> bool:
    return (
        isinstance(form, list)
        and len(form) == 2
        and isinstance(form[0], Symbol)
        and str(form[0]) in _CONTRACT_HEADS
    )


def parse_def(form) -> FunctionDef:
    """Parse one `(def name ((p T) ...) -> T clauses... body)` form, where
    clauses are at most one (requires e) and one (ensures e)."""
    if not (isinstance(form, list) and form and form[0] == Symbol("def")):
        raise CorpusError(f"expected a (def ...) form, got {sexpr.write(form)}")
    if len(form) < 6:
        raise CorpusError("truncated def: expected (def name ((p T) ...) -> T body)")
    name = _ident(form[1], "function name")
    if not isinstance(form[2], list):
        raise CorpusError(f"def {name}: expected a ((p T) ...) parameter list")
    params = tuple(_parse_param(p) for p in form[2])
    if form[3] != Symbol("->"):
        raise CorpusError(f"def {name}: expected -> after the parameter list")
    try:
        rtype = type_from_sexpr(form[4])
    except LangError as err:
        raise CorpusError(f"def {name}: {err}") from None

    contracts: dict[str, Expr] = {}
    rest = form[5:]
    while len(rest) > 1 and _is_contract_clause(rest[0]):
        head = str(rest[0][0])
        if head in contracts:
            raise CorpusError(f"def {name}: duplicate ({head} ...) clause")
        contracts[head] = _parse_expr(rest[0][1], f"def {name}: {head}")
        rest = rest[1:]
    if len(rest) != 1:
        raise CorpusError(f"def {name}: expected contract clauses then exactly one body")
    if _is_contract_clause(rest[0]):
        raise CorpusError(f"def {name}: missing function body")
    body = _parse_expr(rest[0], f"def {name}: body")
    return FunctionDef(
        name, params, rtype, body, contracts.get("requires"), contracts.get("ensures")
    ).validate()


def parse_program(text: str) -> CorpusProgram:
    try:
        forms = sexpr.parse_all(text)
    except SexprError as err:
        raise CorpusError(str(err)) from None
    fns: list[FunctionDef] = []
    for form in forms:
        fn = parse_def(form)
        if any(fn.name == f.name for f in fns):
            raise CorpusError(f"duplicate function {fn.name}")
        fns.append(fn)
    return CorpusProgram(tuple(fns))


def load_program(path) -> CorpusProgram:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as err:
        raise CorpusError(f"cannot read program {path}: {err}") from None
    try:
        return parse_program(text)
    except CorpusError as err:
        raise CorpusError(f"{path}: {err}") from None


def load_corpus(path) -> tuple[CorpusProgram, ...]:
    """Load a corpus: a single program file, or every non-hidden regular file
    in a directory, in sorted filename order so extraction is deterministic."""
    p = Path(path)
    if p.is_dir():
        files = sorted(f for f in p.iterdir() if f.is_file() and not f.name.startswith("."))
        return tuple(load_program(f) for f in files)
    if p.is_file():
        return (load_program(p),)
    raise CorpusError(f"no such corpus: {path}")


# ---------------------------------------------------------------------------
# Emission


def emit_def(fn: FunctionDef) -> str:
    params = " ".join(f"({n} {type_str(t)})" for n, t in fn.params)
    lines = [f"(def {fn.name} ({params}) -> {type_str(fn.return_type)}"]
    if fn.requires is not None:
        lines.append(f"  (requires {to_sexpr(fn.requires)})")
    if fn.ensures is not None:
        lines.append(f"  (ensures {to_sexpr(fn.ensures)})")
    lines.append(f"  {to_sexpr(fn.body)})")
    return "\n".join(lines)


def emit_program(prog: CorpusProgram) -> str:
    return "\n\n".join(emit_def(fn) for fn in prog.functions) + "\n"


def replace_function(prog: CorpusProgram, fn: FunctionDef) -> CorpusProgram:
    if prog.find(fn.name) is None:
        raise CorpusError(f"no function {fn.name} to replace")
    return CorpusProgram(tuple(fn if f.name == fn.name else f for f in prog.functions))


# ---------------------------------------------------------------------------
# Expression kinds

# what must be recorded per expression so that the kind plus child
# expressions reconstructs it: variables keep only their type, literals
# their value, operators their AST tag and type instantiation
@dataclass(frozen=True)
class ExprKind:
    kind: str  # "literal" | "operator" | "variable"
    rtype: Type
    value: int | bool | None = None
    op: str | None = None
    inst: Type | None = None


_OP_CLASSES = {
    "Plus": Plus, "Minus": Minus, "Times": Times, "Leq": Leq, "Eq": Eq,
    "And": And, "Not": Not, "Ite": Ite, "Cons": Cons, "Head": Head,
    "Tail": Tail, "IsEmpty": IsEmpty, "Size": Size,
}
_OP_TAGS = {
    "Plus": "plus", "Minus": "minus", "Times": "times", "Leq": "leq",
    "Eq": "eq", "And": "and", "Not": "not", "Ite": "if", "Cons": "cons",
    "Nil": "nil", "Head": "head", "Tail": "tail", "IsEmpty": "isEmpty",
    "Size": "size",
}
# commutative on values; And is excluded because it short-circuits errors
_COMMUTATIVE = {"Plus", "Times", "Eq"}
_MONO_CHILD_TYPES = {
    "Plus": (INT, INT), "Minus": (INT, INT), "Times": (INT, INT),
    "Leq": (INT, INT), "And": (BOOL, BOOL), "Not": (BOOL,),
}


def _node_type(e: Expr, kid_types: tuple[Type, ...], scope: dict[str, Type]) -> Type:
    cls = e.__class__
    if cls is Var:
        return scope[e.name]
    if cls is IntLit:
        return INT
    if cls is BoolLit:
        return BOOL
    if cls is Nil:
        return ListType(e.elem)
    if cls in (Plus, Minus, Times, Size):
        return INT
    if cls in (Leq, Eq, And, Not, IsEmpty):
        return BOOL
    if cls in (Ite, Cons):
        return kid_types[1]
    if cls is Head:
        return kid_types[0].elem
    if cls is Tail:
        return kid_types[0]
    raise CorpusError(f"cannot extract from {e!r}")


def _classify(e: Expr, t: Type, kid_types: tuple[Type, ...]) -> ExprKind:
    cls = e.__class__
    if cls is Var:
        return ExprKind("variable", t)
    if cls in (IntLit, BoolLit):
        return ExprKind("literal", t, value=e.value)
    inst: Type | None = None
    if cls is Eq or cls is Cons:
        inst = kid_types[0]
    elif cls is Ite or cls is Head:
        inst = t
    elif cls is Nil:
        inst = e.elem
    elif cls is Tail:
        inst = t.elem
    elif cls is IsEmpty or cls is Size:
        inst = kid_types[0].elem
    return ExprKind("operator", t, op=cls.__name__, inst=inst)


def _kind_child_types(k: ExprKind) -> tuple[Type, ...]:
    mono = _MONO_CHILD_TYPES.get(k.op)
    if mono is not None:
        return mono
    if k.op == "Eq":
        return (k.inst, k.inst)
    if k.op == "Ite":
        return (BOOL, k.inst, k.inst)
    if k.op == "Cons":
        return (k.inst, ListType(k.inst))
    if k.op == "Nil":
        return ()
    return (ListType(k.inst),)  # Head, Tail, IsEmpty, Size


def _kind_body(k: ExprKind) -> Expr:
    if k.kind == "literal":
        return BoolLit(k.value) if k.rtype == BOOL else IntLit(k.value)
    if k.op == "Nil":
        return Nil(k.inst)
    args = tuple(Var(f"v{i}") for i in range(len(_kind_child_types(k))))
    return _OP_CLASSES[k.op](*args)


def _tslug(t: Type) -> str:
    if isinstance(t, ListType):
        return "List" + _tslug(t.elem)
    return type_str(t)


def _vslug(value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    return str(value).replace("-", "m")


def _kind_name(k: ExprKind) -> str:
    ts = _tslug(k.rtype)
    if k.kind == "variable":
        return f"p{ts}Variable"
    if k.kind == "literal":
        return f"p{ts}Lit{_vslug(k.value)}"
    inst = _tslug(k.inst) if k.inst is not None else ""
    return f"p{ts}{k.op}{inst}"


def _kind_sort_key(k: ExprKind) -> tuple:
    if k.kind == "literal":
        disc: tuple = (_tslug(k.rtype), int(k.value))
    elif k.kind == "operator":
        disc = (k.op, _tslug(k.inst) if k.inst is not None else "")
    else:
        disc = ()
    return (_tslug(k.rtype), k.kind, disc)


# a context is (parent AST class name, child position), or None at top level
def _visit(e: Expr, scope: dict[str, Type], ctx, sink) -> Type:
    tag = e.__class__.__name__
    kid_types = tuple(
        _visit(kid, scope, (tag, i), sink) for i, kid in enumerate(children(e))
    )
    t = _node_type(e, kid_types, scope)
    sink(_classify(e, t, kid_types), ctx)
    return t


def _count_kinds(programs: Iterable[CorpusProgram], sink) -> None:
    for prog in programs:
        for fn in prog.functions:
            _visit(fn.body, fn.scope, None, sink)


# ---------------------------------------------------------------------------
# Depth-1 extraction


def _depth1_tags(k: ExprKind) -> frozenset[str]:
    if k.kind == "variable":
        return frozenset({"top"})
    if k.kind == "literal":
        tags = {"const"}
        if k.value == 0 and k.rtype == INT:
            tags.add("0")
        return frozenset(tags)
    tags = {_OP_TAGS[k.op]}
    if k.op in _COMMUTATIVE:
        tags.add("commut")
    return frozenset(tags)


def _depth1_production(k: ExprKind, count: float) -> RawProduction:
    name, tags, rtype = _kind_name(k), _depth1_tags(k), Nonterminal(k.rtype)
    if k.kind == "variable":
        return RawProduction(name, count, tags, (), (), rtype, None, k.rtype)
    params = tuple(
        (f"v{i}", Nonterminal(ct)) for i, ct in enumerate(_kind_child_types(k))
    ) if k.kind == "operator" else ()
    return RawProduction(name, count, tags, (), params, rtype, _kind_body(k))


def extract_depth1(programs: Sequence[CorpusProgram]) -> GrammarFile:
    """One production per expression kind, weighted by occurrence count.
    All variable occurrences of a type collapse into one variable[T] rule."""
    counts: Counter[ExprKind] = Counter()
    _count_kinds(programs, lambda k, ctx: counts.update([k]))
    prods = tuple(
        _depth1_production(k, float(counts[k])) for k in sorted(counts, key=_kind_sort_key)
    )
    return GrammarFile((), prods)


# ---------------------------------------------------------------------------
# Depth-2 extraction


def _ctx_sort_key(ctx) -> tuple:
    return ("", -1) if ctx is None else ctx


def _ctx_slug(ctx) -> str:
    return "TOPLEVEL" if ctx is None else f"{ctx[1]}_{ctx[0]}"


def _label_name(t: Type, ctx) -> str:
    return f"{_tslug(t)}_{_ctx_slug(ctx)}"


def _depth2_production(k: ExprKind, ctx, count: float) -> RawProduction:
    name = f"{_kind_name(k)}_{_ctx_slug(ctx)}"
    rtype = Nonterminal(k.rtype, _label_name(k.rtype, ctx))
    if k.kind == "variable":
        return RawProduction(name, count, frozenset(), (), (), rtype, None, k.rtype)
    params = tuple(
        (f"v{i}", Nonterminal(ct, _label_name(ct, (k.op, i))))
        for i, ct in enumerate(_kind_child_types(k))
    ) if k.kind == "operator" else ()
    return RawProduction(name, count, frozenset(), (), params, rtype, _kind_body(k))


def _start_production(t: Type) -> RawProduction:
    ts = _tslug(t)
    param = ("v0", Nonterminal(t, f"{ts}_TOPLEVEL"))
    return RawProduction(f"p{ts}Start", 1.0, frozenset(), (), (param,), Nonterminal(t), Var("v0"))


def extract_depth2(programs: Sequence[CorpusProgram]) -> GrammarFile:
    """One production per (kind, parent context), weighted by occurrence
    count.  Contexts become labeled nonterminals Type_pos_ParentTag, or
    Type_TOPLEVEL for the root of a function body; a Type ::= Type_TOPLEVEL
    start rule is added per top-level type.  No axiom tags are emitted."""
    counts: Counter[tuple[ExprKind, object]] = Counter()
    _count_kinds(programs, lambda k, ctx: counts.update([(k, ctx)]))

    occurrences = {(k.rtype, ctx) for k, ctx in counts}
    labels = tuple(
        LabelDecl(_label_name(t, ctx), t)
        for t, ctx in sorted(occurrences, key=lambda tc: (_tslug(tc[0]), _ctx_sort_key(tc[1])))
    )
    keys = sorted(
        counts, key=lambda kc: (_tslug(kc[0].rtype), _ctx_sort_key(kc[1]), _kind_sort_key(kc[0]))
    )
    prods = [_depth2_production(k, ctx, float(counts[(k, ctx)])) for k, ctx in keys]
    top_types = sorted({t for t, ctx in occurrences if ctx is None}, key=_tslug)
    prods.extend(_start_production(t) for t in top_types)
    return GrammarFile(labels, tuple(prods))


# ---------------------------------------------------------------------------
# Local bias


def extract_local_bias(
    program: CorpusProgram, depth: int = 1, multiplier: float = 5.0
) -> GrammarFile:
    """Extract a grammar from the one program under repair, scaling weights
    by `multiplier` so that, merged with a corpus grammar, local habits are
    favored without drowning out the general model."""
    if multiplier <= 0:
        raise CorpusError(f"local-bias multiplier must be positive, got {multiplier}")
    if depth == 1:
        gf = extract_depth1([program])
    elif depth == 2:
        gf = extract_depth2([program])
    else:
        raise CorpusError(f"extraction depth must be 1 or 2, got {depth}")
    prods = tuple(replace(p, weight=p.weight * multiplier) for p in gf.productions)
    return GrammarFile(gf.labels, prods)
