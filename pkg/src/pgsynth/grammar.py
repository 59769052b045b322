"""Probabilistic attribute grammars over the object language.

A grammar is a set of production rules, each mapping a nonterminal (base type
plus optional attribute) to an expression template whose holes are the child
slots. Weights are absolute frequencies; `normalize` turns them into per-
nonterminal probabilities and negative-log costs. Transformation passes
(variable instantiation, generic instantiation, symmetry/neutral-element
axioms) rewrite the rule set and renormalize.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

from .lang import (
    Expr,
    Hole,
    Minus,
    Nonterminal,
    Plus,
    Type,
    Var,
    children,
    hole_offsets,
    hole_paths,
    holes,
    match_type,
    rebuild,
    subst_type,
    to_sexpr,
    type_is_ground,
    type_size,
    type_str,
    type_vars,
)

log = logging.getLogger(__name__)

HORIZON_TOL = 1e-12


class GrammarError(Exception):
    pass


@dataclass(frozen=True)
class ProductionRule:
    id: str
    lhs: Nonterminal
    template: Expr
    weight: float
    tags: frozenset[str] = frozenset()
    type_params: tuple[str, ...] = ()
    # set on `variable` builtin rules: stands for any in-scope variable of
    # this type, split into one rule per variable before normalization
    variable_of: Type | None = None

    @cached_property
    def child_nts(self) -> tuple[Nonterminal, ...]:
        return tuple(holes(self.template))

    @property
    def is_generic(self) -> bool:
        return bool(self.type_params)

    def __str__(self) -> str:
        body = f"variable[{type_str(self.variable_of)}]" if self.variable_of else to_sexpr(self.template)
        return f"{self.lhs} ::= {body} (w={self.weight:g})"


@dataclass
class Pcfg:
    """Normalized grammar: rules grouped by nonterminal, with probabilities
    and negative-log costs per rule id."""

    rules: dict[Nonterminal, tuple[ProductionRule, ...]]
    prob: dict[str, float]
    cost: dict[str, float]
    _horizons: dict[Nonterminal, float] | None = field(default=None, repr=False)
    _rule_h: dict[str, tuple[float, ...]] | None = field(default=None, repr=False)
    _rule_key: dict[str, tuple[str, tuple[int, ...]]] | None = field(default=None, repr=False)
    _rule_paths: dict[str, tuple[tuple[int, ...], ...]] | None = field(default=None, repr=False)

    def all_rules(self):
        for group in self.rules.values():
            yield from group

    def rules_for(self, nt: Nonterminal) -> tuple[ProductionRule, ...]:
        return self.rules.get(nt, ())

    def start(self, t: Type) -> Nonterminal:
        nt = Nonterminal(t)
        if nt not in self.rules:
            raise GrammarError(f"grammar has no productions for type {type_str(t)}")
        return nt

    def horizon(self) -> dict[Nonterminal, float]:
        if self._horizons is None:
            self._horizons = horizons(self)
        return self._horizons

    def rule_hole_horizons(self) -> dict[str, tuple[float, ...]]:
        """Per rule, the horizon of each child nonterminal (in hole order)."""
        if self._rule_h is None:
            h = self.horizon()
            self._rule_h = {
                r.id: tuple(h[c] for c in r.child_nts) for r in self.all_rules()
            }
        return self._rule_h

    def rule_key_parts(self) -> dict[str, tuple[str, tuple[int, ...]]]:
        """Per rule, the template's printed form and the offset of each hole's
        own printed form inside it (in hole order). Lets expansion splice
        derivation keys as strings instead of reprinting whole trees."""
        if self._rule_key is None:
            parts = {}
            for r in self.all_rules():
                text = to_sexpr(r.template)
                parts[r.id] = (text, hole_offsets(text, r.child_nts))
            self._rule_key = parts
        return self._rule_key

    def rule_hole_paths(self) -> dict[str, tuple[tuple[int, ...], ...]]:
        """Per rule, the path of each hole inside the template (hole order)."""
        if self._rule_paths is None:
            self._rule_paths = {r.id: hole_paths(r.template) for r in self.all_rules()}
        return self._rule_paths


def _rule_groups(rules) -> dict[Nonterminal, list[ProductionRule]]:
    groups: dict[Nonterminal, list[ProductionRule]] = {}
    for r in rules:
        groups.setdefault(r.lhs, []).append(r)
    return groups


def normalize(raw_rules) -> Pcfg:
    """Validate a ground rule set, prune unproductive rules, and compute
    probabilities (weight over same-lhs total) and costs (-log p)."""
    rules = list(raw_rules)
    seen_ids: set[str] = set()
    for r in rules:
        if r.weight <= 0:
            raise GrammarError(f"rule {r.id}: non-positive weight {r.weight}")
        if r.id in seen_ids:
            raise GrammarError(f"duplicate rule id {r.id}")
        seen_ids.add(r.id)
        if r.is_generic or not type_is_ground(r.lhs.base):
            raise GrammarError(f"rule {r.id} is not ground; instantiate generics first")
        if r.variable_of is not None:
            raise GrammarError(f"rule {r.id}: variable placeholder not instantiated")

    groups = _rule_groups(rules)

    # a nonterminal is productive once some rule closes using only productive children
    productive: set[Nonterminal] = set()
    changed = True
    while changed:
        changed = False
        for nt, group in groups.items():
            if nt in productive:
                continue
            for r in group:
                if all(c in productive for c in r.child_nts):
                    productive.add(nt)
                    changed = True
                    break

    kept: dict[Nonterminal, list[ProductionRule]] = {}
    for nt, group in groups.items():
        if nt not in productive:
            log.warning("dropping nonterminal %s: no finite production", nt)
            continue
        live = [r for r in group if all(c in productive for c in r.child_nts)]
        for r in group:
            if r not in live:
                log.warning("dropping rule %s: child nonterminal is unproductive", r.id)
        kept[nt] = live

    if not kept:
        raise GrammarError("grammar is empty after pruning")

    prob: dict[str, float] = {}
    cost: dict[str, float] = {}
    for nt, group in kept.items():
        total = sum(r.weight for r in group)
        for r in group:
            p = r.weight / total
            prob[r.id] = p
            cost[r.id] = -math.log(p)

    _reject_zero_cost_cycles(kept, prob)
    return Pcfg({nt: tuple(group) for nt, group in kept.items()}, prob, cost)


def _reject_zero_cost_cycles(groups, prob) -> None:
    # a cycle of probability-1 rules would enumerate forever at cost 0
    edges: dict[Nonterminal, set[Nonterminal]] = {nt: set() for nt in groups}
    for nt, group in groups.items():
        for r in group:
            if prob[r.id] == 1.0:
                edges[nt].update(c for c in r.child_nts if c in groups)
    state: dict[Nonterminal, int] = {}

    def visit(nt: Nonterminal) -> None:
        state[nt] = 1
        for nxt in edges[nt]:
            if state.get(nxt) == 1:
                raise GrammarError(f"cycle of probability-1 rules through {nt}")
            if nxt not in state:
                visit(nxt)
        state[nt] = 2

    for nt in groups:
        if nt not in state:
            visit(nt)


# ---------------------------------------------------------------------------
# Variable instantiation


def split_variable_rules(rules, scope: dict[str, Type]) -> list[ProductionRule]:
    """Replace each `variable` placeholder rule of type T (weight w) with one
    rule per in-scope variable of type T, weight w/k. No variables: dropped."""
    out: list[ProductionRule] = []
    for r in rules:
        if r.variable_of is None:
            out.append(r)
            continue
        names = sorted(n for n, t in scope.items() if t == r.variable_of)
        if not names:
            # routine when the scope has no value of that type: the
            # placeholder simply contributes no rules
            log.info("dropping rule %s: no variable of type %s in scope", r.id, type_str(r.variable_of))
            continue
        w = r.weight / len(names)
        for n in names:
            out.append(
                replace(r, id=f"{r.id}${n}", template=Var(n), weight=w, variable_of=None)
            )
    return out


def instantiate_variables(g: Pcfg, scope: dict[str, Type]) -> Pcfg:
    return normalize(split_variable_rules(g.all_rules(), scope))


# ---------------------------------------------------------------------------
# Generic rules


def discover_types(rules, seeds, max_iters: int = 2, max_type_size: int = 3) -> set[Type]:
    """Ground types reachable from the seeds (plus the grammar's own ground
    types) by instantiating generic rules, bounded by structural size."""
    types: set[Type] = {t for t in seeds if type_size(t) <= max_type_size}
    for r in rules:
        ts = [r.lhs.base] + [nt.base for nt in _slot_nts(r)]
        for t in ts:
            if type_is_ground(t) and type_size(t) <= max_type_size:
                types.add(t)
    generic = [r for r in rules if r.is_generic]
    for _ in range(max_iters):
        added = False
        for r in generic:
            slots = [nt.base for nt in _slot_nts(r)]
            for assignment in itertools.product(sorted(types, key=type_str), repeat=len(r.type_params)):
                sub = dict(zip(r.type_params, assignment))
                if any(subst_type(s, sub) not in types for s in slots):
                    continue
                ret = subst_type(r.lhs.base, sub)
                if type_is_ground(ret) and type_size(ret) <= max_type_size and ret not in types:
                    types.add(ret)
                    added = True
        if not added:
            break
    return types


def _slot_nts(r: ProductionRule) -> tuple[Nonterminal, ...]:
    if r.variable_of is not None:
        return ()
    return tuple(holes(r.template))


def instantiate_generics(rules, types) -> list[ProductionRule]:
    """Ground every generic rule against the discovered type set; instances
    whose slot types fall outside the set are skipped. Weights are copied."""
    out: list[ProductionRule] = []
    ordered = sorted(types, key=type_str)
    for r in rules:
        if not r.is_generic:
            out.append(r)
            continue
        produced: set[str] = set()
        for target in ordered:
            sub: dict[str, Type] = {}
            if not match_type(r.lhs.base, target, sub):
                continue
            free = [p for p in r.type_params if p not in sub]
            for assignment in itertools.product(ordered, repeat=len(free)):
                full = dict(sub, **dict(zip(free, assignment)))
                inst = _instantiate_rule(r, full, types)
                if inst is not None and inst.id not in produced:
                    produced.add(inst.id)
                    out.append(inst)
    return out


def _instantiate_rule(r: ProductionRule, sub: dict[str, Type], types) -> ProductionRule | None:
    lhs = Nonterminal(subst_type(r.lhs.base, sub), r.lhs.attr)
    if lhs.base not in types:
        return None
    for nt in _slot_nts(r):
        if type_vars(nt.base) and subst_type(nt.base, sub) not in types:
            return None
    template = _subst_template(r.template, sub)
    suffix = ",".join(type_str(sub[p]) for p in r.type_params)
    return replace(
        r, id=f"{r.id}@{suffix}", lhs=lhs, template=template, type_params=()
    )


def _subst_template(e: Expr, sub: dict[str, Type]) -> Expr:
    from .lang import Nil

    match e:
        case Hole(nt):
            return Hole(Nonterminal(subst_type(nt.base, sub), nt.attr))
        case Nil(t):
            return Nil(subst_type(t, sub))
    kids = children(e)
    if not kids:
        return e
    return rebuild(e, tuple(_subst_template(k, sub) for k in kids))


# ---------------------------------------------------------------------------
# Axioms

ARITH_TAGS = frozenset({"plus", "minus", "times"})


def _attr(nt: Nonterminal, suffix: str) -> Nonterminal:
    attr = suffix if nt.attr is None else f"{nt.attr}_{suffix}"
    return Nonterminal(nt.base, attr)


def apply_axioms(g: Pcfg, axioms=("0", "commut", "const")) -> Pcfg:
    """Symmetry and redundancy breaking driven by rule tags.

    "0": the zero rule is kept out of both operands of plus-tagged rules and
    the second operand of minus-tagged rules (neutral element).
    "commut": commutative rules keep only operand pairs whose left top rule
    is ordered at or before the right top rule (id order), one variant per
    right top rule.
    "const": arithmetic operand pairs that would both derive const-tagged
    rules are excluded (the fold is redundant).
    """
    rules = list(g.all_rules())
    if "0" in axioms:
        rules = _zero_axiom(rules)
    if "commut" in axioms or "const" in axioms:
        rules = _commut_const_axiom(rules, commut="commut" in axioms, const="const" in axioms)
    return normalize(rules)


def _zero_axiom(rules: list[ProductionRule]) -> list[ProductionRule]:
    groups = _rule_groups(rules)
    # nonterminals with a zero rule that actually appears in a neutral position
    targets: set[Nonterminal] = set()
    for r in rules:
        positions = _neutral_positions(r)
        for i in positions:
            nt = r.child_nts[i]
            if any("0" in s.tags for s in groups.get(nt, [])):
                targets.add(nt)
    if not targets:
        return rules

    targets = {
        nt
        for nt in targets
        if any("0" not in r.tags for r in groups[nt]) and any("0" in r.tags for r in groups[nt])
    }
    if not targets:
        return rules

    out: list[ProductionRule] = []
    for nt, group in groups.items():
        if nt not in targets:
            out.extend(group)
            continue
        nz, any_ = _attr(nt, "NZ"), _attr(nt, "ANY")
        nonzero_total = 0.0
        for r in group:
            if "0" in r.tags:
                out.append(replace(r, lhs=any_))
            else:
                out.append(replace(r, lhs=nz))
                nonzero_total += r.weight
        out.append(ProductionRule(f"{_ntid(nt)}_nonzero", any_, Hole(nz), nonzero_total))
        out.append(ProductionRule(f"{_ntid(nt)}_any", nt, Hole(any_), 1.0))

    # rewire references to the restructured nonterminals
    rewired: list[ProductionRule] = []
    for r in out:
        if not r.child_nts or not (set(r.child_nts) & targets):
            rewired.append(r)
            continue
        neutral = _neutral_positions(r)
        new_template = _rewire(r.template, targets, neutral)
        rewired.append(replace(r, template=new_template))
    return rewired


def _neutral_positions(r: ProductionRule) -> set[int]:
    """Preorder hole ordinals where a zero operand would be redundant."""
    t = r.template
    out: set[int] = set()
    if "plus" in r.tags and isinstance(t, Plus):
        left, right = children(t)
        if isinstance(left, Hole):
            out.add(0)
        if isinstance(right, Hole):
            out.add(len(holes(left)))
    elif "minus" in r.tags and isinstance(t, Minus):
        left, right = children(t)
        if isinstance(right, Hole):
            out.add(len(holes(left)))
    return out


def _rewire(template: Expr, targets, neutral: set[int]) -> Expr:
    slot = itertools.count()

    def go(e: Expr) -> Expr:
        if isinstance(e, Hole):
            i = next(slot)
            if e.nt in targets:
                return Hole(_attr(e.nt, "NZ" if i in neutral else "ANY"))
            return e
        kids = children(e)
        if not kids:
            return e
        return rebuild(e, tuple(go(k) for k in kids))

    return go(template)


def _ntid(nt: Nonterminal) -> str:
    base = type_str(nt.base).replace(" ", "").replace("(", "").replace(")", "")
    return base if nt.attr is None else f"{base}.{nt.attr}"


def _commut_const_axiom(rules: list[ProductionRule], commut: bool, const: bool) -> list[ProductionRule]:
    groups = _rule_groups(rules)
    out: list[ProductionRule] = []
    sub_nts: dict[tuple, Nonterminal] = {}
    extra: list[ProductionRule] = []

    def restricted(nt: Nonterminal, keep, suffix: str) -> Nonterminal | None:
        """A copy of nt containing only the rules selected by `keep`."""
        selected = [r for r in groups.get(nt, ()) if keep(r)]
        if not selected:
            return None
        key = (nt, suffix)
        if key in sub_nts:
            return sub_nts[key]
        new_nt = _attr(nt, suffix)
        sub_nts[key] = new_nt
        for r in selected:
            extra.append(replace(r, id=f"{r.id}.{suffix}", lhs=new_nt))
        return new_nt

    for r in rules:
        is_arith = bool(r.tags & ARITH_TAGS)
        kids = children(r.template)
        binary = len(kids) == 2 and isinstance(kids[0], Hole) and isinstance(kids[1], Hole)
        if commut and "commut" in r.tags and binary and kids[0].nt == kids[1].nt:
            c = kids[0].nt
            ordered = sorted(groups.get(c, ()), key=lambda x: x.id)
            if not ordered:
                out.append(r)
                continue
            total = sum(x.weight for x in ordered)
            for k, rk in enumerate(ordered):
                drop_const = const and is_arith and "const" in rk.tags
                prefix_ids = {y.id for y in ordered[: k + 1]}

                def keep_left(x, prefix_ids=prefix_ids, drop_const=drop_const):
                    if x.id not in prefix_ids:
                        return False
                    return not (drop_const and "const" in x.tags)

                left = restricted(c, keep_left, f"le{k}nc" if drop_const else f"le{k}")
                right = restricted(c, lambda x, rk=rk: x.id == rk.id, f"is{k}")
                if left is None or right is None:
                    continue
                template = rebuild(r.template, (Hole(left), Hole(right)))
                out.append(
                    replace(
                        r,
                        id=f"{r.id}~{k}",
                        template=template,
                        weight=r.weight * rk.weight / total,
                        tags=r.tags - {"commut"},
                    )
                )
            continue
        if const and is_arith and binary and "commut" not in r.tags:
            c1, c2 = r.child_nts
            g1 = groups.get(c1, ())
            g2 = groups.get(c2, ())
            c1_const = [x for x in g1 if "const" in x.tags]
            c2_nonconst = [x for x in g2 if "const" not in x.tags]
            if c1_const and any("const" in x.tags for x in g2):
                w1 = sum(x.weight for x in g1)
                wc = sum(x.weight for x in c1_const)
                nc_left = restricted(c1, lambda x: "const" not in x.tags, "nc")
                if nc_left is not None:
                    out.append(
                        replace(
                            r,
                            id=f"{r.id}~nc",
                            template=rebuild(r.template, (Hole(nc_left), kids[1])),
                            weight=r.weight * (w1 - wc) / w1,
                        )
                    )
                co_left = restricted(c1, lambda x: "const" in x.tags, "co")
                nc_right = restricted(c2, lambda x: "const" not in x.tags, "nc")
                if co_left is not None and nc_right is not None:
                    out.append(
                        replace(
                            r,
                            id=f"{r.id}~cc",
                            template=rebuild(r.template, (Hole(co_left), Hole(nc_right))),
                            weight=r.weight * wc / w1,
                        )
                    )
                if nc_left is None and (co_left is None or nc_right is None):
                    log.warning("dropping rule %s: every operand pair is const+const", r.id)
                continue
        out.append(r)
    return out + extra


# ---------------------------------------------------------------------------
# Horizons


def horizons(g: Pcfg) -> dict[Nonterminal, float]:
    """Minimum cost of a complete production from each nonterminal, by
    fixpoint: start from the cheapest terminal rule, then relax through
    children until nothing moves by more than HORIZON_TOL."""
    h: dict[Nonterminal, float] = {}
    for nt, group in g.rules.items():
        terminal = [g.cost[r.id] for r in group if not r.child_nts]
        h[nt] = min(terminal) if terminal else math.inf

    for _ in range(100_000):
        delta = 0.0
        for nt, group in g.rules.items():
            best = h[nt]
            for r in group:
                c = g.cost[r.id]
                for child in r.child_nts:
                    c += h.get(child, math.inf)
                    if math.isinf(c):
                        break
                if c < best:
                    best = c
            if best < h[nt]:
                if not math.isinf(h[nt]):
                    delta = max(delta, h[nt] - best)
                else:
                    delta = math.inf
                h[nt] = best
        if delta <= HORIZON_TOL:
            break
    else:
        raise GrammarError("horizon fixpoint did not converge")

    bad = [nt for nt, v in h.items() if math.isinf(v)]
    if bad:
        raise GrammarError(f"nonterminals with no finite production: {bad}")
    return h
