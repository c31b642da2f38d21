"""Inference engine: certified upper bounds with derivation traces.

Four invariants are bounded: the family-relative category of a group
(cat), geometric dimension (gd), cohomological dimension (cd), and
topological complexity (tc).  Every bound is the minimum over the rule
instances that apply to the expression, and the winning rule's
derivation is kept as a tree of nodes that can be replayed.

Rule inventory for cat, by rule id:

  member-zero   members of the family have category 0
  declared      a fact-sheet entry for this family
  cd-bound      cat is at most cohomological dimension (every family
                contains the trivial subgroups)
  gd-bound      likewise via geometric dimension
  gog-sum       graph of groups: vertex category plus shifted edge
                category
  gog-max       graph of groups: vertex category against shifted edge
                dimension
  one-step      a graph of groups whose vertex groups all lie in the
                family has category at most 1
  polygon-max   d-gon of groups, d >= 4, under the link condition
                (edge groups around a vertex meet exactly in the face
                group)
  cw-greedy     per-dimension recursion over the cell stabilizers of a
                contractible complex, with a greedily optimized choice
                of arm at each dimension

The recursion behind cw-greedy: d_0 is the sup of the category of the
0-cell stabilizers; at dimension i either

    d_i = max(d_{i-1}, sup(gd(stab) + i))     "max arm", i in I
    d_i = d_{i-1} + sup(cat(stab) + 1)        "sum arm", i not in I

and d_n bounds the category.  Both update maps are nondecreasing in
d_{i-1}, which is why the greedy arm choice is globally optimal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .extnat import INF, ZERO, ExtNat, ext_max, supremum
from .facts import Family, MemoTable, Tri, membership_with_reason
from .model import (DirectProduct, GcwDescription, GraphOfGroups, GroupExpr,
                    PolygonOfGroups, TrivialGroup, Universe, expr_key)


@dataclass(frozen=True)
class DerivationNode:
    rule: str
    cite: str
    value: ExtNat
    assumptions: Tuple[str, ...] = ()
    premises: Tuple["DerivationNode", ...] = ()

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "cite": self.cite,
            "value": self.value.to_json(),
            "assumptions": list(self.assumptions),
            "premises": [p.to_json() for p in self.premises],
        }

    def walk(self):
        yield self
        for p in self.premises:
            yield from p.walk()


# how each rule recomputes its value from its premises when replayed
REPLAY: Dict[str, str] = {
    "declared": "leaf", "member-zero": "leaf", "one-step": "leaf",
    "cd-bound": "leaf", "gd-bound": "leaf", "tc-declared": "leaf",
    "trivial": "leaf", "const": "leaf", "no-rule": "leaf",
    "space-declared": "leaf",
    "gog-max": "max", "gd-tree": "max", "polygon-max": "max",
    "tc-gog": "max", "tc-gcw": "max", "cw-greedy": "max",
    "cat-tr-as-cd": "max", "rec-max": "max",
    "gog-sum": "sum", "product-gd": "sum", "cd-product": "sum",
    "plus": "sum", "rec-sum": "sum", "gluing-sum": "sum",
    "sup": "sup", "rec-base": "sup", "gd-cells": "sup",
}


def replay(node: DerivationNode) -> ExtNat:
    'Recompute the node value bottom-up; leaves stand as recorded.'
    kind = REPLAY[node.rule]
    if kind == "leaf":
        return node.value
    vals = [replay(p) for p in node.premises]
    if kind == "sum":
        total = ZERO
        for v in vals:
            total = total + v
        return total
    if kind == "sup":
        return supremum(vals)
    if kind == "max":
        if not vals:
            raise ValueError(f"rule {node.rule} needs at least one premise")
        return supremum(vals)
    raise ValueError(f"no replay semantics for rule {node.rule!r}")


@dataclass(frozen=True)
class BoundResult:
    invariant: str               # "cat" | "gd" | "cd" | "tc"
    family: Optional[str]
    value: ExtNat
    trace: DerivationNode

    def assumptions(self) -> List[str]:
        seen: Set[str] = set()
        for node in self.trace.walk():
            seen.update(node.assumptions)
        return sorted(seen)

    def to_json(self) -> dict:
        return {
            "invariant": self.invariant,
            "family": self.family,
            "value": self.value.to_json(),
            "assumptions": self.assumptions(),
            "trace": self.trace.to_json(),
        }


def _leaf(rule: str, cite: str, value: ExtNat,
          assumptions: Tuple[str, ...] = ()) -> DerivationNode:
    return DerivationNode(rule, cite, value, assumptions, ())


def _sup(cite: str, premises: Sequence[DerivationNode], rule: str = "sup",
         assumptions: Tuple[str, ...] = ()) -> DerivationNode:
    value = supremum(p.value for p in premises)
    return DerivationNode(rule, cite, value, assumptions, tuple(premises))


def _maxnode(rule: str, cite: str, premises: Sequence[DerivationNode],
             assumptions: Tuple[str, ...] = ()) -> DerivationNode:
    value = supremum(p.value for p in premises)
    return DerivationNode(rule, cite, value, assumptions, tuple(premises))


def _sumnode(rule: str, cite: str, premises: Sequence[DerivationNode],
             assumptions: Tuple[str, ...] = ()) -> DerivationNode:
    total = ZERO
    for p in premises:
        total = total + p.value
    return DerivationNode(rule, cite, total, assumptions, tuple(premises))


def _shift(inner: DerivationNode, k: int, what: str) -> DerivationNode:
    return _sumnode("plus", f"{what} shifted by its dimension",
                    [inner, _leaf("const", what, ExtNat(k))])


class Evaluator:
    """Bound computation against one universe, with a shared memo table.

    Results are memoized by (invariant, expression, family); the memo
    is written only by this evaluator.  Evaluation is deterministic:
    rules are tried in a fixed order and the first rule attaining the
    minimum supplies the reported derivation.
    """

    def __init__(self, universe: Universe, memo: Optional[MemoTable] = None) -> None:
        self.universe = universe
        self.memo = memo if memo is not None else MemoTable()
        self._active: Set[Tuple[str, str, Optional[str]]] = set()

    # -- shared plumbing --------------------------------------------------

    def _finish(self, invariant: str, fam: Optional[Family], e: GroupExpr,
                candidates: List[DerivationNode]) -> BoundResult:
        if not candidates:
            candidates = [_leaf("no-rule", "no applicable rule", INF)]
        winner = candidates[0]
        for c in candidates[1:]:
            if c.value < winner.value:
                winner = c
        result = BoundResult(invariant, fam.name if fam else None, winner.value, winner)
        self.memo.put(invariant, e, fam.name if fam else None, result)
        return result

    def _guard(self, invariant: str, e: GroupExpr, fam: Optional[Family]):
        key = (invariant, expr_key(e), fam.name if fam else None)
        if key in self._active:
            raise ValueError(f"circular evaluation at {key[1]}")
        return key

    # -- cat --------------------------------------------------------------

    def bound_cat(self, e: GroupExpr, fam: Family) -> BoundResult:
        hit = self.memo.get("cat", e, fam.name)
        if hit is not None:
            return hit
        key = self._guard("cat", e, fam)
        self._active.add(key)
        try:
            result = self._finish("cat", fam, e, self.cat_candidates(e, fam))
        finally:
            self._active.discard(key)
        return result

    def cat_candidates(self, e: GroupExpr, fam: Family) -> List[DerivationNode]:
        'All applicable rule instances, in evaluation order.'
        u = self.universe
        out: List[DerivationNode] = []
        verdict, reason = membership_with_reason(u, e, fam)
        if verdict is Tri.YES:
            out.append(_leaf("member-zero", reason, ZERO))
        kind, payload, chain = u.resolve_chain(e)
        for nm in chain:
            sheet = u.sheets.get(nm)
            if sheet is None:
                continue
            declared = sheet.cat_ub.get(fam.name)
            if declared is not None:
                out.append(_leaf("declared", sheet.cite(f"cat[{fam.name}]"), declared))
            if sheet.cd_ub.is_finite:
                out.append(_leaf(
                    "cd-bound",
                    "category never exceeds cohomological dimension: " + sheet.cite("cd"),
                    sheet.cd_ub))
            if sheet.gd_ub.is_finite:
                out.append(_leaf(
                    "gd-bound",
                    "category never exceeds geometric dimension: " + sheet.cite("gd"),
                    sheet.gd_ub))
        if kind in ("free", "graph"):
            vertices, edges = _as_gog(kind, payload)
            out.append(self._gog_sum(vertices, edges, fam))
            out.append(self._gog_max(vertices, edges, fam))
            if all(membership_with_reason(u, g, fam)[0] is Tri.YES for _, g in vertices):
                out.append(_leaf(
                    "one-step",
                    "fundamental group of a graph of groups with vertex groups "
                    "in the family", ExtNat(1)))
        elif kind == "polygon":
            node = self._polygon_rule(payload, fam)
            if node is not None:
                out.append(node)
        elif kind == "gcw":
            if payload.contractible:
                _, _, ladder = self._cw_ladder(payload, fam, None)
                out.append(_maxnode(
                    "cw-greedy",
                    "recursion over cell stabilizers with optimized arm choice",
                    [ladder],
                    (f"contractibility asserted for {payload.name}",)))
        return out

    def _gog_sum(self, vertices, edges, fam: Family) -> DerivationNode:
        vnodes = [self.bound_cat(g, fam).trace for _, g in vertices]
        enodes = [_shift(self.bound_cat(g, fam).trace, 1, f"edge {label}")
                  for label, g in edges]
        return _sumnode("gog-sum",
                        "vertex category plus shifted edge category",
                        [_sup("over vertex groups", vnodes),
                         _sup("over edge groups", enodes)])

    def _gog_max(self, vertices, edges, fam: Family) -> DerivationNode:
        vnodes = [self.bound_cat(g, fam).trace for _, g in vertices]
        enodes = [_shift(self.bound_gd(g).trace, 1, f"edge {label}")
                  for label, g in edges]
        return _maxnode("gog-max",
                        "vertex category against shifted edge dimension",
                        [_sup("over vertex groups", vnodes),
                         _sup("over edge groups", enodes)])

    def _polygon_rule(self, p: PolygonOfGroups, fam: Family) -> Optional[DerivationNode]:
        if p.d < 4:
            return None
        assumptions: Tuple[str, ...] = ()
        if p.concrete_maps:
            from .develop import check_curvature
            if not check_curvature(self.universe, p).holds:
                return None
        else:
            assumptions = (f"link condition asserted for {p.name}",)
        vnodes = [self.bound_cat(g, fam).trace for g in p.vertex_groups]
        enodes = [_shift(self.bound_gd(g).trace, 1, f"edge {i}")
                  for i, g in enumerate(p.edge_groups)]
        fnode = _shift(self.bound_gd(p.face_group).trace, 2, "face")
        return _maxnode(
            "polygon-max",
            f"{p.d}-gon of groups under the link condition",
            [_sup("over vertex groups", vnodes),
             _sup("over edge groups", enodes),
             fnode],
            assumptions)

    # -- the per-dimension recursion --------------------------------------

    def _cw_ladder(self, x: GcwDescription, fam: Family,
                   selection: Optional[FrozenSet[int]]
                   ) -> Tuple[FrozenSet[int], ExtNat, DerivationNode]:
        """Run the d_i ladder.  selection None means greedy arm choice.

        Ties go to the max arm, so the greedy selection set is the
        largest one attaining the optimum.
        """
        chosen: Set[int] = set()
        d = _sup("category of 0-cell stabilizers",
                 [self.bound_cat(g, fam).trace for g in x.dims[0]],
                 rule="rec-base")
        for i in range(1, x.n + 1):
            row = x.dims[i]
            gd_sup = _sup(f"shifted dimension of {i}-cell stabilizers",
                          [_shift(self.bound_gd(g).trace, i, f"{i}-cell") for g in row])
            cat_sup = _sup(f"shifted category of {i}-cell stabilizers",
                           [_shift(self.bound_cat(g, fam).trace, 1, f"{i}-cell")
                            for g in row])
            max_arm = _maxnode("rec-max", f"dimension {i}, max arm", [d, gd_sup])
            sum_arm = _sumnode("rec-sum", f"dimension {i}, sum arm", [d, cat_sup])
            if selection is not None:
                take_max = i in selection
            else:
                take_max = max_arm.value <= sum_arm.value
            if take_max:
                chosen.add(i)
                d = max_arm
            else:
                d = sum_arm
        return frozenset(chosen), d.value, d

    def eval_recursion(self, x: GcwDescription, fam: Family,
                       selection: Iterable[int]) -> ExtNat:
        sel = frozenset(selection)
        bad = [i for i in sel if not 1 <= i <= x.n]
        if bad:
            raise ValueError(f"selection set must lie in 1..{x.n}, got {sorted(bad)}")
        _, value, _ = self._cw_ladder(x, fam, sel)
        return value

    def optimize_selection(self, x: GcwDescription,
                           fam: Family) -> Tuple[FrozenSet[int], ExtNat]:
        chosen, value, _ = self._cw_ladder(x, fam, None)
        return chosen, value

    def max_combination(self, x: GcwDescription, fam: Family) -> ExtNat:
        'Closed form for the all-max ladder: no recursion, one sup.'
        base = supremum(self.bound_cat(g, fam).value for g in x.dims[0])
        shifted = supremum(self.bound_gd(g).value + i
                           for i in range(1, x.n + 1) for g in x.dims[i])
        return ext_max(base, shifted)

    def sum_combination(self, x: GcwDescription, fam: Family) -> ExtNat:
        'Closed form for the all-sum ladder.'
        total = supremum(self.bound_cat(g, fam).value for g in x.dims[0])
        for i in range(1, x.n + 1):
            total = total + supremum(self.bound_cat(g, fam).value + 1
                                     for g in x.dims[i])
        return total

    # -- gd ---------------------------------------------------------------

    def bound_gd(self, e: GroupExpr) -> BoundResult:
        hit = self.memo.get("gd", e, None)
        if hit is not None:
            return hit
        key = self._guard("gd", e, None)
        self._active.add(key)
        try:
            result = self._finish("gd", None, e, self._gd_candidates(e))
        finally:
            self._active.discard(key)
        return result

    def _gd_candidates(self, e: GroupExpr) -> List[DerivationNode]:
        u = self.universe
        out: List[DerivationNode] = []
        kind, payload, chain = u.resolve_chain(e)
        for nm in chain:
            sheet = u.sheets.get(nm)
            if sheet is None:
                continue
            if sheet.gd_ub.is_finite or (kind == "atom" and nm == payload):
                out.append(_leaf("declared", sheet.cite("gd"), sheet.gd_ub))
        if kind == "trivial":
            out.append(_leaf("trivial", "a point classifies the trivial group", ZERO))
        elif kind == "product":
            factors = [self.bound_gd(f).trace for f in payload.factors]
            out.append(_sumnode("product-gd",
                                "dimension is subadditive under direct products",
                                factors))
        elif kind in ("free", "graph"):
            vertices, edges = _as_gog(kind, payload)
            vnodes = [self.bound_gd(g).trace for _, g in vertices]
            enodes = [_shift(self.bound_gd(g).trace, 1, f"edge {label}")
                      for label, g in edges]
            out.append(_maxnode("gd-tree",
                                "action on the associated tree",
                                [_sup("over vertex groups", vnodes),
                                 _sup("over edge groups", enodes)]))
        elif kind == "gcw" and payload.contractible:
            cells = [_shift(self.bound_gd(g).trace, d, f"{d}-cell")
                     for d, g in payload.cells()]
            out.append(DerivationNode(
                "gd-cells", "dimension from cell stabilizers",
                supremum(c.value for c in cells),
                (f"contractibility asserted for {payload.name}",),
                tuple(cells)))
        return out

    # -- cd ---------------------------------------------------------------

    def bound_cd(self, e: GroupExpr) -> BoundResult:
        hit = self.memo.get("cd", e, None)
        if hit is not None:
            return hit
        key = self._guard("cd", e, None)
        self._active.add(key)
        try:
            result = self._finish("cd", None, e, self._cd_candidates(e))
        finally:
            self._active.discard(key)
        return result

    def _cd_candidates(self, e: GroupExpr) -> List[DerivationNode]:
        u = self.universe
        out: List[DerivationNode] = []
        kind, payload, chain = u.resolve_chain(e)
        for nm in chain:
            sheet = u.sheets.get(nm)
            if sheet is None:
                continue
            if sheet.cd_ub.is_finite or (kind == "atom" and nm == payload):
                out.append(_leaf("declared", sheet.cite("cd"), sheet.cd_ub))
            if sheet.gd_ub.is_finite:
                out.append(_leaf("gd-bound",
                                 "bounded by geometric dimension: " + sheet.cite("gd"),
                                 sheet.gd_ub))
        if kind == "trivial":
            out.append(_leaf("trivial", "trivial group", ZERO))
            return out
        if kind == "atom":
            return out
        if kind == "product":
            factors = [self.bound_cd(f).trace for f in payload.factors]
            out.append(_sumnode("cd-product",
                                "subadditive under direct products", factors))
        from .facts import TR
        cat = self.bound_cat(e, TR)
        out.append(_maxnode("cat-tr-as-cd",
                            "category over the trivial family is cohomological dimension",
                            [cat.trace]))
        return out

    # -- tc ---------------------------------------------------------------

    def bound_tc(self, e: GroupExpr) -> BoundResult:
        hit = self.memo.get("tc", e, None)
        if hit is not None:
            return hit
        key = self._guard("tc", e, None)
        self._active.add(key)
        try:
            result = self._finish("tc", None, e, self._tc_candidates(e))
        finally:
            self._active.discard(key)
        return result

    def _tc_candidates(self, e: GroupExpr) -> List[DerivationNode]:
        u = self.universe
        out: List[DerivationNode] = []
        kind, payload, chain = u.resolve_chain(e)
        for nm in chain:
            sheet = u.sheets.get(nm)
            if sheet is None:
                continue
            if sheet.tc_ub.is_finite or (kind == "atom" and nm == payload):
                out.append(_leaf("tc-declared", sheet.cite("tc"), sheet.tc_ub))
        if kind == "trivial":
            out.append(_leaf("trivial", "one rule moves a point", ZERO))
            return out
        if kind in ("free", "graph"):
            vertices, edges = _as_gog(kind, payload)
            out.append(self._tc_gog(vertices, edges))
        elif kind == "gcw" and payload.contractible:
            out.append(self._tc_gcw(payload))
        return out

    def _pair(self, a: GroupExpr, b: GroupExpr) -> GroupExpr:
        return DirectProduct((a, b))

    def _tc_gog(self, vertices, edges) -> DerivationNode:
        'Complexity of the square of the tree action, term by term.'
        tc_nodes = [self.bound_tc(g).trace for _, g in vertices]
        pair_nodes = [self.bound_cd(self._pair(vertices[i][1], vertices[j][1])).trace
                      for i in range(len(vertices))
                      for j in range(i + 1, len(vertices))]
        ve_nodes = [_shift(self.bound_gd(self._pair(gv, ge)).trace, 1,
                           f"vertex {vl} with edge {el}")
                    for vl, gv in vertices for el, ge in edges]
        ee_nodes = [_shift(self.bound_gd(self._pair(edges[i][1], edges[j][1])).trace, 2,
                           f"edges {edges[i][0]} and {edges[j][0]}")
                    for i in range(len(edges)) for j in range(i, len(edges))]
        terms = [
            _sup("complexity over vertex groups", tc_nodes),
            _sup("dimension of distinct vertex group pairs", pair_nodes),
            _sup("vertex-edge pairs, shifted", ve_nodes),
            _sup("edge pairs, shifted", ee_nodes),
        ]
        return _maxnode("tc-gog",
                        "complexity bound from the square of the tree", terms)

    def _tc_gcw(self, x: GcwDescription) -> DerivationNode:
        cells = x.cells()
        zero = [(i, g) for i, (d, g) in enumerate(cells) if d == 0]
        tc_nodes = [self.bound_tc(g).trace for _, g in zero]
        pair_nodes = [self.bound_cd(self._pair(zero[a][1], zero[b][1])).trace
                      for a in range(len(zero))
                      for b in range(a + 1, len(zero))]
        mixed = []
        for a, (da, ga) in enumerate(cells):
            for b in range(a, len(cells)):
                db, gb = cells[b]
                if max(da, db) < 1:
                    continue
                mixed.append(_shift(self.bound_gd(self._pair(ga, gb)).trace,
                                    da + db, f"cells of dimension {da} and {db}"))
        terms = [
            _sup("complexity over 0-cell stabilizers", tc_nodes),
            _sup("dimension of distinct 0-cell stabilizer pairs", pair_nodes),
            _sup("stabilizer pairs meeting positive dimension, shifted", mixed),
        ]
        return _maxnode("tc-gcw",
                        "complexity bound from the square of the complex", terms,
                        (f"contractibility asserted for {x.name}",))


def _as_gog(kind: str, payload) -> Tuple[List[Tuple[str, GroupExpr]],
                                         List[Tuple[str, GroupExpr]]]:
    'Uniform (vertices, edges) view of free products and graphs of groups.'
    if kind == "free":
        vertices = [(f"factor{i}", g) for i, g in enumerate(payload.factors)]
        edges = [(f"join{i}", TrivialGroup()) for i in range(len(payload.factors) - 1)]
        return vertices, edges
    graph: GraphOfGroups = payload
    vertices = list(graph.vertices)
    edges = [(f"edge{i}", e.group) for i, e in enumerate(graph.edges)]
    return vertices, edges
