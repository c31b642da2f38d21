"""Structural side of the calculator: group expressions and their carriers.

A group enters the system in one of three ways.  As a named atom backed
by a fact sheet, as a finite group given by its multiplication table, or
as a combination of other groups: direct product, free product, graph of
groups, polygon of groups, or a cell-complex description listing orbit
stabilizers per dimension.  Everything is referenced by name inside a
Universe, and validate() reports structural defects as diagnostics
instead of raising.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union


@dataclass(frozen=True)
class Diagnostic:
    loc: str
    message: str

    def __str__(self) -> str:
        return f"{self.loc}: {self.message}"


# ---------------------------------------------------------------------------
# concrete finite groups

@dataclass(frozen=True)
class ConcreteFiniteGroup:
    """A finite group as a full multiplication table over element indices.

    table[i][j] is the index of (element i) * (element j).  Builders
    below always produce well-formed tables; tables read from user input
    go through verify() at load time.
    """

    table: Tuple[Tuple[int, ...], ...]
    identity: int
    labels: Tuple[str, ...]
    generators: Tuple[int, ...] = ()

    @property
    def order(self) -> int:
        return len(self.table)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        e = self.identity
        for b in range(self.order):
            if self.table[a][b] == e:
                return b
        raise ValueError(f"element {a} has no inverse")

    def verify(self, loc: str = "table") -> List[Diagnostic]:
        out: List[Diagnostic] = []
        n = self.order
        for i, row in enumerate(self.table):
            if len(row) != n:
                out.append(Diagnostic(loc, f"row {i} has length {len(row)}, expected {n}"))
                return out
            for j, v in enumerate(row):
                if not 0 <= v < n:
                    out.append(Diagnostic(loc, f"entry ({i},{j}) = {v} out of range"))
                    return out
        e = self.identity
        if not 0 <= e < n:
            return [Diagnostic(loc, f"identity index {e} out of range")]
        for i in range(n):
            if self.table[e][i] != i or self.table[i][e] != i:
                out.append(Diagnostic(loc, f"index {e} is not an identity (fails at {i})"))
                break
        for i in range(n):
            if e not in self.table[i]:
                out.append(Diagnostic(loc, f"element {i} has no inverse"))
                break
        checked = 0
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                        out.append(Diagnostic(
                            loc, f"associativity fails at ({a},{b},{c})"))
                        checked += 1
                        if checked >= 3:
                            return out
        return out

    def generated_subgroup(self, elems: Iterable[int]) -> frozenset:
        seen: Set[int] = {self.identity}
        frontier = list(set(elems) | {self.identity})
        seen.update(frontier)
        while frontier:
            nxt = []
            for a in frontier:
                for b in list(seen):
                    for c in (self.table[a][b], self.table[b][a]):
                        if c not in seen:
                            seen.add(c)
                            nxt.append(c)
            frontier = nxt
        return frozenset(seen)

    def is_subgroup(self, subset: Iterable[int]) -> bool:
        s = frozenset(subset)
        if self.identity not in s:
            return False
        return all(self.table[a][b] in s for a in s for b in s)


def cyclic_group(n: int) -> ConcreteFiniteGroup:
    if n < 1:
        raise ValueError("cyclic(n) needs n >= 1")
    table = tuple(tuple((i + j) % n for j in range(n)) for i in range(n))
    gens = (1,) if n > 1 else ()
    return ConcreteFiniteGroup(table, 0, tuple(str(i) for i in range(n)), gens)


def product_group(factors: Sequence[ConcreteFiniteGroup]) -> ConcreteFiniteGroup:
    if not factors:
        raise ValueError("product(...) needs at least one factor")
    index_tuples = list(itertools.product(*[range(g.order) for g in factors]))
    pos = {t: i for i, t in enumerate(index_tuples)}
    table = tuple(
        tuple(pos[tuple(g.table[a[k]][b[k]] for k, g in enumerate(factors))]
              for b in index_tuples)
        for a in index_tuples)
    identity = pos[tuple(g.identity for g in factors)]
    labels = tuple("(" + ",".join(g.labels[t[k]] for k, g in enumerate(factors)) + ")"
                   for t in index_tuples)
    gens = []
    for k, g in enumerate(factors):
        for s in g.generators:
            t = tuple(s if k == j else factors[j].identity for j in range(len(factors)))
            gens.append(pos[t])
    return ConcreteFiniteGroup(table, identity, labels, tuple(gens))


def table_group(rows: Sequence[Sequence[int]],
                labels: Optional[Sequence[str]] = None) -> ConcreteFiniteGroup:
    """Group from an explicit multiplication table.

    The identity is located by scanning; a table without one, or one
    failing the group axioms, raises ValueError.
    """
    n = len(rows)
    if n == 0:
        raise ValueError("empty multiplication table")
    table = tuple(tuple(int(v) for v in row) for row in rows)
    identity = None
    for e in range(n):
        if len(table[e]) == n and all(
                len(table[i]) == n and table[e][i] == i and table[i][e] == i
                for i in range(n)):
            identity = e
            break
    if identity is None:
        raise ValueError("multiplication table has no identity element")
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    g = ConcreteFiniteGroup(table, identity, tuple(labels), ())
    problems = g.verify()
    if problems:
        raise ValueError("; ".join(d.message for d in problems))
    return g


@dataclass(frozen=True)
class Homomorphism:
    """A verified map between two named concrete groups, as a full image table."""

    name: str
    source: str
    target: str
    images: Tuple[int, ...]

    @property
    def injective(self) -> bool:
        return len(set(self.images)) == len(self.images)

    def image_set(self) -> frozenset:
        return frozenset(self.images)

    def preimage(self, y: int) -> int:
        return self.images.index(y)

    def verify(self, src: ConcreteFiniteGroup, tgt: ConcreteFiniteGroup,
               loc: str = "hom") -> List[Diagnostic]:
        out: List[Diagnostic] = []
        if len(self.images) != src.order:
            return [Diagnostic(loc, f"image table length {len(self.images)} != source order {src.order}")]
        for v in self.images:
            if not 0 <= v < tgt.order:
                return [Diagnostic(loc, f"image {v} out of range for target")]
        for a in range(src.order):
            for b in range(src.order):
                if self.images[src.table[a][b]] != tgt.table[self.images[a]][self.images[b]]:
                    out.append(Diagnostic(loc, f"not a homomorphism at ({a},{b})"))
                    return out
        return out


def hom_from_generator_images(name: str, source: str, target: str,
                              src: ConcreteFiniteGroup, tgt: ConcreteFiniteGroup,
                              pairs: Sequence[Tuple[int, int]]) -> Union[Homomorphism, Diagnostic]:
    """Extend generator images to the whole source group by closure.

    Returns a Diagnostic when the listed elements do not generate the
    source or the images are inconsistent with the multiplication.
    """
    loc = f"hom {name}"
    images: Dict[int, int] = {src.identity: tgt.identity}
    for s, t in pairs:
        if not 0 <= s < src.order:
            return Diagnostic(loc, f"source element {s} out of range")
        if not 0 <= t < tgt.order:
            return Diagnostic(loc, f"target element {t} out of range")
        if images.get(s, t) != t:
            return Diagnostic(loc, f"conflicting images for element {s}")
        images[s] = t
    frontier = list(images)
    while frontier:
        nxt = []
        for a in frontier:
            for s, t in list(images.items()):
                for c, ic in ((src.table[a][s], tgt.table[images[a]][t]),
                              (src.table[s][a], tgt.table[t][images[a]])):
                    known = images.get(c)
                    if known is None:
                        images[c] = ic
                        nxt.append(c)
                    elif known != ic:
                        return Diagnostic(loc, "generator images are inconsistent")
        frontier = nxt
    if len(images) != src.order:
        return Diagnostic(loc, "listed elements do not generate the source group")
    hom = Homomorphism(name, source, target, tuple(images[i] for i in range(src.order)))
    errs = hom.verify(src, tgt, loc)
    if errs:
        return errs[0]
    return hom


# ---------------------------------------------------------------------------
# group expressions

@dataclass(frozen=True)
class Ref:
    'Reference to any named declaration (atom, definition, graph, ...).'
    name: str


@dataclass(frozen=True)
class TrivialGroup:
    pass


@dataclass(frozen=True)
class DirectProduct:
    factors: Tuple["GroupExpr", ...]


@dataclass(frozen=True)
class FreeProduct:
    factors: Tuple["GroupExpr", ...]


GroupExpr = Union[Ref, TrivialGroup, DirectProduct, FreeProduct]

TRIVIAL = TrivialGroup()


def expr_key(e: GroupExpr) -> str:
    'Stable structural key, used for memo tables and deterministic output.'
    if isinstance(e, Ref):
        return f"@{e.name}"
    if isinstance(e, TrivialGroup):
        return "1"
    if isinstance(e, DirectProduct):
        return "x(" + ",".join(expr_key(f) for f in e.factors) + ")"
    if isinstance(e, FreeProduct):
        return "*(" + ",".join(expr_key(f) for f in e.factors) + ")"
    raise TypeError(f"not a group expression: {e!r}")


def expr_refs(e: GroupExpr) -> List[str]:
    if isinstance(e, Ref):
        return [e.name]
    if isinstance(e, (DirectProduct, FreeProduct)):
        out: List[str] = []
        for f in e.factors:
            out.extend(expr_refs(f))
        return out
    return []


def free_group_expr(rank: int) -> GroupExpr:
    'free(k) is spelled out as a free product of k copies of the atom Z.'
    if rank < 0:
        raise ValueError("free(k) needs k >= 0")
    if rank == 0:
        return TRIVIAL
    if rank == 1:
        return Ref("Z")
    return FreeProduct(tuple(Ref("Z") for _ in range(rank)))


# ---------------------------------------------------------------------------
# combination carriers

@dataclass(frozen=True)
class Edge:
    v: str
    w: str
    group: GroupExpr
    maps: Optional[Tuple[str, str]] = None  # hom names into G_v, G_w; None = asserted


@dataclass(frozen=True)
class GraphOfGroups:
    name: str
    vertices: Tuple[Tuple[str, GroupExpr], ...]
    edges: Tuple[Edge, ...]

    def vertex_group(self, vid: str) -> GroupExpr:
        for k, g in self.vertices:
            if k == vid:
                return g
        raise KeyError(vid)

    def vertex_ids(self) -> List[str]:
        return [k for k, _ in self.vertices]


@dataclass(frozen=True)
class PolygonOfGroups:
    """A d-gon with groups on vertices, edges and the face.

    Edge i joins vertex i to vertex i+1 (mod d).  edge_maps[i], when
    concrete, names the homs from edge group i into vertex group i and
    vertex group i+1; face_maps[i] names the hom from the face group
    into edge group i.
    """

    name: str
    d: int
    vertex_groups: Tuple[GroupExpr, ...]
    edge_groups: Tuple[GroupExpr, ...]
    face_group: GroupExpr
    edge_maps: Optional[Tuple[Tuple[str, str], ...]] = None
    face_maps: Optional[Tuple[str, ...]] = None

    @property
    def concrete_maps(self) -> bool:
        return self.edge_maps is not None and self.face_maps is not None


@dataclass(frozen=True)
class GcwDescription:
    'Orbit stabilizers of a finite-dimensional cocompact complex, per dimension.'

    name: str
    dims: Tuple[Tuple[GroupExpr, ...], ...]
    contractible: bool = False

    @property
    def n(self) -> int:
        return len(self.dims) - 1

    def cells(self) -> List[Tuple[int, GroupExpr]]:
        return [(d, g) for d, row in enumerate(self.dims) for g in row]


# ---------------------------------------------------------------------------
# the universe of declarations

GROUP_KINDS = ("atom", "def", "concrete", "graph", "polygon", "gcw")


class Universe:
    """Symbol table for one loaded model.

    Group-like declarations share one namespace; homs, families and the
    application setups each get their own.  An atom may carry both a
    fact sheet and a concrete realization under the same name.
    """

    def __init__(self) -> None:
        self.sheets: Dict[str, object] = {}        # name -> facts.FactSheet
        self.defs: Dict[str, GroupExpr] = {}
        self.concretes: Dict[str, ConcreteFiniteGroup] = {}
        self.graphs: Dict[str, GraphOfGroups] = {}
        self.polygons: Dict[str, PolygonOfGroups] = {}
        self.gcws: Dict[str, GcwDescription] = {}
        self.homs: Dict[str, Homomorphism] = {}
        self.families: Dict[str, object] = {}      # name -> facts.Family
        self.setups: Dict[str, object] = {}        # name -> apps setup

    # -- declaration ------------------------------------------------------

    def group_names(self) -> Set[str]:
        out: Set[str] = set()
        for d in (self.sheets, self.defs, self.concretes, self.graphs,
                  self.polygons, self.gcws):
            out.update(d.keys())
        return out

    def kind_of(self, name: str) -> Optional[str]:
        if name in self.defs:
            return "def"
        if name in self.graphs:
            return "graph"
        if name in self.polygons:
            return "polygon"
        if name in self.gcws:
            return "gcw"
        if name in self.concretes:
            return "concrete"
        if name in self.sheets:
            return "atom"
        return None

    def drop_group(self, name: str) -> None:
        'Used when a later declaration shadows a prelude name.'
        for d in (self.sheets, self.defs, self.concretes, self.graphs,
                  self.polygons, self.gcws):
            d.pop(name, None)

    # -- resolution -------------------------------------------------------

    def resolve(self, e: GroupExpr) -> Tuple[str, object]:
        """Classify an expression: ('trivial'|'product'|'free'|kind, payload).

        Chases named definitions; a circular chain raises ValueError
        (validate() reports such chains as diagnostics beforehand).
        """
        seen: Set[str] = set()
        while True:
            if isinstance(e, TrivialGroup):
                return "trivial", e
            if isinstance(e, DirectProduct):
                return "product", e
            if isinstance(e, FreeProduct):
                return "free", e
            if not isinstance(e, Ref):
                raise TypeError(f"not a group expression: {e!r}")
            name = e.name
            if name in seen:
                raise ValueError(f"circular definition through {name!r}")
            seen.add(name)
            if name in self.defs:
                e = self.defs[name]
                continue
            if name in self.graphs:
                return "graph", self.graphs[name]
            if name in self.polygons:
                return "polygon", self.polygons[name]
            if name in self.gcws:
                return "gcw", self.gcws[name]
            if name in self.sheets or name in self.concretes:
                return "atom", name
            raise KeyError(f"unresolved group name {name!r}")

    def resolve_chain(self, e: GroupExpr) -> Tuple[str, object, Tuple[str, ...]]:
        """Like resolve, but also reports the named definitions chased.

        The chain lists every Ref name passed through, outermost first,
        including a terminal atom.  Fact sheets declared on any chain
        name apply to the expression.
        """
        chain: List[str] = []
        seen: Set[str] = set()
        while True:
            if isinstance(e, TrivialGroup):
                return "trivial", e, tuple(chain)
            if isinstance(e, DirectProduct):
                return "product", e, tuple(chain)
            if isinstance(e, FreeProduct):
                return "free", e, tuple(chain)
            if not isinstance(e, Ref):
                raise TypeError(f"not a group expression: {e!r}")
            name = e.name
            if name in seen:
                raise ValueError(f"circular definition through {name!r}")
            seen.add(name)
            chain.append(name)
            if name in self.defs:
                e = self.defs[name]
                continue
            if name in self.graphs:
                return "graph", self.graphs[name], tuple(chain)
            if name in self.polygons:
                return "polygon", self.polygons[name], tuple(chain)
            if name in self.gcws:
                return "gcw", self.gcws[name], tuple(chain)
            if name in self.sheets or name in self.concretes:
                return "atom", name, tuple(chain)
            raise KeyError(f"unresolved group name {name!r}")

    def dependencies(self, name: str) -> List[str]:
        out: List[str] = []
        if name in self.defs:
            out.extend(expr_refs(self.defs[name]))
        if name in self.graphs:
            g = self.graphs[name]
            for _, ge in g.vertices:
                out.extend(expr_refs(ge))
            for e in g.edges:
                out.extend(expr_refs(e.group))
        if name in self.polygons:
            p = self.polygons[name]
            for ge in p.vertex_groups + p.edge_groups + (p.face_group,):
                out.extend(expr_refs(ge))
        if name in self.gcws:
            for _, ge in self.gcws[name].cells():
                out.extend(expr_refs(ge))
        return out


def _connected(vertex_ids: List[str], edges: Sequence[Edge]) -> bool:
    if not vertex_ids:
        return False
    seen = {vertex_ids[0]}
    frontier = [vertex_ids[0]]
    while frontier:
        v = frontier.pop()
        for e in edges:
            for a, b in ((e.v, e.w), (e.w, e.v)):
                if a == v and b not in seen:
                    seen.add(b)
                    frontier.append(b)
    return seen == set(vertex_ids)


def validate(u: Universe) -> List[Diagnostic]:
    """All structural and declaration-level checks, as a diagnostic list.

    Includes fact-sheet consistency, pulled in from the facts module.
    """
    out: List[Diagnostic] = []

    for name, g in sorted(u.concretes.items()):
        out.extend(g.verify(f"group {name}"))

    for name, h in sorted(u.homs.items()):
        loc = f"hom {name}"
        src = u.concretes.get(h.source)
        tgt = u.concretes.get(h.target)
        if src is None:
            out.append(Diagnostic(loc, f"source {h.source!r} is not a concrete group"))
        if tgt is None:
            out.append(Diagnostic(loc, f"target {h.target!r} is not a concrete group"))
        if src is not None and tgt is not None:
            out.extend(h.verify(src, tgt, loc))

    known = u.group_names()

    def check_expr(e: GroupExpr, loc: str) -> None:
        if isinstance(e, (DirectProduct, FreeProduct)):
            if not e.factors:
                out.append(Diagnostic(loc, "empty product expression"))
            for f in e.factors:
                check_expr(f, loc)
        elif isinstance(e, Ref) and e.name not in known:
            out.append(Diagnostic(loc, f"unresolved group name {e.name!r}"))

    for name, e in sorted(u.defs.items()):
        check_expr(e, f"group {name}")

    for name, g in sorted(u.graphs.items()):
        loc = f"graph {name}"
        ids = g.vertex_ids()
        if len(set(ids)) != len(ids):
            out.append(Diagnostic(loc, "duplicate vertex ids"))
        if not ids:
            out.append(Diagnostic(loc, "graph needs at least one vertex"))
        for _, ge in g.vertices:
            check_expr(ge, loc)
        for i, e in enumerate(g.edges):
            eloc = f"{loc} edge {i}"
            for end in (e.v, e.w):
                if end not in ids:
                    out.append(Diagnostic(eloc, f"unknown endpoint {end!r}"))
            check_expr(e.group, eloc)
            if e.maps is not None:
                for hname in e.maps:
                    if hname not in u.homs:
                        out.append(Diagnostic(eloc, f"unknown hom {hname!r}"))
        if ids and not _connected(ids, g.edges):
            out.append(Diagnostic(loc, "underlying graph is not connected"))

    for name, p in sorted(u.polygons.items()):
        loc = f"polygon {name}"
        if p.d < 3:
            out.append(Diagnostic(loc, f"d = {p.d}, but a polygon needs d >= 3"))
        if len(p.vertex_groups) != p.d or len(p.edge_groups) != p.d:
            out.append(Diagnostic(loc, "vertex/edge group lists must have length d"))
            continue
        for ge in p.vertex_groups + p.edge_groups + (p.face_group,):
            check_expr(ge, loc)
        if (p.edge_maps is None) != (p.face_maps is None):
            out.append(Diagnostic(loc, "give all incidence maps or none"))
        if p.edge_maps is not None and p.face_maps is not None:
            if len(p.edge_maps) != p.d or len(p.face_maps) != p.d:
                out.append(Diagnostic(loc, "map lists must have length d"))
            else:
                out.extend(_check_polygon_maps(u, p, loc))

    for name, x in sorted(u.gcws.items()):
        loc = f"gcw {name}"
        if not x.dims:
            out.append(Diagnostic(loc, "needs at least dimension 0"))
            continue
        if x.contractible and not x.dims[0]:
            out.append(Diagnostic(loc, "contractible complex needs a 0-cell"))
        for _, ge in x.cells():
            check_expr(ge, loc)

    out.extend(_cycle_diagnostics(u))

    # fact-sheet closure and consistency lives with the fact logic
    from .facts import sheet_diagnostics
    for name in sorted(u.sheets):
        out.extend(sheet_diagnostics(u, name))

    return out


def _check_polygon_maps(u: Universe, p: PolygonOfGroups, loc: str) -> List[Diagnostic]:
    out: List[Diagnostic] = []

    def concrete_of(e: GroupExpr, what: str) -> Optional[str]:
        if isinstance(e, Ref) and e.name in u.concretes:
            return e.name
        out.append(Diagnostic(loc, f"{what} must name a concrete group when maps are given"))
        return None

    vnames = [concrete_of(g, f"vertex {i}") for i, g in enumerate(p.vertex_groups)]
    enames = [concrete_of(g, f"edge {i}") for i, g in enumerate(p.edge_groups)]
    fname = concrete_of(p.face_group, "face")
    if None in vnames or None in enames or fname is None:
        return out

    homs: Dict[Tuple[int, int], Optional[Homomorphism]] = {}
    for i in range(p.d):
        for side, hname in enumerate(p.edge_maps[i]):
            h = u.homs.get(hname)
            tgt = vnames[(i + side) % p.d]
            if h is None:
                out.append(Diagnostic(loc, f"unknown hom {hname!r}"))
            elif h.source != enames[i] or h.target != tgt:
                out.append(Diagnostic(
                    loc, f"hom {hname!r} should map {enames[i]} -> {tgt}"))
                h = None
            elif not h.injective:
                out.append(Diagnostic(loc, f"hom {hname!r} must be injective"))
            homs[(i, side)] = h
        h = u.homs.get(p.face_maps[i])
        if h is None:
            out.append(Diagnostic(loc, f"unknown hom {p.face_maps[i]!r}"))
        elif h.source != fname or h.target != enames[i]:
            out.append(Diagnostic(
                loc, f"hom {p.face_maps[i]!r} should map {fname} -> {enames[i]}"))
            h = None
        elif not h.injective:
            out.append(Diagnostic(loc, f"hom {p.face_maps[i]!r} must be injective"))
        homs[(i, 2)] = h

    # the face must reach each vertex the same way through both adjacent edges
    for i in range(p.d):
        left = homs.get(((i - 1) % p.d, 1)), homs.get(((i - 1) % p.d, 2))
        right = homs.get((i, 0)), homs.get((i, 2))
        if None in left or None in right:
            continue
        by_left = tuple(left[0].images[left[1].images[x]]
                        for x in range(len(left[1].images)))
        by_right = tuple(right[0].images[right[1].images[x]]
                         for x in range(len(right[1].images)))
        if by_left != by_right:
            out.append(Diagnostic(
                loc, f"face maps do not commute with incidence at vertex {i}"))
    return out


def _cycle_diagnostics(u: Universe) -> List[Diagnostic]:
    out: List[Diagnostic] = []
    state: Dict[str, int] = {}  # 1 = visiting, 2 = done

    def visit(name: str, trail: List[str]) -> None:
        mark = state.get(name)
        if mark == 2:
            return
        if mark == 1:
            cycle = trail[trail.index(name):] + [name]
            out.append(Diagnostic(
                f"group {name}", "circular definition: " + " -> ".join(cycle)))
            return
        state[name] = 1
        for dep in u.dependencies(name):
            if u.kind_of(dep) is not None:
                visit(dep, trail + [name])
        state[name] = 2

    for name in sorted(u.group_names()):
        visit(name, [])
    return out
