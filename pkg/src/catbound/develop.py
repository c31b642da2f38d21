"""Brute-force developments of concrete group data.

Everything here works on multiplication tables: coset enumeration,
normal forms for an amalgam of two concrete finite groups over a common
concrete edge group, finite balls of the associated tree, the radius-1
star of a polygon development, the link condition at polygon vertices,
and stabilizer bookkeeping checks.

Scope restrictions (deliberate, desk scale):

  * balls of the tree are built only for single-vertex graphs and for
    two-vertex one-edge graphs with concrete groups and maps;
  * polygon developments are built only out to radius 1 (the closed
    star of the base face), with frontier cells recorded partially.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .model import (ConcreteFiniteGroup, GraphOfGroups, GroupExpr,
                    Homomorphism, PolygonOfGroups, Ref, Universe)


@dataclass(frozen=True)
class DevelopLimits:
    radius_limit: int = 4
    cell_limit: int = 10_000


# -- coset enumeration ----------------------------------------------------

@dataclass(frozen=True)
class CosetTable:
    group: ConcreteFiniteGroup
    subgroup: FrozenSet[int]
    cosets: Tuple[FrozenSet[int], ...]

    @property
    def index(self) -> int:
        return len(self.cosets)

    def coset_of(self, x: int) -> int:
        for i, c in enumerate(self.cosets):
            if x in c:
                return i
        raise ValueError(f"element {x} not covered by the coset table")


def enumerate_cosets(g: ConcreteFiniteGroup, h: Sequence[int]) -> CosetTable:
    """Left cosets x·h, listed with minimal representatives first."""
    hs = frozenset(h)
    if not g.is_subgroup(hs):
        raise ValueError("not a subgroup of the given group")
    seen: Set[int] = set()
    cosets: List[FrozenSet[int]] = []
    for x in range(g.order):
        if x in seen:
            continue
        coset = frozenset(g.mul(x, s) for s in hs)
        seen.update(coset)
        cosets.append(coset)
    return CosetTable(g, hs, tuple(cosets))


# -- amalgam normal forms -------------------------------------------------

@dataclass(frozen=True)
class AmalgamElement:
    """Normal form c · t_1 · t_2 ⋯ t_k in an amalgam over C.

    c is an element of the edge group; the word holds (side, element)
    syllables with alternating sides, each element a non-central coset
    representative of its side group.
    """

    c: int
    word: Tuple[Tuple[int, int], ...]


class AmalgamContext:
    """Exact arithmetic in G_0 *_C G_1 from multiplication tables.

    Each side group comes with an injective homomorphism from the edge
    group.  Elements are kept in a canonical form, so equality of group
    elements is equality of values; that is what makes coset sets and
    stabilizer sets of the tree ball exact.
    """

    def __init__(self, sides: Tuple[ConcreteFiniteGroup, ConcreteFiniteGroup],
                 edge: ConcreteFiniteGroup,
                 embeddings: Tuple[Homomorphism, Homomorphism]) -> None:
        for s, emb in zip(sides, embeddings):
            if not emb.injective:
                raise ValueError("edge group must embed injectively in both sides")
            if len(emb.images) != edge.order:
                raise ValueError("embedding does not cover the edge group")
        self.sides = sides
        self.edge = edge
        self.embeddings = embeddings
        self._image: Tuple[FrozenSet[int], ...] = tuple(
            frozenset(emb.images) for emb in embeddings)
        self._preimage: Tuple[Dict[int, int], ...] = tuple(
            {img: c for c, img in enumerate(emb.images)} for emb in embeddings)
        # factor x = i(c)·t with t the representative of the coset im(C)·x;
        # the image coset itself is represented by the identity
        self._factor: List[Dict[int, Tuple[int, int]]] = []
        for k, g in enumerate(sides):
            table: Dict[int, Tuple[int, int]] = {}
            for x in range(g.order):
                if x in table:
                    continue
                coset = sorted(g.mul(emb_img, x) for emb_img in self._image[k])
                rep = g.identity if g.identity in coset else min(coset)
                for y in coset:
                    c_img = g.mul(y, g.inv(rep))
                    table[y] = (self._preimage[k][c_img], rep)
            self._factor.append(table)

    @property
    def identity(self) -> AmalgamElement:
        return AmalgamElement(self.edge.identity, ())

    def embed_side(self, side: int, a: int) -> AmalgamElement:
        return self._canonical([(side, a)])

    def embed_edge(self, c: int) -> AmalgamElement:
        return AmalgamElement(c, ())

    def _syllables(self, g: AmalgamElement) -> List[Tuple[int, int]]:
        'Expand the normal form into raw (side, element) syllables.'
        if not g.word:
            if g.c == self.edge.identity:
                return []
            return [(0, self.embeddings[0].images[g.c])]
        (s0, t0), rest = g.word[0], list(g.word[1:])
        head = self.sides[s0].mul(self.embeddings[s0].images[g.c], t0)
        return [(s0, head)] + rest

    def _canonical(self, raw: Sequence[Tuple[int, int]]) -> AmalgamElement:
        word = [list(t) for t in raw]
        # reduce to a fixpoint: drop identities, merge same-side
        # neighbours, transport interior edge-image syllables leftward
        changed = True
        while changed:
            changed = False
            j = 0
            while j < len(word):
                side, a = word[j]
                g = self.sides[side]
                if a == g.identity:
                    del word[j]
                    changed = True
                    continue
                if j > 0 and word[j - 1][0] == side:
                    word[j - 1][1] = g.mul(word[j - 1][1], a)
                    del word[j]
                    # re-examine the merged syllable
                    j -= 1
                    changed = True
                    continue
                if j > 0 and a in self._image[side]:
                    c = self._preimage[side][a]
                    pside = word[j - 1][0]
                    pg = self.sides[pside]
                    word[j - 1][1] = pg.mul(word[j - 1][1],
                                            self.embeddings[pside].images[c])
                    del word[j]
                    changed = True
                    continue
                j += 1
        # leftward transport of the edge-group part of each syllable
        carry = self.edge.identity
        out: List[Tuple[int, int]] = []
        for side, a in reversed(word):
            g = self.sides[side]
            x = g.mul(a, self.embeddings[side].images[carry])
            carry, t = self._factor[side][x]
            if t != g.identity:
                out.insert(0, (side, t))
        return AmalgamElement(carry, tuple(out))

    def mul(self, a: AmalgamElement, b: AmalgamElement) -> AmalgamElement:
        return self._canonical(self._syllables(a) + self._syllables(b))

    def inv(self, a: AmalgamElement) -> AmalgamElement:
        raw: List[Tuple[int, int]] = []
        for side, t in reversed(a.word):
            raw.append((side, self.sides[side].inv(t)))
        raw.append((0, self.embeddings[0].images[self.edge.inv(a.c)]))
        return self._canonical(raw)


# -- development balls ----------------------------------------------------

@dataclass
class BallCell:
    id: int
    dim: int
    kind: str                     # vertex-left/vertex-right/edge for trees;
                                  # vertex/edge/face for polygons
    level: int
    stab_order: int
    stabilizer: Optional[FrozenSet] = None
    incident: Tuple[int, ...] = ()
    chart: Optional[int] = None   # polygon cells: vertex chart owning the
                                  # stabilizer coordinates


@dataclass
class DevelopmentBall:
    name: str
    radius: int
    cells: List[BallCell] = field(default_factory=list)
    complete: bool = True

    def of_dim(self, d: int) -> List[BallCell]:
        return [c for c in self.cells if c.dim == d]

    def tree_defect(self) -> int:
        'Independent cycles of the 1-skeleton: E - V + number of components.'
        vertices = [c.id for c in self.of_dim(0)]
        parent = {v: v for v in vertices}

        def find(v: int) -> int:
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        edges = 0
        for c in self.of_dim(1):
            ends = [i for i in c.incident if i in parent]
            if len(ends) == 2:
                edges += 1
                ra, rb = find(ends[0]), find(ends[1])
                if ra != rb:
                    parent[ra] = rb
        components = len({find(v) for v in vertices})
        return edges - len(vertices) + components


def _concrete_of(u: Universe, e: GroupExpr, what: str) -> ConcreteFiniteGroup:
    if isinstance(e, Ref) and e.name in u.concretes:
        return u.concretes[e.name]
    raise ValueError(f"{what} must name a concrete finite group, got {e!r}")


def _hom_of(u: Universe, name: str) -> Homomorphism:
    h = u.homs.get(name)
    if h is None:
        raise ValueError(f"unknown homomorphism {name!r}")
    return h


def bass_serre_ball(u: Universe, graph: GraphOfGroups, radius: int,
                    limits: DevelopLimits = DevelopLimits()) -> DevelopmentBall:
    """Ball of the tree acted on by the fundamental group of `graph`.

    Handles a single vertex with no edges, or exactly two vertices
    joined by one edge with concrete groups and concrete injections.
    """
    if radius < 0 or radius > limits.radius_limit:
        raise ValueError(f"radius must lie in 0..{limits.radius_limit}")
    if len(graph.edges) == 0 and len(graph.vertices) == 1:
        vid, ve = graph.vertices[0]
        g = _concrete_of(u, ve, f"vertex {vid}")
        ball = DevelopmentBall(graph.name, radius)
        ball.cells.append(BallCell(0, 0, "vertex-left", 0, g.order,
                                   frozenset(range(g.order))))
        return ball
    if len(graph.vertices) != 2 or len(graph.edges) != 1:
        raise ValueError(
            "concrete development handles only two vertex groups joined "
            "by a single edge")
    edge = graph.edges[0]
    if edge.maps is None:
        raise ValueError("concrete development needs concrete edge injections")
    if edge.v == edge.w:
        raise ValueError("concrete development does not handle loop edges")
    order = {vid: k for k, (vid, _) in enumerate(graph.vertices)}
    sides = (_concrete_of(u, graph.vertices[0][1], "left vertex"),
             _concrete_of(u, graph.vertices[1][1], "right vertex"))
    eg = _concrete_of(u, edge.group, "edge group")
    h_v, h_w = (_hom_of(u, edge.maps[0]), _hom_of(u, edge.maps[1]))
    # maps are written in edge declaration order (v end first)
    embeddings = [None, None]
    embeddings[order[edge.v]] = h_v
    embeddings[order[edge.w]] = h_w
    ctx = AmalgamContext(sides, eg, (embeddings[0], embeddings[1]))

    ball = DevelopmentBall(graph.name, radius)
    kind_of_side = ("vertex-left", "vertex-right")
    seen_vertices: Dict[FrozenSet[AmalgamElement], int] = {}
    seen_edges: Set[FrozenSet[AmalgamElement]] = set()
    cells = ball.cells

    def vertex_coset(g: AmalgamElement, side: int) -> FrozenSet[AmalgamElement]:
        return frozenset(ctx.mul(g, ctx.embed_side(side, a))
                         for a in range(sides[side].order))

    def edge_coset(g: AmalgamElement) -> FrozenSet[AmalgamElement]:
        return frozenset(ctx.mul(g, ctx.embed_edge(c))
                         for c in range(eg.order))

    def stab_set(g: AmalgamElement, members) -> FrozenSet[AmalgamElement]:
        gi = ctx.inv(g)
        return frozenset(ctx.mul(ctx.mul(g, m), gi) for m in members)

    def add_vertex(g: AmalgamElement, side: int, level: int) -> int:
        coset = vertex_coset(g, side)
        if coset in seen_vertices:
            return seen_vertices[coset]
        if len(cells) >= limits.cell_limit:
            raise ValueError(f"cell limit {limits.cell_limit} exceeded")
        cid = len(cells)
        members = [ctx.embed_side(side, a) for a in range(sides[side].order)]
        cells.append(BallCell(cid, 0, kind_of_side[side], level,
                              sides[side].order, stab_set(g, members)))
        seen_vertices[coset] = cid
        return cid

    queue: deque = deque()
    root = ctx.identity
    rid = add_vertex(root, 0, 0)
    queue.append((root, 0, rid, 0))
    edge_members = [ctx.embed_edge(c) for c in range(eg.order)]
    while queue:
        g, side, cid, level = queue.popleft()
        if level == radius:
            # unexpanded frontier: the tree continues past every vertex
            ball.complete = False
            continue
        other = 1 - side
        for a in range(sides[side].order):
            ga = ctx.mul(g, ctx.embed_side(side, a))
            ec = edge_coset(ga)
            if ec in seen_edges:
                continue
            seen_edges.add(ec)
            wid = add_vertex(ga, other, level + 1)
            if len(cells) >= limits.cell_limit:
                raise ValueError(f"cell limit {limits.cell_limit} exceeded")
            eid = len(cells)
            cells.append(BallCell(eid, 1, "edge", level, eg.order,
                                  stab_set(ga, edge_members),
                                  incident=(cid, wid)))
            queue.append((ga, other, wid, level + 1))
    return ball


# -- polygon development, radius 1 ----------------------------------------

@dataclass
class PolygonCharts:
    """Concrete images of the polygon's groups inside each vertex group.

    Chart i holds, inside vertex group G_i: the image of the incoming
    edge group E_{i-1}, the image of the outgoing edge group E_i, and
    the image of the face group (through either adjacent edge; the
    polygon validation guarantees the two routes agree).
    """

    groups: Tuple[ConcreteFiniteGroup, ...]
    edge_groups: Tuple[ConcreteFiniteGroup, ...]
    face_group: ConcreteFiniteGroup
    incoming: Tuple[FrozenSet[int], ...]
    outgoing: Tuple[FrozenSet[int], ...]
    face_image: Tuple[FrozenSet[int], ...]


def polygon_charts(u: Universe, p: PolygonOfGroups) -> PolygonCharts:
    if not p.concrete_maps:
        raise ValueError(f"polygon {p.name!r} has no concrete maps")
    groups = tuple(_concrete_of(u, g, f"vertex {i} of {p.name}")
                   for i, g in enumerate(p.vertex_groups))
    edge_groups = tuple(_concrete_of(u, g, f"edge {i} of {p.name}")
                        for i, g in enumerate(p.edge_groups))
    face_group = _concrete_of(u, p.face_group, f"face of {p.name}")
    incoming: List[FrozenSet[int]] = []
    outgoing: List[FrozenSet[int]] = []
    face_image: List[FrozenSet[int]] = []
    d = p.d
    for i in range(d):
        prev_maps = _hom_of(u, p.edge_maps[(i - 1) % d][1])
        next_maps = _hom_of(u, p.edge_maps[i][0])
        face_to_edge = _hom_of(u, p.face_maps[i])
        incoming.append(prev_maps.image_set())
        outgoing.append(next_maps.image_set())
        face_image.append(frozenset(
            next_maps.images[face_to_edge.images[z]]
            for z in range(face_group.order)))
    return PolygonCharts(groups, edge_groups, face_group,
                         tuple(incoming), tuple(outgoing), tuple(face_image))


def polygon_ball(u: Universe, p: PolygonOfGroups, radius: int = 1,
                 limits: DevelopLimits = DevelopLimits()) -> DevelopmentBall:
    """The closed star of the base face in the development.

    Radius 0 lists just the base face with its boundary; radius 1 adds
    every face and edge meeting a base vertex.  Cells past the star are
    not represented, so their incidences stay partial.
    """
    if radius not in (0, 1):
        raise ValueError("polygon developments are built to radius 1 only")
    charts = polygon_charts(u, p)
    d = p.d
    ball = DevelopmentBall(p.name, radius)
    cells = ball.cells
    vertex_ids: List[int] = []
    for i in range(d):
        g = charts.groups[i]
        cells.append(BallCell(len(cells), 0, "vertex", 0, g.order,
                              frozenset(range(g.order)), chart=i))
        vertex_ids.append(cells[-1].id)
    edge_ids: List[int] = []
    for i in range(d):
        cells.append(BallCell(len(cells), 1, "edge", 0,
                              charts.edge_groups[i].order,
                              charts.outgoing[i],
                              incident=(vertex_ids[i], vertex_ids[(i + 1) % d]),
                              chart=i))
        edge_ids.append(cells[-1].id)
    face_order = charts.face_group.order
    cells.append(BallCell(len(cells), 2, "face", 0, face_order,
                          charts.face_image[0],
                          incident=tuple(vertex_ids) + tuple(edge_ids),
                          chart=0))
    if radius == 0:
        ball.complete = False
        return ball

    def check_limit() -> None:
        if len(cells) >= limits.cell_limit:
            raise ValueError(f"cell limit {limits.cell_limit} exceeded")

    frontier = False
    # faces sharing a base edge: one per nontrivial coset of the face
    # image inside the edge image, glued across the two adjacent charts
    for i in range(d):
        g = charts.groups[i]
        shared = sorted(charts.outgoing[i])
        face_cosets = _cosets_within(g, shared, charts.face_image[i])
        for coset in face_cosets:
            if g.identity in coset:
                continue
            check_limit()
            cells.append(BallCell(
                len(cells), 2, "face", 1, face_order, None,
                incident=(edge_ids[i], vertex_ids[i], vertex_ids[(i + 1) % d]),
                chart=i))
            frontier = True
    # corner faces: cosets through neither adjacent base edge
    for i in range(d):
        g = charts.groups[i]
        reachable = charts.incoming[i] | charts.outgoing[i]
        face_cosets = _cosets_within(g, range(g.order), charts.face_image[i])
        for coset in face_cosets:
            if coset & reachable:
                continue
            check_limit()
            cells.append(BallCell(len(cells), 2, "face", 1, face_order, None,
                                  incident=(vertex_ids[i],), chart=i))
            frontier = True
    # edges at a base vertex other than the two base edges
    for i in range(d):
        g = charts.groups[i]
        for image, order in ((charts.incoming[i], charts.edge_groups[(i - 1) % d].order),
                             (charts.outgoing[i], charts.edge_groups[i].order)):
            for coset in _cosets_within(g, range(g.order), image):
                if g.identity in coset:
                    continue
                check_limit()
                cells.append(BallCell(len(cells), 1, "edge", 1, order, None,
                                      incident=(vertex_ids[i],), chart=i))
                frontier = True
    ball.complete = not frontier
    return ball


def _cosets_within(g: ConcreteFiniteGroup, ambient, sub: FrozenSet[int]
                   ) -> List[FrozenSet[int]]:
    'Left cosets x·sub for x ranging over ambient, deduplicated.'
    out: List[FrozenSet[int]] = []
    seen: Set[int] = set()
    for x in sorted(ambient):
        if x in seen:
            continue
        coset = frozenset(g.mul(x, s) for s in sub)
        seen.update(coset)
        out.append(coset)
    return out


# -- the link condition ---------------------------------------------------

@dataclass(frozen=True)
class CurvatureReport:
    holds: bool
    vertex: Optional[int] = None
    witness: Optional[Tuple[int, ...]] = None
    detail: str = ""


def check_curvature(u: Universe, p: PolygonOfGroups) -> CurvatureReport:
    """At each vertex: the two adjacent edge images must meet exactly in
    the face image.  Fails with the offending vertex and the actual
    intersection as witness."""
    charts = polygon_charts(u, p)
    for i in range(p.d):
        inter = charts.incoming[i] & charts.outgoing[i]
        if inter != charts.face_image[i]:
            return CurvatureReport(
                False, i, tuple(sorted(inter)),
                f"at vertex {i} the edge images intersect in "
                f"{sorted(inter)} but the face image is "
                f"{sorted(charts.face_image[i])}")
    return CurvatureReport(True, detail="edge images meet exactly in the face image")


def brute_force_curvature(u: Universe, p: PolygonOfGroups) -> CurvatureReport:
    """Independent oracle for check_curvature: elementwise scans with
    list membership, no set algebra."""
    if not p.concrete_maps:
        raise ValueError(f"polygon {p.name!r} has no concrete maps")
    d = p.d
    face_group = _concrete_of(u, p.face_group, "face")
    for i in range(d):
        g = _concrete_of(u, p.vertex_groups[i], f"vertex {i}")
        prev_edge = _concrete_of(u, p.edge_groups[(i - 1) % d], f"edge {(i - 1) % d}")
        next_edge = _concrete_of(u, p.edge_groups[i], f"edge {i}")
        h_in = _hom_of(u, p.edge_maps[(i - 1) % d][1])
        h_out = _hom_of(u, p.edge_maps[i][0])
        h_face = _hom_of(u, p.face_maps[i])
        im_in: List[int] = []
        for x in range(prev_edge.order):
            v = h_in.images[x]
            if v not in im_in:
                im_in.append(v)
        im_out: List[int] = []
        for x in range(next_edge.order):
            v = h_out.images[x]
            if v not in im_out:
                im_out.append(v)
        inter: List[int] = []
        for y in range(g.order):
            if y in im_in and y in im_out and y not in inter:
                inter.append(y)
        fimg: List[int] = []
        for z in range(face_group.order):
            v = h_out.images[h_face.images[z]]
            if v not in fimg:
                fimg.append(v)
        if sorted(inter) != sorted(fimg):
            return CurvatureReport(False, i, tuple(sorted(inter)),
                                   f"vertex {i}: intersection {sorted(inter)} "
                                   f"differs from face image {sorted(fimg)}")
    return CurvatureReport(True, detail="verified elementwise")


# -- stabilizer bookkeeping -----------------------------------------------

@dataclass
class StabilizerReport:
    ok: bool
    problems: List[str]
    orders: Dict[str, List[int]]


def verify_stabilizers(ball: DevelopmentBall) -> StabilizerReport:
    """Check recorded stabilizers against each other.

    Tree balls: every stabilizer set has the recorded order, and each
    edge stabilizer equals the intersection of its endpoint stabilizers.
    Polygon balls: base-cell containments within each vertex chart.
    """
    problems: List[str] = []
    orders: Dict[str, Set[int]] = {}
    by_id = {c.id: c for c in ball.cells}
    for c in ball.cells:
        orders.setdefault(c.kind, set()).add(c.stab_order)
        if c.stabilizer is not None and len(c.stabilizer) != c.stab_order:
            problems.append(
                f"cell {c.id} ({c.kind}): stabilizer set has "
                f"{len(c.stabilizer)} elements, order recorded {c.stab_order}")
    is_tree = all(c.dim <= 1 for c in ball.cells)
    if is_tree:
        for c in ball.cells:
            if c.dim != 1 or c.stabilizer is None:
                continue
            ends = [by_id[i] for i in c.incident if i in by_id]
            if len(ends) != 2:
                continue
            sv, sw = ends[0].stabilizer, ends[1].stabilizer
            if sv is not None and sw is not None and c.stabilizer != (sv & sw):
                problems.append(
                    f"edge {c.id}: stabilizer is not the intersection of "
                    f"its endpoint stabilizers")
    else:
        for c in ball.cells:
            if c.stabilizer is None or c.level != 0:
                continue
            for i in c.incident:
                lower = by_id.get(i)
                if (lower is None or lower.stabilizer is None
                        or lower.chart != c.chart):
                    continue
                if not c.stabilizer <= lower.stabilizer:
                    problems.append(
                        f"cell {c.id} ({c.kind}): stabilizer not contained "
                        f"in that of incident cell {i}")
    return StabilizerReport(not problems, problems,
                            {k: sorted(v) for k, v in orders.items()})


# -- dispatch -------------------------------------------------------------

def develop_target(u: Universe, name: str, radius: int,
                   limits: DevelopLimits = DevelopLimits()) -> DevelopmentBall:
    try:
        kind, payload = u.resolve(Ref(name))
    except (KeyError, ValueError) as exc:
        raise ValueError(str(exc)) from None
    if kind == "graph":
        return bass_serre_ball(u, payload, radius, limits)
    if kind == "polygon":
        return polygon_ball(u, payload, radius, limits)
    raise ValueError(f"{name!r} is not a graph or polygon of groups")
