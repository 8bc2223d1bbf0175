"""Rips complexes at a scale, their invariants, and chain homotopy.

The complex at scale E is the clique complex of the E-adjacency graph,
capped at a dimension (the 2-skeleton determines everything at the
fundamental-group level, so d_max defaults to 2).  Two chains with the
same endpoints are homotopic when a sequence of elementary moves turns
one into the other; a move inserts or deletes a single vertex that spans
a simplex with its neighbors in the chain.

``chains_homotopic`` is a three-tier semi-decision procedure: an integer
homology obstruction (certain "no"), a bidirectional search over
elementary moves (certain "yes", with a replayable script), and coset
enumeration on the edge-path presentation (exact when it completes).
Budgets are explicit; exhausting them yields "unknown", never a silent
wrong answer.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coset import coset_enumeration, free_reduce, word_inverse
from .snf import Cokernel, rank_z
from .space import Chain, FiniteUniformSpace, SymRelation, UniformMap, entourage_image

__all__ = [
    "BlowupError",
    "RipsComplex",
    "AbelianInvariants",
    "Presentation",
    "HomotopyVerdict",
    "Move",
    "build_rips",
    "build_rips_relation",
    "h1",
    "pi1_presentation",
    "chains_homotopic",
    "is_e_short",
    "e_homotopic_pair",
    "induced_simplicial_map",
    "apply_move",
    "replay_moves",
    "default_move_budget",
    "default_coset_budget",
]

SIMPLEX_CAP = 500_000


def default_move_budget() -> int:
    return int(os.environ.get("UCL_BUDGET_MOVES", "10000"))


def default_coset_budget() -> int:
    return int(os.environ.get("UCL_BUDGET_COSETS", "100000"))


class BlowupError(RuntimeError):
    """Simplex enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class RipsComplex:
    """Clique complex of a relation, listed dimension by dimension."""

    relation: SymRelation
    d_max: int
    simplices: tuple  # simplices[k] = sorted tuple of (k+1)-vertex tuples
    scale: Optional[int] = None
    space: Optional[FiniteUniformSpace] = None

    @property
    def n(self) -> int:
        return self.relation.npoints

    @property
    def vertices(self):
        return self.simplices[0]

    @property
    def edges(self):
        return self.simplices[1] if len(self.simplices) > 1 else ()

    @property
    def triangles(self):
        return self.simplices[2] if len(self.simplices) > 2 else ()

    def simplex_count(self) -> int:
        return sum(len(s) for s in self.simplices)

    def has_simplex(self, verts) -> bool:
        verts = tuple(sorted(set(verts)))
        k = len(verts) - 1
        if k >= len(self.simplices):
            return False
        return verts in set(self.simplices[k])

    def adjacency(self) -> np.ndarray:
        m = self.relation.matrix.copy()
        np.fill_diagonal(m, False)
        return m

    def edge_index(self):
        return {e: i for i, e in enumerate(self.edges)}

    def boundary_1(self) -> np.ndarray:
        """Vertex-by-edge signed incidence matrix."""
        vidx = {v[0]: i for i, v in enumerate(self.vertices)}
        m = np.zeros((len(self.vertices), len(self.edges)), dtype=np.int64)
        for j, (u, v) in enumerate(self.edges):
            m[vidx[u], j] -= 1
            m[vidx[v], j] += 1
        return m

    def boundary_2(self) -> np.ndarray:
        """Edge-by-triangle signed incidence matrix."""
        eidx = self.edge_index()
        m = np.zeros((len(self.edges), len(self.triangles)), dtype=np.int64)
        for j, (a, b, c) in enumerate(self.triangles):
            m[eidx[(b, c)], j] += 1
            m[eidx[(a, c)], j] -= 1
            m[eidx[(a, b)], j] += 1
        return m

    def cycle_vector(self, pts: Sequence[int]) -> np.ndarray:
        """Signed edge-traversal counts of a closed chain."""
        if pts[0] != pts[-1]:
            raise ValueError("cycle_vector needs a closed chain")
        eidx = self.edge_index()
        z = np.zeros(len(self.edges), dtype=np.int64)
        for a, b in zip(pts, pts[1:]):
            if a == b:
                continue
            if a < b:
                z[eidx[(a, b)]] += 1
            else:
                z[eidx[(b, a)]] -= 1
        return z


def build_rips_relation(
    relation: SymRelation,
    d_max: int = 2,
    cap: int = SIMPLEX_CAP,
    scale: Optional[int] = None,
    space: Optional[FiniteUniformSpace] = None,
) -> RipsComplex:
    """Enumerate all bounded subsets of size at most d_max+1."""
    n = relation.npoints
    adj = relation.matrix.copy()
    np.fill_diagonal(adj, False)
    levels = [tuple((v,) for v in range(n))]
    count = n
    for size in range(2, d_max + 2):
        prev = levels[-1]
        cur = []
        for simplex in prev:
            last = simplex[-1]
            common = adj[simplex[0]].copy()
            for v in simplex[1:]:
                common &= adj[v]
            for w in np.nonzero(common)[0]:
                if w > last:
                    cur.append(simplex + (int(w),))
                    count += 1
                    if count > cap:
                        raise BlowupError(
                            "simplex count exceeds cap %d at size %d" % (cap, size)
                        )
        levels.append(tuple(cur))
    return RipsComplex(relation, d_max, tuple(levels), scale=scale, space=space)


def build_rips(space: FiniteUniformSpace, i: int, d_max: int = 2, cap: int = SIMPLEX_CAP) -> RipsComplex:
    if d_max < 1:
        raise ValueError("d_max must be at least 1")
    return build_rips_relation(space.entry(i), d_max=d_max, cap=cap, scale=i, space=space)


@dataclass(frozen=True)
class AbelianInvariants:
    """Free rank plus torsion coefficients in divisibility order."""

    rank: int
    torsion: tuple = ()

    def __post_init__(self):
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a != 0:
                raise ValueError("torsion coefficients must divide successively")
        if any(t < 2 for t in self.torsion):
            raise ValueError("torsion coefficients must be at least 2")

    def is_trivial(self) -> bool:
        return self.rank == 0 and not self.torsion

    def __str__(self):
        parts = ["Z/%d" % t for t in self.torsion]
        if self.rank:
            parts.append("Z^%d" % self.rank if self.rank > 1 else "Z")
        return " + ".join(parts) if parts else "0"


def h1(complex: RipsComplex) -> AbelianInvariants:
    """First integral homology via Smith form of the boundary matrices."""
    if complex.d_max < 2:
        raise ValueError("h1 needs the 2-skeleton (d_max >= 2)")
    d1 = complex.boundary_1()
    d2 = complex.boundary_2()
    nullity = d1.shape[1] - rank_z(d1)
    cok = Cokernel(d2, n_ambient=d1.shape[1])
    rank = nullity - (len(complex.edges) - cok.free_rank)
    return AbelianInvariants(rank, tuple(cok.torsion_coefficients))


@dataclass(frozen=True)
class Presentation:
    """Edge-path presentation from a spanning tree: one generator per
    non-tree edge, one relator per triangle."""

    ngens: int
    relators: tuple
    basepoint: int
    component: tuple
    gen_edges: Optional[tuple] = None  # generator -> (u, v) with u < v
    edge_words: Optional[dict] = None  # directed edge -> word tuple

    def word_of_chain(self, pts: Sequence[int]):
        """Image of an edge path in the presentation's free group."""
        if self.edge_words is None:
            raise ValueError("presentation has no edge data (already simplified?)")
        word = []
        comp = set(self.component)
        for a, b in zip(pts, pts[1:]):
            if a not in comp or b not in comp:
                raise ValueError("chain leaves the basepoint component")
            if a == b:
                continue
            word.extend(self.edge_words[(a, b)])
        return free_reduce(word)

    def abelianized(self) -> AbelianInvariants:
        m = np.zeros((self.ngens, max(len(self.relators), 1)), dtype=np.int64)
        for j, rel in enumerate(self.relators):
            for g in rel:
                m[abs(g) - 1, j] += 1 if g > 0 else -1
        cok = Cokernel(m, n_ambient=self.ngens)
        return AbelianInvariants(cok.free_rank, tuple(cok.torsion_coefficients))

    def simplified(self) -> "Presentation":
        """Tietze-style cleanup: cancel relators, kill trivial generators,
        substitute length-two relators."""
        rels = [list(free_reduce(r)) for r in self.relators]
        alive = set(range(1, self.ngens + 1))
        changed = True
        while changed:
            changed = False
            rels = [list(_cyclic_reduce(free_reduce(r))) for r in rels]
            rels = [r for r in rels if r]
            for r in rels:
                if len(r) == 1:
                    g = abs(r[0])
                    rels = [[x for x in s if abs(x) != g] for s in rels]
                    alive.discard(g)
                    changed = True
                    break
                if len(r) == 2 and abs(r[0]) != abs(r[1]):
                    # r = (a, b): b = a^-1
                    a, b = r
                    sub = {abs(b): (-a if b > 0 else a)}
                    rels = [
                        [x if abs(x) not in sub else (sub[abs(x)] if x > 0 else -sub[abs(x)]) for x in s]
                        for s in rels
                    ]
                    alive.discard(abs(b))
                    changed = True
                    break
        remap = {g: i + 1 for i, g in enumerate(sorted(alive))}
        out = []
        seen = set()
        for r in rels:
            w = free_reduce(
                tuple(remap[abs(x)] * (1 if x > 0 else -1) for x in r if abs(x) in remap)
            )
            w = _cyclic_reduce(w)
            if w and w not in seen and word_inverse(w) not in seen:
                seen.add(w)
                out.append(w)
        return Presentation(
            len(alive), tuple(out), self.basepoint, self.component, gen_edges=None, edge_words=None
        )


def _cyclic_reduce(word):
    word = list(word)
    while len(word) >= 2 and word[0] == -word[-1]:
        word = word[1:-1]
    return tuple(word)


def pi1_presentation(complex: RipsComplex, basepoint: int) -> Presentation:
    """Spanning-tree presentation of the edge-path group of the basepoint
    component."""
    adj = complex.adjacency()
    n = complex.n
    parent = {basepoint: None}
    order = [basepoint]
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        for w in np.nonzero(adj[v])[0]:
            w = int(w)
            if w not in parent:
                parent[w] = v
                order.append(w)
    component = tuple(sorted(parent))
    comp = set(component)
    tree = set()
    for v, p in parent.items():
        if p is not None:
            tree.add((min(v, p), max(v, p)))
    gen_edges = []
    edge_words = {}
    for (u, v) in complex.edges:
        if u not in comp:
            continue
        if (u, v) in tree:
            edge_words[(u, v)] = ()
            edge_words[(v, u)] = ()
        else:
            g = len(gen_edges) + 1
            gen_edges.append((u, v))
            edge_words[(u, v)] = (g,)
            edge_words[(v, u)] = (-g,)
    relators = []
    for (a, b, c) in complex.triangles:
        if a not in comp:
            continue
        w = free_reduce(edge_words[(a, b)] + edge_words[(b, c)] + edge_words[(c, a)])
        if w:
            relators.append(w)
    return Presentation(
        len(gen_edges),
        tuple(relators),
        basepoint,
        component,
        gen_edges=tuple(gen_edges),
        edge_words=edge_words,
    )


@dataclass(frozen=True)
class Move:
    op: str  # "insert" | "delete"
    pos: int
    vertex: int

    def inverted(self) -> "Move":
        if self.op == "insert":
            return Move("delete", self.pos, self.vertex)
        return Move("insert", self.pos, self.vertex)

    def to_json(self):
        return {"op": self.op, "pos": self.pos, "vertex": self.vertex}


def apply_move(relation: SymRelation, pts: tuple, move: Move) -> tuple:
    """Apply one elementary move, checking that it spans a simplex and keeps
    the endpoint values fixed."""
    m = relation.matrix
    if move.op == "insert":
        p, v = move.pos, move.vertex
        if p == 0:
            if v != pts[0]:
                raise ValueError("inserting before the start must duplicate it")
        elif p == len(pts):
            if v != pts[-1]:
                raise ValueError("inserting after the end must duplicate it")
        elif 1 <= p <= len(pts) - 1:
            if not (m[pts[p - 1], v] and m[v, pts[p]]):
                raise ValueError("inserted vertex does not span a simplex")
        else:
            raise ValueError("insert position %d out of range" % p)
        return pts[:p] + (v,) + pts[p:]
    if move.op == "delete":
        p = move.pos
        if len(pts) < 2:
            raise ValueError("cannot shrink a one-point chain")
        if p == 0:
            if pts[0] != pts[1]:
                raise ValueError("deleting the start requires a duplicate")
        elif p == len(pts) - 1:
            if pts[-1] != pts[-2]:
                raise ValueError("deleting the end requires a duplicate")
        elif 1 <= p <= len(pts) - 2:
            if not m[pts[p - 1], pts[p + 1]]:
                raise ValueError("deletion does not span a simplex")
        else:
            raise ValueError("delete position %d out of range" % p)
        return pts[:p] + pts[p + 1 :]
    raise ValueError("unknown move %r" % (move.op,))


def replay_moves(relation: SymRelation, pts: Sequence[int], moves: Sequence[Move]) -> tuple:
    cur = tuple(pts)
    for mv in moves:
        cur = apply_move(relation, cur, mv)
    return cur


def _collapse_script(pts: tuple):
    """Deletions removing immediate repetitions, plus the collapsed chain."""
    moves = []
    cur = tuple(pts)
    i = 1
    while i < len(cur):
        if cur[i] == cur[i - 1]:
            # deleting a duplicate always spans a simplex by reflexivity
            moves.append(Move("delete", i, cur[i]))
            cur = cur[:i] + cur[i + 1 :]
        else:
            i += 1
    return moves, cur


def _canon(pts: tuple) -> tuple:
    out = [pts[0]]
    for p in pts[1:]:
        if p != out[-1]:
            out.append(p)
    return tuple(out)


def _neighbors(relation: SymRelation, pts: tuple):
    """Canonicalized results of every legal elementary move."""
    m = relation.matrix
    out = []
    for p in range(1, len(pts) - 1):
        if m[pts[p - 1], pts[p + 1]]:
            out.append(_canon(pts[:p] + pts[p + 1 :]))
    for p in range(1, len(pts)):
        a, b = pts[p - 1], pts[p]
        for v in np.nonzero(m[a] & m[b])[0]:
            nxt = _canon(pts[:p] + (int(v),) + pts[p:])
            if nxt != pts:
                out.append(nxt)
    return out


def _bfs_moves(relation: SymRelation, start: tuple, goal: tuple, budget: int):
    """Bidirectional search over canonical chains; returns a move script or
    None, plus the number of states explored."""
    if start == goal:
        return [], 0
    parents_a = {start: None}
    parents_b = {goal: None}
    frontier_a, frontier_b = [start], [goal]
    states = 2

    def _expand(frontier, parents, other):
        nonlocal states
        new_frontier = []
        meet = None
        for pts in frontier:
            for nxt in _neighbors(relation, pts):
                if nxt in parents:
                    continue
                parents[nxt] = pts
                states += 1
                new_frontier.append(nxt)
                if nxt in other:
                    meet = nxt
                    return new_frontier, meet
                if states > budget:
                    return new_frontier, None
        return new_frontier, meet

    meet = None
    while frontier_a and frontier_b and states <= budget and meet is None:
        if len(frontier_a) <= len(frontier_b):
            frontier_a, meet = _expand(frontier_a, parents_a, parents_b)
        else:
            frontier_b, meet = _expand(frontier_b, parents_b, parents_a)
    if meet is None:
        return None, states

    def _path(parents, node):
        path = [node]
        while parents[path[-1]] is not None:
            path.append(parents[path[-1]])
        path.reverse()
        return path

    script = []
    path_a = _path(parents_a, meet)
    for prev, cur in zip(path_a, path_a[1:]):
        script.extend(_moves_between(relation, prev, cur))
    path_b = _path(parents_b, meet)  # goal -> ... -> meet
    back = []
    for prev, cur in zip(path_b, path_b[1:]):
        back.extend(_moves_between(relation, prev, cur))
    for mv in reversed(back):
        script.append(mv.inverted())
    return script, states


def _moves_between(relation: SymRelation, a: tuple, b: tuple):
    """Moves turning canonical chain a into its BFS neighbor b: one move,
    or a delete pair when removing a backtrack vertex left a duplicate."""
    m = relation.matrix
    if len(b) == len(a) - 1:
        for p in range(1, len(a) - 1):
            if a[:p] + a[p + 1 :] == b and m[a[p - 1], a[p + 1]]:
                return [Move("delete", p, a[p])]
    elif len(b) == len(a) - 2:
        for p in range(1, len(a) - 1):
            if a[p - 1] == a[p + 1] and _canon(a[:p] + a[p + 1 :]) == b:
                return [Move("delete", p, a[p]), Move("delete", p, a[p + 1])]
    elif len(b) == len(a) + 1:
        for p in range(1, len(b) - 1):
            if b[:p] + b[p + 1 :] == a and m[b[p - 1], b[p]] and m[b[p], b[p + 1]]:
                return [Move("insert", p, b[p])]
    raise AssertionError("not a move-adjacent pair")


@dataclass(frozen=True)
class HomotopyVerdict:
    """Decision for chain homotopy rel endpoints.

    yes carries a move script when the search found one (coset-certified
    answers may exceed the move budget; the script is then absent), no
    carries the homology obstruction or the nontrivial group element,
    unknown carries the exhausted budgets.
    """

    status: str
    moves: Optional[tuple] = None
    obstruction: object = None
    method: str = ""
    budgets: dict = None
    notes: tuple = ()

    def __bool__(self):
        return self.status == "yes"


def chains_homotopic(
    space: FiniteUniformSpace,
    i: int,
    c: Chain,
    d: Chain,
    move_budget: Optional[int] = None,
    coset_budget: Optional[int] = None,
    complex: Optional[RipsComplex] = None,
) -> HomotopyVerdict:
    """Tiered decision of E_i-homotopy rel endpoints."""
    if c.scale != i or d.scale != i:
        raise ValueError("chains are not at the requested scale")
    if c.start != d.start or c.end != d.end:
        raise ValueError("chains must share both endpoints")
    move_budget = move_budget if move_budget is not None else default_move_budget()
    coset_budget = coset_budget if coset_budget is not None else default_coset_budget()
    relation = space.entry(i)

    ca, da = _canon(c.points), _canon(d.points)
    pre_c, ca2 = _collapse_script(c.points)
    pre_d, da2 = _collapse_script(d.points)
    assert ca == ca2 and da == da2
    if ca == da:
        moves = pre_c + [mv.inverted() for mv in reversed(pre_d)]
        return HomotopyVerdict("yes", moves=tuple(moves), method="collapse", budgets={})

    if complex is None:
        complex = build_rips_relation(relation, d_max=2, scale=i, space=space)

    # Tier 1: integral homology obstruction on the loop c * d^-1.
    loop = c.points + tuple(reversed(d.points))
    z = complex.cycle_vector(loop)
    if z.any():
        cok = Cokernel(complex.boundary_2(), n_ambient=len(complex.edges))
        if not cok.is_zero(z):
            tor, free = cok.coords(z)
            return HomotopyVerdict(
                "no",
                obstruction={"torsion": tor, "free": free},
                method="h1-obstruction",
                budgets={},
            )

    # Tier 2: bidirectional elementary-move search.
    script, states = _bfs_moves(relation, ca, da, move_budget)
    if script is not None:
        moves = pre_c + script + [mv.inverted() for mv in reversed(pre_d)]
        return HomotopyVerdict(
            "yes", moves=tuple(moves), method="move-bfs", budgets={"states": states}
        )

    # Tier 3: word problem via coset enumeration.
    pres = pi1_presentation(complex, basepoint=c.start)
    word = pres.word_of_chain(loop)
    if not word:
        script, states2 = _bfs_moves(relation, ca, da, 2 * move_budget)
        notes = () if script is not None else ("move script exceeds budget",)
        return HomotopyVerdict(
            "yes",
            moves=tuple(pre_c + script + [mv.inverted() for mv in reversed(pre_d)])
            if script is not None
            else None,
            method="free-reduction",
            budgets={"states": states + states2},
            notes=notes,
        )
    table = coset_enumeration(pres.ngens, pres.relators, max_cosets=coset_budget)
    if table is not None:
        if table.word_is_identity(word):
            script, states2 = _bfs_moves(relation, ca, da, 2 * move_budget)
            notes = () if script is not None else ("move script exceeds budget",)
            return HomotopyVerdict(
                "yes",
                moves=tuple(pre_c + script + [mv.inverted() for mv in reversed(pre_d)])
                if script is not None
                else None,
                method="coset",
                budgets={"states": states, "cosets": table.size},
                notes=notes,
            )
        return HomotopyVerdict(
            "no",
            obstruction={"word": word, "group_order": table.size},
            method="coset",
            budgets={"states": states, "cosets": table.size},
        )
    return HomotopyVerdict(
        "unknown",
        method="budgets-exhausted",
        budgets={"states": states, "move_budget": move_budget, "coset_budget": coset_budget},
    )


def is_e_short(space: FiniteUniformSpace, i: int, c: Chain, **kw) -> HomotopyVerdict:
    """Whether the chain is homotopic rel endpoints to the edge path between
    its endpoints; undefined unless the endpoints are E_i-close."""
    e = space.entry(i)
    if not e.has(c.start, c.end):
        raise ValueError("endpoints are not E-close; edge path does not exist")
    if c.start == c.end:
        edge = Chain(space, (c.start,), i)
    else:
        edge = Chain(space, (c.start, c.end), i)
    return chains_homotopic(space, i, c, edge, **kw)


def e_homotopic_pair(space: FiniteUniformSpace, i: int, c: Chain, d: Chain, **kw) -> HomotopyVerdict:
    """Whether two chains with a common origin are E-homotopic: c^-1 * d is
    homotopic to the edge path between the endpoints."""
    if c.start != d.start:
        raise ValueError("chains must share their origin")
    e = space.entry(i)
    if not e.has(c.end, d.end):
        return HomotopyVerdict(
            "no",
            obstruction={"endpoints_not_close": (c.end, d.end)},
            method="endpoint-check",
            budgets={},
        )
    return is_e_short(space, i, c.reversed().concat(d), **kw)


@dataclass(frozen=True)
class SimplicialMap:
    source: RipsComplex
    target: RipsComplex
    values: tuple

    def image_simplex(self, verts):
        return tuple(sorted(set(self.values[v] for v in verts)))


def induced_simplicial_map(f: UniformMap, i: int, d_max: int = 2, cap: int = SIMPLEX_CAP) -> SimplicialMap:
    """The vertex map f between the Rips complex at E_i and the complex of
    the image relation f(E_i); simplices verifiably map to simplices."""
    source = build_rips(f.source, i, d_max=d_max, cap=cap)
    img = entourage_image(f, f.source.entry(i))
    target = build_rips_relation(img, d_max=d_max, cap=cap)
    smap = SimplicialMap(source, target, tuple(f.values))
    for dim_list in source.simplices:
        for s in dim_list:
            if not target.has_simplex(smap.image_simplex(s)):
                raise AssertionError("induced map failed to send a simplex to a simplex")
    return smap
