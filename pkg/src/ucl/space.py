"""Finite uniform spaces: entourage chains, balls, chains and maps.

Points are opaque labels; everything internal runs on dense integer
indices.  An entourage is a symmetric reflexive relation on the points,
stored as a boolean matrix.  A base is a strictly descending chain of
entourages listed coarsest-first, validated in one of two modes:

* ``strict``: every entry must contain the square of some entry, so the
  chain is a genuine base of a uniform structure.  Nondegenerate finite
  instances are chains of equivalence relations.
* ``scale``: the square axiom is skipped.  Metric threshold chains
  (d <= r) live here; every verdict derived from such a space is
  relative to the listed entries.

Quantifiers over "entourages" in all checkers range over base entries
only.  This is sound because a finite chain is cofinal in the filter it
generates: an existential over the filter is witnessed by a base entry
whenever the property is monotone under shrinking, and a universal over
the filter reduces to the entries because every filter element contains
one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "ValidationError",
    "SymRelation",
    "EntourageChain",
    "FiniteUniformSpace",
    "UniformMap",
    "Chain",
    "Verdict",
    "compose_relations",
    "diagonal",
    "full_relation",
    "relation_from_pairs",
    "validate_space",
    "ball",
    "entourage_image",
    "entourage_preimage",
    "generates_structure",
    "is_chain_connected",
    "chain_components",
]


class ValidationError(ValueError):
    """Raised when a raw description violates the space axioms."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _frozen(matrix: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(matrix, dtype=bool)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SymRelation:
    """A named symmetric reflexive relation on 0..n-1."""

    name: str
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def npoints(self) -> int:
        return self.matrix.shape[0]

    def pairs(self):
        """All ordered pairs, sorted."""
        xs, ys = np.nonzero(self.matrix)
        return [(int(a), int(b)) for a, b in zip(xs, ys)]

    def has(self, x: int, y: int) -> bool:
        return bool(self.matrix[x, y])

    def is_symmetric(self) -> bool:
        return bool((self.matrix == self.matrix.T).all())

    def is_reflexive(self) -> bool:
        return bool(self.matrix.diagonal().all())

    def is_diagonal(self) -> bool:
        return bool((self.matrix == np.eye(self.npoints, dtype=bool)).all())

    def is_equivalence(self) -> bool:
        if not (self.is_symmetric() and self.is_reflexive()):
            return False
        sq = self.matrix @ self.matrix
        return bool((sq == self.matrix).all())

    def issubset(self, other: "SymRelation") -> bool:
        return bool((self.matrix <= other.matrix).all())

    def __eq__(self, other):
        if not isinstance(other, SymRelation):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and bool(
            (self.matrix == other.matrix).all()
        )

    def __hash__(self):
        return hash((self.matrix.shape, self.matrix.tobytes()))

    def __repr__(self):
        return "SymRelation(%r, %d points, %d pairs)" % (
            self.name,
            self.npoints,
            int(self.matrix.sum()),
        )


def relation_from_pairs(name: str, npoints: int, pairs: Iterable[Sequence[int]]) -> SymRelation:
    """Build a relation from ordered pairs; adds nothing, checks nothing."""
    m = np.zeros((npoints, npoints), dtype=bool)
    for x, y in pairs:
        m[int(x), int(y)] = True
    return SymRelation(name, m)


def diagonal(npoints: int, name: str = "Delta") -> SymRelation:
    return SymRelation(name, np.eye(npoints, dtype=bool))


def full_relation(npoints: int, name: str = "Full") -> SymRelation:
    return SymRelation(name, np.ones((npoints, npoints), dtype=bool))


def compose_relations(e: SymRelation, f: SymRelation, name: Optional[str] = None) -> SymRelation:
    """Relation composition: (x,z) whenever some y has (x,y) in e and (y,z) in f."""
    if e.npoints != f.npoints:
        raise ValueError("compose_relations: relations over different point sets")
    m = (e.matrix.astype(np.uint8) @ f.matrix.astype(np.uint8)) > 0
    return SymRelation(name or ("%s*%s" % (e.name, f.name)), m)


@dataclass(frozen=True)
class EntourageChain:
    """Strictly descending chain of entourages, coarsest first."""

    entries: tuple
    mode: str  # "strict" | "scale"
    square_witness: Optional[tuple] = None  # per entry: index j with E_j o E_j <= E_i

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i) -> SymRelation:
        return self.entries[i]

    @property
    def finest(self) -> SymRelation:
        return self.entries[-1]

    @property
    def finest_index(self) -> int:
        return len(self.entries) - 1


@dataclass(frozen=True)
class FiniteUniformSpace:
    points: tuple
    base: EntourageChain
    basepoint: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def nscales(self) -> int:
        return len(self.base)

    @property
    def mode(self) -> str:
        return self.base.mode

    def entry(self, i: int) -> SymRelation:
        return self.base[i]

    @property
    def finest(self) -> SymRelation:
        return self.base.finest

    def is_hausdorff(self) -> bool:
        # Intersection of a descending chain is its finest entry.
        return self.base.finest.is_diagonal()

    def scale_named(self, name: str) -> int:
        for i, e in enumerate(self.base.entries):
            if e.name == name:
                return i
        raise KeyError("no entourage named %r" % name)

    def label(self, x: int) -> str:
        return self.points[x]

    def __repr__(self):
        return "FiniteUniformSpace(%d points, %d scales, %s)" % (
            self.n,
            self.nscales,
            self.mode,
        )


@dataclass(frozen=True)
class Verdict:
    """Three-valued answer with a witness (yes) or counterexample (no)."""

    status: str  # "yes" | "no" | "unknown"
    witness: Any = None
    counterexample: Any = None
    notes: tuple = ()

    def __post_init__(self):
        if self.status not in ("yes", "no", "unknown"):
            raise ValueError("bad verdict status %r" % self.status)

    def __bool__(self):
        return self.status == "yes"

    @staticmethod
    def yes(witness=None, notes=()):
        return Verdict("yes", witness=witness, notes=tuple(notes))

    @staticmethod
    def no(counterexample=None, notes=()):
        return Verdict("no", counterexample=counterexample, notes=tuple(notes))

    @staticmethod
    def unknown(notes=()):
        return Verdict("unknown", notes=tuple(notes))


def validate_space(
    points: Sequence[str],
    entries: Sequence[SymRelation],
    mode: str = "strict",
    basepoint: Optional[int] = None,
) -> FiniteUniformSpace:
    """Check the axioms and assemble a space; raises ValidationError listing
    every violated axiom.

    In scale mode the square axiom is skipped and the result is a formal
    scale sequence rather than a uniform-structure base.
    """
    mode = {"strict-uniform": "strict", "scale-chain": "scale"}.get(mode, mode)
    if mode not in ("strict", "scale"):
        raise ValueError("mode must be 'strict' or 'scale'")
    violations = []
    n = len(points)
    if n == 0:
        violations.append("space has no points")
    if len(set(points)) != n:
        violations.append("duplicate point labels")
    if not entries:
        violations.append("empty entourage chain")
    for e in entries:
        if e.npoints != n:
            violations.append("entourage %s indexes %d points, space has %d" % (e.name, e.npoints, n))
    if violations:
        raise ValidationError(violations)

    for e in entries:
        if not e.is_symmetric():
            violations.append("entourage %s is not symmetric" % e.name)
        if not e.is_reflexive():
            violations.append("entourage %s is missing diagonal pairs" % e.name)
    for i in range(len(entries) - 1):
        a, b = entries[i], entries[i + 1]
        if not b.issubset(a):
            violations.append("chain not descending: %s is not contained in %s" % (b.name, a.name))
        elif a == b:
            violations.append("chain not strictly descending: %s equals %s" % (a.name, b.name))

    square_witness = None
    if mode == "strict" and not violations:
        witness = []
        for i, e in enumerate(entries):
            found = None
            for j in range(len(entries) - 1, -1, -1):
                sq = compose_relations(entries[j], entries[j])
                if sq.issubset(e):
                    found = j
                    break
            if found is None:
                violations.append(
                    "square axiom fails for %s: no entry F with F o F inside it" % e.name
                )
            witness.append(found)
        square_witness = tuple(witness)

    if basepoint is not None and not (0 <= basepoint < n):
        violations.append("basepoint %r out of range" % (basepoint,))

    if violations:
        raise ValidationError(violations)

    chain = EntourageChain(tuple(entries), mode, square_witness)
    return FiniteUniformSpace(tuple(points), chain, basepoint)


def ball(space: FiniteUniformSpace, x: int, i: int):
    """All points E_i-close to x, as a sorted list."""
    row = space.entry(i).matrix[x]
    return [int(y) for y in np.nonzero(row)[0]]


@dataclass(frozen=True)
class UniformMap:
    """A point function between spaces, with entourage image/preimage calculus."""

    source: FiniteUniformSpace
    target: FiniteUniformSpace
    values: tuple

    def __post_init__(self):
        if len(self.values) != self.source.n:
            raise ValidationError(["map is not total on source points"])
        for v in self.values:
            if not (0 <= v < self.target.n):
                raise ValidationError(["map value %r out of target range" % (v,)])

    def __call__(self, x: int) -> int:
        return self.values[x]

    def apply_chain(self, pts: Sequence[int]):
        return tuple(self.values[p] for p in pts)

    def is_surjective(self) -> bool:
        return len(set(self.values)) == self.target.n

    def fiber(self, y: int):
        return [x for x in range(self.source.n) if self.values[x] == y]


def entourage_image(f: UniformMap, e: SymRelation, name: Optional[str] = None) -> SymRelation:
    """The relation of pairs (f(x), f(y)) for (x,y) in e."""
    vals = np.asarray(f.values)
    m = np.zeros((f.target.n, f.target.n), dtype=bool)
    xs, ys = np.nonzero(e.matrix)
    m[vals[xs], vals[ys]] = True
    return SymRelation(name or ("f(%s)" % e.name), m)


def entourage_preimage(f: UniformMap, e: SymRelation, name: Optional[str] = None) -> SymRelation:
    """The relation of pairs (x,y) with (f(x), f(y)) in e."""
    vals = np.asarray(f.values)
    m = e.matrix[np.ix_(vals, vals)]
    return SymRelation(name or ("f^-1(%s)" % e.name), m)


def generates_structure(f: UniformMap) -> Verdict:
    """Whether f is surjective and every image of a source entry contains a
    target entry.  The witness maps each source scale to the coarsest
    contained target scale."""
    if not f.is_surjective():
        missing = sorted(set(range(f.target.n)) - set(f.values))
        return Verdict.no(counterexample={"unhit_target_points": missing})
    table = {}
    for i in range(f.source.nscales):
        img = entourage_image(f, f.source.entry(i))
        found = None
        for j in range(f.target.nscales):  # coarsest first
            if f.target.entry(j).issubset(img):
                found = j
                break
        if found is None:
            return Verdict.no(
                counterexample={"source_scale": i, "reason": "image contains no target entry"}
            )
        table[i] = found
    return Verdict.yes(witness=table)


@dataclass(frozen=True)
class Chain:
    """A point sequence whose consecutive pairs lie in the scale's entourage."""

    space: FiniteUniformSpace
    points: tuple
    scale: int

    def __post_init__(self):
        if not self.points:
            raise ValidationError(["chain must be nonempty"])
        e = self.space.entry(self.scale)
        for a, b in zip(self.points, self.points[1:]):
            if not e.has(a, b):
                raise ValidationError(
                    ["pair (%d,%d) not in %s" % (a, b, e.name)]
                )

    @property
    def start(self) -> int:
        return self.points[0]

    @property
    def end(self) -> int:
        return self.points[-1]

    def reversed(self) -> "Chain":
        return Chain(self.space, tuple(reversed(self.points)), self.scale)

    def concat(self, other: "Chain") -> "Chain":
        if other.space is not self.space or other.scale != self.scale:
            raise ValueError("cannot concatenate chains at different scales")
        if self.end != other.start:
            raise ValueError("concatenation endpoints do not meet")
        return Chain(self.space, self.points + other.points[1:], self.scale)

    def __len__(self):
        return len(self.points)


def chain_components(space: FiniteUniformSpace, i: int):
    """Connected components of the E_i adjacency graph, as a label array."""
    m = space.entry(i).matrix
    n = space.n
    comp = -np.ones(n, dtype=int)
    c = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = c
        stack = [s]
        while stack:
            v = stack.pop()
            for w in np.nonzero(m[v])[0]:
                if comp[w] < 0:
                    comp[w] = c
                    stack.append(int(w))
        c += 1
    return comp


def is_chain_connected(space: FiniteUniformSpace) -> Verdict:
    """Every pair of points is joined by an E_i-chain for every entry, which
    for a chain base reduces to connectivity of the finest entry's graph."""
    comp = chain_components(space, space.base.finest_index)
    if comp.max() == 0:
        return Verdict.yes(witness={"scale": space.base.finest_index})
    a = 0
    b = int(np.nonzero(comp != comp[0])[0][0])
    return Verdict.no(counterexample={"points": (a, b), "scale": space.base.finest_index})
