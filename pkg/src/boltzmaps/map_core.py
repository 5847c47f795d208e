"""Rooted planar maps as dart rotation systems.

A map on ``2e`` darts is a pair of permutations: ``alpha`` (a fixed-point-free
involution pairing the two darts of each edge) and ``sigma`` (the
counterclockwise rotation of darts around each vertex).  Vertices are the
orbits of ``sigma``, faces the orbits of ``sigma∘alpha``.  Connectivity plus a
zero Euler residual pins the genus to 0.

The single-vertex map (no darts) is allowed; it is the radius-0 neighbourhood
of a vertex and satisfies v - e + f = 1 - 0 + 1 = 2 by convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence


class MapError(ValueError):
    """Base class for invalid rotation-system input."""


class NotInvolution(MapError):
    """alpha is not a fixed-point-free involution."""


class Disconnected(MapError):
    """The dart-adjacency graph is not connected."""


class NonPlanar(MapError):
    """Euler residual v - e + f - 2 is nonzero."""


class BadRoot(MapError):
    """Root dart or marked vertex out of range."""


class RootKind(Enum):
    """Which structure roots the map: a vertex, an oriented edge, or a face."""

    VERTEX = "vertex"
    HALF_EDGE = "half_edge"
    FACE = "face"


@dataclass(frozen=True)
class PlanarMap:
    """Immutable rooted planar map, optionally with a marked vertex.

    ``darts`` counts half-edges; ``alpha[d]`` is the opposite half-edge of
    ``d`` and ``sigma[d]`` the next dart counterclockwise around the origin
    vertex of ``d``.  ``root_dart`` is the origin-side dart of the oriented
    root edge (None only for the dartless single-vertex map).  A vertex is
    identified by the smallest dart index in its sigma orbit; the dartless map
    uses vertex id 0.
    """

    darts: int
    alpha: tuple
    sigma: tuple
    root_dart: Optional[int]
    marked_vertex: Optional[int] = None

    # -- derived structure -------------------------------------------------

    def vertex_of(self, dart: int) -> int:
        """Vertex id (minimal dart of the sigma orbit) containing ``dart``."""
        best = dart
        d = self.sigma[dart]
        while d != dart:
            if d < best:
                best = d
            d = self.sigma[d]
        return best

    def _orbits(self, perm: Sequence[int]) -> list:
        seen = bytearray(self.darts)
        orbits = []
        for d in range(self.darts):
            if seen[d]:
                continue
            orb = []
            x = d
            while not seen[x]:
                seen[x] = 1
                orb.append(x)
                x = perm[x]
            orbits.append(orb)
        return orbits

    def vertices(self) -> list:
        """Vertex orbits (each a list of darts, minimal dart first)."""
        if self.darts == 0:
            return [[]]
        return self._orbits(self.sigma)

    def faces(self) -> list:
        """Face orbits of sigma∘alpha (each a list of darts)."""
        if self.darts == 0:
            return [[]]
        phi = [self.sigma[self.alpha[d]] for d in range(self.darts)]
        return self._orbits(phi)

    def face_of(self, dart: int) -> list:
        """The face orbit containing ``dart``."""
        orb = [dart]
        x = self.sigma[self.alpha[dart]]
        while x != dart:
            orb.append(x)
            x = self.sigma[self.alpha[x]]
        return orb

    def vertex_ids(self) -> list:
        return [min(orb) for orb in self.vertices()] if self.darts else [0]

    def degree(self, vertex: int) -> int:
        """Number of darts around ``vertex`` (loops contribute two)."""
        if self.darts == 0:
            return 0
        orb = [vertex]
        d = self.sigma[vertex]
        while d != vertex:
            orb.append(d)
            d = self.sigma[d]
        return len(orb)

    def darts_of_vertex(self, vertex: int) -> list:
        if self.darts == 0:
            return []
        orb = [vertex]
        d = self.sigma[vertex]
        while d != vertex:
            orb.append(d)
            d = self.sigma[d]
        return orb

    @property
    def n_edges(self) -> int:
        return self.darts // 2

    @property
    def n_vertices(self) -> int:
        return len(self.vertices())

    @property
    def n_faces(self) -> int:
        return len(self.faces())

    def root_vertex(self) -> int:
        if self.darts == 0:
            return 0
        return self.vertex_of(self.root_dart)

    def root_face(self) -> list:
        """Darts of the face to the left of the root dart."""
        return self.face_of(self.root_dart)

    def reverse_root(self) -> "PlanarMap":
        """Same map with the root edge orientation flipped."""
        if self.darts == 0:
            return self
        return PlanarMap(self.darts, self.alpha, self.sigma,
                         self.alpha[self.root_dart], self.marked_vertex)

    def drop_mark(self) -> "PlanarMap":
        if self.marked_vertex is None:
            return self
        return PlanarMap(self.darts, self.alpha, self.sigma,
                         self.root_dart, None)


def build_map(dart_count: int,
              alpha: Iterable[int],
              sigma: Iterable[int],
              root_dart: Optional[int],
              marked_vertex: Optional[int] = None) -> PlanarMap:
    """Validate a rotation system and return an immutable PlanarMap.

    Raises NotInvolution / Disconnected / NonPlanar / BadRoot eagerly, so any
    constructed map is a connected genus-0 rotation system.
    """
    alpha = tuple(alpha)
    sigma = tuple(sigma)
    if dart_count % 2 != 0:
        raise NotInvolution("dart count must be even")
    if len(alpha) != dart_count or len(sigma) != dart_count:
        raise NotInvolution("permutation domain does not match dart count")
    if dart_count == 0:
        if root_dart is not None:
            raise BadRoot("dartless map cannot carry a root dart")
        if marked_vertex not in (None, 0):
            raise BadRoot("dartless map has only vertex 0")
        return PlanarMap(0, (), (), None, marked_vertex)

    for d in range(dart_count):
        if not 0 <= alpha[d] < dart_count or alpha[alpha[d]] != d or alpha[d] == d:
            raise NotInvolution("alpha must be a fixed-point-free involution")
    if sorted(sigma) != list(range(dart_count)):
        raise NotInvolution("sigma is not a permutation")

    # Connectivity of the dart graph under {sigma, alpha}.
    seen = bytearray(dart_count)
    stack = [0]
    seen[0] = 1
    count = 1
    while stack:
        d = stack.pop()
        for nb in (sigma[d], alpha[d]):
            if not seen[nb]:
                seen[nb] = 1
                count += 1
                stack.append(nb)
    if count != dart_count:
        raise Disconnected("rotation system is not connected")

    m = PlanarMap(dart_count, alpha, sigma, None, None)
    v = len(m._orbits(sigma))
    f = len(m._orbits([sigma[alpha[d]] for d in range(dart_count)]))
    e = dart_count // 2
    if v - e + f != 2:
        raise NonPlanar(f"Euler residual {v - e + f - 2} != 0")

    if root_dart is None or not 0 <= root_dart < dart_count:
        raise BadRoot(f"root dart {root_dart} out of range")
    result = PlanarMap(dart_count, alpha, sigma, root_dart, marked_vertex)
    if marked_vertex is not None:
        if marked_vertex != result.vertex_of(marked_vertex):
            raise BadRoot(f"{marked_vertex} is not a canonical vertex id")
    return result


def face_degrees(m: PlanarMap) -> list:
    """Sorted multiset of face degrees (half-edges on each face boundary)."""
    if m.darts == 0:
        return [0]
    return sorted(len(orb) for orb in m.faces())


def vertex_degrees(m: PlanarMap) -> list:
    if m.darts == 0:
        return [0]
    return sorted(len(orb) for orb in m.vertices())


def distances_from_root(m: PlanarMap, kind: RootKind) -> dict:
    """BFS distance of every vertex from the root structure.

    Vertex rooting measures from the root vertex; half-edge rooting from the
    nearer endpoint of the root edge; face rooting from the nearest boundary
    vertex of the root face.
    """
    if m.darts == 0:
        return {0: 0}
    if kind is RootKind.VERTEX:
        sources = [m.root_vertex()]
    elif kind is RootKind.HALF_EDGE:
        sources = [m.vertex_of(m.root_dart), m.vertex_of(m.alpha[m.root_dart])]
    else:
        sources = [m.vertex_of(d) for d in m.root_face()]

    dist = {}
    frontier = []
    for s in sources:
        if s not in dist:
            dist[s] = 0
            frontier.append(s)
    while frontier:
        nxt = []
        for v in frontier:
            for d in m.darts_of_vertex(v):
                w = m.vertex_of(m.alpha[d])
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


# -- textual serialization --------------------------------------------------

def serialize_map(m: PlanarMap) -> str:
    """One-line textual form; bit-exact round trip with parse_map."""
    alpha = " ".join(str(x) for x in m.alpha)
    sigma = " ".join(str(x) for x in m.sigma)
    mark = "none" if m.marked_vertex is None else str(m.marked_vertex)
    root = "none" if m.root_dart is None else str(m.root_dart)
    return f"e={m.n_edges}; alpha={alpha}; sigma={sigma}; root={root}; mark={mark}"


def parse_map(line: str) -> PlanarMap:
    parts = dict(field.split("=", 1) for field in
                 (p.strip() for p in line.strip().split(";")) if field)
    e = int(parts["e"])
    alpha = tuple(int(x) for x in parts["alpha"].split()) if parts["alpha"].strip() else ()
    sigma = tuple(int(x) for x in parts["sigma"].split()) if parts["sigma"].strip() else ()
    root = None if parts["root"] == "none" else int(parts["root"])
    mark = None if parts["mark"] == "none" else int(parts["mark"])
    if len(alpha) != 2 * e:
        raise MapError("edge count does not match alpha length")
    return build_map(2 * e, alpha, sigma, root, mark)
