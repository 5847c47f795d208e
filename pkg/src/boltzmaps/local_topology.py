"""Neighbourhood extraction and canonical coding for rooted planar maps.

The radius-k ball keeps every edge whose nearer endpoint lies at distance at
most k-1 from the root structure, so every vertex of the ball is at distance
at most k and the projections compose: ball(ball(m, j), i) = ball(m, i) for
i <= j.  Radius 0 is special-cased per rooting kind: an isolated vertex, the
root edge alone, or the boundary of the root face.

Canonical codes are BFS relabelings of the dart set under {sigma, alpha},
minimised over the admissible starting darts for the rooting kind.  Equal
codes are equivalent to root-preserving, orientation-preserving isomorphism.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .map_core import PlanarMap, RootKind, build_map, distances_from_root

_EMPTY_VERTEX_CODE = b"\xffV"


@dataclass(frozen=True)
class BallCode:
    """Canonical byte code of a k-neighbourhood under a rooting kind."""

    root_kind: RootKind
    radius: int
    code: bytes

    def hex(self) -> str:
        return self.code.hex()


def _encode_from(m: PlanarMap, start: int, mark: Optional[int]) -> tuple:
    """Relabel darts BFS-first from ``start``; tuple encodes sigma, alpha, mark."""
    pos = {start: 0}
    order = [start]
    i = 0
    sigma, alpha = m.sigma, m.alpha
    while i < len(order):
        d = order[i]
        for nb in (sigma[d], alpha[d]):
            if nb not in pos:
                pos[nb] = len(order)
                order.append(nb)
        i += 1
    out = []
    for d in order:
        out.append(pos[sigma[d]])
        out.append(pos[alpha[d]])
    if mark is None:
        out.append(0)
    else:
        out.append(1 + min(pos[d] for d in m.darts_of_vertex(mark)))
    return tuple(out)


def canonical_code(m: PlanarMap, kind: RootKind) -> bytes:
    """Canonical byte string; includes the marked vertex when present."""
    if m.darts == 0:
        if kind is not RootKind.VERTEX:
            raise ValueError("dartless map can only be vertex rooted")
        return _EMPTY_VERTEX_CODE
    if kind is RootKind.VERTEX:
        starts = m.darts_of_vertex(m.root_vertex())
    elif kind is RootKind.HALF_EDGE:
        starts = [m.root_dart]
    else:
        starts = m.root_face()
    best = min(_encode_from(m, s, m.marked_vertex) for s in starts)
    if m.darts < 0xFFFF:
        return array("H", best).tobytes()
    return array("I", best).tobytes()


def ball(m: PlanarMap, kind: RootKind, k: int) -> PlanarMap:
    """The radius-k neighbourhood of the root, as a rooted map.

    The marked vertex, if any, is forgotten: neighbourhoods live in the
    unpointed local space.
    """
    if k < 0:
        raise ValueError("radius must be >= 0")
    m = m.drop_mark()
    if m.darts == 0:
        return m
    dist = distances_from_root(m, kind)

    if k == 0:
        if kind is RootKind.VERTEX:
            return PlanarMap(0, (), (), None, None)
        if kind is RootKind.HALF_EDGE:
            keep = {m.root_dart // 2}
        else:
            keep = {d // 2 for d in m.root_face()}
    else:
        keep = set()
        for d in range(0, m.darts, 2):
            u = dist[m.vertex_of(d)]
            v = dist[m.vertex_of(m.alpha[d])]
            if min(u, v) <= k - 1:
                keep.add(d // 2)
        if kind is RootKind.HALF_EDGE:
            keep.add(m.root_dart // 2)
        elif kind is RootKind.FACE:
            keep.update(d // 2 for d in m.root_face())
    return _induced_submap(m, keep, kind)


def _induced_submap(m: PlanarMap, kept_edges: set, kind: RootKind) -> PlanarMap:
    kept_darts = sorted(d for e in kept_edges for d in (2 * e, 2 * e + 1))
    relabel = {d: i for i, d in enumerate(kept_darts)}
    n = len(kept_darts)
    alpha = [0] * n
    sigma = [0] * n
    for d in kept_darts:
        alpha[relabel[d]] = relabel[m.alpha[d]]
        # next kept dart in the sigma orbit of d
        x = m.sigma[d]
        while x not in relabel:
            x = m.sigma[x]
        sigma[relabel[d]] = relabel[x]
    if kind is RootKind.VERTEX:
        # any dart at the root vertex; minimal kept one for determinism
        root = min(relabel[d] for d in m.darts_of_vertex(m.root_vertex())
                   if d in relabel)
    else:
        root = relabel[m.root_dart]
    return build_map(n, alpha, sigma, root, None)


def ball_code(m: PlanarMap, kind: RootKind, k: int) -> BallCode:
    return BallCode(kind, k, canonical_code(ball(m, kind, k), kind))


def d_loc(m1: PlanarMap, m2: PlanarMap, kind: RootKind) -> Fraction:
    """Local distance 1/(1+s) with s the largest radius of agreeing balls.

    Returns 0 for isomorphic maps and 2 when even the radius-0 balls differ,
    mirroring the mismatch value of the marked-tree metric.
    """
    m1 = m1.drop_mark()
    m2 = m2.drop_mark()
    if canonical_code(ball(m1, kind, 0), kind) != canonical_code(ball(m2, kind, 0), kind):
        return Fraction(2)
    # Balls stabilise once they swallow the whole map.
    bound = max(m1.n_vertices, m2.n_vertices) + 1
    k = 1
    while k <= bound:
        c1 = canonical_code(ball(m1, kind, k), kind)
        c2 = canonical_code(ball(m2, kind, k), kind)
        if c1 != c2:
            return Fraction(1, k)  # agree up to k-1: s = k-1
        k += 1
    return Fraction(0)
