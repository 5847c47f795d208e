"""The mobile-to-map transform and Boltzmann map sampling.

A finite labelled mobile is turned into a vertex-marked rooted planar map by
walking its contour, listing the corners of type-1/2 vertices, and drawing an
arc from every corner to its successor: the next type-1 corner (cyclically)
whose label is one less (integer corners) or one half less (half-integer
corners).  Corners whose target label is below every type-1 label connect to
an extra marked vertex r.  Tree edges and type-3/4 vertices are then erased,
and each type-2 vertex merges its two arcs into a single edge.

Both successor rules are first-passage rules: the successor of a corner with
label l is the first later type-1 corner with label < l.  That makes the arcs
computable with one monotone-stack sweep and forces them to be non-crossing,
so the rotation system of the image map can be written down directly:

* around a surviving vertex, corners appear in contour order; within one
  corner the incoming arc ends are nested by the cyclic backward distance of
  their source (nearest first) and the outgoing arc end comes last;
* around r, arc ends appear in reverse contour order of their sources.

Faces of the image correspond to the type-3/4 vertices of the mobile: a face
of degree 2 + 2k + k' for a type-3 vertex with k type-1 and k' type-2
children, and 1 + 2k + k' for a type-4 vertex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .map_core import PlanarMap, build_map
from .mobile import (GAMMAS, EmptyEvent, GammaVector, Mobile, MobileError,
                     Timeout, decorate, sample_conditioned, sample_tree,
                     size_distribution)
from .weights import WeightModel


class MalformedMobile(MobileError):
    pass


class TypeMismatch(MobileError):
    pass


# ---------------------------------------------------------------------------
# contour and successors


def contour_corners(tree: Mobile, open_root: bool = False):
    """Corner list of the type-1/2 vertices in contour order.

    Returns (corners, cpos, pre_corner) where corners[i] = (vertex, label2,
    is_type2), cpos maps each type-1/2 vertex to its corner positions, and
    pre_corner maps each type-3/4 vertex to the position of the corner
    visited just before descending into it.  With ``open_root`` the root is
    treated as a non-root vertex (one extra trailing corner), which is how a
    subtree embeds in the contour of a larger tree.
    """
    corners: List[Tuple[int, int, bool]] = []
    cpos: Dict[int, List[int]] = {}
    pre_corner: Dict[int, int] = {}
    types = tree.types
    kids = tree.children

    stack = [(0, 0)]
    while stack:
        v, i = stack.pop()
        t = types[v]
        c = len(kids[v])
        if t in (1, 2):
            cyclic = (v == 0) and not open_root
            emit = (i < c) or (c == 0 and i == 0) or (not cyclic and i == c)
            if emit:
                cpos.setdefault(v, []).append(len(corners))
                corners.append((v, tree.label2[v], t == 2))
        if i < c:
            stack.append((v, i + 1))
            w = kids[v][i]
            if types[w] in (3, 4):
                pre_corner[w] = len(corners) - 1
            stack.append((w, 0))
    return corners, cpos, pre_corner


def successors(corners) -> List[Optional[int]]:
    """First-passage successor of every corner, None meaning the extra
    vertex r.  One monotone-stack sweep over the doubled list."""
    P = len(corners)
    succ: List[Optional[int]] = [None] * P
    stack: List[Tuple[int, int]] = []
    for pos in range(2 * P):
        i = pos if pos < P else pos - P
        _, lab, is2 = corners[i]
        if not is2:
            while stack and stack[-1][1] > lab:
                j, _ = stack.pop()
                if succ[j] is None:
                    succ[j] = i
        if pos < P:
            stack.append((i, lab))
    return succ


# ---------------------------------------------------------------------------
# the transform


@dataclass
class PsiResult:
    map: PlanarMap
    vertex_id: Dict[int, int]     # type-1 tree vertex -> map vertex id
    r_vertex: int                 # map vertex id of the marked vertex
    face_dart: Dict[int, int]     # type-3/4 tree vertex -> dart on its face
    edge_dart: Dict[int, int]     # tree vertex (type 1/3/4) -> dart of its edge


def psi(tree: Mobile) -> PlanarMap:
    return psi_full(tree).map


def psi_full(tree: Mobile) -> PsiResult:
    """Transform a labelled mobile into a vertex-marked rooted planar map."""
    _check_psi_input(tree)
    corners, cpos, pre_corner = contour_corners(tree)
    succ = successors(corners)
    P = len(corners)
    types = tree.types

    # allocate one edge per type-1 corner and one per type-2 vertex
    out_dart: Dict[int, int] = {}
    incoming: Dict[int, List[Tuple[int, int]]] = {}  # corner pos -> [(src, dart)]
    r_in: List[Tuple[int, int]] = []
    target_dart: Dict[int, int] = {}  # source corner pos -> dart at its target
    ndarts = 0

    def new_edge():
        nonlocal ndarts
        ndarts += 2
        return ndarts - 2, ndarts - 1

    def attach_target(src: int, dart: int):
        target_dart[src] = dart
        if succ[src] is None:
            r_in.append((src, dart))
        else:
            incoming.setdefault(succ[src], []).append((src, dart))

    type2_corners: Dict[int, List[int]] = {}
    for i, (v, _, is2) in enumerate(corners):
        if is2:
            type2_corners.setdefault(v, []).append(i)
        else:
            a, b = new_edge()
            out_dart[i] = a
            attach_target(i, b)
    for v, cs in type2_corners.items():
        if len(cs) != 2:
            raise MalformedMobile("type-2 vertex without exactly two corners")
        a, b = new_edge()
        attach_target(cs[0], a)
        attach_target(cs[1], b)

    # rotation cycles
    alpha = [0] * ndarts
    for d in range(0, ndarts, 2):
        alpha[d] = d + 1
        alpha[d + 1] = d
    sigma = [0] * ndarts
    cycle_head: Dict[int, int] = {}

    def close_cycle(darts: List[int], key):
        for t, d in enumerate(darts):
            sigma[d] = darts[(t + 1) % len(darts)]
        cycle_head[key] = min(darts)

    for v, positions in cpos.items():
        if types[v] == 2:
            continue
        darts: List[int] = []
        for g in positions:
            ins = incoming.get(g, ())
            for _, d in sorted(ins, key=lambda sd: (g - sd[0]) % P):
                darts.append(d)
            darts.append(out_dart[g])
        close_cycle(darts, v)
    r_darts = [d for _, d in sorted(r_in, key=lambda sd: -sd[0])]
    if not r_darts:
        raise MalformedMobile("no arcs reach the marked vertex")
    close_cycle(r_darts, "r")

    # root edge
    if types[0] == 1:
        root_dart = alpha[out_dart[cpos[0][0]]]
    else:
        first, second = type2_corners[0]
        root_dart = target_dart[second]

    m = build_map(ndarts, alpha, sigma, root_dart, marked_vertex=cycle_head["r"])

    # count identities
    n1, n2, n3, n4 = tree.counts()
    assert m.n_vertices == 1 + n1
    assert m.n_edges == n1 + n3 + n4 - 1
    assert m.n_faces == n3 + n4

    face_dart: Dict[int, int] = {}
    edge_dart: Dict[int, int] = {}
    for w, t in enumerate(types):
        if t in (3, 4):
            g = pre_corner[w]
            if types[tree.parent[w]] == 1:
                face_dart[w] = out_dart[g]
            else:
                face_dart[w] = target_dart[g]
    for w, t in enumerate(types):
        if t == 1:
            edge_dart[w] = out_dart[cpos[w][0]]
        elif t == 3:
            par = tree.parent[w]
            idx = tree.children[par].index(w)
            pcs = cpos[par]
            after = (idx + 1) % len(pcs)
            edge_dart[w] = out_dart[pcs[after]]
        elif t == 4:
            par = tree.parent[w]
            edge_dart[w] = target_dart[type2_corners[par][0]]

    vertex_id = {v: cycle_head[v] for v in cpos if types[v] == 1}
    return PsiResult(m, vertex_id, cycle_head["r"], face_dart, edge_dart)


def _check_psi_input(tree: Mobile):
    rt = tree.types[0]
    if rt == 1:
        pass
    elif rt == 2:
        kids = tree.children[0]
        if len(kids) != 2 or any(tree.types[c] != 4 for c in kids):
            raise MalformedMobile("type-2 root must carry two type-4 children")
    else:
        raise MalformedMobile("mobile root must have type 1 or 2")
    n1, n2, n3, n4 = tree.counts()
    if n3 + n4 == 0:
        raise MalformedMobile("mobile without faces is excluded")
    if any(l is None for l in tree.label2):
        raise MalformedMobile("mobile is not fully labelled")


def face_orbits_by_vertex(tree: Mobile, res: PsiResult) -> Dict[int, frozenset]:
    """Map each type-3/4 tree vertex to the dart set of its image face."""
    return {w: frozenset(res.map.face_of(d)) for w, d in res.face_dart.items()}


# ---------------------------------------------------------------------------
# assemblies and the conditioned mixture


def assemble_T0(t1: Mobile, t2: Mobile) -> Mobile:
    """Identify the roots of two type-2-rooted mobiles."""
    for t in (t1, t2):
        if t.types[0] != 2:
            raise TypeMismatch("assemble_T0 needs type-2 roots")
        if len(t.children[0]) != 1 or t.types[t.children[0][0]] != 4:
            raise TypeMismatch("a type-2 root must have exactly one type-4 child")
    glued = Mobile()
    glued.add(2, -1)
    glued.label2[0] = 1

    def graft(src: Mobile):
        remap = {0: 0}
        for v in src.preorder():
            if v == 0:
                continue
            remap[v] = glued.add(src.types[v], remap[src.parent[v]])
            glued.label2[remap[v]] = src.label2[v]
        for v, br in src.bridges2.items():
            glued.bridges2[remap[v]] = br

    graft(t1)
    graft(t2)
    return glued


def conditioned_class_weights(model: WeightModel, gamma: GammaVector,
                              target: int) -> Tuple[float, float, float]:
    """Mixture weights of the positive/neutral/negative classes given the
    tree-size target: class priors (x, y^2, x) times the size probability
    within each class."""
    model.require_solved()
    x, y = model.x, model.y
    if y == 0.0:
        return 0.5, 0.0, 0.5
    p1 = size_distribution(model, 1, gamma, target)[target]
    p2 = size_distribution(model, 2, gamma, target)
    pconv = float(np.convolve(p2, p2)[target])
    w_plus = x * p1
    w_zero = y * y * pconv
    total = 2 * w_plus + w_zero
    if total <= 0:
        raise EmptyEvent(f"target {target} unreachable in every class")
    return w_plus / total, w_zero / total, w_plus / total


def sample_conditioned_pair(model: WeightModel, gamma: GammaVector,
                            target: int, rng,
                            max_tries: int = 2_000_000) -> Mobile:
    """Two independent type-2 trees conditioned on total size, glued."""
    from .mobile import _grow  # early-abort growth
    for _ in range(max_tries):
        a = _grow(model, 2, rng, 10_000_000, gamma=gamma, budget=target)
        if a is None:
            continue
        sa = a.gamma_size(gamma)
        b = _grow(model, 2, rng, 10_000_000, gamma=gamma, budget=target - sa)
        if b is None:
            continue
        if sa + b.gamma_size(gamma) == target:
            return assemble_T0(decorate(a, rng), decorate(b, rng))
    raise Timeout(f"neutral-class pair: no acceptance in {max_tries} tries")


def sample_boltzmann_map(model: WeightModel, gamma: GammaVector, n: int, rng,
                         max_tries: int = 2_000_000) -> PlanarMap:
    """A Boltzmann map conditioned on n vertices/edges/faces (per gamma).

    Draws the positive/neutral/negative class from the conditional mixture,
    samples the conditioned mobile(s), applies the transform; the negative
    class reverses the root edge of a positive sample.
    """
    target = n + gamma.map_shift
    if target < 1:
        raise EmptyEvent(f"size {n} below the smallest map")
    wp, wz, wm = conditioned_class_weights(model, gamma, target)
    u = rng.random()
    if u < wz:
        tree = sample_conditioned_pair(model, gamma, target, rng, max_tries)
        return psi(tree)
    tree = sample_conditioned(model, 1, gamma, target, rng, max_tries)
    m = psi(tree)
    if u < wz + wm:
        return m.reverse_root()
    return m


def sample_unconditioned_map(model: WeightModel, rng) -> PlanarMap:
    """One draw from the (vertex-marked) Boltzmann law itself."""
    model.require_solved()
    x, y = model.x, model.y
    total = 2 * x + y * y
    u = rng.random() * total
    while True:
        try:
            if u < y * y:
                t1 = sample_tree(model, 2, rng)
                t2 = sample_tree(model, 2, rng)
                return psi(assemble_T0(t1, t2))
            m = psi(sample_tree(model, 1, rng))
            return m.reverse_root() if u < y * y + x else m
        except MalformedMobile:
            # single-vertex mobile (no faces): retry, it maps to no legal map
            continue
