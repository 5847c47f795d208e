"""The local limit: size-biased spine blocks and neighbourhoods of the
infinite map.

The limit tree has a marked vertex u0 whose ancestry is an infinite backward
spine of type-1 vertices u1, u2, ...; each step up inserts a size-biased
killed block whose marked leaf is identified with the vertex below.  Labels
extend uniquely from the marked vertex (0 or 1/2 by type), and the mobile
corner sequence becomes bi-infinite.

No extra marked vertex is needed: the type-1 labels are almost surely
unbounded below along both contour directions, so every corner finds its
first-passage successor.  This also yields a stopping certificate for balls:
the successor of a corner labelled l is the first later type-1 corner with a
label below l, so once exploration passes, on the backward contour side of a
window, a type-1 corner labelled at most (window minimum - 2), no arc from
beyond that barrier can land in the window, and the forward side resolves by
plain first passage.  Further exploration can then never change the ball.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .local_topology import BallCode, canonical_code
from .map_core import PlanarMap, RootKind, build_map
from .mobile import (GammaVector, MarkedMobile, Mobile, MobileError,
                     _shuffled_types, _tables, assign_labels, decorate_bridges,
                     mean_offspring_matrix, sample_bridge)
from .weights import WeightModel


class NotCritical(MobileError):
    pass


class ExplorationBudget(RuntimeError):
    """Ball not certified within the corner budget; never a silent truncation."""


# ---------------------------------------------------------------------------
# stationary type frequencies and the limit root type


def stationary_type_frequencies(model: WeightModel) -> np.ndarray:
    """Normalised left Perron eigenvector of the mean offspring matrix."""
    m = mean_offspring_matrix(model)
    vals, vecs = np.linalg.eig(m.T)
    i = int(np.argmax(vals.real))
    if abs(vals[i].real - 1.0) > 1e-6 or abs(vals[i].imag) > 1e-9:
        raise NotCritical(f"mean matrix Perron root {vals[i]:.6f} != 1")
    c = np.abs(vecs[:, i].real)
    return c / c.sum()


def eta_distribution(model: WeightModel, gamma: GammaVector) -> np.ndarray:
    """Law of the limit mark type: stationary frequencies restricted to the
    markable types of the conditioning statistic."""
    c = stationary_type_frequencies(model) * np.array(gamma.gamma, dtype=float)
    total = c.sum()
    if total <= 0:
        raise NotCritical("no markable type has positive frequency")
    return c / total


def sample_eta(model: WeightModel, gamma: GammaVector, rng) -> int:
    p = eta_distribution(model, gamma)
    return int(rng.choice(4, p=p)) + 1


# ---------------------------------------------------------------------------
# size-biased killed blocks


class _Tilt:
    """Descent weights h[type] = expected number of markable positions in the
    killed subtree below a vertex of that type, plus the tilted batch laws."""

    __slots__ = ("mark_type", "h", "t3", "t4")

    def __init__(self, model: WeightModel, mark_type: int):
        tab = _tables(model)
        e31, e32 = tab.xi3.mean_k, tab.xi3.mean_kp
        e41 = tab.xi4.mean_k if tab.xi4 else 0.0
        e42 = tab.xi4.mean_kp if tab.xi4 else 0.0
        if e42 >= 1.0:
            raise NotCritical("type 2-4 chains are supercritical")
        self.mark_type = mark_type
        if mark_type == 1:
            h2 = e41 / (1.0 - e42)
            h = {1: 1.0, 2: h2, 3: e31 + e32 * h2, 4: h2}
            mean_marks = (1.0 / tab.p_geo - 1.0) * h[3]
            if abs(mean_marks - 1.0) > 1e-6:
                raise NotCritical(
                    f"killed tree has {1 + mean_marks:.8f} expected type-1 "
                    "vertices, not 2; the model is not critical")
        elif mark_type == 3:
            h = {1: 0.0, 2: 0.0, 3: 1.0, 4: 0.0}
        elif mark_type == 4:
            if tab.xi4 is None or e32 <= 0:
                raise NotCritical("no type-4 vertices under this model")
            hh = 1.0 / (1.0 - e42)
            h = {1: 0.0, 2: hh, 3: e32 * hh, 4: hh}
        else:
            raise MobileError("mark type must be 1, 3 or 4")
        self.h = h
        self.t3 = _tilted(tab.xi3, h[1], h[2])
        self.t4 = _tilted(tab.xi4, h[1], h[2]) if tab.xi4 else None


def _tilted(table, a: float, b: float):
    wts = table.probs * (table.ks * a + table.kps * b)
    total = wts.sum()
    if total <= 0:
        return None
    cum = np.cumsum(wts / total)
    cum[-1] = 1.0
    return (table.ks, table.kps, cum)


def _tilt_of(model: WeightModel, mark_type: int) -> _Tilt:
    key = f"tilt_{mark_type}"
    t = model.meta.get(key)
    if t is None:
        t = _Tilt(model, mark_type)
        model.meta[key] = t
    return t


def _grow_killed_from(tree, model: WeightModel, frontier: List[int], rng,
                      max_vertices: int = 10_000_000):
    """Grow plain killed subtrees (type-1 vertices stay leaves) below the
    given vertices, in place."""
    tab = _tables(model)
    frontier = [v for v in frontier if tree.types[v] != 1]
    n0 = len(tree.types)
    while frontier:
        nxt: List[int] = []
        for v in frontier:
            t = tree.types[v]
            if t == 2:
                nxt.append(tree.add(4, v))
                continue
            table = tab.xi3 if t == 3 else tab.xi4
            idx = int(np.searchsorted(table.cum, rng.random(), side="right"))
            k, kp = int(table.ks[idx]), int(table.kps[idx])
            for ct in _shuffled_types(k, kp, rng):
                c = tree.add(ct, v)
                if ct == 2:
                    nxt.append(c)
        if len(tree.types) - n0 > max_vertices:
            raise MobileError("killed subtree exceeded the vertex cap")
        frontier = nxt


def _block_structure(model: WeightModel, mark_type: int, rng) -> Tuple[Mobile, int]:
    """Undecorated size-biased killed block with its marked vertex.

    The spine from the block root to the mark is drawn with offspring laws
    tilted by the descent weights; everything off the spine is a plain killed
    subtree, so the pair law matches the count-biased killed tree exactly.
    """
    tilt = _tilt_of(model, mark_type)
    tab = _tables(model)
    tree = Mobile()
    tree.add(1, -1)
    k_root = 1 + int(rng.negative_binomial(2, tab.p_geo))
    kids = [tree.add(3, 0) for _ in range(k_root)]
    spine = kids[int(rng.integers(0, k_root))]
    pending = [c for c in kids if c != spine]
    v = spine
    mark = None
    while mark is None:
        t = tree.types[v]
        if t == mark_type and t in (3, 4):
            if rng.random() * tilt.h[t] < 1.0:
                mark = v
                break
        if t == 2:
            v = tree.add(4, v)
            continue
        ks, kps, cum = tilt.t3 if t == 3 else tilt.t4
        idx = int(np.searchsorted(cum, rng.random(), side="right"))
        k, kp = int(ks[idx]), int(kps[idx])
        w1 = k * tilt.h[1]
        w2 = kp * tilt.h[2]
        pick1 = rng.random() * (w1 + w2) < w1
        slots = [tree.add(ct, v) for ct in _shuffled_types(k, kp, rng)]
        want = 1 if pick1 else 2
        same = [s for s in slots if tree.types[s] == want]
        nxt = same[int(rng.integers(0, len(same)))]
        pending.extend(s for s in slots if s != nxt)
        if pick1 and mark_type == 1:
            mark = nxt
            break
        v = nxt
    _grow_killed_from(tree, model, pending, rng)
    return tree, mark


def sample_biased_block(model: WeightModel, kappa: int, mark_type: int,
                        rng) -> MarkedMobile:
    """One spine block: the killed tree biased by its count of mark_type
    positions, returned with the marked vertex (its subtree excised)."""
    if kappa != 1:
        raise MobileError("only type-1 spines arise from the transform")
    tree, mark = _block_structure(model, mark_type, rng)
    decorate_bridges(tree, rng)
    assign_labels(tree)
    return MarkedMobile(tree, mark)


# ---------------------------------------------------------------------------
# the lazily grown infinite mobile


_EMIT, _DESCEND = 0, 1


class SpineMobile:
    """Lazily explored infinite mobile with marked vertex u0 (vertex id 0).

    Vertices live in flat arrays; the bi-infinite corner sequence is
    materialised on demand by two contour walkers.  Type-1 leaves created by
    blocks are stubs whose fringe subtree is grown when first needed.
    """

    def __init__(self, model: WeightModel, eta: int, rng):
        model.require_solved()
        if eta not in (1, 3, 4):
            raise MobileError("limit mark type must be 1, 3 or 4")
        self.model = model
        self.rng = rng
        self.eta = eta
        self.coin = bool(rng.random() < 0.5)  # root-edge orientation, edge kind
        self.types: List[int] = []
        self.parent: List[int] = []
        self.children: List[List[int]] = []
        self.label2: List[Optional[int]] = []
        self.bridges2: Dict[int, Tuple[int, ...]] = {}
        self.stubs: Set[int] = set()
        self.ancestors: Set[int] = set()   # strict ancestors of u0
        self.u0_branch: Dict[int, int] = {}  # ancestor -> child index toward u0
        self.positions: Dict[int, List[int]] = {}
        self.corners: Dict[int, Tuple[int, int, bool]] = {}
        self.lo = 0   # explored positions are [lo, hi)
        self.hi = 0
        self.pulled = 0
        self.tops: List[int] = []  # u0, then block roots u1, u2, ...

        u0 = self.add(eta, -1)
        self.label2[u0] = 0 if eta in (1, 3) else 1
        self.stubs.add(u0)
        self.tops.append(u0)
        self._right = _Walker(self, +1, u0)
        self._left = _Walker(self, -1, u0)

    # -- tree plumbing ------------------------------------------------------

    def add(self, t: int, parent: int) -> int:
        v = len(self.types)
        self.types.append(t)
        self.parent.append(parent)
        self.children.append([])
        self.label2.append(None)
        if parent >= 0:
            self.children[parent].append(v)
        return v

    def spine_labels(self) -> List[int]:
        """Doubled labels of u0, u1, ... as far as the spine is grown."""
        return [self.label2[v] for v in self.tops]

    def extend(self) -> "SpineMobile":
        """Graft one more size-biased block above the current top."""
        prev_top = self.tops[-1]
        mark_type = self.types[prev_top] if len(self.tops) == 1 else 1
        block, mark = _block_structure(self.model, mark_type, self.rng)
        decorate_bridges(block, self.rng)
        assign_labels(block)

        remap: Dict[int, int] = {}
        for bv in block.preorder():
            if bv == mark:
                remap[bv] = prev_top
                continue
            par = block.parent[bv]
            remap[bv] = self.add(block.types[bv], remap[par] if par >= 0 else -1)
        mpar = remap[block.parent[mark]]
        self.children[mpar] = [remap[c] for c in block.children[block.parent[mark]]]
        self.parent[prev_top] = mpar

        shift = self.label2[prev_top] - block.label2[mark]
        for bv, nv in remap.items():
            if nv == prev_top:
                continue
            self.label2[nv] = block.label2[bv] + shift
            if block.types[bv] == 1 and bv != 0:
                self.stubs.add(nv)
        for bv, br in block.bridges2.items():
            self.bridges2[remap[bv]] = br

        # record the new stretch of u0's ancestry
        below = prev_top
        a = self.parent[prev_top]
        while a >= 0 and a not in self.ancestors:
            self.ancestors.add(a)
            self.u0_branch[a] = self.children[a].index(below)
            below = a
            a = self.parent[a]
        self.tops.append(remap[0])
        return self

    def ensure_block_above(self, vertex: int):
        while self.parent[vertex] < 0:
            self.extend()

    def _expand_offspring(self, v: int):
        """Draw the offspring batch of one stub, with bridge and labels.

        Fringe subtrees are materialised one vertex at a time as the contour
        walkers touch them, so total work stays proportional to the number of
        corners pulled even when a fringe is huge.
        """
        self.stubs.discard(v)
        tab = _tables(self.model)
        rng = self.rng
        t = self.types[v]
        if t == 1:
            kinds = [3] * (int(rng.geometric(tab.p_geo)) - 1)
        elif t == 2:
            kinds = [4]
        else:
            table = tab.xi3 if t == 3 else tab.xi4
            idx = int(np.searchsorted(table.cum, rng.random(), side="right"))
            kinds = _shuffled_types(int(table.ks[idx]), int(table.kps[idx]), rng)
        kids = []
        for ct in kinds:
            c = self.add(ct, v)
            self.stubs.add(c)
            kids.append(c)
        if not kids:
            return
        if t in (1, 2):
            for c in kids:
                self.label2[c] = self.label2[v]
        else:
            br = sample_bridge(t, kinds, rng)
            self.bridges2[v] = br
            acc = self.label2[v]
            for i, c in enumerate(kids):
                acc += br[i]
                self.label2[c] = acc

    # -- corner exploration ---------------------------------------------------

    def corner(self, pos: int) -> Tuple[int, int, bool]:
        while pos >= self.hi:
            self._right.pull()
        while pos < self.lo:
            self._left.pull()
        return self.corners[pos]

    def complete(self, v: int) -> bool:
        return (v not in self.stubs and
                len(self.positions.get(v, ())) == len(self.children[v]) + 1)

    def _side_of(self, v: int) -> int:
        """-1/+1: which contour walker emits the corners of v; 0 for
        ancestors of u0 (their corners straddle the origin)."""
        if v == 0:
            return +1
        if v in self.ancestors:
            return 0
        prev = v
        a = self.parent[v]
        while a >= 0 and a not in self.ancestors and a != 0:
            prev = a
            a = self.parent[a]
        if a < 0:
            return +1  # hangs under the outermost root, right of the climb
        if a == 0:
            return +1  # inside u0's fringe
        return -1 if self.children[a].index(prev) < self.u0_branch[a] else +1

    def complete_vertex(self, v: int, budget: int):
        """Expand v if needed and pull walkers until all its corners exist."""
        if v in self.stubs:
            self._expand_offspring(v)
        flip = 0
        while not self.complete(v):
            if self.pulled >= budget:
                raise ExplorationBudget(f"corner budget {budget} exhausted")
            side = self._side_of(v)
            if side > 0:
                self._right.pull()
            elif side < 0:
                self._left.pull()
            else:
                (self._right if flip % 2 == 0 else self._left).pull()
                flip += 1


class _Walker:
    """One direction of the contour walk; emits one corner per pull."""

    __slots__ = ("spine", "direction", "stack", "top")

    def __init__(self, spine: SpineMobile, direction: int, start: int):
        self.spine = spine
        self.direction = direction
        self.top = start
        if direction > 0:
            self.stack: List[Tuple[int, Optional[int], int]] = [(start, 0, _EMIT)]
        else:
            self.stack = []  # the first pull climbs above u0

    def pull(self) -> int:
        sp = self.spine
        sp.pulled += 1
        while True:
            if not self.stack:
                self._climb()
            v, i, phase = self.stack.pop()
            if phase == _EMIT:
                self.stack.append((v, i, _DESCEND))
                if sp.types[v] in (1, 2):
                    if self.direction > 0:
                        pos = sp.hi
                        sp.hi += 1
                    else:
                        sp.lo -= 1
                        pos = sp.lo
                    sp.corners[pos] = (v, sp.label2[v], sp.types[v] == 2)
                    sp.positions.setdefault(v, []).append(pos)
                    return pos
                continue
            if v in sp.stubs:
                sp._expand_offspring(v)
            kids = sp.children[v]
            c = len(kids)
            if self.direction > 0:
                if i < c:
                    self.stack.append((v, i + 1, _EMIT))
                    self.stack.append((kids[i], 0, _EMIT))
            else:
                if i is None:
                    i = c
                if i > 0:
                    self.stack.append((v, i - 1, _EMIT))
                    self.stack.append((kids[i - 1], None, _EMIT))

    def _climb(self):
        sp = self.spine
        sp.ensure_block_above(self.top)
        below = self.top
        chain = []
        a = sp.parent[below]
        while a >= 0:
            j = sp.children[a].index(below)
            if self.direction > 0:
                chain.append((a, j + 1, _EMIT))
            else:
                chain.append((a, j, _EMIT))
            below = a
            a = sp.parent[a]
        for frame in reversed(chain):
            self.stack.append(frame)
        self.top = below


def extend_spine(spine: SpineMobile) -> SpineMobile:
    return spine.extend()


# ---------------------------------------------------------------------------
# certified balls of the infinite map


@dataclass
class _LocalMap:
    alpha: Dict[int, int] = field(default_factory=dict)
    cycles: Dict[int, List[int]] = field(default_factory=dict)
    dart_vertex: Dict[int, int] = field(default_factory=dict)
    edges: List[Tuple[int, int]] = field(default_factory=list)
    out_dart: Dict[int, int] = field(default_factory=dict)
    target_dart: Dict[int, int] = field(default_factory=dict)


def limit_ball(spine: SpineMobile, kind: RootKind, k: int,
               budget: int = 2_000_000) -> BallCode:
    """Certified U_k of the infinite map around the marked structure."""
    if kind is RootKind.VERTEX and k == 0:
        return BallCode(kind, 0, canonical_code(
            build_map(0, (), (), None), RootKind.VERTEX))
    return BallCode(kind, k, _BallBuilder(spine, kind, budget).run(k))


def sample_limit_ball(model: WeightModel, gamma: GammaVector, kind: RootKind,
                      k: int, rng, budget: int = 2_000_000) -> BallCode:
    """Draw the limit mark type, build the spine lazily, return its ball."""
    eta = sample_eta(model, gamma, rng)
    if kind is RootKind.VERTEX and eta != 1:
        raise MobileError("vertex marking needs a type-1 limit mark")
    if kind is RootKind.FACE and eta not in (3, 4):
        raise MobileError("face marking needs a type-3/4 limit mark")
    spine = SpineMobile(model, eta, rng)
    return limit_ball(spine, kind, k)


class _BallBuilder:
    def __init__(self, spine: SpineMobile, kind: RootKind, budget: int):
        self.sp = spine
        self.kind = kind
        self.budget = budget
        self.root_dart: Optional[int] = None

    def run(self, k: int) -> bytes:
        sp = self.sp
        sp.complete_vertex(0, self.budget)
        info = self._root_structure()
        need: Set[int] = set(info["seed"])
        while True:
            for v in sorted(need):
                sp.complete_vertex(v, self.budget)
            window = sorted(p for v in need for p in sp.positions[v])
            lo, hi = window[0], window[-1]
            minlab = min(sp.corner(p)[1] for p in range(lo, hi + 1))
            lbar = self._find_barrier(lo, -1, minlab - 4)
            succ = self._resolve(lbar, hi)
            local = self._build_local(lbar, hi, succ, need)
            root_dart, srcs, blocker = self._resolve_root(local, info)
            if blocker is not None:
                need.add(blocker)
                continue
            self.root_dart = root_dart
            dist = self._bfs(local, srcs)
            ball = {v for v, d in dist.items() if d <= k}
            if ball <= need and all(sp.complete(v) for v in ball):
                return self._extract(local, dist, k, info)
            need |= ball

    # -- exploration ----------------------------------------------------------

    def _pull_right(self):
        if self.sp.pulled >= self.budget:
            raise ExplorationBudget(f"corner budget {self.budget} exhausted")
        self.sp._right.pull()

    def _find_barrier(self, start: int, direction: int, thr: int) -> int:
        sp = self.sp
        pos = start + direction
        while True:
            v, lab, is2 = sp.corner(pos)
            if not is2 and lab <= thr:
                return pos
            pos += direction
            if sp.pulled >= self.budget:
                raise ExplorationBudget(f"corner budget {self.budget} exhausted")

    def _succ_map(self, lo: int) -> Dict[int, int]:
        sp = self.sp
        succ: Dict[int, int] = {}
        stack: List[Tuple[int, int]] = []
        for pos in range(lo, sp.hi):
            v, lab, is2 = sp.corner(pos)
            if not is2:
                while stack and stack[-1][1] > lab:
                    j, _ = stack.pop()
                    succ[j] = pos
            stack.append((pos, lab))
        return succ

    def _resolve(self, lbar: int, hi: int) -> Dict[int, int]:
        """Successors for every corner in [lbar, hi], pulling right as needed."""
        while True:
            succ = self._succ_map(lbar)
            if all(p in succ for p in range(lbar, hi + 1)):
                return succ
            self._pull_right()

    # -- local structure --------------------------------------------------------

    def _build_local(self, lbar: int, hi: int, succ: Dict[int, int],
                     need: Set[int]) -> _LocalMap:
        sp = self.sp
        need_pos = {p for v in need for p in sp.positions[v]}
        sources: Set[int] = set()
        for p in range(lbar, hi + 1):
            if p in need_pos or succ.get(p) in need_pos:
                sources.add(p)
        # type-2 arcs merge through their vertex: both corners participate
        scan_lo = lbar
        while True:
            extra: Set[int] = set()
            for p in list(sources):
                v, _, is2 = sp.corner(p)
                if not is2:
                    continue
                while len(sp.positions[v]) < 2:
                    if sp.pulled >= self.budget:
                        raise ExplorationBudget("corner budget exhausted")
                    side = sp._side_of(v)
                    if side == 0:
                        # ancestor of the mark: the missing corner lies on
                        # the other side of the origin than the seen one
                        side = -1 if p >= 0 else +1
                    if side > 0:
                        sp._right.pull()
                    else:
                        sp._left.pull()
                for q in sp.positions[v]:
                    if q not in sources:
                        extra.add(q)
            if not extra:
                break
            sources |= extra
            scan_lo = min(scan_lo, min(sources))
            while True:
                succ = self._succ_map(scan_lo)
                if all(p in succ for p in sources):
                    break
                self._pull_right()

        local = _LocalMap()
        counter = [0]

        def new_dart(vertex: int) -> int:
            d = counter[0]
            counter[0] += 1
            local.dart_vertex[d] = vertex
            return d

        incoming: Dict[int, List[Tuple[int, int]]] = {}
        done2: Set[int] = set()
        for p in sorted(sources):
            v, _, is2 = sp.corner(p)
            if is2:
                if v in done2:
                    continue
                done2.add(v)
                p1, p2 = sorted(sp.positions[v])
                t1, t2 = succ[p1], succ[p2]
                d1 = new_dart(sp.corner(t1)[0])
                d2 = new_dart(sp.corner(t2)[0])
                local.alpha[d1] = d2
                local.alpha[d2] = d1
                local.target_dart[p1] = d1
                local.target_dart[p2] = d2
                incoming.setdefault(t1, []).append((p1, d1))
                incoming.setdefault(t2, []).append((p2, d2))
                local.edges.append((d1, d2))
            else:
                t = succ[p]
                a = new_dart(v)
                b = new_dart(sp.corner(t)[0])
                local.alpha[a] = b
                local.alpha[b] = a
                local.out_dart[p] = a
                local.target_dart[p] = b
                incoming.setdefault(t, []).append((p, b))
                local.edges.append((a, b))

        for v in need:
            if sp.types[v] == 2:
                continue
            darts: List[int] = []
            for g in sorted(sp.positions[v]):
                for _, d in sorted(incoming.get(g, ()), key=lambda sd: g - sd[0]):
                    darts.append(d)
                if g in local.out_dart:
                    darts.append(local.out_dart[g])
            local.cycles[v] = darts
        return local

    # -- rooting ---------------------------------------------------------------

    def _root_structure(self) -> dict:
        sp = self.sp
        eta = sp.eta
        if self.kind is RootKind.VERTEX:
            if eta != 1:
                raise MobileError("vertex ball needs a type-1 mark")
            return {"mode": "vertex", "seed": {0}}
        sp.ensure_block_above(0)
        par = sp.parent[0]
        if self.kind is RootKind.HALF_EDGE:
            if eta == 1:
                return {"mode": "edge_corner", "owner": 0, "index": 0,
                        "seed": {0}}
            if eta == 3:
                idx = sp.children[par].index(0)
                return {"mode": "edge_corner", "owner": par, "index": idx + 1,
                        "seed": {par}}
            return {"mode": "edge_type2", "owner": par, "seed": {par}}
        if eta == 3:
            idx = sp.children[par].index(0)
            return {"mode": "face_out", "owner": par, "index": idx,
                    "seed": {par}}
        if eta == 4:
            return {"mode": "face_type2", "owner": par, "seed": {par}}
        raise MobileError("face ball needs a type-3/4 mark")

    def _defining_dart(self, local: _LocalMap, info: dict) -> int:
        sp = self.sp
        owner = info["owner"]
        pos = sorted(sp.positions[owner])
        if info["mode"] in ("edge_corner", "face_out"):
            return local.out_dart[pos[info["index"]]]
        return local.target_dart[pos[0]]

    def _face_orbit(self, local: _LocalMap, d0: int):
        """sigma(alpha(.)) orbit from d0, or the vertex blocking it."""
        nxt: Dict[int, int] = {}
        for cyc in local.cycles.values():
            for t, d in enumerate(cyc):
                nxt[d] = cyc[(t + 1) % len(cyc)]
        orbit = [d0]
        d = d0
        while True:
            a = local.alpha[d]
            step = nxt.get(a)
            if step is None:
                return None, local.dart_vertex[a]
            if step == d0:
                return orbit, None
            orbit.append(step)
            d = step

    def _resolve_root(self, local: _LocalMap, info: dict):
        sp = self.sp
        mode = info["mode"]
        if mode == "vertex":
            return None, [0], None
        d0 = self._defining_dart(local, info)
        if mode.startswith("edge"):
            e = (d0, local.alpha[d0])
            root = e[0] if sp.coin else e[1]
            return root, [local.dart_vertex[e[0]], local.dart_vertex[e[1]]], None
        orbit, blocker = self._face_orbit(local, d0)
        if blocker is not None:
            return None, None, blocker
        return d0, sorted({local.dart_vertex[d] for d in orbit}), None

    def _bfs(self, local: _LocalMap, srcs) -> Dict[int, int]:
        dist: Dict[int, int] = {}
        frontier: List[int] = []
        for s in srcs:
            if s not in dist:
                dist[s] = 0
                frontier.append(s)
        while frontier:
            nxt: List[int] = []
            for v in frontier:
                cyc = local.cycles.get(v)
                if cyc is None:
                    continue  # incomplete: never expand through it
                for d in cyc:
                    w = local.dart_vertex[local.alpha[d]]
                    if w not in dist:
                        dist[w] = dist[v] + 1
                        nxt.append(w)
            frontier = nxt
        return dist

    # -- extraction --------------------------------------------------------------

    def _extract(self, local: _LocalMap, dist: Dict[int, int], k: int,
                 info: dict) -> bytes:
        mode = info["mode"]
        kept: Set[frozenset] = set()
        if k > 0:
            for d1, d2 in local.edges:
                ds = [dist.get(local.dart_vertex[d1]), dist.get(local.dart_vertex[d2])]
                ds = [x for x in ds if x is not None]
                if ds and min(ds) <= k - 1:
                    kept.add(frozenset((d1, d2)))
        if mode.startswith("edge"):
            kept.add(frozenset((self.root_dart, local.alpha[self.root_dart])))
        if mode.startswith("face"):
            orbit, blocker = self._face_orbit(local, self.root_dart)
            if blocker is not None:
                raise ExplorationBudget("face boundary failed to stabilise")
            for d in orbit:
                kept.add(frozenset((d, local.alpha[d])))

        kept_darts = sorted(d for key in kept for d in key)
        relabel = {d: i for i, d in enumerate(kept_darts)}
        n = len(kept_darts)
        alpha = [0] * n
        sigma = [0] * n
        placed = 0
        for key in kept:
            d1, d2 = tuple(key)
            alpha[relabel[d1]] = relabel[d2]
            alpha[relabel[d2]] = relabel[d1]
        for v, cyc in local.cycles.items():
            sub = [relabel[d] for d in cyc if d in relabel]
            for t, d in enumerate(sub):
                sigma[d] = sub[(t + 1) % len(sub)]
            placed += len(sub)
        if placed != n:
            raise ExplorationBudget("kept edge at an incomplete vertex")

        if mode == "vertex":
            root = min(relabel[d] for d in local.cycles[0] if d in relabel)
        else:
            root = relabel[self.root_dart]
        m = build_map(n, alpha, sigma, root, None)
        return canonical_code(m, self.kind)
