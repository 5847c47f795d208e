"""Four-type labelled trees (mobiles) and their Galton-Watson samplers.

Types 1 and 2 carry integer and half-integer labels; types 3 and 4 carry a
bridge vector that fixes the label increments around them.  Labels are stored
doubled (``label2``) so every value is an exact int; types 1/3 have even
``label2``, types 2/4 odd.

Offspring rules: type 1 begets a geometric number of type-3 children, type 2
begets exactly one type-4 child, and types 3/4 beget a mixed batch of type-1
and type-2 children whose joint law is read off the weight series, the batch
being ordered uniformly at random.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .weights import (FiniteWeights, GeometricWeights, WeightModel,
                      coeff_bullet, coeff_diamond)


class MobileError(ValueError):
    pass


class UnsolvedModel(MobileError):
    pass


class SizeBudgetExceeded(MobileError):
    pass


class TruncationTooSmall(MobileError):
    pass


class EmptyEvent(MobileError):
    """Conditioning target off the support lattice."""


class Timeout(MobileError):
    """Rejection sampling gave up; message reports the acceptance estimate."""


SIZE_CAP = 10_000_000

FRINGE_PLACEHOLDER = object()


@dataclass(frozen=True)
class GammaVector:
    """Type-count statistic |T|_gamma and the map-size conditioning shift."""

    name: str
    gamma: Tuple[int, int, int, int]
    map_shift: int  # tree target = map size + map_shift

    @property
    def mark_types(self) -> Tuple[int, ...]:
        return tuple(i + 1 for i, g in enumerate(self.gamma) if g)


GAMMA_VERTICES = GammaVector("vertices", (1, 0, 0, 0), -1)
GAMMA_EDGES = GammaVector("edges", (1, 0, 1, 1), +1)
GAMMA_FACES = GammaVector("faces", (0, 0, 1, 1), 0)
GAMMAS = {g.name: g for g in (GAMMA_VERTICES, GAMMA_EDGES, GAMMA_FACES)}


class Mobile:
    """Mutable-at-construction arborescence of typed, labelled vertices."""

    __slots__ = ("types", "parent", "children", "label2", "bridges2")

    def __init__(self):
        self.types: List[int] = []
        self.parent: List[int] = []
        self.children: List[List[int]] = []
        self.label2: List[Optional[int]] = []
        self.bridges2: Dict[int, Tuple[int, ...]] = {}

    def add(self, type_: int, parent: int) -> int:
        v = len(self.types)
        self.types.append(type_)
        self.parent.append(parent)
        self.children.append([])
        self.label2.append(None)
        if parent >= 0:
            self.children[parent].append(v)
        return v

    def __len__(self) -> int:
        return len(self.types)

    @property
    def root_type(self) -> int:
        return self.types[0]

    def counts(self) -> Tuple[int, int, int, int]:
        c = [0, 0, 0, 0]
        for t in self.types:
            c[t - 1] += 1
        return tuple(c)

    def gamma_size(self, gv: GammaVector) -> int:
        c = self.counts()
        return sum(g * n for g, n in zip(gv.gamma, c))

    def preorder(self) -> Iterator[int]:
        stack = [0]
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(self.children[v]))

    def label(self, v: int) -> Fraction:
        return Fraction(self.label2[v], 2)

    def height(self, v: int) -> int:
        h = 0
        while self.parent[v] >= 0:
            v = self.parent[v]
            h += 1
        return h

    def check_invariants(self):
        """Type alternation, bridge constraints, label parity and sums."""
        for v, t in enumerate(self.types):
            kids = [self.types[c] for c in self.children[v]]
            if t == 1 and any(k != 3 for k in kids):
                raise MobileError("type-1 children must all be type 3")
            if t == 2 and kids not in ([4], [], [4, 4]):
                raise MobileError("type-2 must have one type-4 child "
                                  "(two for a glued root)")
            if t in (3, 4) and any(k not in (1, 2) for k in kids):
                raise MobileError("type-3/4 children must be type 1 or 2")
            if self.label2[v] is not None and (self.label2[v] % 2) != (t in (2, 4)):
                raise MobileError("label parity does not match type")
        for v, br in self.bridges2.items():
            if sum(br) != 0:
                raise MobileError("bridge does not sum to zero")
            cyc = [bridge_parent_type(self.types[v])] + \
                [self.types[c] for c in self.children[v]]
            for i, a2 in enumerate(br):
                lo = _gap_lower_bound2(cyc[i], cyc[(i + 1) % len(cyc)])
                if a2 < lo or (a2 - lo) % 2:
                    raise MobileError("bridge step violates its constraint")


def bridge_parent_type(t: int) -> int:
    if t == 3:
        return 1
    if t == 4:
        return 2
    raise MobileError("bridges only decorate types 3 and 4")


def _gap_lower_bound2(a: int, b: int) -> int:
    # doubled lower bound of a bridge step between neighbour types a, b
    if a == 1 and b == 1:
        return -2
    if a == 2 and b == 2:
        return 0
    return -1


# ---------------------------------------------------------------------------
# offspring tables


class OffspringTables:
    """Sampling tables for a solved model: geometric type-1 law plus the
    (k, k') batch laws of types 3 and 4 (exact for finite support, truncated
    at a certified 1e-15 relative tail for the geometric family)."""

    def __init__(self, model: WeightModel, tail: float = 1e-15):
        model.require_solved()
        x, y = model.x, model.y
        self.x, self.y = x, y
        self.p_geo = 1.0 / x
        w = model.weights
        if isinstance(w, FiniteWeights):
            bullet = [(k, kp, c * x ** k * y ** kp) for k, kp, c in w.bullet_terms()]
            diamond = [(k, kp, c * x ** k * y ** kp) for k, kp, c in w.diamond_terms()]
        else:
            bullet, diamond = _geometric_terms(w, x, y, tail)
        self.xi3 = _BatchTable(bullet)
        self.xi4 = _BatchTable(diamond) if y > 0 else None

    def mean_matrix(self) -> np.ndarray:
        m = np.zeros((4, 4))
        m[0, 2] = (1.0 - self.p_geo) / self.p_geo
        m[1, 3] = 1.0
        m[2, 0], m[2, 1] = self.xi3.mean_k, self.xi3.mean_kp
        if self.xi4 is not None:
            m[3, 0], m[3, 1] = self.xi4.mean_k, self.xi4.mean_kp
        return m


class _BatchTable:
    __slots__ = ("ks", "kps", "probs", "cum", "mean_k", "mean_kp", "by_k")

    def __init__(self, terms: Sequence[Tuple[int, int, float]]):
        terms = [(k, kp, wt) for k, kp, wt in terms if wt > 0.0]
        if not terms:
            raise MobileError("empty offspring table")
        total = sum(wt for _, _, wt in terms)
        self.ks = np.array([k for k, _, _ in terms], dtype=np.int64)
        self.kps = np.array([kp for _, kp, _ in terms], dtype=np.int64)
        self.probs = np.array([wt / total for _, _, wt in terms])
        self.cum = np.cumsum(self.probs)
        self.cum[-1] = 1.0
        self.mean_k = float(np.dot(self.ks, self.probs))
        self.mean_kp = float(np.dot(self.kps, self.probs))
        self.by_k: Dict[int, Dict[int, float]] = {}
        for k, kp, p in zip(self.ks, self.kps, self.probs):
            self.by_k.setdefault(int(k), {})[int(kp)] = float(p)

    def draw(self, rng) -> Tuple[int, int]:
        i = int(np.searchsorted(self.cum, rng.random(), side="right"))
        return int(self.ks[i]), int(self.kps[i])

    def pmf(self, k: int, kp: int) -> float:
        return self.by_k.get(k, {}).get(kp, 0.0)


def _geometric_terms(w: GeometricWeights, x: float, y: float, tail: float):
    """Shell-wise truncation of both series with a geometric tail bound."""
    bullet, diamond = [], []
    tot_b = tot_d = 0.0
    prev_b = prev_d = None
    calm = 0
    for n in range(1, 100000):
        q = w.weight(n)
        sb = sd = 0.0
        if n >= 2:
            for k in range((n - 2) // 2 + 1):
                kp = n - 2 - 2 * k
                wt = coeff_bullet(k, kp) * q * x ** k * y ** kp
                bullet.append((k, kp, wt))
                sb += wt
        for k in range((n - 1) // 2 + 1):
            kp = n - 1 - 2 * k
            wt = coeff_diamond(k, kp) * q * x ** k * y ** kp
            diamond.append((k, kp, wt))
            sd += wt
        tot_b += sb
        tot_d += sd
        if prev_b is not None and prev_b > 0 and prev_d > 0:
            ratio = max(sb / prev_b, sd / prev_d)
            if ratio < 0.999 and sb <= tail * tot_b * (1 - ratio) \
                    and sd <= tail * tot_d * (1 - ratio):
                calm += 1
                if calm >= 3:
                    return bullet, diamond
            else:
                calm = 0
        prev_b, prev_d = sb, sd
    raise TruncationTooSmall("geometric series shells did not certify a tail")


def _tables(model: WeightModel) -> OffspringTables:
    tab = model.meta.get("offspring_tables")
    if tab is None:
        tab = OffspringTables(model)
        model.meta["offspring_tables"] = tab
    return tab


def mean_offspring_matrix(model: WeightModel) -> np.ndarray:
    return _tables(model).mean_matrix()


# ---------------------------------------------------------------------------
# elementary samplers


def sample_offspring(model: WeightModel, parent_type: int, rng) -> List[int]:
    """Ordered child-type list for one vertex of the given type."""
    if not model.solved:
        raise UnsolvedModel("solve the model before sampling")
    tab = _tables(model)
    if parent_type == 1:
        k = int(rng.geometric(tab.p_geo)) - 1
        return [3] * k
    if parent_type == 2:
        return [4]
    table = tab.xi3 if parent_type == 3 else tab.xi4
    if table is None:
        raise MobileError("type-4 offspring undefined in a bipartite model")
    k, kp = table.draw(rng)
    return _shuffled_types(k, kp, rng)


def _shuffled_types(k: int, kp: int, rng) -> List[int]:
    if kp == 0:
        return [1] * k
    if k == 0:
        return [2] * kp
    types = [1] * k + [2] * kp
    # uniform order of the child batch
    for i in range(len(types) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        types[i], types[j] = types[j], types[i]
    return types


def uniform_weak_composition(total: int, parts: int, rng) -> List[int]:
    """Uniform vector of ``parts`` nonnegative ints summing to ``total``."""
    if parts == 1:
        return [total]
    if total == 0:
        return [0] * parts
    bars = np.sort(rng.choice(total + parts - 1, size=parts - 1, replace=False))
    out = [int(bars[0])]
    for i in range(1, parts - 1):
        out.append(int(bars[i] - bars[i - 1] - 1))
    out.append(int(total + parts - 2 - bars[-1]))
    return out


def _bridge_bounds(vertex_type: int, child_types: Sequence[int]) -> List[int]:
    d = len(child_types)
    if d < 1:
        raise MobileError("bridges require outdegree >= 1")
    cyc = [bridge_parent_type(vertex_type)] + list(child_types)
    return [_gap_lower_bound2(cyc[i], cyc[(i + 1) % (d + 1)]) for i in range(d + 1)]


def sample_bridge(vertex_type: int, child_types: Sequence[int], rng) -> Tuple[int, ...]:
    """Uniform bridge vector (doubled units) around a type-3/4 vertex.

    ``vertex_type`` is the type (3 or 4) of the decorated vertex, which also
    fixes the type of its parent.  Coordinates are shifted by their per-step
    lower bound, reducing to a uniform weak composition; no rejection.
    """
    lbs = _bridge_bounds(vertex_type, child_types)
    s2 = -sum(lbs)
    if s2 % 2:
        raise MobileError("odd number of mixed gaps cannot happen")
    comp = uniform_weak_composition(s2 // 2, len(lbs), rng)
    return tuple(lb + 2 * b for lb, b in zip(lbs, comp))


def enumerate_bridges(vertex_type: int, child_types: Sequence[int]) -> List[Tuple[int, ...]]:
    """All valid bridge vectors (doubled units), for oracles and counting."""
    lbs = _bridge_bounds(vertex_type, child_types)
    d = len(child_types)
    s = -sum(lbs) // 2
    out = []

    def rec(i, remaining, acc):
        if i == d:
            out.append(tuple(lb + 2 * b for lb, b in zip(lbs, acc + [remaining])))
            return
        for b in range(remaining + 1):
            rec(i + 1, remaining - b, acc + [b])

    rec(0, s, [])
    return out


def bridge_count(vertex_type: int, k: int, kp: int) -> int:
    """Number of valid bridges around a type-3/4 vertex with (k, kp) children.

    Independent of the child order; equals the leading binomial of the
    corresponding series term.
    """
    n1 = k + (1 if vertex_type == 3 else 0)
    d = k + kp
    return comb(n1 + d, d)


# ---------------------------------------------------------------------------
# tree samplers


def assign_labels(tree: Mobile, root_label2: Optional[int] = None) -> Mobile:
    """Fill in labels: root by type, types 3/4 copy the parent, bridge
    partial sums label the children of types 3/4."""
    if root_label2 is None:
        root_label2 = 0 if tree.types[0] in (1, 3) else 1
    tree.label2[0] = root_label2
    for v in tree.preorder():
        t = tree.types[v]
        lab = tree.label2[v]
        kids = tree.children[v]
        if not kids:
            continue
        if t in (1, 2):
            for c in kids:
                tree.label2[c] = lab
        else:
            br = tree.bridges2[v]
            acc = lab
            for i, c in enumerate(kids):
                acc += br[i]
                tree.label2[c] = acc
    return tree


def decorate(tree: Mobile, rng) -> Mobile:
    """Sample bridges for every type-3/4 vertex with children, then label."""
    decorate_bridges(tree, rng)
    return assign_labels(tree)


def decorate_bridges(tree: Mobile, rng, vertices=None) -> Mobile:
    """Sample bridges (labels untouched); bridges with the same per-step
    bound profile are drawn in one batch."""
    if vertices is None:
        vertices = range(len(tree))
    groups: Dict[Tuple[int, ...], List[int]] = {}
    for v in vertices:
        if tree.types[v] in (3, 4) and tree.children[v]:
            lbs = _bridge_bounds(tree.types[v],
                                 [tree.types[c] for c in tree.children[v]])
            groups.setdefault(tuple(lbs), []).append(v)
    for lbs, vs in sorted(groups.items()):
        s = -sum(lbs) // 2
        parts = len(lbs)
        if parts == 2:
            bs = rng.integers(0, s + 1, size=len(vs))
            for v, b in zip(vs, bs):
                tree.bridges2[v] = (lbs[0] + 2 * int(b), lbs[1] + 2 * (s - int(b)))
        else:
            for v in vs:
                comp = uniform_weak_composition(s, parts, rng)
                tree.bridges2[v] = tuple(lb + 2 * b for lb, b in zip(lbs, comp))
    return tree


def _grow(model: WeightModel, root_type: int, rng,
          max_vertices: int,
          kill_type: Optional[int] = None,
          gamma: Optional[GammaVector] = None,
          budget: Optional[int] = None) -> Optional[Mobile]:
    """Level-wise Galton-Watson growth with batched draws.

    ``kill_type`` suppresses offspring of non-root vertices of that type;
    ``budget`` aborts (returns None) once the gamma-size exceeds it.
    """
    if not model.solved:
        raise UnsolvedModel("solve the model before sampling")
    tab = _tables(model)
    tree = Mobile()
    tree.add(root_type, -1)
    gw = gamma.gamma if gamma else (0, 0, 0, 0)
    gsize = gw[root_type - 1]
    if budget is not None and gsize > budget:
        return None
    frontier = [0]
    while frontier:
        nxt: List[int] = []
        by_type: Dict[int, List[int]] = {1: [], 2: [], 3: [], 4: []}
        for v in frontier:
            t = tree.types[v]
            if kill_type is not None and v != 0 and t == kill_type:
                continue
            by_type[t].append(v)
        vs = by_type[1]
        if vs:
            ks = rng.geometric(tab.p_geo, size=len(vs)) - 1
            for v, k in zip(vs, ks):
                for _ in range(k):
                    nxt.append(tree.add(3, v))
            gsize += gw[2] * int(ks.sum())
        for v in by_type[2]:
            nxt.append(tree.add(4, v))
        gsize += gw[3] * len(by_type[2])
        for t, table in ((3, tab.xi3), (4, tab.xi4)):
            vs = by_type[t]
            if not vs:
                continue
            if table is None:
                raise MobileError("type-4 offspring undefined in a bipartite model")
            idx = np.searchsorted(table.cum, rng.random(len(vs)), side="right")
            for v, i in zip(vs, idx):
                k, kp = int(table.ks[i]), int(table.kps[i])
                for ct in _shuffled_types(k, kp, rng):
                    nxt.append(tree.add(ct, v))
                gsize += gw[0] * k + gw[1] * kp
        if len(tree) > max_vertices:
            raise SizeBudgetExceeded(f"tree exceeded {max_vertices} vertices")
        if budget is not None and gsize > budget:
            return None
        frontier = nxt
    return tree


def sample_tree(model: WeightModel, root_type: int, rng,
                max_vertices: int = SIZE_CAP) -> Mobile:
    """A complete decorated, labelled mobile from the unconditioned law."""
    tree = _grow(model, root_type, rng, max_vertices)
    return decorate(tree, rng)


def sample_killed_tree(model: WeightModel, kappa: int, rng,
                       max_vertices: int = SIZE_CAP,
                       decorated: bool = True) -> Mobile:
    """T^kappa: non-root vertices of type kappa receive no offspring."""
    tree = _grow(model, kappa, rng, max_vertices, kill_type=kappa)
    return decorate(tree, rng) if decorated else tree


# ---------------------------------------------------------------------------
# size distribution and conditioning


def _series_mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return np.convolve(a, b)[: n + 1]


def size_distribution(model: WeightModel, root_type: int, gamma: GammaVector,
                      n_max: int) -> np.ndarray:
    """P(|T(root_type)|_gamma = m) for m <= n_max, by fixed-point iteration
    on the truncated generating series of the four types."""
    model.require_solved()
    tab = _tables(model)
    n = n_max
    G = [np.zeros(n + 1) for _ in range(4)]
    p1 = tab.p_geo

    def shift(series, g):
        if g == 0:
            return series[: n + 1]
        out = np.zeros(n + 1)
        out[g:] = series[: n + 1 - g]
        return out

    def series_inverse(h):
        # 1/h with h[0] != 0
        out = np.zeros(n + 1)
        out[0] = 1.0 / h[0]
        for m in range(1, n + 1):
            out[m] = -np.dot(h[1:m + 1], out[m - 1::-1]) / h[0]
        return out

    def batch_series(table: Optional[_BatchTable], g1, g2):
        if table is None:
            return np.zeros(n + 1)
        max_k = int(table.ks.max())
        max_kp = int(table.kps.max())
        pow2 = [np.zeros(n + 1)]
        pow2[0][0] = 1.0
        for _ in range(max_kp):
            pow2.append(_series_mul(pow2[-1], g2, n))
        # A_k(G2) then Horner in G1
        a = []
        for k in range(max_k + 1):
            acc = np.zeros(n + 1)
            for kp, p in table.by_k.get(k, {}).items():
                acc += p * pow2[kp]
            a.append(acc)
        res = a[max_k].copy()
        for k in range(max_k - 1, -1, -1):
            res = _series_mul(res, g1, n)
            res += a[k]
        return res

    g = gamma.gamma
    for it in range(40 + 8 * n):
        h = np.zeros(n + 1)
        h[0] = 1.0
        h -= (1.0 - p1) * G[2]
        new1 = shift(p1 * series_inverse(h), g[0])
        new2 = shift(G[3], g[1])
        new3 = shift(batch_series(tab.xi3, G[0], G[1]), g[2])
        new4 = shift(batch_series(tab.xi4, G[0], G[1]), g[3])
        delta = max(np.max(np.abs(new1 - G[0])), np.max(np.abs(new2 - G[1])),
                    np.max(np.abs(new3 - G[2])), np.max(np.abs(new4 - G[3])))
        G = [new1, new2, new3, new4]
        if delta < 1e-16:
            break
    else:
        raise TruncationTooSmall("size series did not stabilise")
    out = G[root_type - 1]
    if np.any(out < -1e-12) or out.sum() > 1.0 + 1e-9:
        raise TruncationTooSmall("size series left the probability simplex")
    return np.clip(out, 0.0, 1.0)


def detect_lattice(probs: np.ndarray, tol: float = 1e-250) -> Tuple[int, int]:
    """(a, d) with the size support contained in a + d*Z, from gcd of gaps."""
    support = [m for m, p in enumerate(probs) if p > tol]
    if not support:
        raise EmptyEvent("empty size support at this truncation")
    a = support[0]
    d = 0
    for s in support[1:]:
        d = gcd(d, s - a)
    return a, (d if d else 1)


def _single_even_atom(model: WeightModel) -> Optional[int]:
    w = model.weights
    if isinstance(w, FiniteWeights) and len(w.q) == 1:
        (p,) = w.q
        if p % 2 == 0 and p >= 4:
            return p
    return None


def _conditioned_skeleton_size(m_arity: int, gamma: GammaVector, n: int) -> int:
    """#1-count of a single-atom mobile with |T|_gamma = n, or raise."""
    if gamma.name == "vertices":
        s = n
    elif gamma.name == "faces":
        s = m_arity * n + 1
    else:  # edges statistic: s + (s-1)/m = n
        num = m_arity * n + 1
        if num % (m_arity + 1):
            raise EmptyEvent(f"target {n} off the lattice")
        s = num // (m_arity + 1)
    if s < 1 or (s - 1) % m_arity:
        raise EmptyEvent(f"target {n} off the lattice")
    return s


def _cycle_lemma_rotation(xs: np.ndarray) -> int:
    """Index starting the unique rotation whose walk stays nonnegative."""
    steps = xs - 1
    prefix = np.cumsum(steps)
    j = int(np.argmin(prefix))  # first position attaining the minimum
    return (j + 1) % len(xs)


def _conditioned_single_atom(model: WeightModel, p_atom: int,
                             gamma: GammaVector, n: int, rng) -> Mobile:
    """Exact conditioned sampler for q supported on one even degree.

    The type-1 skeleton is a monotype Galton-Watson tree; conditioned on its
    size it is a uniform weak composition (geometric offspring) fixed up by
    the cycle lemma.  The type-3 layer is then forced, bridges independent.
    """
    m_arity = (p_atom - 2) // 2
    s = _conditioned_skeleton_size(m_arity, gamma, n)
    if s == 1:
        raise EmptyEvent("single-vertex mobile is excluded (no faces)")
    total3 = (s - 1) // m_arity
    counts3 = uniform_weak_composition(total3, s, rng)
    xs = np.array(counts3, dtype=np.int64) * m_arity
    r = _cycle_lemma_rotation(xs)
    k3 = [counts3[(r + i) % s] for i in range(s)]  # preorder type-3 counts

    tree = Mobile()
    tree.add(1, -1)
    stack = [0]  # type-1 vertices; pop order matches skeleton preorder
    ptr = 0
    while stack:
        v = stack.pop()
        kv = k3[ptr]
        ptr += 1
        kids1 = []
        for _ in range(kv):
            w3 = tree.add(3, v)
            for _ in range(m_arity):
                kids1.append(tree.add(1, w3))
        stack.extend(reversed(kids1))
    return decorate(tree, rng)


def sample_conditioned(model: WeightModel, root_type: int, gamma: GammaVector,
                       n: int, rng, max_tries: int = 2_000_000) -> Mobile:
    """Exact sampling of T(root_type) conditioned on |T|_gamma = n.

    Single-even-atom bipartite families use a linear-time cycle-lemma path;
    everything else is early-abort rejection whose acceptance is the exact
    target probability.
    """
    model.require_solved()
    atom = _single_even_atom(model)
    if atom is not None and root_type == 1:
        return _conditioned_single_atom(model, atom, gamma, n, rng)
    for tries in range(1, max_tries + 1):
        tree = _grow(model, root_type, rng, SIZE_CAP, gamma=gamma, budget=n)
        if tree is not None and tree.gamma_size(gamma) == n:
            return decorate(tree, rng)
    raise Timeout(f"no acceptance in {max_tries} tries; "
                  f"acceptance rate < {1.0 / max_tries:.2e}")


# ---------------------------------------------------------------------------
# batched statistics (no tree structure built)


def _batched_counts(model: WeightModel, root_type: int, rng, n_samples: int,
                    weigh: Sequence[float], budget: Optional[int] = None,
                    kill_type: Optional[int] = None) -> np.ndarray:
    """Per-sample weighted vertex counts of independent trees, level-wise and
    fully vectorised.  Samples whose running count exceeds ``budget`` are
    reported as -1."""
    tab = _tables(model)
    weigh = np.asarray(weigh, dtype=np.int64)
    totals = np.full(n_samples, weigh[root_type - 1], dtype=np.int64)
    sid = np.arange(n_samples, dtype=np.int64)
    typ = np.full(n_samples, root_type, dtype=np.int64)
    aborted = np.zeros(n_samples, dtype=bool)
    first_level = True
    while sid.size:
        out_sid = []
        out_typ = []
        for t in (1, 2, 3, 4):
            mask = typ == t
            if not mask.any():
                continue
            vs = sid[mask]
            if kill_type == t and not first_level:
                # non-root vertices of the killed type get no offspring;
                # the root is alone in the first level by construction
                continue
            if t == 1:
                ks = rng.geometric(tab.p_geo, size=vs.size) - 1
                out_sid.append(np.repeat(vs, ks))
                out_typ.append(np.full(int(ks.sum()), 3, dtype=np.int64))
            elif t == 2:
                out_sid.append(vs)
                out_typ.append(np.full(vs.size, 4, dtype=np.int64))
            else:
                table = tab.xi3 if t == 3 else tab.xi4
                if table is None:
                    raise MobileError("type-4 offspring in a bipartite model")
                idx = np.searchsorted(table.cum, rng.random(vs.size), side="right")
                ks, kps = table.ks[idx], table.kps[idx]
                out_sid.append(np.repeat(vs, ks))
                out_typ.append(np.full(int(ks.sum()), 1, dtype=np.int64))
                out_sid.append(np.repeat(vs, kps))
                out_typ.append(np.full(int(kps.sum()), 2, dtype=np.int64))
        first_level = False
        if not out_sid:
            break
        sid = np.concatenate(out_sid)
        typ = np.concatenate(out_typ)
        if sid.size:
            totals += np.bincount(sid, weights=weigh[typ - 1],
                                  minlength=n_samples).astype(np.int64)
        if budget is not None:
            aborted |= totals > budget
            keep = ~aborted[sid]
            sid = sid[keep]
            typ = typ[keep]
    totals[aborted] = -1
    return totals


def sample_gamma_sizes(model: WeightModel, root_type: int, gamma: GammaVector,
                       rng, n_samples: int, budget: int) -> np.ndarray:
    """|T|_gamma of independent raw trees; -1 where the budget was exceeded."""
    return _batched_counts(model, root_type, rng, n_samples, gamma.gamma,
                           budget=budget)


def sample_killed_type_counts(model: WeightModel, kappa: int, rng,
                              n_samples: int,
                              budget: Optional[int] = None) -> np.ndarray:
    """#kappa-counts of independent killed trees T^kappa (root included)."""
    weigh = [0, 0, 0, 0]
    weigh[kappa - 1] = 1
    return _batched_counts(model, kappa, rng, n_samples, weigh,
                           budget=budget, kill_type=kappa)


# ---------------------------------------------------------------------------
# fringe subtrees


@dataclass(frozen=True)
class MarkedMobile:
    tree: Mobile
    mark: int


def fringe(tree: Mobile, v: int, k: int):
    """Extended fringe subtree at the k-th ancestor of v, marked at v.

    Returns FRINGE_PLACEHOLDER when v sits at height < k.
    """
    top = v
    for _ in range(k):
        top = tree.parent[top]
        if top < 0:
            return FRINGE_PLACEHOLDER
    sub = Mobile()
    remap = {top: sub.add(tree.types[top], -1)}
    sub.label2[0] = tree.label2[top]
    stack = [top]
    while stack:
        u = stack.pop()
        for c in tree.children[u]:
            remap[c] = sub.add(tree.types[c], remap[u])
            sub.label2[remap[c]] = tree.label2[c]
            stack.append(c)
        if u in tree.bridges2:
            sub.bridges2[remap[u]] = tree.bridges2[u]
    return MarkedMobile(sub, remap[v])


# ---------------------------------------------------------------------------
# serialization


def _fmt_half(v2: int) -> str:
    return str(v2 // 2) if v2 % 2 == 0 else f"{v2}/2"


def _parse_half(s: str) -> int:
    if "/" in s:
        num, den = s.split("/")
        if den != "2":
            raise MobileError("labels must have denominator <= 2")
        return int(num)
    return 2 * int(s)


def serialize_mobile(tree: Mobile) -> str:
    """Parenthesised preorder with type:label and bridge vectors."""
    out = []
    stack = [(0, False)]
    while stack:
        v, closing = stack.pop()
        if closing:
            out.append(")")
            continue
        head = f"{tree.types[v]}:{_fmt_half(tree.label2[v])}"
        if v in tree.bridges2:
            head += "|" + ",".join(_fmt_half(a) for a in tree.bridges2[v])
        out.append("(" + head)
        stack.append((v, True))
        for c in reversed(tree.children[v]):
            stack.append((c, False))
    return "".join(out)


def parse_mobile(text: str) -> Mobile:
    tree = Mobile()
    pos = 0
    stack = []
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == "(":
            end = pos + 1
            while text[end] not in "()":
                end += 1
            head = text[pos + 1:end]
            if "|" in head:
                tl, br = head.split("|")
            else:
                tl, br = head, None
            t, lab = tl.split(":")
            parent = stack[-1] if stack else -1
            v = tree.add(int(t), parent)
            tree.label2[v] = _parse_half(lab)
            if br is not None:
                tree.bridges2[v] = tuple(_parse_half(a) for a in br.split(","))
            stack.append(v)
            pos = end
        elif ch == ")":
            stack.pop()
            pos += 1
        else:
            raise MobileError(f"unexpected character {ch!r}")
    if stack:
        raise MobileError("unbalanced parentheses")
    return tree
