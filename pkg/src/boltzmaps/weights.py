"""Face-weight sequences and the admissibility/criticality system.

A weight sequence q assigns a nonnegative weight to each face degree, with
q_n > 0 for at least one n >= 3.  Solving the pair of fixed-point equations

    f_bullet(x, y) = 1 - 1/x,        f_diamond(x, y) = y

with x > 1 identifies x with the positive partition function Z+ and y with
sqrt(Z0).  The sequence is critical when the associated mean-growth matrix
has spectral radius one, equivalently when the scalar residual

    x^2 J(x, y) + 1 - x^2 d_x f_bullet - d_y f_diamond

vanishes (J the signed Jacobian of (f_bullet, f_diamond)).

Two families are supported: explicit finite support, evaluated by exact sums,
and the geometric family q_n = t * lam^n, evaluated through its closed forms.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from math import comb, inf, isfinite
from typing import Dict, Iterator, Optional, Tuple

import numpy as np


class WeightError(ValueError):
    pass


class DomainError(WeightError):
    """Negative or otherwise out-of-domain evaluation point."""


class NoSolution(WeightError):
    """The fixed-point system has no solution with x > 1 (inadmissible q)."""


class NonConvergence(WeightError):
    """Iteration budget exhausted before reaching tolerance."""


class SingularPoint(WeightError):
    """Matrix evaluation at a removable singularity (y = 0 or x = 1)."""


class NumericalInstability(WeightError):
    """Internal residual check failed; indicates a transcription error."""


SYSTEM_TOL = 1e-12
CRIT_TOL = 1e-9


def coeff_bullet(k: int, kp: int) -> int:
    """Count of decorated gluings behind the x^k y^kp term of f_bullet."""
    return comb(2 * k + kp + 1, k + 1) * comb(k + kp, k)


def coeff_diamond(k: int, kp: int) -> int:
    return comb(2 * k + kp, k) * comb(k + kp, k)


# ---------------------------------------------------------------------------
# weight families


@dataclass(frozen=True)
class FiniteWeights:
    """Explicit weights {degree: q_degree}, zero elsewhere."""

    q: Dict[int, float]

    def __post_init__(self):
        clean = {int(n): float(w) for n, w in self.q.items() if w != 0.0}
        if any(w < 0 for w in clean.values()) or any(n < 1 for n in clean):
            raise WeightError("weights must be nonnegative with degree >= 1")
        if not any(n >= 3 for n in clean):
            raise WeightError("need q_n > 0 for some n >= 3")
        object.__setattr__(self, "q", clean)

    def weight(self, n: int) -> float:
        return self.q.get(n, 0.0)

    def bullet_terms(self) -> Iterator[Tuple[int, int, float]]:
        """(k, kp, coeff * q) over the support of f_bullet."""
        for n, w in sorted(self.q.items()):
            if n < 2:
                continue
            for k in range((n - 2) // 2 + 1):
                kp = n - 2 - 2 * k
                yield k, kp, coeff_bullet(k, kp) * w

    def diamond_terms(self) -> Iterator[Tuple[int, int, float]]:
        for n, w in sorted(self.q.items()):
            if n < 1:
                continue
            for k in range((n - 1) // 2 + 1):
                kp = n - 1 - 2 * k
                yield k, kp, coeff_diamond(k, kp) * w

    @property
    def bipartite(self) -> bool:
        return all(n % 2 == 0 for n in self.q)

    def eval(self, x: float, y: float):
        """(f_bullet, f_diamond) and their four partials, exact sums."""
        fb = fd = fbx = fby = fdx = fdy = 0.0
        for k, kp, c in self.bullet_terms():
            xe = x ** k
            ye = y ** kp
            fb += c * xe * ye
            if k:
                fbx += c * k * x ** (k - 1) * ye
            if kp:
                fby += c * kp * xe * y ** (kp - 1)
        for k, kp, c in self.diamond_terms():
            xe = x ** k
            ye = y ** kp
            fd += c * xe * ye
            if k:
                fdx += c * k * x ** (k - 1) * ye
            if kp:
                fdy += c * kp * xe * y ** (kp - 1)
        return fb, fd, fbx, fby, fdx, fdy


@dataclass(frozen=True)
class GeometricWeights:
    """q_n = t * lam^n for all n >= 1."""

    t: float
    lam: float

    def __post_init__(self):
        if self.t <= 0 or self.lam <= 0:
            raise WeightError("geometric family needs t > 0 and lam > 0")

    def weight(self, n: int) -> float:
        return self.t * self.lam ** n

    @property
    def bipartite(self) -> bool:
        return False

    def eval(self, x: float, y: float):
        """Closed forms; returns inf values outside the convergence domain."""
        t, lam = self.t, self.lam
        u = 1.0 - lam * y
        if u <= 0:
            return (inf,) * 6
        w = 4.0 * lam * lam * x / (u * u)
        if w >= 1.0:
            return (inf,) * 6
        z = math.sqrt(1.0 - w)
        fb = t * (1.0 - z) / (2.0 * x * z)
        fd = t * lam / (u * z)
        zx = -2.0 * lam * lam / (u * u * z)
        fbx = -t / (2 * x * x) * (1.0 / z - 1.0) + t * lam ** 2 / (x * u * u * z ** 3)
        fby = 2.0 * t * lam ** 3 / (u ** 3 * z ** 3)
        fdx = fby  # d_y f_bullet == d_x f_diamond holds for every q
        fdy = t * lam ** 2 / (u * u * z) + 4.0 * t * lam ** 4 * x / (u ** 4 * z ** 3)
        del zx
        return fb, fd, fbx, fby, fdx, fdy

    def truncated(self, max_degree: int) -> FiniteWeights:
        return FiniteWeights({n: self.weight(n) for n in range(1, max_degree + 1)})


class Status(Enum):
    UNSOLVED = "unsolved"
    ADMISSIBLE = "admissible"
    CRITICAL = "critical"
    REGULAR_CRITICAL = "regular_critical"
    INADMISSIBLE = "inadmissible"


@dataclass
class WeightModel:
    """A weight sequence together with its solved fixed point, if any."""

    weights: object
    x: Optional[float] = None
    y: Optional[float] = None
    status: Status = Status.UNSOLVED
    meta: dict = field(default_factory=dict)

    @property
    def solved(self) -> bool:
        return self.x is not None

    @property
    def bipartite(self) -> bool:
        return self.weights.bipartite

    def require_solved(self):
        if not self.solved:
            raise WeightError("model has not been solved; call solve() first")

    def solve(self) -> "WeightModel":
        x, y = solve_system(self)
        self.x, self.y = x, y
        resid = criticality_residual(self, x, y)
        if abs(resid) <= CRIT_TOL:
            if regular_criticality_check(self, x, y, 1e-6):
                self.status = Status.REGULAR_CRITICAL
            else:
                self.status = Status.CRITICAL
        else:
            self.status = Status.ADMISSIBLE
        self.meta["crit_residual"] = resid
        return self


def eval_f(model_or_weights, x: float, y: float) -> Tuple[float, float]:
    """(f_bullet(x, y), f_diamond(x, y)); inf outside the domain."""
    if x < 0 or y < 0:
        raise DomainError("x and y must be nonnegative")
    w = getattr(model_or_weights, "weights", model_or_weights)
    fb, fd = w.eval(x, y)[:2]
    return fb, fd


def eval_f_derivs(model_or_weights, x: float, y: float):
    if x < 0 or y < 0:
        raise DomainError("x and y must be nonnegative")
    w = getattr(model_or_weights, "weights", model_or_weights)
    return w.eval(x, y)


# ---------------------------------------------------------------------------
# fixed-point system


def _solve_y(w, x: float, max_iter: int = 100000) -> Optional[float]:
    """Least fixed point of y -> f_diamond(x, y), or None if it escapes."""
    y = 0.0
    for _ in range(200):
        fy = w.eval(x, y)[1]
        if not isfinite(fy) or fy > 1e9:
            return None
        if abs(fy - y) < 1e-3:
            y = fy
            break
        y = fy
    # Newton polish on h(y) = f_diamond(x, y) - y.
    for _ in range(200):
        vals = w.eval(x, y)
        fd, fdy = vals[1], vals[5]
        if not isfinite(fd):
            return None
        h = fd - y
        if abs(h) < 1e-15:
            return y
        dh = fdy - 1.0
        if dh >= -1e-14:
            # tangent or expanding: fall back to plain iteration
            ynew = fd
            if not isfinite(ynew) or ynew > 1e9:
                return None
            if abs(ynew - y) < 1e-15:
                return ynew
            y = ynew
            continue
        y = y - h / dh
        if y < 0:
            y = 0.0
    vals = w.eval(x, y)
    if isfinite(vals[1]) and abs(vals[1] - y) < 1e-12:
        return y
    return None


def _g_and_slope(w, x: float):
    """Residual g(x) = f_bullet(x, y(x)) - 1 + 1/x and its x-derivative."""
    y = _solve_y(w, x)
    if y is None:
        return inf, inf, None
    fb, fd, fbx, fby, fdx, fdy = w.eval(x, y)
    if not isfinite(fb):
        return inf, inf, None
    g = fb - 1.0 + 1.0 / x
    yprime = fdx / (1.0 - fdy) if fdy < 1.0 else 0.0
    gprime = fbx + fby * yprime + (-1.0 / (x * x))
    return g, gprime, y


def _brent(fn, a: float, b: float, fa: float, fb: float) -> float:
    from scipy.optimize import brentq
    if fa == 0:
        return a
    if fb == 0:
        return b
    return float(brentq(fn, a, b, xtol=1e-15, rtol=8.9e-16, maxiter=300))


def solve_system(model: WeightModel) -> Tuple[float, float]:
    """Solve f_bullet = 1 - 1/x, f_diamond = y with x > 1.

    Scans x upward from 1 for the leftmost root of the reduced residual; a
    tangency (the critical case) is located through the root of the residual
    slope.  Raises NoSolution when the residual stays positive, NonConvergence
    when the located point fails the 1e-12 residual check.
    """
    w = model.weights
    # grid scan: geometric in (x - 1), down to a few ulps above 1
    xs = [1.0 + 10 ** e for e in np.linspace(-15.5, 6, 500)]
    xs = sorted(set(x for x in xs if x > 1.0))
    prev_x = None
    prev = None
    bracket = None
    slope_bracket = None
    best = (inf, None)
    for x in xs:
        g, gp, y = _g_and_slope(w, x)
        if y is None:
            break
        if abs(g) < abs(best[0]):
            best = (g, x)
        if prev is not None:
            if (prev[0] > 0) and (g <= 0):
                bracket = (prev_x, x)
                break
            if (prev[1] < 0) and (gp >= 0) and slope_bracket is None:
                slope_bracket = (prev_x, x)
        prev = (g, gp)
        prev_x = x

    def g_of(x):
        return _g_and_slope(w, x)[0]

    def gp_of(x):
        return _g_and_slope(w, x)[1]

    if bracket is not None:
        a, b = bracket
        x_star = _brent(g_of, a, b, g_of(a), g_of(b))
    elif slope_bracket is not None:
        a, b = slope_bracket
        x_min = _brent(gp_of, a, b, gp_of(a), gp_of(b))
        g_min = g_of(x_min)
        if g_min > SYSTEM_TOL:
            raise NoSolution(
                f"no admissible fixed point; min residual {g_min:.3e} at"
                f" x={x_min:.6f}")
        if g_min >= -SYSTEM_TOL:
            x_star = x_min  # tangency: the critical case
        else:
            # narrow dip missed by the grid: take its leftmost crossing
            x_star = _brent(g_of, a, x_min, g_of(a), g_min)
    elif best[1] is not None and abs(best[0]) <= SYSTEM_TOL:
        x_star = best[1]  # root within float resolution of x = 1
    else:
        raise NoSolution(
            f"no admissible fixed point found; min |residual| {abs(best[0]):.3e}"
            + (f" at x={best[1]:.6f}" if best[1] else ""))

    y_star = _solve_y(w, x_star)
    if y_star is None:
        raise NonConvergence("inner fixed point lost at the located x")
    fb, fd = w.eval(x_star, y_star)[:2]
    r1 = fb - 1.0 + 1.0 / x_star
    r2 = fd - y_star
    if not (abs(r1) < SYSTEM_TOL and abs(r2) < SYSTEM_TOL):
        if abs(r1) < 1e-6:
            raise NonConvergence(
                f"residuals ({r1:.2e}, {r2:.2e}) above tolerance {SYSTEM_TOL}")
        raise NoSolution(f"residual {r1:.3e} at closest approach x={x_star:.6f}")
    return x_star, y_star


# ---------------------------------------------------------------------------
# criticality


def criticality_matrix(model: WeightModel, x: float, y: float) -> np.ndarray:
    """The 3x3 mean-growth matrix whose spectral radius decides criticality.

    At y = 0 the x/y entry is replaced by its analytic limit, which exists
    for bipartite sequences; x = 1 is a genuine singularity.
    """
    w = model.weights
    if x <= 1.0:
        raise SingularPoint("matrix undefined at x <= 1")
    fb, fd, fbx, fby, fdx, fdy = w.eval(x, y)
    if y > 0:
        a10 = x / y * fdx
        a21 = x * y / (x - 1.0) * fby
    else:
        if not isinstance(w, FiniteWeights):
            raise SingularPoint("y = 0 limit only available for finite support")
        # lim_{y->0} d_x f_diamond / y picks out the kp = 1 terms
        a10 = x * sum(c * k * x ** (k - 1)
                      for k, kp, c in w.diamond_terms() if kp == 1 and k >= 1)
        fdy = sum(c * x ** k for k, kp, c in w.diamond_terms() if kp == 1)
        a21 = 0.0
    return np.array([
        [0.0, 0.0, x - 1.0],
        [a10, fdy, 0.0],
        [x * x / (x - 1.0) * fbx, a21, 0.0],
    ])


def spectral_radius(mat: np.ndarray) -> float:
    return float(max(abs(np.linalg.eigvals(mat))))


def criticality_residual(model: WeightModel, x: float, y: float) -> float:
    """LHS - RHS of the scalar criticality equation; > 0 means subcritical."""
    fb, fd, fbx, fby, fdx, fdy = model.weights.eval(x, y)
    if not all(map(isfinite, (fbx, fby, fdx, fdy))):
        raise DomainError("derivatives not finite at the evaluation point")
    jac = fbx * fdy - fby * fdx
    return x * x * jac + 1.0 - x * x * fbx - fdy


def regular_criticality_check(model_or_weights, x: float, y: float,
                              eps: float) -> bool:
    """True when f_bullet stays finite a bit beyond the solved point."""
    w = getattr(model_or_weights, "weights", model_or_weights)
    if isinstance(w, FiniteWeights):
        return True
    return isfinite(w.eval(x + eps, y + eps)[0])


# ---------------------------------------------------------------------------
# vertex-weighted critical family


def vertex_weight_params(t: float) -> Tuple[float, float, float]:
    """Critical (x, y, lam) for the family q_n = t * lam^n.

    The closed form for x(t) involves cube roots of negative reals and is
    evaluated with principal complex branches (the imaginary parts cancel).
    The returned triple is verified against the fixed-point system and the
    criticality equation to 1e-9.
    """
    if t <= 0:
        raise DomainError("t must be positive")

    def attempt(croot: complex) -> float:
        tw = 2.0 ** (1.0 / 3.0)
        s1 = cmath.sqrt(6.0 * tw * croot + 4.0 * (t - 1.0) * t + 4.0)
        inner = cmath.sqrt(3.0 * croot / 2.0 ** (2.0 / 3.0) + (t - 1.0) * t + 1.0)
        s2 = cmath.sqrt(
            -4.0 * (t + 1.0) * (2.0 * t - 1.0) * (t - 2.0) / (9.0 * inner)
            - (2.0 / 3.0) * tw * croot
            + (8.0 / 9.0) * (t - 2.0) ** 2
            + (8.0 / 3.0) * (t - 1.0))
        return complex(2.0 / 3.0 - t / 3.0 + s1 / 6.0 + s2 / 2.0)

    base = -((t - 1.0) ** 2) * t * t
    candidates = []
    for croot in (complex(base) ** (1.0 / 3.0),
                  complex(-abs(base) ** (1.0 / 3.0), 0.0)):
        try:
            candidates.append(attempt(croot))
        except ZeroDivisionError:
            continue
    best = None
    for xc in candidates:
        if abs(xc.imag) > 1e-8 or xc.real <= 1.0:
            continue
        x = xc.real
        y = math.sqrt(x - 1.0) * math.sqrt(t + x - 1.0) / math.sqrt(x)
        lam = (math.sqrt(x - 1.0) * math.sqrt(x) * math.sqrt(t + x - 1.0)
               / (2.0 * (t - 2.0) * x - t + 3.0 * x * x + 1.0))
        if lam <= 0:
            continue
        w = GeometricWeights(t, lam)
        fb, fd = w.eval(x, y)[:2]
        model = WeightModel(w)
        r1 = fb - 1.0 + 1.0 / x
        r2 = fd - y
        r3 = criticality_residual(model, x, y)
        err = max(abs(r1), abs(r2), abs(r3))
        if best is None or err < best[0]:
            best = (err, x, y, lam)
    if best is None or best[0] > 1e-9:
        detail = f"residual {best[0]:.3e}" if best else "no real branch"
        raise NumericalInstability(f"closed form failed verification: {detail}")
    return best[1], best[2], best[3]


def vertex_weighted_model(t: float) -> WeightModel:
    """Solved critical geometric model for vertex weight t."""
    x, y, lam = vertex_weight_params(t)
    model = WeightModel(GeometricWeights(t, lam), x=x, y=y,
                        status=Status.REGULAR_CRITICAL)
    model.meta["crit_residual"] = criticality_residual(model, x, y)
    return model


def critical_scale(shape: Dict[int, float], lo: float = 1e-9,
                   hi: float = 10.0, iters: int = 200) -> float:
    """Scale c such that c * shape is critical, by bisection on solvability.

    Subcritical scales solve with positive residual; too-large scales are
    inadmissible.  The boundary is the critical scale.
    """
    def solvable(c):
        try:
            m = WeightModel(FiniteWeights({n: c * w for n, w in shape.items()}))
            x, y = solve_system(m)
        except (NoSolution, NonConvergence):
            return False, None
        return True, criticality_residual(m, x, y)

    ok_lo, _ = solvable(lo)
    ok_hi, _ = solvable(hi)
    if not ok_lo or ok_hi:
        raise WeightError("bisection bracket does not straddle criticality")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok, resid = solvable(mid)
        if ok and abs(resid) < CRIT_TOL:
            return mid
        if ok:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# JSON interface


def model_from_dict(spec: dict) -> WeightModel:
    kind = spec.get("kind")
    if kind == "finite":
        return WeightModel(FiniteWeights({int(n): float(v)
                                          for n, v in spec["q"].items()}))
    if kind == "geometric":
        return WeightModel(GeometricWeights(float(spec["t"]),
                                            float(spec["lambda"])))
    if kind == "vertex_weighted":
        return vertex_weighted_model(float(spec["t"]))
    raise WeightError(f"unknown model kind {kind!r}")


def model_from_json(text: str) -> WeightModel:
    return model_from_dict(json.loads(text))


def model_to_dict(model: WeightModel) -> dict:
    w = model.weights
    if isinstance(w, FiniteWeights):
        spec = {"kind": "finite", "q": {str(n): v for n, v in sorted(w.q.items())}}
    else:
        spec = {"kind": "geometric", "t": w.t, "lambda": w.lam}
    if model.solved:
        spec["solved"] = {"x": model.x, "y": model.y, "status": model.status.value}
    return spec


def quadrangulation_model(c: float = 1.0 / 12.0) -> WeightModel:
    return WeightModel(FiniteWeights({4: c}))
