"""Numerical integration over the unit disc and the centered square.

Disc rule: tensor product of Gauss--Legendre in radius (the polar weight r
is folded into the weights) with a uniform trapezoid rule in angle, which is
spectrally accurate for the periodic integrands arising here.  Square rule:
tensor Gauss--Legendre per axis.  Node counts double per refinement level
from a base of 128 x 256 (disc) and 192 x 192 (square).

On top of the plain rules this module computes Jacobian norms, essential
suprema, integrability scans, and the two empirical Poincare-inequality
checks.  All reductions use numpy's pairwise summation in a fixed node
order, so results are reproducible regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import NoAdmissibleBeta, NonFiniteIntegrand, NotConverged
from .maps import PlanarMap, Source, distortion_global
from .poincare import poincare_disc_upper

BASE_RADIAL = 128
BASE_ANGULAR = 256
BASE_AXIS = 192

# two successive levels must agree this well for a norm to count as converged
NORM_CONVERGENCE_RTOL = 1e-4
# ... and the beta scan calls a probe divergent beyond this, after 3 refinements
SCAN_DIVERGENCE_RTOL = 1e-2
SCAN_REFINEMENTS = 3
# growth factor per refinement above which a sampled supremum is flagged unbounded
SUP_GROWTH_FACTOR = 4.0


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights for one refinement level over a source domain."""

    source: Source
    level: int
    points: np.ndarray  # complex nodes
    weights: np.ndarray  # positive, summing to the source area
    radial_nodes: int  # per-axis count for the square
    angular_nodes: int

    @property
    def nodes(self):
        """Iterator of (point, weight) pairs."""
        return zip(self.points, self.weights)

    def dump_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,y,weight\n")
            for p, w in zip(self.points, self.weights):
                fh.write(f"{p.real:.17g},{p.imag:.17g},{w:.17g}\n")


@lru_cache(maxsize=32)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def build_grid(source: Source, level: int, angular_factor: int = 1) -> QuadratureGrid:
    """Build the tensor rule for ``source`` at a refinement level >= 0.

    ``angular_factor`` multiplies the angular node count (used to resolve
    integrands with localized angular features, e.g. near a cusp preimage).
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if source is Source.UNIT_DISC:
        nr = BASE_RADIAL * 2**level
        na = BASE_ANGULAR * 2**level * angular_factor
        x, w = _leggauss(nr)
        r = 0.5 * (x + 1.0)
        wr = 0.5 * w * r  # polar weight folded in
        theta = 2.0 * math.pi * np.arange(na) / na
        wth = np.full(na, 2.0 * math.pi / na)
        pts = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
        wts = (wr[:, None] * wth[None, :]).ravel()
        return QuadratureGrid(source, level, pts, wts, nr, na)
    n = BASE_AXIS * 2**level
    a = source.half_width
    x, w = _leggauss(n)
    xs = a * x
    ws = a * w
    pts = (xs[:, None] + 1j * xs[None, :]).ravel()
    wts = (ws[:, None] * ws[None, :]).ravel()
    return QuadratureGrid(source, level, pts, wts, n, n)


def grid_for_map(pmap: PlanarMap, level: int) -> QuadratureGrid:
    """Grid adapted to the map: cardioid-family integrands get 2x angular nodes.

    Their Jacobian degenerates at the cusp preimage on the boundary; doubling
    the (uniform) angular rule keeps the spectral accuracy of the trapezoid
    rule while resolving the steep angular variation of fractional powers.
    """
    factor = 2 if _has_cardioid(pmap) else 1
    return build_grid(pmap.source, level, angular_factor=factor)


def _has_cardioid(pmap: PlanarMap) -> bool:
    parts = getattr(pmap, "parts", None)
    if parts is not None:
        return any(_has_cardioid(m) for m in parts)
    return pmap.family == "cardioid"


def boundary_samples(source: Source, count: int) -> np.ndarray:
    """Equally spaced points on the source boundary (count per circle / edge)."""
    if source is Source.UNIT_DISC:
        return np.exp(2j * math.pi * np.arange(count) / count)
    a = source.half_width
    t = np.linspace(-a, a, count, endpoint=False)
    return np.concatenate([t + 1j * -a, a + 1j * t, -t + 1j * a, -a + 1j * -t])


def integrate(grid: QuadratureGrid, f: Callable, error_estimate: bool = False):
    """Weighted sum of f over the grid nodes.

    With ``error_estimate=True`` the integral is recomputed one level finer
    and ``(value, |difference|)`` is returned, with the finer value reported.
    """
    coarse = _integrate_values(grid, f)
    if not error_estimate:
        return coarse
    fine = _integrate_values(build_grid(grid.source, grid.level + 1), f)
    return fine, abs(fine - coarse)


def _integrate_values(grid: QuadratureGrid, f: Callable) -> float:
    vals = np.asarray(f(grid.points), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand("integrand not finite on quadrature nodes")
    return float(np.sum(grid.weights * vals))


def _abs_jacobian(pmap: PlanarMap, grid: QuadratureGrid) -> np.ndarray:
    _, wz, wzbar = pmap._jet(grid.points)
    J = np.abs(np.abs(wz) ** 2 - np.abs(wzbar) ** 2)
    if not np.all(np.isfinite(J)):
        raise NonFiniteIntegrand("Jacobian not finite on quadrature nodes")
    return J


@lru_cache(maxsize=16)
def _cached_abs_jacobian(pmap: PlanarMap, level: int, factor: int):
    """(grid, |J| samples) for a map at one level; maps are frozen, so they
    key the cache.  Callers must not mutate the returned array."""
    g = build_grid(pmap.source, level, angular_factor=factor)
    return g, _abs_jacobian(pmap, g)


@lru_cache(maxsize=8)
def _cached_image_jets(pmap: PlanarMap, level: int, factor: int):
    """(grid, image points, |J| samples) used by the Poincare checks."""
    g = build_grid(pmap.source, level, angular_factor=factor)
    w, wz, wzbar = pmap._jet(g.points)
    J = np.abs(np.abs(wz) ** 2 - np.abs(wzbar) ** 2)
    if not np.all(np.isfinite(J)):
        raise NonFiniteIntegrand("Jacobian not finite on quadrature nodes")
    return g, w, J


def _norm_from_samples(absJ: np.ndarray, weights: np.ndarray, beta: float) -> float:
    with np.errstate(divide="ignore"):
        powered = np.where(absJ > 0, absJ, 1.0) ** beta
        powered = np.where(absJ > 0, powered, 0.0)
    total = float(np.sum(weights * powered))
    if not math.isfinite(total):
        raise NonFiniteIntegrand(f"L_{beta} Jacobian integral overflowed")
    return total ** (1.0 / beta)


def _norm_levels(pmap: PlanarMap, beta: float, base_level: int, count: int, factor: int):
    out = []
    for lvl in range(base_level, base_level + count):
        g, J = _cached_abs_jacobian(pmap, lvl, factor)
        out.append(_norm_from_samples(J, g.weights, beta))
    return out


def lbeta_jacobian_norm(pmap: PlanarMap, beta: float, grid: QuadratureGrid) -> float:
    """(integral of |J|^beta over the source)^(1/beta), beta >= 1.

    The value is computed at the grid level and once more one level finer;
    the finer value is returned.  Disagreement beyond 1e-4 relative raises
    ``NotConverged`` carrying both level values.
    """
    if beta < 1:
        raise ValueError("beta must be >= 1")
    factor = 2 if _has_cardioid(pmap) else 1
    coarse, fine = _norm_levels(pmap, beta, grid.level, 2, factor)
    if abs(fine - coarse) > NORM_CONVERGENCE_RTOL * abs(fine):
        raise NotConverged(
            f"L_{beta} Jacobian norm not settled: {coarse!r} vs {fine!r}", coarse, fine
        )
    return fine


def esssup_jacobian(pmap: PlanarMap, grid: QuadratureGrid) -> float:
    """Supremum of |J| over grid nodes, boundary samples, and one refinement.

    Built-in families use their analytic maxima.  Returns ``inf`` when the
    sampled supremum keeps growing under refinement (heuristic: factor 4).
    """
    exact = pmap.analytic_esssup_jacobian()
    if exact is not None:
        return exact
    sups = []
    for lvl in (grid.level, grid.level + 1):
        g = build_grid(grid.source, lvl)
        pts = np.concatenate([g.points, boundary_samples(g.source, 4 * g.angular_nodes)])
        _, wz, wzbar = pmap._jet(pts)
        J = np.abs(np.abs(wz) ** 2 - np.abs(wzbar) ** 2)
        sups.append(float(np.max(J)))
    if sups[1] > SUP_GROWTH_FACTOR * sups[0]:
        return math.inf
    return max(sups)


def inf_jacobian(pmap: PlanarMap, grid: QuadratureGrid) -> float:
    """Infimum of |J| over the same sample set; 0.0 when it keeps shrinking."""
    exact = pmap.analytic_inf_jacobian()
    if exact is not None:
        return exact
    infs = []
    for lvl in (grid.level, grid.level + 1):
        g = build_grid(grid.source, lvl)
        pts = np.concatenate([g.points, boundary_samples(g.source, 4 * g.angular_nodes)])
        _, wz, wzbar = pmap._jet(pts)
        J = np.abs(np.abs(wz) ** 2 - np.abs(wzbar) ** 2)
        infs.append(float(np.min(J)))
    if infs[1] < infs[0] / SUP_GROWTH_FACTOR:
        return 0.0
    return min(infs)


@dataclass(frozen=True)
class BetaProbe:
    beta: float
    norm: float
    converged: bool


@dataclass(frozen=True)
class RegularityReport:
    """Integrability survey of a map's Jacobian over its source domain."""

    K: float
    beta_probes: tuple[BetaProbe, ...]
    esssup: float
    image_area: float
    astala_limit: float  # K/(K-1) local-integrability threshold, advisory

    def probe(self, beta: float) -> Optional[BetaProbe]:
        for p in self.beta_probes:
            if p.beta == beta:
                return p
        return None


def regularity_scan(pmap: PlanarMap, beta_list, grid: QuadratureGrid) -> RegularityReport:
    """Probe each beta for convergence of the L_beta Jacobian norm.

    A probe diverges when the last two of four refinement levels still differ
    by more than 1e-2 relative -- quadrature cannot prove divergence, so this
    is a documented heuristic.  ``math.inf`` entries in ``beta_list`` probe
    the essential supremum instead.
    """
    if not beta_list:
        raise ValueError("beta_list must be nonempty")
    if any(b < 1 for b in beta_list):
        raise ValueError("every beta must be >= 1")
    K = distortion_global(pmap, grid)
    factor = 2 if _has_cardioid(pmap) else 1
    levels = [build_grid(pmap.source, lvl, angular_factor=factor)
              for lvl in range(grid.level, grid.level + SCAN_REFINEMENTS + 1)]
    samples = [(_abs_jacobian(pmap, g), g.weights) for g in levels]

    sup = esssup_jacobian(pmap, grid)
    probes = []
    for beta in beta_list:
        if math.isinf(beta):
            probes.append(BetaProbe(math.inf, sup, math.isfinite(sup)))
            continue
        try:
            norms = [_norm_from_samples(J, w, beta) for J, w in samples]
        except NonFiniteIntegrand:
            probes.append(BetaProbe(beta, math.inf, False))
            continue
        converged = abs(norms[-1] - norms[-2]) <= SCAN_DIVERGENCE_RTOL * abs(norms[-1])
        probes.append(BetaProbe(beta, norms[-1], converged))

    area = _norm_from_samples(*samples[-1], beta=1.0)
    return RegularityReport(
        K=K,
        beta_probes=tuple(probes),
        esssup=sup,
        image_area=area,
        astala_limit=K / (K - 1.0) if K > 1.0 else math.inf,
    )


@dataclass(frozen=True)
class ProbeFunction:
    """Scalar function on the image plane with an optional analytic gradient.

    ``value`` maps complex arrays (u + iv) to real arrays.  ``gradient``
    returns df/du + i df/dv; when absent, central differences with step 1e-6
    are used.
    """

    value: Callable
    gradient: Optional[Callable] = None
    name: str = ""

    def grad(self, w):
        if self.gradient is not None:
            return np.asarray(self.gradient(w), dtype=complex)
        h = 1e-6
        fu = (self.value(w + h) - self.value(w - h)) / (2 * h)
        fv = (self.value(w + 1j * h) - self.value(w - 1j * h)) / (2 * h)
        return fu + 1j * fv


def monomials(max_degree: int) -> list[ProbeFunction]:
    """u^a v^b with analytic gradients, 1 <= a + b <= max_degree."""
    out = []
    for total in range(1, max_degree + 1):
        for a in range(total + 1):
            b = total - a

            def val(w, a=a, b=b):
                return w.real**a * w.imag**b

            def grad(w, a=a, b=b):
                u, v = w.real, w.imag
                fu = a * u ** (a - 1) * v**b if a else np.zeros_like(u)
                fv = b * u**a * v ** (b - 1) if b else np.zeros_like(u)
                return fu + 1j * fv

            out.append(ProbeFunction(val, grad, name=f"u^{a} v^{b}"))
    return out


def _minimize_shift(values: np.ndarray, weights: np.ndarray, exponent: float):
    """min_c sum(w |values - c|^exponent) via the weighted mean (exponent 2)
    or ternary search on the convex objective, bracket [min, max], tol 1e-10."""
    if exponent == 2.0:
        c = float(np.sum(weights * values) / np.sum(weights))
        return c, float(np.sum(weights * (values - c) ** 2))

    def obj(c):
        return float(np.sum(weights * np.abs(values - c) ** exponent))

    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo < 1e-15:
        return lo, 0.0
    while hi - lo > 1e-10 * max(1.0, abs(hi), abs(lo)):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if obj(m1) <= obj(m2):
            hi = m2
        else:
            lo = m1
    c = 0.5 * (lo + hi)
    return c, obj(c)


class PoincareCheck(tuple):
    """(lhs, rhs, ratio) of one empirical Poincare-inequality evaluation."""

    __slots__ = ()

    def __new__(cls, lhs, rhs, ratio):
        return super().__new__(cls, (lhs, rhs, ratio))

    @property
    def lhs(self):
        return self[0]

    @property
    def rhs(self):
        return self[1]

    @property
    def ratio(self):
        return self[2]


def _as_test_function(f) -> ProbeFunction:
    return f if isinstance(f, ProbeFunction) else ProbeFunction(f)


def _gradient_integral(pmap: PlanarMap, tf: ProbeFunction, grid: QuadratureGrid):
    """integral over the image of |grad f|^2, pulled back as |grad f(phi)|^2 J."""
    g, w_img, absJ = _cached_image_jets(pmap, grid.level + 1, 2 if _has_cardioid(pmap) else 1)
    gradsq = np.abs(tf.grad(w_img)) ** 2
    val = float(np.sum(g.weights * gradsq * absJ))
    return val, w_img, g.weights, absJ


def check_poincare_weighted(pmap: PlanarMap, f, r: float, grid: QuadratureGrid) -> PoincareCheck:
    """Empirical check of the Jacobian-weighted Poincare inequality.

    lhs: inf_c (integral over the image of |f - c|^r against the inverse-map
    Jacobian weight)^(1/r), which by change of variables equals the plain
    source integral of |f(phi) - c|^r.  rhs: sqrt(K) * B_{r,2}(disc) times
    the L_2 norm of grad f on the image.  The ratio must be <= 1.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if pmap.source is not Source.UNIT_DISC:
        raise ValueError("the weighted Poincare check is formulated for disc-source maps")
    tf = _as_test_function(f)
    grad_int, w_img, weights, _ = _gradient_integral(pmap, tf, grid)
    vals = np.asarray(tf.value(w_img), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand("test function not finite on nodes")
    _, best = _minimize_shift(vals, weights, r)
    lhs = best ** (1.0 / r)
    K = distortion_global(pmap, grid)
    rhs = math.sqrt(K) * poincare_disc_upper(r).value * math.sqrt(grad_int)
    ratio = 0.0 if lhs == 0 else (math.inf if rhs == 0 else lhs / rhs)
    return PoincareCheck(lhs, rhs, ratio)


def check_poincare_unweighted(
    pmap: PlanarMap, f, s: float, grid: QuadratureGrid, beta_max: float = 64.0
) -> PoincareCheck:
    """Empirical check of the unweighted Poincare--Sobolev inequality.

    lhs: inf_c (source integral of |f(phi) - c|^s J)^(1/s).  rhs combines
    sqrt(K), the disc constant at r = beta*s/(beta-1), and the L_beta
    Jacobian norm^(1/s), minimized over admissible beta.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if pmap.source is not Source.UNIT_DISC:
        raise ValueError("the unweighted Poincare check is formulated for disc-source maps")
    tf = _as_test_function(f)
    grad_int, w_img, weights, absJ = _gradient_integral(pmap, tf, grid)
    vals = np.asarray(tf.value(w_img), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand("test function not finite on nodes")
    _, best = _minimize_shift(vals, weights * absJ, s)
    lhs = best ** (1.0 / s)

    K = distortion_global(pmap, grid)
    best_c = _best_unweighted_constant(pmap, s, grid.level, beta_max)
    if best_c is None:
        raise NoAdmissibleBeta("no beta produced a convergent Jacobian norm")
    rhs = math.sqrt(K) * best_c[1] * math.sqrt(grad_int)
    ratio = 0.0 if lhs == 0 else (math.inf if rhs == 0 else lhs / rhs)
    return PoincareCheck(lhs, rhs, ratio)


@lru_cache(maxsize=64)
def _best_unweighted_constant(pmap: PlanarMap, s: float, level: int, beta_max: float):
    """Minimize B_{beta s/(beta-1),2} * norm_beta^(1/s) over admissible beta."""
    factor = 2 if _has_cardioid(pmap) else 1
    coarse_g, coarseJ = _cached_abs_jacobian(pmap, level, factor)
    fine_g, fineJ = _cached_abs_jacobian(pmap, level + 1, factor)

    def constant(beta):
        fine = _norm_from_samples(fineJ, fine_g.weights, beta)
        coarse = _norm_from_samples(coarseJ, coarse_g.weights, beta)
        if abs(fine - coarse) > SCAN_DIVERGENCE_RTOL * abs(fine):
            return None
        return poincare_disc_upper(beta * s / (beta - 1.0)).value * fine ** (1.0 / s)

    return _minimize_over_beta(constant, beta_max)


def _minimize_over_beta(objective: Callable, beta_max: float, coarse_points: int = 64):
    """Coarse log-spaced scan over (1, beta_max] then golden-section refinement.

    ``objective`` may return None for inadmissible beta.  Returns
    (beta, value) or None when nothing is admissible.
    """
    betas = 1.0 + np.logspace(math.log10(1e-3), math.log10(beta_max - 1.0), coarse_points)
    pairs = [(b, objective(b)) for b in betas]
    pairs = [(b, v) for b, v in pairs if v is not None and math.isfinite(v)]
    if not pairs:
        return None
    idx = min(range(len(pairs)), key=lambda i: pairs[i][1])
    lo = pairs[idx - 1][0] if idx > 0 else 1.0 + 1e-3
    hi = pairs[idx + 1][0] if idx + 1 < len(pairs) else beta_max
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = objective(c), objective(d)
    best = min([p for p in [pairs[idx], (c, fc), (d, fd)] if p[1] is not None],
               key=lambda p: p[1])
    while b - a > 1e-6:
        if fc is None or (fd is not None and fd < fc):
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = objective(d)
            if fd is not None and fd < best[1]:
                best = (d, fd)
        else:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = objective(c)
            if fc is not None and fc < best[1]:
                best = (c, fc)
    return best
