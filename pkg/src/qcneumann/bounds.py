"""Eigenvalue bounds from quasiconformal data, plus comparison baselines.

The central quantity is an upper bound on 1/mu_1 for the image domain of a
distortion-K map of the disc or centered square:

  finite-beta form:   K * B^2 * ||J||_beta         with B the disc constant
                      at target exponent 2*beta/(beta-1) (upper estimate);
  bounded-J form:     K * C^2 * esssup |J|         with C the exact L_2
                      constant of the source (1/j'_{1,1} or sqrt(2)/pi).

The finite-beta bound expands to the closed form

  4K / pi^(1/beta) * ((2 beta - 1)/(beta - 1))^((2 beta - 1)/beta) * ||J||_beta,

and both evaluation paths are always computed and cross-checked here.
Reports serialize to a stable JSON layout (see ``EigenBoundReport.to_dict``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import (
    BetaOutOfRange,
    InfiniteEsssup,
    NoAdmissibleBeta,
    NonFiniteIntegrand,
    NonFiniteNorm,
)
from .maps import PlanarMap, Source, distortion_global
from .poincare import (
    KIND_EXACT_DISC,
    KIND_EXACT_SQUARE,
    PoincareConstant,
    disc_exact_l2,
    poincare_beta_form,
    square_exact_l2,
)
from .quadrature import (
    QuadratureGrid,
    _abs_jacobian,
    _cached_abs_jacobian,
    _has_cardioid,
    _minimize_over_beta,
    _norm_from_samples,
    SCAN_DIVERGENCE_RTOL,
    build_grid,
    esssup_jacobian,
    inf_jacobian,
)

SCHEMA_VERSION = 1

THEOREM_FINITE_BETA = "finite-beta"
THEOREM_ESSSUP_DISC = "esssup-disc"
THEOREM_ESSSUP_SQUARE = "esssup-square"

CROSS_CHECK_RTOL = 1e-12


@dataclass(frozen=True)
class Baselines:
    polya_upper: Optional[float] = None
    payne_weinberger_lower: Optional[float] = None
    competing_constant: Optional[float] = None


@dataclass(frozen=True)
class EigenBoundReport:
    """One bound on the first nontrivial Neumann eigenvalue."""

    theorem: str
    K: float
    beta: float  # math.inf for the esssup branches
    jacobian_norm: float  # L_beta norm, or the esssup
    poincare_constant: PoincareConstant
    inv_mu1_upper: float
    mu1_lower: float
    domain: str = ""
    baselines: Baselines = field(default_factory=Baselines)
    diagnostics: tuple[str, ...] = ()
    consistent: bool = True

    def with_baselines(
        self,
        polya_upper: Optional[float] = None,
        payne_weinberger_lower: Optional[float] = None,
        competing_constant: Optional[float] = None,
    ) -> "EigenBoundReport":
        """Attach baselines; flags the report inconsistent if it beats Polya."""
        notes = list(self.diagnostics)
        consistent = self.consistent
        if polya_upper is not None and self.mu1_lower > polya_upper * (1 + 1e-12):
            consistent = False
            notes.append(
                f"inconsistent: mu1 lower bound {self.mu1_lower:.6g} exceeds "
                f"Polya upper bound {polya_upper:.6g}"
            )
        return replace(
            self,
            baselines=Baselines(polya_upper, payne_weinberger_lower, competing_constant),
            diagnostics=tuple(notes),
            consistent=consistent,
        )

    def to_dict(self) -> dict:
        def num(x):
            if x is None:
                return None
            if math.isinf(x):
                return "inf"
            return float(f"{x:.12g}")

        return {
            "schema_version": SCHEMA_VERSION,
            "domain": self.domain,
            "theorem": self.theorem,
            "K": num(self.K),
            "beta": num(self.beta),
            "norm": num(self.jacobian_norm),
            "constant": num(self.poincare_constant.value),
            "inv_mu1_upper": num(self.inv_mu1_upper),
            "mu1_lower": num(self.mu1_lower),
            "baselines": {
                "polya_upper": num(self.baselines.polya_upper),
                "payne_weinberger_lower": num(self.baselines.payne_weinberger_lower),
                "competing_constant": num(self.baselines.competing_constant),
            },
            "diagnostics": list(self.diagnostics),
            "consistent": self.consistent,
        }


def finite_beta_explicit_form(K: float, beta: float, jacobian_norm: float) -> float:
    """The closed-form bound 4K/pi^(1/beta) * ((2b-1)/(b-1))^((2b-1)/b) * norm."""
    q = (2.0 * beta - 1.0) / (beta - 1.0)
    return 4.0 * K * math.pi ** (-1.0 / beta) * q ** ((2.0 * beta - 1.0) / beta) * jacobian_norm


def finite_beta_eigenvalue_bound(K: float, beta: float, jacobian_norm: float) -> EigenBoundReport:
    """Bound on 1/mu_1 from a finite Jacobian-integrability exponent.

    Computed as K * B^2 * norm with B the source-disc constant at target
    exponent 2*beta/(beta-1); the equivalent closed form is evaluated as a
    checksum and must agree to 1e-12 relative.
    """
    if K < 1:
        raise ValueError("distortion constant must be >= 1")
    if beta <= 1 or math.isinf(beta):
        raise BetaOutOfRange(f"finite-beta bound requires 1 < beta < inf, got {beta}")
    if not math.isfinite(jacobian_norm):
        raise NonFiniteNorm(f"Jacobian norm must be finite, got {jacobian_norm}")
    constant = poincare_beta_form(beta)
    inv = K * constant.value**2 * jacobian_norm
    explicit = finite_beta_explicit_form(K, beta, jacobian_norm)
    if abs(explicit - inv) > CROSS_CHECK_RTOL * abs(inv):
        raise RuntimeError(
            f"internal error: bound forms disagree ({inv!r} vs {explicit!r})"
        )
    return EigenBoundReport(
        theorem=THEOREM_FINITE_BETA,
        K=K,
        beta=beta,
        jacobian_norm=jacobian_norm,
        poincare_constant=constant,
        inv_mu1_upper=inv,
        mu1_lower=1.0 / inv,
        diagnostics=(f"closed-form checksum agrees to {CROSS_CHECK_RTOL:g} relative",),
    )


def bounded_jacobian_eigenvalue_bound(
    K: float, esssup: float, source_constant: PoincareConstant
) -> EigenBoundReport:
    """Bound on 1/mu_1 from a bounded Jacobian: K * constant^2 * esssup.

    ``source_constant`` must be one of the exact L_2 constants (disc or
    centered square).
    """
    if K < 1:
        raise ValueError("distortion constant must be >= 1")
    if source_constant.kind not in (KIND_EXACT_DISC, KIND_EXACT_SQUARE):
        raise ValueError("source constant must be an exact L_2 constant")
    if not math.isfinite(esssup):
        raise InfiniteEsssup("Jacobian supremum is unbounded")
    inv = K * source_constant.value**2 * esssup
    theorem = (
        THEOREM_ESSSUP_DISC if source_constant.kind == KIND_EXACT_DISC else THEOREM_ESSSUP_SQUARE
    )
    return EigenBoundReport(
        theorem=theorem,
        K=K,
        beta=math.inf,
        jacobian_norm=esssup,
        poincare_constant=source_constant,
        inv_mu1_upper=inv,
        mu1_lower=1.0 / inv,
    )


def optimize_beta(pmap: PlanarMap, grid: QuadratureGrid, beta_max: float = 64.0) -> EigenBoundReport:
    """Best available bound: minimize the finite-beta form over beta and
    compare against the bounded-Jacobian branch, returning the smaller
    1/mu_1 bound with both recorded in the diagnostics.

    The finite-beta search runs a coarse log-spaced scan over
    (1, beta_max] followed by golden-section refinement (tolerance 1e-6 in
    beta); Jacobian norms come from cached samples at the grid level and one
    refinement, and a beta whose two levels disagree by more than 1e-2
    relative is treated as inadmissible.
    """
    if beta_max <= 1:
        raise BetaOutOfRange("beta_max must exceed 1")
    K = distortion_global(pmap, grid)
    factor = 2 if _has_cardioid(pmap) else 1
    coarse_g, coarseJ = _cached_abs_jacobian(pmap, grid.level, factor)
    fine_g, fineJ = _cached_abs_jacobian(pmap, grid.level + 1, factor)

    def inv_bound(beta):
        try:
            fine = _norm_from_samples(fineJ, fine_g.weights, beta)
            coarse = _norm_from_samples(coarseJ, coarse_g.weights, beta)
        except NonFiniteIntegrand:
            return None
        if abs(fine - coarse) > SCAN_DIVERGENCE_RTOL * abs(fine):
            return None
        return K * poincare_beta_form(beta).value ** 2 * fine

    finite_best = _minimize_over_beta(inv_bound, beta_max)

    sup = esssup_jacobian(pmap, grid)
    sup_report = None
    if math.isfinite(sup):
        constant = disc_exact_l2() if pmap.source is Source.UNIT_DISC else square_exact_l2()
        sup_report = bounded_jacobian_eigenvalue_bound(K, sup, constant)

    if finite_best is None and sup_report is None:
        raise NoAdmissibleBeta("no finite beta converged and the Jacobian is unbounded")

    notes = []
    if finite_best is not None:
        notes.append(
            f"finite-beta branch: beta = {finite_best[0]:.6g}, 1/mu1 <= {finite_best[1]:.6g}"
        )
    else:
        notes.append("finite-beta branch: no admissible beta")
    if sup_report is not None:
        notes.append(f"bounded-Jacobian branch: 1/mu1 <= {sup_report.inv_mu1_upper:.6g}")
    else:
        notes.append("bounded-Jacobian branch: Jacobian supremum unbounded")
    info = pmap.analytic_distortion()
    if info is None:
        notes.append("distortion K estimated from grid samples (not certified)")
    elif not info[1]:
        notes.append("distortion K is a product upper bound over composition members")

    if sup_report is not None and (finite_best is None or sup_report.inv_mu1_upper <= finite_best[1]):
        return replace(sup_report, diagnostics=sup_report.diagnostics + tuple(notes))
    beta_star, _ = finite_best
    norm_star = _norm_from_samples(fineJ, fine_g.weights, beta_star)
    report = finite_beta_eigenvalue_bound(K, beta_star, norm_star)
    return replace(report, diagnostics=report.diagnostics + tuple(notes))


def polya_upper_bound(area: float) -> float:
    """Upper bound 4*pi/area on mu_1 for plane-covering domains (advisory:
    the plane-covering hypothesis is not verified here)."""
    if area <= 0:
        raise ValueError("area must be positive")
    return 4.0 * math.pi / area


def payne_weinberger_lower_bound(diameter: float) -> float:
    """Lower bound pi^2/d^2 on mu_1; valid for convex domains (caller asserts)."""
    if diameter <= 0:
        raise ValueError("diameter must be positive")
    return math.pi**2 / diameter**2


def competing_star_constant(p: float) -> float:
    """Published competing estimate of the weighted Poincare constant for
    star domains: 14 * C_p * ((8/7) (1/2 + p/(2 C_p)))^(1/p), with
    C_1 = 1/2, C_2 = 1/pi, and C_p = 2 (p/2)^(1/p) otherwise."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        cbar = 0.5
    elif p == 2:
        cbar = 1.0 / math.pi
    else:
        cbar = 2.0 * (0.5 * p) ** (1.0 / p)
    return 14.0 * cbar * ((8.0 / 7.0) * (0.5 + p / (2.0 * cbar))) ** (1.0 / p)


def composition_operator_norm(pmap: PlanarMap, p: float, q: float, grid: QuadratureGrid) -> float:
    """Norm of the gradient-composition operator induced by the map.

    For 1 <= q < p this is the quadrature value of

        (integral over the source of (|D phi|^p / |J|)^(q/(p-q)))^((p-q)/(pq))

    with |D phi| = |w_z| + |w_zbar|.  The case p = q = 2 is special: the
    norm is sqrt(K) and no integral is involved.
    """
    if p == q == 2:
        return math.sqrt(distortion_global(pmap, grid))
    if not 1 <= q < p:
        raise ValueError("requires 1 <= q < p (or p = q = 2)")
    exponent = q / (p - q)
    vals = []
    for lvl in (grid.level, grid.level + 1):
        g = build_grid(pmap.source, lvl, 2 if _has_cardioid(pmap) else 1)
        _, wz, wzbar = pmap._jet(g.points)
        op = np.abs(wz) + np.abs(wzbar)
        J = np.abs(np.abs(wz) ** 2 - np.abs(wzbar) ** 2)
        with np.errstate(divide="ignore", over="ignore"):
            integrand = np.where(J > 0, (op**p) / np.where(J > 0, J, 1.0), np.inf) ** exponent
        integrand = np.where((op == 0) & (J == 0), 0.0, integrand)
        if not np.all(np.isfinite(integrand)):
            raise NonFiniteIntegrand("operator-norm integrand blows up where J vanishes")
        vals.append(float(np.sum(g.weights * integrand)))
    if abs(vals[1] - vals[0]) > SCAN_DIVERGENCE_RTOL * abs(vals[1]):
        raise NonFiniteIntegrand(
            f"operator-norm integral does not settle under refinement "
            f"({vals[0]!r} vs {vals[1]!r})"
        )
    return vals[1] ** ((p - q) / (p * q))


def lebesgue_composition_norm(pmap: PlanarMap, r: float, s: float, grid: QuadratureGrid) -> float:
    """Norm of the composition operator with the inverse map on Lebesgue
    spaces, pulled back to a source integral.

    For s < r the image integral of |J of the inverse|^(r/(r-s)) equals the
    source integral of J^(1 - r/(r-s)), and the norm is its (r-s)/(rs) power.
    For s = r the norm is (inf J)^(-1/s), infinite when J degenerates.
    """
    if not 1 <= s <= r:
        raise ValueError("requires 1 <= s <= r")
    if s == r:
        low = inf_jacobian(pmap, grid)
        if low <= 0:
            return math.inf
        return low ** (-1.0 / s)
    exponent = 1.0 - r / (r - s)
    vals = []
    for lvl in (grid.level, grid.level + 1):
        g = build_grid(pmap.source, lvl, 2 if _has_cardioid(pmap) else 1)
        J = _abs_jacobian(pmap, g)
        with np.errstate(divide="ignore", over="ignore"):
            integrand = np.where(J > 0, np.where(J > 0, J, 1.0) ** exponent, np.inf)
        if not np.all(np.isfinite(integrand)):
            raise NonFiniteIntegrand("Jacobian power not integrable (J vanishes)")
        vals.append(float(np.sum(g.weights * integrand)))
    if abs(vals[1] - vals[0]) > SCAN_DIVERGENCE_RTOL * abs(vals[1]):
        raise NonFiniteIntegrand(
            f"Jacobian-power integral does not settle under refinement "
            f"({vals[0]!r} vs {vals[1]!r})"
        )
    return vals[1] ** ((r - s) / (r * s))
