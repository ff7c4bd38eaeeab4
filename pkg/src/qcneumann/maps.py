"""Planar homeomorphisms with closed-form Wirtinger derivatives.

Maps act on a source domain -- the unit disc or the centered square of side
sqrt(2) -- and carry their first derivatives in Wirtinger form,

    w_z = (dw/dx - i dw/dy) / 2,     w_zbar = (dw/dx + i dw/dy) / 2,

so the Jacobian is |w_z|^2 - |w_zbar|^2 and the pointwise distortion of an
orientation-preserving map is (|w_z| + |w_zbar|) / (|w_z| - |w_zbar|).

The built-in families have analytic jets; arbitrary callables fall back to
central finite differences.  All evaluators accept complex scalars or numpy
arrays of complex values and are pure, so they can be called concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateJacobian, DerivativeSingularity, PointOutsideSource

CONTAINMENT_TOL = 1e-12
FD_STEP_FACTOR = 1e-6
EQUAL_MODULUS_RTOL = 1e-12


class Source(Enum):
    """Source domain of a planar map."""

    UNIT_DISC = "disc"
    CENTERED_SQUARE = "square"

    @property
    def area(self) -> float:
        return math.pi if self is Source.UNIT_DISC else 2.0

    @property
    def half_width(self) -> float:
        """Half side length of the centered square (its corners lie at |z| = 1)."""
        return math.sqrt(2.0) / 2.0

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self is Source.UNIT_DISC:
            return np.abs(z) <= 1.0 + CONTAINMENT_TOL
        a = self.half_width + CONTAINMENT_TOL
        return (np.abs(z.real) <= a) & (np.abs(z.imag) <= a)


@dataclass(frozen=True)
class Jet:
    """Value and first Wirtinger derivatives of a map at a point or array."""

    w: complex
    wz: complex
    wzbar: complex
    derivation: str = "analytic"  # "analytic" or "finite-difference"
    fd_step: Optional[float] = None

    @property
    def jacobian(self):
        return np.abs(self.wz) ** 2 - np.abs(self.wzbar) ** 2

    @property
    def opnorm(self):
        """Operator norm |D(phi)| = |w_z| + |w_zbar| of the derivative."""
        return np.abs(self.wz) + np.abs(self.wzbar)


@dataclass(frozen=True)
class DistortionSample:
    z: complex
    K_point: float
    opnorm: float
    J: float


def _angular_square(z, power):
    """|z|^power * z^2 with the removable singularity at z = 0 patched.

    Valid for power > -2 (the modulus of the product is |z|^(power+2)).
    """
    r = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r > 0, r**power * z * z, 0.0 + 0.0j)
    return out


class PlanarMap:
    """Base class.  Subclasses implement ``_value`` and ``_jet`` on arrays."""

    source: Source
    family: str = ""

    def value(self, z):
        za = np.asarray(z, dtype=complex)
        w = self._value(za)
        return w if isinstance(z, np.ndarray) else complex(w)

    def jet(self, z) -> Jet:
        za = np.asarray(z, dtype=complex)
        w, wz, wzbar = self._jet(za)
        if not isinstance(z, np.ndarray):
            w, wz, wzbar = complex(w), complex(wz), complex(wzbar)
        return Jet(w, wz, wzbar, derivation=self._derivation(), fd_step=self._fd_step(za))

    def _value(self, z):
        raise NotImplementedError

    def _jet(self, z):
        raise NotImplementedError

    def _derivation(self) -> str:
        return "analytic"

    def _fd_step(self, z) -> Optional[float]:
        return None

    # Analytic shortcuts.  ``None`` means "not available, sample a grid".
    def analytic_distortion(self) -> Optional[tuple[float, bool]]:
        """(K, exact) for the global distortion, or None.

        ``exact=False`` marks an upper bound (used for compositions, where
        only the product of member constants is available).
        """
        return None

    def analytic_esssup_jacobian(self) -> Optional[float]:
        return None

    def analytic_inf_jacobian(self) -> Optional[float]:
        """Infimum of the Jacobian over the closed source domain, or None."""
        return None


@dataclass(frozen=True)
class Identity(PlanarMap):
    source: Source = Source.UNIT_DISC
    family = "identity"

    def _value(self, z):
        return z

    def _jet(self, z):
        one = np.ones_like(z)
        return z, one, np.zeros_like(z)

    def analytic_distortion(self):
        return 1.0, True

    def analytic_esssup_jacobian(self):
        return 1.0

    def analytic_inf_jacobian(self):
        return 1.0


@dataclass(frozen=True)
class RadialPower(PlanarMap):
    """w = |z|^k z with k >= 0.

    Maps the unit disc onto itself and the centered square onto a star-shaped
    region with inner vertices at distance (sqrt(2)/2)^(k+1).  The distortion
    is k + 1 and the Jacobian is (k + 1) |z|^(2k).
    """

    k: float
    source: Source = Source.UNIT_DISC
    family = "radial-power"

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("radial power requires k >= 0")

    def _value(self, z):
        return np.abs(z) ** self.k * z

    def _jet(self, z):
        k = self.k
        rk = np.abs(z) ** k
        w = rk * z
        wz = (0.5 * k + 1.0) * rk
        if k == 0:
            wzbar = np.zeros_like(z)
        else:
            wzbar = 0.5 * k * _angular_square(z, k - 2.0)
        return w, wz + 0.0j, wzbar

    def analytic_distortion(self):
        return self.k + 1.0, True

    def analytic_esssup_jacobian(self):
        # max |z| = 1 on both closed source domains (square corners included)
        return self.k + 1.0

    def analytic_inf_jacobian(self):
        return 1.0 if self.k == 0 else 0.0


@dataclass(frozen=True)
class CardioidPower(PlanarMap):
    """w = (|z|^(k-1) z + 1)^2 with k >= 1, disc source only.

    Maps the unit disc onto the interior of a cardioid (independently of k).
    The distortion equals k; the Jacobian 4k |z|^(2k-2) |(|z|^(k-1) z + 1)|^2
    vanishes at the cusp preimage z = -1, with supremum 16k attained at z = 1.
    """

    k: float
    source: Source = Source.UNIT_DISC
    family = "cardioid"

    def __post_init__(self):
        if self.k < 1:
            raise DerivativeSingularity("cardioid power requires k >= 1")
        if self.source is not Source.UNIT_DISC:
            raise ValueError("cardioid power is defined on the unit disc only")

    def _inner(self, z):
        return np.abs(z) ** (self.k - 1.0) * z + 1.0

    def _value(self, z):
        return self._inner(z) ** 2

    def _jet(self, z):
        k = self.k
        u = self._inner(z)
        wz = (k + 1.0) * np.abs(z) ** (k - 1.0) * u
        if k == 1:
            wzbar = np.zeros_like(z)
        else:
            wzbar = (k - 1.0) * _angular_square(z, k - 3.0) * u
        return u * u, wz, wzbar

    def analytic_distortion(self):
        return float(self.k), True

    def analytic_esssup_jacobian(self):
        return 16.0 * self.k

    def analytic_inf_jacobian(self):
        return 0.0


@dataclass(frozen=True)
class Moebius(PlanarMap):
    """Disc automorphism e^(i theta) (z - a) / (1 - conj(a) z), |a| < 1."""

    a: complex
    theta: float = 0.0
    source: Source = Source.UNIT_DISC
    family = "moebius"

    def __post_init__(self):
        if abs(self.a) >= 1:
            raise ValueError("moebius parameter requires |a| < 1")

    def _value(self, z):
        return np.exp(1j * self.theta) * (z - self.a) / (1.0 - np.conj(self.a) * z)

    def _jet(self, z):
        denom = 1.0 - np.conj(self.a) * z
        wz = np.exp(1j * self.theta) * (1.0 - abs(self.a) ** 2) / (denom * denom)
        return self._value(z), wz, np.zeros_like(z)

    def analytic_distortion(self):
        return 1.0, True

    def analytic_esssup_jacobian(self):
        return ((1.0 + abs(self.a)) / (1.0 - abs(self.a))) ** 2

    def analytic_inf_jacobian(self):
        return ((1.0 - abs(self.a)) / (1.0 + abs(self.a))) ** 2


@dataclass(frozen=True)
class Composition(PlanarMap):
    """Right-to-left composition: parts[0] is applied last."""

    parts: tuple[PlanarMap, ...]
    family = "composition"

    def __post_init__(self):
        if not self.parts:
            raise ValueError("composition needs at least one map")

    @property
    def source(self) -> Source:
        return self.parts[-1].source

    def _value(self, z):
        w = z
        for m in reversed(self.parts):
            w = m._value(w)
        return w

    def _jet(self, z):
        # chain rule for Wirtinger derivatives:
        #   (f o g)_z    = f_w g_z    + f_wbar conj(g_zbar)
        #   (f o g)_zbar = f_w g_zbar + f_wbar conj(g_z)
        w = z
        gz = np.ones_like(z)
        gzbar = np.zeros_like(z)
        for m in reversed(self.parts):
            w, fz, fzbar = m._jet(w)
            gz, gzbar = fz * gz + fzbar * np.conj(gzbar), fz * gzbar + fzbar * np.conj(gz)
        return w, gz, gzbar

    def _derivation(self):
        kinds = {m._derivation() for m in self.parts}
        return "analytic" if kinds == {"analytic"} else "finite-difference"

    def _fd_step(self, z):
        steps = [m._fd_step(z) for m in self.parts]
        steps = [s for s in steps if s is not None]
        return max(steps) if steps else None

    def analytic_distortion(self):
        # submultiplicativity: the product of member constants bounds the
        # distortion of the composite from above (never claimed exact)
        prod = 1.0
        for m in self.parts:
            info = m.analytic_distortion()
            if info is None:
                return None
            prod *= info[0]
        return prod, False


@dataclass(frozen=True)
class UserSampled(PlanarMap):
    """Map given by a value evaluator only; jets use central differences.

    The callable should accept numpy arrays of complex numbers; a plain
    scalar-only callable is accepted but evaluated pointwise.  Derivatives
    are taken with step 1e-6 * max(1, |z|) on the real and imaginary axes,
    so points should stay at least one step away from the source boundary.
    """

    fn: Callable
    source: Source = Source.UNIT_DISC
    family = "user-sampled"

    def _value(self, z):
        try:
            out = np.asarray(self.fn(z), dtype=complex)
            if out.shape != z.shape:
                raise TypeError
        except TypeError:
            flat = [complex(self.fn(complex(v))) for v in np.atleast_1d(z).ravel()]
            out = np.asarray(flat, dtype=complex).reshape(z.shape)
        return out

    def _jet(self, z):
        h = FD_STEP_FACTOR * np.maximum(1.0, np.abs(z))
        wx = (self._value(z + h) - self._value(z - h)) / (2.0 * h)
        wy = (self._value(z + 1j * h) - self._value(z - 1j * h)) / (2.0 * h)
        return self._value(z), 0.5 * (wx - 1j * wy), 0.5 * (wx + 1j * wy)

    def _derivation(self):
        return "finite-difference"

    def _fd_step(self, z):
        return float(np.max(FD_STEP_FACTOR * np.maximum(1.0, np.abs(z))))


def evaluate(pmap: PlanarMap, z):
    """Evaluate the map; rejects points outside the closed source domain."""
    inside = pmap.source.contains(z)
    if not np.all(inside):
        raise PointOutsideSource(f"point outside closed {pmap.source.value} source")
    return pmap.value(z)


def jet(pmap: PlanarMap, z) -> Jet:
    """Jet of the map at z (analytic where available, else finite differences)."""
    inside = pmap.source.contains(z)
    if not np.all(inside):
        raise PointOutsideSource(f"point outside closed {pmap.source.value} source")
    return pmap.jet(z)


def jacobian(pmap: PlanarMap, z):
    """Jacobian determinant |w_z|^2 - |w_zbar|^2 at z."""
    return jet(pmap, z).jacobian


def kpoint_values(wz, wzbar):
    """Pointwise distortion on arrays; raises on any non-positive Jacobian."""
    s = np.abs(wz) + np.abs(wzbar)
    d = np.abs(wz) - np.abs(wzbar)
    bad = (s == 0) | (d <= 0)
    if np.any(bad):
        raise DegenerateJacobian(f"non-positive Jacobian at {int(np.sum(bad))} point(s)")
    with np.errstate(over="ignore", divide="ignore"):
        k = np.where(d < EQUAL_MODULUS_RTOL * s, np.inf, s / np.where(d > 0, d, 1.0))
    return k


def distortion_pointwise(pmap: PlanarMap, z) -> DistortionSample:
    """Distortion sample at a single point; requires J(z) > 0.

    Returns K_point = inf when |w_z| and |w_zbar| agree to relative
    tolerance (the map is degenerate in the conformal sense there).
    """
    j = jet(pmap, z)
    s = float(np.abs(j.wz) + np.abs(j.wzbar))
    d = float(np.abs(j.wz) - np.abs(j.wzbar))
    J = s * d
    if s == 0.0 or d <= 0.0:
        raise DegenerateJacobian(f"J(z) <= 0 at z = {z}")
    k = math.inf if d < EQUAL_MODULUS_RTOL * s else s / d
    return DistortionSample(z=complex(z), K_point=k, opnorm=s, J=J)


def distortion_global(pmap: PlanarMap, grid) -> float:
    """Supremum of the pointwise distortion, used as the constant K.

    Built-in families short-circuit to their known constants.  Compositions
    of built-ins use the product of member constants (an upper bound).
    Otherwise the supremum is taken over the quadrature nodes, the source
    boundary sampled at 4x angular density, and one dyadic refinement of
    both sets.
    """
    info = pmap.analytic_distortion()
    if info is not None:
        return info[0]

    from .quadrature import boundary_samples, build_grid

    sup = 0.0
    for g in (grid, build_grid(grid.source, grid.level + 1)):
        pts = np.concatenate([g.points, boundary_samples(g.source, 4 * g.angular_nodes)])
        _, wz, wzbar = pmap._jet(pts)
        sup = max(sup, float(np.max(kpoint_values(wz, wzbar))))
    return sup
