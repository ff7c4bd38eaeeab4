"""Independent finite-element oracle for the Neumann spectrum.

Triangulates the source domain (structured concentric-ring mesh for the
disc, crossed-diagonal grid for the square), optionally pushes the mesh
through a planar map, assembles piecewise-linear stiffness and mass forms,
and solves the generalized symmetric eigenproblem

    S v = mu M v

whose weak form is: integral of grad(u).grad(v) = mu * integral of u v for
all test functions v.  Eigenvalues of the conforming discretization approach
the continuous ones from above under refinement (treated as empirical, not
assumed); Richardson extrapolation assuming second order produces the
reported value and its error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DegenerateTriangle,
    FoldedTriangle,
    SolverStagnation,
)
from .maps import PlanarMap, Source

DENSE_DOF_LIMIT = 3000
RESIDUAL_TARGET = 1e-9
RESIDUAL_LIMIT = 1e-8
MAX_SUBSPACE_ITERATIONS = 300
MAX_FOLD_RETRIES = 2
# cusp-preimage grading sector for cardioid-family pushes
CUSP_ANGLE = math.pi
CUSP_HALF_WIDTH = 0.2
RICHARDSON_ORDER_RANGE = (1.5, 2.5)


@dataclass(frozen=True)
class TriMesh:
    """Triangulated planar domain (counter-clockwise triangles)."""

    vertices: np.ndarray  # (n, 2) float
    triangles: np.ndarray  # (m, 3) int
    boundary: np.ndarray  # (n,) bool
    provenance: dict = field(default_factory=dict)

    @property
    def signed_areas(self) -> np.ndarray:
        p1 = self.vertices[self.triangles[:, 0]]
        p2 = self.vertices[self.triangles[:, 1]]
        p3 = self.vertices[self.triangles[:, 2]]
        u, v = p2 - p1, p3 - p1
        return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])

    @property
    def area(self) -> float:
        return float(np.sum(self.signed_areas))

    @property
    def min_angle(self) -> float:
        """Smallest interior angle over the mesh, in degrees."""
        p = self.vertices[self.triangles]
        angles = []
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cosang = np.sum(a * b, axis=1) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            )
            angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
        return float(np.min(angles))

    def edge_counts(self) -> dict:
        counts: dict = {}
        for t in self.triangles:
            for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                key = (min(a, b), max(a, b))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def validate(self) -> None:
        """Check the mesh invariants: positive areas and edge-manifoldness."""
        areas = self.signed_areas
        if not np.all(areas > 0):
            raise FoldedTriangle(f"{int(np.sum(areas <= 0))} non-positive triangle(s)")
        for key, c in self.edge_counts().items():
            if c not in (1, 2):
                raise DegenerateTriangle(f"edge {key} shared by {c} triangles")


@dataclass(frozen=True)
class SpectrumEstimate:
    """Eigenvalues of one or more mesh levels, with extrapolation metadata."""

    eigenvalues: tuple[float, ...]  # ascending, zero mode first
    dof: int
    mesh_level: int
    extrapolated_mu1: float
    error_estimate: float
    residuals: tuple[float, ...]
    per_level: tuple[tuple[int, int, float], ...] = ()  # (level, dof, mu1)
    observed_order: Optional[float] = None
    nonmonotone: bool = False

    @property
    def mu1(self) -> float:
        return self.eigenvalues[1]

    def to_dict(self) -> dict:
        err = "inf" if math.isinf(self.error_estimate) else float(f"{self.error_estimate:.12g}")
        return {
            "eigenvalues": [float(f"{v:.12g}") for v in self.eigenvalues],
            "dof": self.dof,
            "mesh_level": self.mesh_level,
            "extrapolated_mu1": float(f"{self.extrapolated_mu1:.12g}"),
            "error_estimate": err,
            "per_level": [[lvl, dof, float(f"{mu:.12g}")] for lvl, dof, mu in self.per_level],
            "observed_order": None
            if self.observed_order is None
            else float(f"{self.observed_order:.6g}"),
            "nonmonotone": self.nonmonotone,
        }


def rings_for_level(level: int) -> int:
    return 2 ** (level + 2)


def build_source_mesh(source: Source, level: int) -> TriMesh:
    """Structured triangulation of the source domain at a refinement level.

    Disc: central hexagonal patch surrounded by concentric vertex rings
    (ring i holds 6i vertices at radius i/R, R = 2^(level+2)), giving
    exactly 6 R^2 triangles and no high-valence fan.  Square: crossed
    diagonals on an R x R cell grid (right isoceles triangles, min angle 45).
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    R = rings_for_level(level)
    if source is Source.UNIT_DISC:
        verts = [(0.0, 0.0)]
        ring_start = [0, 1]
        for i in range(1, R + 1):
            theta = 2.0 * math.pi * np.arange(6 * i) / (6 * i)
            r = i / R
            verts.extend(zip(r * np.cos(theta), r * np.sin(theta)))
            ring_start.append(len(verts))
        tris = []
        for j in range(6):
            tris.append([0, 1 + j, 1 + (j + 1) % 6])
        for i in range(2, R + 1):
            nin, nout = 6 * (i - 1), 6 * i
            s_in, s_out = ring_start[i - 1], ring_start[i]
            for s in range(6):
                for t in range(i):
                    o0 = s_out + (s * i + t) % nout
                    o1 = s_out + (s * i + t + 1) % nout
                    tris.append([o0, o1, s_in + (s * (i - 1) + t) % nin])
                for t in range(i - 1):
                    i0 = s_in + (s * (i - 1) + t) % nin
                    i1 = s_in + (s * (i - 1) + t + 1) % nin
                    tris.append([i0, s_out + (s * i + t + 1) % nout, i1])
        V = np.asarray(verts, dtype=float)
        boundary = np.zeros(len(V), dtype=bool)
        boundary[ring_start[R]:] = True
        mesh = TriMesh(
            V,
            np.asarray(tris, dtype=np.int64),
            boundary,
            {"source": source.value, "level": level, "rings": R, "map": None, "graded": False},
        )
        return mesh
    a = source.half_width
    xs = np.linspace(-a, a, R + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    corners = np.column_stack([gx.ravel(), gy.ravel()])
    mid = 0.5 * (xs[:-1] + xs[1:])
    cx, cy = np.meshgrid(mid, mid, indexing="ij")
    V = np.vstack([corners, np.column_stack([cx.ravel(), cy.ravel()])])
    nc = R + 1
    off = nc * nc
    tris = []
    for i in range(R):
        for j in range(R):
            c = off + i * R + j
            v00, v10 = i * nc + j, (i + 1) * nc + j
            v01, v11 = i * nc + j + 1, (i + 1) * nc + j + 1
            tris.extend([[v00, v10, c], [v10, v11, c], [v11, v01, c], [v01, v00, c]])
    boundary = np.zeros(len(V), dtype=bool)
    idx = np.arange(off)
    bi, bj = idx // nc, idx % nc
    boundary[:off] = (bi == 0) | (bi == R) | (bj == 0) | (bj == R)
    return TriMesh(
        V,
        np.asarray(tris, dtype=np.int64),
        boundary,
        {"source": source.value, "level": level, "rings": R, "map": None, "graded": False},
    )


def _refine_marked(mesh: TriMesh, marked: np.ndarray, project_circle: bool) -> TriMesh:
    """Conforming red-green refinement of the marked triangles.

    Marked triangles split into four; neighbors with two or more split edges
    are promoted to red until stable; neighbors with exactly one split edge
    are bisected.  New midpoints of boundary edges inherit the boundary flag
    and, for disc meshes, are projected back onto the unit circle.
    """
    T = mesh.triangles
    edge_counts = mesh.edge_counts()
    red = marked.copy()
    while True:
        split_edges = set()
        for ti in np.nonzero(red)[0]:
            t = T[ti]
            for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                split_edges.add((min(a, b), max(a, b)))
        promoted = False
        for ti in np.nonzero(~red)[0]:
            t = T[ti]
            n_split = sum(
                (min(a, b), max(a, b)) in split_edges
                for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))
            )
            if n_split >= 2:
                red[ti] = True
                promoted = True
        if not promoted:
            break

    verts = [tuple(v) for v in mesh.vertices]
    bflags = list(mesh.boundary)
    midpoint_of = {}
    for a, b in sorted(split_edges):
        m = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
        on_boundary = edge_counts[(a, b)] == 1
        if on_boundary and project_circle:
            m = m / np.linalg.norm(m)
        midpoint_of[(a, b)] = len(verts)
        verts.append((m[0], m[1]))
        bflags.append(bool(on_boundary))

    def mid(a, b):
        return midpoint_of[(min(a, b), max(a, b))]

    new_tris = []
    for ti, t in enumerate(T):
        a, b, c = (int(v) for v in t)
        if red[ti]:
            mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
            new_tris.extend([[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]])
            continue
        splits = [
            (x, y) for x, y in ((a, b), (b, c), (c, a))
            if (min(x, y), max(x, y)) in midpoint_of
        ]
        if not splits:
            new_tris.append([a, b, c])
            continue
        x, y = splits[0]  # exactly one split edge (green)
        z = ({a, b, c} - {x, y}).pop()
        m = mid(x, y)
        new_tris.extend([[x, m, z], [m, y, z]])

    prov = dict(mesh.provenance)
    prov["graded"] = True
    return TriMesh(
        np.asarray(verts, dtype=float),
        np.asarray(new_tris, dtype=np.int64),
        np.asarray(bflags, dtype=bool),
        prov,
    )


def _grade_cusp_sector(mesh: TriMesh, pmap: PlanarMap) -> TriMesh:
    """One bisection ring near the cusp preimage z = -1 for cardioid pushes."""
    from .quadrature import _has_cardioid

    if not _has_cardioid(pmap):
        return mesh
    if mesh.provenance.get("source") != Source.UNIT_DISC.value or mesh.provenance.get("graded"):
        return mesh
    R = mesh.provenance.get("rings", rings_for_level(mesh.provenance.get("level", 0)))
    z = mesh.vertices[:, 0] + 1j * mesh.vertices[:, 1]
    # angular distance to the cusp direction, wrapped at +-pi
    dtheta = np.abs((np.angle(z) - CUSP_ANGLE + math.pi) % (2.0 * math.pi) - math.pi)
    near_cusp = (np.abs(z) >= 1.0 - 1.5 / R) & (dtheta <= CUSP_HALF_WIDTH)
    marked = np.any(near_cusp[mesh.triangles], axis=1)
    if not marked.any():
        return mesh
    return _refine_marked(mesh, marked, project_circle=True)


def push_mesh(mesh: TriMesh, pmap: PlanarMap) -> TriMesh:
    """Image mesh under the map (vertex-wise), re-checked for orientation.

    Cardioid-family maps first receive one grading ring near the cusp
    preimage.  Raises ``FoldedTriangle`` when any image triangle inverts
    (the mesh is too coarse for the map's distortion).
    """
    mesh = _grade_cusp_sector(mesh, pmap)
    z = mesh.vertices[:, 0] + 1j * mesh.vertices[:, 1]
    w = pmap.value(z)
    pushed = replace(
        mesh,
        vertices=np.column_stack([w.real, w.imag]),
        provenance={**mesh.provenance, "map": pmap.family},
    )
    areas = pushed.signed_areas
    if not np.all(areas > 0):
        raise FoldedTriangle(
            f"{int(np.sum(areas <= 0))} image triangle(s) inverted; refine the mesh"
        )
    return pushed


def assemble(mesh: TriMesh):
    """P1 stiffness and consistent mass matrices (exact per-triangle integrals).

    The stiffness has zero row sums (constants lie in its kernel) and the
    mass is symmetric positive definite with total mass equal to the mesh
    area.
    """
    T = mesh.triangles
    n = len(mesh.vertices)
    p1, p2, p3 = mesh.vertices[T[:, 0]], mesh.vertices[T[:, 1]], mesh.vertices[T[:, 2]]
    e1, e2, e3 = p3 - p2, p1 - p3, p2 - p1
    area = 0.5 * (e3[:, 0] * (-e2[:, 1]) - e3[:, 1] * (-e2[:, 0]))
    if np.any(area <= 0) or np.any(area <= 1e-14 * np.max(area)):
        raise DegenerateTriangle("triangle with non-positive or vanishing area")
    E = np.stack([e1, e2, e3], axis=1)  # (m, 3, 2) opposite-edge vectors
    S_loc = np.einsum("mid,mjd->mij", E, E) / (4.0 * area)[:, None, None]
    M_loc = (area[:, None, None] / 12.0) * (np.ones((3, 3)) + np.eye(3))
    rows = np.repeat(T, 3, axis=1).ravel()
    cols = np.tile(T, (1, 3)).ravel()
    S = sp.coo_matrix((S_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((M_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return S, M


def _pair_residuals(S, M, w, V) -> np.ndarray:
    R = S @ V - (M @ V) * w[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(M @ V, axis=0)


def _dense_eigs(S, M, count: int):
    w, V = sla.eigh(S.toarray(), M.toarray(), subset_by_index=[0, count - 1])
    return w, V


def _deflated_subspace_eigs(S, M, count: int, start=None):
    """Shifted inverse subspace iteration with the constant mode deflated.

    Solves with the SPD operator S + M (factorized once); the constant
    vector is removed explicitly after every solve rather than shifting it
    away, and Rayleigh--Ritz is performed on the iterated block.  ``start``
    optionally seeds the leading block columns (e.g. with vectors from a
    dense solve that needs residual refinement).
    """
    n = S.shape[0]
    k = count - 1
    q = k + 6
    lu = spla.splu((S + M).tocsc())
    ones = np.ones(n)
    c = ones / math.sqrt(ones @ (M @ ones))
    rng = np.random.default_rng(987654321)
    X = rng.standard_normal((n, q))
    if start is not None:
        X[:, : start.shape[1]] = start
    w = V = None
    for _ in range(MAX_SUBSPACE_ITERATIONS):
        Y = lu.solve(M @ X)
        Y -= np.outer(c, c @ (M @ Y))
        Y, _ = np.linalg.qr(Y)
        Sr = Y.T @ (S @ Y)
        Mr = Y.T @ (M @ Y)
        wr, U = sla.eigh(Sr, Mr)
        X = Y @ U
        w, V = wr[:k], X[:, :k]
        if _pair_residuals(S, M, w, V).max() < RESIDUAL_TARGET:
            break
    mu0 = (c @ (S @ c)) / (c @ (M @ c))
    full_w = np.concatenate([[mu0], w])
    full_V = np.column_stack([c, V])
    return full_w, full_V


def neumann_eigs(stiffness, mass, count: int, mesh_level: int = -1) -> SpectrumEstimate:
    """Smallest ``count`` eigenpairs of S v = mu M v (zero mode included).

    Dense solve up to 3000 unknowns, deflated inverse subspace iteration
    above.  Every returned pair must satisfy a relative residual below 1e-8,
    else ``SolverStagnation`` is raised.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    n = stiffness.shape[0]
    if n <= DENSE_DOF_LIMIT:
        w, V = _dense_eigs(stiffness, mass, count)
        if _pair_residuals(stiffness, mass, w, V).max() > RESIDUAL_TARGET:
            # ill-conditioned mass (sliver triangles): refine the dense
            # vectors with the inverse iteration, which solves directly
            w, V = _deflated_subspace_eigs(stiffness, mass, count, start=V[:, 1:])
    else:
        w, V = _deflated_subspace_eigs(stiffness, mass, count)
    res = _pair_residuals(stiffness, mass, w, V)
    if res.max() > RESIDUAL_LIMIT:
        raise SolverStagnation(
            f"eigen residual {res.max():.3e} above {RESIDUAL_LIMIT:g} at {n} dof"
        )
    w = np.maximum(w, 0.0) if w[0] > -1e-9 else w  # clamp the rounded zero mode
    return SpectrumEstimate(
        eigenvalues=tuple(float(v) for v in w),
        dof=n,
        mesh_level=mesh_level,
        extrapolated_mu1=float(w[1]),
        error_estimate=math.inf,
        residuals=tuple(float(r) for r in res),
    )


def _mesh_for(source: Source, pmap: Optional[PlanarMap], level: int) -> TriMesh:
    last_error = None
    for extra in range(MAX_FOLD_RETRIES + 1):
        mesh = build_source_mesh(source, level + extra)
        if pmap is None:
            return mesh
        try:
            return push_mesh(mesh, pmap)
        except FoldedTriangle as err:
            last_error = err
    raise last_error


def converged_mu1(source: Source, pmap: Optional[PlanarMap], levels: Sequence[int]) -> SpectrumEstimate:
    """Run the pipeline over consecutive mesh levels and extrapolate mu_1.

    Richardson extrapolation assumes second order; when the observed order
    falls outside [1.5, 2.5] the estimate is flagged nonmonotone and the
    finest-level value is reported instead.  The error estimate is the gap
    between the finest level and the extrapolated value.  Folded pushes are
    retried one level finer, at most twice.
    """
    levels = sorted(levels)
    if len(levels) < 2 or any(b - a != 1 for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be at least two consecutive integers")
    per_level = []
    finest = None
    for lvl in levels:
        mesh = _mesh_for(source, pmap, lvl)
        S, M = assemble(mesh)
        finest = neumann_eigs(S, M, count=4, mesh_level=lvl)
        per_level.append((lvl, finest.dof, finest.mu1))
    mus = [mu for _, _, mu in per_level]

    observed_order = None
    nonmonotone = False
    if len(mus) >= 3:
        d1, d2 = mus[-3] - mus[-2], mus[-2] - mus[-1]
        if d1 * d2 > 0:
            observed_order = math.log2(abs(d1) / abs(d2))
        if observed_order is None or not (
            RICHARDSON_ORDER_RANGE[0] <= observed_order <= RICHARDSON_ORDER_RANGE[1]
        ):
            nonmonotone = True
    if nonmonotone:
        extrapolated = mus[-1]
        error = abs(mus[-1] - mus[-2])
    else:
        extrapolated = mus[-1] + (mus[-1] - mus[-2]) / 3.0
        error = abs(mus[-1] - extrapolated)
    return replace(
        finest,
        extrapolated_mu1=float(extrapolated),
        error_estimate=float(error),
        per_level=tuple(per_level),
        observed_order=observed_order,
        nonmonotone=nonmonotone,
    )


def save_mesh(mesh: TriMesh, path) -> None:
    """Plain-text export: header, then "x y flag" lines, then "i j k" lines."""
    with open(path, "w") as fh:
        fh.write(f"VERTICES {len(mesh.vertices)} / TRIANGLES {len(mesh.triangles)}\n")
        for (x, y), flag in zip(mesh.vertices, mesh.boundary):
            fh.write(f"{x:.17g} {y:.17g} {int(flag)}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def load_mesh(path) -> TriMesh:
    with open(path) as fh:
        header = fh.readline().split()
        n, m = int(header[1]), int(header[4])
        verts, flags = [], []
        for _ in range(n):
            x, y, flag = fh.readline().split()
            verts.append((float(x), float(y)))
            flags.append(bool(int(flag)))
        tris = [[int(v) for v in fh.readline().split()] for _ in range(m)]
    return TriMesh(
        np.asarray(verts, dtype=float),
        np.asarray(tris, dtype=np.int64),
        np.asarray(flags, dtype=bool),
        {"source": "file"},
    )
