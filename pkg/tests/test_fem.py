import math

import numpy as np
import pytest

from qcneumann import (
    CardioidPower,
    Identity,
    RadialPower,
    Source,
    UserSampled,
    assemble,
    bessel_j1prime_first_zero,
    build_source_mesh,
    converged_mu1,
    load_mesh,
    neumann_eigs,
    push_mesh,
    save_mesh,
)
from qcneumann.errors import FoldedTriangle
from qcneumann.fem import TriMesh, _grade_cusp_sector


def reference_triangle() -> TriMesh:
    return TriMesh(
        vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        triangles=np.array([[0, 1, 2]]),
        boundary=np.array([True, True, True]),
    )


@pytest.mark.parametrize("level", [0, 1, 2])
@pytest.mark.parametrize("source", [Source.UNIT_DISC, Source.CENTERED_SQUARE])
def test_source_mesh_invariants(source, level):
    mesh = build_source_mesh(source, level)
    mesh.validate()
    if source is Source.UNIT_DISC:
        assert len(mesh.triangles) == 6 * 4 ** (level + 2)
    assert np.all(mesh.signed_areas > 0)
    assert mesh.boundary.any() and not mesh.boundary.all()


def test_disc_mesh_area_approaches_pi():
    mesh = build_source_mesh(Source.UNIT_DISC, 2)
    assert mesh.area == pytest.approx(math.pi, rel=1e-3)
    finer = build_source_mesh(Source.UNIT_DISC, 3)
    assert abs(finer.area - math.pi) < abs(mesh.area - math.pi)
    assert mesh.area < math.pi  # inscribed polygon


def test_square_mesh_exact_area_and_angles():
    mesh = build_source_mesh(Source.CENTERED_SQUARE, 0)
    assert mesh.area == pytest.approx(2.0, rel=1e-14)
    assert mesh.min_angle >= 30.0  # structured right triangles give 45
    assert mesh.min_angle == pytest.approx(45.0, abs=1e-9)


def test_reference_triangle_stiffness_exact():
    S, M = assemble(reference_triangle())
    expected = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    assert np.array_equal(S.toarray(), expected)


def test_mass_total_equals_area():
    for source, level in ((Source.UNIT_DISC, 1), (Source.CENTERED_SQUARE, 1)):
        mesh = build_source_mesh(source, level)
        _, M = assemble(mesh)
        assert M.sum() == pytest.approx(mesh.area, rel=1e-12)


def test_stiffness_kernel_contains_constants():
    mesh = build_source_mesh(Source.UNIT_DISC, 1)
    S, _ = assemble(mesh)
    ones = np.ones(S.shape[0])
    assert np.max(np.abs(S @ ones)) < 1e-12


def test_neumann_eigs_square_value():
    mesh = build_source_mesh(Source.CENTERED_SQUARE, 2)
    S, M = assemble(mesh)
    est = neumann_eigs(S, M, 4, mesh_level=2)
    assert est.eigenvalues[0] < 1e-8 * max(1.0, est.mu1)
    assert est.mu1 == pytest.approx(math.pi**2 / 2, rel=5e-3)
    # double eigenvalue on the square
    assert est.eigenvalues[2] == pytest.approx(est.mu1, rel=1e-9)
    assert max(est.residuals) < 1e-8


def test_neumann_eigs_count_validation():
    mesh = build_source_mesh(Source.CENTERED_SQUARE, 0)
    S, M = assemble(mesh)
    with pytest.raises(ValueError):
        neumann_eigs(S, M, 1)


def test_iterative_branch_matches_dense():
    # force a mesh just under / over the dense limit and compare mu1
    from qcneumann.fem import _deflated_subspace_eigs, _dense_eigs, _pair_residuals

    mesh = build_source_mesh(Source.UNIT_DISC, 2)
    S, M = assemble(mesh)
    wd, _ = _dense_eigs(S, M, 4)
    wi, Vi = _deflated_subspace_eigs(S, M, 4)
    assert wi[1] == pytest.approx(wd[1], rel=1e-10)
    assert _pair_residuals(S, M, wi, Vi).max() < 1e-8


def test_push_identity_unchanged():
    mesh = build_source_mesh(Source.UNIT_DISC, 1)
    pushed = push_mesh(mesh, Identity())
    assert np.allclose(pushed.vertices, mesh.vertices, atol=1e-15)


def test_push_cardioid_area():
    mesh = build_source_mesh(Source.UNIT_DISC, 3)
    pushed = push_mesh(mesh, CardioidPower(k=1))
    pushed.validate()
    assert pushed.area == pytest.approx(6 * math.pi, rel=1e-2)


def test_push_radial_star_vertices():
    # the star's inner vertices sit at distance (sqrt(2)/2)^(k+1) on the axes
    k = 3
    mesh = build_source_mesh(Source.CENTERED_SQUARE, 2)
    pushed = push_mesh(mesh, RadialPower(k=k, source=Source.CENTERED_SQUARE))
    pushed.validate()
    eps = (math.sqrt(2) / 2) ** (k + 1)
    r = np.hypot(pushed.vertices[:, 0], pushed.vertices[:, 1])
    on_axis = np.abs(pushed.vertices[:, 1]) < 1e-12
    boundary_axis = mesh.boundary & on_axis
    assert boundary_axis.any()
    assert np.min(r[boundary_axis]) == pytest.approx(eps, rel=1e-12)


def test_push_fold_detected():
    mesh = build_source_mesh(Source.UNIT_DISC, 0)
    folding = UserSampled(fn=lambda z: np.conj(z))  # orientation-reversing
    with pytest.raises(FoldedTriangle):
        push_mesh(mesh, folding)


def test_cusp_grading_adds_conforming_triangles():
    mesh = build_source_mesh(Source.UNIT_DISC, 1)
    graded = _grade_cusp_sector(mesh, CardioidPower(k=2))
    graded.validate()
    assert len(graded.triangles) > len(mesh.triangles)
    assert graded.provenance["graded"]
    # grading is local: only the sector near arg z = pi was touched
    assert len(graded.triangles) < 1.25 * len(mesh.triangles)


def test_converged_mu1_disc_identity():
    est = converged_mu1(Source.UNIT_DISC, Identity(), [2, 3, 4])
    exact = bessel_j1prime_first_zero() ** 2
    assert est.extrapolated_mu1 == pytest.approx(exact, rel=2e-3)
    assert est.observed_order == pytest.approx(2.0, abs=0.4)
    assert not est.nonmonotone
    assert len(est.per_level) == 3
    assert est.eigenvalues[0] < 1e-8 * est.mu1


def test_converged_mu1_square():
    est = converged_mu1(
        Source.CENTERED_SQUARE, Identity(source=Source.CENTERED_SQUARE), [2, 3, 4]
    )
    assert est.extrapolated_mu1 == pytest.approx(math.pi**2 / 2, rel=5e-3)


def test_converged_mu1_cardioid_sandwich_interval():
    est = converged_mu1(Source.UNIT_DISC, CardioidPower(k=1), [2, 3])
    jp2 = bessel_j1prime_first_zero() ** 2
    assert jp2 / 16 <= est.extrapolated_mu1 <= 2.0 / 3.0


def test_converged_mu1_levels_validation():
    with pytest.raises(ValueError):
        converged_mu1(Source.UNIT_DISC, Identity(), [2])
    with pytest.raises(ValueError):
        converged_mu1(Source.UNIT_DISC, Identity(), [2, 4])


def test_eigenvalues_nondecreasing():
    mesh = build_source_mesh(Source.UNIT_DISC, 1)
    S, M = assemble(mesh)
    est = neumann_eigs(S, M, 6)
    assert all(a <= b + 1e-12 for a, b in zip(est.eigenvalues, est.eigenvalues[1:]))


def test_mesh_export_roundtrip(tmp_path):
    mesh = build_source_mesh(Source.UNIT_DISC, 0)
    path = tmp_path / "disc.mesh"
    save_mesh(mesh, path)
    text = path.read_text().splitlines()
    assert text[0] == f"VERTICES {len(mesh.vertices)} / TRIANGLES {len(mesh.triangles)}"
    assert len(text[1].split()) == 3
    back = load_mesh(path)
    assert np.allclose(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.boundary, mesh.boundary)
    back.validate()
