import math

import numpy as np
import pytest

from vemspaces import geom, integrate, meshes, poly


def quad_oracle_polygon(face, f, degree):
    """Independent polygon integral: fan triangulation + tensor Gauss."""
    pts, w = integrate.polygon_rule(face, degree)
    return float(w @ f(pts))


def test_edge_moments_simple():
    tab = integrate.edge_moments([0.0, 0.0], [1.0, 0.0], 0)
    assert tab.values[0] == pytest.approx(1.0)
    # odd centered members integrate to zero by symmetry
    vals = integrate.edge_basis_moments(1.0, 3)
    assert vals[1] == 0.0 and vals[3] == 0.0
    assert vals[2] == pytest.approx(1.0 / 12.0)
    # plain coordinates: int_0^1 x^2 dx = 1/3
    tab = integrate.edge_moments([0.0, 0.0], [1.0, 0.0], 2, center=-0.5, scale=1.0)
    assert tab.values[2] == pytest.approx(1.0 / 3.0)


def test_polygon_moments_unit_square():
    mesh = meshes.bundled_mesh("square")
    ctx = integrate.polygon_context(mesh, 0)
    tab = ctx.moment_table(2)
    # the constant member integrates to the measure
    assert tab.values[0] == pytest.approx(1.0)
    # centered odd moments vanish
    e = tab.basis.exponents
    assert tab.values[e.index((1, 0))] == pytest.approx(0.0, abs=1e-15)
    assert tab.values[e.index((1, 1))] == pytest.approx(0.0, abs=1e-15)
    # int xy over the unit square, via the quadrature oracle and closed form
    val = quad_oracle_polygon(mesh.faces[0], lambda p: p[:, 0] * p[:, 1], 2)
    assert val == pytest.approx(0.25)


def test_pentagon_moments_closed_form_area():
    mesh = meshes.bundled_mesh("pentagon")
    ctx = integrate.polygon_context(mesh, 0)
    assert ctx.moments(0)[0] == pytest.approx(2.5 * math.sin(2 * math.pi / 5))


def test_cell_moments_unit_cube():
    mesh = meshes.bundled_mesh("cube")
    ctx = integrate.cell_context(mesh, 0)
    tab = ctx.moment_table(2)
    assert tab.values[0] == pytest.approx(1.0)
    e = tab.basis.exponents
    # second centered moment of the cube: int ((x-1/2)/sqrt(3))^2 = (1/12)/3
    assert tab.values[e.index((2, 0, 0))] == pytest.approx(1.0 / 36.0)


def test_moment_routes_agree_high_degree():
    # the context itself raises if boundary reduction and subdivision differ
    for name, maker in (("pentagon", integrate.polygon_context),
                        ("voronoi5", integrate.polygon_context)):
        mesh = meshes.bundled_mesh(name)
        maker(mesh, 0).moments(6)
    for name in ("cube", "prism"):
        mesh = meshes.bundled_mesh(name)
        integrate.cell_context(mesh, 0).moments(6)


def test_gram_simple():
    mesh = meshes.bundled_mesh("square")
    ctx = integrate.polygon_context(mesh, 0)
    g0 = ctx.mass(0)
    assert g0.shape == (1, 1)
    assert g0[0, 0] == pytest.approx(1.0)
    g1 = ctx.mass(1)
    # centered basis: the x and y members are orthogonal to each other
    assert g1[1, 2] == pytest.approx(0.0, abs=1e-15)
    # positive definite
    np.linalg.cholesky(g1)


def test_gram_positive_definite_everywhere():
    for name in ("pentagon", "voronoi5"):
        mesh = meshes.bundled_mesh(name)
        for i in range(mesh.n_elements):
            np.linalg.cholesky(integrate.polygon_context(mesh, i).mass(3))
    mesh = meshes.bundled_mesh("prism")
    np.linalg.cholesky(integrate.cell_context(mesh, 0).mass(3))


def _dims_2d(k):
    return {
        "G": poly.dim_poly(k + 1, 2) - 1,
        "R": poly.dim_poly(k + 1, 2) - 1,
        "Gperp": poly.dim_poly(k - 1, 2),
        "Rperp": poly.dim_poly(k - 1, 2),
    }


def _dims_3d(k):
    return {
        "G": poly.dim_poly(k + 1, 3) - 1,
        "Gperp": 3 * poly.dim_poly(k, 3) - poly.dim_poly(k + 1, 3) + 1,
        "R": 3 * poly.dim_poly(k + 1, 3) - poly.dim_poly(k + 2, 3) + 1,
        "Rperp": poly.dim_poly(k - 1, 3),
    }


@pytest.mark.parametrize("name", ["square", "pentagon"])
def test_subspace_dimensions_2d(name):
    mesh = meshes.bundled_mesh(name)
    ctx = integrate.polygon_context(mesh, 0)
    for k in range(0, 5):
        want = _dims_2d(k)
        for kind, expected in want.items():
            assert ctx.subspace(kind, k).n_cols == expected
        # direct sum spans the whole vector polynomial space
        both = np.hstack([ctx.subspace("G", k).cols, ctx.subspace("Gperp", k).cols])
        assert poly.numeric_rank(both) == 2 * poly.dim_poly(k, 2)


@pytest.mark.parametrize("name", ["cube", "prism"])
def test_subspace_dimensions_3d(name):
    mesh = meshes.bundled_mesh(name)
    ctx = integrate.cell_context(mesh, 0)
    for k in range(0, 5):
        want = _dims_3d(k)
        for kind, expected in want.items():
            assert ctx.subspace(kind, k).n_cols == expected
    # spot checks quoted against the closed forms
    assert integrate.cell_context(mesh, 0).subspace("Gperp", 1).n_cols == 3
    assert integrate.cell_context(mesh, 0).subspace("R", 2).n_cols == 26
    assert integrate.cell_context(mesh, 0).subspace("Rperp", 2).n_cols == 4


def test_r0_is_constants_2d():
    mesh = meshes.bundled_mesh("square")
    ctx = integrate.polygon_context(mesh, 0)
    r0 = ctx.subspace("R", 0)
    assert r0.n_cols == 2
    assert ctx.subspace("Rperp", 0).n_cols == 0
    # columns span the constant vector fields
    assert poly.numeric_rank(r0.cols) == 2


@pytest.mark.parametrize(
    "name,maker",
    [("square", integrate.polygon_context), ("pentagon", integrate.polygon_context),
     ("cube", integrate.cell_context), ("prism", integrate.cell_context)],
)
def test_orthogonality_of_complements(name, maker):
    mesh = meshes.bundled_mesh(name)
    ctx = maker(mesh, 0)
    for k in range(0, 4):
        m = ctx.vector_mass(k)
        for fam in ("G", "R"):
            a = ctx.subspace(fam, k)
            b = ctx.subspace(fam + "perp", k)
            if a.n_cols and b.n_cols:
                cross = a.cols.T @ m @ b.cols
                scale = np.linalg.norm(a.cols.T @ m @ a.cols)
                assert np.max(np.abs(cross)) < 1e-10 * scale


@pytest.mark.parametrize(
    "name,maker",
    [("pentagon", integrate.polygon_context), ("cube", integrate.cell_context)],
)
def test_div_injective_on_rperp(name, maker):
    mesh = meshes.bundled_mesh(name)
    ctx = maker(mesh, 0)
    for k in range(1, 4):
        rperp = ctx.subspace("Rperp", k)
        dv = poly.diff_matrix("div", ctx.basis(k))
        image = dv.matrix @ rperp.cols
        assert poly.numeric_rank(image) == rperp.n_cols


def test_rort_dimension_cube():
    mesh = meshes.bundled_mesh("cube")
    ctx = integrate.cell_context(mesh, 0)
    assert ctx.rort(2).n_cols == 26 - 3 == 23
    # orthogonality against the lower rotation family
    low = integrate._embed_vector_cols(ctx.subspace("R", 0).cols, 3, 0, 2)
    pair = low.T @ ctx.vector_mass(2) @ ctx.rort(2).cols
    scale = np.linalg.norm(low.T @ ctx.vector_mass(2) @ low)
    assert np.max(np.abs(pair)) < 1e-10 * scale


def test_vector_pairing_matches_quadrature():
    rng = np.random.default_rng(21)
    mesh = meshes.bundled_mesh("pentagon")
    ctx = integrate.polygon_context(mesh, 0)
    k = 2
    basis = ctx.basis(3)
    p = poly.PolyCoeffs(basis, 2, rng.normal(size=2 * len(basis)))
    cols = ctx.subspace("Gperp", k).cols
    got = ctx.vector_pairing(p, cols, k)
    kb = ctx.basis(k)
    pts, w = integrate.polygon_rule(mesh.faces[0], 5)
    pv = p.eval(pts)
    for j in range(cols.shape[1]):
        q = poly.PolyCoeffs(kb, 2, cols[:, j]).eval(pts)
        ref = w @ (pv[:, 0] * q[:, 0] + pv[:, 1] * q[:, 1])
        assert got[j] == pytest.approx(ref, abs=1e-12)
