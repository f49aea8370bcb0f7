import numpy as np
import pytest

from vemspaces import poly


def test_dim_poly_closed_forms():
    assert poly.dim_poly(2, 2) == 6
    assert poly.dim_poly(-1, 3) == 0
    assert poly.dim_poly(3, 3) == 20
    assert poly.dim_poly(0, 1) == 1
    with pytest.raises(ValueError):
        poly.dim_poly(2, 4)


def test_dim_matches_generated_indices():
    for d in (1, 2, 3):
        for k in range(-1, 6):
            assert poly.dim_poly(k, d) == len(poly.multi_indices(d, k))


def test_graded_lex_order():
    assert poly.multi_indices(2, 2) == (
        (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
    )
    assert poly.multi_indices(3, 1) == ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def test_eval_simple_values():
    b1 = poly.unit_basis(1, 2)
    # constant member is 1 everywhere
    assert b1.eval(np.array([[3.7]]))[0, 0] == 1.0
    # ((x - 0)/1)^1 at x = 2
    assert b1.eval(np.array([[2.0]]))[0, 1] == 2.0
    # ((x - 1)/2)^2 at x = 3
    b2 = poly.MonomialBasis(1, 2, (1.0,), 2.0)
    assert b2.eval(np.array([[3.0]]))[0, 2] == 1.0


def test_grad_entry_on_unit_square_basis():
    b = poly.unit_basis(2, 2)
    op = poly.diff_matrix("grad", b)
    # d/dx of x^2 is 2x: source index of (2,0), target index of (1,0) in comp 0
    src = b.exponents.index((2, 0))
    dst = poly.multi_indices(2, 1).index((1, 0))
    assert op.matrix[dst, src] == 2.0
    assert op.dst_ncomp == 2


def test_rot_grad_and_div_curl_vanish():
    b2 = poly.unit_basis(2, 3)
    g = poly.diff_matrix("grad", b2)
    r = poly.diff_matrix("rot", g.dst_basis)
    comp = r.matrix @ g.matrix
    assert np.max(np.abs(comp)) < 1e-14 * max(1.0, np.linalg.norm(g.matrix))

    b3 = poly.unit_basis(3, 3)
    c = poly.diff_matrix("curl", b3)
    dv = poly.diff_matrix("div", c.dst_basis)
    comp = dv.matrix @ c.matrix
    assert np.max(np.abs(comp)) < 1e-14 * max(1.0, np.linalg.norm(c.matrix))


def test_derivatives_against_finite_differences():
    rng = np.random.default_rng(7)
    for d in (1, 2, 3):
        basis = poly.MonomialBasis(d, 3, tuple(rng.normal(size=d)), 1.7)
        coeffs = rng.normal(size=len(basis))
        p = poly.PolyCoeffs(basis, 1, coeffs)
        op = poly.diff_matrix("grad", basis)
        gp = op.apply(p)
        pts = rng.normal(size=(5, d))
        eps = 1e-6
        for i in range(d):
            shift = np.zeros(d)
            shift[i] = eps
            fd = (p.eval(pts + shift) - p.eval(pts - shift)) / (2 * eps)
            assert np.allclose(gp.eval(pts)[:, i], fd[:, 0], atol=1e-5)


def test_laplacian_matches_composition():
    rng = np.random.default_rng(3)
    basis = poly.MonomialBasis(2, 4, (0.2, -0.1), 0.9)
    lap = poly.diff_matrix("laplacian", basis)
    grad = poly.diff_matrix("grad", basis)
    div = poly.diff_matrix("div", grad.dst_basis)
    assert np.allclose(lap.matrix, div.matrix @ grad.matrix)
    coeffs = rng.normal(size=len(basis))
    out = lap.apply(poly.PolyCoeffs(basis, 1, coeffs))
    assert out.basis.degree == 2


def test_sequence_ranks_2d():
    rep = poly.sequence_ranks(3, 2)
    grad = rep.links[0]
    assert grad.rank == poly.dim_poly(3, 2) - 1 == 9
    assert grad.kernel_dim == 1
    assert rep.exact

    # rot maps (P_0)^2 onto the zero space
    rep1 = poly.sequence_ranks(1, 2)
    rot = rep1.links[1]
    assert rot.rank == 0 and rot.dst_dim == 0
    assert rep1.exact


def test_sequence_ranks_3d_curl_kernel():
    rep = poly.sequence_ranks(3, 3)
    curl = rep.links[1]
    # kernel of curl on (P_2)^3 = gradients of P_3 plus constants
    assert curl.kernel_dim == poly.dim_poly(3, 3) - 1 == 19
    assert rep.exact


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("r", [1, 2, 3, 4, 5])
def test_sequence_exactness_all_degrees(d, r):
    assert poly.sequence_ranks(r, d).exact


def test_affine_pullback_rotation():
    rng = np.random.default_rng(11)
    src = poly.MonomialBasis(2, 3, (0.3, 0.4), 2.0)
    theta = 0.7
    amat = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    b = np.array([0.5, -1.0])
    dst = poly.MonomialBasis(2, 3, (-0.2, 0.1), 1.3)
    pb = poly.affine_pullback(src, amat, b, dst)
    coeffs = rng.normal(size=len(src))
    ys = rng.normal(size=(7, 2))
    xs = ys @ amat.T + b
    direct = poly.PolyCoeffs(src, 1, coeffs).eval(xs)[:, 0]
    pulled = poly.PolyCoeffs(dst, 1, pb @ coeffs).eval(ys)[:, 0]
    assert np.allclose(direct, pulled, atol=1e-12)


def test_affine_pullback_to_lower_dimension():
    rng = np.random.default_rng(13)
    src = poly.MonomialBasis(3, 2, (0.1, 0.2, 0.3), 1.5)
    # parametrize a line x = a*t + b
    a = np.array([[0.3], [-0.2], [0.9]])
    b = np.array([1.0, 0.0, -0.5])
    dst = poly.MonomialBasis(1, 2, (0.0,), 2.0)
    pb = poly.affine_pullback(src, a, b, dst)
    coeffs = rng.normal(size=len(src))
    ts = rng.normal(size=(5, 1))
    xs = ts @ a.T + b
    direct = poly.PolyCoeffs(src, 1, coeffs).eval(xs)[:, 0]
    pulled = poly.PolyCoeffs(dst, 1, pb @ coeffs).eval(ts)[:, 0]
    assert np.allclose(direct, pulled, atol=1e-12)


def test_product_coeffs_pointwise():
    rng = np.random.default_rng(5)
    d = 2
    ca = rng.normal(size=poly.dim_poly(2, d))
    cb = rng.normal(size=poly.dim_poly(3, d))
    basis2 = poly.MonomialBasis(d, 2, (0.4, -0.3), 1.1)
    basis3 = basis2.with_degree(3)
    basis5 = basis2.with_degree(5)
    cp = poly.product_coeffs(ca, 2, cb, 3, d)
    pts = rng.normal(size=(6, d))
    va = poly.PolyCoeffs(basis2, 1, ca).eval(pts)[:, 0]
    vb = poly.PolyCoeffs(basis3, 1, cb).eval(pts)[:, 0]
    vp = poly.PolyCoeffs(basis5, 1, cp).eval(pts)[:, 0]
    assert np.allclose(va * vb, vp, atol=1e-12)
