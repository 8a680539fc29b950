import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monodg.basis import (build_dof_map, eval_basis, local_dim,
                          mode_exponents, project_L2, validate_degrees)
from monodg.geometry import element_geometry, quadrature
from monodg.polymesh import cvt_mesh, unit_square_mesh


def test_local_dim_values():
    assert local_dim(2) == 6       # six local unknowns at degree 2 in 2D
    assert local_dim(1) == 3
    assert local_dim(5) == 21
    assert 1500 * local_dim(5) == 31500
    with pytest.raises(ValueError):
        local_dim(-1)


def test_dof_map_examples():
    dm = build_dof_map([1, 3, 2])
    assert dm.sizes.tolist() == [3, 10, 6]
    assert dm.offsets.tolist() == [0, 3, 13]
    assert dm.total == 19
    assert build_dof_map(np.ones(1500, dtype=int)).total == 4500
    assert build_dof_map(np.full(1500, 5)).total == 31500


def test_dof_map_offsets_strictly_increasing():
    dm = build_dof_map([2, 1, 4, 1, 3])
    assert (np.diff(dm.offsets) > 0).all()
    assert dm.total == dm.sizes.sum()


def test_degree_validation():
    with pytest.raises(ValueError):
        validate_degrees([0, 1], p_max=3)
    with pytest.raises(ValueError):
        validate_degrees([1, 4], p_max=3)


def test_mode_order_graded():
    modes = mode_exponents(3)
    degrees = modes.sum(axis=1)
    assert (np.diff(degrees) >= 0).all()
    assert len(modes) == local_dim(3)


def test_constant_mode_on_bbox():
    geom = element_geometry(unit_square_mesh(), 0)
    pts = np.array([[0.3, 0.7], [0.123, 0.456]])
    vals, grads = eval_basis(geom, 3, pts)
    np.testing.assert_allclose(vals[0], 1.0 / np.sqrt(geom.bbox_area),
                               rtol=1e-14)
    np.testing.assert_allclose(grads[0], 0.0, atol=1e-15)


def test_gram_identity_on_box_element():
    geom = element_geometry(unit_square_mesh(), 0)
    rule = quadrature(geom, 12)
    vals, _ = eval_basis(geom, 5, rule.points)
    gram = (vals * rule.weights) @ vals.T
    assert np.abs(gram - np.eye(len(gram))).max() < 1e-12


def test_hierarchical_nesting_of_values():
    mesh = cvt_mesh((0, 0, 1, 1), 9, seed=3)
    geom = element_geometry(mesh, 4)
    pts = geom.centroid[None, :] + np.array([[0.0, 0.0], [0.01, -0.02]])
    for q in range(1, 5):
        v_lo, _ = eval_basis(geom, q, pts)
        v_hi, _ = eval_basis(geom, q + 1, pts)
        assert np.array_equal(v_lo, v_hi[:local_dim(q)])


def test_projection_of_constant_on_box():
    geom = element_geometry(unit_square_mesh(), 0)
    c = 3.7
    coeffs = project_L2(lambda p: np.full(len(p), c), geom, 3)
    assert abs(coeffs[0] - c * np.sqrt(geom.bbox_area)) < 1e-12
    assert np.abs(coeffs[1:]).max() < 1e-12


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_projection_reproduces_polynomials(p):
    rng = np.random.default_rng(p)
    mesh = cvt_mesh((0, 0, 2, 1), 12, seed=5)
    geom = element_geometry(mesh, 7)
    modes = mode_exponents(p)
    coef = rng.standard_normal(len(modes))

    def poly(pts):
        return sum(c * pts[:, 0] ** a * pts[:, 1] ** b
                   for c, (a, b) in zip(coef, modes))

    proj = project_L2(poly, geom, p)
    rule = quadrature(geom, 2 * p + 2)
    vals, _ = eval_basis(geom, p, rule.points)
    recon = vals.T @ proj
    ref = poly(rule.points)
    assert np.abs(recon - ref).max() < 1e-10 * max(1.0, np.abs(ref).max())


def test_projection_idempotent():
    mesh = cvt_mesh((0, 0, 1, 1), 10, seed=9)
    geom = element_geometry(mesh, 3)
    coeffs = project_L2(lambda p: np.sin(3 * p[:, 0]) + p[:, 1] ** 2, geom, 3)

    def recon(pts):
        vals, _ = eval_basis(geom, 3, pts)
        return vals.T @ coeffs

    again = project_L2(recon, geom, 3)
    assert np.abs(again - coeffs).max() < 1e-12 * max(1.0, np.abs(coeffs).max())


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=5), min_size=1,
                max_size=40))
def test_dof_map_total_property(degrees):
    dm = build_dof_map(degrees)
    assert dm.total == sum((p + 1) * (p + 2) // 2 for p in degrees)
    # blocks tile [0, total) without gaps
    covered = np.zeros(dm.total, dtype=bool)
    for k in range(len(degrees)):
        sl = dm.block(k)
        assert not covered[sl].any()
        covered[sl] = True
    assert covered.all()
