import numpy as np
import pytest
import scipy.sparse as sp

from monodg.assembly import MaterialField, ModelCoefficients, assemble_operators
from monodg.polymesh import cvt_mesh
from monodg.space import Discretization
from monodg.timestepping import (CrankNicolson, SolveError, SolverState,
                                 TimeGrid, extrapolate_ionic, solve_linear)


def test_extrapolation_examples():
    assert extrapolate_ionic(np.array([2.0]), np.array([0.0]))[0] == 3.0
    assert extrapolate_ionic(np.array([1.0]), np.array([1.0]))[0] == 1.0
    got = extrapolate_ionic(np.array([0.4]), np.array([1.0]))[0]
    assert abs(got - 0.1) < 1e-15   # 1.5*0.4 - 0.5*1.0


def test_extrapolation_length_mismatch():
    with pytest.raises(ValueError):
        extrapolate_ionic(np.zeros(3), np.zeros(4))


def test_time_grid():
    grid = TimeGrid.from_horizon(0.05, 1.0)
    assert grid.n_steps == 20
    assert grid.t_end == pytest.approx(1.0)
    with pytest.raises(ValueError):
        TimeGrid.from_horizon(0.3, 1.0)
    with pytest.raises(ValueError):
        TimeGrid(-0.1, 10)


def test_solve_linear_identity():
    rhs = np.array([1.0, -2.0, 3.0])
    out = solve_linear(sp.eye(3, format="csr"), rhs)
    np.testing.assert_allclose(out, rhs, rtol=1e-14)


def test_solve_linear_mass_constant():
    mesh = cvt_mesh((0, 0, 1, 1), 12, seed=4)
    disc = Discretization(mesh, p_max=2)
    ops = assemble_operators(disc, MaterialField.isotropic(1.0),
                             np.full(mesh.n_cells, 2))
    one = ops.constant_vector(1.0)
    out = solve_linear(ops.M, ops.M @ one)
    assert np.abs(out - one).max() < 1e-10 * np.abs(one).max()


def test_solve_linear_matches_dense_oracle():
    rng = np.random.default_rng(7)
    B = rng.standard_normal((50, 50))
    A = B @ B.T + 50 * np.eye(50)
    rhs = rng.standard_normal(50)
    dense = np.linalg.solve(A, rhs)
    out = solve_linear(sp.csr_matrix(A), rhs)
    assert np.abs(out - dense).max() < 1e-9 * np.abs(dense).max()


def test_solve_linear_rejects_singular():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises((SolveError, RuntimeError)):
        solve_linear(A, np.array([1.0, 0.0]))


@pytest.fixture(scope="module")
def diffusion_setup():
    mesh = cvt_mesh((0, 0, 1, 1), 24, seed=6)
    disc = Discretization(mesh, p_max=2)
    ops = assemble_operators(disc, MaterialField.isotropic(0.05),
                             np.full(mesh.n_cells, 2))
    coeffs = ModelCoefficients(1.0, 1.0)
    return mesh, disc, ops, coeffs


def test_zero_state_stays_zero(diffusion_setup):
    _, _, ops, coeffs = diffusion_setup
    cn = CrankNicolson(ops, coeffs, dt=0.1)
    state = SolverState(np.zeros(ops.dofmap.total), None)
    zero = np.zeros(ops.dofmap.total)
    out = cn.step(state, zero, None, None)
    assert np.abs(out.U).max() == 0.0


def test_constant_state_invariant(diffusion_setup):
    _, _, ops, coeffs = diffusion_setup
    cn = CrankNicolson(ops, coeffs, dt=0.1)
    one = ops.constant_vector(4.2)
    state = SolverState(one.copy(), None)
    zero = np.zeros(ops.dofmap.total)
    for _ in range(5):
        state = cn.step(state, zero, None, None)
    assert np.abs(state.U - one).max() < 1e-11 * np.abs(one).max()


def test_charge_conservation_and_energy_decay(diffusion_setup):
    _, _, ops, coeffs = diffusion_setup
    cn = CrankNicolson(ops, coeffs, dt=0.05)
    rng = np.random.default_rng(1)
    state = SolverState(rng.standard_normal(ops.dofmap.total), None)
    zero = np.zeros(ops.dofmap.total)
    one = ops.constant_vector(1.0)
    q0 = one @ (ops.M @ state.U)
    energy = state.U @ (ops.A @ state.U)
    for _ in range(100):
        state = cn.step(state, zero, None, None)
        e_new = state.U @ (ops.A @ state.U)
        assert e_new <= energy * (1 + 1e-12) + 1e-12
        energy = e_new
    q1 = one @ (ops.M @ state.U)
    assert abs(q1 - q0) <= 1e-10 * abs(q0)


def test_diffusion_second_order_in_time(diffusion_setup):
    """Fine-step self-convergence: halving dt reduces the time error by
    about four (smooth diffusion of a random smooth mode)."""
    from monodg.space import VolumeEvaluator

    _, disc, ops, coeffs = diffusion_setup
    vol = VolumeEvaluator(disc, ops.dofmap)
    pts = disc.vq_points
    smooth = np.cos(np.pi * pts[:, 0]) * np.cos(np.pi * pts[:, 1])
    U0 = ops.solve_mass(vol.load(smooth))
    T = 1.0
    zero = np.zeros(ops.dofmap.total)

    def advance(dt):
        cn = CrankNicolson(ops, coeffs, dt=dt)
        state = SolverState(U0.copy(), None)
        for _ in range(int(round(T / dt))):
            state = cn.step(state, zero, None, None)
        return state.U

    ref = advance(T / 512)
    e1 = np.linalg.norm(advance(T / 8) - ref)
    e2 = np.linalg.norm(advance(T / 16) - ref)
    ratio = e1 / e2
    assert 3.0 < ratio < 5.5


def test_ionic_state_forward_euler(diffusion_setup):
    """Constant-in-space ionic block advances by plain forward Euler."""
    _, _, ops, coeffs = diffusion_setup
    cn = CrankNicolson(ops, coeffs, dt=0.25)
    one = ops.constant_vector(1.0)
    Y = np.stack([ops.constant_vector(2.0)])
    state = SolverState(one.copy(), Y)
    # dynamics load of the constant field m = 0.5 everywhere
    half = 0.5 * (ops.M @ one)
    out = cn.step(state, np.zeros_like(one), np.stack([half]), None)
    # Y_new = Y - dt * M^-1 (m, phi) = 2 - 0.25*0.5 = 1.875 (constant)
    expected = ops.constant_vector(1.875)
    assert np.abs(out.Y[0] - expected).max() < 1e-11


def test_history_rotation(diffusion_setup):
    _, _, ops, coeffs = diffusion_setup
    cn = CrankNicolson(ops, coeffs, dt=0.1)
    state = SolverState(ops.constant_vector(1.0), None)
    load = ops.M @ ops.constant_vector(0.3)
    out = cn.step(state, load, None, None)
    np.testing.assert_array_equal(out.I_prev, load)
    assert out.step == 1
