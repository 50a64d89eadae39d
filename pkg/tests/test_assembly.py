import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from alflow.assembly import LevelAssembler, ProblemDefinition, velocity_constraints, zero_bc
from alflow.fem import BlockField, interpolate
from alflow.mesh import build_hierarchy, channel_with_hole, rect_mesh
from alflow.rheology import (ActivatedEuler, BinghamBE, BinghamPapanastasiou, CarreauYasuda,
                             EulerPowerLaw, Newtonian)

ALL_WALLS = (1, 2, 3, 4)


def problem_on(coarse, model=None, levels=1, **kw):
    h = build_hierarchy(coarse, levels, supermesh=False)
    kw.setdefault("dirichlet", {m: zero_bc for m in ALL_WALLS})
    return ProblemDefinition(h, kw.pop("k", 2), model or Newtonian(nu=1.0), **kw)


def random_state(a, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    x = a.new_state()
    x.data[:] = scale * rng.standard_normal(len(x.data))
    a.impose_bc(x)
    return x


def fd_error(a, x, n_dirs=20, seed=1):
    rng = np.random.default_rng(seed)
    op = a.jacobian(x)
    o = a.spaces.offsets
    worst = 0.0
    for _ in range(n_dirs):
        d = rng.standard_normal(a.n)
        d[o[1]:o[2]][a.bc_mask] = 0.0
        h = 1e-6 * (1 + np.linalg.norm(x.data)) / np.linalg.norm(d)
        fp = a.residual(BlockField(a.spaces, x.data + h * d))
        fm = a.residual(BlockField(a.spaces, x.data - h * d))
        jd = op.matvec(d)
        worst = max(worst, np.linalg.norm((fp - fm) / (2 * h) - jd) / np.linalg.norm(jd))
    return worst


def test_zero_state_zero_residual():
    a = LevelAssembler(problem_on(rect_mesh(2, 2)).hierarchy.levels[0], problem_on(rect_mesh(2, 2)))
    assert np.all(a.residual(a.new_state()) == 0.0)


def test_manufactured_stokes_solution():
    nu = 0.7
    exact_u = lambda X: np.stack([X[:, 1] ** 2, X[:, 0] ** 2], axis=1)  # noqa: E731
    # -div(2 nu D(u)) + grad p with p = x - 1/2
    f = lambda X: np.tile([1.0 - 2 * nu, -2 * nu], (len(X), 1))  # noqa: E731
    pb = problem_on(rect_mesh(3, 3), Newtonian(nu=nu), dirichlet={m: exact_u for m in ALL_WALLS},
                    forcing=f, convection=False)
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    x = a.new_state()
    x.u[:] = interpolate(a.spaces.velocity, exact_u)
    x.p[:] = interpolate(a.spaces.pressure, lambda X: X[:, 0] - 0.5)
    # S = 2 nu D(u) = 2 nu [[0, x+y], [x+y, 0]]
    x.S[:] = interpolate(a.spaces.stress, lambda X: np.stack([0 * X[:, 0], 2 * nu * (X[:, 0] + X[:, 1])], axis=1))
    F = a.residual(x)
    load = np.linalg.norm(a.residual(a.new_state()))
    assert np.linalg.norm(F) <= 1e-10 * load


def test_dirichlet_rows_zero():
    pb = problem_on(rect_mesh(2, 2), CarreauYasuda(nu=0.5, r1=1.5, r2=2.5, beta1=0.5, beta2=0.5))
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    x = random_state(a)
    F = a.residual(x)
    o = a.spaces.offsets
    assert np.all(F[o[1]:o[2]][a.bc_mask] == 0.0)
    x.u[a.bc_dofs] += 1.0
    a.impose_bc(x)
    assert np.allclose(x.u[a.bc_dofs], a.bc_values)


MODELS = [
    Newtonian(nu=0.3),
    CarreauYasuda(nu=0.2, r1=1.8, r2=2.5, beta1=0.9, beta2=0.5, Gamma1=200, Gamma2=200),
    BinghamBE(nu=1.0, tau_y=np.sqrt(2), eps=0.01),
    BinghamPapanastasiou(nu=1.0, tau_y=1.0, eps=0.1),
    ActivatedEuler(nu=0.5, tau_y=3.0, eps=0.1),
    EulerPowerLaw(nu=0.5, r=1.3, tau_y=3.0, eps=0.2),
]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
def test_jacobian_finite_differences(model):
    lid = lambda X: np.stack([X[:, 0] ** 2 * (2 - X[:, 0]) ** 2, 0 * X[:, 0]], axis=1)  # noqa: E731
    pb = problem_on(rect_mesh(4, 4, 2, 2), model, dirichlet={1: zero_bc, 2: zero_bc, 3: zero_bc, 4: lid},
                    stabilization=True)
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    assert a.n <= 5000
    x = random_state(a, seed=3, scale=0.5)
    a.update_stabilization(x.u)
    assert fd_error(a, x) <= 1e-5


def test_newtonian_blocks():
    nu = 0.25
    pb = problem_on(rect_mesh(2, 1), Newtonian(nu=nu), convection=True)
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    op = a.jacobian(a.new_state())
    assert op.E.nnz == 0
    # DG P1 cell mass: area/12 [[2,1,1],[1,2,1],[1,1,2]]; tensor inner product carries a factor 2
    mesh = a.mesh
    ref = np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]]) / 12
    blocks = [np.kron(ar * ref, np.eye(2)) for ar in mesh.areas]
    expected = -(1 / (2 * nu)) * 2 * sp.block_diag(blocks).toarray()
    assert np.allclose(op.Q1.toarray(), expected, atol=1e-14)
    assert abs(op.C - op.Q2Ct.T).max() < 1e-14
    assert abs(op.B - op.Bt.T).max() < 1e-14
    assert abs(op.K - op.K.T).max() < 1e-10
    A = op.matrix()
    assert A.shape == (a.n, a.n)


def test_ggamma_equals_augmentation():
    pb = problem_on(rect_mesh(2, 2), gamma=1.0)
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    assert a.spaces.velocity.ndofs <= 200
    Bt = a.divergence().toarray()
    G = a._ggamma().toarray()
    dense = Bt @ np.linalg.solve(a.Mp.toarray(), Bt.T)
    assert np.allclose(G, dense, atol=1e-12 * np.abs(G).max())
    assert np.allclose(G, G.T)
    assert np.linalg.eigvalsh(G).min() > -1e-10


def test_divergence_free_polynomial():
    pb = problem_on(rect_mesh(3, 2))
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    # stream function psi = x^2 y + y^3 gives u = (psi_y, -psi_x)
    u = interpolate(a.spaces.velocity, lambda X: np.stack([X[:, 0] ** 2 + 3 * X[:, 1] ** 2,
                                                           -2 * X[:, 0] * X[:, 1]], axis=1))
    assert np.abs(a.divergence().T @ u).max() <= 1e-11


def test_pressure_mass():
    pb = problem_on(rect_mesh(2, 3, 2.0, 3.0))
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    Mp = a.Mp
    one = np.ones(Mp.shape[0])
    assert one @ Mp @ one == pytest.approx(6.0, rel=1e-12)
    assert abs(Mp - Mp.T).max() == 0
    q = np.random.default_rng(0).standard_normal(len(one))
    assert np.allclose(a.apply_Mp_inv(Mp @ q), q, rtol=1e-12)
    assert np.linalg.eigvalsh(Mp.toarray()).min() > 0


def test_pressure_mass_p0_single_cell():
    from alflow.fem import SCALAR, DG, make_space, Function, norms
    m = rect_mesh(1, 1, 1.0, 2.0)
    P = make_space(m, 0, SCALAR, DG)
    # one unit-area cell: its P0 mass block is [1]
    assert norms(Function(P, np.array([1.0, 0.0]))) ** 2 == pytest.approx(1.0)


def test_gamma_isolation():
    model = CarreauYasuda(nu=0.5, r1=1.5, r2=2.5, beta1=0.5, beta2=0.5)
    ops, res = [], []
    for g in (0.0, 1e4):
        pb = problem_on(rect_mesh(2, 2), model, gamma=g)
        a = LevelAssembler(pb.hierarchy.levels[0], pb)
        x = random_state(a, seed=5)
        ops.append(a.jacobian(x))
        res.append(a.residual(x))
    for name in ("Q1", "Q2Ct", "C", "E", "Bt", "B", "Mp"):
        A0, A1 = getattr(ops[0], name), getattr(ops[1], name)
        assert (A0 != A1).nnz == 0, name
    o = a.spaces.offsets
    assert np.array_equal(res[0][:o[1]], res[1][:o[1]])
    assert np.array_equal(res[0][o[2]:], res[1][o[2]:])
    assert ops[0].Ggamma.nnz == 0 and ops[1].Ggamma.nnz > 0


def test_reassembly_bit_identical():
    pb = problem_on(rect_mesh(3, 2), MODELS[1], stabilization=True)
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    x = random_state(a, seed=2)
    a.update_stabilization(x.u)
    A1, A2 = a.jacobian(x).matrix(), a.jacobian(x).matrix()
    assert np.array_equal(A1.data, A2.data) and np.array_equal(A1.indices, A2.indices)
    assert np.array_equal(a.residual(x), a.residual(x))


def test_stabilization_linear_field_and_zero_velocity():
    pb = problem_on(rect_mesh(2, 2), stabilization=True)
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    assert a.assemble_stabilization(np.zeros(a.spaces.velocity.ndofs)).nnz == 0 or \
        abs(a.assemble_stabilization(np.zeros(a.spaces.velocity.ndofs))).max() == 0
    u = interpolate(a.spaces.velocity, lambda X: np.stack([1 + 2 * X[:, 0] - X[:, 1], 3 * X[:, 1]], axis=1))
    Sh = a.assemble_stabilization(u)
    assert np.abs(Sh @ u).max() <= 1e-12 * abs(Sh).max()
    assert abs(Sh - Sh.T).max() <= 1e-14 * abs(Sh).max()
    assert np.linalg.eigvalsh(Sh.toarray()).min() > -1e-12


def test_stabilization_two_cell_oracle():
    # u = ((x - y)_+, 0) on the two-triangle square: gradient jump (1, -1) across the diagonal
    coarse = rect_mesh(1, 1)
    pb = problem_on(coarse, stabilization=True, stab_coeff=5e-3)
    a = LevelAssembler(coarse, pb)
    u = interpolate(a.spaces.velocity, lambda X: np.stack([np.maximum(X[:, 0] - X[:, 1], 0), 0 * X[:, 0]], axis=1))
    Sh = a.assemble_stabilization(u)
    h = np.sqrt(2)
    delta = 5e-3 * 1.0  # max nodal |u| over the cell holding (1, 0)
    assert u @ Sh @ u == pytest.approx(delta * h**2 * h * 2.0, rel=1e-12)


def test_outflow_constrains_tangential_only():
    h = build_hierarchy(channel_with_hole(1), 1, supermesh=False)
    inflow = lambda X: np.stack([X[:, 1] * (0.41 - X[:, 1]), 0 * X[:, 1]], axis=1)  # noqa: E731
    pb = ProblemDefinition(h, 2, Newtonian(), dirichlet={1: inflow, 3: zero_bc, 4: zero_bc, 5: zero_bc},
                           outflow=(2,))
    V = LevelAssembler(h.levels[0], pb).spaces.velocity
    dofs, _ = velocity_constraints(pb, V)
    right = V.boundary_nodes(2)
    interior_right = right[(V.node_coords[right, 1] > 1e-12) & (V.node_coords[right, 1] < 0.41 - 1e-12)]
    assert np.all(np.isin(2 * interior_right + 1, dofs))
    assert not np.any(np.isin(2 * interior_right, dofs))
    assert not pb.has_pressure_nullspace


def test_cavity_all_velocity_constrained():
    pb = problem_on(rect_mesh(2, 2))
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    nodes = a.spaces.velocity.boundary_nodes()
    assert np.array_equal(np.sort(a.bc_dofs), np.sort(np.concatenate([2 * nodes, 2 * nodes + 1])))
    assert pb.has_pressure_nullspace


def test_boundary_condition_errors():
    h = build_hierarchy(rect_mesh(2, 2), 1, supermesh=False)
    with pytest.raises(ValueError):
        ProblemDefinition(h, 2, Newtonian(), dirichlet={1: zero_bc, 2: zero_bc, 3: zero_bc})
    with pytest.raises(ValueError):
        ProblemDefinition(h, 2, Newtonian(), dirichlet={m: zero_bc for m in ALL_WALLS}, outflow=(2,))
    one = lambda X: np.ones((len(X), 2))  # noqa: E731
    pb = ProblemDefinition(h, 2, Newtonian(), dirichlet={1: one, 2: zero_bc, 3: zero_bc, 4: zero_bc})
    with pytest.raises(ValueError):
        LevelAssembler(h.levels[0], pb)


def test_nan_residual_aborts():
    pb = problem_on(rect_mesh(1, 1))
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    x = a.new_state()
    x.S[:] = np.nan
    with pytest.raises(FloatingPointError):
        a.residual(x)


def test_dump_blocks(tmp_path):
    pb = problem_on(rect_mesh(1, 1))
    a = LevelAssembler(pb.hierarchy.levels[0], pb)
    op = a.jacobian(a.new_state())
    paths = op.dump(tmp_path, "lvl0_")
    assert len(paths) == 10
    K = scipy.io.mmread(str(tmp_path / "lvl0_K.mtx"))
    assert abs(K - op.K).max() == 0
