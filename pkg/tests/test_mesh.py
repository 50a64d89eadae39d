import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alflow.mesh import (HOLE, LEFT, Triangulation, barycentric_refine, build_hierarchy,
                         build_macrostar_patches, build_supermesh, channel_with_hole, locate_points,
                         polygon_area, read_mesh, rect_mesh, triangle_intersection, uniform_refine,
                         write_mesh)


def tri_area(t):
    return abs(polygon_area(t))


def test_rect_mesh_counts():
    m = rect_mesh(1, 1, 1, 1, 0)
    assert (m.n_cells, m.n_vertices) == (2, 4)
    m = rect_mesh(2, 1, 2, 1, 0)
    assert (m.n_cells, m.n_vertices) == (4, 6)


def test_rect_mesh_bingham_domain():
    m = rect_mesh(4, 2, 4, 2, -1)
    lo, hi = m.bounding_box()
    assert np.allclose(lo, [0, -1]) and np.allclose(hi, [4, 1])
    assert m.area == pytest.approx(8.0, rel=1e-12)
    assert m.markers() == [1, 2, 3, 4]


def test_rect_mesh_rejects_zero_cells():
    with pytest.raises(ValueError):
        rect_mesh(0, 3)


def test_mesh_invariants():
    m = rect_mesh(3, 2)
    m.check()
    assert np.all(m.areas > 0)
    ec = m.edge_cells
    nb = np.sum(ec[:, 1] < 0)
    assert nb == len(m.boundary_facets)


def test_negative_orientation_is_fixed():
    m = Triangulation([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]], [[0, 1], [1, 2], [2, 0]], [1, 1, 1])
    assert m.areas[0] == pytest.approx(0.5)


def test_degenerate_cell_rejected():
    with pytest.raises(ValueError):
        Triangulation([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]], np.zeros((0, 2)), [])


@pytest.mark.parametrize("res", [1, 1.1, 2])
def test_channel_with_hole(res):
    m = channel_with_hole(res)
    m.check()
    assert m.area == pytest.approx(0.81, rel=1e-12)
    hole = m.boundary_facets[m.boundary_markers == HOLE]
    length = np.linalg.norm(np.diff(m.vertices[hole], axis=1)[:, 0], axis=1).sum()
    assert length == pytest.approx(0.4, rel=1e-10)
    # closed loop: every hole vertex has exactly two hole facets
    _, cnt = np.unique(hole, return_counts=True)
    assert np.all(cnt == 2)
    inflow = m.vertices[m.boundary_facets[m.boundary_markers == LEFT]]
    assert np.allclose(inflow[..., 0], 0)
    assert inflow[..., 1].min() == pytest.approx(0) and inflow[..., 1].max() == pytest.approx(0.41)


def test_channel_resolution_bound():
    with pytest.raises(ValueError):
        channel_with_hole(0.5)


def test_uniform_refine():
    m = uniform_refine(rect_mesh(1, 1))
    assert (m.n_cells, m.n_vertices) == (8, 9)
    m2 = uniform_refine(m)
    assert m2.n_cells == 32
    assert np.all(m2.areas > 0)
    assert m2.area == pytest.approx(1.0)
    m2.check()


def test_barycentric_refine():
    base = rect_mesh(1, 1)
    m = barycentric_refine(base)
    assert (m.n_cells, m.n_vertices) == (6, 6)
    assert np.allclose(m.areas, np.repeat(base.areas / 3, 3), rtol=1e-12)
    assert np.array_equal(np.bincount(m.macro_parent), [3, 3])
    one = Triangulation([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [[0, 1], [1, 2], [2, 0]], [1, 1, 1])
    assert barycentric_refine(one).n_cells == 3


def test_refinement_deterministic():
    a = barycentric_refine(uniform_refine(rect_mesh(3, 2)))
    b = barycentric_refine(uniform_refine(rect_mesh(3, 2)))
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.cells, b.cells)


def test_hierarchy_sizes():
    h = build_hierarchy(rect_mesh(1, 1), 2)
    assert [l.n_cells for l in h.levels] == [6, 24]
    assert [m.n_cells for m in h.macro_levels] == [2, 8]
    assert len(h.supermeshes) == 1


@pytest.mark.parametrize("nlev", [1, 2, 3])
def test_hierarchy_cell_count_formula(nlev):
    coarse = rect_mesh(2, 3)
    h = build_hierarchy(coarse, nlev, supermesh=False)
    for l, lev in enumerate(h.levels):
        assert lev.n_cells == 3 * 4**l * coarse.n_cells


def test_hierarchy_non_nested():
    # The barycenter of a macro cell is also the barycenter of the middle child
    # of its red refinement, so vertex membership cannot separate the levels.
    # Instead: coarse cells are not unions of fine cells.
    h = build_hierarchy(rect_mesh(2, 2), 2)
    sm = h.supermeshes[0]
    n_coarse_parents = np.array([len(np.unique(sm.parent_coarse[sm.parent_fine == f]))
                                 for f in range(h.levels[1].n_cells)])
    assert np.any(n_coarse_parents > 1)


def test_child_map():
    h = build_hierarchy(rect_mesh(2, 1), 2, supermesh=False)
    cm = h.child_map[0]
    fine = h.macro_levels[1]
    assert cm.shape == (4, 4)
    assert np.allclose(fine.areas[cm].sum(axis=1), h.macro_levels[0].areas)


def test_macrostar_patches_interior_vertex():
    # 2x2 quads, 8 macro cells; the centre vertex touches 6 of them
    level = barycentric_refine(rect_mesh(2, 2))
    patches = build_macrostar_patches(level)
    assert len(patches) == 9
    centre = int(np.argmin(np.linalg.norm(level.vertices - 0.5, axis=1)))
    p = next(p for p in patches if p.seed_vertex == centre)
    assert len(p.cells) == 18


def test_macrostar_patches_corners():
    level = barycentric_refine(rect_mesh(2, 2))
    patches = {p.seed_vertex: p for p in build_macrostar_patches(level)}
    sizes = []
    for c in ([0, 0], [1, 0], [0, 1], [1, 1]):
        v = int(np.argmin(np.linalg.norm(level.vertices - c, axis=1)))
        sizes.append(len(patches[v].cells) // 3)
    assert sorted(sizes) == [1, 1, 2, 2]


def test_patch_cover():
    level = build_hierarchy(rect_mesh(3, 2), 2, supermesh=False).levels[1]
    patches = build_macrostar_patches(level)
    covered = np.unique(np.concatenate([p.cells for p in patches]))
    assert np.array_equal(covered, np.arange(level.n_cells))
    for p in patches:
        # cells come in complete macro cells
        assert np.all(np.bincount(level.macro_parent[p.cells])[np.unique(level.macro_parent[p.cells])] == 3)


def test_triangle_intersection_identity():
    a = np.array([[0.1, 0.2], [1.3, 0.1], [0.4, 0.9]])
    poly = triangle_intersection(a, a)
    assert tri_area(poly) == pytest.approx(tri_area(a), rel=1e-12)
    assert polygon_area(poly) > 0


def test_triangle_intersection_disjoint():
    a = np.array([[0, 0], [1, 0], [0, 1]], float)
    assert len(triangle_intersection(a, a + 5)) == 0
    # sharing only an edge has zero measure
    b = np.array([[1, 0], [1, 1], [0, 1]], float)
    assert len(triangle_intersection(a, b)) == 0


def test_triangle_intersection_monte_carlo():
    a = np.array([[0, 0], [1, 0], [0, 1]], float)
    b = np.array([[1, 1], [0, 1], [1, 0]], float) - 0.25  # shifted reflection
    poly = triangle_intersection(a, b)
    rng = np.random.default_rng(1)
    n = 10**6
    pts = rng.random((n, 2))

    def inside(t, p):
        out = np.ones(len(p), bool)
        for i in range(3):
            q, r = t[i], t[(i + 1) % 3]
            out &= (r[0] - q[0]) * (p[:, 1] - q[1]) - (r[1] - q[1]) * (p[:, 0] - q[0]) >= 0
        return out

    bb = b[[0, 2, 1]] if polygon_area(b) < 0 else b
    est = np.mean(inside(a, pts) & inside(bb, pts))
    assert tri_area(poly) == pytest.approx(est, abs=3e-3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=12, max_size=12))
def test_triangle_intersection_properties(c):
    a = np.array(c[:6]).reshape(3, 2)
    b = np.array(c[6:]).reshape(3, 2)
    if tri_area(a) < 1e-3 or tri_area(b) < 1e-3:
        return
    if polygon_area(a) < 0:
        a = a[[0, 2, 1]]
    if polygon_area(b) < 0:
        b = b[[0, 2, 1]]
    p = triangle_intersection(a, b)
    q = triangle_intersection(b, a)
    area = tri_area(p) if len(p) else 0.0
    assert area <= min(tri_area(a), tri_area(b)) * (1 + 1e-10)
    assert area == pytest.approx(tri_area(q) if len(q) else 0.0, abs=1e-10)
    if len(p):
        assert polygon_area(p) > 0


def test_supermesh_identical_meshes():
    m = barycentric_refine(rect_mesh(2, 2))
    sm = build_supermesh(m, m)
    per = np.bincount(sm.parent_coarse, weights=sm.areas, minlength=m.n_cells)
    assert np.allclose(per, m.areas, rtol=1e-12)
    assert np.array_equal(sm.parent_coarse, sm.parent_fine)


def test_supermesh_single_macro_triangle():
    macro = Triangulation([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [[0, 1], [1, 2], [2, 0]], [1, 1, 1])
    h = build_hierarchy(macro, 2)
    assert (h.levels[0].n_cells, h.levels[1].n_cells) == (3, 12)
    sm = h.supermeshes[0]
    assert len(sm.parent_coarse) == len(sm.parent_fine) == len(sm)
    assert sm.areas.sum() == pytest.approx(0.5, rel=1e-12)


def test_supermesh_parents_contain_triangles():
    h = build_hierarchy(rect_mesh(3, 2, 3, 2), 2)
    coarse, fine = h.levels
    sm = h.supermeshes[0]
    assert sm.areas.sum() == pytest.approx(6.0, rel=1e-12)
    for parents, mesh in ((sm.parent_coarse, coarse), (sm.parent_fine, fine)):
        v = mesh.vertices[mesh.cells[parents]]
        for corner in range(3):
            p = sm.tris[:, corner]
            for i in range(3):
                q, r = v[:, i], v[:, (i + 1) % 3]
                cross = (r[:, 0] - q[:, 0]) * (p[:, 1] - q[:, 1]) - (r[:, 1] - q[:, 1]) * (p[:, 0] - q[:, 0])
                assert cross.min() >= -1e-12


def test_supermesh_area_conservation_all_pairs():
    h = build_hierarchy(channel_with_hole(1), 3)
    for i, sm in enumerate(h.supermeshes):
        per = np.bincount(sm.parent_coarse, weights=sm.areas, minlength=h.levels[i].n_cells)
        assert np.max(np.abs(per - h.levels[i].areas) / h.levels[i].areas) <= 1e-12
        perf = np.bincount(sm.parent_fine, weights=sm.areas, minlength=h.levels[i + 1].n_cells)
        assert np.max(np.abs(perf - h.levels[i + 1].areas) / h.levels[i + 1].areas) <= 1e-12


def test_locate_points():
    m = barycentric_refine(rect_mesh(3, 3))
    rng = np.random.default_rng(0)
    pts = rng.random((200, 2))
    cell, xi = locate_points(m, pts)
    v = m.vertices[m.cells[cell]]
    back = v[:, 0] + (v[:, 1] - v[:, 0]) * xi[:, :1] + (v[:, 2] - v[:, 0]) * xi[:, 1:]
    assert np.allclose(back, pts)
    assert np.all(xi >= -1e-12) and np.all(xi.sum(axis=1) <= 1 + 1e-12)
    with pytest.raises(ValueError):
        locate_points(m, [[2.0, 2.0]])


def test_mesh_roundtrip(tmp_path):
    m = barycentric_refine(rect_mesh(2, 3))
    write_mesh(m, tmp_path / "m.txt")
    r = read_mesh(tmp_path / "m.txt")
    assert np.array_equal(r.vertices, m.vertices)
    assert np.array_equal(r.cells, m.cells)
    assert np.array_equal(r.macro_parent, m.macro_parent)
    (tmp_path / "bad.txt").write_text("3 1 0\n0 0\n")
    with pytest.raises(ValueError):
        read_mesh(tmp_path / "bad.txt")
