import numpy as np
import pytest

import meshstamp as ms
from meshstamp.shapes import make_cube, make_grid_plane

from oracles import brute_closest, brute_ray


@pytest.fixture(scope="module")
def blob_index(random_blob):
    return ms.SpatialIndex(random_blob)


class TestClosestPoint:
    def test_above_plane_patch(self):
        plane = make_grid_plane(4.0, 4)
        idx = ms.SpatialIndex(plane)
        hit = idx.closest_point(np.array([0.0, 0.0, 1.0]))
        assert np.isclose(hit.distance, 1.0)
        assert np.allclose(hit.point, [0.0, 0.0, 0.0], atol=1e-12)

    def test_on_surface_distance_zero(self, cube):
        idx = ms.SpatialIndex(cube)
        hit = idx.closest_point(np.array([0.5, 0.0, 0.0]))
        assert hit.distance < 1e-12

    def test_matches_brute_force(self, random_blob, blob_index):
        rng = np.random.default_rng(0)
        queries = rng.uniform(-2, 2, size=(1000, 3))
        d, pts, faces = blob_index.closest_point_many(queries)
        for i in range(queries.shape[0]):
            od, _, _ = brute_closest(random_blob, queries[i])
            assert abs(d[i] - od) < 1e-9

    def test_returned_point_on_returned_face(self, random_blob, blob_index):
        rng = np.random.default_rng(1)
        queries = rng.uniform(-2, 2, size=(50, 3))
        d, pts, faces = blob_index.closest_point_many(queries)
        tri = random_blob.vertices[random_blob.faces[faces]]
        # point-to-returned-triangle distance must itself be ~0
        for i in range(50):
            from oracles import closest_point_on_triangle
            q = closest_point_on_triangle(tri[i], pts[i])
            assert np.linalg.norm(q - pts[i]) < 1e-9


class TestRayIntersect:
    def test_cube_center_shot(self):
        cube = make_cube(1.0)
        idx = ms.SpatialIndex(cube)
        hit = idx.ray_intersect(np.array([0.0, 0.0, 2.0]), np.array([0.0, 0.0, -1.0]))
        assert hit is not None
        assert np.isclose(hit.t, 1.5)

    def test_ray_pointing_away(self, cube):
        idx = ms.SpatialIndex(cube)
        assert idx.ray_intersect(np.array([0.0, 0.0, 2.0]),
                                 np.array([0.0, 0.0, 1.0])) is None

    def test_matches_brute_force(self, random_blob, blob_index):
        rng = np.random.default_rng(2)
        origins = rng.uniform(-2, 2, size=(1000, 3))
        dirs = rng.normal(size=(1000, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        t, faces = blob_index.ray_intersect_many(origins, dirs)
        for i in range(origins.shape[0]):
            ot, of = brute_ray(random_blob, origins[i], dirs[i])
            if of < 0:
                assert faces[i] < 0
            else:
                assert abs(t[i] - ot) < 1e-9

    def test_self_intersection_guard(self, cube):
        idx = ms.SpatialIndex(cube)
        # Origin exactly on the +z face shooting outward: no hit.
        hit = idx.ray_intersect(np.array([0.1, 0.1, 0.5]), np.array([0.0, 0.0, 1.0]))
        assert hit is None


def test_parity_counts_inside_outside(cube):
    idx = ms.SpatialIndex(cube)
    d = np.array([0.577, 0.211, 0.789])
    d = d / np.linalg.norm(d)
    counts = idx.ray_hit_counts(np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]]),
                                np.array([d, d]))
    assert counts[0] % 2 == 1
    assert counts[1] % 2 == 0


def test_faces_in_box(sphere30, sphere30_index):
    ids = sphere30_index.faces_in_box(np.array([-1.0, -1, 13.0]),
                                      np.array([1.0, 1, 16.0]))
    assert ids.size > 0
    tri_lo = sphere30.vertices[sphere30.faces[ids]].min(axis=1)
    assert np.all(tri_lo[:, 2] <= 16.0)


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_property_queries_match_brute_force_on_random_meshes(seed):
    from meshstamp.shapes import make_uv_sphere
    rng = np.random.default_rng(seed)
    base = make_uv_sphere(1.0, 9, 11)  # <= 200 faces
    warp = 1.0 + 0.3 * rng.normal(size=base.n_vertices)
    mesh = ms.Mesh(base.vertices * warp[:, None], base.faces)
    index = ms.SpatialIndex(mesh)
    queries = rng.uniform(-2, 2, size=(200, 3))
    d, _, _ = index.closest_point_many(queries)
    for i in range(queries.shape[0]):
        od, _, _ = brute_closest(mesh, queries[i])
        assert abs(d[i] - od) < 1e-9
    dirs = rng.normal(size=(200, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    t, faces = index.ray_intersect_many(queries, dirs)
    for i in range(queries.shape[0]):
        ot, of = brute_ray(mesh, queries[i], dirs[i])
        if of < 0:
            assert faces[i] < 0
        else:
            assert abs(t[i] - ot) < 1e-9


def test_tree_structure_invariants(random_blob, blob_index):
    idx = blob_index
    leaves = np.nonzero(idx.node_left < 0)[0]
    # leaf size bound and exact partition of the faces
    assert np.all(idx.node_count[leaves] <= idx.leaf_size)
    covered = np.concatenate([
        idx.prim_face[idx.node_start[l]:idx.node_start[l] + idx.node_count[l]]
        for l in leaves])
    assert np.array_equal(np.sort(covered), np.arange(random_blob.n_faces))
    # node bounds contain their children's bounds
    inner = np.nonzero(idx.node_left >= 0)[0]
    for ni in inner:
        for ci in (idx.node_left[ni], idx.node_right[ni]):
            assert np.all(idx.node_min[ni] <= idx.node_min[ci] + 1e-12)
            assert np.all(idx.node_max[ni] >= idx.node_max[ci] - 1e-12)


def test_queries_deterministic(random_blob, blob_index):
    rng = np.random.default_rng(3)
    q = rng.uniform(-2, 2, size=(64, 3))
    d1, p1, f1 = blob_index.closest_point_many(q)
    d2, p2, f2 = blob_index.closest_point_many(q)
    assert np.array_equal(d1, d2) and np.array_equal(f1, f2)
