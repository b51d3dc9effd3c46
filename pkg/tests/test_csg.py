import numpy as np
import pytest

import meshstamp as ms
from meshstamp import placement as pl
from meshstamp.csg import boolean_op, curve_matching_fuse, extrude_along
from meshstamp.mesh import MeshError, boundary_edge_count, connected_components
from meshstamp.shapes import make_box, make_grid_plane, make_uv_sphere

from oracles import axis_box_voxel_volume


@pytest.fixture(scope="module")
def unit_box():
    return make_box((0, 0, 0), (1, 1, 1))


class TestBooleanOp:
    def test_union_disjoint_cubes(self, unit_box):
        b = make_box((3, 0, 0), (4, 1, 1))
        r = boolean_op(unit_box, b, "union")
        assert abs(r.mesh.signed_volume() - 2.0) < 1e-6
        assert r.boundary_edge_count == 0
        assert connected_components(r.mesh)[0] == 2

    def test_self_intersection(self, unit_box):
        r = boolean_op(unit_box, unit_box, "intersection")
        assert abs(r.mesh.signed_volume() - 1.0) < 1e-6
        assert r.boundary_edge_count == 0

    def test_half_overlapping_cubes_vs_voxel_oracle(self, unit_box):
        b = make_box((0.5, 0, 0), (1.5, 1, 1))
        for mode in ("union", "intersection", "difference"):
            r = boolean_op(unit_box, b, mode)
            oracle = axis_box_voxel_volume(
                np.zeros(3), np.ones(3), np.array([0.5, 0, 0]),
                np.array([1.5, 1, 1]), mode)
            assert abs(r.mesh.signed_volume() - oracle) < 1e-3
            assert r.boundary_edge_count == 0

    def test_disjoint_intersection_empty(self, unit_box):
        b = make_box((5, 5, 5), (6, 6, 6))
        r = boolean_op(unit_box, b, "intersection")
        assert r.is_empty

    def test_non_watertight_input_rejected(self, unit_box):
        open_patch = make_grid_plane(2.0, 2)
        with pytest.raises(MeshError):
            boolean_op(unit_box, open_patch, "union")
        with pytest.raises(MeshError):
            boolean_op(open_patch, unit_box, "union")

    def test_inverted_orientation_rejected(self, unit_box):
        inverted = ms.Mesh(unit_box.vertices, unit_box.faces[:, ::-1])
        with pytest.raises(MeshError):
            boolean_op(inverted, unit_box, "union")

    def test_unknown_mode(self, unit_box):
        with pytest.raises(ValueError):
            boolean_op(unit_box, unit_box, "xor")

    def test_labels_carried_through(self, unit_box):
        b = make_box((0.5, 0, 0), (1.5, 1, 1))
        la = np.asarray(["left"] * unit_box.n_faces, dtype=object)
        lb = np.asarray(["right"] * b.n_faces, dtype=object)
        r = boolean_op(unit_box, b, "union", labels_a=la, labels_b=lb)
        assert set(r.labels) == {"left", "right"}
        assert r.labels.shape[0] == r.mesh.n_faces
        assert np.array_equal(r.face_sources == 1,
                              np.asarray([l == "right" for l in r.labels]))

    def test_union_volume_at_least_max_input(self, unit_box):
        s = make_uv_sphere(0.7, 12, 16)
        r = boolean_op(unit_box, s, "union")
        assert r.mesh.signed_volume() >= max(unit_box.signed_volume(),
                                             s.signed_volume()) - 1e-6
        ri = boolean_op(unit_box, s, "intersection")
        assert ri.mesh.signed_volume() <= min(unit_box.signed_volume(),
                                              s.signed_volume()) + 1e-6


class TestExtrudeAlong:
    def test_flat_patch_thickness(self):
        patch = make_grid_plane(2.0, 4)
        solid = extrude_along(patch, np.array([0.0, 0, 1]), 0.05)
        assert boundary_edge_count(solid) == 0
        assert abs(solid.signed_volume() - 4.0 * 0.05) < 1e-9
        # top vertices sit exactly 0.05 above the base plane
        idx = ms.SpatialIndex(patch)
        top = solid.vertices[solid.vertices[:, 2] > 0.025]
        d, _, _ = idx.closest_point_many(top)
        assert np.allclose(d, 0.05, atol=1e-12)

    def test_spherical_cap_distance_variance(self, sphere30, sphere30_index):
        # cap patch = sphere faces with z > 14
        cap_ids = np.nonzero(sphere30.vertices[sphere30.faces].mean(axis=1)[:, 2] > 14.0)[0]
        from meshstamp.csg import _submesh
        cap = _submesh(sphere30, cap_ids)
        solid = extrude_along(cap, np.array([0.0, 0, 1]), 0.05)
        n_cap = cap.n_faces
        top_faces = solid.faces[n_cap:2 * n_cap]
        top_verts = solid.vertices[np.unique(top_faces)]
        d, _, _ = sphere30_index.closest_point_many(top_verts)
        assert float(np.var(d)) < 1e-4

    def test_zero_distance_rejected(self):
        patch = make_grid_plane(2.0, 2)
        with pytest.raises(MeshError):
            extrude_along(patch, np.array([0.0, 0, 1]), 0.0)

    def test_closed_input_rejected(self, unit_box):
        with pytest.raises(MeshError):
            extrude_along(unit_box, np.array([0.0, 0, 1]), 0.1)


def _posed_watermark(mesh, index, text="A", size=2.5, seed=3):
    glyph, _ = ms.text_to_3d(ms.WatermarkSpec(text, size, 0.5))
    tpl = ms.oriented_bounding_box(glyph)
    cands = pl.init_candidates(mesh, tpl, 30, 1.0, seed=seed)
    best = pl.optimize(cands[:3], index, pl.OptimizerOptions())
    c = min(best, key=lambda x: x.loss)
    return pl.posed_watermark_mesh(c, glyph, tpl), c.geom


class TestCurveMatchingFuse:
    def test_slab_emboss_keeps_component_count(self, slab30, slab30_index):
        wm = _posed_watermark(slab30, slab30_index)
        fused, labels, skipped = curve_matching_fuse(slab30, [wm], strength=0.05)
        assert skipped == []
        assert connected_components(fused)[0] == connected_components(slab30)[0]
        assert boundary_edge_count(fused) == 0
        assert labels.shape[0] == fused.n_faces

    def test_slab_top_distance_exact(self, slab30, slab30_index):
        wm = _posed_watermark(slab30, slab30_index)
        fused, labels, _ = curve_matching_fuse(slab30, [wm], strength=0.05)
        top = np.asarray([l == "watermark_0_top" for l in labels])
        assert top.any()
        verts = np.unique(fused.faces[top])
        d, _, _ = slab30_index.closest_point_many(fused.vertices[verts])
        assert np.allclose(d, 0.05, atol=1e-9)
        assert float(np.var(d)) < 1e-12

    def test_sphere_curve_matched_beats_flat(self, sphere30, sphere30_index):
        wm = _posed_watermark(sphere30, sphere30_index)
        fused_cm, labels_cm, _ = curve_matching_fuse(sphere30, [wm], strength=0.05)
        fused_flat, labels_flat, _ = curve_matching_fuse(
            sphere30, [wm], strength=0.05, curve_match=False)

        def top_var(mesh, labels):
            top = np.asarray([str(l).endswith("_top") for l in labels])
            verts = np.unique(mesh.faces[top])
            d, _, _ = sphere30_index.closest_point_many(mesh.vertices[verts])
            return float(np.var(d))

        assert top_var(fused_cm, labels_cm) < 0.25 * top_var(fused_flat, labels_flat)

    def test_deboss_removes_volume(self, slab30, slab30_index):
        wm = _posed_watermark(slab30, slab30_index)
        fused, labels, skipped = curve_matching_fuse(slab30, [wm],
                                                     strength=0.05, mode="deboss")
        assert skipped == []
        assert fused.signed_volume() < slab30.signed_volume()
        assert boundary_edge_count(fused) == 0
        top = np.asarray([l == "watermark_0_top" for l in labels])
        verts = np.unique(fused.faces[top])
        d, _, _ = slab30_index.closest_point_many(fused.vertices[verts])
        assert np.allclose(d, 0.05, atol=1e-9)

    def test_off_surface_watermark_skipped(self, slab30, slab30_index):
        glyph, _ = ms.text_to_3d(ms.WatermarkSpec("A", 2.0, 0.5))
        tpl = ms.oriented_bounding_box(glyph)
        floating = ms.Mesh(glyph.vertices + np.array([0, 0, 50.0]), glyph.faces)
        geom = ms.BoxGeom(np.array([0, 0, 50.0]), tpl.half_extents, np.eye(3))
        on_surface = _posed_watermark(slab30, slab30_index)
        fused, labels, skipped = curve_matching_fuse(
            slab30, [(floating, geom), on_surface], strength=0.05)
        assert skipped == [0]
        assert any(str(l).startswith("watermark_1") for l in labels)

    def test_edge_overhanging_watermark_stays_watertight(self, slab30,
                                                         slab30_index):
        # Box hanging past the slab edge: the intersection patch wraps onto
        # the side wall, which must not end up in the extruded prism.
        glyph, _ = ms.text_to_3d(ms.WatermarkSpec("WM", 4.0, 0.5))
        tpl = ms.oriented_bounding_box(glyph)
        center = np.array([15.0 - tpl.half_extents[0] + 1.0, 0.0, 1.0])
        posed = ms.Mesh(glyph.vertices + center, glyph.faces)
        geom = ms.BoxGeom(center, tpl.half_extents, np.eye(3))
        fused, labels, skipped = curve_matching_fuse(slab30, [(posed, geom)],
                                                     strength=0.05)
        assert skipped == []
        assert boundary_edge_count(fused) == 0
        assert connected_components(fused)[0] == 1

    def test_provenance_partition(self, slab30, slab30_index):
        wm = _posed_watermark(slab30, slab30_index)
        fused, labels, _ = curve_matching_fuse(slab30, [wm], strength=0.05)
        names = {str(l) for l in labels}
        assert names <= {"target", "watermark_0_top", "watermark_0_side"}
        assert "target" in names and "watermark_0_top" in names
