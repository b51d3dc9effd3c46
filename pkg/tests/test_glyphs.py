import numpy as np
import pytest

import meshstamp as ms
from meshstamp.glyphs import SUPPORTED_CHARACTERS, WatermarkSpec, char_cells
from meshstamp.mesh import boundary_edge_count, connected_components


class TestWatermarkSpec:
    def test_lowercase_folds(self):
        assert WatermarkSpec("watermark").text == "WATERMARK"

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            WatermarkSpec("   ")

    def test_unsupported_character_named(self):
        with pytest.raises(ValueError) as exc:
            WatermarkSpec("AB€C")
        assert "€" in str(exc.value)

    def test_nonpositive_dimensions(self):
        with pytest.raises(ValueError):
            WatermarkSpec("A", size=0)
        with pytest.raises(ValueError):
            WatermarkSpec("A", thickness=-1)


class TestTextTo3d:
    def test_i_extents(self):
        mesh, _ = ms.text_to_3d(WatermarkSpec("I", 4.0, 0.5))
        lo, hi = mesh.aabb()
        assert np.isclose(hi[1] - lo[1], 4.0)
        assert np.isclose(hi[2] - lo[2], 0.5)
        assert np.allclose(mesh.centroid(), 0.0, atol=1e-9)

    def test_watermark_has_nine_components(self):
        mesh, _ = ms.text_to_3d(WatermarkSpec("WATERMARK", 4.0, 0.5))
        assert connected_components(mesh)[0] == 9

    def test_every_character_connected_and_watertight(self):
        for ch in sorted(SUPPORTED_CHARACTERS - {" "}):
            mesh, _ = ms.text_to_3d(WatermarkSpec(ch, 4.0, 0.5))
            assert boundary_edge_count(mesh) == 0, ch
            assert connected_components(mesh)[0] == 1, ch
            assert mesh.signed_volume() > 0, ch

    def test_space_advances_without_geometry(self):
        a, _ = ms.text_to_3d(WatermarkSpec("A A", 4.0, 0.5))
        aa, _ = ms.text_to_3d(WatermarkSpec("AA", 4.0, 0.5))
        assert connected_components(a)[0] == 2
        lo_a, hi_a = a.aabb()
        lo_aa, hi_aa = aa.aabb()
        assert hi_a[0] - lo_a[0] > hi_aa[0] - lo_aa[0]

    def test_deterministic_bit_identical(self):
        spec = WatermarkSpec("MESH42", 3.0, 0.4)
        m1, c1 = ms.text_to_3d(spec)
        m2, c2 = ms.text_to_3d(spec)
        assert np.array_equal(m1.vertices, m2.vertices)
        assert np.array_equal(m1.faces, m2.faces)
        assert np.array_equal(c1, c2)

    def test_per_character_face_labels(self):
        mesh, cid = ms.text_to_3d(WatermarkSpec("AB", 4.0, 0.5))
        assert cid.shape[0] == mesh.n_faces
        assert set(np.unique(cid)) == {0, 1}

    def test_all_glyph_bitmaps_well_formed(self):
        for ch in sorted(SUPPORTED_CHARACTERS):
            cells = char_cells(ch)
            if ch == " ":
                assert cells == []
            else:
                assert len(cells) > 0


class TestOrientedBoundingBox:
    def test_glyph_box(self):
        mesh, _ = ms.text_to_3d(WatermarkSpec("I", 4.0, 0.5))
        box = ms.oriented_bounding_box(mesh)
        assert np.allclose(box.center, 0.0, atol=1e-12)
        assert np.isclose(box.half_extents[1], 2.0)
        assert np.isclose(box.half_extents[2], 0.25)
        assert np.allclose(box.rotation, np.eye(3))

    def test_unit_cube(self, cube):
        box = ms.oriented_bounding_box(cube)
        assert np.allclose(box.half_extents, 0.5)

    def test_rotated_content_grows_volume(self, glyph_w):
        c, s = np.cos(0.7), np.sin(0.7)
        rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
        rotated = glyph_w.transformed(rotation=rot)
        assert (ms.oriented_bounding_box(rotated).volume()
                >= ms.oriented_bounding_box(glyph_w).volume() - 1e-9)

    def test_contains_all_vertices(self, glyph_w):
        box = ms.oriented_bounding_box(glyph_w)
        assert bool(np.all(box.contains(glyph_w.vertices, slack=1e-9)))
