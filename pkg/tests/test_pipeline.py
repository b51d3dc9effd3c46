import numpy as np
import pytest

import meshstamp as ms
from meshstamp.mesh import boundary_edge_count, is_watertight, normalize_model
from meshstamp.metrics import ipe
from meshstamp.pipeline import (decimate_by_clustering, read_sidecar,
                                watermark_mesh, write_sidecar)
from meshstamp.shapes import make_uv_sphere


class TestDecimation:
    def test_reduces_below_cap(self, sphere30):
        out = decimate_by_clustering(sphere30, 800)
        assert out.n_vertices <= 800
        assert out.n_faces > 0
        assert out.total_area() > 0.5 * sphere30.total_area()

    def test_untouched_below_cap(self, sphere30):
        assert decimate_by_clustering(sphere30, 10_000) is sphere30

    def test_queries_still_work(self, sphere30):
        work = decimate_by_clustering(sphere30, 600)
        index = ms.SpatialIndex(work)
        hit = index.closest_point(np.array([0.0, 0.0, 20.0]))
        assert 4.0 < hit.distance < 6.0  # roughly 20 - radius


def test_pipeline_with_vertex_cap(sphere30):
    """Poses found on the decimated mesh still emboss the full model."""
    config = ms.PipelineConfig(input_path="-", output_path="-", text="A",
                               size=2.5, vertex_cap=1200)
    outcome = watermark_mesh(sphere30, config)
    assert outcome.manifest["h_f"] >= 1
    assert is_watertight(outcome.mesh)
    # The output refines the full-resolution model, not the work mesh.
    assert outcome.mesh.n_vertices > 1200


def test_pipeline_deboss(slab30):
    config = ms.PipelineConfig(input_path="-", output_path="-", text="OK",
                               size=3.0, mode="deboss", H_s=60)
    outcome = watermark_mesh(slab30, config)
    model = normalize_model(slab30, config.model_scale)
    assert outcome.mesh.signed_volume() < model.signed_volume()
    assert boundary_edge_count(outcome.mesh) == 0
    assert ipe(model, outcome.mesh) == 0


def test_pipeline_errors_when_nothing_fits(sphere30):
    # A mark far too large for the curvature: the loss gate empties the set.
    config = ms.PipelineConfig(input_path="-", output_path="-",
                               text="WATERMARK", size=8.0, H_s=30, steps=40)
    with pytest.raises(ms.PipelineError):
        watermark_mesh(sphere30, config)


def test_sidecar_roundtrip(tmp_path):
    labels = np.asarray(["target", "watermark_0_top", "watermark_0_side"],
                        dtype=object)
    path = tmp_path / "x.labels"
    write_sidecar(path, labels)
    back = read_sidecar(path, n_faces=3)
    assert list(back) == list(labels)


@pytest.mark.parametrize("content,err", [
    ("0 target\n0 target\n", "duplicate"),
    ("0 target\n2 target\n", "contiguous"),
    ("0\n", "expected"),
    ("", "empty"),
])
def test_sidecar_corruption_detected(tmp_path, content, err):
    path = tmp_path / "bad.labels"
    path.write_text(content)
    with pytest.raises(ValueError, match=err):
        read_sidecar(path)


def test_config_validation():
    with pytest.raises(ValueError):
        ms.PipelineConfig(size=-1)
    with pytest.raises(ValueError):
        ms.PipelineConfig(mode="engrave")
