"""End-to-end watermarking pipeline and its artifacts.

Stages: normalize, (optional) decimate for candidate generation, seed
candidate boxes, optimize poses, run the filtering cascade, and fuse the
surviving watermarks into the full-resolution model. Produces the
watermarked mesh, per-face provenance labels, a deterministic run manifest,
and wall-clock timings per stage.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .bvh import SpatialIndex
from .csg import curve_matching_fuse
from .filtering import FilterConfig, run_filter_cascade
from .glyphs import BoxGeom, WatermarkSpec, oriented_bounding_box, text_to_3d
from .mesh import Mesh, normalize_model
from .placement import (CandidateBox, OptimizerOptions, init_candidates,
                        optimize, posed_watermark_mesh)


class PipelineError(RuntimeError):
    """Raised when the pipeline cannot produce a watermarked model."""


@dataclass
class PipelineConfig:
    """All pipeline tunables; field names double as config-file keys."""

    input_path: str = ""
    output_path: str = "watermarked.obj"
    text: str = "watermark"
    size: float = 4.0
    thickness: float = 0.5
    model_scale: float = 30.0
    H_s: int = 300
    H_r: float = 1.0
    J: int = 179
    steps: int = 200
    stop_loss: float = 0.005
    learning_rate: float = 0.05
    loss_threshold: float = 0.005
    roughness_threshold: float = 1.25
    angle_increment: float = 30.0
    extrude_strength: float = 0.05
    mode: str = "emboss"
    seed: int = 42
    vertex_cap: int = 80000

    def __post_init__(self):
        numeric = ("size", "thickness", "model_scale", "H_s", "H_r", "J",
                   "steps", "stop_loss", "learning_rate", "loss_threshold",
                   "roughness_threshold", "angle_increment",
                   "extrude_strength", "vertex_cap")
        for name in numeric:
            if getattr(self, name) <= 0:
                raise ValueError(f"config field {name} must be positive")
        if self.mode not in ("emboss", "deboss"):
            raise ValueError(f"mode must be emboss or deboss, got {self.mode!r}")


@dataclass
class PipelineOutcome:
    """Everything a pipeline run produces, in memory."""

    mesh: Mesh
    labels: np.ndarray
    boxes: list[BoxGeom]
    candidates: list[CandidateBox]
    final_candidates: list[CandidateBox]
    manifest: dict
    timings: dict = field(default_factory=dict)


def decimate_by_clustering(mesh: Mesh, vertex_cap: int) -> Mesh:
    """Vertex-clustering decimation down to at most ``vertex_cap`` vertices.

    Vertices are snapped to a uniform grid (cell size grown until the count
    fits), clusters are replaced by their mean, and degenerate faces drop.
    """
    if mesh.n_vertices <= vertex_cap:
        return mesh
    lo, hi = mesh.aabb()
    extent = float((hi - lo).max())
    cells = int(np.ceil((vertex_cap / 2.0) ** (1.0 / 3.0)))
    while True:
        cell = extent / cells
        keys = np.floor((mesh.vertices - lo) / cell).astype(np.int64)
        _, first, inverse = np.unique(keys, axis=0, return_index=True,
                                      return_inverse=True)
        if first.size <= vertex_cap:
            break
        cells = max(2, int(cells * 0.8))
    n_clusters = first.size
    sums = np.zeros((n_clusters, 3))
    counts = np.zeros(n_clusters)
    np.add.at(sums, inverse, mesh.vertices)
    np.add.at(counts, inverse, 1.0)
    new_v = sums / counts[:, None]
    new_f = inverse[mesh.faces]
    ok = ((new_f[:, 0] != new_f[:, 1]) & (new_f[:, 1] != new_f[:, 2])
          & (new_f[:, 0] != new_f[:, 2]))
    return Mesh(new_v, new_f[ok])


def watermark_mesh(mesh: Mesh, config: PipelineConfig | None = None) -> PipelineOutcome:
    """Run the full watermarking pipeline on an in-memory mesh.

    Raises:
        PipelineError: When no candidate survives seeding or filtering, or
            nothing can be fused.
        ValueError: For invalid watermark text (unsupported characters).
    """
    config = config or PipelineConfig()
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    model = normalize_model(mesh, config.model_scale)
    work = decimate_by_clustering(model, config.vertex_cap)
    timings["normalize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    spec = WatermarkSpec(config.text, config.size, config.thickness)
    glyph, _ = text_to_3d(spec)
    template = oriented_bounding_box(glyph)
    work_index = SpatialIndex(work)
    candidates = init_candidates(work, template, config.H_s, config.H_r,
                                 seed=config.seed)
    timings["initialize"] = time.perf_counter() - t0
    if not candidates:
        raise PipelineError("candidate seeding produced no boxes")

    t0 = time.perf_counter()
    opts = OptimizerOptions(max_steps=config.steps,
                            stop_mean_loss=config.stop_loss,
                            learning_rate=config.learning_rate,
                            probe_count=config.J)
    optimized = optimize(candidates, work_index, opts)
    timings["finetune"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fconfig = FilterConfig(loss_threshold=config.loss_threshold,
                           roughness_threshold=config.roughness_threshold,
                           angle_increment=config.angle_increment,
                           seed=config.seed)
    final, stage_counts = run_filter_cascade(optimized, work, work_index, fconfig)
    timings["filter"] = time.perf_counter() - t0
    if not final:
        raise PipelineError(
            "no candidate survived filtering; try a smaller watermark size "
            "or a looser loss threshold")

    t0 = time.perf_counter()
    posed = [(posed_watermark_mesh(c, glyph, template), c.geom) for c in final]
    fused, labels, skipped = curve_matching_fuse(
        model, posed, strength=config.extrude_strength, mode=config.mode)
    timings["emboss"] = time.perf_counter() - t0
    kept = [c for i, c in enumerate(final) if i not in set(skipped)]
    if not kept:
        raise PipelineError("every watermark was skipped during fusion")
    if skipped:
        # Renumber the surviving watermark labels densely so they align
        # with the recorded box list.
        dense = {old: new for new, old in enumerate(
            i for i in range(len(final)) if i not in set(skipped))}
        remap = {}
        for old, new in dense.items():
            remap[f"watermark_{old}_top"] = f"watermark_{new}_top"
            remap[f"watermark_{old}_side"] = f"watermark_{new}_side"
        labels = np.asarray([remap.get(str(l), str(l)) for l in labels],
                            dtype=object)

    boxes = [c.geom for c in kept]
    manifest = {
        "config": asdict(config),
        "H_sampled": config.H_s,
        "H": len(candidates),
        "losses": [round(float(c.loss), 12) for c in optimized],
        "filter_counts": stage_counts,
        "skipped_watermarks": skipped,
        "h_f": len(boxes),
        "watermarks": [
            {
                "center": [float(x) for x in c.geom.center],
                "half_extents": [float(x) for x in c.geom.half_extents],
                "rotation": [[float(x) for x in row] for row in c.geom.rotation],
                "loss": float(c.loss),
                "candidate_index": c.index,
            }
            for c in kept
        ],
    }
    return PipelineOutcome(mesh=fused, labels=labels, boxes=boxes,
                           candidates=optimized, final_candidates=kept,
                           manifest=manifest, timings=timings)


def boxes_from_manifest(manifest: dict) -> list[BoxGeom]:
    """Reconstruct the final watermark boxes recorded in a run manifest."""
    return [BoxGeom(center=np.asarray(w["center"]),
                    half_extents=np.asarray(w["half_extents"]),
                    rotation=np.asarray(w["rotation"]))
            for w in manifest.get("watermarks", [])]


def write_sidecar(path, labels: np.ndarray) -> None:
    """Write the provenance sidecar: one ``face_index label`` line per face."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(labels):
            fh.write(f"{i} {lab}\n")


def read_sidecar(path, n_faces: int | None = None) -> np.ndarray:
    """Read a provenance sidecar back into a per-face label array.

    Raises:
        ValueError: If lines are malformed or indices do not cover
            0..n-1 exactly once (optionally checked against ``n_faces``).
    """
    entries: dict[int, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"sidecar line {lineno}: expected 'index label'")
            try:
                idx = int(parts[0])
            except ValueError:
                raise ValueError(f"sidecar line {lineno}: bad face index") from None
            if idx in entries:
                raise ValueError(f"sidecar line {lineno}: duplicate face index {idx}")
            entries[idx] = parts[1]
    if not entries:
        raise ValueError("sidecar is empty")
    count = max(entries) + 1
    if sorted(entries) != list(range(count)):
        raise ValueError("sidecar face indices are not contiguous from 0")
    if n_faces is not None and count != n_faces:
        raise ValueError(f"sidecar covers {count} faces, mesh has {n_faces}")
    return np.asarray([entries[i] for i in range(count)], dtype=object)
