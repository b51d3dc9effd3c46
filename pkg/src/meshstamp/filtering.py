"""Candidate filtering cascade.

Reduces the optimized candidate set to the final watermark placement:
alignment-loss threshold, local roughness, saliency veto, overlap removal,
occlusion test, one-per-octant spatial spread, and multi-angle coverage
top-up. Every step is deterministic for a fixed seed; ties break toward the
lowest candidate index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvh import SpatialIndex
from .glyphs import BoxGeom
from .mesh import Mesh
from .metrics import ViewSet, saliency_map, saliency_votes
from .placement import CandidateBox

_COS_45 = np.cos(np.deg2rad(45.0))


@dataclass
class FilterConfig:
    """Thresholds and sampling settings for the filtering cascade."""

    loss_threshold: float = 0.005
    roughness_threshold: float = 1.25
    roughness_samples: int = 32
    occlusion_rays: int = 16
    angle_increment: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.loss_threshold <= 0 or self.roughness_threshold <= 0:
            raise ValueError("thresholds must be positive")
        if 360.0 % self.angle_increment != 0:
            raise ValueError("angle_increment must divide 360")


def filter_by_loss(candidates: list[CandidateBox],
                   threshold: float = 0.005) -> list[CandidateBox]:
    """Keep candidates whose final alignment loss is below the threshold."""
    return [c for c in candidates if c.loss is not None and c.loss < threshold]


def roughness_score(mesh: Mesh, geom: BoxGeom, n: int = 32,
                    seed: int = 0) -> float:
    """Mean inverse cosine between normals of mesh vertices inside the box.

    Averages 1/cos(angle) over all ordered pairs (diagonal included) of up to
    ``n`` sampled vertex normals; the cosine is clamped to [0.05, 1] to keep
    near-orthogonal normal pairs finite. A perfectly flat neighborhood scores
    exactly 1. Returns +inf when the box contains no usable vertices.
    """
    inside = geom.contains(mesh.vertices)
    ids = np.nonzero(inside & ~mesh.degenerate_vertices)[0]
    if ids.size == 0:
        return float("inf")
    if ids.size > n:
        rng = np.random.default_rng(seed)
        ids = ids[np.sort(rng.choice(ids.size, size=n, replace=False))]
    normals = mesh.vertex_normals[ids]
    cos = np.clip(normals @ normals.T, 0.05, 1.0)
    return float(np.mean(1.0 / cos))


def filter_by_roughness(candidates: list[CandidateBox], mesh: Mesh,
                        config: FilterConfig) -> list[CandidateBox]:
    """Keep candidates sitting on locally flat geometry."""
    out = []
    for c in candidates:
        score = roughness_score(mesh, c.geom, config.roughness_samples,
                                seed=config.seed + c.index)
        if score < config.roughness_threshold:
            out.append(c)
    return out


def filter_by_saliency(candidates: list[CandidateBox], mesh: Mesh,
                       smap: np.ndarray | None = None) -> list[CandidateBox]:
    """Reject candidates whose box votes as salient."""
    if not candidates:
        return []
    smap = saliency_map(mesh) if smap is None else smap
    votes = saliency_votes(mesh, [c.geom for c in candidates], smap=smap)
    return [c for c, v in zip(candidates, votes) if v == 0]


def filter_overlaps(candidates: list[CandidateBox], mesh: Mesh,
                    seed: int = 0) -> list[CandidateBox]:
    """Greedily drop boxes sharing mesh vertices with an accepted box.

    Candidates are visited in seed-shuffled order; a candidate is accepted
    iff the set of mesh vertices inside its box is disjoint from those of
    every previously accepted box. The result is returned in candidate-index
    order.
    """
    if not candidates:
        return []
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(candidates))
    inside_sets = [c.geom.contains(mesh.vertices) for c in candidates]
    taken = np.zeros(mesh.n_vertices, dtype=bool)
    accepted: list[CandidateBox] = []
    for k in order:
        mask = inside_sets[k]
        if not np.any(taken & mask):
            accepted.append(candidates[k])
            taken |= mask
    return sorted(accepted, key=lambda c: c.index)


def occlusion_free(geom: BoxGeom, index: SpatialIndex, n_rays: int = 16,
                   direction: np.ndarray | None = None) -> bool:
    """True when no ray from the box front face along ``direction``
    (default: the front normal) hits the mesh."""
    d = geom.front_normal if direction is None else np.asarray(direction)
    origins = geom.front_face_grid(n_rays) + 1e-4 * d
    dirs = np.broadcast_to(d, origins.shape)
    _, faces = index.ray_intersect_many(origins, dirs)
    return bool(np.all(faces < 0))


def filter_occluded(candidates: list[CandidateBox], index: SpatialIndex,
                    n_rays: int = 16) -> list[CandidateBox]:
    """Drop candidates whose outward view is blocked by the model itself."""
    return [c for c in candidates
            if occlusion_free(c.geom, index, n_rays)]


_OCTANT_SIGNS = np.array([[sx, sy, sz]
                          for sx in (-1.0, 1.0)
                          for sy in (-1.0, 1.0)
                          for sz in (-1.0, 1.0)])


def octant_of(point: np.ndarray) -> int:
    """Octant index in the fixed (x, y, z) sign order used by selection."""
    p = np.asarray(point)
    return int((p[0] >= 0) * 4 + (p[1] >= 0) * 2 + (p[2] >= 0))


def select_octants(candidates: list[CandidateBox]) -> list[CandidateBox]:
    """Keep at most one candidate per spatial octant of the centered model.

    Octants are visited in a fixed order. The first pick is the candidate
    whose center direction is closest to its octant's diagonal; later picks
    maximize the minimum distance to the already-selected centers. Ties break
    toward the lowest candidate index.
    """
    buckets: dict[int, list[CandidateBox]] = {}
    for c in candidates:
        buckets.setdefault(octant_of(c.geom.center), []).append(c)
    selected: list[CandidateBox] = []
    for oct_idx in range(8):
        group = buckets.get(oct_idx)
        if not group:
            continue
        if not selected:
            axis = _OCTANT_SIGNS[oct_idx] / np.sqrt(3.0)
            def start_key(c):
                center = c.geom.center
                norm = np.linalg.norm(center)
                cos = center @ axis / norm if norm > 0 else -1.0
                return (-cos, c.index)
            selected.append(min(group, key=start_key))
            continue
        centers = np.array([s.geom.center for s in selected])
        def spread_key(c):
            dmin = float(np.min(np.linalg.norm(centers - c.geom.center, axis=1)))
            return (-dmin, c.index)
        selected.append(min(group, key=spread_key))
    return selected


def covering_watermark(direction: np.ndarray, candidates: list[CandidateBox],
                       index: SpatialIndex, n_rays: int = 16) -> CandidateBox | None:
    """Best candidate facing within 45 degrees of ``direction`` and
    unoccluded from it; None when no candidate qualifies."""
    best = None
    best_key = None
    for c in candidates:
        cos = float(c.geom.front_normal @ direction)
        if cos < _COS_45:
            continue
        if not occlusion_free(c.geom, index, n_rays, direction=direction):
            continue
        key = (-cos, c.index)
        if best_key is None or key < best_key:
            best, best_key = c, key
    return best


def add_multi_angle(all_candidates: list[CandidateBox],
                    selected: list[CandidateBox], index: SpatialIndex,
                    angle_increment: float = 30.0,
                    n_rays: int = 16) -> list[CandidateBox]:
    """Top up the selection so every enumerated view direction is covered.

    A direction is covered when some selected watermark faces within 45
    degrees of it and passes the occlusion ray test from that direction. For
    each uncovered direction the best-facing unselected candidate is added,
    if one qualifies.
    """
    views = ViewSet.around_x_and_z(angle_increment)
    final = list(selected)
    chosen = {c.index for c in selected}
    for d in views.directions:
        if covering_watermark(d, final, index, n_rays) is not None:
            continue
        pool = [c for c in all_candidates if c.index not in chosen]
        extra = covering_watermark(d, pool, index, n_rays)
        if extra is not None:
            final.append(extra)
            chosen.add(extra.index)
    return final


def coverage_report(selected: list[CandidateBox], index: SpatialIndex,
                    angle_increment: float = 30.0,
                    n_rays: int = 16) -> tuple[float, list[bool]]:
    """Fraction of enumerated view directions covered by the selection."""
    views = ViewSet.around_x_and_z(angle_increment)
    flags = [covering_watermark(d, selected, index, n_rays) is not None
             for d in views.directions]
    return (float(np.mean(flags)) if flags else 0.0), flags


def run_filter_cascade(candidates: list[CandidateBox], mesh: Mesh,
                       index: SpatialIndex, config: FilterConfig | None = None,
                       ) -> tuple[list[CandidateBox], dict[str, int]]:
    """Apply the full cascade; returns the final set and per-stage counts."""
    config = config or FilterConfig()
    counts = {"optimized": len(candidates)}
    stage = filter_by_loss(candidates, config.loss_threshold)
    counts["loss"] = len(stage)
    stage = filter_by_roughness(stage, mesh, config)
    counts["roughness"] = len(stage)
    smap = saliency_map(mesh)
    stage = filter_by_saliency(stage, mesh, smap=smap)
    counts["saliency"] = len(stage)
    stage = filter_overlaps(stage, mesh, seed=config.seed)
    counts["overlap"] = len(stage)
    stage = filter_occluded(stage, index, config.occlusion_rays)
    counts["occlusion"] = len(stage)
    pool = stage
    stage = select_octants(stage)
    counts["octant"] = len(stage)
    stage = add_multi_angle(pool, stage, index, config.angle_increment,
                            config.occlusion_rays)
    counts["multi_angle"] = len(stage)
    return stage, counts
