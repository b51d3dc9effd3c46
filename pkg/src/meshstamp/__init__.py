"""meshstamp: automatic visible 3D text watermarking for triangle meshes."""

from .mesh import (
    Mesh,
    MeshError,
    SurfacePoint,
    SurfaceSamples,
    boundary_edge_count,
    connected_components,
    is_watertight,
    normalize_model,
    surface_sample,
)
from .objio import ObjParseError, parse_obj, read_obj_file, write_obj, write_obj_file
from .bvh import ClosestHit, RayHit, SpatialIndex
from .glyphs import BoxGeom, WatermarkSpec, oriented_bounding_box, text_to_3d
from .placement import (CandidateBox, OptimizerOptions, init_candidates,
                        optimize, posed_watermark_mesh)
from .filtering import FilterConfig, run_filter_cascade
from .csg import CsgResult, boolean_op, curve_matching_fuse, extrude_along
from .metrics import MetricsReport, ViewSet, evaluate_all
from .attacks import AttackSpec, crop_attack, removal_attack
from .pipeline import PipelineConfig, PipelineError, PipelineOutcome, watermark_mesh

__all__ = [
    "CandidateBox",
    "OptimizerOptions",
    "init_candidates",
    "optimize",
    "posed_watermark_mesh",
    "FilterConfig",
    "run_filter_cascade",
    "CsgResult",
    "boolean_op",
    "curve_matching_fuse",
    "extrude_along",
    "MetricsReport",
    "ViewSet",
    "evaluate_all",
    "AttackSpec",
    "crop_attack",
    "removal_attack",
    "PipelineConfig",
    "PipelineError",
    "PipelineOutcome",
    "watermark_mesh",
    "Mesh",
    "MeshError",
    "SurfacePoint",
    "SurfaceSamples",
    "boundary_edge_count",
    "connected_components",
    "is_watertight",
    "normalize_model",
    "surface_sample",
    "ObjParseError",
    "parse_obj",
    "read_obj_file",
    "write_obj",
    "write_obj_file",
    "ClosestHit",
    "RayHit",
    "SpatialIndex",
    "BoxGeom",
    "WatermarkSpec",
    "oriented_bounding_box",
    "text_to_3d",
]

__version__ = "0.1.0"
