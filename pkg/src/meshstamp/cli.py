"""Command-line interface: watermark, evaluate, and attack subcommands.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 pipeline failure,
4 missing/corrupt provenance sidecar during evaluation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import attacks
from .mesh import MeshError, normalize_model
from .metrics import evaluate_all
from .objio import ObjParseError, read_obj_file, write_obj_file
from .pipeline import (PipelineConfig, PipelineError, boxes_from_manifest,
                       read_sidecar, watermark_mesh, write_sidecar)

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_PIPELINE = 3
EXIT_SIDECAR = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit 2; we reserve that
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _fail(code: int, message: str) -> None:
    print(f"error: {message}", file=sys.stderr)
    sys.exit(code)


def _load_mesh(path: str):
    try:
        return read_obj_file(path)
    except OSError as e:
        _fail(EXIT_IO, f"cannot read {path}: {e}")
    except (ObjParseError, MeshError) as e:
        _fail(EXIT_IO, f"cannot parse {path}: {e}")


def _build_watermark_parser(sub) -> None:
    p = sub.add_parser("watermark", help="embed visible watermarks into an OBJ model")
    p.add_argument("--config", help="JSON config file; flags override its fields")
    defaults = PipelineConfig()
    for f in dataclasses.fields(PipelineConfig):
        kind = type(getattr(defaults, f.name))
        p.add_argument(f"--{f.name}", type=kind if kind is not bool else str,
                       default=None, help=f"default: {getattr(defaults, f.name)!r}")
    p.add_argument("--sidecar_path", default=None,
                   help="provenance sidecar output (default: <output>.labels)")
    p.add_argument("--manifest_path", default=None,
                   help="run manifest output (default: <output>.manifest.json)")
    p.add_argument("--timings_path", default=None,
                   help="stage timings output (default: <output>.timings.json)")


def _config_from_args(args) -> PipelineConfig:
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as e:
            _fail(EXIT_IO, f"cannot read config {args.config}: {e}")
        except json.JSONDecodeError as e:
            _fail(EXIT_IO, f"bad config JSON: {e}")
        known = {f.name for f in dataclasses.fields(PipelineConfig)}
        unknown = set(loaded) - known
        if unknown:
            _fail(EXIT_USAGE, f"unknown config fields: {sorted(unknown)}")
        values.update(loaded)
    for f in dataclasses.fields(PipelineConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    try:
        return PipelineConfig(**values)
    except (TypeError, ValueError) as e:
        _fail(EXIT_USAGE, str(e))


def _cmd_watermark(args) -> int:
    config = _config_from_args(args)
    if not config.input_path:
        _fail(EXIT_USAGE, "input_path is required")
    mesh = _load_mesh(config.input_path)
    try:
        outcome = watermark_mesh(mesh, config)
    except PipelineError as e:
        _fail(EXIT_PIPELINE, str(e))
    except (ValueError, MeshError) as e:
        _fail(EXIT_PIPELINE, str(e))

    out = Path(config.output_path)
    sidecar = Path(args.sidecar_path or f"{config.output_path}.labels")
    manifest = Path(args.manifest_path or out.with_suffix(".manifest.json"))
    timings = Path(args.timings_path or out.with_suffix(".timings.json"))
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_obj_file(out, outcome.mesh)
        write_sidecar(sidecar, outcome.labels)
        manifest.write_text(json.dumps(outcome.manifest, indent=2, sort_keys=True)
                            + "\n", encoding="utf-8")
        timings.write_text(json.dumps(outcome.timings, indent=2, sort_keys=True)
                           + "\n", encoding="utf-8")
    except OSError as e:
        _fail(EXIT_IO, f"cannot write outputs: {e}")
    m = outcome.manifest
    print(f"watermarked {config.input_path}: H={m['H']} candidates, "
          f"h_f={m['h_f']} watermarks, skipped={len(m['skipped_watermarks'])}")
    print(f"wrote {out}, {sidecar}, {manifest}")
    return 0


def _format_table(report: dict) -> str:
    rows = [(k, report[k]) for k in ("wps", "ray", "smse", "ipe", "lce", "se", "h_f")]
    width = max(len(k) for k, _ in rows)
    lines = []
    for k, v in rows:
        if v is None:
            text = "-"
        elif isinstance(v, float):
            text = f"{v:.6g}"
        else:
            text = str(v)
        lines.append(f"{k.upper():<{width + 2}}{text}")
    return "\n".join(lines)


def _cmd_evaluate(args) -> int:
    original = _load_mesh(args.original)
    watermarked = _load_mesh(args.watermarked)
    labels = None
    if args.sidecar:
        try:
            labels = read_sidecar(args.sidecar, n_faces=watermarked.n_faces)
        except OSError as e:
            _fail(EXIT_SIDECAR, f"cannot read sidecar {args.sidecar}: {e}")
        except ValueError as e:
            _fail(EXIT_SIDECAR, f"corrupt sidecar {args.sidecar}: {e}")
    boxes = None
    if args.manifest:
        try:
            with open(args.manifest, encoding="utf-8") as fh:
                manifest = json.load(fh)
            boxes = boxes_from_manifest(manifest)
        except OSError as e:
            _fail(EXIT_IO, f"cannot read manifest {args.manifest}: {e}")
        except (json.JSONDecodeError, KeyError) as e:
            _fail(EXIT_IO, f"bad manifest {args.manifest}: {e}")
        # The pipeline watermarks a normalized copy of the model; apply the
        # same preprocessing to the original so the meshes are comparable.
        scale = manifest.get("config", {}).get("model_scale")
        if scale:
            original = normalize_model(original, float(scale))
    report = evaluate_all(original, watermarked, boxes=boxes, labels=labels,
                          angle_increment=args.angle_increment,
                          n_smse_samples=args.smse_samples, seed=args.seed)
    data = report.as_dict()
    print(_format_table(data))
    if args.report:
        try:
            Path(args.report).write_text(
                json.dumps(data, indent=2, sort_keys=True) + "\n",
                encoding="utf-8")
        except OSError as e:
            _fail(EXIT_IO, f"cannot write report: {e}")
        print(f"wrote {args.report}")
    return 0


def _parse_vec(text: str) -> np.ndarray:
    parts = [float(x) for x in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return np.asarray(parts)


def _cmd_attack(args) -> int:
    mesh = _load_mesh(args.watermarked)
    labels = None
    if args.sidecar:
        try:
            labels = read_sidecar(args.sidecar, n_faces=mesh.n_faces)
        except OSError as e:
            _fail(EXIT_IO, f"cannot read sidecar {args.sidecar}: {e}")
        except ValueError as e:
            _fail(EXIT_IO, f"corrupt sidecar {args.sidecar}: {e}")

    if args.kind == "removal":
        if labels is None:
            _fail(EXIT_USAGE, "removal attack requires --sidecar")
        try:
            attacked, out_labels = attacks.removal_attack(mesh, labels)
        except ValueError as e:
            _fail(EXIT_PIPELINE, str(e))
    else:
        if args.fraction is not None:
            point, normal = attacks.crop_plane_for_fraction(
                mesh, args.fraction, axis=args.axis)
        elif args.plane_point is not None and args.plane_normal is not None:
            point, normal = args.plane_point, args.plane_normal
        else:
            _fail(EXIT_USAGE,
                  "crop needs --fraction or both --plane_point and --plane_normal")
        try:
            attacked, out_labels = attacks.crop_attack(mesh, point, normal, labels)
        except MeshError as e:
            _fail(EXIT_PIPELINE, str(e))

    try:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        write_obj_file(args.output, attacked)
        sidecar_out = args.sidecar_output or f"{args.output}.labels"
        write_sidecar(sidecar_out, out_labels)
    except OSError as e:
        _fail(EXIT_IO, f"cannot write outputs: {e}")
    print(f"{args.kind} attack: {mesh.n_faces} -> {attacked.n_faces} faces; "
          f"wrote {args.output}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="meshstamp",
                     description="Automatic visible 3D text watermarking")
    sub = parser.add_subparsers(dest="command", required=True)

    _build_watermark_parser(sub)

    pe = sub.add_parser("evaluate", help="compute watermark/asset metrics")
    pe.add_argument("original", help="original OBJ path")
    pe.add_argument("watermarked", help="watermarked OBJ path")
    pe.add_argument("--sidecar", help="provenance sidecar (enables LCE)")
    pe.add_argument("--manifest", help="run manifest (enables WPS/Ray/SE)")
    pe.add_argument("--report", help="write the metrics report JSON here")
    pe.add_argument("--angle_increment", type=float, default=30.0)
    pe.add_argument("--smse_samples", type=int, default=100_000)
    pe.add_argument("--seed", type=int, default=42)

    pa = sub.add_parser("attack", help="run a robustness attack")
    pa.add_argument("watermarked", help="watermarked OBJ path")
    pa.add_argument("--kind", choices=("crop", "removal"), required=True)
    pa.add_argument("--sidecar", help="provenance sidecar path")
    pa.add_argument("--output", required=True, help="attacked OBJ output path")
    pa.add_argument("--sidecar_output", help="default: <output>.labels")
    pa.add_argument("--plane_point", type=_parse_vec, default=None)
    pa.add_argument("--plane_normal", type=_parse_vec, default=None)
    pa.add_argument("--fraction", type=float, default=None,
                    help="volume fraction to keep (crop)")
    pa.add_argument("--axis", type=int, choices=(0, 1, 2), default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "watermark":
        return _cmd_watermark(args)
    if args.command == "evaluate":
        return _cmd_evaluate(args)
    return _cmd_attack(args)


if __name__ == "__main__":
    sys.exit(main())
