"""Wavefront OBJ reading and writing for triangle meshes."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh, MeshError

# OBJ directives carrying no geometry we care about.
_IGNORED = {"vn", "vt", "vp", "g", "o", "s", "usemtl", "mtllib", "l", "p"}


class ObjParseError(ValueError):
    """OBJ syntax error, annotated with the 1-based source line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def parse_obj(data: bytes | str) -> Mesh:
    """Parse OBJ text into a triangle mesh.

    Faces with more than three vertices are fan-triangulated from their first
    vertex. Texture/normal references (``v/vt/vn``) are parsed and discarded.
    Negative (relative) indices are resolved against the current vertex count.

    Args:
        data: OBJ file content, bytes (UTF-8) or str.

    Returns:
        Mesh with 0-based face indices and derived normals/areas.

    Raises:
        ObjParseError: On malformed ``v``/``f`` lines, with line number.
        MeshError: On out-of-range face indices or an empty mesh.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8", errors="replace")
    else:
        text = data
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError(lineno, f"vertex needs 3 coordinates: {raw!r}")
            try:
                x, y, z = float(parts[1]), float(parts[2]), float(parts[3])
            except ValueError:
                raise ObjParseError(lineno, f"bad vertex coordinate: {raw!r}") from None
            vertices.append((x, y, z))
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError(lineno, f"face needs at least 3 indices: {raw!r}")
            idx: list[int] = []
            for token in parts[1:]:
                head = token.split("/", 1)[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ObjParseError(lineno, f"bad face index {token!r}") from None
                if i == 0:
                    raise ObjParseError(lineno, "face index 0 is invalid (OBJ is 1-based)")
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            for k in range(1, len(idx) - 1):
                faces.append((idx[0], idx[k], idx[k + 1]))
        elif tag in _IGNORED:
            continue
        # Unknown directives are ignored for interoperability.
    if not vertices:
        raise MeshError("empty mesh: no vertices in OBJ input")
    if not faces:
        raise MeshError("empty mesh: no faces in OBJ input")
    v = np.asarray(vertices, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int64)
    if f.min() < 0 or f.max() >= len(v):
        raise MeshError(f"face index out of range: max {int(f.max()) + 1} of {len(v)} vertices")
    return Mesh(v, f)


def write_obj(mesh: Mesh, comment: str | None = None) -> bytes:
    """Serialize a mesh as OBJ text.

    Round-trips through ``parse_obj`` within 1e-6 on vertex coordinates and
    exactly on face indices. Output is deterministic for identical input.

    Raises:
        MeshError: If the mesh has no faces.
    """
    if mesh.n_faces == 0:
        raise MeshError("refusing to write an empty mesh")
    lines = []
    if comment:
        for c in comment.splitlines():
            lines.append(f"# {c}")
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.9g} {y:.9g} {z:.9g}")
    for a, b, c in mesh.faces + 1:
        lines.append(f"f {a} {b} {c}")
    lines.append("")
    return "\n".join(lines).encode("utf-8")


def read_obj_file(path) -> Mesh:
    with open(path, "rb") as fh:
        return parse_obj(fh.read())


def write_obj_file(path, mesh: Mesh, comment: str | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(write_obj(mesh, comment))
