import numpy as np
import pytest

import meshstamp as ms
from meshstamp.mesh import MeshError
from meshstamp.objio import ObjParseError, parse_obj, write_obj

CUBE_OBJ = """
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 3 4 8
f 3 8 7
f 2 3 7
f 2 7 6
f 4 1 5
f 4 5 8
"""


def test_parse_cube_counts():
    mesh = parse_obj(CUBE_OBJ)
    assert mesh.n_vertices == 8
    assert mesh.n_faces == 12


def test_quad_fan_triangulation():
    text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
    mesh = parse_obj(text)
    assert mesh.n_faces == 2
    assert mesh.faces.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_comments_only_is_empty_mesh_error():
    with pytest.raises(MeshError):
        parse_obj("# nothing here\n# still nothing\n")


def test_slash_suffixes_ignored():
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf 1/1/1 2/1/1 3/1/1\n"
    mesh = parse_obj(text)
    assert mesh.n_faces == 1


def test_crlf_and_ignored_directives():
    text = "o thing\r\ng grp\r\ns off\r\nusemtl m\r\nv 0 0 0\r\nv 1 0 0\r\nv 0 1 0\r\nf 1 2 3\r\n"
    mesh = parse_obj(text)
    assert mesh.n_faces == 1


def test_negative_relative_indices():
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n"
    assert parse_obj(text).n_faces == 1


def test_malformed_vertex_reports_line_number():
    text = "v 0 0 0\nv nope 0 0\n"
    with pytest.raises(ObjParseError) as exc:
        parse_obj(text)
    assert exc.value.line_number == 2


def test_face_index_out_of_range():
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"
    with pytest.raises(MeshError):
        parse_obj(text)


def test_write_refuses_empty():
    mesh = ms.Mesh(np.zeros((3, 3)), np.zeros((0, 3), dtype=int))
    with pytest.raises(MeshError):
        write_obj(mesh)


def test_cube_write_format(cube):
    text = write_obj(cube).decode()
    lines = [l for l in text.splitlines() if l]
    assert sum(l.startswith("v ") for l in lines) == 8
    assert sum(l.startswith("f ") for l in lines) == 12


def test_roundtrip_random_mesh(random_blob):
    assert random_blob.n_faces >= 100
    back = parse_obj(write_obj(random_blob))
    assert np.allclose(back.vertices, random_blob.vertices, atol=1e-6)
    assert np.array_equal(back.faces, random_blob.faces)


def test_write_deterministic(random_blob):
    assert write_obj(random_blob) == write_obj(random_blob)
