"""Triangle-mesh loaders: ASCII/binary STL and triangulated OBJ.

Files are assumed to be authored in millimeters unless another scale is
given; the default scale of 0.001 converts to the meters used internally.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .geometry import TriMesh


def load_mesh(path, scale: float = 0.001) -> TriMesh:
    """Load an STL (ASCII or binary) or OBJ file into a welded TriMesh."""
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".obj":
        v, f = _read_obj(path)
    elif ext == ".stl":
        v, f = _read_stl(path)
    else:
        raise ValueError(f"unsupported mesh format: {path.suffix!r}")
    v = v * float(scale)
    return weld_mesh(v, f)


def weld_mesh(vertices, faces, decimals: int = 9) -> TriMesh:
    """Merge duplicated vertices (rounded to `decimals`) and drop slivers."""
    v = np.asarray(vertices, dtype=float).reshape(-1, 3)
    f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    rounded = np.round(v, decimals)
    uniq, inverse = np.unique(rounded, axis=0, return_inverse=True)
    f = inverse[f]
    good = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 2] != f[:, 0])
    return TriMesh(uniq, f[good])


def _read_stl(path: Path):
    raw = path.read_bytes()
    if _looks_binary_stl(raw):
        return _read_stl_binary(raw)
    return _read_stl_ascii(raw.decode("ascii", errors="replace"))


def _looks_binary_stl(raw: bytes) -> bool:
    if len(raw) < 84:
        return False
    (n,) = struct.unpack_from("<I", raw, 80)
    if len(raw) == 84 + 50 * n:
        return True
    # Some ASCII exporters start with whitespace; binary headers rarely
    # begin with the literal word "solid".
    return not raw.lstrip()[:5].lower().startswith(b"solid")


def _read_stl_binary(raw: bytes):
    (n,) = struct.unpack_from("<I", raw, 80)
    data = np.frombuffer(raw, dtype=np.uint8, count=50 * n, offset=84)
    records = data.reshape(n, 50)
    floats = records[:, :48].copy().view("<f4").reshape(n, 12)
    tri = floats[:, 3:12].astype(float).reshape(n, 3, 3)
    v = tri.reshape(-1, 3)
    f = np.arange(3 * n, dtype=np.int64).reshape(n, 3)
    return v, f


def _read_stl_ascii(text: str):
    verts = []
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 4 and parts[0].lower() == "vertex":
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
    if len(verts) % 3 != 0:
        raise ValueError("ASCII STL vertex count is not a multiple of 3")
    v = np.asarray(verts, dtype=float)
    n = len(v) // 3
    f = np.arange(3 * n, dtype=np.int64).reshape(n, 3)
    return v, f


def _read_obj(path: Path):
    verts = []
    faces = []
    for line in path.read_text().splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
        elif parts[0] == "f":
            idx = []
            for token in parts[1:]:
                i = int(token.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            if len(idx) != 3:
                raise ValueError("OBJ mesh must be triangulated")
            faces.append(idx)
    return np.asarray(verts, dtype=float), np.asarray(faces, dtype=np.int64)


def save_stl_ascii(mesh: TriMesh, path, scale: float = 1000.0) -> None:
    """Write an ASCII STL (scaled back to millimeters by default)."""
    lines = ["solid trigrasp"]
    for k in range(mesh.n_faces):
        n = mesh.face_normals[k]
        lines.append(f"  facet normal {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}")
        lines.append("    outer loop")
        for vi in mesh.faces[k]:
            p = mesh.vertices[vi] * scale
            lines.append(f"      vertex {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid trigrasp")
    Path(path).write_text("\n".join(lines) + "\n")
