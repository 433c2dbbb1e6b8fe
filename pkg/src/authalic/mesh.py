"""Triangle-mesh data model, file I/O, and synthetic test meshes.

A mesh is stored as a :class:`SimplicialSurface`: an immutable bundle of
vertex coordinates, oriented triangular faces (0-based indices), and the
derived edge set and face areas.  Construction validates that the surface
is a closed 2-manifold of genus zero, which every algorithm downstream
assumes.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import MeshFormatError, MeshTopologyError

SPHERE_AREA = 4.0 * np.pi


@dataclass(frozen=True)
class SimplicialSurface:
    """Genus-zero closed triangle mesh with derived quantities.

    Attributes
    ----------
    vertices : (n, 3) float array
    faces : (m, 3) int array
        Oriented index triples, 0-based.
    edges : (e, 2) int array
        Undirected edges as sorted pairs, lexicographically ordered.
    face_areas : (m,) float array
    total_area : float
    """

    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    face_areas: np.ndarray
    total_area: float

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def with_vertices(self, vertices: np.ndarray, genus_check: str = "error") -> "SimplicialSurface":
        """Rebuild the surface with new vertex positions, same faces."""
        return build_surface(vertices, self.faces, genus_check=genus_check)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def triangle_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Unsigned area of each face: half the cross-product norm of two edges."""
    p = vertices[faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def build_surface(vertices, faces, genus_check: str = "error") -> SimplicialSurface:
    """Validate arrays and derive edges/areas.

    Parameters
    ----------
    vertices, faces : array_like
    genus_check : {"error", "warn"}
        Whether a non-zero genus aborts construction or only warns.
        Non-manifold or boundary edges are always hard errors.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise MeshFormatError(f"vertices must be (n, 3), got {vertices.shape}")
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise MeshFormatError(f"faces must be (m, 3), got {faces.shape}")
    if not np.isfinite(vertices).all():
        raise MeshFormatError("non-finite vertex coordinate")
    n = vertices.shape[0]
    if faces.size and (faces.min() < 0 or faces.max() >= n):
        raise MeshFormatError("face index out of range")
    degenerate = (
        (faces[:, 0] == faces[:, 1])
        | (faces[:, 1] == faces[:, 2])
        | (faces[:, 0] == faces[:, 2])
    )
    if degenerate.any():
        raise MeshTopologyError(f"degenerate face (repeated vertex) at index {int(np.flatnonzero(degenerate)[0])}")

    pairs = faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    pairs = np.sort(pairs, axis=1)
    edges, counts = np.unique(pairs, axis=0, return_counts=True)
    if (counts > 2).any():
        e = edges[np.flatnonzero(counts > 2)[0]]
        raise MeshTopologyError(f"non-manifold edge {tuple(int(v) for v in e)} shared by >2 faces")
    if (counts == 1).any():
        e = edges[np.flatnonzero(counts == 1)[0]]
        raise MeshTopologyError(f"open surface: boundary edge {tuple(int(v) for v in e)}")

    euler = n - edges.shape[0] + faces.shape[0]
    if euler != 2:
        genus = (2 - euler) / 2
        msg = f"surface is not genus zero (V-E+F = {euler}, genus {genus:g})"
        if genus_check == "warn":
            warnings.warn(msg, stacklevel=2)
        else:
            raise MeshTopologyError(msg)

    areas = triangle_areas(vertices, faces)
    if (areas <= 0.0).any() or not np.isfinite(areas).all():
        raise MeshTopologyError(f"zero-area face at index {int(np.flatnonzero(~(areas > 0))[0])}")

    return SimplicialSurface(
        vertices=_freeze(vertices),
        faces=_freeze(faces),
        edges=_freeze(edges),
        face_areas=_freeze(areas),
        total_area=float(areas.sum()),
    )


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def _detect_format(path: str) -> str:
    ext = os.path.splitext(path)[1].lower()
    if ext == ".obj":
        return "obj"
    if ext == ".off":
        return "off"
    raise MeshFormatError(f"cannot infer mesh format from extension {ext!r}")


def load_mesh(path, fmt: str = "auto", genus_check: str = "error") -> SimplicialSurface:
    """Load a triangular OBJ or OFF file.

    Only `v x y z` and `f i j k` records are honored in OBJ files
    (texture/normal references like ``f 1/2/3`` are stripped to the vertex
    index); OFF files must carry the standard ``OFF`` header and counts
    line.  Faces with more or fewer than three vertices are rejected.
    """
    path = os.fspath(path)
    if fmt == "auto":
        fmt = _detect_format(path)
    if fmt == "obj":
        verts, faces = _parse_obj(path)
    elif fmt == "off":
        verts, faces = _parse_off(path)
    else:
        raise MeshFormatError(f"unknown mesh format {fmt!r}")
    return build_surface(verts, faces, genus_check=genus_check)


def _parse_obj(path):
    verts, faces = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] == "v":
                if len(tok) < 4:
                    raise MeshFormatError(f"{path}:{lineno}: malformed vertex line")
                try:
                    verts.append([float(t) for t in tok[1:4]])
                except ValueError as exc:
                    raise MeshFormatError(f"{path}:{lineno}: malformed vertex line") from exc
            elif tok[0] == "f":
                refs = tok[1:]
                if len(refs) != 3:
                    raise MeshFormatError(f"{path}:{lineno}: non-triangle face ({len(refs)} vertices)")
                try:
                    idx = [int(r.split("/", 1)[0]) for r in refs]
                except ValueError as exc:
                    raise MeshFormatError(f"{path}:{lineno}: malformed face line") from exc
                if any(i < 1 for i in idx):
                    raise MeshFormatError(f"{path}:{lineno}: face index out of range")
                faces.append([i - 1 for i in idx])
            # all other record types (vn, vt, o, g, s, ...) are ignored
    if not verts or not faces:
        raise MeshFormatError(f"{path}: no triangle mesh found")
    return np.array(verts), np.array(faces)


def _parse_off(path):
    with open(path) as fh:
        tokens = []
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0].upper() != "OFF":
        raise MeshFormatError(f"{path}: missing OFF header")
    body = tokens[1:]
    if len(body) < 3:
        raise MeshFormatError(f"{path}: missing counts line")
    try:
        nv, nf = int(body[0]), int(body[1])
    except ValueError as exc:
        raise MeshFormatError(f"{path}: malformed counts line") from exc
    pos = 3  # vertex, face, edge counts consumed
    need = nv * 3
    if len(body) < pos + need:
        raise MeshFormatError(f"{path}: truncated vertex block")
    try:
        verts = np.array([float(t) for t in body[pos:pos + need]]).reshape(nv, 3)
    except ValueError as exc:
        raise MeshFormatError(f"{path}: malformed vertex coordinate") from exc
    pos += need
    faces = []
    for _ in range(nf):
        if pos >= len(body):
            raise MeshFormatError(f"{path}: truncated face block")
        try:
            cnt = int(body[pos])
        except ValueError as exc:
            raise MeshFormatError(f"{path}: malformed face record") from exc
        if cnt != 3:
            raise MeshFormatError(f"{path}: non-triangle face ({cnt} vertices)")
        try:
            faces.append([int(t) for t in body[pos + 1:pos + 4]])
        except ValueError as exc:
            raise MeshFormatError(f"{path}: malformed face record") from exc
        pos += 4
    return verts, np.array(faces)


def save_mesh(vertices, faces, path, fmt: str = "auto") -> None:
    """Write vertices/faces as OBJ or OFF with full float64 precision."""
    path = os.fspath(path)
    if fmt == "auto":
        fmt = _detect_format(path)
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    with open(path, "w") as fh:
        if fmt == "obj":
            for v in vertices:
                fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            for f in faces:
                fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
        elif fmt == "off":
            pairs = np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
            n_edges = np.unique(pairs, axis=0).shape[0]
            fh.write("OFF\n")
            fh.write(f"{len(vertices)} {len(faces)} {n_edges}\n")
            for v in vertices:
                fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            for f in faces:
                fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
        else:
            raise MeshFormatError(f"unknown mesh format {fmt!r}")


# ---------------------------------------------------------------------------
# Synthetic meshes
# ---------------------------------------------------------------------------

# Regular icosahedron with vertices on the unit sphere, outward-oriented faces.
_PHI = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
    (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
    (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
], dtype=np.float64)
_ICO_VERTS /= np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)
_ICO_FACES = np.array([
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
], dtype=np.int64)


def make_icosphere(subdivisions: int, radii=(1.0, 1.0, 1.0)) -> SimplicialSurface:
    """Subdivided icosahedron, optionally scaled per axis into an ellipsoid.

    Each subdivision splits every face into four via edge midpoints
    re-projected to the unit sphere, so counts grow as V' = V + E,
    F' = 4 F.  Vertex ordering is deterministic: base vertices first,
    then midpoints in face-visit order.
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    radii = np.asarray(radii, dtype=np.float64)
    if radii.shape != (3,) or (radii <= 0).any():
        raise ValueError("radii must be three positive scales")

    verts = [v for v in _ICO_VERTS]
    faces = _ICO_FACES.copy()
    for _ in range(subdivisions):
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        new_faces = []
        for i, j, k in faces:
            ij, jk, ki = mid(i, j), mid(j, k), mid(k, i)
            new_faces += [(i, ij, ki), (j, jk, ij), (k, ki, jk), (ij, jk, ki)]
        faces = np.array(new_faces, dtype=np.int64)

    vertices = np.array(verts) * radii
    return build_surface(vertices, faces)


def vertex_normals(surface: SimplicialSurface) -> np.ndarray:
    """Unit vertex normals: unweighted mean of incident face unit normals."""
    p = surface.vertices[surface.faces]
    fn = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    fn /= np.linalg.norm(fn, axis=1, keepdims=True)
    acc = np.zeros_like(surface.vertices)
    for c in range(3):
        np.add.at(acc, surface.faces[:, c], fn)
    norms = np.linalg.norm(acc, axis=1, keepdims=True)
    if (norms < 1e-14).any():
        raise MeshTopologyError("vertex with vanishing normal")
    return acc / norms


def perturb_vertices(surface: SimplicialSurface, sigma_noise: float, seed: int) -> SimplicialSurface:
    """Displace each vertex along its normal by N(0, sigma_noise^2) noise."""
    if sigma_noise < 0:
        raise ValueError("sigma_noise must be >= 0")
    rng = np.random.default_rng(seed)
    amplitude = rng.normal(0.0, sigma_noise, surface.n_vertices)
    moved = surface.vertices + amplitude[:, None] * vertex_normals(surface)
    return surface.with_vertices(moved)


def normalize_area(surface: SimplicialSurface, target: float = SPHERE_AREA) -> SimplicialSurface:
    """Uniformly rescale so the total surface area equals `target`."""
    scale = np.sqrt(target / surface.total_area)
    return surface.with_vertices(surface.vertices * scale)


# ---------------------------------------------------------------------------
# Landmark files
# ---------------------------------------------------------------------------

def parse_landmarks(path, n_source: int | None = None, n_target: int | None = None) -> np.ndarray:
    """Read landmark pairs: one 1-based `i j` pair per line, `#` comments.

    Returns a (k, 2) int array of 0-based (source, target) vertex indices.
    """
    pairs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if len(tok) != 2:
                raise MeshFormatError(f"{path}:{lineno}: expected two indices per line")
            try:
                i, j = int(tok[0]), int(tok[1])
            except ValueError as exc:
                raise MeshFormatError(f"{path}:{lineno}: malformed landmark pair") from exc
            if i < 1 or j < 1:
                raise MeshFormatError(f"{path}:{lineno}: landmark indices are 1-based")
            pairs.append((i - 1, j - 1))
    if not pairs:
        raise MeshFormatError(f"{path}: no landmark pairs found")
    out = np.array(pairs, dtype=np.int64)
    if len({tuple(p) for p in pairs}) != len(pairs):
        raise MeshFormatError(f"{path}: duplicate landmark pair")
    if n_source is not None and (out[:, 0] >= n_source).any():
        raise MeshFormatError(f"{path}: source landmark index out of range")
    if n_target is not None and (out[:, 1] >= n_target).any():
        raise MeshFormatError(f"{path}: target landmark index out of range")
    return out
