"""Indexed polygonal 2-manifold meshes: ingestion, validation, generic orientation.

Faces are kept as polygons (no triangulation) because downstream slicing
classifies wall pieces as trapezoids vs triangles. Orientability is not
required: Moebius-band style inputs are accepted.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .geom import angle_between, fit_plane, polygon_area3, polygon_is_simple2, random_rotation, unit

MAX_ORIENT_RETRIES = 64


class MeshFormatError(ValueError):
    """Raised when an input file cannot be parsed; carries a line number."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class TopologyError(ValueError):
    """Raised for non-manifold connectivity (an edge with 3+ incident faces)."""


class OrientationError(RuntimeError):
    """Raised when no generic rotation is found after the retry budget."""


def _edge_key(a, b):
    return (a, b) if a < b else (b, a)


@dataclass
class Manifold:
    """Compact polyhedral 2-manifold with boundary, faces as planar polygons."""

    vertices: np.ndarray                  # (n, 3) float
    faces: list[list[int]]                # vertex index loops
    edge_adjacency: dict = field(default_factory=dict)   # edge key -> [face ids]
    boundary_edges: set = field(default_factory=set)

    @classmethod
    def from_arrays(cls, vertices, faces):
        vertices = np.asarray(vertices, dtype=float)
        faces = [list(map(int, f)) for f in faces]
        adjacency: dict = {}
        for fi, f in enumerate(faces):
            for k in range(len(f)):
                e = _edge_key(f[k], f[(k + 1) % len(f)])
                adjacency.setdefault(e, []).append(fi)
        for e, inc in adjacency.items():
            if len(inc) > 2:
                raise TopologyError(f"edge {e} shared by {len(inc)} faces")
        boundary = {e for e, inc in adjacency.items() if len(inc) == 1}
        return cls(vertices=vertices, faces=faces, edge_adjacency=adjacency,
                   boundary_edges=boundary)

    @property
    def bbox_diagonal(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    @property
    def eps_planar(self):
        return 1e-9 * self.bbox_diagonal

    @property
    def eps_height(self):
        return 1e-6 * self.bbox_diagonal

    def surface_area(self):
        return sum(polygon_area3(self.vertices[f]) for f in self.faces)

    def face_plane(self, fi):
        return fit_plane(self.vertices[self.faces[fi]])


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def add(self, kind, detail):
        self.violations.append({"kind": kind, "detail": detail})

    @property
    def ok(self):
        return not self.violations

    def __str__(self):
        if self.ok:
            return "mesh admissible (no violations)"
        return "\n".join(f"[{v['kind']}] {v['detail']}" for v in self.violations)


@dataclass
class OrientedManifold:
    base: Manifold
    rotation: np.ndarray                 # 3x3, det +1
    vertices: np.ndarray                 # rotated coordinates
    vertex_heights: np.ndarray           # strictly increasing distinct z values

    @classmethod
    def from_rotation(cls, m: Manifold, rotation):
        v = m.vertices @ rotation.T
        heights = np.sort(v[:, 2])
        return cls(base=m, rotation=rotation, vertices=v, vertex_heights=heights)

    @property
    def faces(self):
        return self.base.faces

    def min_height_gap(self):
        if len(self.vertex_heights) < 2:
            return np.inf
        return float(np.min(np.diff(self.vertex_heights)))


def load_mesh(path, fmt=None) -> Manifold:
    """Read an ASCII OFF or OBJ file with polygonal faces."""
    if fmt is None:
        fmt = os.path.splitext(path)[1].lstrip(".").upper() or "OFF"
    fmt = fmt.upper()
    with open(path) as fh:
        text = fh.read()
    if fmt == "OFF":
        return _parse_off(text)
    if fmt == "OBJ":
        return _parse_obj(text)
    raise MeshFormatError(f"unsupported format {fmt!r}")


def _parse_off(text) -> Manifold:
    lines = text.splitlines()
    idx = 0

    def next_tokens():
        nonlocal idx
        while idx < len(lines):
            ln = lines[idx].split("#", 1)[0].strip()
            idx += 1
            if ln:
                return ln.split(), idx
        return None, idx

    toks, ln = next_tokens()
    if toks is None or toks[0] != "OFF":
        raise MeshFormatError("missing OFF header", ln)
    if len(toks) > 1:
        counts = toks[1:4]
    else:
        counts, ln = next_tokens()
        if counts is None:
            raise MeshFormatError("missing vertex/face counts", ln)
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except (ValueError, IndexError):
        raise MeshFormatError("bad count line", ln)
    verts = []
    for _ in range(nv):
        toks, ln = next_tokens()
        if toks is None or len(toks) < 3:
            raise MeshFormatError("truncated vertex list", ln)
        try:
            verts.append([float(toks[0]), float(toks[1]), float(toks[2])])
        except ValueError:
            raise MeshFormatError("bad vertex coordinates", ln)
    faces = []
    for _ in range(nf):
        toks, ln = next_tokens()
        if toks is None:
            raise MeshFormatError("truncated face list", ln)
        try:
            k = int(toks[0])
            f = [int(t) for t in toks[1:1 + k]]
        except ValueError:
            raise MeshFormatError("bad face line", ln)
        if len(f) != k or k < 3:
            raise MeshFormatError("bad face vertex count", ln)
        if any(v < 0 or v >= nv for v in f):
            raise MeshFormatError("face references missing vertex", ln)
        faces.append(f)
    return Manifold.from_arrays(np.array(verts), faces)


def _parse_obj(text) -> Manifold:
    verts, faces = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        toks = ln.split()
        if toks[0] == "v":
            if len(toks) < 4:
                raise MeshFormatError("bad vertex line", lineno)
            try:
                verts.append([float(toks[1]), float(toks[2]), float(toks[3])])
            except ValueError:
                raise MeshFormatError("bad vertex coordinates", lineno)
        elif toks[0] == "f":
            try:
                f = [int(t.split("/")[0]) for t in toks[1:]]
            except ValueError:
                raise MeshFormatError("bad face line", lineno)
            if len(f) < 3:
                raise MeshFormatError("face needs 3+ vertices", lineno)
            f = [(i - 1) if i > 0 else len(verts) + i for i in f]
            if any(i < 0 or i >= len(verts) for i in f):
                raise MeshFormatError("face references missing vertex", lineno)
            faces.append(f)
    return Manifold.from_arrays(np.array(verts), faces)


def save_mesh(m: Manifold, path, fmt=None):
    """Write OFF or OBJ. OFF round-trips coordinates bit-exactly via repr."""
    if fmt is None:
        fmt = os.path.splitext(path)[1].lstrip(".").upper() or "OFF"
    fmt = fmt.upper()
    lines = []
    if fmt == "OFF":
        lines.append("OFF")
        lines.append(f"{len(m.vertices)} {len(m.faces)} 0")
        for v in m.vertices:
            lines.append(f"{v[0]!r} {v[1]!r} {v[2]!r}")
        for f in m.faces:
            lines.append(" ".join([str(len(f))] + [str(i) for i in f]))
    elif fmt == "OBJ":
        for v in m.vertices:
            lines.append(f"v {v[0]!r} {v[1]!r} {v[2]!r}")
        for f in m.faces:
            lines.append("f " + " ".join(str(i + 1) for i in f))
    else:
        raise MeshFormatError(f"unsupported format {fmt!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def validate_manifold(m: Manifold) -> ValidationReport:
    """Collect violations of the admissibility invariants; empty report = usable."""
    report = ValidationReport()
    if not np.all(np.isfinite(m.vertices)):
        report.add("finite", "non-finite vertex coordinates")
        return report
    eps = m.eps_planar
    for e, inc in m.edge_adjacency.items():
        if len(inc) > 2:
            report.add("non-manifold", f"edge {e} has {len(inc)} incident faces")
    for fi, f in enumerate(m.faces):
        pts = m.vertices[f]
        if len(set(f)) != len(f):
            report.add("degenerate-face", f"face {fi} repeats a vertex")
            continue
        area = polygon_area3(pts)
        if area <= eps * max(m.bbox_diagonal, 1.0):
            report.add("zero-area", f"face {fi} has area {area:.3e}")
            continue
        c, n, dev = fit_plane(pts)
        if dev > eps:
            report.add("planarity", f"face {fi} deviates {dev:.3e} from a plane (eps {eps:.3e})")
            continue
        basis_u = unit(pts[1] - pts[0])
        basis_v = np.cross(n, basis_u)
        uv = np.stack([(pts - c) @ basis_u, (pts - c) @ basis_v], axis=1)
        if not polygon_is_simple2(uv):
            report.add("self-intersecting", f"face {fi} is not a simple polygon")
    # touching faces: interior edges where the two faces fold back onto each
    # other (base angle 0 at any slice) break the gadget precondition
    for e, inc in m.edge_adjacency.items():
        if len(inc) != 2:
            continue
        f1, f2 = inc
        theta = _edge_base_angle(m, e, f1, f2)
        if theta is not None and theta < 1e-9:
            report.add("touching-faces", f"edge {e} has coincident face directions (theta=0)")
    return report


def _edge_base_angle(m: Manifold, e, f1, f2):
    """Angle between the two face directions transverse to a shared edge."""
    a, b = e
    axis = m.vertices[b] - m.vertices[a]
    ln = np.linalg.norm(axis)
    if ln == 0.0:
        return None
    axis = axis / ln
    dirs = []
    for fi in (f1, f2):
        pts = m.vertices[m.faces[fi]]
        c = pts.mean(axis=0)
        v = c - m.vertices[a]
        v = v - (v @ axis) * axis
        n = np.linalg.norm(v)
        if n == 0.0:
            return None
        dirs.append(v / n)
    return angle_between(dirs[0], dirs[1])


def orient_generic(m: Manifold, seed: int) -> OrientedManifold:
    """Rotate so all vertex heights are distinct by at least eps_height.

    Tries the identity first (no-op acceptance for already-generic meshes),
    then seeded uniform random rotations. Deterministic for a fixed seed.
    """
    eps = m.eps_height
    identity = np.eye(3)
    om = OrientedManifold.from_rotation(m, identity)
    if om.min_height_gap() >= eps:
        return om
    rng = np.random.default_rng(seed)
    for _ in range(MAX_ORIENT_RETRIES):
        rot = random_rotation(rng)
        om = OrientedManifold.from_rotation(m, rot)
        if om.min_height_gap() >= eps:
            return om
    raise OrientationError(
        f"no generic rotation found in {MAX_ORIENT_RETRIES} tries (eps={eps:.3e})")
