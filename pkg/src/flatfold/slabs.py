"""Slab decomposition: horizontal slicing, prismoidal refinement, and the
projection-disjoint / gadget-clearance splits.

A slab is a horizontal slice of the manifold between two planes. Its surface
decomposes into walls: chains or cycles of spanning pieces (trapezoids, plus
triangles next to vertex planes before refinement). All cuts are horizontal
planes strictly between a slab's bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gadgets
from .geom import cross2, overlap_area2, polygon_area3, unit


@dataclass
class WallFace:
    """One spanning piece: bottom edge b0-b1 at z0, top edge t0-t1 at z1.

    Lateral sides are (b0, t0) and (b1, t1); each carries a tag identifying
    the mesh edge (or apex vertex) it lies on, used to assemble walls.
    Triangles appear as a degenerate bottom or top edge.
    """

    b0: np.ndarray
    b1: np.ndarray
    t0: np.ndarray
    t1: np.ndarray
    tag0: tuple
    tag1: tuple
    source_face: int

    def degenerate_eps(self):
        scale = max(np.abs(np.stack([self.b0, self.b1, self.t0, self.t1])).max(), 1.0)
        return 1e-12 * scale

    @property
    def bottom_degenerate(self):
        return np.linalg.norm(self.b1 - self.b0) <= self.degenerate_eps()

    @property
    def top_degenerate(self):
        return np.linalg.norm(self.t1 - self.t0) <= self.degenerate_eps()

    @property
    def is_trapezoid(self):
        return not (self.bottom_degenerate or self.top_degenerate)

    def polygon(self):
        pts = [self.b0]
        if not self.bottom_degenerate:
            pts.append(self.b1)
        pts.append(self.t1)
        if not self.top_degenerate:
            pts.append(self.t0)
        return np.array(pts)

    def area(self):
        return polygon_area3(self.polygon())

    def plan(self):
        """Projection onto the base plane (possibly degenerate)."""
        return self.polygon()[:, :2]

    def normal(self):
        poly = self.polygon()
        n = np.zeros(3)
        for i in range(1, len(poly) - 1):
            n += np.cross(poly[i] - poly[0], poly[i + 1] - poly[0])
        return unit(n)

    def tilt(self):
        """Angle of the face plane against the horizontal, in (0, pi/2]."""
        nz = abs(self.normal()[2])
        return float(np.arccos(np.clip(nz, -1.0, 1.0)))

    def split_at_z(self, z):
        """Cut along the horizontal plane at height z (strictly inside)."""
        def lerp(p, q):
            t = (z - p[2]) / (q[2] - p[2])
            r = p + t * (q - p)
            r[2] = z
            return r
        m0 = lerp(self.b0, self.t0)
        m1 = lerp(self.b1, self.t1)
        lower = WallFace(self.b0.copy(), self.b1.copy(), m0, m1,
                         self.tag0, self.tag1, self.source_face)
        upper = WallFace(m0.copy(), m1.copy(), self.t0.copy(), self.t1.copy(),
                         self.tag0, self.tag1, self.source_face)
        return lower, upper

    def flipped(self):
        return WallFace(self.b1.copy(), self.b0.copy(), self.t1.copy(), self.t0.copy(),
                        self.tag1, self.tag0, self.source_face)

    def to_dict(self):
        return {"b0": self.b0.tolist(), "b1": self.b1.tolist(),
                "t0": self.t0.tolist(), "t1": self.t1.tolist(),
                "source_face": int(self.source_face)}


@dataclass
class Wall:
    """Ordered chain or cycle of spanning pieces sharing lateral edges."""

    faces: list                  # WallFace, normalized so face i's b1 side meets face i+1's b0 side
    is_cycle: bool

    @property
    def face_count(self):
        return len(self.faces)

    @property
    def edge_count(self):
        return len(self.faces) if self.is_cycle else len(self.faces) - 1

    def edge_faces(self, i):
        return self.faces[i], self.faces[(i + 1) % len(self.faces)]

    def edge_vertices(self, i):
        fa = self.faces[i]
        return fa.b1, fa.t1

    def plan_dir(self, i):
        d = (self.faces[i].b1 - self.faces[i].b0)[:2]
        n = np.linalg.norm(d)
        if n == 0.0:
            # degenerate plan (vertical wall seen edge-on cannot happen for a
            # spanning trapezoid with distinct bottom corners)
            return np.array([1.0, 0.0])
        return d / n

    def plan_turn(self, i):
        d1 = self.plan_dir(i)
        d2 = self.plan_dir((i + 1) % len(self.faces))
        return float(cross2(d1, d2))

    def area(self):
        return sum(f.area() for f in self.faces)

    def to_dict(self):
        return {"cycle": self.is_cycle, "faces": [f.to_dict() for f in self.faces]}


@dataclass
class Slab:
    z0: float
    height: float
    walls: list
    residual: bool = False
    tag: str = ""

    @property
    def z1(self):
        return self.z0 + self.height

    def faces(self):
        for w in self.walls:
            yield from w.faces

    def area(self):
        return sum(w.area() for w in self.walls)

    @property
    def prismoidal(self):
        return all(f.is_trapezoid for f in self.faces())

    def to_dict(self):
        return {"z0": float(self.z0), "height": float(self.height),
                "residual": bool(self.residual), "tag": self.tag,
                "walls": [w.to_dict() for w in self.walls]}


@dataclass
class SliceDiagnostics:
    residual_nonprismoidal_count: int = 0
    min_slab_height: float = float("inf")
    slab_count: int = 0
    depth_used: int = 0
    residual_heights: list = field(default_factory=list)

    def to_dict(self):
        return {"residual_nonprismoidal_count": self.residual_nonprismoidal_count,
                "min_slab_height": self.min_slab_height,
                "slab_count": self.slab_count,
                "depth_used": self.depth_used}


def serialize_slabs(slabs, diagnostics=None):
    doc = {"slab_schema": 1, "slabs": [s.to_dict() for s in slabs]}
    if diagnostics is not None:
        doc["diagnostics"] = diagnostics.to_dict()
    return doc


# --- vertex slicing ----------------------------------------------------------

def slice_at_vertices(om) -> list:
    """One slab per consecutive pair of distinct vertex heights."""
    heights = om.vertex_heights
    slabs = []
    for gi in range(len(heights) - 1):
        a, b = float(heights[gi]), float(heights[gi + 1])
        pieces = []
        for fi, face in enumerate(om.faces):
            pts = om.vertices[face]
            pieces.extend(_face_band_pieces(pts, face, fi, a, b))
        walls = assemble_walls(pieces)
        if walls:
            slabs.append(Slab(z0=a, height=b - a, walls=walls, tag=f"gap{gi}"))
    return slabs


def _face_band_pieces(pts, vert_ids, face_id, a, b):
    """Clip one planar polygon to the horizontal band [a, b].

    Polygon vertices never lie strictly inside the band (bands run between
    consecutive vertex heights), so every connected piece is a trapezoid or a
    triangle bounded by two polygon-edge segments and two horizontal chords.
    """
    z = pts[:, 2]
    if z.max() <= a or z.min() >= b:
        return []
    tol = 1e-9 * max(1.0, np.abs(pts).max())
    n = len(pts)
    crossings = []
    for i in range(n):
        j = (i + 1) % n
        p, q = pts[i], pts[j]
        zi, zj = z[i], z[j]
        lo, hi = min(zi, zj), max(zi, zj)
        if hi <= a + tol or lo >= b - tol:
            continue

        def at(zc, p=p, q=q, zi=zi, zj=zj):
            if abs(zi - zc) <= tol:
                return p.copy()
            if abs(zj - zc) <= tol:
                return q.copy()
            t = (zc - zi) / (zj - zi)
            r = p + t * (q - p)
            r[2] = zc
            return r

        bottom = at(a)
        top = at(b)
        tag = ("e", vert_ids[i], vert_ids[j]) if vert_ids[i] < vert_ids[j] \
            else ("e", vert_ids[j], vert_ids[i])
        crossings.append({"bottom": bottom, "top": top, "tag": tag})
    if len(crossings) < 2:
        return []
    # face-plane coordinates for ordering and interior tests
    nrm = np.zeros(3)
    for i in range(1, n - 1):
        nrm += np.cross(pts[i] - pts[0], pts[i + 1] - pts[0])
    nrm = unit(nrm)
    u_dir = unit(np.cross(nrm, np.array([0.0, 0.0, 1.0])))
    crossings.sort(key=lambda c: (float(c["bottom"] @ u_dir), float(c["top"] @ u_dir)))
    poly2 = np.stack([pts @ u_dir, z], axis=1)
    pieces = []
    for k in range(0, len(crossings) - 1, 1):
        c1, c2 = crossings[k], crossings[k + 1]
        mid_u = 0.25 * (float(c1["bottom"] @ u_dir) + float(c2["bottom"] @ u_dir)
                        + float(c1["top"] @ u_dir) + float(c2["top"] @ u_dir))
        if not _point_in_poly2(poly2, np.array([mid_u, 0.5 * (a + b)])):
            continue
        pieces.append(WallFace(b0=c1["bottom"], b1=c2["bottom"],
                               t0=c1["top"], t1=c2["top"],
                               tag0=c1["tag"], tag1=c2["tag"], source_face=face_id))
    return pieces


def _point_in_poly2(poly, p):
    """Even-odd point-in-polygon test in 2D."""
    x, y = p
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if xc > x:
                inside = not inside
    return inside


def assemble_walls(pieces) -> list:
    """Group pieces into chains/cycles by shared lateral tags, normalizing
    orientation so face i's b1/t1 side meets face i+1's b0/t0 side."""
    if not pieces:
        return []
    by_tag: dict = {}
    for idx, f in enumerate(pieces):
        for side, tag in ((0, f.tag0), (1, f.tag1)):
            key = _tag_key(tag, f, side)
            by_tag.setdefault(key, []).append((idx, side))
    for key, inc in by_tag.items():
        if len(inc) > 2:
            raise ValueError(f"wall assembly: lateral {key} shared by {len(inc)} pieces")
    visited = [False] * len(pieces)
    walls = []
    for start in range(len(pieces)):
        if visited[start]:
            continue
        chain = [pieces[start]]
        visited[start] = True
        is_cycle = False
        # walk forward from the b1 side
        cur, cur_face = start, pieces[start]
        while True:
            key = _tag_key(cur_face.tag1, cur_face, 1)
            nxt = [(i, s) for (i, s) in by_tag[key] if i != cur]
            if not nxt:
                break
            ni, nside = nxt[0]
            if visited[ni]:
                if ni == start:
                    is_cycle = True
                break
            nf = pieces[ni] if nside == 0 else pieces[ni].flipped()
            chain.append(nf)
            visited[ni] = True
            cur, cur_face = ni, nf
        if not is_cycle:
            # walk backward from the start's b0 side
            cur, cur_face = start, pieces[start]
            while True:
                key = _tag_key(cur_face.tag0, cur_face, 0)
                nxt = [(i, s) for (i, s) in by_tag[key] if i != cur]
                if not nxt:
                    break
                ni, nside = nxt[0]
                if visited[ni]:
                    break
                nf = pieces[ni] if nside == 1 else pieces[ni].flipped()
                chain.insert(0, nf)
                visited[ni] = True
                cur, cur_face = ni, nf
        walls.append(Wall(faces=chain, is_cycle=is_cycle))
    return walls


def _tag_key(tag, face, side):
    """Lateral identity: the mesh edge plus the band (heights make cut
    segments unique per band)."""
    z0 = round(float(min(face.b0[2], face.b1[2])), 12)
    z1 = round(float(max(face.t0[2], face.t1[2])), 12)
    return (tag, z0, z1)


# --- prismoidal refinement ----------------------------------------------------

def bisect_slab(s: Slab) -> tuple:
    zm = s.z0 + s.height / 2.0
    lower_faces, upper_faces = [], []
    for f in s.faces():
        lo, up = f.split_at_z(zm)
        lower_faces.append(lo)
        upper_faces.append(up)
    lower = Slab(z0=s.z0, height=s.height / 2.0, walls=assemble_walls(lower_faces),
                 tag=s.tag + "L")
    upper = Slab(z0=zm, height=s.height / 2.0, walls=assemble_walls(upper_faces),
                 tag=s.tag + "U")
    return lower, upper


def refine_to_prismoidal(slabs, depth: int):
    """Bisect every slab containing a triangular spanning piece, recursively up
    to `depth` rounds per region. Unresolved pieces at the truncation boundary
    come back as residual slabs (carried rigidly downstream)."""
    out = []
    diag = SliceDiagnostics(depth_used=depth)
    queue = [(s, depth) for s in slabs]
    while queue:
        s, d = queue.pop()
        if s.prismoidal:
            out.append(s)
            continue
        if d <= 0:
            s.residual = True
            diag.residual_nonprismoidal_count += 1
            diag.residual_heights.append(s.height)
            out.append(s)
            continue
        lo, up = bisect_slab(s)
        queue.append((lo, d - 1))
        queue.append((up, d - 1))
    out.sort(key=lambda s: s.z0)
    diag.slab_count = len(out)
    diag.min_slab_height = min((s.height for s in out), default=float("inf"))
    return out, diag


# --- projection-disjoint split -------------------------------------------------

def _nonadjacent_face_pairs(s: Slab):
    faces = []
    for wi, w in enumerate(s.walls):
        for i, f in enumerate(w.faces):
            faces.append((wi, i, f, len(w.faces), w.is_cycle))
    for a in range(len(faces)):
        for b in range(a + 1, len(faces)):
            wa, ia, fa, na, cya = faces[a]
            wb, ib, fb, nb, cyb = faces[b]
            if wa == wb:
                d = abs(ia - ib)
                if cya:
                    d = min(d, na - d)
                if d <= 1:
                    continue
            yield fa, fb


def projection_overlap(s: Slab, tol_area=None):
    """Worst overlap area of base projections over nonadjacent face pairs."""
    worst = 0.0
    for fa, fb in _nonadjacent_face_pairs(s):
        worst = max(worst, overlap_area2(fa.plan(), fb.plan()))
    return worst


def is_projection_disjoint(s: Slab, rel_tol=1e-12):
    scale = max(s.height, 1.0)
    return projection_overlap(s) <= rel_tol * scale * scale


def lemma_split_bound(s: Slab):
    """Height bound (s_min / 2) * sin(psi): psi the smallest face tilt, s_min
    the least vertex-to-nonadjacent-edge distance within either base plane."""
    psi = min((f.tilt() for f in s.faces()), default=np.pi / 2)
    s_min = _min_vertex_edge_gap(s)
    if not np.isfinite(s_min):
        return float("inf"), psi, s_min
    return (s_min / 2.0) * np.sin(psi), psi, s_min


def _min_vertex_edge_gap(s: Slab):
    best = float("inf")
    for which in ("bottom", "top"):
        chords = []
        for w in s.walls:
            for f in w.faces:
                seg = (f.b0[:2], f.b1[:2]) if which == "bottom" else (f.t0[:2], f.t1[:2])
                chords.append(seg)
        for i, (a1, a2) in enumerate(chords):
            for v in (a1, a2):
                for j, (b1, b2) in enumerate(chords):
                    if i == j:
                        continue
                    if _pt_close(v, b1) or _pt_close(v, b2):
                        continue
                    best = min(best, _point_segment_dist(v, b1, b2))
    return best


def _pt_close(p, q, tol=1e-12):
    return float(np.linalg.norm(p - q)) <= tol


def _point_segment_dist(p, a, b):
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = np.clip(float((p - a) @ ab) / denom, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def split_equal_heights(s: Slab, n: int) -> list:
    if n <= 1:
        return [s]
    child_h = s.height / n
    slabs = []
    faces = list(s.faces())
    cur = faces
    z = s.z0
    for k in range(n):
        if k == n - 1:
            part = cur
        else:
            zc = s.z0 + (k + 1) * child_h
            part, nxt = [], []
            for f in cur:
                lo, up = f.split_at_z(zc)
                part.append(lo)
                nxt.append(up)
            cur = nxt
        slabs.append(Slab(z0=z, height=child_h, walls=assemble_walls(part),
                          residual=s.residual, tag=s.tag + f"s{k}"))
        z = s.z0 + (k + 1) * child_h
    return slabs


def split_projection_disjoint(s: Slab) -> list:
    """Lemma of the uniform-height split: slice into equal slabs no taller than
    (s_min/2) sin(psi); faces then project into disjoint strips."""
    if not s.prismoidal:
        raise ValueError("projection-disjoint split requires a prismoidal slab")
    bound, psi, s_min = lemma_split_bound(s)
    if s.height <= bound * (1 + 1e-12) and is_projection_disjoint(s):
        return [s]
    if not np.isfinite(bound) or bound <= 0:
        if is_projection_disjoint(s):
            return [s]
        raise ValueError("cannot separate projections: zero feature gap")
    n = int(np.ceil(s.height / bound - 1e-12))
    parts = split_equal_heights(s, n)
    return parts


# --- gadget clearance split ----------------------------------------------------

def _edge_clearance_ok(s: Slab, margin=0.95) -> bool:
    """Conservative fit test: every gadget footprint (a disk of the pattern's
    developed radius around its edge projection) must clear nonadjacent
    gadget footprints and face strips; face extensions must fit the base gaps;
    and the two gadgets on a shared face must not meet inside it."""
    gadgets_info = []
    faces_info = []
    for wi, w in enumerate(s.walls):
        fold_side = _wall_fold_side(w)
        for i, f in enumerate(w.faces):
            ext = _face_extension(f, s.height)
            faces_info.append({"wall": wi, "idx": i, "face": f, "ext": ext,
                               "n": len(w.faces), "cycle": w.is_cycle})
        for e in range(w.edge_count):
            p = gadgets.edge_params(w, e)
            if p.flat_edge:
                continue
            kind = gadgets.geometric_edge_kind(w, e, fold_side)
            pat = (gadgets.build_out_out(p) if kind == gadgets.OUT_OUT
                   else gadgets.build_in_out(p))
            radius = p.edge_length * gadgets.pattern_radius(pat)
            vb, vt = w.edge_vertices(e)
            seg = (vb[:2], vt[:2])
            # in-face footprint extents along both incident faces
            ext_a = p.edge_length * max(
                (pt[0] for pt in (pat.points_dev[k] for k in ("p_alpha", "p_beta", "q"))),
                default=0.0)
            ext_b = p.edge_length * max(
                (pat.beta_face_coords(pat.points_dev[k])[0]
                 for k in ("p_alpha", "p_beta", "q")), default=0.0)
            gadgets_info.append({"wall": wi, "edge": e, "seg": seg, "radius": radius,
                                 "ext_left": ext_a, "ext_right": ext_b})
    # (d) two gadgets sharing a face must fit side by side along it
    per_face: dict = {}
    for g in gadgets_info:
        w = s.walls[g["wall"]]
        nf = len(w.faces)
        left_face = (g["wall"], g["edge"])            # face edge_index is its right end
        right_face = (g["wall"], (g["edge"] + 1) % nf)
        per_face.setdefault(left_face, {})["right"] = g["ext_left"]
        per_face.setdefault(right_face, {})["left"] = g["ext_right"]
    for (wi, fi), exts in per_face.items():
        f = s.walls[wi].faces[fi]
        blen = float(np.linalg.norm(f.b1 - f.b0))
        tlen = float(np.linalg.norm(f.t1 - f.t0))
        need = exts.get("left", 0.0) + exts.get("right", 0.0)
        if need > margin * min(blen, tlen):
            return False
    # (a)/(b): pairwise separation in plan
    for i in range(len(gadgets_info)):
        gi = gadgets_info[i]
        for j in range(i + 1, len(gadgets_info)):
            gj = gadgets_info[j]
            if gi["wall"] == gj["wall"]:
                w = s.walls[gi["wall"]]
                d = abs(gi["edge"] - gj["edge"])
                if w.is_cycle:
                    d = min(d, w.edge_count - d)
                if d <= 1:
                    continue  # share a face: handled by the in-face test
            dist = _seg_seg_dist(gi["seg"], gj["seg"])
            if dist <= (gi["radius"] + gj["radius"]) / margin:
                return False
        for finfo in faces_info:
            if finfo["wall"] == gi["wall"]:
                d = min(abs(finfo["idx"] - gi["edge"]), abs(finfo["idx"] - gi["edge"] - 1))
                if finfo["cycle"]:
                    d = min(d, finfo["n"] - abs(finfo["idx"] - gi["edge"]),
                            finfo["n"] - abs(finfo["idx"] - gi["edge"] - 1))
                if d == 0:
                    continue  # incident face
            dist = _seg_poly_dist(gi["seg"], finfo["face"].plan())
            if dist <= (gi["radius"] + finfo["ext"]) / margin:
                return False
    # (c) face extension bands of nonadjacent faces must not meet
    for fa, fb in _nonadjacent_face_pairs(s):
        dist = _poly_poly_dist(fa.plan(), fb.plan())
        if dist <= (_face_extension(fa, s.height) + _face_extension(fb, s.height)) / margin:
            return False
    return True


def _wall_fold_side(w: Wall) -> int:
    """Plan side every face of the wall folds to: +1 keeps the majority of the
    base wedges on the fold side (more IN_OUT edges)."""
    turns = [w.plan_turn(i) for i in range(w.edge_count)]
    lefts = sum(1 for t in turns if t >= 0)
    return 1 if lefts * 2 >= len(turns) else -1


def _face_extension(f: WallFace, slab_height):
    """Excursion bound (1 - cos phi) w / 2 of the face-crease fold."""
    tilt = f.tilt()
    w = slab_height / max(np.sin(tilt), 1e-12)
    return (1.0 + abs(np.cos(tilt))) * w / 2.0


def _seg_seg_dist(s1, s2):
    a1, a2 = s1
    b1, b2 = s2
    if segments_cross(a1, a2, b1, b2):
        return 0.0
    return min(_point_segment_dist(a1, b1, b2), _point_segment_dist(a2, b1, b2),
               _point_segment_dist(b1, a1, a2), _point_segment_dist(b2, a1, a2))


def segments_cross(a1, a2, b1, b2):
    d1 = cross2(a2 - a1, b1 - a1)
    d2 = cross2(a2 - a1, b2 - a1)
    d3 = cross2(b2 - b1, a1 - b1)
    d4 = cross2(b2 - b1, a2 - b1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _seg_poly_dist(seg, poly):
    best = float("inf")
    n = len(poly)
    for i in range(n):
        e = (poly[i], poly[(i + 1) % n])
        best = min(best, _seg_seg_dist(seg, e))
        if best == 0.0:
            return 0.0
    return best


def _poly_poly_dist(pa, pb):
    best = float("inf")
    na, nb = len(pa), len(pb)
    for i in range(na):
        ea = (pa[i], pa[(i + 1) % na])
        for j in range(nb):
            eb = (pb[j], pb[(j + 1) % nb])
            best = min(best, _seg_seg_dist(ea, eb))
            if best == 0.0:
                return 0.0
    return best


def split_for_gadget_clearance(s: Slab, max_halvings=48) -> list:
    """Bisect a projection-disjoint slab until every spanning-edge gadget and
    face extension fits without touching nonadjacent geometry. Halving the
    height halves every reach while the plan gaps stay fixed, so this
    terminates for positive gaps."""
    if s.residual:
        return [s]
    out = []
    queue = [(s, 0)]
    while queue:
        cur, depth = queue.pop()
        if _edge_clearance_ok(cur):
            out.append(cur)
            continue
        if depth >= max_halvings:
            raise RuntimeError("gadget clearance split did not terminate "
                               f"(slab {cur.tag}); degenerate input geometry?")
        lo, up = bisect_slab(cur)
        queue.append((lo, depth + 1))
        queue.append((up, depth + 1))
    out.sort(key=lambda x: x.z0)
    return out
