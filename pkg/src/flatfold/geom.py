"""Small geometric primitives shared across the package.

Everything here is pure numpy on float64. Exact (rational) arithmetic is used
only as a fallback inside the orientation predicate, where a float filter is
inconclusive.
"""

from fractions import Fraction

import numpy as np

TAU = 2.0 * np.pi


def unit(v):
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero vector has no direction")
    return v / n


def angle_between(u, v):
    """Unsigned angle between two vectors, robust near 0 and pi."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = np.cross(u, v)
    s = np.linalg.norm(np.atleast_1d(c))
    return float(np.arctan2(s, np.dot(u, v)))


def rot2(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]])


def cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


def polygon_area2(pts):
    """Signed area of a 2D polygon (shoelace)."""
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_area3(pts):
    """Area of a planar polygon embedded in 3D."""
    pts = np.asarray(pts, dtype=float)
    s = np.zeros(3)
    for i in range(1, len(pts) - 1):
        s += np.cross(pts[i] - pts[0], pts[i + 1] - pts[0])
    return 0.5 * float(np.linalg.norm(s))


def fit_plane(pts):
    """Least-squares plane through points: returns (origin, unit normal, max |distance|)."""
    pts = np.asarray(pts, dtype=float)
    c = pts.mean(axis=0)
    q = pts - c
    _, _, vt = np.linalg.svd(q, full_matrices=False)
    n = vt[-1]
    d = q @ n
    return c, n, float(np.max(np.abs(d)))


def segments_intersect2(p1, p2, p3, p4, eps=0.0):
    """Proper 2D segment intersection test (shared endpoints do not count)."""
    d1 = cross2(p4 - p3, p1 - p3)
    d2 = cross2(p4 - p3, p2 - p3)
    d3 = cross2(p2 - p1, p3 - p1)
    d4 = cross2(p2 - p1, p4 - p1)
    return ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and \
           ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps))


def polygon_is_simple2(pts, eps=0.0):
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = pts[j], pts[(j + 1) % n]
            if segments_intersect2(a1, a2, b1, b2, eps):
                return False
    return True


def convex_clip2(subject, clip):
    """Intersection of a convex subject polygon with a convex clip polygon
    (Sutherland-Hodgman). Both CCW. Returns vertex array, possibly empty."""
    out = [np.asarray(p, dtype=float) for p in subject]
    clip = np.asarray(clip, dtype=float)
    n = len(clip)
    for i in range(n):
        a, b = clip[i], clip[(i + 1) % n]
        edge = b - a
        if not out:
            return np.zeros((0, 2))
        inside = [cross2(edge, p - a) >= 0.0 for p in out]
        nxt = []
        m = len(out)
        for j in range(m):
            cur, nxtp = out[j], out[(j + 1) % m]
            if inside[j]:
                nxt.append(cur)
            if inside[j] != inside[(j + 1) % m]:
                denom = cross2(edge, nxtp - cur)
                if abs(denom) > 0.0:
                    t = cross2(edge, a - cur) / denom
                    nxt.append(cur + t * (nxtp - cur))
        out = nxt
    if not out:
        return np.zeros((0, 2))
    return np.array(out)


def overlap_area2(poly_a, poly_b):
    """Area of intersection of two convex polygons (any orientation)."""
    pa = np.asarray(poly_a, dtype=float)
    pb = np.asarray(poly_b, dtype=float)
    if len(pa) < 3 or len(pb) < 3:
        return 0.0
    if polygon_area2(pa) < 0:
        pa = pa[::-1]
    if polygon_area2(pb) < 0:
        pb = pb[::-1]
    inter = convex_clip2(pa, pb)
    if len(inter) < 3:
        return 0.0
    return abs(polygon_area2(inter))


def _orient3d_exact(a, b, c, d):
    ax, ay, az = (Fraction(float(a[0])), Fraction(float(a[1])), Fraction(float(a[2])))
    bx, by, bz = (Fraction(float(b[0])), Fraction(float(b[1])), Fraction(float(b[2])))
    cx, cy, cz = (Fraction(float(c[0])), Fraction(float(c[1])), Fraction(float(c[2])))
    dx, dy, dz = (Fraction(float(d[0])), Fraction(float(d[1])), Fraction(float(d[2])))
    m00, m01, m02 = ax - dx, ay - dy, az - dz
    m10, m11, m12 = bx - dx, by - dy, bz - dz
    m20, m21, m22 = cx - dx, cy - dy, cz - dz
    det = (m00 * (m11 * m22 - m12 * m21)
           - m01 * (m10 * m22 - m12 * m20)
           + m02 * (m10 * m21 - m11 * m20))
    return (det > 0) - (det < 0)


def orient3d(a, b, c, d, filter_eps=1e-12):
    """Sign of the orientation determinant of (a, b, c, d): +1, -1, or 0.

    Float evaluation with a magnitude filter; exact rational fallback when
    the filter is inconclusive (float inputs convert to Fraction exactly).
    """
    ad = np.asarray(a, dtype=float) - d
    bd = np.asarray(b, dtype=float) - d
    cd = np.asarray(c, dtype=float) - d
    det = float(np.dot(ad, np.cross(bd, cd)))
    scale = (np.abs(ad).max() + 1.0) * (np.abs(bd).max() + 1.0) * (np.abs(cd).max() + 1.0)
    if abs(det) > filter_eps * scale:
        return 1 if det > 0 else -1
    return _orient3d_exact(a, b, c, d)


def _cross_segment(tri, dist, eps):
    """Endpoints of the segment where `tri` crosses the plane that `dist` is
    measured against. None when the crossing is degenerate (touching)."""
    pos = [i for i in range(3) if dist[i] > eps]
    neg = [i for i in range(3) if dist[i] < -eps]
    zer = [i for i in range(3) if abs(dist[i]) <= eps]
    if not pos or not neg:
        return None
    if len(zer) == 2:
        return None  # an edge lies on the plane: touching contact
    pts = []
    if len(zer) == 1:
        pts.append(tri[zer[0]])
        i, j = pos[0], neg[0]
        t = dist[i] / (dist[i] - dist[j])
        pts.append(tri[i] + t * (tri[j] - tri[i]))
        return pts
    for i in pos:
        for j in neg:
            t = dist[i] / (dist[i] - dist[j])
            pts.append(tri[i] + t * (tri[j] - tri[i]))
    return pts[:2]


def tri_tri_transverse(t1, t2, eps=1e-12):
    """True iff two 3D triangles intersect transversally.

    Touching within eps (shared creases, grazing contact) does not count.
    Coplanar pairs return False: coplanar overlap is the layer-order checker's
    job, not this predicate's.
    """
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    n1 = np.cross(t1[1] - t1[0], t1[2] - t1[0])
    n2 = np.cross(t2[1] - t2[0], t2[2] - t2[0])
    ln1, ln2 = np.linalg.norm(n1), np.linalg.norm(n2)
    if ln1 == 0.0 or ln2 == 0.0:
        return False
    d1 = (t1 - t2[0]) @ (n2 / ln2)
    d2 = (t2 - t1[0]) @ (n1 / ln1)
    if np.all(d1 > eps) or np.all(d1 < -eps):
        return False
    if np.all(d2 > eps) or np.all(d2 < -eps):
        return False
    if np.all(np.abs(d1) <= eps) or np.all(np.abs(d2) <= eps):
        return False
    line = np.cross(n1, n2)
    ln = np.linalg.norm(line)
    if ln <= eps * ln1 * ln2:
        return False
    line = line / ln
    s1 = _cross_segment(t1, d1, eps)
    s2 = _cross_segment(t2, d2, eps)
    if s1 is None or s2 is None:
        return False
    a1, b1 = sorted((float(s1[0] @ line), float(s1[1] @ line)))
    a2, b2 = sorted((float(s2[0] @ line), float(s2[1] @ line)))
    return min(b1, b2) - max(a1, a2) > eps


def random_rotation(rng):
    """Uniform random rotation matrix from a seeded generator (quaternion method)."""
    q = rng.normal(size=4)
    q = q / np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
