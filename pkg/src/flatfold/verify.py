"""Independent numeric verification of the pipeline's claims.

All checks here recompute their quantities from raw coordinates; none of the
fold engine's constraint-solving code is reused (double-entry verification).
A failing report always carries at least one witness.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .geom import overlap_area2, polygon_area2, tri_tri_transverse

KAWASAKI_TOL = 1e-9
ISO_TOL = 1e-9
FLAT_TOL = 1e-9
CREASE_SHELL = 1e-12


@dataclass
class VerificationReport:
    name: str
    status: str = "pass"             # "pass" | "fail"
    worst: float = 0.0
    witnesses: list = field(default_factory=list)
    runtime: float = 0.0

    @property
    def ok(self):
        return self.status == "pass"

    def fail(self, worst, witness):
        self.status = "fail"
        self.worst = max(self.worst, float(worst))
        if len(self.witnesses) < 32:
            self.witnesses.append(witness)

    def to_dict(self):
        return {"check": self.name, "status": self.status, "worst": self.worst,
                "witnesses": [str(w) for w in self.witnesses[:8]],
                "runtime": self.runtime}

    def __str__(self):
        tag = "PASS" if self.ok else "FAIL"
        extra = f" worst={self.worst:.3e}" if self.worst else ""
        wit = f" witness={self.witnesses[0]}" if self.witnesses else ""
        return f"[{tag}] {self.name}{extra}{wit}"


def _sector_alternating_sum(dirs):
    """Alternating sum of consecutive sector angles around a vertex."""
    angs = sorted(np.arctan2(d[1], d[0]) % (2 * np.pi) for d in dirs)
    gaps = np.diff(angs + [angs[0] + 2 * np.pi])
    return float(abs(sum(g * (-1) ** i for i, g in enumerate(gaps))))


def check_kawasaki(pattern) -> VerificationReport:
    """Flat-foldability at every internal vertex of the pattern: the
    alternating sum of consecutive sector angles must vanish."""
    t0 = time.perf_counter()
    rep = VerificationReport("kawasaki")
    for name, point, dirs in pattern.internal_vertices():
        if len(dirs) < 3:
            continue
        if len(dirs) % 2 == 1:
            rep.fail(np.pi, f"{name}: odd crease degree {len(dirs)}")
            continue
        res = _sector_alternating_sum(dirs)
        rep.worst = max(rep.worst, res)
        if res > KAWASAKI_TOL:
            rep.fail(res, f"{name}: alternating sum {res:.3e}")
    rep.runtime = time.perf_counter() - t0
    return rep


def check_developability(pattern) -> VerificationReport:
    """Sectors around each internal vertex must tile a full turn."""
    t0 = time.perf_counter()
    rep = VerificationReport("developability")
    for name, point, dirs in pattern.internal_vertices():
        if len(dirs) < 3:
            continue
        angs = sorted(np.arctan2(d[1], d[0]) % (2 * np.pi) for d in dirs)
        total = sum(np.diff(angs + [angs[0] + 2 * np.pi]))
        res = abs(total - 2 * np.pi)
        rep.worst = max(rep.worst, res)
        if res > KAWASAKI_TOL:
            rep.fail(res, f"{name}: sector total deviates {res:.3e}")
    rep.runtime = time.perf_counter() - t0
    return rep


def _triangle_edge_deviation(tri_xyz, tri_dev):
    worst = 0.0
    for k in range(3):
        a, b = k, (k + 1) % 3
        d3 = float(np.linalg.norm(tri_xyz[a] - tri_xyz[b]))
        d2 = float(np.linalg.norm(tri_dev[a] - tri_dev[b]))
        worst = max(worst, abs(d3 - d2))
    return worst


def check_isometry(pattern, folded, tol=ISO_TOL) -> VerificationReport:
    """Every triangulation edge must keep its developed length, and the hole
    diagonal |p'_alpha - p_beta| must equal its intrinsic distance."""
    t0 = time.perf_counter()
    rep = VerificationReport("isometry")
    for idx, tri in enumerate(folded.triangles):
        dev = _triangle_edge_deviation(tri.xyz, tri.dev)
        rep.worst = max(rep.worst, dev)
        if dev > tol:
            rep.fail(dev, f"triangle {idx} ({tri.piece}): edge deviation {dev:.3e}")
    if hasattr(folded, "p_alpha_prime") and pattern is not None:
        p3 = folded.vertex_positions["p_alpha_prime"]
        pb3 = folded.vertex_positions["p_beta"]
        dev_d = float(np.linalg.norm(folded.p_alpha_prime_dev - pattern.points_dev["p_beta"]))
        res = abs(float(np.linalg.norm(p3 - pb3)) - dev_d)
        rep.worst = max(rep.worst, res)
        if res > tol:
            rep.fail(res, f"hole diagonal deviates {res:.3e}")
    rep.runtime = time.perf_counter() - t0
    return rep


def _shared_vertices(t1_dev, t2_dev, tol=1e-9):
    n = 0
    for a in t1_dev:
        for b in t2_dev:
            if np.linalg.norm(a - b) <= tol:
                n += 1
                break
    return n


def check_noncrossing(folded, t=None, adjacency="dev") -> VerificationReport:
    """Transverse triangle-triangle intersection over nonadjacent pairs.

    Adjacency exclusion is combinatorial: pairs sharing a developed vertex
    (same piece complex) touch along creases and are excluded. At t = 1
    everything is coplanar and overlap is deferred to the layer order.
    """
    t0 = time.perf_counter()
    rep = VerificationReport("noncrossing")
    tris = folded.triangles if hasattr(folded, "triangles") else folded
    tt = getattr(folded, "t", t)
    if tt is not None and tt >= 1.0 - 1e-12:
        rep.runtime = time.perf_counter() - t0
        return rep
    n = len(tris)
    if n == 0:
        rep.runtime = time.perf_counter() - t0
        return rep
    xyz = np.stack([tri.xyz for tri in tris])             # (n, 3, 3)
    lo = xyz.min(axis=1)
    hi = xyz.max(axis=1)
    # vectorized AABB prefilter over all pairs
    sep = (hi[:, None, :] < lo[None, :, :] - CREASE_SHELL).any(axis=2)
    overlap = ~(sep | sep.transpose(1, 0))
    iu, ju = np.triu_indices(n, k=1)
    cand = [(int(i), int(j)) for i, j in zip(iu, ju) if overlap[i, j]]
    for i, j in cand:
        ti, tj = tris[i], tris[j]
        if _shared_3d_vertices(ti.xyz, tj.xyz) > 0:
            continue
        if tri_tri_transverse(ti.xyz, tj.xyz, eps=CREASE_SHELL):
            rep.fail(1.0, f"triangles {i} ({ti.piece}) and {j} ({tj.piece}) cross")
    rep.runtime = time.perf_counter() - t0
    return rep


def _shared_3d_vertices(a, b, tol=1e-9):
    n = 0
    for p in a:
        for q in b:
            if np.linalg.norm(p - q) <= tol:
                n += 1
                break
    return n


def check_containment(folded, z_lo=0.0, z_hi=None, tol=FLAT_TOL) -> VerificationReport:
    """All folded points must stay between the slab's planes."""
    t0 = time.perf_counter()
    rep = VerificationReport("containment")
    if z_hi is None:
        z_hi = folded.h
    pts = folded.all_points() if hasattr(folded, "all_points") else \
        np.vstack([tri.xyz for tri in folded.triangles])
    lo = float(pts[:, 2].min())
    hi = float(pts[:, 2].max())
    worst = max(z_lo - lo, hi - z_hi, 0.0)
    rep.worst = worst
    if worst > tol:
        rep.fail(worst, f"points escape [{z_lo}, {z_hi}] by {worst:.3e}")
    rep.runtime = time.perf_counter() - t0
    return rep


def check_stacked_state(state, eps=ISO_TOL) -> VerificationReport:
    """Stacked-model conditions: interior-disjoint ordered z-intervals,
    geometry confined per interval, boundary coincidence of consecutive slabs,
    and no interaction beyond immediate neighbors."""
    t0 = time.perf_counter()
    rep = VerificationReport("stacked_state")
    n = len(state.slabs)
    scale = max(abs(state.z_base), 1.0)
    tol = eps * scale * 100
    for i in range(n - 1):
        lo_i, hi_i = state.z_intervals[i]
        lo_j, hi_j = state.z_intervals[i + 1]
        if hi_i > lo_j + tol:
            rep.fail(hi_i - lo_j, f"intervals {i},{i+1} overlap")
    for i in range(n):
        lo, hi = state.z_intervals[i]
        pts = np.vstack([tri.xyz for tri in state.global_triangles(i)])
        out = max(lo - pts[:, 2].min(), pts[:, 2].max() - hi, 0.0)
        rep.worst = max(rep.worst, out)
        if out > tol:
            rep.fail(out, f"slab {i} escapes its interval by {out:.3e}")
    for i in range(n - 1):
        a, b = state.slabs[i], state.slabs[i + 1]
        if abs(a.slab.z1 - b.slab.z0) > 1e-9 * scale:
            continue  # a gap in the input surface: nothing shared
        mism = _boundary_mismatch(a.boundary_top, b.boundary_bottom)
        rep.worst = max(rep.worst, mism)
        if mism > max(1e-6 * scale, 100 * eps):
            rep.fail(mism, f"slabs {i},{i+1} boundary mismatch {mism:.3e}")
    rep.runtime = time.perf_counter() - t0
    return rep


def _boundary_mismatch(segs_a, segs_b):
    """Hausdorff-style mismatch between two plan segment sets."""
    if not segs_a and not segs_b:
        return 0.0
    if not segs_a or not segs_b:
        return float("inf")

    def seg_points(segs, k=5):
        pts = []
        for a, b in segs:
            for t in np.linspace(0, 1, k):
                pts.append(a + t * (b - a))
        return np.array(pts)

    def dist_to_segs(pts, segs):
        worst = 0.0
        for p in pts:
            best = np.inf
            for a, b in segs:
                ab = b - a
                denom = float(ab @ ab)
                t = 0.0 if denom == 0 else np.clip(float((p - a) @ ab) / denom, 0, 1)
                best = min(best, float(np.linalg.norm(p - (a + t * ab))))
            worst = max(worst, best)
        return worst

    return max(dist_to_segs(seg_points(segs_a), segs_b),
               dist_to_segs(seg_points(segs_b), segs_a))


def moving_crease_area(pattern):
    """Measured area of the moving-crease region and its closed-form bound."""
    region = pattern.moving_region
    area = abs(polygon_area2(region))
    ab = pattern.params.alpha + pattern.params.beta
    u_b = np.array([np.cos(ab), np.sin(ab)])
    reach_a = abs(float(pattern.points_dev["p_alpha"][0]))
    reach_b = abs(float(pattern.points_dev["p_beta"] @ u_b))
    bound = 1.0 * (reach_a + reach_b)
    return float(area), float(bound)


def check_flatness(state, near_state=None) -> VerificationReport:
    """At t = 1: prismoidal geometry must lie in a single plane (z-spread
    below tolerance) with an acyclic layer order per slab. Layer relations are
    read from `near_state` (a fold at t just below 1: the approach direction);
    residual regions are reported separately with their heights."""
    t0 = time.perf_counter()
    rep = VerificationReport("flatness")
    residual_heights = []
    for i, fs in enumerate(state.slabs):
        if fs.slab.residual:
            residual_heights.append(fs.h)
            continue
        pts = np.vstack([tri.xyz for tri in state.global_triangles(i)])
        spread = float(pts[:, 2].max() - pts[:, 2].min())
        rep.worst = max(rep.worst, spread)
        if spread > FLAT_TOL * max(1.0, abs(state.z_base)):
            rep.fail(spread, f"slab {i} z-spread {spread:.3e}")
        if near_state is not None:
            cyc = layer_order_cycles(near_state.slabs[i])
            if cyc:
                rep.fail(1.0, f"slab {i} layer order has a cycle: {cyc[:6]}")
    rep.witnesses.append({"residual_heights": residual_heights})
    rep.runtime = time.perf_counter() - t0
    return rep


def layer_order_cycles(folded_slab, eps_overlap=1e-12):
    """Directed layer relations between plan-overlapping triangles at t -> 1,
    ordered by their z at the shared overlap; returns cycles if any."""
    tris = folded_slab.triangles
    n = len(tris)
    order = {}
    for i in range(n):
        for j in range(i + 1, n):
            pi = tris[i].xyz[:, :2]
            pj = tris[j].xyz[:, :2]
            area = overlap_area2(pi, pj)
            if area <= eps_overlap:
                continue
            zi = float(tris[i].xyz[:, 2].mean())
            zj = float(tris[j].xyz[:, 2].mean())
            if abs(zi - zj) < 1e-15:
                continue
            if zi < zj:
                order.setdefault(i, set()).add(j)
            else:
                order.setdefault(j, set()).add(i)
    # cycle detection over the sparse relation
    color = {}
    stack = []

    def visit(u):
        color[u] = 1
        stack.append(u)
        for v in order.get(u, ()):
            if color.get(v, 0) == 1:
                return stack[stack.index(v):] + [v]
            if color.get(v, 0) == 0:
                cyc = visit(v)
                if cyc:
                    return cyc
        color[u] = 2
        stack.pop()
        return None

    for u in list(order.keys()):
        if color.get(u, 0) == 0:
            cyc = visit(u)
            if cyc:
                return cyc
    return []


def run_reports(reports):
    """Human summary + aggregate ok flag."""
    lines = [str(r) for r in reports]
    ok = all(r.ok for r in reports)
    return ok, "\n".join(lines)
