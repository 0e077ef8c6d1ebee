"""Continuous folding: the per-gadget fold family, whole-slab folds, and the
stacked global composition.

The fold family of one gadget is parameterized by p'_alpha sliding along the
alpha face crease from c_alpha (unfolded) to p_alpha (flat). Outside the fill
quad (o, p_alpha, q, p_beta) every piece moves rigidly with a face-crease
fold; inside it, p'_alpha is trilaterated from o, p_alpha, q and the one free
parameter (the top-plane height) is pinned by requiring the straight-line
distance |p'_alpha - p_beta| to equal the developed (intrinsic) distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import gadgets
from .gadgets import (GadgetPattern, IN_OUT, OUT_OUT, SpanningEdgeParams,
                      build_in_out, build_out_out, edge_params,
                      geometric_edge_kind, panel_position)
from .geom import angle_between, unit

EPS_SOLVE = 1e-11
EPS_ISO = 1e-9
MAX_SOLVE_ITERS = 200


class FoldSolveError(RuntimeError):
    """Root finding for the fold family failed; carries the residual."""


class FoldGeometryError(RuntimeError):
    """Distance-constraint reconstruction was inconsistent beyond eps_iso."""


@dataclass
class FoldedTriangle:
    xyz: np.ndarray        # (3, 3) folded vertex positions
    dev: np.ndarray        # (3, 2) developed coordinates (isometry reference)
    piece: str
    moving: bool = False


@dataclass
class FoldedGadget:
    t: float
    h: float                       # top-plane height (canonical units)
    pattern: GadgetPattern
    p_alpha_prime: np.ndarray      # 3D position (canonical frame)
    p_alpha_prime_dev: np.ndarray
    vertex_positions: dict         # pattern point name -> 3D canonical position
    triangles: list                # FoldedTriangle
    base_angle: float | None = None
    solve_residual: float = 0.0

    def all_points(self):
        return np.vstack([tri.xyz for tri in self.triangles])


# --- the one-parameter family --------------------------------------------------

def _fill_dev(pattern: GadgetPattern, s: float):
    c_a = pattern.points_dev["c_alpha"]
    p_a = pattern.points_dev["p_alpha"]
    return c_a + s * (p_a - c_a)


def fill_state(pattern: GadgetPattern, h: float) -> dict:
    """Canonical 3D positions of the fill-quad corners at top height h.

    For across-the-line p_beta, the material between the spanning edge and the
    quad forms two slivers hinged at the (still creased) edge: p_beta is then
    placed by rigid distances from o and c_beta, closing |q - p_beta|.
    """
    p = pattern.params
    _, _, e = p.canonical_axes()
    o3 = np.zeros(3)
    q3 = np.array([e[0], e[1], h])
    pa_dev = pattern.points_dev["p_alpha"]
    pa3 = panel_position(pattern, "alpha", "bottom", pa_dev[0], pa_dev[1], h)
    corners = {"o": o3, "p_alpha": pa3, "q": q3}
    if pattern.pb_across:
        db = pattern.d_beta
        xi_cb = db / np.tan(p.beta)
        cb3 = panel_position(pattern, "beta", "bottom", xi_cb, db, h)
        corners["c_beta"] = cb3
        corners["p_beta"] = _sliver_pb(pattern, h, cb3, q3)
    else:
        xi_b, eta_b = pattern.beta_face_coords(pattern.points_dev["p_beta"])
        corners["p_beta"] = panel_position(pattern, "beta", "bottom", xi_b, eta_b, h)
    return corners


def _sliver_pb(pattern: GadgetPattern, h: float, cb3, q3):
    """p_beta of an across-the-line pattern: rigid distances to o and c_beta
    leave one hinge angle about the edge segment, closed by |q - p_beta|."""
    dev = pattern.points_dev
    pb_dev = dev["p_beta"]
    r_o = float(np.linalg.norm(pb_dev - dev["o"]))
    r_c = float(np.linalg.norm(pb_dev - dev["c_beta"]))
    r_q = float(np.linalg.norm(pb_dev - dev["q"]))
    L = float(np.linalg.norm(cb3))
    u = cb3 / L
    x = (r_o * r_o - r_c * r_c + L * L) / (2 * L)
    rho = np.sqrt(max(r_o * r_o - x * x, 0.0))
    center = x * u
    # orthonormal frame about the hinge axis
    ref = np.array([0.0, 0.0, 1.0])
    if abs(float(u @ ref)) > 0.99:
        ref = np.array([1.0, 0.0, 0.0])
    e1 = ref - float(ref @ u) * u
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    if rho < 1e-15:
        return center
    q_rel = q3 - center
    A, B = float(q_rel @ e1), float(q_rel @ e2)
    amp = np.hypot(A, B)
    k = (float(q_rel @ q_rel) + rho * rho - r_q * r_q) / (2 * rho)
    # branch reference: blend of the two exact endpoints of the motion
    # (alpha-plane material at h = H, coplanar with the beta panel at h = 0)
    H = pattern.params.height
    p_start = gadgets.initial_position(pattern, "p_beta")
    xi_b, eta_b = pattern.beta_face_coords(pb_dev)
    p_end = panel_position(pattern, "beta", "bottom", xi_b, eta_b, 0.0)
    w_mix = np.clip(h / H, 0.0, 1.0)
    target = w_mix * p_start + (1.0 - w_mix) * p_end
    if amp < 1e-14:
        tr = target - center
        tr = tr - float(tr @ u) * u
        n = np.linalg.norm(tr)
        if n < 1e-15:
            return center + rho * e1
        return center + rho * tr / n
    base = np.arctan2(B, A)
    dphi = np.arccos(np.clip(k / amp, -1.0, 1.0))
    best = None
    for phi in (base + dphi, base - dphi):
        cand = center + rho * (np.cos(phi) * e1 + np.sin(phi) * e2)
        d = float(np.linalg.norm(cand - target))
        if best is None or d < best[0]:
            best = (d, cand)
    return best[1]


def _trilaterate(base_a, base_b, base_c, ra, rb, rc, opposite_of):
    """Point at given distances from three base points, on the far side of
    their plane from `opposite_of`. Tiny negative out-of-plane discriminants
    clip to zero."""
    ex = base_b - base_a
    d = np.linalg.norm(ex)
    ex = ex / d
    v = base_c - base_a
    i = float(ex @ v)
    ey = v - i * ex
    ny = np.linalg.norm(ey)
    ey = ey / ny
    j = float(ey @ v)
    ez = np.cross(ex, ey)
    x = (ra * ra - rb * rb + d * d) / (2 * d)
    y = (ra * ra - rc * rc + i * i + j * j - 2 * i * x) / (2 * j)
    z2 = ra * ra - x * x - y * y
    z = np.sqrt(max(z2, 0.0))
    if float((opposite_of - base_a) @ ez) > 0:
        z = -z
    return base_a + x * ex + y * ey + z * ez


def fill_residual(pattern: GadgetPattern, s: float, h: float, corners=None):
    """Isometry defect of the hole diagonal: |p' - p_beta| minus intrinsic."""
    if corners is None:
        corners = fill_state(pattern, h)
    pd = _fill_dev(pattern, s)
    dev = pattern.points_dev
    p3 = _trilaterate(corners["o"], corners["p_alpha"], corners["q"],
                      np.linalg.norm(pd - dev["o"]),
                      np.linalg.norm(pd - dev["p_alpha"]),
                      np.linalg.norm(pd - dev["q"]),
                      opposite_of=corners["p_beta"])
    dev_dist = float(np.linalg.norm(pd - dev["p_beta"]))
    return float(np.linalg.norm(p3 - corners["p_beta"]) - dev_dist), p3


def solve_height(pattern: GadgetPattern, s: float):
    """Top-plane height at which the fill with p'(s) closes isometrically.
    The residual is monotone in h; bracketed root finding (brentq)."""
    H = pattern.params.height
    if s <= 1e-12:
        return H
    if s >= 1.0 - 1e-12:
        return 0.0
    f = lambda h: fill_residual(pattern, s, h)[0]
    lo, hi = 0.0, H
    if f(lo) < 0 or f(hi) > 0:
        hs = np.linspace(0.0, H, 65)
        vals = [f(x) for x in hs]
        k = next((i for i in range(len(hs) - 1) if vals[i] > 0 >= vals[i + 1]), None)
        if k is None:
            raise FoldSolveError(f"no height bracket at s={s}: residuals "
                                 f"[{vals[0]:.2e}, {vals[-1]:.2e}]")
        lo, hi = hs[k], hs[k + 1]
    return float(brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=MAX_SOLVE_ITERS))


def solve_family_parameter(pattern: GadgetPattern, h: float):
    """Inverse of solve_height: the p' position s in [0, 1] at a given height."""
    H = pattern.params.height
    if h >= H * (1 - 1e-12):
        return 0.0
    if h <= 1e-15:
        return 1.0
    f = lambda s: fill_residual(pattern, s, h)[0]
    f0, f1 = f(0.0), f(1.0)
    if f0 < 0 or f1 > 0:
        ss = np.linspace(0.0, 1.0, 65)
        vals = [f(x) for x in ss]
        k = next((i for i in range(len(ss) - 1) if vals[i] > 0 >= vals[i + 1]), None)
        if k is None:
            raise FoldSolveError(f"no family bracket at h={h}")
        return float(brentq(f, ss[k], ss[k + 1], xtol=1e-15, rtol=8.9e-16,
                            maxiter=MAX_SOLVE_ITERS))
    return float(brentq(f, 0.0, 1.0, xtol=1e-15, rtol=8.9e-16, maxiter=MAX_SOLVE_ITERS))


def solve_p_alpha_prime(pattern: GadgetPattern, t: float):
    """p'_alpha of the fold family at parameter t: (3D point, residual, h)."""
    if pattern.pb_across:
        h = (1.0 - float(t)) * pattern.params.height
        s = solve_family_parameter(pattern, h)
    else:
        s = float(t)
        h = solve_height(pattern, s)
    if s <= 1e-12:
        return gadgets.initial_position(pattern, "c_alpha"), 0.0, h
    res, p3 = fill_residual(pattern, s, h)
    if abs(res) > 100 * EPS_SOLVE:
        raise FoldSolveError(f"fill residual {res:.3e} after solve at t={t}")
    return p3, float(res), h


# --- standalone gadget fold -----------------------------------------------------

def gadget_positions(pattern: GadgetPattern, s: float, h: float):
    """Piece triangles + named vertex positions at family position (s, h)."""
    tris = []
    corners = fill_state(pattern, h)
    pd = _fill_dev(pattern, s)
    dev = pattern.points_dev
    if s <= 1e-12:
        p3 = gadgets.initial_position(pattern, "c_alpha")
        res = 0.0
    else:
        res, p3 = fill_residual(pattern, s, h, corners)
    for pc in pattern.pieces:
        if pc.kind != "panel":
            continue
        poly3 = np.array([panel_position(pattern, pc.side, pc.panel, xi, eta, h)
                          for xi, eta in pc.face_coords])
        d2 = pc.face_coords
        tris.append(FoldedTriangle(xyz=poly3[[0, 1, 2]], dev=d2[[0, 1, 2]], piece=pc.name))
        tris.append(FoldedTriangle(xyz=poly3[[0, 2, 3]], dev=d2[[0, 2, 3]], piece=pc.name))
    corners3 = dict(corners)
    corners3["p_prime"] = p3
    corners2 = {"o": dev["o"], "p_alpha": dev["p_alpha"], "q": dev["q"],
                "p_beta": dev["p_beta"], "c_beta": dev["c_beta"], "p_prime": pd}
    for pc in pattern.pieces:
        if pc.kind != "fill":
            continue
        xyz = np.array([corners3[c] for c in pc.corners])
        d2 = np.array([corners2[c] for c in pc.corners])
        tris.append(FoldedTriangle(xyz=xyz, dev=d2, piece=pc.name, moving=True))
    positions = {}
    for name in pattern.points_dev:
        if name in corners3:
            positions[name] = corners3[name]
        else:
            positions[name] = _fill_material_position(pattern, pattern.points_dev[name],
                                                      corners2, corners3)
    positions["p_alpha_prime"] = p3
    return tris, positions, p3, pd, float(res)


def _fill_material_position(pattern, target_dev, corners2, corners3):
    """3D position of a material point inside the fill quad (barycentric)."""
    best = None
    for pc in pattern.pieces:
        if pc.kind != "fill":
            continue
        tri2 = np.array([corners2[c] for c in pc.corners])
        bary = _barycentric(tri2, target_dev)
        if bary is None:
            continue
        score = float(np.min(bary))
        if best is None or score > best[0]:
            tri3 = np.array([corners3[c] for c in pc.corners])
            best = (score, np.clip(bary, 0.0, None) @ tri3)
    if best is None:
        return np.array([np.nan, np.nan, np.nan])
    return best[1]


def _barycentric(tri2, p):
    a, b, c = tri2
    m = np.column_stack([b - a, c - a])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) < 1e-15:
        return None
    inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
    uv = inv @ (p - a)
    return np.array([1.0 - uv[0] - uv[1], uv[0], uv[1]])


def fold_gadget(pattern: GadgetPattern, t: float) -> FoldedGadget:
    """Folded state of a standalone gadget at fold parameter t in [0, 1].

    t moves p'_alpha linearly along c_alpha -> p_alpha and the height is
    solved. Across-the-line patterns are degenerate at the unfolded end (the
    whole quad is planar there, so every p' position closes); those run on a
    linear height schedule with the family position solved instead.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("fold parameter t must lie in [0, 1]")
    if pattern.pb_across:
        h = (1.0 - float(t)) * pattern.params.height
        s = solve_family_parameter(pattern, h)
    else:
        s = float(t)
        h = solve_height(pattern, s)
    tris, positions, p3, pd, res = gadget_positions(pattern, s, h)
    fg = FoldedGadget(t=t, h=h, pattern=pattern, p_alpha_prime=p3,
                      p_alpha_prime_dev=pd, vertex_positions=positions,
                      triangles=tris, solve_residual=res)
    fg.base_angle = mechanism_base_angle(pattern, fg)
    return fg


def mechanism_base_angle(pattern: GadgetPattern, fg: FoldedGadget):
    """Base angle of the rigid sub-mechanism: rotate the beta side about the
    spanning-edge axis until |p_alpha - p_beta| recovers its developed value,
    then measure the angle between the bottom edge directions. Opens from
    theta (flat) to alpha + beta (unfolded)."""
    p = pattern.params
    u_a, u_b, _ = p.canonical_axes()
    o3 = fg.vertex_positions["o"]
    q3 = fg.vertex_positions["q"]
    pa = fg.vertex_positions["p_alpha"]
    pb = fg.vertex_positions["p_beta"]
    axis_v = q3 - o3
    n = np.linalg.norm(axis_v)
    if n < 1e-12:
        return float(p.theta)
    axis = axis_v / n
    dev = pattern.points_dev
    target = float(np.linalg.norm(dev["p_alpha"] - dev["p_beta"]))

    def rot(vec, ang):
        c, s = np.cos(ang), np.sin(ang)
        return vec * c + np.cross(axis, vec) * s + axis * float(axis @ vec) * (1 - c)

    def f(ang):
        return float(np.linalg.norm((o3 + rot(pb - o3, ang)) - pa)) - target

    best = None
    for hi in (np.pi, -np.pi):
        try:
            if f(0.0) * f(hi) <= 0:
                root = float(brentq(f, min(0.0, hi), max(0.0, hi), xtol=1e-14))
                if best is None or abs(root) < abs(best):
                    best = root
        except ValueError:
            continue
    if best is None:
        return float(angle_between(u_a, u_b))
    return float(angle_between(u_a, rot(u_b, best)))


# --- whole-slab folding ---------------------------------------------------------

@dataclass
class FaceFold:
    """Per-face fold data: width, lean toward the fold side, crease offset."""

    b0: np.ndarray
    u: np.ndarray          # unit bottom edge direction (walk order)
    hhat: np.ndarray       # horizontal unit normal on the fold side
    m: np.ndarray          # unit in-face direction bottom -> top
    w: float
    c: float               # lean along hhat
    d: float               # crease offset from the bottom edge

    def face_coords(self, p):
        rel = np.asarray(p, dtype=float) - self.b0
        return float(rel @ self.u), float(rel @ self.m)

    def position(self, xi, eta, h):
        lam = gadgets.panel_angle(self.w, self.c, self.d, +1.0, h)
        z = np.array([0.0, 0.0, 1.0])
        if eta <= self.d + 1e-12:
            sec = eta * np.array([np.cos(lam), np.sin(lam)])
        else:
            C = self.d * np.array([np.cos(lam), np.sin(lam)])
            T = np.array([self.w * self.c, h])
            tv = T - C
            nn = np.linalg.norm(tv)
            tv = tv / nn if nn > 1e-15 else np.array([np.cos(lam), np.sin(lam)])
            sec = C + (eta - self.d) * tv
        return self.b0 + xi * self.u + sec[0] * self.hhat + sec[1] * z


def face_fold_data(face, fold_side: int) -> FaceFold:
    u3 = face.b1 - face.b0
    u3 = u3 / np.linalg.norm(u3)
    z = np.array([0.0, 0.0, 1.0])
    hhat = np.cross(z, u3)
    hhat = hhat / np.linalg.norm(hhat)
    if fold_side < 0:
        hhat = -hhat
    span = face.t0 - face.b0
    m = span - float(span @ u3) * u3
    w = float(np.linalg.norm(m))
    m = m / w
    c = float(m @ hhat)
    d = (1.0 + c) * w / 2.0
    return FaceFold(b0=face.b0.astype(float), u=u3, hhat=hhat, m=m, w=w, c=c, d=d)


@dataclass
class EdgeFold:
    params: SpanningEdgeParams
    kind: str
    pattern: GadgetPattern
    wall: int
    edge: int
    s: float = 0.0
    residual: float = 0.0


@dataclass
class FoldedSlab:
    slab: object
    t: float
    h: float
    triangles: list                # FoldedTriangle, slab-local z in [0, h]
    edge_folds: list
    boundary_bottom: list          # plan segments of the bottom cross-section
    boundary_top: list
    consistency: float = 0.0


def wall_fold_side(wall) -> int:
    turns = [wall.plan_turn(i) for i in range(max(wall.edge_count, 0))]
    lefts = sum(1 for x in turns if x >= 0)
    return 1 if lefts * 2 >= len(turns) else -1


def fold_slab(slab, labelings, t: float) -> FoldedSlab:
    """Fold every wall of a slab at parameter t.

    The top plane descends to the common height h(t) = (1 - t) * height; each
    gadget solves its family position from that height, so all faces imply the
    same height by construction. Shared points between the face folds and the
    gadget fills are cross-checked against eps_iso. Residual (non-prismoidal)
    slabs are carried rigidly.
    """
    H = slab.height
    h = (1.0 - t) * H
    tris = []
    edge_folds = []
    worst = 0.0
    if slab.residual:
        for f in slab.faces():
            poly = f.polygon().astype(float)
            poly[:, 2] -= slab.z0
            dev2 = _develop_polygon(poly)
            for k in range(1, len(poly) - 1):
                tris.append(FoldedTriangle(xyz=poly[[0, k, k + 1]],
                                           dev=dev2[[0, k, k + 1]], piece="residual"))
        return FoldedSlab(slab=slab, t=t, h=H, triangles=tris, edge_folds=[],
                          boundary_bottom=_chords(slab, "bottom"),
                          boundary_top=_chords(slab, "top"))
    for wi, wall in enumerate(slab.walls):
        fold_side = wall_fold_side(wall)
        folds = [face_fold_data(f, fold_side) for f in wall.faces]
        claims = [[None, None] for _ in wall.faces]   # [left edge, right edge]
        for ei in range(wall.edge_count):
            p = edge_params(wall, ei)
            if p.flat_edge:
                continue
            kind = geometric_edge_kind(wall, ei, fold_side)
            pattern = build_out_out(p) if kind == OUT_OUT else build_in_out(p)
            ef = EdgeFold(params=p, kind=kind, pattern=pattern, wall=wi, edge=ei)
            edge_folds.append(ef)
            claims[ei][1] = ef
            claims[(ei + 1) % len(wall.faces)][0] = ef
        for ef in edge_folds:
            if ef.wall != wi:
                continue
            worst = max(worst, _fold_edge_region(slab, wall, folds, ef, h, tris))
        for fi, face in enumerate(wall.faces):
            _fold_face_middle(folds[fi], face, claims[fi], h, tris)
    fs = FoldedSlab(slab=slab, t=t, h=h, triangles=tris, edge_folds=edge_folds,
                    boundary_bottom=_chords(slab, "bottom"),
                    boundary_top=_chords(slab, "top"), consistency=worst)
    if worst > EPS_ISO * max(1.0, slab.height) * 1e3:
        raise FoldGeometryError(
            f"inconsistent gadget vs face reconstruction ({worst:.3e}) in slab {slab.tag}")
    return fs


def _chords(slab, which):
    segs = []
    for f in slab.faces():
        if which == "bottom":
            segs.append((f.b0[:2].copy(), f.b1[:2].copy()))
        else:
            segs.append((f.t0[:2].copy(), f.t1[:2].copy()))
    return segs


def _develop_polygon(poly):
    o = poly[0]
    u = unit(poly[1] - poly[0])
    n = np.zeros(3)
    for i in range(1, len(poly) - 1):
        n += np.cross(poly[i] - poly[0], poly[i + 1] - poly[0])
    n = unit(n)
    v = np.cross(n, u)
    rel = poly - o
    return np.stack([rel @ u, rel @ v], axis=1)


def _edge_world_map(slab, p: SpanningEdgeParams, h):
    """Canonical -> world (slab-local z) at top height h. A primary vertex on
    the top plane rides down with it."""
    origin = p.frame_origin.copy()
    origin[2] -= slab.z0
    if p.primary_at_top:
        origin[2] = h

    def world(pt):
        return origin + p.edge_length * (p.frame_rotation @ np.asarray(pt, dtype=float))
    return world


def _edge_face_mid_cut(slab, wall, ef: EdgeFold, side: str):
    """Mid cut of the claimed face (world t=0 points: bottom mid, top mid)."""
    fidx = ef.edge if side == "alpha" else (ef.edge + 1) % len(wall.faces)
    f = wall.faces[fidx]
    return 0.5 * (f.b0 + f.b1), 0.5 * (f.t0 + f.t1)


def _canonical_face_coords(p: SpanningEdgeParams, pattern, side, world_pt):
    """Face coordinates (xi, eta) of a mesh-frame point in the edge's
    canonical development of the given face."""
    rel = np.asarray(world_pt, dtype=float) - p.frame_origin
    pc = (p.frame_rotation.T @ rel) / p.edge_length
    u_a, u_b, e = p.canonical_axes()
    if side == "alpha":
        m = (e - np.cos(p.alpha) * u_a) / np.sin(p.alpha)
        return float(pc @ u_a), float(pc @ m)
    m = (e - np.cos(p.beta) * u_b) / np.sin(p.beta)
    return float(pc @ u_b), float(pc @ m)


def _fold_edge_region(slab, wall, folds, ef: EdgeFold, h, tris):
    """All material claimed by one gadget: four fill triangles plus the four
    panel pieces out to the mid cuts of the incident faces."""
    p = ef.params
    pattern = ef.pattern
    ell = p.edge_length
    h_c = min(h / ell, pattern.params.height)
    ef.s = solve_family_parameter(pattern, h_c)
    world = _edge_world_map(slab, p, h)
    corners = fill_state(pattern, h_c)
    pd = _fill_dev(pattern, ef.s)
    if ef.s <= 1e-12:
        p3 = gadgets.initial_position(pattern, "c_alpha")
        ef.residual = 0.0
    else:
        ef.residual, p3 = fill_residual(pattern, ef.s, h_c, corners)
    dev = pattern.points_dev
    corners3 = {name: world(pt) for name, pt in corners.items()}
    corners3["p_prime"] = world(p3)
    corners2 = {"o": dev["o"], "q": dev["q"], "p_alpha": dev["p_alpha"],
                "p_beta": dev["p_beta"], "c_beta": dev["c_beta"], "p_prime": pd}
    tag = f"w{ef.wall}e{ef.edge}"
    for pc in pattern.pieces:
        if pc.kind != "fill":
            continue
        xyz = np.array([corners3[c] for c in pc.corners])
        d2 = ell * np.array([corners2[c] for c in pc.corners])
        tris.append(FoldedTriangle(xyz=xyz, dev=d2, piece=f"fill_{tag}", moving=True))
    # panel quarters out to the mid cuts, in canonical face coordinates
    worst = 0.0
    for side in ("alpha", "beta"):
        bm, tm = _edge_face_mid_cut(slab, wall, ef, side)
        cut_b = _canonical_face_coords(p, pattern, side, bm)
        cut_t = _canonical_face_coords(p, pattern, side, tm)
        if p.primary_at_top:
            cut_b, cut_t = cut_t, cut_b
        w_side = pattern.w_alpha if side == "alpha" else pattern.w_beta
        d_side = pattern.d_alpha if side == "alpha" else pattern.d_beta
        if side == "alpha":
            p_pt = dev["p_alpha"]
            q_fc = (float(np.cos(p.alpha)), w_side)
        else:
            if pattern.pb_across:
                p_pt = (d_side / np.tan(p.beta), d_side)
            else:
                p_pt = pattern.beta_face_coords(dev["p_beta"])
            q_fc = (float(np.cos(p.beta)), w_side)

        def cut_at(eta):
            tt = (eta - cut_b[1]) / (cut_t[1] - cut_b[1])
            return cut_b[0] + tt * (cut_t[0] - cut_b[0])

        quads = [
            np.array([[0.0, 0.0], [cut_b[0], 0.0], [cut_at(d_side), d_side],
                      [p_pt[0], p_pt[1]]]),
            np.array([[p_pt[0], p_pt[1]], [cut_at(d_side), d_side],
                      [cut_t[0], w_side], [q_fc[0], q_fc[1]]]),
        ]
        for qi, quad in enumerate(quads):
            poly3 = np.array([world(panel_position(pattern, side,
                                                   "bottom" if qi == 0 else "top",
                                                   xi, eta, h_c))
                              for xi, eta in quad])
            d2 = ell * quad
            nm = f"panel_{side}{qi}_{tag}"
            tris.append(FoldedTriangle(xyz=poly3[[0, 1, 2]], dev=d2[[0, 1, 2]], piece=nm))
            tris.append(FoldedTriangle(xyz=poly3[[0, 2, 3]], dev=d2[[0, 2, 3]], piece=nm))
        # consistency: the crease point on this face must match the wall-side
        # face fold evaluated at the same material point
        fidx = ef.edge if side == "alpha" else (ef.edge + 1) % len(wall.faces)
        ffold = folds[fidx]
        if side == "alpha":
            name = "p_alpha"
        else:
            name = "c_beta" if pattern.pb_across else "p_beta"
        if name in corners3:
            p0 = world_initial(slab, p, pattern, name)
            xi_f, eta_f = ffold.face_coords(p0)
            via_face = ffold.position(xi_f, eta_f, h)
            worst = max(worst, float(np.linalg.norm(via_face - corners3[name])))
    return worst


def world_initial(slab, p: SpanningEdgeParams, pattern, name):
    w = p.to_world(gadgets.initial_position(pattern, name))[0].copy()
    w[2] -= slab.z0
    return w


def _fold_face_middle(ffold: FaceFold, face, claims, h, tris):
    """Strip pieces of one face between its end gadget claims; ends without a
    gadget extend to the lateral edge."""
    left_ef, right_ef = claims
    blen = float(np.linalg.norm(face.b1 - face.b0))
    xi_t0, _ = ffold.face_coords(face.t0)
    xi_t1, _ = ffold.face_coords(face.t1)
    w, d = ffold.w, ffold.d
    bl, tl = (0.0, xi_t0)
    br, tr = (blen, xi_t1)
    if left_ef is not None:
        bl, tl = blen / 2.0, (xi_t0 + xi_t1) / 2.0
    if right_ef is not None:
        br, tr = blen / 2.0, (xi_t0 + xi_t1) / 2.0
    if br - bl <= 1e-12 and abs(tr - tl) <= 1e-12:
        return
    cl = bl + (tl - bl) * (d / w)
    cr = br + (tr - br) * (d / w)
    name = f"face{face.source_face}"
    quads = [
        np.array([[bl, 0.0], [br, 0.0], [cr, d], [cl, d]]),
        np.array([[cl, d], [cr, d], [tr, w], [tl, w]]),
    ]
    for quad in quads:
        poly3 = np.array([ffold.position(xi, eta, h) for xi, eta in quad])
        tris.append(FoldedTriangle(xyz=poly3[[0, 1, 2]], dev=quad[[0, 1, 2]], piece=name))
        tris.append(FoldedTriangle(xyz=poly3[[0, 2, 3]], dev=quad[[0, 2, 3]], piece=name))


# --- global composition ---------------------------------------------------------

@dataclass
class StackedFoldedState:
    t: float
    slabs: list                    # FoldedSlab, in stacking order
    z_intervals: list              # [(lo, hi)] per slab (global z)
    z_base: float

    @property
    def ordering(self):
        return list(range(len(self.slabs)))

    def global_triangles(self, i):
        lo = self.z_intervals[i][0]
        out = []
        for tri in self.slabs[i].triangles:
            xyz = tri.xyz.copy()
            xyz[:, 2] += lo
            out.append(FoldedTriangle(xyz=xyz, dev=tri.dev, piece=tri.piece,
                                      moving=tri.moving))
        return out

    def all_triangles(self):
        out = []
        for i in range(len(self.slabs)):
            out.extend(self.global_triangles(i))
        return out


def compose_global(folded_slabs, t: float, z_base: float) -> StackedFoldedState:
    """Stack folded slabs into interior-disjoint z-intervals: each slab's
    bottom plane sits at the cumulative folded height of everything below."""
    ordered = sorted(folded_slabs, key=lambda fs: fs.slab.z0)
    intervals = []
    z = z_base
    for fs in ordered:
        intervals.append((z, z + fs.h))
        z = z + fs.h
    return StackedFoldedState(t=t, slabs=ordered, z_intervals=intervals, z_base=z_base)
