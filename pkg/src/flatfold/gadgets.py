"""Crease-pattern gadgets that collapse prismoid spanning edges.

Two constructions exist: OUT_OUT (two vertex creases through the primary
vertex o) and IN_OUT (a single vertex crease). Both produce flat-foldable
patterns whose continuous fold family is parameterized by a point p'_alpha
sliding along the alpha face crease between c_alpha and p_alpha.

Conventions, fixed by the flat-foldability (Kawasaki) identities and kept
consistent everywhere:

  - admissible parameters: 0 < theta, |alpha-beta| < theta < alpha+beta <= pi
  - cos phi_a = (cos b - cos a cos t) / (sin a sin t)  (dihedral of the alpha
    face against the base, measured through the base wedge), symmetric for b
  - OUT_OUT folds both faces away from the base wedge: crease offsets
    (1 - cos phi) w / 2 from the bottom edge; vertex creases at
    (a + b - t)/4 from each bottom edge
  - IN_OUT folds both faces toward the base wedge: offsets (1 + cos phi) w / 2;
    one vertex crease at (a + b - t)/2 from the alpha bottom edge; p_beta sits
    on the beta face crease where the fan at q closes flat (the unique point
    compatible with a rigid top attachment)

Canonical frame: o at origin, u_alpha = +x, u_beta = (cos t, -sin t, 0), the
spanning edge normalized to unit length rising in +z. The development places
u_alpha at angle 0, the spanning edge at angle a, u_beta at angle a + b.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import angle_between, cross2, polygon_area2, rot2, unit

OUT_OUT = "OutOut"
IN_OUT = "InOut"

ADMISSIBLE_MARGIN = 1e-3


class AdmissibilityError(ValueError):
    """Raised when (theta, alpha, beta) violates a spanning-edge constraint."""


def check_admissible(theta, alpha, beta, margin=0.0):
    if theta <= margin:
        raise AdmissibilityError(f"theta={theta} must be positive (touching faces)")
    if alpha + beta > np.pi + 1e-12:
        raise AdmissibilityError(f"alpha+beta={alpha+beta} exceeds pi (not a primary vertex)")
    if abs(alpha - beta) + margin >= theta:
        raise AdmissibilityError(f"theta={theta} <= |alpha-beta|={abs(alpha-beta)} (degenerate)")
    if theta >= alpha + beta - margin:
        raise AdmissibilityError(f"theta={theta} >= alpha+beta={alpha+beta} (edge already flat)")


def sample_admissible(rng, margin=ADMISSIBLE_MARGIN):
    """Uniform draw from the open admissible region with a boundary margin."""
    while True:
        a = rng.uniform(margin, np.pi - margin)
        b = rng.uniform(margin, np.pi - margin)
        if a + b > np.pi - margin:
            continue
        lo, hi = abs(a - b) + margin, a + b - margin
        if hi <= lo:
            continue
        return float(rng.uniform(lo, hi)), float(a), float(b)


def cos_phi(theta, alpha, beta):
    """Face-vs-base dihedral cosines (alpha side, beta side)."""
    ca = (np.cos(beta) - np.cos(alpha) * np.cos(theta)) / (np.sin(alpha) * np.sin(theta))
    cb = (np.cos(alpha) - np.cos(beta) * np.cos(theta)) / (np.sin(beta) * np.sin(theta))
    return float(ca), float(cb)


@dataclass(frozen=True)
class SpanningEdgeParams:
    """Affine-normalized description of one prismoid spanning edge."""

    theta: float
    alpha: float
    beta: float
    edge_length: float = 1.0
    primary_at_top: bool = False
    frame_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    frame_origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    flat_edge: bool = False

    def __post_init__(self):
        if not self.flat_edge:
            check_admissible(self.theta, self.alpha, self.beta)

    @property
    def cos_phi_alpha(self):
        return cos_phi(self.theta, self.alpha, self.beta)[0]

    @property
    def cos_phi_beta(self):
        return cos_phi(self.theta, self.alpha, self.beta)[1]

    @property
    def height(self):
        """Slab height spanned by a unit edge in the canonical frame."""
        ca = self.cos_phi_alpha
        return float(np.sin(self.alpha) * np.sqrt(max(0.0, 1.0 - ca * ca)))

    def canonical_axes(self):
        """(u_alpha, u_beta, edge_dir) unit vectors of the canonical frame."""
        t, a = self.theta, self.alpha
        ca = self.cos_phi_alpha
        sa = np.sqrt(max(0.0, 1.0 - ca * ca))
        u_a = np.array([1.0, 0.0, 0.0])
        u_b = np.array([np.cos(t), -np.sin(t), 0.0])
        e = np.array([np.cos(a), -np.sin(a) * ca, np.sin(a) * sa])
        return u_a, u_b, e

    def to_world(self, pts):
        """Map canonical (unit-edge) points into world coordinates."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.frame_origin + self.edge_length * (pts @ self.frame_rotation.T)


@dataclass(frozen=True)
class FaceCrease:
    """The single crease that collapses a spanning face onto the base."""

    side: str                    # "alpha" | "beta"
    w: float                     # face width between the parallel edges
    cos_phi: float
    fold_direction: str          # "toward_bottom" | "toward_top"
    offset_fraction: float       # crease offset from the bottom edge, as a fraction of w
    extension: float             # lateral excursion bound beyond the base projection
    crease_line: tuple           # segment endpoints in face coordinates (xi, eta)

    @property
    def offset(self):
        return self.offset_fraction * self.w


def face_crease(p: SpanningEdgeParams, side: str, fold_direction: str) -> FaceCrease:
    """Crease data for one spanning face of the edge's corner (unit edge)."""
    ca, cb = cos_phi(p.theta, p.alpha, p.beta)
    if side == "alpha":
        w, c, ang = np.sin(p.alpha), ca, p.alpha
    elif side == "beta":
        w, c, ang = np.sin(p.beta), cb, p.beta
    else:
        raise ValueError(f"side must be alpha or beta, got {side!r}")
    if fold_direction == "toward_bottom":
        frac = (1.0 - c) / 2.0
    elif fold_direction == "toward_top":
        frac = (1.0 + c) / 2.0
    else:
        raise ValueError(f"bad fold_direction {fold_direction!r}")
    d = frac * w
    # crease runs from the spanning edge (xi = d/tan(ang)) along the face
    start = (d / np.tan(ang), d)
    return FaceCrease(side=side, w=float(w), cos_phi=float(c),
                      fold_direction=fold_direction, offset_fraction=float(frac),
                      extension=float((1.0 - c) * w / 2.0),
                      crease_line=(start, (start[0] + 1.0, d)))


@dataclass
class PatternPiece:
    """A rigid panel or fill triangle of the pattern.

    Panel pieces carry face coordinates (xi along the bottom edge from o,
    eta perpendicular within the face); fill pieces carry dev corner names.
    """

    name: str
    kind: str                    # "panel" | "fill"
    side: str | None             # "alpha" | "beta" | None
    panel: str | None            # "bottom" | "top" | None
    face_coords: np.ndarray | None
    corners: tuple | None        # fill corner names, e.g. ("o", "p_alpha", "p_prime")
    dev: np.ndarray              # developed coordinates of the piece polygon


@dataclass
class GadgetPattern:
    """Developed crease pattern of one spanning-edge gadget (unit edge)."""

    kind: str
    params: SpanningEdgeParams
    points_dev: dict             # name -> (2,) dev coordinates
    points_3d: dict              # name -> (3,) canonical t=0 coordinates
    creases: list                # dicts: name, a, b (dev points), moving flag
    moving_region: np.ndarray    # dev polygon (quad o, p_alpha, q, p_beta)
    pieces: list                 # PatternPiece
    d_alpha: float
    d_beta: float
    fold_sign: float             # +1 folds away from the base wedge, -1 toward
    L_alpha: float
    L_beta: float
    pb_branch: str               # "closure" | "c_beta"
    pb_across: bool = False      # p_beta lies across the spanning line

    @property
    def w_alpha(self):
        return float(np.sin(self.params.alpha))

    @property
    def w_beta(self):
        return float(np.sin(self.params.beta))

    def dev_beta_to_xy(self, xi, eta):
        ab = self.params.alpha + self.params.beta
        u = np.array([np.cos(ab), np.sin(ab)])
        n = np.array([np.sin(ab), -np.cos(ab)])
        return xi * u + eta * n

    def beta_face_coords(self, xy):
        ab = self.params.alpha + self.params.beta
        u = np.array([np.cos(ab), np.sin(ab)])
        n = np.array([np.sin(ab), -np.cos(ab)])
        return float(xy @ u), float(xy @ n)

    def internal_vertices(self):
        """(name, dev point, crease direction list) for flat-state vertices."""
        out = []
        for name in ("p_alpha", "p_beta"):
            p = self.points_dev[name]
            dirs = []
            for cr in self.creases:
                if cr["moving"]:
                    continue
                for a, b in ((cr["a"], cr["b"]), (cr["b"], cr["a"])):
                    if np.linalg.norm(a - p) < 1e-12 and np.linalg.norm(b - p) > 1e-12:
                        dirs.append(b - p)
            out.append((name, p, dirs))
        return out


def _dev_points(theta, alpha, beta):
    o = np.zeros(2)
    q = np.array([np.cos(alpha), np.sin(alpha)])
    sp = q.copy()  # unit vector along the spanning edge in the development
    ab = alpha + beta
    u_b = np.array([np.cos(ab), np.sin(ab)])
    n_b = np.array([np.sin(ab), -np.cos(ab)])
    return o, q, sp, u_b, n_b


def build_out_out(p: SpanningEdgeParams) -> GadgetPattern:
    """Two vertex creases at (a+b-t)/4 from the bottom edges; both faces fold
    away from the base wedge (crease offsets (1 - cos phi) w / 2)."""
    t, a, b = p.theta, p.alpha, p.beta
    check_admissible(t, a, b)
    ca, cb = cos_phi(t, a, b)
    wa, wb = np.sin(a), np.sin(b)
    da, db = wa * (1.0 - ca) / 2.0, wb * (1.0 - cb) / 2.0
    delta = (a + b - t) / 4.0
    o, q, sp, u_b, n_b = _dev_points(t, a, b)
    p_a = np.array([da / np.tan(delta), da])
    r_b = db / np.sin(delta)
    p_b = r_b * np.array([np.cos(a + b - delta), np.sin(a + b - delta)])
    c_a = sp * (da / np.sin(a))
    c_b = sp * (db / np.sin(b))
    return _assemble(OUT_OUT, p, da, db, +1.0, o, q, p_a, p_b, c_a, c_b, "closure")


def build_in_out(p: SpanningEdgeParams) -> GadgetPattern:
    """One vertex crease at (a+b-t)/2 from the alpha bottom edge; both faces
    fold toward the base wedge (offsets (1 + cos phi) w / 2). p_beta is placed
    where the crease fan at q closes against the rigid top attachment; when
    that ray cannot reach the beta crease, c_beta is used instead."""
    t, a, b = p.theta, p.alpha, p.beta
    check_admissible(t, a, b)
    ca, cb = cos_phi(t, a, b)
    wa, wb = np.sin(a), np.sin(b)
    da, db = wa * (1.0 + ca) / 2.0, wb * (1.0 + cb) / 2.0
    big = (a + b - t) / 2.0
    o, q, sp, u_b, n_b = _dev_points(t, a, b)
    p_a = np.array([da / np.tan(big), da])
    c_a = sp * (da / np.sin(a))
    c_b = sp * (db / np.sin(b))
    # fan closure at q: the dev angle between q->p_alpha and q->p_beta must be
    # pi - (a+b+t)/2 for the top edges to land theta apart
    g2 = np.pi - (a + b + t) / 2.0
    v = unit(p_a - q)
    ray = rot2(-g2) @ v          # continuing clockwise past q->p_alpha
    denom = ray @ n_b
    p_b = None
    branch = "closure"
    if abs(denom) > 1e-14:
        s = (db - q @ n_b) / denom
        if s > 0:
            p_b = q + s * ray
    if p_b is None:
        p_b = c_b.copy()
        branch = "c_beta"
    return _assemble(IN_OUT, p, da, db, -1.0, o, q, p_a, p_b, c_a, c_b, branch)


def _assemble(kind, params, da, db, fold_sign, o, q, p_a, p_b, c_a, c_b, branch):
    t, a, b = params.theta, params.alpha, params.beta
    wa, wb = float(np.sin(a)), float(np.sin(b))
    ab = a + b
    sp = np.array([np.cos(a), np.sin(a)])
    u_b = np.array([np.cos(ab), np.sin(ab)])
    n_b = np.array([np.sin(ab), -np.cos(ab)])
    xi_pb, eta_pb = float(p_b @ u_b), float(p_b @ n_b)
    # p_beta landing strictly on the alpha side of the spanning line means the
    # beta face crease extends across the (locally unfolded) edge; the material
    # between the edge and the fill quad then forms two sliver pieces hinged
    # at the edge.
    across = cross2(sp, p_b) < -1e-12
    xi_cb = float(c_b @ u_b)
    L_a = 1.25 * max(1.0, p_a[0] + 0.25, np.cos(a) + 0.5)
    L_b = 1.25 * max(1.0, xi_pb + 0.25, xi_cb + 0.25, np.cos(b) + 0.5)

    def dev_b(xi, eta):
        return xi * u_b + eta * n_b

    beta_inner = (xi_cb, db) if across else (xi_pb, eta_pb)
    beta_inner_dev = c_b if across else p_b
    pieces = [
        PatternPiece("alpha_bottom", "panel", "alpha", "bottom",
                     face_coords=np.array([[0.0, 0.0], [L_a, 0.0], [L_a, da], [p_a[0], da]]),
                     corners=None,
                     dev=np.array([[0.0, 0.0], [L_a, 0.0], [L_a, da], [p_a[0], da]])),
        PatternPiece("alpha_top", "panel", "alpha", "top",
                     face_coords=np.array([[p_a[0], da], [L_a, da], [L_a, wa], [np.cos(a), wa]]),
                     corners=None,
                     dev=np.array([[p_a[0], da], [L_a, da], [L_a, wa], [np.cos(a), wa]])),
        PatternPiece("beta_bottom", "panel", "beta", "bottom",
                     face_coords=np.array([[0.0, 0.0], [L_b, 0.0], [L_b, db],
                                           [beta_inner[0], beta_inner[1]]]),
                     corners=None,
                     dev=np.array([dev_b(0, 0), dev_b(L_b, 0), dev_b(L_b, db),
                                   beta_inner_dev])),
        PatternPiece("beta_top", "panel", "beta", "top",
                     face_coords=np.array([[beta_inner[0], beta_inner[1]], [L_b, db],
                                           [L_b, wb], [np.cos(b), wb]]),
                     corners=None,
                     dev=np.array([beta_inner_dev, dev_b(L_b, db), dev_b(L_b, wb),
                                   dev_b(np.cos(b), wb)])),
    ]
    fill_specs = [("fill_o_pa", ("o", "p_alpha", "p_prime")),
                  ("fill_pa_q", ("p_alpha", "q", "p_prime")),
                  ("fill_q_pb", ("q", "p_beta", "p_prime")),
                  ("fill_pb_o", ("p_beta", "o", "p_prime"))]
    if across:
        fill_specs += [("sliver_o", ("o", "c_beta", "p_beta")),
                       ("sliver_q", ("c_beta", "q", "p_beta"))]
    for name, corners in fill_specs:
        pieces.append(PatternPiece(name, "fill", None, None, face_coords=None,
                                   corners=corners, dev=np.zeros((0, 2))))

    creases = [
        {"name": "face_alpha", "a": p_a.copy(), "b": np.array([L_a, da]), "moving": False},
        {"name": "face_beta", "a": p_b.copy(), "b": dev_b(L_b, db), "moving": False},
        {"name": "vertex_alpha", "a": o.copy(), "b": p_a.copy(), "moving": False},
        {"name": "vertex_beta", "a": o.copy(), "b": p_b.copy(), "moving": False},
        {"name": "geo_pa_q", "a": p_a.copy(), "b": q.copy(), "moving": False},
        {"name": "geo_pb_q", "a": p_b.copy(), "b": q.copy(), "moving": False},
        {"name": "geo_pa_pb", "a": p_a.copy(), "b": p_b.copy(), "moving": False},
        {"name": "moving_o", "a": o.copy(), "b": None, "moving": True},
        {"name": "moving_q", "a": q.copy(), "b": None, "moving": True},
        {"name": "moving_pb", "a": p_b.copy(), "b": None, "moving": True},
        {"name": "moving_pa", "a": p_a.copy(), "b": None, "moving": True},
    ]

    points_dev = {"o": o, "q": q, "p_alpha": p_a, "p_beta": p_b,
                  "c_alpha": c_a, "c_beta": c_b}
    pattern = GadgetPattern(
        kind=kind, params=params, points_dev=points_dev, points_3d={},
        creases=creases,
        moving_region=np.array([o, p_a, q, p_b]),
        pieces=pieces, d_alpha=float(da), d_beta=float(db),
        fold_sign=float(fold_sign), L_alpha=float(L_a), L_beta=float(L_b),
        pb_branch=branch, pb_across=bool(across))
    pattern.points_3d = {name: initial_position(pattern, name)
                         for name in points_dev}
    return pattern


def face_frame(pattern: GadgetPattern, side: str):
    """(u, h, w, c) for one face in the canonical frame: bottom edge direction,
    horizontal away-from-wedge normal, face width, lean along h."""
    p = pattern.params
    u_a, u_b, e = p.canonical_axes()
    z = np.array([0.0, 0.0, 1.0])
    if side == "alpha":
        u = u_a
        w = float(np.sin(p.alpha))
        m = (e - np.cos(p.alpha) * u) / np.sin(p.alpha)
    else:
        u = u_b
        w = float(np.sin(p.beta))
        m = (e - np.cos(p.beta) * u) / np.sin(p.beta)
    h = np.cross(u, z)
    # away normal: the base wedge lies toward the other bottom edge
    other = u_b if side == "alpha" else u_a
    if h @ other > 0:
        h = -h
    c = float(m @ h)
    return u, h, w, c


def panel_position(pattern: GadgetPattern, side: str, panel: str, xi, eta, h_top):
    """Canonical 3D position of a face point under the face-crease fold at top
    height h_top. Bottom panels rotate about the bottom edge; top panels hang
    from the descending top edge."""
    u, hn, w, c = face_frame(pattern, side)
    d = pattern.d_alpha if side == "alpha" else pattern.d_beta
    sig = pattern.fold_sign
    lam = panel_angle(w, c, d, sig, h_top)
    z = np.array([0.0, 0.0, 1.0])
    if panel == "bottom":
        sec = eta * np.array([np.cos(lam), np.sin(lam)])
    else:
        C = d * np.array([np.cos(lam), np.sin(lam)])
        T = np.array([w * c, h_top])
        tv = T - C
        n = np.linalg.norm(tv)
        if n < 1e-15:
            tv = np.array([np.cos(lam), np.sin(lam)])
        else:
            tv = tv / n
        sec = C + (eta - d) * tv
    return xi * u + sec[0] * hn + sec[1] * z


def panel_angle(w, c, d, sig, h_top):
    """Tilt of the bottom panel when the top edge is at height h_top."""
    K = (d * d + (w * c) ** 2 + h_top * h_top - (w - d) ** 2) / (2.0 * d)
    R = np.hypot(w * c, h_top)
    mu = np.arctan2(h_top, w * c)
    x = np.clip(K / R, -1.0, 1.0)
    return mu - sig * np.arccos(x)


def initial_position(pattern: GadgetPattern, name: str):
    """Canonical t=0 (prismoid) position of a named pattern point."""
    p = pattern.params
    u_a, u_b, e = p.canonical_axes()
    dev = pattern.points_dev[name]
    if name in ("o",):
        return np.zeros(3)
    if name in ("q",):
        return e.copy()
    if name in ("c_alpha", "c_beta"):
        r = np.linalg.norm(dev)
        return r * e
    m_a = (e - np.cos(p.alpha) * u_a) / np.sin(p.alpha)
    if name == "p_alpha":
        return dev[0] * u_a + dev[1] * m_a
    # p_beta: across-the-line points are alpha-face material at t = 0
    if pattern.pb_across:
        return dev[0] * u_a + dev[1] * m_a
    xi, eta = pattern.beta_face_coords(dev)
    m = (e - np.cos(p.beta) * u_b) / np.sin(p.beta)
    return xi * u_b + eta * m


# --- reach -----------------------------------------------------------------

@dataclass(frozen=True)
class ReachBound:
    """Signed reaches of p_alpha / p_beta along the bottom edges plus the
    face-extension and moving-area bounds. `closed_*` are trigonometric
    closed forms, `reach_*` are measured from the constructed pattern."""

    reach_alpha: float
    reach_beta: float
    closed_alpha: float
    closed_beta: float
    extension_alpha: float
    extension_beta: float
    moving_area: float
    moving_area_bound: float


def closed_form_reach(kind, theta, alpha, beta, branch="closure"):
    """Closed-form (p - o) . u reaches of the два construction points."""
    t, a, b = theta, alpha, beta
    ca, cb = cos_phi(t, a, b)
    if kind == OUT_OUT:
        delta = (a + b - t) / 4.0
        ra = 0.5 / np.sin(t) / np.tan(delta) * (np.cos(a - t) - np.cos(b))
        rb = 0.5 / np.sin(t) / np.tan(delta) * (np.cos(b - t) - np.cos(a))
        return float(ra), float(rb)
    big = (a + b - t) / 2.0
    ra = 0.5 / np.sin(t) / np.tan(big) * (np.cos(b) - np.cos(a + t))
    da = np.sin(a) * (1.0 + ca) / 2.0
    db = np.sin(b) * (1.0 + cb) / 2.0
    if branch == "c_beta":
        rb = db / np.tan(b)
    else:
        # gamma1: dev angle at q between the alpha top edge and q->p_alpha
        g1 = np.arctan2(np.sin(a) - da, da / np.tan(big) - np.cos(a))
        rb = np.cos(b) - (np.sin(b) * (1.0 - cb) / 2.0) / np.tan(big + g1)
    return float(ra), float(rb)


def gadget_reach(g: GadgetPattern) -> ReachBound:
    t, a, b = g.params.theta, g.params.alpha, g.params.beta
    ca, cb = cos_phi(t, a, b)
    reach_a = float(g.points_dev["p_alpha"][0])
    ab = a + b
    u_b = np.array([np.cos(ab), np.sin(ab)])
    reach_b = float(g.points_dev["p_beta"] @ u_b)
    closed_a, closed_b = closed_form_reach(g.kind, t, a, b, g.pb_branch)
    ext_a = (1.0 - ca) * np.sin(a) / 2.0
    ext_b = (1.0 - cb) * np.sin(b) / 2.0
    area = abs(polygon_area2(g.moving_region))
    oq = 1.0  # unit spanning edge
    bound = oq * (abs(reach_a) + abs(reach_b))
    return ReachBound(reach_alpha=reach_a, reach_beta=reach_b,
                      closed_alpha=closed_a, closed_beta=closed_b,
                      extension_alpha=float(ext_a), extension_beta=float(ext_b),
                      moving_area=float(area), moving_area_bound=float(bound))


def pattern_radius(g: GadgetPattern) -> float:
    """Developed distance from o covering the whole gadget quad: folded gadget
    material stays within this 3D distance of o (isometry bound)."""
    pts = [g.points_dev[k] for k in ("q", "p_alpha", "p_beta", "c_alpha", "c_beta")]
    return float(max(np.linalg.norm(p) for p in pts))


# --- spanning-edge parameter extraction --------------------------------------

def edge_params(wall, edge_index: int) -> SpanningEdgeParams:
    """Parameters of an interior spanning edge of a wall.

    Selects the primary vertex (face-angle sum alpha+beta <= pi, preferring
    the bottom endpoint), normalizes the edge to unit length, and records the
    affine frame back to world coordinates (with a z-mirror when the primary
    vertex sits on the top plane).
    """
    fa, fb = wall.edge_faces(edge_index)
    vb, vt = wall.edge_vertices(edge_index)   # bottom endpoint, top endpoint
    ell = float(np.linalg.norm(vt - vb))
    if ell == 0.0:
        raise AdmissibilityError("degenerate spanning edge")
    # directions of the base edges leaving each endpoint into the two faces
    ua_b, ub_b = unit(fa.b0 - vb), unit(fb.b1 - vb)
    ua_t, ub_t = unit(fa.t0 - vt), unit(fb.t1 - vt)
    e_up = (vt - vb) / ell
    alpha_b = angle_between(ua_b, e_up)
    beta_b = angle_between(ub_b, e_up)
    alpha_t = angle_between(ua_t, -e_up)
    beta_t = angle_between(ub_t, -e_up)
    tol = 1e-12
    if alpha_b + beta_b <= np.pi + tol:
        primary_top = False
        o, ua, ub, e = vb, ua_b, ub_b, e_up
        alpha, beta = alpha_b, beta_b
    else:
        primary_top = True
        o, ua, ub, e = vt, ua_t, ub_t, -e_up
        alpha, beta = alpha_t, beta_t
    theta = angle_between(ua, ub)
    if theta < 1e-9:
        raise AdmissibilityError("touching faces (theta = 0) at a spanning edge")
    flat = theta >= alpha + beta - 1e-9
    # canonical -> world rotation: u_alpha -> ua, u_beta -> ub, z -> +-z
    y_world = (np.cos(theta) * ua - ub) / np.sin(theta)
    z_world = np.array([0.0, 0.0, -1.0 if primary_top else 1.0])
    rot = np.column_stack([ua, y_world, z_world])
    p = SpanningEdgeParams(theta=float(theta), alpha=float(alpha), beta=float(beta),
                           edge_length=ell, primary_at_top=primary_top,
                           frame_rotation=rot, frame_origin=np.asarray(o, dtype=float),
                           flat_edge=bool(flat))
    if not flat:
        # the canonical spanning edge must map onto the actual one
        u_a, u_b, e_c = p.canonical_axes()
        err = np.linalg.norm(p.to_world(e_c)[0] - (np.asarray(o) + ell * e))
        if err > 1e-6 * ell:
            raise AdmissibilityError(f"frame reconstruction error {err:.2e}")
    return p


def geometric_edge_kind(wall, edge_index: int, fold_side: int) -> str:
    """Gadget kind implied by the wall's plan geometry and its fold side.

    A wall folds all of its faces to one plan side (`fold_side`: +1 = left of
    the walk). An edge whose base wedge lies on that same side collapses with
    the IN_OUT construction (faces fold toward the wedge), otherwise OUT_OUT.
    """
    turn = wall.plan_turn(edge_index)
    side = 1 if turn >= 0 else -1
    return IN_OUT if side == fold_side else OUT_OUT


# --- wall labeling ----------------------------------------------------------

@dataclass
class WallLabeling:
    face_labels: list            # "In" | "Out" per wall face
    edge_gadgets: list           # per interior spanning edge: IN_OUT | OUT_OUT


def assign_labels(wall) -> WallLabeling:
    """Alternating In/Out labels along a wall.

    Open chains start with Out (every interior edge gets different labels).
    Even cycles alternate cleanly. Odd cycles keep one adjacent Out/Out pair;
    no In/In adjacency is ever produced.
    """
    n = wall.face_count if hasattr(wall, "face_count") else len(wall.faces)
    cyclic = bool(getattr(wall, "is_cycle", False))
    labels = ["Out" if i % 2 == 0 else "In" for i in range(n)]
    if cyclic and n % 2 == 1:
        # the wrap pair (last, first) is (Out, Out): the single exception
        labels[-1] = "Out"
        # re-alternate the interior so only that one adjacency repeats
        for i in range(1, n - 1):
            labels[i] = "In" if i % 2 == 1 else "Out"
    edges = []
    m = n if cyclic else n - 1
    for i in range(m):
        l1, l2 = labels[i], labels[(i + 1) % n]
        if l1 == "In" and l2 == "In":
            raise AssertionError("labeling produced an In/In adjacency")
        edges.append(OUT_OUT if (l1 == "Out" and l2 == "Out") else IN_OUT)
    return WallLabeling(face_labels=labels, edge_gadgets=edges)
