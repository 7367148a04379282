"""Parametric pattern builders for the built-in example systems.

Each builder returns a plain pattern dict that goes through the same
`load_model` validation as an explicit file, so generated and hand-written
patterns are interchangeable. Sheets are built flat at elevation z0 above
the substrate plane z = 0.

Panels never share corner nodes with each other directly; foldable joints
are always a crease strip whose two junction edges coincide with full edges
of the neighboring panels. Grid patterns (miura) therefore carry small open
holes where four strips meet, which matches how such sheets are fabricated.
"""

import math

import numpy as np

from .errors import PatternError
from .model import parse_length, parse_angle

_D = 9  # coordinate rounding digits relative to 1 m; dedup key resolution


class _SheetBuilder:
    def __init__(self):
        self.nodes = []
        self._index = {}
        self.panels = []
        self.creases = []
        self.supports = []

    def node(self, x, y, z):
        key = (round(x, 15), round(y, 15), round(z, 15))
        if key in self._index:
            return self._index[key]
        nid = len(self.nodes)
        self.nodes.append([x, y, z])
        self._index[key] = nid
        return nid

    def panel(self, node_ids, thickness, material, strip=False):
        self.panels.append({"nodes": list(node_ids), "thickness": thickness,
                            "material": material, "crease_strip": strip})
        return len(self.panels) - 1

    def strip_between(self, edge_a, edge_b, thickness, material, layup,
                      circuit, residual, active=True):
        """Crease strip spanning from junction edge_a to edge_b.

        Both edges are (node_id, node_id) pairs ordered the same way along
        the fold direction. Fold-line end nodes are created at the side-edge
        midpoints.
        """
        (a1, b1), (a2, b2) = edge_a, edge_b
        pa1, pb1 = np.array(self.nodes[a1]), np.array(self.nodes[b1])
        pa2, pb2 = np.array(self.nodes[a2]), np.array(self.nodes[b2])
        e0 = self.node(*((pa1 + pa2) / 2.0))
        e1 = self.node(*((pb1 + pb2) / 2.0))
        pid = self.panel([a1, b1, b2, a2], thickness, material, strip=True)
        self.creases.append({"panel": pid, "end_nodes": [e0, e1],
                             "layup": layup, "circuit": circuit,
                             "residual_angle": residual, "active": active})
        return len(self.creases) - 1

    def fix(self, node_id, temperature=None):
        entry = {"node": node_id, "fix": ["x", "y", "z"]}
        if temperature is not None:
            entry["T"] = temperature
        self.supports.append(entry)


def _layup(bottom_mat, bottom_t, top_mat, top_t):
    return {"bottom": {"material": bottom_mat, "thickness": bottom_t},
            "top": {"material": top_mat, "thickness": top_t}}


def _mv_layup(mountain, t_b, t_t):
    """Mountain folds rise (high-expansion layer on the bottom)."""
    if mountain:
        return _layup("su8", t_b, "gold", t_t)
    return _layup("gold", t_t, "su8", t_b)


def two_panel(params):
    """Two RT-clamped panels joined by one heated crease (1-D benchmark)."""
    L = parse_length(params.get("L", "100um"), "L")
    W = float(params.get("W_over_L", 0.2)) * L
    t_p = parse_length(params.get("t_p", "10um"), "t_p")
    t_c = float(params.get("tc_over_tp", 0.1)) * t_p
    L1 = parse_length(params["L1"], "L1") if "L1" in params else L
    L2 = parse_length(params["L2"], "L2") if "L2" in params else L
    k = float(params.get("k", 1.0))
    q = float(params.get("q", 10.0))
    room_T = float(params.get("room_T", 293.15))
    env_on = bool(params.get("env", False))

    b = _SheetBuilder()
    xs = [-(W / 2 + L1), -W / 2, W / 2, W / 2 + L2]
    low = [b.node(x, 0.0, 0.0) for x in xs]
    high = [b.node(x, L, 0.0) for x in xs]
    b.panel([low[0], low[1], high[1], high[0]], t_p, "sheet")
    b.panel([low[2], low[3], high[3], high[2]], t_p, "sheet")
    b.strip_between((low[1], high[1]), (low[2], high[2]), t_c, "sheet",
                    _layup("su8", "1um", "gold", "0.2um"), 0, 0.0)
    for nid in (low[0], high[0], low[3], high[3]):
        b.fix(nid, temperature=room_T)

    return {
        "name": "two-panel",
        "nodes": b.nodes, "panels": b.panels, "creases": b.creases,
        "supports": b.supports,
        "materials": {"sheet": {"k": k, "E": 2e9, "alpha": 50e-6,
                                "density": 1190, "poisson": 0.22}},
        "substrate": None,
        "environment": {"enabled": env_on, "k": float(params.get("k_env", 0.026)),
                        "t_env_ratio": float(params.get("t_env_ratio", 1.5)),
                        "beta": params.get("beta", "20deg"),
                        "layers": int(params.get("layers", 10)),
                        "room_T": room_T} if env_on else {"enabled": False},
        "heating": {"circuits": [{"id": 0, "power": q}]},
        "reference_length": L,
    }


def _chain(b, start_edge, direction, lengths, widths_span, t_p, material,
           layups, circuits, residuals, actives, t_c):
    """Append alternating strip/panel pairs along `direction`."""
    (a, bb) = start_edge
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    edge = (a, bb)
    for i, Lp in enumerate(lengths):
        pa, pb = np.array(b.nodes[edge[0]]), np.array(b.nodes[edge[1]])
        W = widths_span[i]
        qa = b.node(*(pa + d * W))
        qb = b.node(*(pb + d * W))
        b.strip_between(edge, (qa, qb), t_c, "su8", layups[i], circuits[i],
                        residuals[i], actives[i])
        ra = b.node(*(pa + d * (W + Lp)))
        rb = b.node(*(pb + d * (W + Lp)))
        b.panel([qa, qb, rb, ra], t_p, material)
        edge = (ra, rb)
    return edge


def single_crease(params):
    """Anchored panel, one heated crease, free panel over a substrate."""
    Lp = parse_length(params.get("panel", "1000um"), "panel")
    width = parse_length(params.get("width", params.get("panel", "1000um")), "width")
    W = parse_length(params.get("W", "400um"), "W")
    t_p = parse_length(params.get("t_p", "20um"), "t_p")
    residual = parse_angle(params.get("residual", "-10deg"), "residual")
    power = float(params.get("power", 0.03))
    room_T = float(params.get("room_T", 293.15))
    d0 = W / 2.0
    # clearance: at zero power and no gravity the free panel must reach its
    # residual fold without touching the contact cushion
    z0 = parse_length(params["elevation"], "elevation") if "elevation" in params \
        else d0 + (Lp + W / 2) * math.sin(abs(residual)) * 1.05

    b = _SheetBuilder()
    a0 = b.node(-(W / 2 + Lp), 0.0, z0)
    a1 = b.node(-W / 2, 0.0, z0)
    a2 = b.node(-(W / 2 + Lp), width, z0)
    a3 = b.node(-W / 2, width, z0)
    b.panel([a0, a1, a3, a2], t_p, "su8")
    f0 = b.node(W / 2, 0.0, z0)
    f1 = b.node(W / 2 + Lp, 0.0, z0)
    f2 = b.node(W / 2, width, z0)
    f3 = b.node(W / 2 + Lp, width, z0)
    b.panel([f0, f1, f3, f2], t_p, "su8")
    b.strip_between((a1, a3), (f0, f2),
                    parse_length(params.get("t_c", "1.2um"), "t_c"), "su8",
                    _mv_layup(True, params.get("su8_t", "1um"),
                              params.get("au_t", "0.2um")),
                    0, residual)
    b.fix(a0, temperature=room_T)
    b.fix(a2, temperature=room_T)
    b.fix(a1)
    b.fix(a3)

    return {
        "name": "single-crease",
        "nodes": b.nodes, "panels": b.panels, "creases": b.creases,
        "supports": b.supports, "materials": {},
        "substrate": {"point": [0, 0, 0], "normal": [0, 0, 1],
                      "thermal_boundary": True, "contact": True},
        "environment": {"k": 0.026, "t_env_ratio": 1.5, "beta": "20deg",
                        "layers": 10, "room_T": room_T},
        "heating": {"circuits": [{"id": 0, "power": power}]},
        "reference_length": Lp,
    }


def double_crease(params):
    """Anchored panel plus two serial heated creases over a substrate.

    All three panels are identical so the two creases see the same thermal
    neighborhood while the sheet is flat.
    """
    Lp = parse_length(params.get("panel", "1000um"), "panel")
    width = parse_length(params.get("width", params.get("panel", "1000um")), "width")
    W = parse_length(params.get("W", "400um"), "W")
    t_p = parse_length(params.get("t_p", "20um"), "t_p")
    t_c = parse_length(params.get("t_c", "1.2um"), "t_c")
    residual = parse_angle(params.get("residual", "-10deg"), "residual")
    power = float(params.get("power", 0.05))
    room_T = float(params.get("room_T", 293.15))
    d0 = W / 2.0
    z0 = parse_length(params["elevation"], "elevation") if "elevation" in params \
        else 1.5 * d0

    b = _SheetBuilder()
    a0 = b.node(-(W / 2 + Lp), 0.0, z0)
    a1 = b.node(-W / 2, 0.0, z0)
    a2 = b.node(-(W / 2 + Lp), width, z0)
    a3 = b.node(-W / 2, width, z0)
    b.panel([a0, a1, a3, a2], t_p, "su8")
    layup = _mv_layup(True, params.get("su8_t", "1um"), params.get("au_t", "0.2um"))
    _chain(b, (a1, a3), (1.0, 0.0, 0.0), [Lp, Lp], [W, W], t_p, "su8",
           [layup, layup], [0, 0], [residual, residual], [True, True], t_c)
    for nid in (a0, a1, a2, a3):
        b.fix(nid)

    return {
        "name": "double-crease",
        "nodes": b.nodes, "panels": b.panels, "creases": b.creases,
        "supports": b.supports, "materials": {},
        "substrate": {"point": [0, 0, 0], "normal": [0, 0, 1],
                      "thermal_boundary": True, "contact": True},
        "environment": {"k": 0.026, "t_env_ratio": 1.5, "beta": "20deg",
                        "layers": 10, "room_T": room_T},
        "heating": {"circuits": [{"id": 0, "power": power}]},
        "reference_length": Lp,
    }


def crane(params):
    """Stylized 18-panel crane: body with neck, tail and two wings.

    The limbs are serial chains off the four body edges, 17 creases in
    total with alternating fold directions, all on one heating circuit.
    """
    body = parse_length(params.get("body", "800um"), "body")
    limb = parse_length(params.get("limb", "600um"), "limb")
    W = parse_length(params.get("W", "200um"), "W")
    t_p = parse_length(params.get("t_p", "20um"), "t_p")
    t_c = parse_length(params.get("t_c", "1.2um"), "t_c")
    su8_t = params.get("su8_t", "1um")
    au_t = params.get("au_t", "0.2um")
    power = float(params.get("power", 0.2))
    room_T = float(params.get("room_T", 293.15))

    b = _SheetBuilder()
    h = body / 2
    c00 = b.node(-h, -h, 0.0)
    c10 = b.node(h, -h, 0.0)
    c01 = b.node(-h, h, 0.0)
    c11 = b.node(h, h, 0.0)
    b.panel([c00, c10, c11, c01], t_p, "su8")

    def limb_chain(edge, direction, count, first_mountain):
        mv = [first_mountain if i % 2 == 0 else not first_mountain
              for i in range(count)]
        _chain(b, edge, direction, [limb] * count, [W] * count, t_p, "su8",
               [_mv_layup(m, su8_t, au_t) for m in mv],
               [0] * count, [0.0] * count, [True] * count, t_c)

    limb_chain((c01, c11), (0.0, 1.0, 0.0), 5, True)    # neck and head
    limb_chain((c00, c10), (0.0, -1.0, 0.0), 4, True)   # tail
    limb_chain((c00, c01), (-1.0, 0.0, 0.0), 4, True)   # left wing
    limb_chain((c10, c11), (1.0, 0.0, 0.0), 4, True)    # right wing

    for nid in (c00, c10, c11, c01):
        b.fix(nid)

    return {
        "name": "crane",
        "nodes": b.nodes, "panels": b.panels, "creases": b.creases,
        "supports": b.supports, "materials": {},
        "substrate": None,
        "environment": {"k": 0.026, "t_env_ratio": 1.5, "beta": "20deg",
                        "layers": 10, "room_T": room_T},
        "heating": {"circuits": [{"id": 0, "power": power}]},
        "reference_length": body,
    }


def miura(params):
    """Miura strip lifter: rows x cols parallelogram panels, left end anchored.

    Crease strips run between shrunken panels; four-way vertices carry small
    open holes. Mountain/valley assignment follows the standard miura-ori
    checkerboard; small residual fold biases push the flat sheet off its
    singular state in the assigned directions.
    """
    a = parse_length(params.get("a", "500um"), "a")
    rows = int(params.get("rows", 2))
    cols = int(params.get("cols", 4))
    shear = float(params.get("shear", 0.3))
    W = parse_length(params.get("W", "150um"), "W")
    t_p = parse_length(params.get("t_p", "10um"), "t_p")
    t_c = parse_length(params.get("t_c", "1.2um"), "t_c")
    su8_t = params.get("su8_t", "0.8um")
    au_t = params.get("au_t", "0.15um")
    bias = parse_angle(params.get("residual_bias", "2deg"), "residual_bias")
    power = float(params.get("power", 0.3))
    room_T = float(params.get("room_T", 293.15))
    with_substrate = bool(params.get("substrate", True))
    z0 = parse_length(params["elevation"], "elevation") if "elevation" in params \
        else max(1.5 * W / 2, 0.15 * a)

    def vertex(r, c):
        return np.array([c * a + (r % 2) * shear * a, r * a, z0])

    b = _SheetBuilder()
    half = W / 2.0

    # shrunken panel corners: offset each creased edge inward by W/2 and
    # intersect adjacent edge lines
    corner_ids = {}
    for r in range(rows):
        for c in range(cols):
            V = [vertex(r, c), vertex(r, c + 1), vertex(r + 1, c + 1), vertex(r + 1, c)]
            creased = [r > 0, c < cols - 1, r < rows - 1, c > 0]  # bottom,right,top,left
            pts = _shrink_parallelogram(V, creased, half)
            ids = [b.node(*p) for p in pts]
            b.panel(ids, t_p, "su8")
            corner_ids[(r, c)] = ids

    creases_meta = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:  # zig edge between (r,c) and (r,c+1)
                e_a = (corner_ids[(r, c)][1], corner_ids[(r, c)][2])
                e_b = (corner_ids[(r, c + 1)][0], corner_ids[(r, c + 1)][3])
                mountain = (c % 2 == 0)
                creases_meta.append((e_a, e_b, mountain))
            if r + 1 < rows:  # horizontal edge between (r,c) and (r+1,c)
                e_a = (corner_ids[(r, c)][3], corner_ids[(r, c)][2])
                e_b = (corner_ids[(r + 1, c)][0], corner_ids[(r + 1, c)][1])
                mountain = ((r + 1 + c) % 2 == 0)
                creases_meta.append((e_a, e_b, mountain))
    for e_a, e_b, mountain in creases_meta:
        b.strip_between(e_a, e_b, t_c, "su8", _mv_layup(mountain, su8_t, au_t),
                        0, bias if mountain else -bias)

    for r in range(rows):
        ids = corner_ids[(r, 0)]
        b.fix(ids[0])
        b.fix(ids[3])

    return {
        "name": "miura",
        "nodes": b.nodes, "panels": b.panels, "creases": b.creases,
        "supports": b.supports, "materials": {},
        "substrate": {"point": [0, 0, 0], "normal": [0, 0, 1],
                      "thermal_boundary": True, "contact": True}
        if with_substrate else None,
        "environment": {"k": 0.026, "t_env_ratio": 1.5, "beta": "20deg",
                        "layers": 10, "room_T": room_T},
        "heating": {"circuits": [{"id": 0, "power": power}]},
        "reference_length": a,
    }


def _shrink_parallelogram(V, creased, offset):
    """Offset the creased edges of quad V inward by `offset`; re-intersect."""
    V = [np.asarray(p, dtype=float) for p in V]
    n = len(V)
    lines = []
    for i in range(n):
        p, q = V[i], V[(i + 1) % n]
        d = q - p
        d = d / np.linalg.norm(d)
        inward = np.array([-d[1], d[0], 0.0])
        centroid = sum(V) / n
        if np.dot(centroid - p, inward) < 0:
            inward = -inward
        shift = offset * inward if creased[i] else np.zeros(3)
        lines.append((p + shift, d))
    out = []
    for i in range(n):
        (p1, d1) = lines[(i - 1) % n]
        (p2, d2) = lines[i]
        # intersect the two edge lines in the sheet plane
        A = np.array([[d1[0], -d2[0]], [d1[1], -d2[1]]])
        rhs = np.array([p2[0] - p1[0], p2[1] - p1[1]])
        t = np.linalg.solve(A, rhs)
        out.append(p1 + t[0] * d1)
    return out


def gripper(params):
    """Two-circuit micro-gripper: anchored platform, two base panels folded
    by circuit 0 (span W), two long arm actuators on circuit 1 (span La)
    ending in tip panels.
    """
    W = parse_length(params.get("W", "200um"), "W")
    L1 = parse_length(params.get("L1", "1000um"), "L1")
    L2 = parse_length(params.get("L2", "1000um"), "L2")
    La = parse_length(params.get("La", "700um"), "La")
    platform = parse_length(params.get("platform", "600um"), "platform")
    tip = parse_length(params.get("tip", "300um"), "tip")
    t_p = parse_length(params.get("t_p", "15um"), "t_p")
    t_c = parse_length(params.get("t_c", "1um"), "t_c")
    su8_t = params.get("su8_t", "0.8um")
    au_t = params.get("au_t", "0.2um")
    room_T = float(params.get("room_T", 293.15))
    d0 = W / 2.0
    z0 = parse_length(params["elevation"], "elevation") if "elevation" in params \
        else 1.5 * d0

    b = _SheetBuilder()
    h = platform / 2
    p00 = b.node(-h, -h, z0)
    p10 = b.node(h, -h, z0)
    p01 = b.node(-h, h, z0)
    p11 = b.node(h, h, z0)
    b.panel([p00, p10, p11, p01], t_p, "su8")

    layup = _mv_layup(True, su8_t, au_t)
    for edge, direction, Lbase in (((p10, p11), (1.0, 0.0, 0.0), L1),
                                   ((p00, p01), (-1.0, 0.0, 0.0), L2)):
        _chain(b, edge, direction, [Lbase, tip], [W, La], t_p, "su8",
               [layup, layup], [0, 1], [0.0, 0.0], [True, True], t_c)

    for nid in (p00, p10, p11, p01):
        b.fix(nid)

    return {
        "name": "gripper",
        "nodes": b.nodes, "panels": b.panels, "creases": b.creases,
        "supports": b.supports, "materials": {},
        "substrate": {"point": [0, 0, 0], "normal": [0, 0, 1],
                      "thermal_boundary": True, "contact": True},
        "environment": {"k": 0.026, "t_env_ratio": 1.5, "beta": "20deg",
                        "layers": 10, "room_T": room_T},
        "heating": {"circuits": [{"id": 0, "power": 0.02}, {"id": 1, "power": 0.02}]},
        "reference_length": platform,
    }


GENERATORS = {
    "two-panel": two_panel,
    "single-crease": single_crease,
    "double-crease": double_crease,
    "crane": crane,
    "miura": miura,
    "gripper": gripper,
}


def build(name, params) -> dict:
    key = (name or "").replace("_", "-").lower()
    if key not in GENERATORS:
        raise PatternError(f"generator.name: unknown generator {name!r} "
                           f"(available: {sorted(GENERATORS)})")
    return GENERATORS[key](dict(params or {}))
