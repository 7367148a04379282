"""Shared triangulation for the thermal and mechanical solvers.

Plain panels split along their shorter diagonal (ties fall back to the
lower node-id diagonal). Crease strips get a centerline polyline (the fold
line) with `crease_divisions` segments and are fanned into triangles from
the two junction edges; the fold is lumped into the centerline hinges.
All other interior edges become bending hinges with a flat rest dihedral.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshingError


@dataclass
class TriMesh:
    coords0: np.ndarray           # (n, 3) rest positions, model nodes first
    triangles: np.ndarray         # (m, 3) node ids, consistent winding
    tri_panel: np.ndarray         # (m,) owning panel id
    bars: np.ndarray              # (nb, 2) node ids, a < b
    bar_rest: np.ndarray          # (nb,) rest lengths
    hinges: np.ndarray            # (nh, 4) (flank1, axis_b, axis_a, flank2)
    hinge_kind: np.ndarray        # (nh,) 0 = panel bending, 1 = crease fold
    hinge_crease: np.ndarray      # (nh,) crease id or -1
    crease_hinge_map: dict        # crease id -> [hinge index]
    crease_centerline_nodes: dict  # crease id -> [node id] along the fold
    n_model_nodes: int

    @property
    def n_nodes(self) -> int:
        return len(self.coords0)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def to_dict(self) -> dict:
        """Stable, JSON-serializable form (used for determinism checks)."""
        return {
            "coords": [[format(v, ".17g") for v in row] for row in self.coords0],
            "triangles": self.triangles.tolist(),
            "tri_panel": self.tri_panel.tolist(),
            "bars": self.bars.tolist(),
            "hinges": self.hinges.tolist(),
            "hinge_kind": self.hinge_kind.tolist(),
            "hinge_crease": self.hinge_crease.tolist(),
            "centerlines": {str(k): v for k, v in
                            sorted(self.crease_centerline_nodes.items())},
        }


def triangle_area(p0, p1, p2) -> float:
    return 0.5 * float(np.linalg.norm(np.cross(p1 - p0, p2 - p0)))


def panel_geometry(mesh: TriMesh, tri: int, coords: np.ndarray):
    """Area, perimeter and centroid of one triangle at the given coords."""
    ids = mesh.triangles[tri]
    p = coords[ids]
    area = triangle_area(p[0], p[1], p[2])
    perimeter = float(np.linalg.norm(p[1] - p[0]) + np.linalg.norm(p[2] - p[1])
                      + np.linalg.norm(p[0] - p[2]))
    centroid = p.mean(axis=0)
    return area, perimeter, centroid


def _quad_diagonal_split(ids, pts):
    a, b, c, d = ids
    diag_ac = np.linalg.norm(pts[2] - pts[0])
    diag_bd = np.linalg.norm(pts[3] - pts[1])
    scale = max(diag_ac, diag_bd)
    if abs(diag_ac - diag_bd) <= 1e-12 * scale:
        use_ac = min(a, c) < min(b, d) or (min(a, c) == min(b, d) and max(a, c) < max(b, d))
    else:
        use_ac = diag_ac < diag_bd
    if use_ac:
        return [(a, b, c), (a, c, d)]
    return [(a, b, d), (b, c, d)]


def _locate_strip_frame(panel_ids, end_nodes, coords):
    """Order the strip quad relative to its fold line.

    Returns (j1, j2) junction edges, each as (node at fold end 0 side,
    node at fold end 1 side).
    """
    e0, e1 = end_nodes
    p_e0, p_e1 = coords[e0], coords[e1]
    n = 4
    edges = [(panel_ids[i], panel_ids[(i + 1) % n]) for i in range(n)]

    def on_edge(point, a, b):
        ab = coords[b] - coords[a]
        L = np.linalg.norm(ab)
        t = np.dot(point - coords[a], ab) / (L * L)
        closest = coords[a] + np.clip(t, 0.0, 1.0) * ab
        return np.linalg.norm(point - closest) <= 1e-9 * L

    host = [None, None]
    for k, (a, b) in enumerate(edges):
        if on_edge(p_e0, a, b):
            host[0] = k
        elif on_edge(p_e1, a, b):
            host[1] = k
    if host[0] is None or host[1] is None or abs(host[0] - host[1]) != 2:
        raise MeshingError("crease fold ends do not sit on opposite strip edges")
    j_idx = [k for k in range(4) if k not in host]
    junctions = []
    for k in j_idx:
        a, b = edges[k]
        # order each junction edge from the e0 end to the e1 end
        if (np.linalg.norm(coords[a] - p_e0) + np.linalg.norm(coords[b] - p_e1)
                <= np.linalg.norm(coords[a] - p_e1) + np.linalg.norm(coords[b] - p_e0)):
            junctions.append((a, b))
        else:
            junctions.append((b, a))
    return junctions[0], junctions[1]


def triangulate(model, crease_divisions: int = 2) -> TriMesh:
    """Build the shared TriMesh for a validated model."""
    if crease_divisions < 2 or crease_divisions % 2:
        raise MeshingError("crease_divisions must be an even integer >= 2")

    coords = [np.asarray(p, dtype=float) for p in model.coords]
    triangles = []
    tri_panel = []
    crease_centerline = {}
    centerline_edges = {}
    crease_of_panel = {c.panel_id: c for c in model.creases}

    def add_tri(ids, pid):
        p = [coords[i] for i in ids]
        if triangle_area(*p) <= 0.0:
            raise MeshingError(f"panel {pid}: degenerate triangle {ids}")
        triangles.append(tuple(ids))
        tri_panel.append(pid)

    for panel in model.panels:
        crease = crease_of_panel.get(panel.id)
        pts = np.array([coords[i] for i in panel.node_ids])
        if crease is None:
            if len(panel.node_ids) == 3:
                add_tri(panel.node_ids, panel.id)
            else:
                for tri in _quad_diagonal_split(panel.node_ids, pts):
                    add_tri(tri, panel.id)
            continue

        j1, j2 = _locate_strip_frame(panel.node_ids, crease.end_nodes, coords)
        e0, e1 = crease.end_nodes
        cl = [e0]
        for t in range(1, crease_divisions):
            point = coords[e0] + (coords[e1] - coords[e0]) * (t / crease_divisions)
            cl.append(len(coords))
            coords.append(point)
        cl.append(e1)
        crease_centerline[crease.id] = cl
        centerline_edges[crease.id] = [tuple(sorted((cl[t], cl[t + 1])))
                                       for t in range(crease_divisions)]
        mid = crease_divisions // 2
        for (sa, sb) in (j1, j2):
            for t in range(mid):
                add_tri((sa, cl[t], cl[t + 1]), panel.id)
            add_tri((sa, cl[mid], sb), panel.id)
            for t in range(mid, crease_divisions):
                add_tri((sb, cl[t], cl[t + 1]), panel.id)

    coords = np.array(coords, dtype=float)
    triangles = np.array(triangles, dtype=np.int64)
    tri_panel = np.array(tri_panel, dtype=np.int64)

    _orient_consistently(triangles, coords)

    # bars: every unique triangle edge
    edge_tris = {}
    for t_idx, tri in enumerate(triangles):
        for i in range(3):
            key = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
            edge_tris.setdefault(key, []).append(t_idx)
    for key, owners in edge_tris.items():
        if len(owners) > 2:
            raise MeshingError(f"edge {key} shared by more than two triangles")

    bar_keys = sorted(edge_tris)
    bars = np.array(bar_keys, dtype=np.int64)
    bar_rest = np.linalg.norm(coords[bars[:, 1]] - coords[bars[:, 0]], axis=1)

    fold_edges = {e: cid for cid, elist in centerline_edges.items() for e in elist}

    hinges = []
    hinge_kind = []
    hinge_crease = []
    crease_hinge_map = {c.id: [] for c in model.creases}
    for key in bar_keys:
        owners = edge_tris[key]
        if len(owners) != 2:
            continue
        t1, t2 = owners
        tri1 = [int(v) for v in triangles[t1]]
        tri2 = [int(v) for v in triangles[t2]]
        a = b = None
        for i in range(3):
            u, v = tri1[i], tri1[(i + 1) % 3]
            if tuple(sorted((u, v))) == key:
                a, b = u, v
                break
        flank1 = next(v for v in tri1 if v not in key)
        flank2 = next(v for v in tri2 if v not in key)
        # axis reversed relative to tri1's winding: fold toward the sheet
        # normal reads as dihedral > pi
        hinge = (flank1, b, a, flank2)
        cid = fold_edges.get(key, -1)
        if cid >= 0:
            crease_hinge_map[cid].append(len(hinges))
        hinges.append(hinge)
        hinge_kind.append(1 if cid >= 0 else 0)
        hinge_crease.append(cid)

    mesh = TriMesh(
        coords0=coords,
        triangles=triangles,
        tri_panel=tri_panel,
        bars=bars,
        bar_rest=bar_rest,
        hinges=np.array(hinges, dtype=np.int64).reshape(-1, 4),
        hinge_kind=np.array(hinge_kind, dtype=np.int64),
        hinge_crease=np.array(hinge_crease, dtype=np.int64),
        crease_hinge_map=crease_hinge_map,
        crease_centerline_nodes=crease_centerline,
        n_model_nodes=len(model.nodes),
    )
    mesh.coords0.setflags(write=False)
    return mesh


def _orient_consistently(triangles, coords):
    """Flip triangle windings so all rest normals share one direction.

    Rest sheets are flat (non-planar rest geometry is unsupported), so a
    single reference direction orients everything.
    """
    normals = np.cross(coords[triangles[:, 1]] - coords[triangles[:, 0]],
                       coords[triangles[:, 2]] - coords[triangles[:, 0]])
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = normals / lengths
    ref = np.array([0.0, 0.0, 1.0])
    dots = normals @ ref
    if np.any(np.abs(dots) < 0.99):
        raise MeshingError("rest sheet is not flat in a z = const plane")
    flip = dots < 0.0
    triangles[flip, 1], triangles[flip, 2] = (triangles[flip, 2].copy(),
                                              triangles[flip, 1].copy())
