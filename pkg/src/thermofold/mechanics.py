"""Bar-and-hinge structural model with barrier contact and gravity.

Energy terms:
  - bars: U = 1/2 EA L0 eps^2 with eps the Green-Lagrange axial strain,
    capturing panel stretching and shearing;
  - rotational springs at every interior mesh edge: U = 1/2 k (theta -
    theta0)^2 on the dihedral angle, with theta0 = pi for panel bending
    hinges and the actuation-driven stress-free angle on crease fold
    hinges;
  - a log-secant barrier on point-surface distances below d0 that blows
    up as the distance approaches zero;
  - gravity potential of lumped triangle masses.

All derivatives are exact, so the Newton tangent matches finite
differences of the residual. Dihedral angles are tracked continuously
against the previous accepted state to survive folds past the 0/2pi wrap.

Stiffness constants (see SolverConfig): bar EA collects
c_bar * (E t) * A / L from each adjacent triangle; bending hinges use the
harmonic mean of the flanking plate rigidities D = E t^3 / 12 scaled by
axis length over flank distance; crease fold hinges lump the layup's
bending rigidity over the bending span: k = c_fold * (D / W) * L_axis.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .actuation import bending_rigidity, layup_density, membrane_stiffness
from .errors import AssemblyError, NonConvergenceError, SingularConfigurationError
from .meshing import TriMesh, triangle_area

_AXES = {"x": 0, "y": 1, "z": 2}


# ---------------------------------------------------------------------------
# small batched helpers

def _skew(v):
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def _outer(a, b):
    return np.einsum("...i,...j->...ij", a, b)


# ---------------------------------------------------------------------------
# bars

def bar_strains(coords, bars, rest):
    d = coords[bars[:, 1]] - coords[bars[:, 0]]
    L2 = np.einsum("ij,ij->i", d, d)
    return (L2 - rest ** 2) / (2.0 * rest ** 2), d


def bar_energies(coords, bars, rest, EA):
    eps, _ = bar_strains(coords, bars, rest)
    return 0.5 * EA * rest * eps ** 2


def bar_energy_grad_hess(coords_pair, rest: float, EA: float):
    """Single-bar wrapper: returns (U, grad (6,), hess (6, 6))."""
    coords = np.asarray(coords_pair, dtype=float)
    bars = np.array([[0, 1]])
    U, g, H = _bars_assembly(coords, bars, np.array([rest]), np.array([EA]))
    return U, g, H


def _bars_assembly(coords, bars, rest, EA):
    """Total energy, dense gradient scatter data, per-bar 6x6 hessians."""
    eps, d = bar_strains(coords, bars, rest)
    U = float(np.sum(0.5 * EA * rest * eps ** 2))
    s = d / rest[:, None] ** 2                      # d eps / d x_b
    f = (EA * rest * eps)[:, None] * s              # (nb, 3)
    grad = np.zeros(coords.size)
    np.add.at(grad.reshape(-1, 3), bars[:, 1], f)
    np.add.at(grad.reshape(-1, 3), bars[:, 0], -f)

    nb = len(bars)
    block = (EA * rest)[:, None, None] * (
        _outer(s, s) + (eps / rest ** 2)[:, None, None] * np.eye(3))
    H = np.zeros((nb, 6, 6))
    H[:, 3:, 3:] = block
    H[:, :3, :3] = block
    H[:, :3, 3:] = -block
    H[:, 3:, :3] = -block
    return U, grad, H


# ---------------------------------------------------------------------------
# hinges

def dihedral_angles(coords, hinges):
    """Dihedral angle in [0, 2pi) for each (flank1, axis_b, axis_a, flank2).

    pi is flat; folding the flanks toward the rest-state sheet normal gives
    angles above pi.
    """
    theta, *_ = _hinge_geometry(coords, hinges)
    return theta


def _hinge_geometry(coords, hinges):
    xi = coords[hinges[:, 0]]
    xj = coords[hinges[:, 1]]
    xk = coords[hinges[:, 2]]
    xl = coords[hinges[:, 3]]
    rij = xi - xj
    e = xk - xj
    rkl = xk - xl
    m = np.cross(rij, e)
    n = np.cross(e, rkl)
    r = np.linalg.norm(e, axis=1)
    m2 = np.einsum("ij,ij->i", m, m)
    n2 = np.einsum("ij,ij->i", n, n)
    scale = (r ** 2) * 1e-12
    if np.any(m2 <= scale ** 2) or np.any(n2 <= scale ** 2) or np.any(r <= 0):
        raise SingularConfigurationError("collapsed flanking triangle at a hinge")
    e_hat = e / r[:, None]
    norm = np.sqrt(m2 * n2)
    cos_t = np.einsum("ij,ij->i", m, n) / norm
    sin_t = np.einsum("ij,ij->i", np.cross(m, n), e_hat) / norm
    theta = np.mod(np.arctan2(sin_t, cos_t), 2.0 * math.pi)
    return theta, rij, e, rkl, m, n, r, m2, n2


def hinge_theta_gradients(coords, hinges):
    theta, rij, e, rkl, m, n, r, m2, n2 = _hinge_geometry(coords, hinges)
    h_i = (r / m2)[:, None] * m
    h_l = -(r / n2)[:, None] * n
    A = np.einsum("ij,ij->i", rij, e) / r ** 2
    B = np.einsum("ij,ij->i", rkl, e) / r ** 2
    h_j = (A - 1.0)[:, None] * h_i - B[:, None] * h_l
    h_k = (B - 1.0)[:, None] * h_l - A[:, None] * h_i
    grad = np.concatenate([h_i, h_j, h_k, h_l], axis=1)   # (nh, 12)
    return theta, grad


def hinge_theta_grad_hess(coords, hinges):
    """theta, d theta (nh, 12) and d2 theta (nh, 12, 12), exact."""
    theta, rij, e, rkl, m, n, r, m2, n2 = _hinge_geometry(coords, hinges)
    nh = len(hinges)
    r2 = r ** 2
    e_hat = e / r[:, None]

    u_m = m / m2[:, None]
    u_n = n / n2[:, None]
    h_i = r[:, None] * u_m
    h_l = -r[:, None] * u_n
    A = np.einsum("ij,ij->i", rij, e) / r2
    B = np.einsum("ij,ij->i", rkl, e) / r2
    h_j = (A - 1.0)[:, None] * h_i - B[:, None] * h_l
    h_k = (B - 1.0)[:, None] * h_l - A[:, None] * h_i
    grad = np.concatenate([h_i, h_j, h_k, h_l], axis=1)

    eye = np.broadcast_to(np.eye(3), (nh, 3, 3))
    P_m = eye - 2.0 * _outer(m, m) / m2[:, None, None]
    P_n = eye - 2.0 * _outer(n, n) / n2[:, None, None]

    # d m / d x_b and d n / d x_b as skew matrices
    Sm = [-_skew(e), _skew(coords[hinges[:, 2]] - coords[hinges[:, 0]]),
          _skew(rij), np.zeros((nh, 3, 3))]
    Sn = [np.zeros((nh, 3, 3)), _skew(rkl),
          _skew(coords[hinges[:, 3]] - coords[hinges[:, 1]]), -_skew(e)]
    # gradient of r = |e| w.r.t. each node
    Dr = [np.zeros((nh, 3)), -e_hat, e_hat, np.zeros((nh, 3))]

    rm = (r / m2)[:, None, None]
    rn = (r / n2)[:, None, None]
    M = [None] * 4
    N = [None] * 4
    for b in range(4):
        M[b] = _outer(u_m, Dr[b]) + rm * np.einsum("nab,nbc->nac", P_m, Sm[b])
        N[b] = -_outer(u_n, Dr[b]) - rn * np.einsum("nab,nbc->nac", P_n, Sn[b])

    two_Ae = 2.0 * A[:, None] * e
    two_Be = 2.0 * B[:, None] * e
    DA = [e / r2[:, None],
          (two_Ae - (e + rij)) / r2[:, None],
          (rij - two_Ae) / r2[:, None],
          np.zeros((nh, 3))]
    DB = [np.zeros((nh, 3)),
          (two_Be - rkl) / r2[:, None],
          (e + rkl - two_Be) / r2[:, None],
          -e / r2[:, None]]

    H = np.zeros((nh, 12, 12))
    for b in range(4):
        sl = slice(3 * b, 3 * b + 3)
        H[:, 0:3, sl] = M[b]
        H[:, 9:12, sl] = N[b]
        H[:, 3:6, sl] = (_outer(h_i, DA[b]) - _outer(h_l, DB[b])
                         + (A - 1.0)[:, None, None] * M[b]
                         - B[:, None, None] * N[b])
        H[:, 6:9, sl] = (-_outer(h_i, DA[b]) + _outer(h_l, DB[b])
                         - A[:, None, None] * M[b]
                         + (B - 1.0)[:, None, None] * N[b])
    return theta, grad, H


def wrap_angle(x):
    """Map to (-pi, pi]."""
    return np.pi - np.mod(np.pi - x, 2.0 * np.pi)


def continuous_angles(theta_raw, theta_prev):
    return theta_prev + wrap_angle(theta_raw - theta_prev)


def hinge_energy_grad_hess(coords_quad, k_spr: float, theta0: float,
                           theta_prev: float | None = None):
    """Single-hinge wrapper on coords (4, 3) ordered (flank1, axis_b, axis_a,
    flank2); returns (U, grad (12,), hess (12, 12))."""
    coords = np.asarray(coords_quad, dtype=float)
    hinges = np.array([[0, 1, 2, 3]])
    theta, g, H = hinge_theta_grad_hess(coords, hinges)
    th = continuous_angles(theta, np.array([theta_prev if theta_prev is not None
                                            else theta[0]]))
    dev = th[0] - theta0
    U = 0.5 * k_spr * dev ** 2
    grad = k_spr * dev * g[0]
    hess = k_spr * (np.outer(g[0], g[0]) + dev * H[0])
    return U, grad, hess


# ---------------------------------------------------------------------------
# contact

def contact_energy(d: float, k_e: float, d0: float) -> float:
    """Barrier energy of a point-surface distance (J); inf at penetration."""
    if d <= 0.0:
        return math.inf
    if d >= d0:
        return 0.0
    psi = math.pi / 2.0 * (1.0 - d / d0)
    return k_e * (-math.log(math.cos(psi)) - 0.5 * psi * psi)


def contact_energy_derivatives(d: float, k_e: float, d0: float):
    """(U, dU/dd, d2U/dd2) for 0 < d."""
    if d >= d0:
        return 0.0, 0.0, 0.0
    if d <= 0.0:
        raise AssemblyError("contact energy evaluated at penetration")
    psi = math.pi / 2.0 * (1.0 - d / d0)
    c = -math.pi / (2.0 * d0)
    tan = math.tan(psi)
    U = k_e * (-math.log(math.cos(psi)) - 0.5 * psi * psi)
    return U, c * k_e * (tan - psi), c * c * k_e * tan * tan


@dataclass(frozen=True)
class ContactPair:
    node: int
    triangle: int | None = None      # None = substrate plane


def point_triangle_closest(p, a, b, c):
    """Closest point on triangle abc to p: (distance, region, feature).

    region is 'vertex', 'edge' or 'face'; feature holds the local vertex
    indices involved (0=a, 1=b, 2=c).
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = float(np.dot(ab, ap))
    d2 = float(np.dot(ac, ap))
    if d1 <= 0.0 and d2 <= 0.0:
        return float(np.linalg.norm(p - a)), "vertex", (0,)
    bp = p - b
    d3 = float(np.dot(ab, bp))
    d4 = float(np.dot(ac, bp))
    if d3 >= 0.0 and d4 <= d3:
        return float(np.linalg.norm(p - b)), "vertex", (1,)
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3)
        return float(np.linalg.norm(p - (a + t * ab))), "edge", (0, 1)
    cp = p - c
    d5 = float(np.dot(ab, cp))
    d6 = float(np.dot(ac, cp))
    if d6 >= 0.0 and d5 <= d6:
        return float(np.linalg.norm(p - c)), "vertex", (2,)
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        t = d2 / (d2 - d6)
        return float(np.linalg.norm(p - (a + t * ac))), "edge", (0, 2)
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return float(np.linalg.norm(p - (b + t * (c - b)))), "edge", (1, 2)
    n = np.cross(ab, ac)
    n = n / np.linalg.norm(n)
    return abs(float(np.dot(ap, n))), "face", (0, 1, 2)


def point_triangle_distances(P, A, B, C):
    """Vectorized unsigned distances from points P to triangles ABC."""
    ab = B - A
    ac = C - A
    ap = P - A
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = P - B
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = P - C
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    out = np.full(len(P), np.nan)

    def _set(mask, pts):
        if np.any(mask):
            out[mask] = np.linalg.norm(P[mask] - pts, axis=1)

    m_a = (d1 <= 0) & (d2 <= 0)
    _set(m_a, A[m_a])
    m_b = (~m_a) & (d3 >= 0) & (d4 <= d3)
    _set(m_b, B[m_b])
    done = m_a | m_b
    m_ab = (~done) & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    if np.any(m_ab):
        t = (d1[m_ab] / (d1[m_ab] - d3[m_ab]))[:, None]
        _set(m_ab, A[m_ab] + t * ab[m_ab])
    done |= m_ab
    m_c = (~done) & (d6 >= 0) & (d5 <= d6)
    _set(m_c, C[m_c])
    done |= m_c
    m_ac = (~done) & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    if np.any(m_ac):
        t = (d2[m_ac] / (d2[m_ac] - d6[m_ac]))[:, None]
        _set(m_ac, A[m_ac] + t * ac[m_ac])
    done |= m_ac
    m_bc = (~done) & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    if np.any(m_bc):
        t = ((d4 - d3)[m_bc] / ((d4 - d3) + (d5 - d6))[m_bc])[:, None]
        _set(m_bc, B[m_bc] + t * (C - B)[m_bc])
    done |= m_bc
    m_f = ~done
    if np.any(m_f):
        n = np.cross(ab[m_f], ac[m_f])
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        out[m_f] = np.abs(np.einsum("ij,ij->i", ap[m_f], n))
    return out


def _vertex_branch(p, v):
    g = p - v
    d = np.linalg.norm(g)
    g_hat = g / d
    P = (np.eye(3) - np.outer(g_hat, g_hat)) / d
    grad = np.concatenate([g_hat, -g_hat])
    hess = np.block([[P, -P], [-P, P]])
    return d, grad, hess


def _edge_branch(p, a, b):
    e = b - a
    u = p - a
    t2 = float(np.dot(e, e))
    tau = float(np.dot(u, e)) / t2
    w = u - tau * e
    d = float(np.linalg.norm(w))
    w_hat = w / d
    Z = np.zeros((3, 3))
    I = np.eye(3)
    DU = np.hstack([I, -I, Z])
    DE = np.hstack([Z, -I, I])
    Dtau = (e @ DU + (u - 2.0 * tau * e) @ DE) / t2      # (9,)
    DW = DU - tau * DE - np.outer(e, Dtau)
    grad = w_hat @ DW
    P = (I - np.outer(w_hat, w_hat)) / d
    wDE = w_hat @ DE
    hess = DW.T @ P @ DW - np.outer(Dtau, wDE) - np.outer(wDE, Dtau)
    return d, grad, hess


def _face_branch(p, a, b, c):
    y = p - a
    N = np.cross(b - a, c - a)
    rho = float(np.linalg.norm(N))
    phi = float(np.dot(y, N))
    s = phi / rho
    sigma = 1.0 if s >= 0 else -1.0
    Z = np.zeros((3, 3))
    I = np.eye(3)
    DY = np.hstack([I, -I, Z, Z])                        # (3, 12)
    DN = np.hstack([Z, _skew3(c - b), _skew3(a - c), _skew3(b - a)])
    Dphi = DY.T @ N + DN.T @ y
    Drho = DN.T @ N / rho
    Ds = Dphi / rho - phi * Drho / rho ** 2

    Q_y = _triple_product_form(y)
    Q_N = _triple_product_form(N)
    Hphi = DY.T @ DN + DN.T @ DY + Q_y
    Hrho = (DN.T @ DN + Q_N) / rho - np.outer(Drho, Drho) / rho
    Hs = (Hphi / rho - (np.outer(Dphi, Drho) + np.outer(Drho, Dphi)) / rho ** 2
          - s * Hrho / rho + 2.0 * s * np.outer(Drho, Drho) / rho ** 2)
    return abs(s), sigma * Ds, sigma * Hs


def _skew3(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _triple_product_form(y):
    """12x12 quadratic form of y . d2N for N = (b-a) x (c-a)."""
    S = _skew3(y)
    W = np.zeros((12, 12))
    # blocks: p=0, a=1, b=2, c=3
    W[6:9, 9:12] += -S
    W[6:9, 3:6] += S
    W[3:6, 9:12] += S
    return W + W.T


def pair_distance_grad_hess(p, tri_pts):
    """Distance plus exact derivatives w.r.t. (p, a, b, c) stacked (12,)."""
    a, b, c = tri_pts
    d, region, feature = point_triangle_closest(p, a, b, c)
    grad = np.zeros(12)
    hess = np.zeros((12, 12))
    if region == "vertex":
        (va,) = feature
        dv, g, H = _vertex_branch(p, tri_pts[va])
        idx = [0, 1, 2] + [3 * (va + 1), 3 * (va + 1) + 1, 3 * (va + 1) + 2]
        grad[idx] = g
        hess[np.ix_(idx, idx)] = H
        return dv, grad, hess
    if region == "edge":
        va, vb = feature
        dv, g, H = _edge_branch(p, tri_pts[va], tri_pts[vb])
        idx = ([0, 1, 2]
               + [3 * (va + 1), 3 * (va + 1) + 1, 3 * (va + 1) + 2]
               + [3 * (vb + 1), 3 * (vb + 1) + 1, 3 * (vb + 1) + 2])
        grad[idx] = g
        hess[np.ix_(idx, idx)] = H
        return dv, grad, hess
    return _face_branch(p, a, b, c)


# ---------------------------------------------------------------------------
# system

@dataclass
class MechSystem:
    mesh: TriMesh
    EA: np.ndarray
    k_spr: np.ndarray
    theta_rest: np.ndarray
    masses: np.ndarray
    gravity: np.ndarray | None
    fixed_dofs: np.ndarray           # bool (3n,)
    substrate: object                # Substrate or None (contact plane)
    d0: float
    k_e: float
    search_band: float
    node_panels: list                # node -> frozenset of panel ids
    L_ref: float
    step_cap: float

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_nodes * 3


def build_mech_system(mesh: TriMesh, model, config) -> MechSystem:
    creases_by_panel = {c.panel_id: c for c in model.creases}

    # per-triangle membrane stiffness (E t), plate rigidity D and area density
    n_tri = mesh.n_triangles
    Et = np.zeros(n_tri)
    D = np.zeros(n_tri)
    rho_t = np.zeros(n_tri)
    for t in range(n_tri):
        panel = model.panels[int(mesh.tri_panel[t])]
        crease = creases_by_panel.get(panel.id)
        mat = model.materials[panel.material_id]
        if crease is not None:
            act = crease.layup
            Et[t] = membrane_stiffness(act)
            D[t] = bending_rigidity(act)
            m1, m2 = crease.layup_materials
            rho = layup_density(act, model.materials[m1].density,
                                model.materials[m2].density)
            rho_t[t] = rho * act.total_thickness
        else:
            Et[t] = mat.youngs_modulus * panel.thickness
            D[t] = mat.youngs_modulus * panel.thickness ** 3 / 12.0
            rho_t[t] = mat.density * panel.thickness

    areas = np.array([triangle_area(*mesh.coords0[mesh.triangles[t]])
                      for t in range(n_tri)])

    # bars: EA contributions from adjacent triangles
    edge_index = {tuple(sorted(b)): i for i, b in enumerate(map(tuple, mesh.bars))}
    EA = np.zeros(len(mesh.bars))
    for t in range(n_tri):
        tri = mesh.triangles[t]
        for i in range(3):
            key = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
            idx = edge_index[key]
            EA[idx] += config.c_bar * Et[t] * areas[t] / mesh.bar_rest[idx]

    # masses: equal thirds of each triangle's mass
    masses = np.zeros(mesh.n_nodes)
    for t in range(n_tri):
        share = rho_t[t] * areas[t] / 3.0
        for nid in mesh.triangles[t]:
            masses[int(nid)] += share

    # hinge stiffnesses
    edge_tris = {}
    for t in range(n_tri):
        tri = mesh.triangles[t]
        for i in range(3):
            key = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
            edge_tris.setdefault(key, []).append(t)
    strip_panels = set(creases_by_panel)
    crease_of_strip = {c.panel_id: c for c in model.creases}
    k_spr = np.zeros(len(mesh.hinges))
    for h, hinge in enumerate(mesh.hinges):
        j, k = int(hinge[1]), int(hinge[2])
        L_axis = float(np.linalg.norm(mesh.coords0[j] - mesh.coords0[k]))
        cid = int(mesh.hinge_crease[h])
        if cid >= 0:
            crease = model.creases[cid]
            k_spr[h] = config.c_fold * bending_rigidity(crease.layup) \
                / crease.width * L_axis
            continue
        t1, t2 = edge_tris[tuple(sorted((j, k)))]
        strip_tris = [t for t in (t1, t2)
                      if int(mesh.tri_panel[t]) in strip_panels]
        if strip_tris:
            # non-centerline hinges of a crease strip: the fold hinge already
            # carries the whole strip's bending compliance, so these act as
            # near-rigid kinematic links
            crease = crease_of_strip[int(mesh.tri_panel[strip_tris[0]])]
            k_spr[h] = config.c_strip_rigidity * bending_rigidity(crease.layup) \
                / crease.width * L_axis
        else:
            D_h = 2.0 * D[t1] * D[t2] / (D[t1] + D[t2])
            axis_dir = (mesh.coords0[k] - mesh.coords0[j]) / L_axis
            dist = 0.0
            for flank in (int(hinge[0]), int(hinge[3])):
                rel = mesh.coords0[flank] - mesh.coords0[j]
                dist += np.linalg.norm(rel - np.dot(rel, axis_dir) * axis_dir)
            k_spr[h] = config.c_bend * D_h * L_axis / (dist / 2.0)

    fixed = np.zeros(mesh.n_nodes * 3, dtype=bool)
    for node in model.nodes:
        for dof in node.fixed_dofs:
            fixed[node.id * 3 + _AXES[dof]] = True
    if fixed.sum() < 6:
        raise AssemblyError("model needs at least 6 constrained DOFs")

    if model.creases:
        d0_default = 0.5 * min(c.width for c in model.creases)
    else:
        d0_default = 0.1 * model.reference_length
    d0 = config.contact_d0 if config.contact_d0 is not None else d0_default
    Et_panels = [Et[t] for t in range(n_tri)
                 if creases_by_panel.get(int(mesh.tri_panel[t])) is None]
    k_e = config.contact_ke_factor * (max(Et_panels) if Et_panels else max(Et)) * d0 ** 2

    gravity = np.asarray(config.gravity, dtype=float) if config.gravity_on else None
    substrate = model.substrate if (model.substrate is not None
                                    and model.substrate.is_contact_surface
                                    and config.contact_on) else None

    # contact exclusion: a node ignores triangles of its own panels and of
    # panels adjacent to them (sharing a node). Immediate neighbors across a
    # crease sit permanently near d0 by construction and would otherwise act
    # as a spurious fold-limiting barrier.
    own = [set() for _ in range(mesh.n_nodes)]
    panel_nodes = {}
    for t in range(n_tri):
        pid = int(mesh.tri_panel[t])
        for nid in mesh.triangles[t]:
            own[int(nid)].add(pid)
            panel_nodes.setdefault(pid, set()).add(int(nid))
    panel_adj = {pid: {pid} for pid in panel_nodes}
    for nid in range(mesh.n_nodes):
        for a in own[nid]:
            panel_adj[a].update(own[nid])
    node_panels = [frozenset().union(*(panel_adj[p] for p in own[n]))
                   if own[n] else frozenset() for n in range(mesh.n_nodes)]

    return MechSystem(mesh=mesh, EA=EA, k_spr=k_spr,
                      theta_rest=np.full(len(mesh.hinges), math.pi),
                      masses=masses, gravity=gravity, fixed_dofs=fixed,
                      substrate=substrate, d0=d0, k_e=k_e,
                      search_band=config.contact_search_band,
                      node_panels=node_panels, L_ref=model.reference_length,
                      step_cap=config.step_cap_factor * model.reference_length)


def contact_search(coords, system: MechSystem) -> list:
    """All candidate (node, surface) pairs within the activation band.

    Panel-panel pairs exclude triangles of any panel the node itself
    belongs to; the substrate plane pairs with every node.
    """
    pairs = []
    margin = system.search_band * system.d0
    mesh = system.mesh
    if system.substrate is not None:
        rel = coords - system.substrate.plane_point
        h = rel @ system.substrate.plane_normal
        for node in np.nonzero(h < margin)[0]:
            pairs.append(ContactPair(node=int(node), triangle=None))

    n_tri = mesh.n_triangles
    if n_tri and mesh.n_nodes:
        tri = mesh.triangles
        for node in range(mesh.n_nodes):
            excl = system.node_panels[node]
            cand = [t for t in range(n_tri) if int(mesh.tri_panel[t]) not in excl]
            if not cand:
                continue
            cand = np.array(cand)
            P = np.broadcast_to(coords[node], (len(cand), 3))
            d = point_triangle_distances(P, coords[tri[cand, 0]],
                                         coords[tri[cand, 1]],
                                         coords[tri[cand, 2]])
            for t in cand[np.nonzero(d < margin)[0]]:
                pairs.append(ContactPair(node=int(node), triangle=int(t)))
    return pairs


class _ContactTracker:
    """Minimum evaluated pair distance across a solve (soundness check)."""

    def __init__(self):
        self.min_distance = math.inf

    def update(self, d):
        if d < self.min_distance:
            self.min_distance = d


def _contact_terms(coords, system, pairs, tracker, want_derivs):
    mesh = system.mesh
    U = 0.0
    contributions = []   # (dofs, grad, hess)
    for pair in pairs:
        p = coords[pair.node]
        if pair.triangle is None:
            sub = system.substrate
            d = float(np.dot(p - sub.plane_point, sub.plane_normal))
            if tracker:
                tracker.update(d)
            if d <= 0.0:
                return math.inf, contributions
            if d >= system.d0:
                continue
            Ue, dU, d2U = contact_energy_derivatives(d, system.k_e, system.d0)
            U += Ue
            if want_derivs:
                n_hat = sub.plane_normal
                dofs = [pair.node * 3 + i for i in range(3)]
                contributions.append((dofs, dU * n_hat,
                                      d2U * np.outer(n_hat, n_hat)))
        else:
            ids = mesh.triangles[pair.triangle]
            tri_pts = coords[ids]
            if want_derivs:
                d, g, H = pair_distance_grad_hess(p, tri_pts)
            else:
                d, _, _ = point_triangle_closest(p, *tri_pts)
                g = H = None
            if tracker:
                tracker.update(d)
            if d <= 0.0:
                return math.inf, contributions
            if d >= system.d0:
                continue
            Ue, dU, d2U = contact_energy_derivatives(d, system.k_e, system.d0)
            U += Ue
            if want_derivs:
                dofs = ([pair.node * 3 + i for i in range(3)]
                        + [int(n) * 3 + i for n in ids for i in range(3)])
                grad = dU * g
                hess = d2U * np.outer(g, g) + dU * H
                contributions.append((dofs, grad, hess))
    return U, contributions


def total_energy(system, coords, theta0, theta_prev, pairs, tracker=None):
    """Energy-only evaluation (used by the line search)."""
    mesh = system.mesh
    U_bar = float(np.sum(bar_energies(coords, mesh.bars, mesh.bar_rest, system.EA)))
    theta_raw = dihedral_angles(coords, mesh.hinges)
    theta = continuous_angles(theta_raw, theta_prev)
    U_spr = float(np.sum(0.5 * system.k_spr * (theta - theta0) ** 2))
    U_contact, _ = _contact_terms(coords, system, pairs, tracker, want_derivs=False)
    U_grav = 0.0
    if system.gravity is not None:
        U_grav = -float(np.sum(system.masses * (coords @ system.gravity)))
    return U_bar + U_spr + U_contact + U_grav


def assemble_total(system, coords, theta0, theta_prev, pairs, tracker=None):
    """Total potential, gradient and dense symmetric tangent.

    Returns (U, grad, H, parts) where parts carries the energy split and
    the continuous hinge angles of this state.
    """
    mesh = system.mesh
    ndof = system.n_dofs
    grad = np.zeros(ndof)
    H = np.zeros((ndof, ndof))

    U_bar, g_bar, H_bars = _bars_assembly(coords, mesh.bars, mesh.bar_rest, system.EA)
    grad += g_bar
    bar_dofs = (mesh.bars[:, :, None] * 3 + np.arange(3)).reshape(-1, 6)
    _scatter(H, bar_dofs, H_bars)

    theta_raw, g_th, H_th = hinge_theta_grad_hess(coords, mesh.hinges)
    theta = continuous_angles(theta_raw, theta_prev)
    dev = theta - theta0
    U_spr = float(np.sum(0.5 * system.k_spr * dev ** 2))
    hinge_dofs = (mesh.hinges[:, :, None] * 3 + np.arange(3)).reshape(-1, 12)
    coef = (system.k_spr * dev)[:, None]
    g_flat = coef * g_th
    np.add.at(grad, hinge_dofs.ravel(), g_flat.ravel())
    H_h = (system.k_spr[:, None, None] * _outer(g_th, g_th)
           + (system.k_spr * dev)[:, None, None] * H_th)
    _scatter(H, hinge_dofs, H_h)

    U_contact, contribs = _contact_terms(coords, system, pairs, tracker,
                                         want_derivs=True)
    for dofs, g_c, H_c in contribs:
        grad[dofs] += g_c
        H[np.ix_(dofs, dofs)] += H_c

    U_grav = 0.0
    if system.gravity is not None:
        U_grav = -float(np.sum(system.masses * (coords @ system.gravity)))
        grad.reshape(-1, 3)[:] -= system.masses[:, None] * system.gravity

    U = U_bar + U_spr + U_contact + U_grav
    parts = {"U_bar": U_bar, "U_spr": U_spr, "U_contact": U_contact,
             "U_gravity": U_grav, "theta": theta}
    return U, grad, H, parts


def _scatter(H, dofs, blocks):
    n = H.shape[0]
    rows = dofs[:, :, None] * n + dofs[:, None, :]
    np.add.at(H.reshape(-1), rows.ravel(), blocks.ravel())


@dataclass
class NewtonResult:
    coords: np.ndarray
    theta: np.ndarray
    iterations: int
    converged: bool
    residual_norm: float
    min_contact_distance: float
    parts: dict = field(default_factory=dict)


def reference_force(system) -> float:
    """Force scale for the convergence test."""
    scale = 0.0
    if system.gravity is not None:
        scale = max(scale, float(np.max(system.masses)) * np.linalg.norm(system.gravity))
    if len(system.k_spr):
        scale = max(scale, float(np.max(system.k_spr)) / system.L_ref)
    return max(scale, 1e-30)


def newton_solve(system, coords_init, theta0, theta_prev_init,
                 tol: float = 1e-6, max_iter: int = 30,
                 pairs=None, tracker=None) -> NewtonResult:
    """Minimize the total potential from coords_init at fixed theta0.

    Damped Newton: the tangent gets an adaptive Levenberg shift that grows
    whenever a step fails to reduce the energy and decays on clean full
    steps. Near-flat sheets need this because their out-of-plane modes are
    quartic (the tangent is nearly singular) even though the state is a
    healthy minimum. Steps that would penetrate a contact barrier evaluate
    to infinite energy and are rejected by the line search. Raises
    NonConvergenceError with the last state if the budget runs out.
    """
    coords = np.array(coords_init, dtype=float)
    theta_prev = np.array(theta_prev_init, dtype=float)
    if pairs is None:
        pairs = contact_search(coords, system)
    if tracker is None:
        tracker = _ContactTracker()
    free = ~system.fixed_dofs
    if not np.any(free):
        raise AssemblyError("no free DOFs to solve")
    f_ref = reference_force(system)
    tol_force = tol * f_ref

    U, grad, H, parts = assemble_total(system, coords, theta0, theta_prev,
                                       pairs, tracker)
    energy_path = [U]
    mu = 0.0
    moved = 0.0
    res = math.inf
    for it in range(max_iter + 1):
        res = float(np.max(np.abs(grad[free])))
        if res <= tol_force:
            parts["energy_path"] = energy_path
            return NewtonResult(coords=coords, theta=parts["theta"],
                                iterations=it, converged=True,
                                residual_norm=res,
                                min_contact_distance=tracker.min_distance,
                                parts=parts)
        if it == max_iter:
            break

        H_ff = H[np.ix_(free, free)]
        rhs = -grad[free]
        scale = float(np.max(np.abs(np.diag(H_ff))))
        scale = scale if scale > 0 else 1.0

        accepted = False
        trial = None
        lam = 1.0
        for _ in range(16):
            try:
                sol = np.linalg.solve(H_ff + mu * scale * np.eye(len(rhs)), rhs)
            except np.linalg.LinAlgError:
                sol = None
            if (sol is None or not np.all(np.isfinite(sol))
                    or float(rhs @ sol) <= 0.0):
                mu = max(mu * 10.0, 1e-10)
                continue
            step = np.zeros(len(grad))
            step[free] = sol
            step_nodes = float(np.max(np.linalg.norm(step.reshape(-1, 3), axis=1)))
            if step_nodes > system.step_cap:
                step *= system.step_cap / step_nodes
            lam = 1.0
            for _ in range(10):
                cand = coords + lam * step.reshape(-1, 3)
                U_trial = total_energy(system, cand, theta0, theta_prev, pairs,
                                       tracker)
                if np.isfinite(U_trial) and U_trial <= U:
                    trial = cand
                    accepted = True
                    break
                lam *= 0.5
            if accepted:
                break
            mu = max(mu * 10.0, 1e-10)

        if not accepted:
            # stalled at the numeric floor: accept near-converged states
            if res <= 1e3 * tol_force:
                parts["energy_path"] = energy_path
                return NewtonResult(coords=coords, theta=parts["theta"],
                                    iterations=it, converged=True,
                                    residual_norm=res,
                                    min_contact_distance=tracker.min_distance,
                                    parts=parts)
            raise NonConvergenceError("damped Newton failed to reduce the energy",
                                      coords=coords, residual_norm=res)

        coords = trial
        moved += lam * float(np.max(np.linalg.norm(step.reshape(-1, 3), axis=1)))
        mu = mu / 30.0 if lam == 1.0 else mu
        if mu < 1e-14:
            mu = 0.0
        theta_prev = continuous_angles(dihedral_angles(coords, system.mesh.hinges),
                                       theta_prev)
        if moved > 0.4 * system.d0:
            pairs = contact_search(coords, system)
            moved = 0.0
        U, grad, H, parts = assemble_total(system, coords, theta0, theta_prev,
                                           pairs, tracker)
        energy_path.append(U)

    raise NonConvergenceError(
        f"no convergence in {max_iter} Newton iterations (residual {res:.3e})",
        coords=coords, residual_norm=res)
