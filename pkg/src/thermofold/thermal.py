"""Steady-state heat transfer on the folding sheet.

In-plane conduction uses linear triangular elements on the shared mesh.
Heat loss to the surrounding medium is modeled per node and per face side
as a serial chain of N conduction layers ending at room temperature; layer
cross-sections grow with the dissipation half-angle beta so the represented
column volume matches the widening heated region:

    A_k = (2/3) (A_t + L_sum * t * tan(beta) * (k - 1/2) / N)

with A_t the triangle area incident to the node and L_sum its perimeter.
When the sheet approaches a substrate that acts as a thermal boundary, the
column thickness on the facing side is capped by the mean nodal distance
to the substrate plane, which is what couples the heat problem back to the
fold state.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .config import EnvConfig
from .errors import AssemblyError, SingularSystemError
from .meshing import TriMesh, triangle_area


def t3_element_conductance(points: np.ndarray, k_mat: float, thickness: float) -> np.ndarray:
    """Conductance matrix of one linear triangle, W/K.

    Valid for a plane triangle in any 3-D orientation; gradients are taken
    in the triangle's own plane.
    """
    p0, p1, p2 = (np.asarray(p, dtype=float) for p in points)
    u = p1 - p0
    w = p2 - p0
    ux = np.linalg.norm(u)
    if ux <= 0.0:
        raise AssemblyError("degenerate triangle: repeated nodes")
    e1 = u / ux
    wx = float(np.dot(w, e1))
    wy = float(np.linalg.norm(w - wx * e1))
    area = 0.5 * ux * wy
    if area <= 0.0:
        raise AssemblyError("degenerate triangle: zero area")
    b = np.array([-wy, wy, 0.0])
    c = np.array([wx - ux, -wx, ux])
    return k_mat * thickness / (4.0 * area) * (np.outer(b, b) + np.outer(c, c))


def chain_layer_area(A_t: float, L_sum: float, t_eff: float, beta: float,
                     N: int, k: int) -> float:
    """Cross-section of layer k (1-based) of a dissipation chain, m^2."""
    if not 1 <= k <= N:
        raise ValueError("layer index out of range")
    return (2.0 / 3.0) * (A_t + L_sum * t_eff * math.tan(beta) * (k - 0.5) / N)


def effective_env_thickness(points: np.ndarray, substrate, t_env: float):
    """Column thickness on the substrate-facing side of a triangle.

    Returns (t_eff, clamped) where clamped flags nodes found on the wrong
    side of the plane (their distance contributes as zero).
    """
    if substrate is None or not substrate.is_thermal_boundary:
        return t_env, False
    rel = np.asarray(points, dtype=float) - substrate.plane_point
    dists = rel @ substrate.plane_normal
    clamped = bool(np.any(dists < 0.0))
    t_max = float(np.mean(np.maximum(dists, 0.0)))
    return min(t_max, t_env), clamped


@dataclass
class EnvChain:
    owner_node: int
    side: int                      # 0 = substrate-facing, 1 = opposite
    layer_conductances: np.ndarray  # (N,), W/K, structure -> far field
    node_ids: np.ndarray           # (N,) matrix ids; last one is held at RT


@dataclass
class ThermalSystem:
    K: sp.csr_matrix
    q: np.ndarray
    dirichlet_nodes: np.ndarray
    dirichlet_values: np.ndarray
    n_structural: int
    chains: list
    diagnostics: dict = field(default_factory=dict)


def assemble(mesh: TriMesh, model, coords: np.ndarray, env: EnvConfig | None,
             circuit_powers: dict) -> ThermalSystem:
    """Assemble conduction plus environment chains on the current geometry.

    In-plane terms use the deformed coordinates. Chain areas use rest-state
    triangle geometry (panels are nearly rigid) while the substrate cap uses
    the deformed height, which carries the fold-heat coupling.
    """
    n_s = mesh.n_nodes
    rows, cols, vals = [], [], []

    def add_block(ids, K_e):
        for a in range(len(ids)):
            for b in range(len(ids)):
                rows.append(ids[a])
                cols.append(ids[b])
                vals.append(K_e[a, b])

    materials = {p.id: model.materials[p.material_id] for p in model.panels}
    thickness = {p.id: p.thickness for p in model.panels}

    for t_idx in range(mesh.n_triangles):
        ids = mesh.triangles[t_idx]
        pid = int(mesh.tri_panel[t_idx])
        K_e = t3_element_conductance(coords[ids], materials[pid].k_mat,
                                     thickness[pid])
        add_block([int(i) for i in ids], K_e)

    chains = []
    n_total = n_s
    diag = {"capped_triangles": 0, "floored_sides": 0, "negative_clamped": 0}

    if env is not None and env.enabled:
        N = env.layers
        t_env = env.resolve_t_env(model.reference_length)
        t_floor = t_env / (10.0 * N)
        layer_G = np.zeros((n_s, 2, N))
        k_range = np.arange(1, N + 1)
        substrate = model.substrate
        for t_idx in range(mesh.n_triangles):
            ids = mesh.triangles[t_idx]
            rest = mesh.coords0[ids]
            A_t = triangle_area(*rest)
            L_sum = (np.linalg.norm(rest[1] - rest[0])
                     + np.linalg.norm(rest[2] - rest[1])
                     + np.linalg.norm(rest[0] - rest[2]))
            t_eff_cap, clamped = effective_env_thickness(coords[ids], substrate, t_env)
            if clamped:
                diag["negative_clamped"] += 1
            if t_eff_cap < t_env:
                diag["capped_triangles"] += 1
            for side, t_eff in enumerate((t_eff_cap, t_env)):
                if t_eff < t_floor:
                    t_eff = t_floor
                    diag["floored_sides"] += 1
                A_k = (2.0 / 3.0) * (A_t + L_sum * t_eff * math.tan(env.beta_rad)
                                     * (k_range - 0.5) / N)
                layer_G[ids, side, :] += env.k_env * A_k / (t_eff / N)

        for node in range(n_s):
            for side in range(2):
                G = layer_G[node, side]
                if not np.all(G > 0.0):
                    continue
                ids = np.arange(n_total, n_total + N)
                n_total += N
                chain_nodes = [node] + list(ids)
                for k in range(N):
                    a, b = chain_nodes[k], chain_nodes[k + 1]
                    g = G[k]
                    add_block([a, b], np.array([[g, -g], [-g, g]]))
                chains.append(EnvChain(owner_node=node, side=side,
                                       layer_conductances=G.copy(),
                                       node_ids=ids))

    K = sp.coo_matrix((vals, (rows, cols)), shape=(n_total, n_total)).tocsr()

    # nodal heating: circuit power lumped onto active crease-strip triangles
    # by rest tributary area
    q = np.zeros(n_total)
    strip_tris = {}
    for c in model.creases:
        if not c.active:
            continue
        strip_tris.setdefault(c.heating_circuit, []).extend(
            np.nonzero(mesh.tri_panel == c.panel_id)[0].tolist())
    circuit_areas = {}
    for circuit, tri_list in sorted(strip_tris.items()):
        power = float(circuit_powers.get(circuit, 0.0))
        areas = np.array([triangle_area(*mesh.coords0[mesh.triangles[t]])
                          for t in tri_list])
        total = areas.sum()
        circuit_areas[circuit] = total
        if power == 0.0 or total == 0.0:
            continue
        for t, area in zip(tri_list, areas):
            share = power * (area / 3.0) / total
            for nid in mesh.triangles[t]:
                q[int(nid)] += share

    dir_nodes = []
    dir_values = []
    RT = env.room_temperature if env is not None else 293.15
    for node in model.nodes:
        if node.fixed_temperature is not None:
            dir_nodes.append(node.id)
            dir_values.append(node.fixed_temperature)
    for chain in chains:
        dir_nodes.append(int(chain.node_ids[-1]))
        dir_values.append(RT)

    diag.update(n_unknowns=n_total, nnz=K.nnz, circuit_areas=circuit_areas)
    return ThermalSystem(K=K, q=q, dirichlet_nodes=np.array(dir_nodes, dtype=int),
                         dirichlet_values=np.array(dir_values, dtype=float),
                         n_structural=n_s, chains=chains, diagnostics=diag)


def solve_temperature(system: ThermalSystem) -> np.ndarray:
    """Direct solve of the reduced SPD system; returns all nodal temperatures."""
    n = system.K.shape[0]
    if len(system.dirichlet_nodes) == 0:
        raise SingularSystemError("no fixed-temperature node anywhere in the model")

    _check_connectivity(system)

    fixed = np.zeros(n, dtype=bool)
    fixed[system.dirichlet_nodes] = True
    free = ~fixed
    T = np.zeros(n)
    T[system.dirichlet_nodes] = system.dirichlet_values

    K = system.K.tocsc()
    rhs = system.q[free] - K[np.ix_(free, fixed)] @ T[fixed]
    K_ff = K[np.ix_(free, free)]
    T_free = spla.spsolve(K_ff.tocsc(), rhs)
    if not np.all(np.isfinite(T_free)):
        raise SingularSystemError("thermal solve produced non-finite temperatures")
    T[free] = T_free

    residual = np.linalg.norm(K_ff @ T_free - rhs)
    scale = max(np.linalg.norm(system.q), np.linalg.norm(rhs), 1e-30)
    if residual > 1e-10 * scale:
        raise SingularSystemError(
            f"thermal residual {residual:.3e} exceeds 1e-10 * {scale:.3e}")
    return T


def structural_temperatures(system: ThermalSystem, T: np.ndarray) -> np.ndarray:
    return T[: system.n_structural]


def centerline_average(mesh: TriMesh, crease_id: int, T: np.ndarray) -> float:
    """Mean temperature of the fold-line nodes of one crease."""
    nodes = mesh.crease_centerline_nodes[crease_id]
    return float(np.mean(T[nodes]))


def boundary_outflows(system: ThermalSystem, T: np.ndarray) -> dict:
    """Power leaving through fixed-temperature nodes, split by kind (W).

    'structural' collects prescribed-temperature mesh nodes, 'environment'
    the far ends of the dissipation chains.
    """
    reaction = system.K @ T - system.q
    chain_ends = {int(c.node_ids[-1]) for c in system.chains}
    out = {"structural": 0.0, "environment": 0.0}
    for node in system.dirichlet_nodes:
        kind = "environment" if int(node) in chain_ends else "structural"
        out[kind] += -float(reaction[int(node)])
    return out


def _check_connectivity(system: ThermalSystem):
    n = system.K.shape[0]
    adjacency = system.K.copy()
    adjacency.setdiag(0)
    adjacency.eliminate_zeros()
    n_comp, labels = csgraph.connected_components(adjacency, directed=False)
    has_dirichlet = np.zeros(n_comp, dtype=bool)
    has_dirichlet[labels[system.dirichlet_nodes]] = True
    if not np.all(has_dirichlet):
        bad = int(np.nonzero(labels == np.nonzero(~has_dirichlet)[0][0])[0][0])
        raise SingularSystemError(
            f"node {bad} has no conduction path to any fixed-temperature node")


@dataclass(frozen=True)
class OneDimensionalSolution:
    """Closed-form 1-D conduction profile for the two-panel benchmark.

    Piecewise: linear in each panel, quadratic in the uniformly heated
    crease segment. x runs from -(W/2 + L1) to W/2 + L2 with the crease
    centered at 0.
    """

    L1: float
    L2: float
    W: float
    A_panel: float
    A_crease: float
    k: float
    q_total: float
    RT: float
    f_left: float

    @property
    def T_centerline(self) -> float:
        """Temperature at the crease midline x = 0."""
        return self.temperature(0.0)

    @property
    def T_peak(self) -> float:
        if self.q_total == 0.0:
            return self.RT
        g = self.q_total / self.W
        b = self.q_total * (self.f_left - 0.5) / (self.k * self.A_crease)
        x_star = float(np.clip(b * self.k * self.A_crease / g, -self.W / 2, self.W / 2))
        return self.temperature(x_star)

    @property
    def T_average(self) -> float:
        """Mean temperature over the crease segment."""
        g = self.q_total / self.W
        a = self.temperature(0.0)
        return a - g * self.W ** 2 / (24.0 * self.k * self.A_crease)

    def temperature(self, x: float) -> float:
        W, k, q, f = self.W, self.k, self.q_total, self.f_left
        A_p, A_c = self.A_panel, self.A_crease
        g = q / W
        T_L = self.RT + f * q * self.L1 / (k * A_p)
        b = q * (f - 0.5) / (k * A_c)
        a = T_L + b * W / 2 + g * W ** 2 / (8.0 * k * A_c)
        x_left = -(W / 2 + self.L1)
        x_right = W / 2 + self.L2
        if x < -W / 2:
            return self.RT + f * q * (x - x_left) / (k * A_p)
        if x > W / 2:
            return self.RT + (1.0 - f) * q * (x_right - x) / (k * A_p)
        return a + b * x - g * x * x / (2.0 * k * A_c)


def analytic_1d_temperature(L1: float, L2: float, L: float, W: float,
                            t_c: float, t_p: float, k: float, q_total: float,
                            RT: float = 0.0) -> OneDimensionalSolution:
    """Analytic steady profile of the two-panel, one-heated-crease system.

    Both panel far ends are held at RT; the crease generates q_total
    uniformly over its volume. Cross sections are L*t_p in the panels and
    L*t_c in the crease.
    """
    for name, val in (("L1", L1), ("L2", L2), ("L", L), ("W", W),
                      ("t_c", t_c), ("t_p", t_p), ("k", k)):
        if val <= 0:
            raise ValueError(f"{name} must be strictly positive")
    if q_total < 0:
        raise ValueError("q_total must be >= 0")
    A_p = L * t_p
    A_c = L * t_c
    f = (L2 / A_p + W / (2 * A_c)) / (W / A_c + (L1 + L2) / A_p)
    return OneDimensionalSolution(L1=L1, L2=L2, W=W, A_panel=A_p, A_crease=A_c,
                                  k=k, q_total=q_total, RT=RT, f_left=f)
