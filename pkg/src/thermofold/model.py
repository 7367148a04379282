"""Origami model: nodes, panels, crease strips, supports, substrate.

A pattern file is a JSON object with top-level keys `nodes`, `panels`,
`creases`, `materials`, `substrate`, `supports`, `environment`, `heating`,
`generator`. All quantities are SI; length and angle values may also be
strings with a unit suffix ("700um", "1.5mm", "-10deg"). A `generator`
block (name plus parameters) is mutually exclusive with explicit
`nodes`/`panels`.

Crease strips are panels flagged `crease_strip`. Each entry in `creases`
points at its strip panel and names the two existing nodes that terminate
the fold line (the strip centerline). The strip's other two edges are the
junction lines shared with the neighboring panels.
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .actuation import CreaseActuator
from .config import EnvConfig
from .errors import PatternError
from .materials import Material, MATERIAL_PRESETS

_LENGTH_SUFFIXES = {
    "nm": 1e-9, "um": 1e-6, "µm": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0,
}


def parse_length(value, field_name: str = "length") -> float:
    """Accept a number (meters) or a string with a length suffix."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        s = value.strip()
        for suffix in sorted(_LENGTH_SUFFIXES, key=len, reverse=True):
            if s.endswith(suffix):
                try:
                    return float(s[: -len(suffix)]) * _LENGTH_SUFFIXES[suffix]
                except ValueError:
                    break
        try:
            return float(s)
        except ValueError:
            pass
    raise PatternError(f"{field_name}: cannot parse length {value!r}")


def parse_angle(value, field_name: str = "angle") -> float:
    """Accept a number (radians) or a string like '20deg' / '0.35rad'."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        s = value.strip()
        if s.endswith("deg"):
            return math.radians(float(s[:-3]))
        if s.endswith("rad"):
            return float(s[:-3])
        try:
            return float(s)
        except ValueError:
            pass
    raise PatternError(f"{field_name}: cannot parse angle {value!r}")


@dataclass(frozen=True)
class Node:
    id: int
    position: np.ndarray                 # (3,), meters
    fixed_dofs: frozenset = frozenset()  # subset of {"x","y","z"}
    fixed_temperature: float | None = None


@dataclass(frozen=True)
class Panel:
    id: int
    node_ids: tuple                      # 3 or 4 node ids, in winding order
    thickness: float
    material_id: str
    is_crease_strip: bool = False


@dataclass(frozen=True)
class CreaseStrip:
    """A foldable strip panel plus its actuation description.

    `end_nodes` terminate the fold centerline; `length` is the fold-line
    length, `width` the bending span across the strip. `heating_circuit`
    groups creases that are powered together; inactive creases receive no
    power and keep their stress-free angle at the residual value.
    """

    id: int
    panel_id: int
    end_nodes: tuple
    length: float
    width: float
    layup: CreaseActuator
    layup_materials: tuple               # (material id bottom, material id top)
    heating_circuit: int = 0
    residual_angle: float = 0.0
    active: bool = True


@dataclass(frozen=True)
class Substrate:
    plane_point: np.ndarray
    plane_normal: np.ndarray             # unit vector
    is_thermal_boundary: bool = True
    is_contact_surface: bool = True


@dataclass
class OrigamiModel:
    name: str
    nodes: list
    panels: list
    creases: list
    materials: dict
    substrate: Substrate | None
    environment: EnvConfig | None
    heating: dict                        # circuit id -> default target power, W
    reference_length: float
    generator: dict | None = None

    def __post_init__(self):
        coords = np.array([n.position for n in self.nodes], dtype=float)
        coords.setflags(write=False)
        self._coords = coords

    @property
    def coords(self) -> np.ndarray:
        """(n, 3) rest positions, read-only."""
        return self._coords

    def material_of(self, panel: Panel) -> Material:
        return self.materials[panel.material_id]

    @property
    def structural_panels(self) -> list:
        return [p for p in self.panels if not p.is_crease_strip]

    def crease_by_id(self, cid: int) -> CreaseStrip:
        return self.creases[cid]

    def circuits(self) -> list:
        return sorted({c.heating_circuit for c in self.creases})


def _quad_edges(node_ids):
    n = len(node_ids)
    return [(node_ids[i], node_ids[(i + 1) % n]) for i in range(n)]


def _point_on_segment(p, a, b, tol):
    ab = b - a
    L = np.linalg.norm(ab)
    if L == 0:
        return False
    t = np.dot(p - a, ab) / (L * L)
    if t < -1e-9 or t > 1 + 1e-9:
        return False
    closest = a + t * ab
    return np.linalg.norm(p - closest) <= tol


def _parse_materials(data) -> dict:
    materials = dict(MATERIAL_PRESETS)
    for name, props in (data or {}).items():
        if not isinstance(props, dict):
            raise PatternError(f"materials.{name}: expected an object")
        try:
            materials[name] = Material(
                k_mat=float(props["k"]),
                youngs_modulus=float(props["E"]),
                thermal_expansion=float(props["alpha"]),
                density=float(props["density"]),
                poisson=float(props.get("poisson", 0.0)),
            )
        except KeyError as exc:
            raise PatternError(f"materials.{name}: missing field {exc}") from None
        except ValueError as exc:
            raise PatternError(f"materials.{name}: {exc}") from None
    return materials


def _parse_layup(data, materials, where):
    if not isinstance(data, dict) or "bottom" not in data or "top" not in data:
        raise PatternError(f"{where}: layup needs 'bottom' and 'top' layers")
    layers = []
    for side in ("bottom", "top"):
        layer = data[side]
        mat_id = layer.get("material")
        if mat_id not in materials:
            raise PatternError(f"{where}.{side}: unknown material {mat_id!r}")
        t = parse_length(layer.get("thickness"), f"{where}.{side}.thickness")
        layers.append((mat_id, t))
    (m1, t1), (m2, t2) = layers
    act = CreaseActuator(
        t1=t1, t2=t2,
        E1=materials[m1].youngs_modulus, E2=materials[m2].youngs_modulus,
        alpha1=materials[m1].thermal_expansion,
        alpha2=materials[m2].thermal_expansion,
    )
    return act, (m1, m2)


def load_model(source, name: str = "pattern") -> OrigamiModel:
    """Parse and validate a pattern document (JSON text, dict, or file path)."""
    if isinstance(source, (str, bytes)):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise PatternError(f"not valid JSON: {exc}") from None
    elif isinstance(source, dict):
        data = source
    else:
        raise PatternError("pattern source must be JSON text or a dict")

    if not isinstance(data, dict):
        raise PatternError("top level must be an object")

    generator = data.get("generator")
    if generator is not None:
        if data.get("nodes") or data.get("panels"):
            raise PatternError("generator: mutually exclusive with explicit nodes/panels")
        from . import generators
        gen_name = generator.get("name")
        params = generator.get("params", {})
        expanded = generators.build(gen_name, params)
        # keep non-geometry overrides from the outer document
        for key in ("environment", "heating", "substrate"):
            if key in data:
                expanded[key] = data[key]
        model = load_model(expanded, name=gen_name or name)
        model.generator = {"name": gen_name, "params": params}
        return model

    materials = _parse_materials(data.get("materials"))

    raw_nodes = data.get("nodes")
    if not raw_nodes:
        raise PatternError("nodes: at least one node required")
    positions = []
    for i, entry in enumerate(raw_nodes):
        if not isinstance(entry, (list, tuple)) or len(entry) != 3:
            raise PatternError(f"nodes[{i}]: expected [x, y, z]")
        positions.append([parse_length(v, f"nodes[{i}]") for v in entry])
    positions = np.asarray(positions, dtype=float)
    n_nodes = len(positions)

    # supports: mechanical fixities and optional prescribed temperature
    fixed_dofs = [set() for _ in range(n_nodes)]
    fixed_T = [None] * n_nodes
    for i, sup in enumerate(data.get("supports") or []):
        nid = sup.get("node")
        if not isinstance(nid, int) or not 0 <= nid < n_nodes:
            raise PatternError(f"supports[{i}].node: unknown node {nid!r}")
        for dof in sup.get("fix", []):
            if dof not in ("x", "y", "z"):
                raise PatternError(f"supports[{i}].fix: bad dof {dof!r}")
            fixed_dofs[nid].add(dof)
        if "T" in sup:
            fixed_T[nid] = float(sup["T"])

    nodes = [Node(id=i, position=positions[i], fixed_dofs=frozenset(fixed_dofs[i]),
                  fixed_temperature=fixed_T[i]) for i in range(n_nodes)]

    panels = []
    for i, entry in enumerate(data.get("panels") or []):
        ids = entry.get("nodes")
        if not isinstance(ids, (list, tuple)) or len(ids) not in (3, 4):
            raise PatternError(f"panels[{i}].nodes: need 3 or 4 node ids")
        for nid in ids:
            if not isinstance(nid, int) or not 0 <= nid < n_nodes:
                raise PatternError(f"panels[{i}].nodes: unknown node {nid!r}")
        if len(set(ids)) != len(ids):
            raise PatternError(f"panels[{i}].nodes: repeated node")
        mat = entry.get("material")
        if mat not in materials:
            raise PatternError(f"panels[{i}].material: unknown material {mat!r}")
        t = parse_length(entry.get("thickness"), f"panels[{i}].thickness")
        if t <= 0:
            raise PatternError(f"panels[{i}].thickness: must be positive")
        panels.append(Panel(id=i, node_ids=tuple(ids), thickness=t,
                            material_id=mat,
                            is_crease_strip=bool(entry.get("crease_strip", False))))

    _validate_panel_geometry(panels, positions)

    creases = []
    for i, entry in enumerate(data.get("creases") or []):
        pid = entry.get("panel")
        if not isinstance(pid, int) or not 0 <= pid < len(panels):
            raise PatternError(f"creases[{i}].panel: unknown panel {pid!r}")
        panel = panels[pid]
        if not panel.is_crease_strip or len(panel.node_ids) != 4:
            raise PatternError(f"creases[{i}].panel: panel {pid} is not a quad crease strip")
        ends = entry.get("end_nodes")
        if not isinstance(ends, (list, tuple)) or len(ends) != 2:
            raise PatternError(f"creases[{i}].end_nodes: need two node ids")
        for nid in ends:
            if not isinstance(nid, int) or not 0 <= nid < n_nodes:
                raise PatternError(f"creases[{i}].end_nodes: unknown node {nid!r}")
        layup, layup_mats = _parse_layup(entry.get("layup"), materials, f"creases[{i}].layup")
        residual = parse_angle(entry.get("residual_angle", 0.0),
                               f"creases[{i}].residual_angle")
        circuit = entry.get("circuit", 0)
        if not isinstance(circuit, int) or circuit < 0:
            raise PatternError(f"creases[{i}].circuit: must be a non-negative integer")
        length, width = _crease_geometry(panel, ends, positions, i)
        creases.append(CreaseStrip(
            id=i, panel_id=pid, end_nodes=tuple(ends), length=length, width=width,
            layup=layup, layup_materials=layup_mats, heating_circuit=circuit,
            residual_angle=residual, active=bool(entry.get("active", True))))

    _validate_strip_junctions(panels, creases)

    substrate = None
    sub = data.get("substrate")
    if sub:
        normal = np.asarray([float(v) for v in sub.get("normal", (0, 0, 1))], dtype=float)
        norm = np.linalg.norm(normal)
        if norm == 0:
            raise PatternError("substrate.normal: zero vector")
        point = np.asarray([parse_length(v, "substrate.point") for v in
                            sub.get("point", (0, 0, 0))], dtype=float)
        substrate = Substrate(plane_point=point, plane_normal=normal / norm,
                              is_thermal_boundary=bool(sub.get("thermal_boundary", True)),
                              is_contact_surface=bool(sub.get("contact", True)))

    environment = None
    env = data.get("environment")
    if env is not None:
        if env is False or env.get("enabled", True) is False:
            environment = EnvConfig(enabled=False)
        else:
            kwargs = {}
            if "k" in env:
                kwargs["k_env"] = float(env["k"])
            if "t_env" in env:
                kwargs["t_env"] = parse_length(env["t_env"], "environment.t_env")
            if "t_env_ratio" in env:
                kwargs["t_env_ratio"] = float(env["t_env_ratio"])
            if "beta" in env:
                kwargs["beta_rad"] = parse_angle(env["beta"], "environment.beta")
            if "layers" in env:
                kwargs["layers"] = int(env["layers"])
            if "room_T" in env:
                kwargs["room_temperature"] = float(env["room_T"])
            try:
                environment = EnvConfig(**kwargs)
            except ValueError as exc:
                raise PatternError(f"environment: {exc}") from None

    heating = {}
    for i, circ in enumerate((data.get("heating") or {}).get("circuits", [])):
        cid = circ.get("id")
        if not isinstance(cid, int) or cid < 0:
            raise PatternError(f"heating.circuits[{i}].id: bad circuit id {cid!r}")
        power = float(circ.get("power", 0.0))
        if power < 0:
            raise PatternError(f"heating.circuits[{i}].power: must be >= 0")
        heating[cid] = power
    for c in creases:
        heating.setdefault(c.heating_circuit, 0.0)

    if "reference_length" in data:
        L_ref = parse_length(data["reference_length"], "reference_length")
    else:
        L_ref = _default_reference_length(panels, positions)

    return OrigamiModel(name=data.get("name", name), nodes=nodes, panels=panels,
                        creases=creases, materials=materials, substrate=substrate,
                        environment=environment, heating=heating,
                        reference_length=L_ref)


def load_model_file(path) -> OrigamiModel:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return load_model(text, name=str(path))


def _validate_panel_geometry(panels, positions):
    for p in panels:
        pts = positions[list(p.node_ids)]
        e1 = pts[1] - pts[0]
        e2 = pts[2] - pts[0]
        area2 = np.linalg.norm(np.cross(e1, e2))
        diag = max(np.linalg.norm(pts[i] - pts[j])
                   for i in range(len(pts)) for j in range(i))
        if area2 <= 1e-18 * max(diag, 1e-30) ** 2:
            raise PatternError(f"panels[{p.id}]: nodes are collinear")
        if len(pts) == 4:
            n = np.cross(e1, e2)
            n = n / np.linalg.norm(n)
            off = abs(np.dot(pts[3] - pts[0], n))
            if off > 1e-9 * diag:
                raise PatternError(f"panels[{p.id}]: quad is not planar at rest")


def _crease_geometry(panel, ends, positions, crease_idx):
    """Locate the fold line on the strip quad; return (length, width)."""
    pts = positions
    e0, e1 = pts[ends[0]], pts[ends[1]]
    length = float(np.linalg.norm(e1 - e0))
    if length <= 0:
        raise PatternError(f"creases[{crease_idx}]: fold line has zero length")
    edges = _quad_edges(panel.node_ids)
    scale = max(np.linalg.norm(pts[a] - pts[b]) for a, b in edges)
    tol = 1e-9 * scale
    host = []
    for nid, point in zip(ends, (e0, e1)):
        found = None
        for k, (a, b) in enumerate(edges):
            if _point_on_segment(point, pts[a], pts[b], tol):
                found = k
                break
        if found is None:
            raise PatternError(
                f"creases[{crease_idx}].end_nodes: node {nid} does not lie on a strip edge")
        host.append(found)
    if abs(host[0] - host[1]) != 2:
        raise PatternError(
            f"creases[{crease_idx}].end_nodes: fold ends must sit on opposite strip edges")
    # bending span: perpendicular distance between the two junction edges
    # (the non-host edges, which the fold line runs parallel to)
    junctions = [edges[k] for k in range(4) if k not in host]
    spans = []
    for (a1, b1), (a2, b2) in (junctions, junctions[::-1]):
        axis = pts[b1] - pts[a1]
        axis = axis / np.linalg.norm(axis)
        mid_other = (pts[a2] + pts[b2]) / 2.0
        rel = mid_other - pts[a1]
        spans.append(float(np.linalg.norm(rel - np.dot(rel, axis) * axis)))
    width = float(np.mean(spans))
    if width <= 0:
        raise PatternError(f"creases[{crease_idx}]: strip has zero width")
    return length, width


def _validate_strip_junctions(panels, creases):
    """Each strip junction edge must be shared with exactly one other panel."""
    edge_owners = {}
    for p in panels:
        for a, b in _quad_edges(p.node_ids):
            edge_owners.setdefault(frozenset((a, b)), []).append(p.id)
    strips_with_crease = {c.panel_id: c.id for c in creases}
    for pid, cid in strips_with_crease.items():
        panel = panels[pid]
        shared = 0
        for a, b in _quad_edges(panel.node_ids):
            owners = edge_owners[frozenset((a, b))]
            if len(owners) > 2:
                raise PatternError(
                    f"creases[{cid}]: strip edge ({a},{b}) shared by more than two panels")
            if len(owners) == 2:
                shared += 1
        if shared != 2:
            raise PatternError(
                f"creases[{cid}]: fold line must be flanked by exactly two panels "
                f"(strip {pid} shares {shared} edges)")


def _default_reference_length(panels, positions):
    longest = 0.0
    for p in panels:
        if p.is_crease_strip:
            continue
        for a, b in _quad_edges(p.node_ids):
            longest = max(longest, float(np.linalg.norm(positions[a] - positions[b])))
    if longest == 0.0:
        raise PatternError("cannot infer reference_length; declare it explicitly")
    return longest
