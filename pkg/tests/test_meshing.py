import json
import math

import numpy as np
import pytest

from thermofold import load_model, triangulate, MeshingError
from thermofold import generators
from thermofold.meshing import panel_geometry, triangle_area


def quad_model(nodes=None):
    return load_model({
        "nodes": nodes or [[0, 0, 0], [2e-3, 0, 0], [2e-3, 1e-3, 0], [0, 1e-3, 0]],
        "panels": [{"nodes": [0, 1, 2, 3], "thickness": 1e-5, "material": "su8"}],
        "supports": [{"node": 0, "fix": ["x", "y", "z"]},
                     {"node": 1, "fix": ["x", "y", "z"]}],
        "reference_length": 2e-3,
    })


def test_single_quad_split():
    mesh = triangulate(quad_model())
    assert mesh.n_triangles == 2
    assert len(mesh.bars) == 5
    assert len(mesh.hinges) == 1
    assert mesh.hinge_kind[0] == 0


def test_quad_splits_along_shorter_diagonal():
    # stretching corner 2 outward makes diagonal (1, 3) the shorter one
    mesh = triangulate(quad_model([[0, 0, 0], [2e-3, 0, 0],
                                   [2.2e-3, 1e-3, 0], [0, 1e-3, 0]]))
    diag = set(map(tuple, mesh.bars)) - {(0, 1), (1, 2), (2, 3), (0, 3)}
    assert diag == {(1, 3)}
    # square: tie resolves to the lower node-id diagonal (0, 2)
    mesh = triangulate(quad_model([[0, 0, 0], [1e-3, 0, 0],
                                   [1e-3, 1e-3, 0], [0, 1e-3, 0]]))
    diag = set(map(tuple, mesh.bars)) - {(0, 1), (1, 2), (2, 3), (0, 3)}
    assert diag == {(0, 2)}


def test_two_panel_centerline_nodes_exist():
    model = load_model(generators.two_panel({}))
    mesh = triangulate(model)
    cl = mesh.crease_centerline_nodes[0]
    assert len(cl) == 3
    mid = mesh.coords0[cl[1]]
    assert mid[0] == pytest.approx(0.0, abs=1e-12)
    assert mid[1] == pytest.approx(50e-6)


def test_crane_has_17_fold_creases():
    model = load_model(generators.crane({}))
    mesh = triangulate(model)
    assert len(mesh.crease_hinge_map) == 17
    for hinges in mesh.crease_hinge_map.values():
        assert len(hinges) >= 1


def test_panel_geometry_closed_forms():
    model = load_model({
        "nodes": [[0, 0, 0], [1, 0, 0], [0, 1, 0]],
        "panels": [{"nodes": [0, 1, 2], "thickness": 1e-5, "material": "su8"}],
        "supports": [{"node": 0, "fix": ["x", "y", "z"]},
                     {"node": 1, "fix": ["x", "y", "z"]}],
        "reference_length": 1.0,
    })
    mesh = triangulate(model)
    area, perimeter, centroid = panel_geometry(mesh, 0, np.array(mesh.coords0))
    assert area == pytest.approx(0.5)
    assert perimeter == pytest.approx(2 + math.sqrt(2))
    assert centroid == pytest.approx(np.array([1 / 3, 1 / 3, 0.0]))


def test_panel_geometry_deformed_matches_cross_product(rng):
    model = load_model(generators.two_panel({}))
    mesh = triangulate(model)
    coords = np.array(mesh.coords0) + rng.normal(scale=5e-6,
                                                 size=mesh.coords0.shape)
    for t in range(mesh.n_triangles):
        area, _, _ = panel_geometry(mesh, t, coords)
        p = coords[mesh.triangles[t]]
        ref = 0.5 * np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0]))
        assert area == pytest.approx(ref, rel=1e-12)


def test_panel_areas_sum_to_polygon_area():
    for name in ("two-panel", "crane", "miura", "gripper"):
        model = load_model({"generator": {"name": name, "params": {}}})
        mesh = triangulate(model)
        for panel in model.panels:
            tris = np.nonzero(mesh.tri_panel == panel.id)[0]
            total = sum(triangle_area(*mesh.coords0[mesh.triangles[t]])
                        for t in tris)
            pts = model.coords[list(panel.node_ids)]
            if len(pts) == 3:
                poly = triangle_area(*pts)
            else:
                poly = (triangle_area(pts[0], pts[1], pts[2])
                        + triangle_area(pts[0], pts[2], pts[3]))
            assert total == pytest.approx(poly, rel=1e-12)


def test_every_hinge_axis_shared_by_two_triangles():
    model = load_model(generators.crane({}))
    mesh = triangulate(model)
    edge_count = {}
    for tri in mesh.triangles:
        for i in range(3):
            key = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
            edge_count[key] = edge_count.get(key, 0) + 1
    for hinge in mesh.hinges:
        key = tuple(sorted((int(hinge[1]), int(hinge[2]))))
        assert edge_count[key] == 2


def test_triangulation_deterministic_serialization():
    doc = json.dumps(generators.miura({}))
    a = triangulate(load_model(doc)).to_dict()
    b = triangulate(load_model(doc)).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_collinear_panel_rejected_before_meshing():
    from thermofold import PatternError
    with pytest.raises(PatternError, match="collinear"):
        load_model({
            "nodes": [[0, 0, 0], [1e-3, 0, 0], [2e-3, 0, 0]],
            "panels": [{"nodes": [0, 1, 2], "thickness": 1e-5, "material": "su8"}],
            "reference_length": 1e-3,
        })


def test_odd_crease_divisions_rejected():
    with pytest.raises(MeshingError):
        triangulate(quad_model(), crease_divisions=3)


def test_refined_crease_divisions():
    model = load_model(generators.two_panel({}))
    mesh = triangulate(model, crease_divisions=4)
    assert len(mesh.crease_centerline_nodes[0]) == 5
    assert len(mesh.crease_hinge_map[0]) == 4
