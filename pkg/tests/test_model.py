import json

import numpy as np
import pytest

from thermofold import load_model, PatternError
from thermofold import generators
from thermofold.model import parse_length, parse_angle


def test_parse_length_suffixes():
    assert parse_length("700um") == pytest.approx(700e-6)
    assert parse_length("1.5mm") == pytest.approx(1.5e-3)
    assert parse_length(2e-6) == 2e-6
    assert parse_length("3") == 3.0
    with pytest.raises(PatternError):
        parse_length("seven")


def test_parse_angle():
    assert parse_angle("20deg") == pytest.approx(np.radians(20))
    assert parse_angle("-10deg") == pytest.approx(np.radians(-10))
    assert parse_angle(0.5) == 0.5


def test_two_panel_minimal_model():
    model = load_model(generators.two_panel(
        {"L": "100um", "W_over_L": 0.2, "tc_over_tp": 0.1}))
    assert len(model.structural_panels) == 2
    assert len(model.creases) == 1
    crease = model.creases[0]
    assert crease.width == pytest.approx(20e-6)
    assert crease.length == pytest.approx(100e-6)


def test_gripper_model_counts():
    model = load_model(generators.gripper(
        {"L1": "1000um", "L2": "1000um", "La": "700um", "W": "200um"}))
    anchored = {n.id for n in model.nodes if n.fixed_dofs}
    foldable = [p for p in model.structural_panels
                if not set(p.node_ids) <= anchored]
    assert len(foldable) == 4
    assert sorted({c.heating_circuit for c in model.creases}) == [0, 1]


def test_missing_material_reference_rejected():
    doc = generators.two_panel({})
    doc["creases"][0]["layup"]["bottom"]["material"] = "unobtainium"
    with pytest.raises(PatternError, match="unobtainium"):
        load_model(doc)


def test_generator_exclusive_with_explicit_nodes():
    with pytest.raises(PatternError, match="mutually exclusive"):
        load_model({"generator": {"name": "two-panel"},
                    "nodes": [[0, 0, 0]]})


def test_unknown_generator():
    with pytest.raises(PatternError, match="unknown generator"):
        load_model({"generator": {"name": "flapping-dragon"}})


def test_malformed_panel_reference():
    doc = generators.two_panel({})
    doc["panels"][0]["nodes"] = [0, 1, 99]
    with pytest.raises(PatternError, match=r"panels\[0\]"):
        load_model(doc)


def test_nonplanar_quad_rejected():
    doc = generators.two_panel({})
    doc["nodes"][0][2] = 5e-5
    with pytest.raises(PatternError, match="planar"):
        load_model(doc)


def test_crease_fold_ends_must_sit_on_strip():
    doc = generators.two_panel({})
    doc["creases"][0]["end_nodes"] = [0, 3]
    with pytest.raises(PatternError, match="end_nodes"):
        load_model(doc)


def test_model_roundtrip_through_json():
    doc = generators.crane({})
    model = load_model(json.dumps(doc))
    assert len(model.creases) == 17
    assert model.coords.flags.writeable is False


def test_all_generators_validate():
    for name in ("two-panel", "single-crease", "double-crease", "crane",
                 "miura", "gripper"):
        model = load_model({"generator": {"name": name, "params": {}}})
        assert model.reference_length > 0
        assert model.heating
