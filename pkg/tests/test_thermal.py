import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermofold import (load_model, triangulate, analytic_1d_temperature,
                        chain_layer_area, effective_env_thickness,
                        t3_element_conductance, SingularSystemError, EnvConfig)
from thermofold import generators
from thermofold.errors import AssemblyError
from thermofold.model import Substrate
from thermofold.thermal import (assemble, solve_temperature,
                                structural_temperatures, centerline_average,
                                boundary_outflows)
from conftest import fd_crease_summary, t3_quadrature_oracle


def solve_two_panel(params, power=10.0):
    model = load_model(generators.two_panel(params))
    mesh = triangulate(model)
    env = model.environment if (model.environment and model.environment.enabled) \
        else None
    system = assemble(mesh, model, np.array(mesh.coords0), env, {0: power})
    T = solve_temperature(system)
    return model, mesh, system, T


# --- T3 element -------------------------------------------------------------

def test_t3_constant_field_carries_no_flux(rng):
    pts = rng.normal(size=(3, 3))
    K = t3_element_conductance(pts, k_mat=2.3, thickness=1e-5)
    assert np.abs(K @ np.ones(3)).max() < 1e-12 * np.abs(K).max()
    assert K == pytest.approx(K.T)
    assert np.linalg.eigvalsh(K)[0] > -1e-12 * np.abs(K).max()


def test_t3_matches_quadrature_oracle(rng):
    for _ in range(20):
        pts = rng.normal(size=(3, 3))
        K = t3_element_conductance(pts, k_mat=1.7, thickness=2e-6)
        K_ref = t3_quadrature_oracle(pts, 1.7, 2e-6)
        assert K == pytest.approx(K_ref, rel=1e-9)


def test_t3_unit_right_triangle():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]])
    K = t3_element_conductance(pts, 1.0, 1.0)
    assert K == pytest.approx(t3_quadrature_oracle(pts, 1.0, 1.0), rel=1e-12)


def test_t3_linear_in_conductivity(rng):
    pts = rng.normal(size=(3, 3))
    K1 = t3_element_conductance(pts, 1.0, 1e-5)
    K3 = t3_element_conductance(pts, 3.0, 1e-5)
    assert K3 == pytest.approx(3.0 * K1, rel=1e-14)


def test_t3_degenerate_rejected():
    with pytest.raises(AssemblyError):
        t3_element_conductance(np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0.0]]),
                               1.0, 1.0)


# --- environment chains -----------------------------------------------------

def test_chain_area_beta_zero_collapses():
    for k in range(1, 11):
        assert chain_layer_area(1.0, 4.0, 1.0, 0.0, 10, k) == pytest.approx(2 / 3)


def test_chain_area_hand_value():
    # A_t=1, L_sum=4, t=1, beta=20deg, N=10, k=1
    expected = (2 / 3) * (1 + 4 * math.tan(math.radians(20)) * 0.05)
    assert chain_layer_area(1.0, 4.0, 1.0, math.radians(20), 10, 1) \
        == pytest.approx(expected, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(A_t=st.floats(1e-12, 1e-3), L_sum=st.floats(1e-6, 1.0),
       t_eff=st.floats(1e-9, 1e-2), beta=st.floats(0.0, 1.4),
       N=st.integers(1, 40))
def test_chain_volume_preservation(A_t, L_sum, t_eff, beta, N):
    total = sum(3.0 * chain_layer_area(A_t, L_sum, t_eff, beta, N, k)
                * (t_eff / N) for k in range(1, N + 1))
    prism = 2.0 * (A_t * t_eff + L_sum * t_eff ** 2 * math.tan(beta) / 2.0)
    assert total == pytest.approx(prism, rel=1e-12)


def make_substrate():
    return Substrate(plane_point=np.zeros(3), plane_normal=np.array([0, 0, 1.0]),
                     is_thermal_boundary=True, is_contact_surface=True)


def test_effective_thickness_cap_inactive_high_above():
    pts = np.array([[0, 0, 2.0], [1, 0, 2.0], [0, 1, 2.0]])
    t_eff, flagged = effective_env_thickness(pts, make_substrate(), t_env=1.0)
    assert t_eff == 1.0 and not flagged


def test_effective_thickness_resting_panel_flagged_zero():
    pts = np.array([[0, 0, 0.0], [1, 0, 0.0], [0, 1, 0.0]])
    t_eff, flagged = effective_env_thickness(pts, make_substrate(), t_env=1.0)
    assert t_eff == 0.0
    assert not flagged  # zero is on the plane, not beyond it
    below = pts - np.array([0, 0, 0.1])
    t_eff, flagged = effective_env_thickness(below, make_substrate(), 1.0)
    assert t_eff == 0.0 and flagged


def test_effective_thickness_mean_of_heights():
    L = 1.0
    pts = np.array([[0, 0, 0.5 * L], [1, 0, 1.0 * L], [0, 1, 1.5 * L]])
    t_eff, _ = effective_env_thickness(pts, make_substrate(), t_env=1.5 * L)
    assert t_eff == pytest.approx(1.0 * L)


def test_no_substrate_returns_t_env():
    pts = np.array([[0, 0, 0.1], [1, 0, 0.1], [0, 1, 0.1]])
    t_eff, flagged = effective_env_thickness(pts, None, 0.7)
    assert t_eff == 0.7 and not flagged


# --- assembly and solve -----------------------------------------------------

def test_zero_heating_gives_room_temperature():
    model, mesh, system, T = solve_two_panel({"env": True}, power=0.0)
    RT = model.environment.room_temperature
    assert structural_temperatures(system, T) == pytest.approx(
        np.full(mesh.n_nodes, RT), abs=1e-9)


def test_doubling_power_doubles_rise():
    _, mesh, s1, T1 = solve_two_panel({"env": True}, power=5.0)
    model, _, s2, T2 = solve_two_panel({"env": True}, power=10.0)
    RT = model.environment.room_temperature
    r1 = structural_temperatures(s1, T1) - RT
    r2 = structural_temperatures(s2, T2) - RT
    assert r2 == pytest.approx(2.0 * r1, rel=1e-10)


def test_single_bar_circuit():
    # one element pair: heated node via a known conductance to an RT node is
    # exercised through the energy balance of a coarse two-panel system
    model, mesh, system, T = solve_two_panel({}, power=10.0)
    flows = boundary_outflows(system, T)
    assert flows["structural"] == pytest.approx(10.0, rel=1e-10)


def test_energy_balance_with_environment():
    model, mesh, system, T = solve_two_panel({"env": True}, power=10.0)
    flows = boundary_outflows(system, T)
    assert flows["structural"] + flows["environment"] == pytest.approx(10.0,
                                                                       rel=1e-8)
    assert flows["environment"] > 0


def test_maximum_principle():
    model, mesh, system, T = solve_two_panel({"env": True}, power=10.0)
    RT = model.environment.room_temperature
    Ts = structural_temperatures(system, T)
    assert Ts.min() >= RT - 1e-9
    # the hottest node is one that receives heating power
    heated = np.nonzero(system.q[:mesh.n_nodes] > 0)[0]
    assert np.argmax(Ts) in heated


def test_monotonic_in_t_eff():
    """Lowering the sheet toward the substrate never raises a temperature."""
    doc = generators.two_panel({"env": True})
    doc["substrate"] = {"point": [0, 0, 0], "normal": [0, 0, 1],
                        "thermal_boundary": True, "contact": False}
    model = load_model(doc)
    mesh = triangulate(model)

    def temps(z):
        coords = np.array(mesh.coords0)
        coords[:, 2] = z
        system = assemble(mesh, model, coords, model.environment, {0: 10.0})
        return structural_temperatures(system, solve_temperature(system))

    high = temps(120e-6)   # t_env = 150 um, so capping is active below that
    low = temps(60e-6)
    assert np.all(low <= high + 1e-9)
    assert low.max() < high.max()


def test_isolated_node_raises():
    doc = generators.two_panel({})
    doc["nodes"].append([5e-4, 5e-4, 0.0])   # referenced by nothing
    model = load_model(doc)
    mesh = triangulate(model)
    system = assemble(mesh, model, np.array(mesh.coords0), None, {0: 10.0})
    with pytest.raises(SingularSystemError):
        solve_temperature(system)


def test_empty_dirichlet_set_raises():
    model = load_model(generators.two_panel({}))
    mesh = triangulate(model)
    system = assemble(mesh, model, np.array(mesh.coords0), None, {0: 10.0})
    system.dirichlet_nodes = np.array([], dtype=int)
    system.dirichlet_values = np.array([])
    with pytest.raises(SingularSystemError):
        solve_temperature(system)


# --- 1-D analytic oracle ----------------------------------------------------

def test_oracle_zero_power_is_rt():
    sol = analytic_1d_temperature(1e-4, 1e-4, 1e-4, 2e-5, 1e-6, 1e-5, 1.0, 0.0,
                                  RT=293.15)
    for x in np.linspace(-1.2e-4, 1.2e-4, 7):
        assert sol.temperature(x) == pytest.approx(293.15)


def test_oracle_symmetric_peak_at_center():
    sol = analytic_1d_temperature(1e-4, 1e-4, 1e-4, 5e-5, 1e-6, 1e-5, 1.0, 10.0)
    assert sol.T_peak == pytest.approx(sol.T_centerline, rel=1e-12)
    assert sol.temperature(2e-5) == pytest.approx(sol.temperature(-2e-5), rel=1e-12)


def test_oracle_matches_finite_differences():
    L = 100e-6
    for (L1, L2, wl, tc_tp) in [(L, L, 0.2, 0.1), (L, L, 1.0, 0.5),
                                (0.5 * L, L, 0.5, 0.1), (2 * L, L, 0.5, 1.0)]:
        W = wl * L
        t_p = 10e-6
        sol = analytic_1d_temperature(L1, L2, L, W, tc_tp * t_p, t_p, 1.0, 10.0)
        T0, Tpk, Tavg = fd_crease_summary(L1, L2, L, W, tc_tp * t_p, t_p, 1.0,
                                          10.0, n_cells=20000)
        assert sol.T_centerline == pytest.approx(T0, rel=1e-3)
        assert sol.T_peak == pytest.approx(Tpk, rel=1e-3)
        assert sol.T_average == pytest.approx(Tavg, rel=1e-3)


def test_oracle_rejects_nonpositive_dimensions():
    with pytest.raises(ValueError):
        analytic_1d_temperature(0.0, 1e-4, 1e-4, 2e-5, 1e-6, 1e-5, 1.0, 10.0)


def test_bh_against_oracle_example_case():
    """Fig-5 style check at W/L=0.2, tc/tp=0.1."""
    model, mesh, system, T = solve_two_panel(
        {"L": "100um", "W_over_L": 0.2, "tc_over_tp": 0.1, "room_T": 0.0})
    Ts = structural_temperatures(system, T)
    T_ave = centerline_average(mesh, 0, Ts)
    sol = analytic_1d_temperature(100e-6, 100e-6, 100e-6, 20e-6, 1e-6, 10e-6,
                                  1.0, 10.0, RT=0.0)
    assert T_ave == pytest.approx(sol.T_centerline, rel=0.10)


def test_mesh_consistency_under_strip_refinement():
    """Refining the strip changes T_ave by less than the model-oracle gap."""
    params = {"L": "100um", "W_over_L": 0.6, "tc_over_tp": 0.1, "room_T": 0.0}
    model = load_model(generators.two_panel(params))
    sol = analytic_1d_temperature(100e-6, 100e-6, 100e-6, 60e-6, 1e-6, 10e-6,
                                  1.0, 10.0, RT=0.0)
    values = {}
    for div in (2, 4):
        mesh = triangulate(model, crease_divisions=div)
        system = assemble(mesh, model, np.array(mesh.coords0), None, {0: 10.0})
        Ts = structural_temperatures(system, solve_temperature(system))
        values[div] = centerline_average(mesh, 0, Ts)
    gap = abs(values[2] - sol.T_centerline)
    assert abs(values[4] - values[2]) < gap


def test_trend_rise_increases_with_w_over_l():
    """Direction of the calibration curves: wider crease, higher rise.

    The benchmark applies a uniform volumetric body heat, so the total
    power grows with the crease volume as W/L grows.
    """
    rises = []
    for wl in (0.2, 0.4, 0.6, 0.8, 1.0):
        model, mesh, system, T = solve_two_panel(
            {"W_over_L": wl, "env": True, "room_T": 0.0}, power=10.0 * wl)
        rises.append(centerline_average(mesh, 0,
                                        structural_temperatures(system, T)))
    assert all(b > a for a, b in zip(rises, rises[1:]))


def test_env_chains_present_on_both_sides():
    model, mesh, system, T = solve_two_panel({"env": True})
    sides = {(c.owner_node, c.side) for c in system.chains}
    for node in range(mesh.n_nodes):
        assert (node, 0) in sides and (node, 1) in sides
    N = model.environment.layers
    for chain in system.chains:
        assert len(chain.layer_conductances) == N
        assert np.all(chain.layer_conductances > 0)
