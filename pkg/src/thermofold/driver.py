"""Coupled heating loop: temperature -> stress-free angles -> equilibrium.

Every increment re-solves the heat problem on the current deformed
geometry (the substrate cap is what feeds folding back into the thermal
loss), converts crease temperature rises into stress-free fold angles,
and re-converges the mechanical equilibrium. A failed increment is retried
by recursive power-step halving from the last converged state.
"""

from dataclasses import dataclass, field
import copy
import math
import time

import numpy as np

from .actuation import stress_free_angle
from .config import SolverConfig, EnvConfig
from .errors import NonConvergenceError
from .mechanics import (build_mech_system, newton_solve, contact_search,
                        _ContactTracker, dihedral_angles, continuous_angles)
from .meshing import triangulate
from .thermal import assemble, solve_temperature, structural_temperatures, \
    centerline_average


@dataclass(frozen=True)
class HeatingSchedule:
    """Per-circuit target powers reached in `increments` equal steps."""

    targets: dict
    increments: int = 250
    mask: dict = field(default_factory=dict)   # circuit -> bool (active)

    def __post_init__(self):
        if self.increments < 1:
            raise ValueError("increments must be >= 1")
        for cid, p in self.targets.items():
            if p < 0:
                raise ValueError(f"circuit {cid}: target power must be >= 0")

    def active(self, circuit) -> bool:
        return bool(self.mask.get(circuit, True))

    def powers_at(self, k: int) -> dict:
        frac = k / self.increments
        return {cid: (p * frac if self.active(cid) else 0.0)
                for cid, p in self.targets.items()}


@dataclass
class Frame:
    index: int
    powers: dict
    coords: np.ndarray
    temperatures: np.ndarray           # structural nodes only
    crease_dT: dict
    crease_theta0: dict                # stress-free dihedral (pi + fold)
    crease_dihedral: dict              # realized continuous dihedral
    newton_iterations: int
    energies: dict
    min_contact_distance: float
    max_temperature: float

    def fold_angle(self, crease_id: int) -> float:
        return self.crease_dihedral[crease_id] - math.pi

    def stress_free_fold(self, crease_id: int) -> float:
        return self.crease_theta0[crease_id] - math.pi


@dataclass
class SimulationResult:
    frames: list
    status: str                        # "completed" or "partial"
    model_name: str
    duration_s: float = 0.0            # informational; never serialized

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    @property
    def final(self) -> Frame:
        return self.frames[-1]


class CoupledSimulation:
    """Stateful increment stepper shared by the driver and the optimizer."""

    def __init__(self, model, config: SolverConfig | None = None):
        self.model = model
        self.config = config or SolverConfig()
        self.mesh = triangulate(model, self.config.crease_divisions)
        self.system = build_mech_system(self.mesh, model, self.config)
        self.env = self._resolve_env()
        self.coords = np.array(self.mesh.coords0, dtype=float)
        self.theta_prev = dihedral_angles(self.coords, self.mesh.hinges)
        self.tracker = _ContactTracker()
        self._frame_counter = 0
        self._residual_scale = 1.0
        self._settled = False

    def _resolve_env(self) -> EnvConfig | None:
        env = self.model.environment
        if env is None:
            env = self.config.env
        return env if env.enabled else None

    @property
    def room_temperature(self) -> float:
        if self.env is not None:
            return self.env.room_temperature
        return self.config.env.room_temperature

    def _theta0_vector(self, crease_folds: dict) -> np.ndarray:
        theta0 = np.array(self.system.theta_rest)
        for cid, fold in crease_folds.items():
            for h in self.mesh.crease_hinge_map[cid]:
                theta0[h] = math.pi + fold
        return theta0

    def _crease_folds(self, T: np.ndarray) -> tuple:
        """Stress-free fold angle and temperature rise per crease."""
        RT = self.room_temperature
        folds = {}
        rises = {}
        for c in self.model.creases:
            dT = centerline_average(self.mesh, c.id, T) - RT
            rises[c.id] = dT
            residual = c.residual_angle * self._residual_scale
            if c.active:
                folds[c.id] = stress_free_angle(c.layup, c.width, dT, residual)
            else:
                folds[c.id] = residual
        return folds, rises

    def step(self, powers: dict, max_iter: int | None = None) -> Frame:
        """One coupled increment. State advances only if Newton converges."""
        thermal = assemble(self.mesh, self.model, self.coords, self.env, powers)
        T_full = solve_temperature(thermal)
        T = structural_temperatures(thermal, T_full)
        folds, rises = self._crease_folds(T)
        theta0 = self._theta0_vector(folds)

        result = newton_solve(self.system, self.coords, theta0, self.theta_prev,
                              tol=self.config.newton_tol,
                              max_iter=max_iter or self.config.newton_max_iter,
                              tracker=self.tracker)
        self.coords = result.coords
        self.theta_prev = result.theta
        self._settled = True

        dihedrals = {}
        for cid, hinge_ids in self.mesh.crease_hinge_map.items():
            dihedrals[cid] = float(np.mean(result.theta[hinge_ids]))
        frame = Frame(
            index=self._frame_counter,
            powers=dict(sorted(powers.items())),
            coords=np.array(result.coords),
            temperatures=np.array(T),
            crease_dT=rises,
            crease_theta0={cid: math.pi + fold for cid, fold in folds.items()},
            crease_dihedral=dihedrals,
            newton_iterations=result.iterations,
            energies={k: result.parts[k] for k in
                      ("U_bar", "U_spr", "U_contact", "U_gravity")},
            min_contact_distance=result.min_contact_distance,
            max_temperature=float(np.max(T)),
        )
        self._frame_counter += 1
        return frame

    def settle(self, substeps: int | None = None) -> Frame:
        """Zero-power equilibrium (gravity and residual folds only).

        Loads ramp from zero in substeps (with halving on non-convergence):
        the jump from the as-built flat sheet to its rested shape is a
        finite rotation, which incremental loading handles far more
        reliably than a single solve. Returns one frame, indexed 0.
        """
        substeps = substeps or self.config.settle_substeps
        zero = {cid: 0.0 for cid in self.model.heating}
        base_gravity = None if self.system.gravity is None \
            else np.array(self.system.gravity)
        frame = None

        def solve_at(s):
            nonlocal frame
            if base_gravity is not None:
                self.system.gravity = base_gravity * s
            self._residual_scale = s
            frame = self.step(zero, max_iter=self.config.settle_max_iter)

        try:
            s_prev = 0.0
            pending = [k / substeps for k in range(1, substeps + 1)]
            depth = 0
            while pending:
                s = pending[0]
                try:
                    solve_at(s)
                except NonConvergenceError:
                    if depth >= self.config.max_step_halvings:
                        raise
                    pending.insert(0, 0.5 * (s_prev + s))
                    depth += 1
                    continue
                pending.pop(0)
                s_prev = s
        finally:
            if base_gravity is not None:
                self.system.gravity = base_gravity
            self._residual_scale = 1.0

        frame.index = 0
        self._frame_counter = 1
        return frame


def run_coupled(model, config: SolverConfig | None = None,
                schedule: HeatingSchedule | None = None) -> SimulationResult:
    """Full incremental heating run per the coupled loop."""
    config = config or SolverConfig()
    if schedule is None:
        schedule = HeatingSchedule(targets=dict(model.heating),
                                   increments=config.increments)
    t0 = time.perf_counter()
    sim = CoupledSimulation(model, config)
    frames = []
    status = "completed"
    try:
        frames.append(sim.settle())
    except NonConvergenceError:
        return SimulationResult(frames=[], status="partial",
                                model_name=model.name,
                                duration_s=time.perf_counter() - t0)

    prev = schedule.powers_at(0)
    for k in range(1, schedule.increments + 1):
        target = schedule.powers_at(k)
        if not _advance(sim, frames, prev, target, 0, config.max_step_halvings):
            status = "partial"
            break
        prev = target
    return SimulationResult(frames=frames, status=status, model_name=model.name,
                            duration_s=time.perf_counter() - t0)


def _advance(sim, frames, p_prev, p_next, depth, max_depth) -> bool:
    try:
        frames.append(sim.step(p_next))
        return True
    except NonConvergenceError:
        if depth >= max_depth:
            return False
        p_mid = {cid: 0.5 * (p_prev[cid] + p_next[cid]) for cid in p_next}
        if not _advance(sim, frames, p_prev, p_mid, depth + 1, max_depth):
            return False
        return _advance(sim, frames, p_mid, p_next, depth + 1, max_depth)


@dataclass
class MiuraComparison:
    result_off: SimulationResult
    result_on: SimulationResult
    lift_off: list                     # per frame, meters
    lift_on: list
    tracked_nodes: list


def run_miura_comparison(model, config: SolverConfig | None = None,
                         schedule: HeatingSchedule | None = None) -> MiuraComparison:
    """Paired run of a lifter model with and without its substrate.

    The substrate-off variant removes both the thermal boundary and the
    contact surface. Lifting displacement is the mean height gain of the
    free-end nodes (largest rest x).
    """
    model_off = copy.copy(model)
    model_off.substrate = None

    rest = model.coords
    fixed_any = {n.id for n in model.nodes if n.fixed_dofs}
    free_ids = [n.id for n in model.nodes if n.id not in fixed_any]
    x_max = max(rest[i][0] for i in free_ids)
    span = x_max - min(rest[i][0] for i in range(len(model.nodes)))
    tracked = [i for i in free_ids if rest[i][0] >= x_max - 1e-6 * span]

    res_off = run_coupled(model_off, config, schedule)
    res_on = run_coupled(model, config, schedule)

    def lifts(result):
        out = []
        for fr in result.frames:
            z0 = np.mean([rest[i][2] for i in tracked])
            out.append(float(np.mean(fr.coords[tracked, 2]) - z0))
        return out

    return MiuraComparison(result_off=res_off, result_on=res_on,
                           lift_off=lifts(res_off), lift_on=lifts(res_on),
                           tracked_nodes=tracked)
