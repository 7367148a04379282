"""Coordinate-descent design optimization of the gripper template.

The objective is the total input power needed to first assemble the
gripper (circuit 0 folds the base panels to the assembly angle) and then
close the arms by the fixed gripping range (circuit 1). A design is
feasible while every crease temperature stays under the glass-transition
ceiling and both motion targets are reached within the power caps.

Power accounting: each phase's completion power is linearly interpolated
between the two bracketing increments, and the objective is the sum of
both circuits' completion powers.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .config import SolverConfig
from .driver import CoupledSimulation
from .errors import InfeasibleStartError, NonConvergenceError
from .model import load_model
from . import generators

SU8_GLASS_TRANSITION = 483.15          # K (about 210 C)


@dataclass(frozen=True)
class DesignVector:
    W: float
    L1: float
    L2: float
    La: float

    def as_tuple(self):
        return (self.W, self.L1, self.L2, self.La)


@dataclass(frozen=True)
class DesignBounds:
    L_min: float = 500e-6
    L_max: float = 1500e-6
    W_min: float = 100e-6
    W_max: float = 300e-6
    La_min: float = 500e-6
    La_max: float = 1500e-6
    temperature_ceiling: float = 1.2 * SU8_GLASS_TRANSITION

    def contains(self, d: DesignVector) -> bool:
        return (self.W_min <= d.W <= self.W_max
                and self.L_min <= d.L1 <= self.L_max
                and self.L_min <= d.L2 <= self.L_max
                and self.La_min <= d.La <= self.La_max)

    def lows(self):
        return np.array([self.W_min, self.L_min, self.L_min, self.La_min])

    def highs(self):
        return np.array([self.W_max, self.L_max, self.L_max, self.La_max])


@dataclass
class TraceStep:
    step: int
    design: DesignVector
    objective: float                   # W; inf when infeasible
    max_temperature: float
    feasible: bool
    accepted: bool
    note: str = ""


@dataclass
class OptimizationTrace:
    steps: list = field(default_factory=list)
    simulator_calls: int = 0

    @property
    def accepted_steps(self):
        return [s for s in self.steps if s.accepted]

    @property
    def best(self) -> TraceStep:
        feasible = [s for s in self.steps if s.feasible]
        return min(feasible, key=lambda s: s.objective)


@dataclass
class GripperEvaluation:
    power: float
    max_temperature: float
    feasible: bool
    reason: str = ""
    assembly_power: float = 0.0
    closing_power: float = 0.0


@dataclass(frozen=True)
class GripperTask:
    """Fixed parts of the gripper study (template and motion targets)."""

    assembly_fold: float = math.radians(50.0)
    closing_range: float = math.radians(30.0)
    power_cap: float = 0.08            # per circuit, W
    phase_increments: int = 40
    max_step_halvings: int = 8
    template: dict = field(default_factory=dict)
    ceiling: float = 1.2 * SU8_GLASS_TRANSITION


def build_gripper_model(design: DesignVector, task: GripperTask):
    params = dict(task.template)
    params.update(W=design.W, L1=design.L1, L2=design.L2, La=design.La)
    return load_model(generators.gripper(params), name="gripper")


def _interp_power(p_lo, p_hi, v_lo, v_hi, target):
    if v_hi == v_lo:
        return p_hi
    frac = (target - v_lo) / (v_hi - v_lo)
    return p_lo + (p_hi - p_lo) * min(max(frac, 0.0), 1.0)


def _step_retry(sim, p_prev: dict, p_next: dict, max_depth: int):
    """Advance to p_next with recursive power halving; returns (frame, maxT)."""
    max_T = -math.inf

    def go(lo, hi, depth):
        nonlocal max_T
        try:
            fr = sim.step(hi)
        except NonConvergenceError:
            if depth >= max_depth:
                raise
            mid = {c: 0.5 * (lo[c] + hi[c]) for c in hi}
            go(lo, mid, depth + 1)
            return go(mid, hi, depth + 1)
        max_T = max(max_T, fr.max_temperature)
        return fr

    frame = go(p_prev, p_next, 0)
    return frame, max_T


def evaluate_design(design: DesignVector, task: GripperTask,
                    config: SolverConfig | None = None) -> GripperEvaluation:
    """Simulate one design: assembly phase then closing phase."""
    config = config or SolverConfig()
    model = build_gripper_model(design, task)
    base_ids = [c.id for c in model.creases if c.heating_circuit == 0]
    arm_ids = [c.id for c in model.creases if c.heating_circuit == 1]

    sim = CoupledSimulation(model, config)
    max_T = -math.inf
    try:
        frame = sim.settle()
    except NonConvergenceError:
        return GripperEvaluation(power=math.inf, max_temperature=math.inf,
                                 feasible=False, reason="settle diverged")
    max_T = max(max_T, frame.max_temperature)

    def metric(fr, ids):
        # circuit completion tracks the mean fold of its creases; a min()
        # would make the objective blind to single-side design changes on
        # this symmetric template
        return sum(fr.fold_angle(i) for i in ids) / len(ids)

    def ramp(circuit, held, target_metric, ids, start_value):
        """Raise one circuit until the fold metric crosses target_metric."""
        nonlocal frame, max_T
        dq = task.power_cap / task.phase_increments
        prev_p, prev_m = 0.0, metric(frame, ids) - start_value
        for k in range(1, task.phase_increments + 1):
            p = k * dq
            powers = dict(held)
            powers[circuit] = p
            lo = dict(held)
            lo[circuit] = prev_p
            frame, step_T = _step_retry(sim, lo, powers, task.max_step_halvings)
            max_T = max(max_T, step_T)
            m = metric(frame, ids) - start_value
            if m >= target_metric:
                return _interp_power(prev_p, p, prev_m, m, target_metric), p
            prev_p, prev_m = p, m
        return None, None

    try:
        assembly_power, p0_grid = ramp(0, {0: 0.0, 1: 0.0}, task.assembly_fold,
                                       base_ids, 0.0)
    except NonConvergenceError:
        return GripperEvaluation(power=math.inf, max_temperature=max_T,
                                 feasible=False, reason="assembly diverged")
    if assembly_power is None:
        return GripperEvaluation(power=math.inf, max_temperature=max_T,
                                 feasible=False, reason="assembly target unreached")

    arm_start = metric(frame, arm_ids)
    try:
        closing_power, _ = ramp(1, {0: p0_grid, 1: 0.0}, task.closing_range,
                                arm_ids, arm_start)
    except NonConvergenceError:
        return GripperEvaluation(power=math.inf, max_temperature=max_T,
                                 feasible=False, reason="closing diverged")
    if closing_power is None:
        return GripperEvaluation(power=math.inf, max_temperature=max_T,
                                 feasible=False, reason="closing target unreached")

    power = assembly_power + closing_power
    feasible = max_T <= task.ceiling
    return GripperEvaluation(power=power, max_temperature=max_T,
                             feasible=feasible,
                             reason="" if feasible else "temperature ceiling",
                             assembly_power=assembly_power,
                             closing_power=closing_power)


def coordinate_descent(objective, x0: np.ndarray, lows: np.ndarray,
                       highs: np.ndarray, steps: np.ndarray,
                       max_cycles: int = 12, executor=None):
    """Cyclic fixed-step coordinate descent on a black-box objective.

    objective(x) -> (value, feasible, info). Accepts the best strictly
    improving feasible probe per coordinate; ties break toward the smaller
    coordinate value. Stops after a full cycle without improvement.
    Returns (history, calls): history entries are
    (x, value, feasible, accepted, info).
    """
    cache = {}
    calls = 0

    def _key(x):
        return tuple(np.round(x, 12).tolist())

    def evaluate(x):
        nonlocal calls
        key = _key(x)
        if key not in cache:
            cache[key] = objective(np.asarray(key))
            calls += 1
        return cache[key]

    def warm(xs):
        """Evaluate missing candidates concurrently, commit in fixed order."""
        nonlocal calls
        missing = [x for x in xs if _key(x) not in cache]
        if not missing:
            return
        results = list(executor.map(lambda x: objective(np.asarray(_key(x))),
                                    missing))
        for x, res in zip(missing, results):
            cache[_key(x)] = res
            calls += 1

    x = np.array(x0, dtype=float)
    val, feasible, info = evaluate(x)
    history = [(x.copy(), val, feasible, True, info)]
    if not feasible:
        raise InfeasibleStartError(
            "starting design is infeasible; adjust the start point or bounds")

    n = len(x)
    for _ in range(max_cycles):
        improved = False
        for i in range(n):
            candidates = []
            for delta in (-steps[i], steps[i]):
                xc = x.copy()
                xc[i] += delta
                if lows[i] - 1e-15 <= xc[i] <= highs[i] + 1e-15:
                    candidates.append(xc)
            if executor is not None and len(candidates) > 1:
                warm(candidates)
            best = None
            for xc in candidates:
                v, feas, inf_c = evaluate(xc)
                if feas and v < val and (best is None or v < best[1]):
                    best = (xc, v, inf_c)
                history.append((xc.copy(), v, feas, False, inf_c))
            if best is not None:
                x, val, info = best[0], best[1], best[2]
                history.append((x.copy(), val, True, True, info))
                improved = True
        if not improved:
            break
    return history, calls


def optimize_gripper(start: DesignVector | None = None,
                     bounds: DesignBounds | None = None,
                     steps=None, max_cycles: int = 12,
                     task: GripperTask | None = None,
                     config: SolverConfig | None = None,
                     executor=None) -> OptimizationTrace:
    """Gripper power minimization over (W, L1, L2, La)."""
    bounds = bounds or DesignBounds()
    start = start or DesignVector(W=200e-6, L1=1000e-6, L2=1000e-6, La=700e-6)
    task = task or GripperTask(ceiling=bounds.temperature_ceiling)
    if steps is None:
        steps = np.array([(bounds.W_max - bounds.W_min) / 20.0,
                          (bounds.L_max - bounds.L_min) / 20.0,
                          (bounds.L_max - bounds.L_min) / 20.0,
                          (bounds.La_max - bounds.La_min) / 20.0])
    if not bounds.contains(start):
        raise InfeasibleStartError("starting design violates the bounds")

    def objective(x):
        design = DesignVector(*x)
        ev = evaluate_design(design, task, config)
        return ev.power, ev.feasible, ev

    history, calls = coordinate_descent(objective, np.array(start.as_tuple()),
                                        bounds.lows(), bounds.highs(),
                                        np.asarray(steps, dtype=float),
                                        max_cycles=max_cycles,
                                        executor=executor)
    trace = OptimizationTrace(simulator_calls=calls)
    for idx, (x, val, feas, accepted, info) in enumerate(history):
        trace.steps.append(TraceStep(
            step=idx, design=DesignVector(*x), objective=val,
            max_temperature=getattr(info, "max_temperature", math.nan),
            feasible=feas, accepted=accepted,
            note=getattr(info, "reason", "")))
    return trace
