"""Run configuration: environment model parameters and solver controls."""

from dataclasses import dataclass, field, asdict, replace
import math


@dataclass(frozen=True)
class EnvConfig:
    """Surrounding-medium conduction model.

    The medium between the sheet and the room-temperature far field is
    discretized into `layers` stacked conduction layers spanning a column of
    thickness t_env. The column widens away from the sheet with dissipation
    half-angle beta. t_env may be given directly (meters) or as
    t_env_ratio times the model's reference length.
    """

    k_env: float = 0.026
    t_env: float | None = None
    t_env_ratio: float = 1.5
    beta_rad: float = math.radians(20.0)
    layers: int = 10
    room_temperature: float = 293.15
    enabled: bool = True

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if not 0.0 <= self.beta_rad < math.pi / 2:
            raise ValueError("beta must lie in [0, pi/2)")
        if self.t_env is not None and self.t_env <= 0:
            raise ValueError("t_env must be strictly positive")
        if self.k_env <= 0:
            raise ValueError("k_env must be strictly positive")

    def resolve_t_env(self, reference_length: float) -> float:
        if self.t_env is not None:
            return self.t_env
        return self.t_env_ratio * reference_length


@dataclass(frozen=True)
class SolverConfig:
    """Controls for the coupled incremental solve.

    The c_* constants set the bar-and-hinge stiffness scheme:
      - bar EA contribution per adjacent triangle: c_bar * (E t) * A / L_bar
      - panel bending hinge: c_bend * D * L_axis / d_flank, D = E t^3 / 12
        (harmonic mean of the flanking triangles' plate rigidities)
      - crease fold hinge: c_fold * (D_layup / W) * L_segment
    Contact: d0 defaults to half the smallest crease span; barrier scale
    k_e = contact_ke_factor * max(E t) * d0^2.
    """

    increments: int = 250
    newton_tol: float = 1e-6
    newton_max_iter: int = 40
    settle_substeps: int = 12
    settle_max_iter: int = 250
    max_step_halvings: int = 8
    line_search_max_backtracks: int = 25
    step_cap_factor: float = 0.25       # max nodal move per Newton step, x L_ref
    gravity: tuple = (0.0, 0.0, -9.81)
    gravity_on: bool = True
    contact_on: bool = True
    contact_d0: float | None = None
    contact_ke_factor: float = 0.01
    contact_search_band: float = 1.5    # candidate pairs within band * d0
    c_bar: float = 1.0
    c_bend: float = 1.0
    c_fold: float = 1.0
    c_strip_rigidity: float = 100.0
    crease_divisions: int = 2
    env: EnvConfig = field(default_factory=EnvConfig)

    def __post_init__(self):
        if self.increments < 1:
            raise ValueError("increments must be >= 1")
        if self.crease_divisions < 2 or self.crease_divisions % 2:
            raise ValueError("crease_divisions must be an even integer >= 2")

    def to_dict(self) -> dict:
        return asdict(self)


def _apply(dc, overrides: dict):
    known = {f for f in dc.__dataclass_fields__}
    bad = set(overrides) - known
    if bad:
        raise ValueError(f"unknown config field(s): {sorted(bad)}")
    return replace(dc, **overrides)


def config_from_dict(data: dict) -> SolverConfig:
    """Build a SolverConfig from a (possibly partial) nested dict."""
    data = dict(data or {})
    env_data = data.pop("env", None)
    cfg = _apply(SolverConfig(), data)
    if env_data is not None:
        cfg = replace(cfg, env=_apply(cfg.env, env_data))
    return cfg
