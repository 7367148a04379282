"""Bi-material morph actuation: crease temperature to stress-free fold angle.

A crease is a bonded two-layer strip. Layer 1 is the layer facing the
substrate in the flat sheet, layer 2 sits on top. Heating by dT bends the
strip toward the layer with the smaller expansion coefficient, so a layup
with the high-expansion material on the bottom folds the sheet upward
(positive fold angle in this package's convention).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CreaseActuator:
    """Two bonded elastic layers; thicknesses in meters, moduli in Pa."""

    t1: float
    t2: float
    E1: float
    E2: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        for name in ("t1", "t2", "E1", "E2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def m(self) -> float:
        """Thickness ratio t2/t1."""
        return self.t2 / self.t1

    @property
    def n(self) -> float:
        """Modulus ratio E2/E1."""
        return self.E2 / self.E1

    @property
    def total_thickness(self) -> float:
        return self.t1 + self.t2


def bimorph_curvature(act: CreaseActuator, delta_T: float) -> float:
    """Curvature of a free two-layer strip heated uniformly by delta_T.

    kappa = 6 (a1 - a2) (1 + m)^2 dT
            / ((t1 + t2) [3 (1 + m)^2 + (1 + m n)(m^2 + 1/(m n))])

    Positive curvature bends toward layer 2 when alpha1 > alpha2.
    """
    if not np.isfinite(delta_T):
        raise ValueError("delta_T must be finite")
    m = act.m
    n = act.n
    num = 6.0 * (act.alpha1 - act.alpha2) * (1.0 + m) ** 2 * delta_T
    den = act.total_thickness * (3.0 * (1.0 + m) ** 2
                                 + (1.0 + m * n) * (m * m + 1.0 / (m * n)))
    return num / den


def stress_free_angle(act: CreaseActuator, length: float, delta_T: float,
                      residual_angle: float = 0.0) -> float:
    """Stress-free fold angle of a crease with bending span `length`.

    theta = kappa * length + residual. The residual term is the as-built
    fold that remains at delta_T = 0 (fabrication stress), a fixed additive
    offset per crease.
    """
    if length <= 0:
        raise ValueError("crease bending span must be strictly positive")
    return bimorph_curvature(act, delta_T) * length + residual_angle


def membrane_stiffness(act: CreaseActuator) -> float:
    """In-plane stiffness E*t of the bonded pair, per unit width (N/m)."""
    return act.E1 * act.t1 + act.E2 * act.t2


def bending_rigidity(act: CreaseActuator) -> float:
    """Flexural rigidity of the bonded pair per unit width (N m).

    Computed about the composite neutral axis: with y measured from the
    bottom face, ybar = (E1 t1^2/2 + E2 t2 (t1 + t2/2)) / (E1 t1 + E2 t2).
    """
    t1, t2, E1, E2 = act.t1, act.t2, act.E1, act.E2
    S = E1 * t1 + E2 * t2
    ybar = (E1 * t1 * t1 / 2.0 + E2 * t2 * (t1 + t2 / 2.0)) / S
    D1 = E1 * (t1 ** 3 / 12.0 + t1 * (ybar - t1 / 2.0) ** 2)
    D2 = E2 * (t2 ** 3 / 12.0 + t2 * (t1 + t2 / 2.0 - ybar) ** 2)
    return D1 + D2


def layup_density(act: CreaseActuator, rho1: float, rho2: float) -> float:
    """Mean density of the pair weighted by layer thickness."""
    return (rho1 * act.t1 + rho2 * act.t2) / act.total_thickness
