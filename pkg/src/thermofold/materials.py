"""Material records and the stock presets used by the pattern generators.

Preset values are representative handbook numbers for the materials commonly
used in electro-thermally folded micro-devices (structural photopolymers,
evaporated gold, silicon) and for the two usual surrounding media (air,
water). They are starting points, not measurements: any pattern file can
define its own materials.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Material:
    """Isotropic solid constants, SI units."""

    k_mat: float               # thermal conductivity, W/(m K)
    youngs_modulus: float      # Pa
    thermal_expansion: float   # 1/K
    density: float             # kg/m^3
    poisson: float = 0.0

    def __post_init__(self):
        if self.k_mat <= 0:
            raise ValueError("k_mat must be strictly positive")
        if self.youngs_modulus <= 0:
            raise ValueError("youngs_modulus must be strictly positive")
        if self.thermal_expansion <= 0:
            raise ValueError("thermal_expansion must be strictly positive")
        if self.density <= 0:
            raise ValueError("density must be strictly positive")
        if not 0.0 <= self.poisson < 0.5:
            raise ValueError("poisson must lie in [0, 0.5)")


MATERIAL_PRESETS = {
    # SU-8 photoresist (thick structural panels and crease base layer)
    "su8": Material(k_mat=0.3, youngs_modulus=2.0e9, thermal_expansion=52e-6,
                    density=1190.0, poisson=0.22),
    # evaporated gold film (heater / top morph layer)
    "gold": Material(k_mat=317.0, youngs_modulus=79e9, thermal_expansion=14.2e-6,
                     density=19300.0, poisson=0.44),
    # SPR-type positive photoresist (thin panels)
    "spr": Material(k_mat=0.2, youngs_modulus=1.5e9, thermal_expansion=70e-6,
                    density=1100.0, poisson=0.3),
    "silicon": Material(k_mat=150.0, youngs_modulus=170e9, thermal_expansion=2.6e-6,
                        density=2329.0, poisson=0.28),
    # unit-conductivity solid for non-dimensional verification sweeps
    "unit": Material(k_mat=1.0, youngs_modulus=2.0e9, thermal_expansion=50e-6,
                     density=1000.0, poisson=0.3),
}

# Bulk conductivity of the surrounding medium, W/(m K). Water value is the
# standard-table bulk conductivity near room temperature.
ENVIRONMENT_CONDUCTIVITY = {
    "air": 0.026,
    "water": 0.606,
}
