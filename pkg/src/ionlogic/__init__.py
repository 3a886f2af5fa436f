"""Normal modes, Lamb-Dicke couplings and Molmer-Sorensen gates in mixed-species ion chains."""
from .coupling import CouplingTable, LaserField, lamb_dicke, parallel_lasers
from .crystal import CrystalConfig, ModeTable, closed_form_modes, normal_modes
from .species import IonSpecies, lookup

__all__ = [
    "CouplingTable", "CrystalConfig", "IonSpecies", "LaserField", "ModeTable",
    "closed_form_modes", "lamb_dicke", "lookup", "normal_modes", "parallel_lasers",
]
