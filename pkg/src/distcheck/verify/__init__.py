"""Independent oracles: bounded-model search and alternating machines."""

from ._kernels import backend
from .atm import Atm, gen_atm_instance, parse_atm, render_atm, simulate_atm
from .oracle import (brute_force_refute, certain_oracle, fact_universe, models_of, pack_constraints,
                     satisfies_all)

__all__ = [
    "Atm", "backend", "brute_force_refute", "certain_oracle", "fact_universe", "gen_atm_instance",
    "models_of", "pack_constraints", "parse_atm", "render_atm", "satisfies_all", "simulate_atm",
]
