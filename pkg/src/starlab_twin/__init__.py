"""Mission-operations digital twin of the 6GStarLab 6U CubeSat."""

from .scenario import Scenario, default_scenario, dump_scenario, load_scenario, validate_scenario

__all__ = ["Scenario", "default_scenario", "dump_scenario", "load_scenario", "validate_scenario"]
__version__ = "0.1.0"
