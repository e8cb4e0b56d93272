"""Two-class (cars/trucks) traffic flow simulation.

Cars use the whole road; trucks are confined to the slow lane and cannot
overtake, so cars keep creeping past a fully jammed truck queue.  The
package provides a coupled macroscopic model (two conservation laws solved
by a cell-transmission scheme) and a multi-scale model (macroscopic cars
coupled with follow-the-leader trucks), on single roads and on small
networks with merges and diverges, plus sensor-data calibration of the
fundamental diagrams.
"""

from .errors import (
    CflError,
    CollisionError,
    ConfigError,
    DomainError,
    ScenarioError,
    SchemeError,
    TwoflowError,
)
from .fd import ClassParams, FdConfig, Phase, TwoClassState
from .macro import BoundaryCondition, ClassBc, MacroStepReport, RoadGrid
from .micro import Fleet, LeaderProtocol, MicroConfig, Truck
from .multiscale import CouplingSchedule, MultiscaleState
from .network import Junction, Network
from .scenario import Scenario, parse_scenario, print_scenario
from .engine import RunResult, Simulation, run_scenario

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "CflError",
    "ClassBc",
    "ClassParams",
    "CollisionError",
    "ConfigError",
    "CouplingSchedule",
    "DomainError",
    "FdConfig",
    "Fleet",
    "Junction",
    "LeaderProtocol",
    "MacroStepReport",
    "MicroConfig",
    "MultiscaleState",
    "Network",
    "Phase",
    "RoadGrid",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "SchemeError",
    "Simulation",
    "Truck",
    "TwoClassState",
    "TwoflowError",
    "parse_scenario",
    "print_scenario",
    "run_scenario",
]
