"""Simulation and programming toolchain for field-programmable photonic meshes.

Modules:

* ``gates``: 2x2 unitary algebra and Euler-angle synthesis.
* ``tbu``: the tunable basic unit (programmable Mach-Zehnder coupler).
* ``mesh``: square/triangular/hexagonal meshes, programs, JSON documents.
* ``netsolve``: frequency-domain S-parameter solver.
* ``router``: place-and-route between external ports.
* ``presets``: ring filter, Vernier pair, 2x4 hybrid, transceiver demo.
* ``control``: drivers, monitors, crosstalk and closed-loop optimization.
* ``cli``: the ``fppga`` command.
"""

from .errors import (
    FPPGAError,
    MeshError,
    MultiRouteError,
    NoPathError,
    NonFiniteCostError,
    NotUnitaryError,
    PresetError,
    RouteConflictError,
    SchemaVersionError,
    SingularSystemError,
)
from .mesh import Mesh, Program, deserialize, generate, serialize
from .netsolve import FrequencyGrid, SParams, WaveguideParams, solve, sweep
from .tbu import BAR, CROSS, OFF, TBUMode, TBUSettings

__version__ = "0.1.0"

__all__ = [
    "FPPGAError", "MeshError", "MultiRouteError", "NoPathError", "NonFiniteCostError",
    "NotUnitaryError", "PresetError", "RouteConflictError", "SchemaVersionError",
    "SingularSystemError", "Mesh", "Program", "deserialize", "generate", "serialize",
    "FrequencyGrid", "SParams", "WaveguideParams", "solve", "sweep",
    "BAR", "CROSS", "OFF", "TBUMode", "TBUSettings",
]
