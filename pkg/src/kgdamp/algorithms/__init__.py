from .data.run_params import (  # noqa
    DichotomyRunParams,
    GroundStateRunParams,
    SimulationRunParams,
)
from .ground_state import DichotomyProbe, GroundStateShooter  # noqa
from .simulation import Simulation  # noqa
from .base import BaseAlgorithm  # noqa
