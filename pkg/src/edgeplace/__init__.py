"""Edge-server deployment under uncertain workloads and capacities."""

__version__ = "0.1.0"

from .instance import (  # noqa: E402
    Candidate,
    Cell,
    CostMatrix,
    GenConfig,
    Instance,
    InstanceError,
    compute_costs,
    generate_synthetic,
    load_instance,
    save_instance,
)
from .objective import Deployment, Weights, load_deployment, omega_hat, save_deployment  # noqa: E402
from .solver import SolveResult, solve  # noqa: E402

__all__ = [
    "Candidate", "Cell", "CostMatrix", "Deployment", "GenConfig", "Instance", "InstanceError",
    "SolveResult", "Weights", "compute_costs", "generate_synthetic", "load_deployment",
    "load_instance", "omega_hat", "save_deployment", "save_instance", "solve",
]
