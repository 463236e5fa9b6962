"""Closed-loop simulation: configuration, integration, diagnostics and output."""
from .config import SimConfig, ValidationError, from_dict, load_config
from .engine import (
    ClosedLoop,
    ObserverLog,
    SimulationBlowUp,
    TrajectoryLog,
    closed_loop_derivative,
    rk4_step,
    run,
    run_observer,
    simulate_stilde,
)
from .scenarios import van_der_pol_config, truth_initialized
