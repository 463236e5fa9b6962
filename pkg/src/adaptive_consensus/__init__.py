"""Adaptive leader-following consensus for nonlinear multi-agent systems on
switching directed networks: observers, controllers, and a simulator."""

__version__ = "0.1.0"
