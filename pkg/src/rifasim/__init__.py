"""Deterministic discrete-event MANET simulator with pheromone-guided,
energy-aware multipath routing and preemptive link-failure prediction."""

__version__ = "0.1.0"
