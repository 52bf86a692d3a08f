"""Per-node energy accounting and the Danger/Normal classification."""

from __future__ import annotations

from dataclasses import dataclass

DANGER = "danger"
NORMAL = "normal"

TX = "tx"
RX = "rx"
IDLE = "idle"


class DeadNodeError(RuntimeError):
    """Operation on a node whose battery is exhausted."""


@dataclass(frozen=True)
class RadioCostModel:
    """First-order radio costs: per reference-size packet for tx/rx, per second idle."""

    tx_cost_per_packet: float = 0.02
    rx_cost_per_packet: float = 0.01
    idle_cost_per_second: float = 0.001

    def __post_init__(self):
        if min(self.tx_cost_per_packet, self.rx_cost_per_packet, self.idle_cost_per_second) < 0:
            raise ValueError("radio costs must be non-negative")


@dataclass(slots=True)
class EnergyState:
    """Battery state of one node; residual only ever decreases (no recharging)."""

    initial: float
    residual: float
    danger_threshold: float

    def __post_init__(self):
        if self.initial <= 0:
            raise ValueError(f"initial energy must be positive, got {self.initial}")
        if not 0 <= self.residual <= self.initial:
            raise ValueError(f"residual {self.residual} outside [0, {self.initial}]")
        if self.danger_threshold <= 0:
            raise ValueError("danger threshold must be positive")

    @property
    def dead(self) -> bool:
        return self.residual <= 0.0

    @property
    def consumed(self) -> float:
        return self.initial - self.residual


def classify(state: EnergyState) -> str:
    """Danger iff residual is strictly below the threshold; at-threshold is Normal."""
    return DANGER if state.residual < state.danger_threshold else NORMAL


def debit(state: EnergyState, kind: str, amount: float, model: RadioCostModel) -> EnergyState:
    """Charge `amount` units of the given activity against the battery.

    `amount` is packets (in reference-size units) for tx/rx and seconds for
    idle. The residual floors at 0, at which point the node is dead. Mutates
    and returns `state`; a node owns its EnergyState exclusively.
    """
    if state.dead:
        raise DeadNodeError("cannot debit a dead node")
    if amount < 0:
        raise ValueError(f"amount must be non-negative, got {amount}")
    if kind == TX:
        cost = amount * model.tx_cost_per_packet
    elif kind == RX:
        cost = amount * model.rx_cost_per_packet
    elif kind == IDLE:
        cost = amount * model.idle_cost_per_second
    else:
        raise ValueError(f"unknown debit kind {kind!r}")
    state.residual = max(0.0, state.residual - cost)
    return state


def network_energy_consumed(states) -> float:
    """Total energy spent across the network: sum of (initial - residual)."""
    return sum(s.initial - s.residual for s in states)
