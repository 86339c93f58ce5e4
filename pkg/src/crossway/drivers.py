"""Driver types, ordered by how badly they disregard the right of way."""

from __future__ import annotations

from enum import Enum


class DriverKind(Enum):
    """Behaviour class of a vehicle, fixed for a whole run.

    Angelic drivers follow the precedence rules and keep their beliefs in
    step with both rule changes and observed behaviour; intermediate ones
    start out assuming they have priority but concede when observations
    demand it; demonic ones assume priority and never reconsider;
    irrational ones ignore the game entirely and accelerate at random.
    """

    ANGELIC = "angelic"
    INTERMEDIATE = "intermediate"
    DEMONIC = "demonic"
    IRRATIONAL = "irrational"

    @property
    def rational(self) -> bool:
        return self is not DriverKind.IRRATIONAL
