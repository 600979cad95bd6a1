# src/state.py

from dataclasses import dataclass

from .field import QField


@dataclass
class SolverState:
    """
    Solution of the mild-solution solver at one instant.

    Attributes:
        t (float): Simulation time.
        q_hat (QField): Spectral field, divergence-free in its advecting components.
        step_index (int): Number of steps taken to reach t.
    """

    t: float
    q_hat: QField
    step_index: int = 0
