"""Step sizes for projected online gradient descent."""

import math
from dataclasses import dataclass

__all__ = ["ogd_step_size", "DoublingSchedule", "ogd_regret_bound"]


def ogd_step_size(diameter, grad_bound, horizon):
    """eta = D / (G sqrt(T)); with it the regret is at most D G sqrt(T)."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    return diameter / (grad_bound * math.sqrt(horizon))


def ogd_regret_bound(diameter, grad_bound, horizon):
    return diameter * grad_bound * math.sqrt(horizon)


@dataclass(frozen=True)
class DoublingSchedule:
    """Doubling trick for an unknown horizon.

    Rounds ``2^k .. 2^{k+1}-1`` (1-based) use the fixed-horizon step size for
    ``T = 2^k``.
    """

    diameter: float
    grad_bound: float

    def __call__(self, t):
        k = max(int(t), 1).bit_length() - 1
        return ogd_step_size(self.diameter, self.grad_bound, 2 ** k)
