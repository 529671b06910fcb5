"""Small strategies and instances shared by the test modules."""

import numpy as np

from discwalk.engine import ConstraintSet, InstanceMatrix
from discwalk.strategies import SetSystemInstance, Strategy


class FreeStrategy(Strategy):
    """Every alive coordinate moves, nothing is constrained."""

    name = "free"

    def select(self, alive, x, step):
        A = np.flatnonzero(alive)
        return ConstraintSet(A, np.zeros((0, len(A))), self.delta_cap)

    def default_monitors(self):
        return []


class ZeroSumStrategy(Strategy):
    """Keeps the sum over the active coordinates fixed while at least two are alive."""

    name = "zero-sum"
    delta_cap = 0.5

    def select(self, alive, x, step):
        A = np.flatnonzero(alive)
        if len(A) < 2:
            return ConstraintSet(A, np.zeros((0, len(A))), self.delta_cap, np.zeros(0, dtype=int))
        return ConstraintSet(A, np.ones((1, len(A))), self.delta_cap, np.zeros(1, dtype=int))

    def default_monitors(self):
        return []


class GreedyStrategy(Strategy):
    """Constrains more directions than allowed, to trigger the cap check."""

    name = "greedy"

    def select(self, alive, x, step):
        A = np.flatnonzero(alive)
        return ConstraintSet(A, np.eye(len(A))[: len(A) // 2 + 1], self.delta_cap)


def random_set_system(n, m, t, seed):
    rng = np.random.default_rng(seed)
    sets = [[] for _ in range(m)]
    for i in range(n):
        for j in rng.choice(m, t, replace=False):
            sets[j].append(i)
    return SetSystemInstance(n, sets, t)


def ones_row(n):
    return InstanceMatrix(np.ones((1, n)))
