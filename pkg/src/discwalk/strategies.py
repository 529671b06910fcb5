"""Player strategies: which coordinates move and which directions stay fixed.

A strategy exposes

* ``reset(b, monitors)`` once per run,
* ``select(alive, x, step) -> ConstraintSet``,
* ``witnesses(cs, ledger) -> bool matrix`` naming, for every monitored
  pair, the constraints whose sum should reproduce the monitored row on the
  protected elements,
* ``default_monitors()``.

Constraints carry integer labels. For the row-based strategies the label is
the row index, and the witness for a pair ``(j, S)`` is the row-``j``
constraint when its support lies inside ``S``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .engine import ConstraintSet, InstanceMatrix, MonitoredPair
from .errors import InvalidInput

STRATEGY_NAMES = ("beck-fiala", "komlos", "tusnady", "steinitz-linf", "steinitz-l2")


@dataclass
class SetSystemInstance:
    n: int
    sets: list
    t: int | None = None

    def __post_init__(self):
        self.sets = [np.unique(np.asarray(s, dtype=int)) for s in self.sets]
        for s in self.sets:
            if s.size and (s.min() < 0 or s.max() >= self.n):
                raise InvalidInput("set element out of range")
        if self.t is not None and self.n:
            load = self.degrees().max(initial=0)
            if load > self.t:
                raise InvalidInput(f"an element lies in {load} sets, more than t = {self.t}")

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for s in self.sets:
            deg[s] += 1
        return deg

    def matrix(self) -> InstanceMatrix:
        a = np.zeros((len(self.sets), self.n))
        for j, s in enumerate(self.sets):
            a[j, s] = 1.0
        return InstanceMatrix(a)


@dataclass
class VectorSequenceInstance:
    vectors: np.ndarray  # (n, d)
    norm: str = "linf"

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            raise InvalidInput("vectors must be an (n, d) array")
        self.vectors = v
        if self.norm not in ("linf", "l2"):
            raise InvalidInput(f"unknown norm regime {self.norm!r}")
        if self.norm == "linf":
            big = np.abs(v).max(initial=0.0)
        else:
            big = np.linalg.norm(v, axis=1).max(initial=0.0)
        if big > 1.0 + 1e-12:
            raise InvalidInput(f"a vector exceeds the {self.norm} unit bound ({big:.6f})")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def matrix(self) -> InstanceMatrix:
        return InstanceMatrix(self.vectors.T.copy())


class Strategy:
    name = "base"
    delta_cap = 0.25
    depends_only_on_alive = True

    def reset(self, b: InstanceMatrix, monitors) -> None:
        self.b = b

    def select(self, alive: np.ndarray, x: np.ndarray, step: int) -> ConstraintSet:
        raise NotImplementedError

    def witnesses(self, cs: ConstraintSet, ledger) -> np.ndarray:
        """Row-label witnesses filtered to constraints eligible for each subset."""
        H = ledger.rows[:, None] == cs.labels[None, :]
        if cs.ell:
            supp = (np.abs(cs.directions) > 0).astype(float)
            outside = (~ledger.masks[:, cs.active]).astype(float) @ supp.T > 0
            H &= ~outside
        return H

    def default_monitors(self) -> list:
        raise NotImplementedError


class RowThresholdStrategy(Strategy):
    """All alive coordinates move; rows with alive squared mass above a threshold are frozen."""

    def __init__(self, b: InstanceMatrix, threshold: float, name: str):
        self.b = b
        self.threshold = float(threshold)
        self.name = name
        self._sq = b.entries**2

    def select(self, alive, x, step):
        A = np.flatnonzero(alive)
        mass = self._sq[:, A].sum(axis=1)
        rows = np.flatnonzero(mass > self.threshold)
        return ConstraintSet(A, self.b.entries[np.ix_(rows, A)], self.delta_cap, rows)

    def default_monitors(self):
        return [MonitoredPair.of(j, np.flatnonzero(self.b.entries[j])) for j in range(self.b.m)]


def beck_fiala_strategy(sys: SetSystemInstance) -> RowThresholdStrategy:
    if sys.t is None:
        raise InvalidInput("the set system must declare its sparsity t")
    SetSystemInstance(sys.n, sys.sets, sys.t)
    return RowThresholdStrategy(sys.matrix(), 4 * sys.t, "beck-fiala")


def komlos_strategy(b: InstanceMatrix) -> RowThresholdStrategy:
    norms = np.linalg.norm(b.entries, axis=0)
    if norms.max() > 1.0 + 1e-12:
        raise InvalidInput(f"a column has 2-norm {norms.max():.6f} > 1")
    return RowThresholdStrategy(b, 4.0, "komlos")


class SteinitzStrategy(Strategy):
    """The first ``2d`` alive vectors move; all ``d`` coordinate sums stay fixed."""

    delta_cap = 0.5

    def __init__(self, seq: VectorSequenceInstance):
        self.seq = seq
        self.b = seq.matrix()
        self.name = f"steinitz-{seq.norm}"

    def select(self, alive, x, step):
        d = self.seq.d
        A = np.flatnonzero(alive)[: 2 * d]
        if len(A) < 2 * d:
            return ConstraintSet(A, np.zeros((0, len(A))), self.delta_cap, np.zeros(0, dtype=int))
        w = self.b.entries[:, A]
        rows = np.flatnonzero(np.abs(w).max(axis=1) > 0)
        return ConstraintSet(A, w[rows], self.delta_cap, rows)

    def default_monitors(self):
        return [MonitoredPair.of(j, range(k + 1)) for j in range(self.seq.d)
                for k in range(self.seq.n)]


def steinitz_strategy(seq: VectorSequenceInstance) -> SteinitzStrategy:
    return SteinitzStrategy(seq)


def canonical_box_count(n: int, d: int, block: int) -> int:
    """Number of canonical boxes on ``n`` points with smallest block ``block``."""

    def count(length: int, axis: int) -> int:
        total = 0
        size = block
        while size <= length:
            inner = 1 if axis == d - 1 else count(size, axis + 1)
            total += (length // size) * inner
            size *= 2
        return total

    return count(n, 0)


def auto_ell(n: int, d: int) -> int:
    """Smallest power-of-two block with at most ``n/8`` canonical boxes."""
    ell = 2
    while ell <= n and canonical_box_count(n, d, ell) > n / 8:
        ell *= 2
    return ell


@dataclass
class TusnadyEpoch:
    step: int
    alive: int
    ell: int
    boxes: int


class TusnadyStrategy(Strategy):
    """All alive points move; the canonical boxes of the alive set stay balanced.

    The box family is rebuilt on the alive points the first time their count
    drops to ``n / 2^k`` for a new ``k``.
    """

    def __init__(self, points: geometry.PointSet, ell="formula"):
        self.points = points
        self.ell = ell
        self.b = InstanceMatrix(np.ones((1, points.n)))
        self.name = "tusnady"

    def reset(self, b, monitors):
        super().reset(b, monitors)
        self.monitors = list(monitors or [])
        self.level = None
        self.tree = None
        self.epochs: list = []
        self._boxes = np.zeros((0, self.points.n), dtype=bool)
        self._parts = None

    def _ell_for(self, count: int) -> int:
        if self.ell in (None, "formula"):
            return geometry.formula_ell(count, self.points.d)
        if self.ell == "auto":
            return auto_ell(count, self.points.d)
        return int(self.ell)

    def select(self, alive, x, step):
        N = np.flatnonzero(alive)
        n = self.points.n
        k = int(math.floor(math.log2(n / len(N)) + 1e-12))
        if k != self.level:
            self.level = k
            ell = self._ell_for(len(N))
            self.tree = geometry.build_canonical_boxes(self.points, ell, members=N)
            self._boxes = self.tree.indicator_matrix()
            self._parts = None
            self.epochs.append(TusnadyEpoch(step, len(N), ell, len(self.tree.boxes)))
        w = self._boxes[:, N].astype(float)
        ids = np.flatnonzero(w.any(axis=1))
        return ConstraintSet(N, w[ids], self.delta_cap, ids)

    def _monitor_parts(self, ledger) -> np.ndarray:
        if self._parts is None:
            parts = np.zeros((len(ledger), len(self.tree.boxes)), dtype=bool)
            pts = self.points.points
            for m, pair in enumerate(ledger.pairs):
                if not pair.subset:
                    continue
                box = geometry.Box.bounding(pts[list(pair.subset)])
                dec = geometry.decompose_box(box, self.tree, self.points)
                parts[m, dec.parts] = True
            self._parts = parts
        return self._parts

    def witnesses(self, cs, ledger):
        return self._monitor_parts(ledger)[:, cs.labels]

    def max_ell(self) -> int:
        return max((e.ell for e in self.epochs), default=0)

    def default_monitors(self, count: int = 200, seed: int = 0):
        boxes = geometry.random_boxes(self.points, count, seed)
        return [MonitoredPair.of(0, db.members) for db in boxes]


def tusnady_strategy(points: geometry.PointSet, d: int | None = None, ell="formula") -> TusnadyStrategy:
    if d is not None and d != points.d:
        raise InvalidInput("dimension does not match the point set")
    return TusnadyStrategy(points, ell)
