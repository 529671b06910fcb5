"""Ground-truth evaluators and Monte-Carlo tail checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .engine import InstanceMatrix, MonitoredPair, WalkParams, run_trials
from .errors import InvalidInput, RefuseTooLarge

BRUTE_FORCE_MAX_N = 22


def pair_rows(b: InstanceMatrix, pairs=None) -> np.ndarray:
    """Rows ``a_j`` restricted to ``S`` for each pair, or all rows of ``b``."""
    if pairs is None:
        return b.entries
    out = np.zeros((len(pairs), b.n))
    for k, p in enumerate(pairs):
        idx = list(p.subset)
        out[k, idx] = b.entries[p.row, idx]
    return out


def discrepancy(b: InstanceMatrix, chi, pairs=None) -> float:
    rows = pair_rows(b, pairs)
    return float(np.abs(rows @ np.asarray(chi, dtype=float)).max(initial=0.0))


def brute_force_discrepancy(b: InstanceMatrix, row_subset_pairs=None,
                            max_n: int = BRUTE_FORCE_MAX_N, chunk: int = 1 << 15):
    """Exact ``min_x max_rows |row . x|`` over all colorings.

    The first coordinate is fixed to ``+1``; negating a coloring does not
    change the objective.
    """
    n = b.n
    if n > max_n:
        raise RefuseTooLarge(f"brute force limited to n <= {max_n}, got {n}")
    rows = pair_rows(b, row_subset_pairs)
    total = 1 << (n - 1)
    shifts = np.arange(n - 1, dtype=np.int64)
    best, best_code = math.inf, 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        bits = (codes[:, None] >> shifts[None, :]) & 1
        x = np.ones((len(codes), n))
        x[:, 1:] = 1.0 - 2.0 * bits
        vals = np.abs(x @ rows.T).max(axis=1, initial=0.0)
        k = int(np.argmin(vals))
        if vals[k] < best - 1e-12:
            best, best_code = float(vals[k]), int(codes[k])
    x = np.ones(n, dtype=int)
    x[1:] = 1 - 2 * ((best_code >> np.arange(n - 1)) & 1)
    return best, x


def prefix_disc(vectors, chi) -> tuple[float, float]:
    """Largest sup-norm and 2-norm over all signed prefix sums."""
    v = np.asarray(getattr(vectors, "vectors", vectors), dtype=float)
    chi = np.asarray(chi, dtype=float)
    if len(chi) != v.shape[0]:
        raise InvalidInput("coloring length does not match the sequence")
    sums = np.cumsum(chi[:, None] * v, axis=0)
    return float(np.abs(sums).max(initial=0.0)), float(np.linalg.norm(sums, axis=1).max(initial=0.0))


def l2_subset_disc(b: InstanceMatrix, subset, chi) -> float:
    idx = np.asarray(list(subset), dtype=int)
    chi = np.asarray(chi, dtype=float)
    return float(np.linalg.norm(b.entries[:, idx] @ chi[idx]))


def _max_abs_subarray(values: np.ndarray) -> np.ndarray:
    """Row-wise largest ``|sum|`` over contiguous ranges (empty range allowed)."""
    pref = np.concatenate([np.zeros((values.shape[0], 1)), np.cumsum(values, axis=1)], axis=1)
    return pref.max(axis=1) - pref.min(axis=1)


def max_box_discrepancy(points, chi) -> float:
    """Largest ``|sum of chi|`` over axis-parallel boxes, for d <= 2.

    Coordinates are grouped by value so tied points are never split. For
    ``d = 2`` every slab of x-values is scanned with a prefix-sum range
    search over y-values, ``O(n^3)``.
    """
    p = points if isinstance(points, geometry.PointSet) else geometry.PointSet(points)
    chi = np.asarray(chi, dtype=float)
    if p.d == 1:
        xs, inv = np.unique(p.points[:, 0], return_inverse=True)
        col = np.zeros(len(xs))
        np.add.at(col, inv, chi)
        return float(_max_abs_subarray(col[None, :])[0])
    if p.d != 2:
        return max(float(abs(chi[db.members].sum())) for db in geometry.enumerate_distinct_boxes(p))
    xs, xi = np.unique(p.points[:, 0], return_inverse=True)
    ys, yi = np.unique(p.points[:, 1], return_inverse=True)
    grid = np.zeros((len(xs), len(ys)))
    np.add.at(grid, (xi, yi), chi)
    best = 0.0
    for a in range(len(xs)):
        slabs = np.cumsum(grid[a:], axis=0)
        best = max(best, float(_max_abs_subarray(slabs).max()))
    return best


@dataclass
class TailCheckConfig:
    monitor: MonitoredPair
    trials: int = 2000
    lambdas: list = field(default_factory=lambda: [1.0, 2.0])
    anchor_lambda: float = 1.0
    seed: int = 0
    grid_step: float = 0.01
    c_hat: float | None = None

    def __post_init__(self):
        if self.trials < 100:
            raise InvalidInput("tail validation needs at least 100 trials")
        if any(lam < 0 for lam in self.lambdas) or self.anchor_lambda < 0:
            raise InvalidInput("lambda values must be nonnegative")
        if not self.grid_step > 0:
            raise InvalidInput("grid_step must be positive")


def tail_bound(lam: float) -> float:
    return 2.0 * math.exp(-lam * lam / 2.0)


def exceedance(disc: np.ndarray, mass: np.ndarray, c: float, lam: float) -> float:
    thr = c * lam * (np.sqrt(mass) + lam)
    return float(np.mean(np.abs(disc) >= thr))


def fit_constant(disc: np.ndarray, mass: np.ndarray, lam: float, step: float,
                 target: float | None = None) -> float:
    """Smallest grid value ``c = step, 2 step, ...`` with exceedance at ``lam`` within target."""
    target = tail_bound(lam) if target is None else target
    if lam == 0:
        return step
    ratios = np.abs(disc) / (lam * (np.sqrt(mass) + lam))
    top = float(ratios.max(initial=0.0))
    grid = step * np.arange(1, int(math.ceil(top / step)) + 2)
    for c in grid:
        if np.mean(ratios >= c) <= target:
            return float(c)
    return float(grid[-1])


@dataclass
class TailReport:
    c_hat: float
    c_uniform: float
    anchor_lambda: float
    rows: list
    runs: int
    non_terminated: int
    mean_corrupted: float
    max_corrupted: int
    disc: np.ndarray
    mass: np.ndarray

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.rows)

    def as_dict(self) -> dict:
        return {
            "c_hat": self.c_hat,
            "c_uniform": self.c_uniform,
            "anchor_lambda": self.anchor_lambda,
            "rows": self.rows,
            "runs": self.runs,
            "non_terminated": self.non_terminated,
            "mean_corrupted": self.mean_corrupted,
            "max_corrupted": self.max_corrupted,
            "passed": self.passed,
        }


def tail_report(disc, mass, lambdas, anchor_lambda: float = 1.0, step: float = 0.01,
                non_terminated: int = 0, sizes=None) -> TailReport:
    disc = np.asarray(disc, dtype=float)
    mass = np.asarray(mass, dtype=float)
    n = len(disc)
    c_hat = fit_constant(disc, mass, anchor_lambda, step)
    c_uni = max([fit_constant(disc, mass, lam, step) for lam in lambdas if lam > 0] or [step])
    rows = []
    for lam in lambdas:
        bound = tail_bound(lam)
        p = min(bound, 1.0)
        slack = 3.0 * math.sqrt(p * (1.0 - p) / max(n, 1))
        exc = exceedance(disc, mass, c_hat, lam)
        rows.append({"lambda": float(lam), "exceedance": exc, "bound": bound, "slack": slack,
                     "passed": bool(exc <= bound + slack)})
    sizes = np.asarray(sizes if sizes is not None else np.zeros(1))
    return TailReport(c_hat, c_uni, anchor_lambda, rows, n, non_terminated,
                      float(sizes.mean()) if sizes.size else 0.0,
                      int(sizes.max(initial=0)), disc, mass)


def tail_validate(b: InstanceMatrix, strategy, params: WalkParams, cfg: TailCheckConfig,
                  workers: int | None = None) -> TailReport:
    """Run seeded trials and compare the monitored pair's tail with ``2 exp(-lam^2/2)``.

    ``c_hat`` is fitted at ``cfg.anchor_lambda``; each run's own corrupted
    set supplies the mass term. Non-terminated runs are excluded and counted.
    """
    results = run_trials(b, strategy, params, [cfg.monitor], cfg.trials, seed=cfg.seed,
                         workers=workers)
    chi = np.array([r.coloring for r in results if r.terminated], dtype=float)
    skipped = sum(1 for r in results if not r.terminated)
    row = pair_rows(b, [cfg.monitor])[0]
    disc = chi @ row if len(chi) else np.zeros(0)
    mass = np.array([r.ledger.masses()[0] for r in results if r.terminated])
    sizes = np.array([r.ledger.sizes()[0] for r in results if r.terminated])
    rep = tail_report(disc, mass, cfg.lambdas, cfg.anchor_lambda, cfg.grid_step, skipped, sizes)
    cfg.c_hat = rep.c_hat
    return rep
