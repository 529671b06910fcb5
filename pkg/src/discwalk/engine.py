"""Random-walk full coloring driven by a player strategy.

The walk starts at ``x = 0``. At each step the strategy picks active
coordinates ``A`` among the alive ones together with directions ``Z`` whose
discrepancy must not move. A universal vector coloring ``u_i`` is solved for
``A`` and every active coordinate moves by ``gamma <r, u_i>`` for a uniform
random sign vector ``r``. A coordinate freezes once ``|x_i| >= 1 - 1/n``
(``1/2`` when ``n = 1``).

Shipped strategies depend only on the alive set, so ``(A, Z)`` and the
vector coloring stay fixed between freezing events. The engine exploits
this by simulating such an epoch in vectorized blocks of steps; strategies
that need fresh decisions every step are driven one step at a time.

A step that would push a coordinate past ``+-1`` is shortened so the first
offending coordinate lands exactly on the boundary. Scaling the whole step
keeps every constrained direction at zero discrepancy.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import uvc
from .errors import InvalidInput, StrategyViolation, WitnessRejected


def make_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Per-trial stream: Philox keyed by ``SeedSequence(seed, spawn_key=(trial,))``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class InstanceMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or min(a.shape) < 1:
            raise InvalidInput("instance matrix must be a nonempty 2-d array")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("instance entries must be finite")
        if np.abs(a).max() > 1.0 + 1e-12:
            raise InvalidInput("instance entries must satisfy |a_ji| <= 1")
        self.entries = a

    @classmethod
    def from_triplets(cls, m: int, n: int, triplets) -> "InstanceMatrix":
        a = np.zeros((m, n))
        for j, i, v in triplets:
            a[int(j), int(i)] = float(v)
        return cls(a)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class MonitoredPair:
    row: int
    subset: tuple

    @classmethod
    def of(cls, row: int, subset) -> "MonitoredPair":
        return cls(int(row), tuple(sorted(int(i) for i in set(subset))))


@dataclass
class ConstraintSet:
    active: np.ndarray
    directions: np.ndarray  # (l, |A|)
    delta_cap: float
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.active = np.asarray(self.active, dtype=int)
        a = len(self.active)
        d = np.asarray(self.directions, dtype=float)
        self.directions = d.reshape(-1, a) if a else d.reshape(0, 0)
        if self.labels is None:
            self.labels = np.arange(self.directions.shape[0])
        self.labels = np.asarray(self.labels)

    @property
    def ell(self) -> int:
        return self.directions.shape[0]


@dataclass
class WalkParams:
    gamma: float | None = None  # None: adaptive, see ``step_size``
    step_cap: float = 0.05
    max_steps: int | None = None
    epsilon: float = 0.5
    seed: int = 0
    trial: int = 0
    tol: float = 1e-9
    uvc_method: str = "auto"
    sample_every: int = 50
    block: int = 256
    relax_factor: float = 1.0
    record_history: bool = False

    def __post_init__(self):
        if self.gamma is not None and not self.gamma > 0:
            raise InvalidInput("gamma must be positive")
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidInput("epsilon must lie in (0, 1)")
        if not self.step_cap > 0:
            raise InvalidInput("step_cap must be positive")


def default_max_steps(n: int) -> int:
    return int(math.ceil(200 * n * max(math.log(n), 1.0)))


@dataclass
class FractionalState:
    x: np.ndarray
    step: int = 0
    draws: int = 0

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def threshold(self) -> float:
        # a single coordinate would be frozen at 0 under 1 - 1/n
        return 1.0 - 1.0 / max(self.n, 2)

    @property
    def alive(self) -> np.ndarray:
        return np.abs(self.x) < self.threshold

    @property
    def energy(self) -> float:
        return float(np.sum(1.0 - self.x**2))

    def copy(self) -> "FractionalState":
        return FractionalState(self.x.copy(), self.step, self.draws)


def finalize(state: FractionalState) -> np.ndarray:
    """Round to a full coloring; alive coordinates take their sign, ties go to +1."""
    return np.where(state.x >= 0.0, 1, -1).astype(int)


class CorruptionLedger:
    """Corrupted sets ``C_{j,S}`` for the monitored row/subset pairs."""

    def __init__(self, b: InstanceMatrix, monitors, relax_factor: float = 1.0,
                 record_history: bool = False):
        self.b = b
        self.pairs = list(monitors or [])
        n = b.n
        self.rows = np.array([p.row for p in self.pairs], dtype=int)
        self.masks = np.zeros((len(self.pairs), n), dtype=bool)
        for k, p in enumerate(self.pairs):
            if not 0 <= p.row < b.m:
                raise InvalidInput(f"monitor row {p.row} out of range")
            idx = np.asarray(p.subset, dtype=int)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise InvalidInput("monitor subset out of range")
            self.masks[k, idx] = True
        self.row_values = b.entries[self.rows] if len(self.pairs) else np.zeros((0, n))
        self.corrupted = np.zeros_like(self.masks)
        self.slack_used = np.zeros(len(self.pairs), dtype=bool)
        self.relax_factor = relax_factor
        self.rejections: list = []
        self.record_history = record_history
        self.history: list = []

    def __len__(self) -> int:
        return len(self.pairs)

    def corrupted_set(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.corrupted[k])

    def sizes(self) -> np.ndarray:
        return self.corrupted.sum(axis=1)

    def masses(self) -> np.ndarray:
        return np.sum(np.where(self.corrupted, self.row_values**2, 0.0), axis=1)


def update_ledger(ledger: CorruptionLedger, cs: ConstraintSet, claims: np.ndarray | None,
                  tol: float = 1e-9, step: int = 0, strict: bool = False) -> CorruptionLedger:
    """Verify protection witnesses and grow the corrupted sets.

    ``claims[m, k]`` says constraint ``k`` belongs to the witness of monitor
    ``m``. An element of ``S`` that is active is protected when the witness
    sum equals the monitored row on it; witness mass elsewhere in ``S`` is
    tolerated only on already-corrupted coordinates and up to
    ``relax_factor * |a_ji|``. Invalid witnesses mark every active element
    of ``S`` corrupted, or raise ``WitnessRejected`` when ``strict``.
    """
    M = len(ledger)
    if M == 0:
        return ledger
    A = cs.active
    S_A = ledger.masks[:, A]
    if not S_A.any():
        return ledger
    a_A = ledger.row_values[:, A]
    ell = cs.ell
    if claims is None or ell == 0:
        H = np.zeros((M, ell), dtype=bool)
    else:
        H = np.asarray(claims, dtype=bool)
        if H.shape != (M, ell):
            raise InvalidInput(f"witness matrix has shape {H.shape}, expected {(M, ell)}")
    w = cs.directions
    prev = ledger.corrupted[:, A]
    if ell:
        supp = np.abs(w) > 0
        outside = (~S_A).astype(float) @ supp.T.astype(float) > 0
        ineligible = np.any(H & outside, axis=1)
        sums = H.astype(float) @ w
    else:
        ineligible = np.zeros(M, dtype=bool)
        sums = np.zeros_like(a_A)
    scale = tol * np.maximum(1.0, np.sqrt(np.sum(np.where(S_A, a_A**2, 0.0), axis=1)))
    match = S_A & (np.abs(sums - a_A) <= scale[:, None])
    stray = S_A & ~match & (np.abs(sums) > scale[:, None])
    slack_ok = prev & (np.abs(sums) <= ledger.relax_factor * np.abs(a_A) + scale[:, None])
    bad = np.any(stray & ~slack_ok, axis=1) | ineligible
    ledger.slack_used |= np.any(stray & slack_ok, axis=1) & ~bad
    if np.any(bad):
        if strict:
            raise WitnessRejected(f"{int(bad.sum())} witness(es) rejected at step {step}")
        for m in np.flatnonzero(bad):
            ledger.rejections.append((step, int(m)))
    protected = match & ~bad[:, None]
    newly = S_A & ~protected
    ledger.corrupted[:, A] |= newly
    if ledger.record_history:
        ledger.history.append({"step": step, "active": A.copy(), "witness": H.copy(),
                               "protected": protected.copy()})
    return ledger


@dataclass
class EpochRecord:
    start: int
    steps: int
    active: int
    constraints: int
    beta: float
    gamma: float
    uvc_trace: float
    uvc_method: str
    max_residual: float
    residual_bound: float


@dataclass
class RunTrace:
    steps: int = 0
    terminated: bool = False
    gamma0: float = 0.0
    epochs: list = field(default_factory=list)
    g_steps: list = field(default_factory=list)
    g_values: list = field(default_factory=list)
    max_residual: float = 0.0
    truncated_steps: int = 0
    wall_time: float = 0.0

    def residual_ok(self) -> bool:
        return all(e.max_residual <= e.residual_bound for e in self.epochs)


@dataclass
class RunResult:
    coloring: np.ndarray
    trace: RunTrace
    ledger: CorruptionLedger
    state: FractionalState

    def __iter__(self):
        return iter((self.coloring, self.trace, self.ledger))

    @property
    def terminated(self) -> bool:
        return self.trace.terminated


def _check_constraints(cs: ConstraintSet, alive: np.ndarray, params: WalkParams):
    if len(cs.active) == 0:
        raise StrategyViolation("strategy returned an empty active set")
    if not np.all(alive[cs.active]):
        raise StrategyViolation("active set contains frozen coordinates")
    if len(np.unique(cs.active)) != len(cs.active):
        raise StrategyViolation("active set has repeated coordinates")
    cap = min(cs.delta_cap, 1.0 - params.epsilon) if cs.delta_cap < 1.0 else 1.0 - params.epsilon
    if cs.ell > cap * len(cs.active) + 1e-12:
        raise StrategyViolation(
            f"{cs.ell} constraints on {len(cs.active)} active coordinates exceed cap {cap:.3f}")
    if cs.ell and np.any(np.abs(cs.directions).max(axis=1) == 0):
        raise StrategyViolation("zero constraint vector emitted")


def solve_for(cs: ConstraintSet, params: WalkParams) -> uvc.VectorColoring:
    a = len(cs.active)
    delta = cs.ell / a
    p = uvc.UvcProblem(a, cs.directions, (1.0 - delta) / 2.0)
    return uvc.solve_uvc(p, tol=params.tol, method=params.uvc_method)


def step_size(vc: uvc.VectorColoring, active: int, params: WalkParams) -> float:
    """Fixed ``gamma`` if given, else ``step_cap / (max |u_i| sqrt(|A|))``.

    The adaptive value bounds every per-coordinate move by ``step_cap`` and
    equals ``step_cap / sqrt(n)`` while all coordinates are active.
    """
    if params.gamma is not None:
        return float(params.gamma)
    umax = float(np.sqrt(np.max(np.sum(vc.vectors**2, axis=0))))
    if umax <= 0.0:
        umax = 1.0
    return params.step_cap / (umax * math.sqrt(active))


def residual_bound(cs: ConstraintSet, vc: uvc.VectorColoring, gamma: float) -> float:
    """Per-step bound on ``|sum_i w(i) dx(i)|``: ``gamma sqrt(|A|) max |U w|`` plus rounding."""
    if not cs.ell:
        return 0.0
    uw = np.linalg.norm(vc.vectors @ cs.directions.T, axis=0).max()
    l1 = np.abs(cs.directions).sum(axis=1).max()
    return gamma * math.sqrt(len(cs.active)) * float(uw) + 1e-14 * float(l1)


def _signs(rng: np.random.Generator, rows: int, k: int) -> np.ndarray:
    return np.where(rng.random((rows, k)) < 0.5, -1.0, 1.0)


def _advance(state: FractionalState, cs: ConstraintSet, vc: uvc.VectorColoring, gamma: float,
             rng: np.random.Generator, limit: int, params: WalkParams, trace: RunTrace,
             single: bool) -> tuple[int, float]:
    """Walk with fixed ``(A, Z)`` until a coordinate freezes or ``limit`` steps pass."""
    A = cs.active
    U = vc.vectors
    k = U.shape[0]
    thr = state.threshold
    wt = cs.directions.T
    outside = np.ones(state.n, dtype=bool)
    outside[A] = False
    g_rest = float(np.sum(1.0 - state.x[outside] ** 2))
    taken = 0
    worst = 0.0
    every = max(1, params.sample_every)
    while taken < limit:
        K = 1 if single else min(params.block, limit - taken)
        R = _signs(rng, K, k)
        state.draws += K * k
        D = gamma * (R @ U)
        P = state.x[A] + np.cumsum(D, axis=0)
        resid = np.abs(D @ wt).max(axis=1) if cs.ell else np.zeros(K)
        hit = np.any(np.abs(P) >= thr, axis=1)
        if hit.any():
            t = int(np.argmax(hit))
            prev = P[t - 1] if t > 0 else state.x[A]
            delta = D[t]
            new = prev + delta
            over = np.abs(new) > 1.0
            if over.any():
                idx = np.flatnonzero(over)
                frac = (np.sign(delta[idx]) - prev[idx]) / delta[idx]
                j = int(np.argmin(frac))
                s = float(frac[j])
                new = prev + s * delta
                new[idx[j]] = np.sign(delta[idx[j]])
                new = np.clip(new, -1.0, 1.0)
                resid[t] *= s
                trace.truncated_steps += 1
            P = P[: t + 1].copy()
            P[t] = new
            resid = resid[: t + 1]
            K = t + 1
        first = state.step + 1
        rows = np.arange(K)
        sample = rows[(first + rows) % every == 0]
        if sample.size:
            trace.g_steps.extend((first + sample).tolist())
            trace.g_values.extend((g_rest + np.sum(1.0 - P[sample] ** 2, axis=1)).tolist())
        state.x[A] = P[-1]
        state.step += K
        taken += K
        if resid.size:
            worst = max(worst, float(resid.max()))
        if hit.any() or single:
            break
    return taken, worst


def step(state: FractionalState, cs: ConstraintSet, params: WalkParams,
         rng: np.random.Generator, vc: uvc.VectorColoring | None = None) -> FractionalState:
    """One walk step on a copy of ``state``."""
    _check_constraints(cs, state.alive, params)
    vc = vc if vc is not None else solve_for(cs, params)
    gamma = step_size(vc, len(cs.active), params)
    new = state.copy()
    _advance(new, cs, vc, gamma, rng, 1, params, RunTrace(), single=True)
    return new


def run(b: InstanceMatrix, strategy, params: WalkParams | None = None,
        monitors=None) -> RunResult:
    params = params or WalkParams()
    t0 = time.perf_counter()
    n = b.n
    state = FractionalState(np.zeros(n))
    rng = make_rng(params.seed, params.trial)
    max_steps = params.max_steps if params.max_steps is not None else default_max_steps(n)
    strategy.reset(b, monitors)
    ledger = CorruptionLedger(b, monitors, params.relax_factor, params.record_history)
    trace = RunTrace()
    single = not getattr(strategy, "depends_only_on_alive", True)
    cache_key = None
    vc = None
    while state.step < max_steps:
        alive = state.alive
        if not alive.any():
            break
        cs = strategy.select(alive, state.x, state.step)
        _check_constraints(cs, alive, params)
        key = (cs.active.tobytes(), cs.directions.tobytes())
        if key != cache_key:
            vc = solve_for(cs, params)
            cache_key = key
        gamma = step_size(vc, len(cs.active), params)
        if not trace.epochs:
            trace.gamma0 = gamma
        claims = strategy.witnesses(cs, ledger) if len(ledger) else None
        update_ledger(ledger, cs, claims, params.tol, state.step)
        start = state.step
        taken, worst = _advance(state, cs, vc, gamma, rng, max_steps - state.step, params,
                                trace, single)
        bound = residual_bound(cs, vc, gamma)
        trace.max_residual = max(trace.max_residual, worst)
        trace.epochs.append(EpochRecord(start, taken, len(cs.active), cs.ell, vc.beta, gamma,
                                        vc.trace_value, vc.method, worst, bound))
    trace.steps = state.step
    trace.terminated = not state.alive.any()
    trace.g_steps.append(state.step)
    trace.g_values.append(state.energy)
    trace.wall_time = time.perf_counter() - t0
    return RunResult(finalize(state), trace, ledger, state)


def trial_workers(requested: int | None = None) -> int:
    """Worker count: ``requested`` or ``DISCWALK_THREADS`` capped by the CPU count."""
    import os

    if requested is None:
        env = os.environ.get("DISCWALK_THREADS", "1")
        try:
            requested = int(env)
        except ValueError as exc:
            raise InvalidInput(f"DISCWALK_THREADS must be an integer, got {env!r}") from exc
    return max(1, min(int(requested), os.cpu_count() or 1))


def _trial(args):
    b, strategy, params, monitors = args
    return run(b, strategy, params, monitors)


def run_trials(b: InstanceMatrix, strategy, params: WalkParams, monitors, trials: int,
               seed: int | None = None, workers: int | None = None) -> list:
    """Independent runs on streams ``(seed, 0..trials-1)``, returned in trial order."""
    from dataclasses import replace

    seed = params.seed if seed is None else seed
    jobs = [(b, strategy, replace(params, seed=seed, trial=t), monitors) for t in range(trials)]
    workers = trial_workers(workers)
    if workers == 1:
        return [_trial(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_trial, jobs, chunksize=max(1, trials // (4 * workers))))
