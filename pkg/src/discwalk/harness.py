"""Instance generators, file formats, run reports and scaling sweeps.

Instances are JSON objects with a ``kind`` of ``set-system``, ``matrix``,
``points`` or ``vectors``. Floats are written with ``repr`` precision, so a
round trip through a file is bit-exact.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry, oracles, strategies
from .engine import InstanceMatrix, MonitoredPair, WalkParams, run, run_trials
from .errors import InvalidInput

FAMILIES = ("beck-fiala", "komlos", "points-uniform", "points-grid", "vectors-linf",
            "vectors-l2-zero-sum")
CSV_COLUMNS = ("n", "trial", "seed", "disc", "corrupted", "steps", "terminated")


@dataclass
class GeneratorSpec:
    family: str
    n: int
    m: int | None = None
    t: int = 3
    d: int = 2
    seed: int = 0
    skew: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInput(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.n < 1:
            raise InvalidInput("n must be positive")
        if self.d < 1:
            raise InvalidInput("d must be positive")
        if self.family == "beck-fiala":
            m = self.m if self.m is not None else self.n
            if not 1 <= self.t <= m:
                raise InvalidInput("need 1 <= t <= m")
        if self.skew < 0:
            raise InvalidInput("skew must be nonnegative")


@dataclass
class Instance:
    kind: str
    family: str
    data: dict
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        if self.kind == "set-system":
            return int(self.data["n"])
        if self.kind == "matrix":
            return int(np.asarray(self.data["entries"]).shape[1])
        key = "points" if self.kind == "points" else "vectors"
        return len(self.data[key])

    def to_dict(self) -> dict:
        return {"format": "discwalk-instance", "kind": self.kind, "family": self.family,
                **self.data, "meta": self.meta}

    def digest(self) -> str:
        body = {"kind": self.kind, **self.data}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def set_system(self) -> strategies.SetSystemInstance:
        self._need("set-system")
        return strategies.SetSystemInstance(self.data["n"], self.data["sets"], self.data.get("t"))

    def point_set(self) -> geometry.PointSet:
        self._need("points")
        return geometry.PointSet(np.asarray(self.data["points"], dtype=float))

    def sequence(self) -> strategies.VectorSequenceInstance:
        self._need("vectors")
        return strategies.VectorSequenceInstance(np.asarray(self.data["vectors"], dtype=float),
                                                 self.data.get("norm", "linf"))

    def matrix(self) -> InstanceMatrix:
        if self.kind == "set-system":
            return self.set_system().matrix()
        if self.kind == "matrix":
            return InstanceMatrix(np.asarray(self.data["entries"], dtype=float))
        if self.kind == "points":
            return InstanceMatrix(np.ones((1, self.n)))
        return self.sequence().matrix()

    def _need(self, kind: str):
        if self.kind != kind:
            raise InvalidInput(f"instance kind is {self.kind!r}, expected {kind!r}")


def instance_from_dict(obj: dict) -> Instance:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidInput("instance JSON must be an object with a 'kind' field")
    kind = obj["kind"]
    family = obj.get("family", kind)
    meta = obj.get("meta", {})
    if kind == "set-system":
        data = {"n": int(obj["n"]), "sets": [[int(i) for i in s] for s in obj["sets"]]}
        if obj.get("t") is not None:
            data["t"] = int(obj["t"])
    elif kind == "matrix":
        if "entries" in obj:
            entries = [[float(v) for v in row] for row in obj["entries"]]
        else:
            a = InstanceMatrix.from_triplets(int(obj["m"]), int(obj["n"]), obj["triplets"])
            entries = a.entries.tolist()
        data = {"entries": entries}
    elif kind == "points":
        data = {"d": int(obj["d"]), "points": [[float(v) for v in p] for p in obj["points"]]}
    elif kind == "vectors":
        data = {"d": int(obj["d"]), "norm": obj.get("norm", "linf"),
                "vectors": [[float(v) for v in p] for p in obj["vectors"]]}
    else:
        raise InvalidInput(f"unknown instance kind {kind!r}")
    inst = Instance(kind, family, data, meta)
    validate_instance(inst)
    return inst


def validate_instance(inst: Instance) -> None:
    """Family validators: sparsity, norm bounds, zero sum."""
    if inst.kind == "set-system":
        inst.set_system()
    elif inst.kind == "points":
        p = inst.point_set()
        if p.d != inst.data["d"]:
            raise InvalidInput("point dimension mismatch")
    elif inst.kind == "vectors":
        seq = inst.sequence()
        if seq.d != inst.data["d"]:
            raise InvalidInput("vector dimension mismatch")
    m = inst.matrix()
    if inst.family == "komlos" and np.linalg.norm(m.entries, axis=0).max() > 1.0 + 1e-12:
        raise InvalidInput("komlos instance has a column of norm above 1")
    if inst.family == "vectors-l2-zero-sum":
        v = np.asarray(inst.data["vectors"], dtype=float)
        if any(math.fsum(v[:, k]) != 0.0 for k in range(v.shape[1])):
            raise InvalidInput("zero-sum family does not sum to zero")


def generate(spec: GeneratorSpec) -> Instance:
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(spec.n,)))
    n, d = spec.n, spec.d
    meta = {"generator": asdict(spec)}
    fam = spec.family
    if fam == "beck-fiala":
        m = spec.m if spec.m is not None else n
        weights = 1.0 / np.arange(1, m + 1) ** spec.skew
        weights /= weights.sum()
        order = rng.permutation(m)
        sets: list = [[] for _ in range(m)]
        for i in range(n):
            for j in rng.choice(m, spec.t, replace=False, p=weights):
                sets[int(order[j])].append(i)
        inst = Instance("set-system", fam, {"n": n, "sets": sets, "t": spec.t}, meta)
    elif fam == "komlos":
        m = spec.m if spec.m is not None else n
        a = rng.standard_normal((m, n))
        a /= np.linalg.norm(a, axis=0)[None, :]
        a /= np.maximum(1.0, np.linalg.norm(a, axis=0))[None, :]
        inst = Instance("matrix", fam, {"entries": a.tolist()}, meta)
    elif fam == "points-uniform":
        inst = Instance("points", fam, {"d": d, "points": rng.random((n, d)).tolist()}, meta)
    elif fam == "points-grid":
        side = max(1, math.ceil(n ** (1.0 / d) - 1e-9))
        grid = np.array(np.unravel_index(np.arange(side**d), (side,) * d)).T[:n].astype(float)
        pts = grid[rng.permutation(n)]
        inst = Instance("points", fam, {"d": d, "points": pts.tolist()}, meta)
    elif fam == "vectors-linf":
        v = rng.uniform(-1.0, 1.0, size=(n, d))
        inst = Instance("vectors", fam, {"d": d, "norm": "linf", "vectors": v.tolist()}, meta)
    else:
        half = rng.standard_normal((n // 2, d))
        half /= np.linalg.norm(half, axis=1)[:, None]
        half *= rng.random((n // 2, 1)) ** (1.0 / d)
        parts = [half, -half] + ([np.zeros((1, d))] if n % 2 else [])
        v = np.vstack(parts)[rng.permutation(n)]
        inst = Instance("vectors", fam, {"d": d, "norm": "l2", "vectors": v.tolist()}, meta)
    validate_instance(inst)
    return inst


def load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read JSON from {path}: {exc}") from exc


def dump_json(obj, path: str | None) -> str:
    text = json.dumps(obj, indent=1, sort_keys=False)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text


def load_instance(path: str) -> Instance:
    return instance_from_dict(load_json(path))


def save_instance(inst: Instance, path: str) -> None:
    validate_instance(inst)
    dump_json(inst.to_dict(), path)


def load_monitors(path: str) -> list:
    obj = load_json(path)
    items = obj["monitors"] if isinstance(obj, dict) else obj
    try:
        return [MonitoredPair.of(int(it["row"]), it["subset"]) for it in items]
    except (KeyError, TypeError) as exc:
        raise InvalidInput("monitors file needs entries {row, subset}") from exc


def make_strategy(inst: Instance, name: str, ell="formula"):
    if name == "beck-fiala":
        return strategies.beck_fiala_strategy(inst.set_system())
    if name == "komlos":
        return strategies.komlos_strategy(inst.matrix())
    if name == "tusnady":
        return strategies.tusnady_strategy(inst.point_set(), ell=ell)
    if name in ("steinitz-linf", "steinitz-l2"):
        seq = inst.sequence()
        regime = name.split("-")[1]
        if regime != seq.norm:
            seq = strategies.VectorSequenceInstance(seq.vectors, regime)
        return strategies.steinitz_strategy(seq)
    raise InvalidInput(f"unknown strategy {name!r}; choose from {', '.join(strategies.STRATEGY_NAMES)}")


def parse_ell(text):
    if text is None or text in ("formula", "auto"):
        return text or "formula"
    try:
        return int(text)
    except ValueError as exc:
        raise InvalidInput(f"--ell must be an integer, 'formula' or 'auto', got {text!r}") from exc


def family_disc(inst: Instance, name: str, chi) -> float:
    """The discrepancy each application cares about."""
    if name == "tusnady":
        return oracles.max_box_discrepancy(inst.point_set(), chi)
    if name == "steinitz-linf":
        return oracles.prefix_disc(inst.sequence(), chi)[0]
    if name == "steinitz-l2":
        return oracles.prefix_disc(inst.sequence(), chi)[1]
    return oracles.discrepancy(inst.matrix(), chi)


def predictor(name: str, n: int, d: int = 1, t: int = 1) -> float:
    if name == "tusnady":
        return math.log(n) ** 2
    if name.startswith("steinitz"):
        return math.sqrt(d * math.log(n))
    if name == "beck-fiala":
        return math.sqrt(t * math.log(n))
    return math.sqrt(math.log(n))


def run_report(inst: Instance, name: str, params: WalkParams, result, monitors) -> dict:
    b = inst.matrix()
    chi = result.coloring
    rows = oracles.pair_rows(b, monitors) if monitors else np.zeros((0, b.n))
    discs = rows @ chi if len(rows) else np.zeros(0)
    sizes = result.ledger.sizes()
    masses = result.ledger.masses()
    return {
        "instance_digest": inst.digest(),
        "strategy": name,
        "params": asdict(params),
        "seed": params.seed,
        "coloring": chi.tolist(),
        "disc": family_disc(inst, name, chi),
        "monitors": [{"row": p.row, "size": len(p.subset), "disc": float(discs[k]),
                      "corrupted": int(sizes[k]), "corrupted_mass": float(masses[k])}
                     for k, p in enumerate(monitors)],
        "steps": result.trace.steps,
        "terminated": result.trace.terminated,
        "wall_time": result.trace.wall_time,
        "max_constraint_residual": result.trace.max_residual,
        "epochs": len(result.trace.epochs),
        "g_samples": {"steps": result.trace.g_steps, "values": result.trace.g_values},
        "witness_rejections": len(result.ledger.rejections),
    }


@dataclass
class ExperimentConfig:
    strategy: str
    sizes: tuple = (32, 64, 128)
    trials: int = 20
    seed: int = 0
    d: int = 2
    t: int = 3
    ell: object = "formula"
    gamma: float | None = None
    max_steps: int | None = None
    monitors: bool = True
    workers: int | None = None

    def family(self) -> str:
        return {"beck-fiala": "beck-fiala", "komlos": "komlos", "tusnady": "points-uniform",
                "steinitz-linf": "vectors-linf", "steinitz-l2": "vectors-l2-zero-sum"}[self.strategy]


@dataclass
class ExperimentResult:
    rows: list
    summary: dict

    def csv_text(self, header: bool = True) -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# discwalk experiment {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r[c] if c != "disc" else repr(float(r[c])) for c in CSV_COLUMNS])
        return buf.getvalue()


def experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Sweep sizes, run seeded trials, and report median discrepancy ratios."""
    if cfg.strategy not in strategies.STRATEGY_NAMES:
        raise InvalidInput(f"unknown strategy {cfg.strategy!r}")
    if cfg.trials < 1 or not cfg.sizes:
        raise InvalidInput("need at least one size and one trial")
    rows: list = []
    per_n: dict = {}
    for n in cfg.sizes:
        spec = GeneratorSpec(cfg.family(), int(n), t=cfg.t, d=cfg.d, seed=cfg.seed)
        inst = generate(spec)
        strat = make_strategy(inst, cfg.strategy, cfg.ell)
        mons = strat.default_monitors() if cfg.monitors else []
        params = WalkParams(gamma=cfg.gamma, max_steps=cfg.max_steps, seed=cfg.seed)
        results = run_trials(inst.matrix(), strat, params, mons, cfg.trials, workers=cfg.workers)
        discs = []
        for k, res in enumerate(results):
            disc = family_disc(inst, cfg.strategy, res.coloring)
            discs.append(disc)
            rows.append({"n": int(n), "trial": k, "seed": cfg.seed, "disc": disc,
                         "corrupted": int(res.ledger.sizes().max(initial=0)),
                         "steps": res.trace.steps, "terminated": int(res.trace.terminated)})
        med = float(np.median(discs))
        per_n[int(n)] = {"median_disc": med,
                         "ratio": med / predictor(cfg.strategy, int(n), cfg.d, cfg.t)}
    ratios = [per_n[int(n)]["ratio"] for n in cfg.sizes]
    summary = {"strategy": cfg.strategy, "predictor": _predictor_name(cfg.strategy),
               "per_n": per_n, "max_ratio": max(ratios), "ratios": ratios}
    return ExperimentResult(rows, summary)


def _predictor_name(name: str) -> str:
    if name == "tusnady":
        return "ln(n)^2"
    if name.startswith("steinitz"):
        return "sqrt(d ln n)"
    if name == "beck-fiala":
        return "sqrt(t ln n)"
    return "sqrt(ln n)"


def flat_or_decreasing(ratios, rel_tol: float = 0.10) -> bool:
    """Each ratio is at most ``1 + rel_tol`` times the previous one."""
    return all(b <= a * (1.0 + rel_tol) for a, b in zip(ratios, ratios[1:]))


def tail_config_run(obj: dict, base_dir: str = ".", workers: int | None = None) -> dict:
    """Run a tail validation described by a JSON config object."""
    import os

    src = obj.get("instance")
    if isinstance(src, str):
        inst = load_instance(os.path.join(base_dir, src))
    elif isinstance(src, dict):
        inst = instance_from_dict(src)
    else:
        inst = generate(GeneratorSpec(**obj["generate"]))
    name = obj.get("strategy", "beck-fiala")
    strat = make_strategy(inst, name, parse_ell(obj.get("ell")))
    mon = obj.get("monitor", "largest")
    if mon == "largest":
        b = inst.matrix()
        j = int(np.argmax((b.entries != 0).sum(axis=1)))
        pair = MonitoredPair.of(j, np.flatnonzero(b.entries[j]))
    else:
        pair = MonitoredPair.of(int(mon["row"]), mon["subset"])
    cfg = oracles.TailCheckConfig(pair, trials=int(obj.get("trials", 2000)),
                                  lambdas=list(obj.get("lambdas", [1.0, 2.0])),
                                  anchor_lambda=float(obj.get("anchor_lambda", 1.0)),
                                  seed=int(obj.get("seed", 0)))
    params = WalkParams(gamma=obj.get("gamma"), max_steps=obj.get("max_steps"), seed=cfg.seed)
    rep = oracles.tail_validate(inst.matrix(), strat, params, cfg, workers=workers)
    out = rep.as_dict()
    out["monitor"] = {"row": pair.row, "subset": list(pair.subset)}
    out["instance_digest"] = inst.digest()
    return out


def single_run(inst: Instance, name: str, params: WalkParams, monitors=None, ell="formula"):
    strat = make_strategy(inst, name, ell)
    mons = monitors if monitors is not None else strat.default_monitors()
    result = run(inst.matrix(), strat, params, mons)
    return result, run_report(inst, name, params, result, mons)


__all__ = [
    "CSV_COLUMNS", "ExperimentConfig", "ExperimentResult", "FAMILIES", "GeneratorSpec",
    "Instance", "experiment", "flat_or_decreasing", "generate", "instance_from_dict",
    "load_instance", "load_monitors", "make_strategy", "run_report", "save_instance",
    "single_run", "tail_config_run",
]
