import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discwalk import harness
from discwalk.engine import WalkParams
from discwalk.errors import InvalidInput
from discwalk.harness import GeneratorSpec, Instance


def test_beck_fiala_sparsity():
    inst = harness.generate(GeneratorSpec("beck-fiala", 12, t=3, seed=1))
    a = inst.matrix().entries
    assert a.shape == (12, 12)
    assert np.all(a.sum(axis=0) <= 3) and set(np.unique(a)) <= {0.0, 1.0}


def test_zero_sum_family_sums_exactly_to_zero():
    inst = harness.generate(GeneratorSpec("vectors-l2-zero-sum", 10, d=4, seed=2))
    v = np.asarray(inst.data["vectors"])
    assert all(math.fsum(v[:, k]) == 0.0 for k in range(4))
    assert np.linalg.norm(v, axis=1).max() <= 1.0
    odd = harness.generate(GeneratorSpec("vectors-l2-zero-sum", 7, d=3, seed=2))
    assert sum(np.all(np.asarray(odd.data["vectors"]) == 0, axis=1)) >= 1


def test_komlos_columns_normalized():
    a = harness.generate(GeneratorSpec("komlos", 16, seed=3)).matrix().entries
    assert np.linalg.norm(a, axis=0).max() <= 1 + 1e-12


def test_point_families():
    grid = harness.generate(GeneratorSpec("points-grid", 10, d=2, seed=0)).point_set()
    assert grid.n == 10 and len(np.unique(grid.points[:, 0])) < 10
    uni = harness.generate(GeneratorSpec("points-uniform", 10, d=3, seed=0)).point_set()
    assert uni.d == 3
    lin = harness.generate(GeneratorSpec("vectors-linf", 9, d=5, seed=0)).sequence()
    assert np.abs(lin.vectors).max() <= 1


def test_invalid_specs():
    with pytest.raises(InvalidInput):
        GeneratorSpec("nope", 4)
    with pytest.raises(InvalidInput):
        GeneratorSpec("beck-fiala", 4, m=2, t=3)
    with pytest.raises(InvalidInput):
        GeneratorSpec("points-uniform", 0)


def test_validators_reject_bad_instances():
    with pytest.raises(InvalidInput):
        harness.instance_from_dict({"kind": "set-system", "n": 2, "t": 1, "sets": [[0, 1], [0]]})
    with pytest.raises(InvalidInput):
        harness.instance_from_dict({"kind": "vectors", "d": 1, "norm": "l2", "vectors": [[2.0]]})
    with pytest.raises(InvalidInput):
        harness.instance_from_dict({"kind": "matrix", "family": "komlos",
                                    "entries": [[0.9], [0.9]]})
    with pytest.raises(InvalidInput):
        harness.instance_from_dict({"kind": "vectors", "family": "vectors-l2-zero-sum", "d": 1,
                                    "norm": "l2", "vectors": [[0.5], [0.25]]})
    with pytest.raises(InvalidInput):
        harness.instance_from_dict({"kind": "shape"})


def test_triplet_matrix_input():
    inst = harness.instance_from_dict({"kind": "matrix", "m": 2, "n": 3,
                                       "triplets": [[0, 0, 0.5], [1, 2, -1.0]]})
    assert inst.matrix().entries.tolist() == [[0.5, 0, 0], [0, 0, -1.0]]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(harness.FAMILIES), st.integers(1, 20), st.integers(1, 4),
       st.integers(0, 2**32 - 1))
def test_round_trip_is_bit_exact(tmp_path_factory, family, n, d, seed):
    t = min(2, n)
    inst = harness.generate(GeneratorSpec(family, n, t=t, d=d, seed=seed))
    path = tmp_path_factory.mktemp("rt") / "inst.json"
    harness.save_instance(inst, str(path))
    back = harness.load_instance(str(path))
    assert back.kind == inst.kind and back.data == inst.data
    assert back.digest() == inst.digest()
    assert np.array_equal(back.matrix().entries, inst.matrix().entries)
    # re-serializing does not move the digest
    again = harness.instance_from_dict(json.loads(json.dumps(back.to_dict())))
    assert again.digest() == inst.digest()


def test_generation_is_seeded():
    a = harness.generate(GeneratorSpec("komlos", 8, seed=4))
    b = harness.generate(GeneratorSpec("komlos", 8, seed=4))
    c = harness.generate(GeneratorSpec("komlos", 8, seed=5))
    assert a.digest() == b.digest() != c.digest()


def test_run_report_lists_every_monitor():
    inst = harness.generate(GeneratorSpec("beck-fiala", 16, t=2, seed=0))
    result, report = harness.single_run(inst, "beck-fiala", WalkParams(seed=2))
    assert len(report["monitors"]) == 16
    assert report["instance_digest"] == inst.digest()
    assert report["terminated"] and report["steps"] == result.trace.steps
    chi = np.array(report["coloring"])
    a = inst.matrix().entries
    for j, mon in enumerate(report["monitors"]):
        assert mon["row"] == j and mon["disc"] == pytest.approx(a[j] @ chi)
        assert mon["corrupted"] <= 8
    json.dumps(report)


def test_strategy_compatibility():
    pts = harness.generate(GeneratorSpec("points-uniform", 8, seed=0))
    with pytest.raises(InvalidInput):
        harness.make_strategy(pts, "beck-fiala")
    with pytest.raises(InvalidInput):
        harness.make_strategy(pts, "magic")
    assert harness.parse_ell("8") == 8 and harness.parse_ell("auto") == "auto"
    with pytest.raises(InvalidInput):
        harness.parse_ell("big")


def test_sweep_row_count():
    cfg = harness.ExperimentConfig("steinitz-linf", (32, 64, 128), trials=20, seed=1, d=2,
                                   monitors=False)
    res = harness.experiment(cfg)
    assert len(res.rows) == 60
    assert [r["n"] for r in res.rows] == [32] * 20 + [64] * 20 + [128] * 20
    assert res.summary["max_ratio"] == max(res.summary["ratios"])
    for n in (32, 64, 128):
        med = np.median([r["disc"] for r in res.rows if r["n"] == n])
        assert res.summary["per_n"][n]["ratio"] == pytest.approx(med / math.sqrt(2 * math.log(n)))


def test_sweep_csv_is_reproducible():
    cfg = harness.ExperimentConfig("beck-fiala", (16, 24), trials=3, seed=7, t=2)
    first = harness.experiment(cfg).csv_text()
    second = harness.experiment(cfg).csv_text()
    assert first.startswith("#")
    body1 = first.split("\n", 1)[1]
    body2 = second.split("\n", 1)[1]
    assert body1 == body2
    assert body1.splitlines()[0] == ",".join(harness.CSV_COLUMNS)
    assert len(body1.splitlines()) == 1 + 6


def test_flatness_rule():
    assert harness.flat_or_decreasing([1.0, 1.05, 1.1])
    assert not harness.flat_or_decreasing([1.0, 1.2])
    assert harness.flat_or_decreasing([2.0, 1.0])


def test_instance_kinds():
    inst = Instance("points", "points-uniform", {"d": 1, "points": [[0.5], [0.2]]})
    assert inst.n == 2 and inst.matrix().entries.tolist() == [[1.0, 1.0]]
    with pytest.raises(InvalidInput):
        inst.set_system()
