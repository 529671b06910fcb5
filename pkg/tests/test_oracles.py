import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_set_system
from discwalk import engine, geometry, oracles, strategies
from discwalk.engine import InstanceMatrix, MonitoredPair, WalkParams
from discwalk.errors import InvalidInput, RefuseTooLarge


def exhaustive(b, pairs=None):
    """Plain itertools enumeration over all 2^n colorings."""
    rows = oracles.pair_rows(b, pairs)
    return min(np.abs(rows @ np.array(x)).max() for x in itertools.product([-1, 1], repeat=b.n))


def test_brute_force_examples():
    value, x = oracles.brute_force_discrepancy(InstanceMatrix(np.array([[1.0, 1.0]])))
    assert value == 0 and x.tolist() == [1, -1]
    assert oracles.brute_force_discrepancy(InstanceMatrix(np.eye(3)))[0] == 1
    assert oracles.brute_force_discrepancy(InstanceMatrix(np.ones((1, 3))))[0] == 1


def test_brute_force_guard():
    with pytest.raises(RefuseTooLarge):
        oracles.brute_force_discrepancy(InstanceMatrix(np.ones((1, 23))))


def test_brute_force_chunks_agree():
    rng = np.random.default_rng(0)
    b = InstanceMatrix(rng.uniform(-1, 1, (4, 12)))
    whole = oracles.brute_force_discrepancy(b)[0]
    chunked = oracles.brute_force_discrepancy(b, chunk=7)[0]
    assert whole == chunked


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 9), st.integers(0, 2**32 - 1), st.booleans())
def test_brute_force_matches_exhaustive(m, n, seed, use_pairs):
    rng = np.random.default_rng(seed)
    b = InstanceMatrix(np.round(rng.uniform(-1, 1, (m, n)), 3))
    pairs = None
    if use_pairs:
        pairs = [MonitoredPair.of(int(rng.integers(m)), np.flatnonzero(rng.random(n) < 0.5))
                 for _ in range(3)]
    value, x = oracles.brute_force_discrepancy(b, pairs)
    assert value == pytest.approx(exhaustive(b, pairs), abs=1e-12)
    # the witness attains the value, and so does its negation
    assert oracles.discrepancy(b, x, pairs) == pytest.approx(value, abs=1e-12)
    assert oracles.discrepancy(b, -x, pairs) == pytest.approx(value, abs=1e-12)


def test_brute_force_is_a_lower_bound_for_the_walk():
    sys_ = random_set_system(12, 12, 3, 1)
    b = sys_.matrix()
    opt = oracles.brute_force_discrepancy(b)[0]
    strat = strategies.beck_fiala_strategy(sys_)
    for trial in range(5):
        chi = engine.run(b, strat, WalkParams(seed=3, trial=trial)).coloring
        assert oracles.discrepancy(b, chi) >= opt


def test_prefix_examples():
    v = np.array([[1.0, 0.0], [-1.0, 0.0]])
    assert oracles.prefix_disc(v, [1, 1]) == (1.0, 1.0)
    z = np.array([[0.5, -0.5], [0.25, 1.0], [-0.75, -0.5]])
    linf, l2 = oracles.prefix_disc(z, [1, 1, 1])
    # prefixes: (0.5,-0.5), (0.75,0.5), (0,0)
    assert linf == 0.75 and l2 == pytest.approx(math.hypot(0.75, 0.5))
    h = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.5]])
    # with signs (+,-,-,+): (1,0), (1,-1), (0,-2), (-1,-1.5)
    assert oracles.prefix_disc(h, [1, -1, -1, 1]) == (2.0, 2.0)
    with pytest.raises(InvalidInput):
        oracles.prefix_disc(h, [1, 1])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_prefix_norm_relation(n, d, seed):
    rng = np.random.default_rng(seed)
    v = rng.uniform(-1, 1, (n, d))
    chi = rng.choice([-1, 1], n)
    sums = np.cumsum(chi[:, None] * v, axis=0)
    for s in sums:
        inf, two = np.abs(s).max(), np.linalg.norm(s)
        assert inf / math.sqrt(d) - 1e-12 <= two <= math.sqrt(d) * inf + 1e-12
    linf, l2 = oracles.prefix_disc(v, chi)
    assert linf == pytest.approx(np.abs(sums).max()) and l2 == pytest.approx(np.linalg.norm(sums, axis=1).max())


def test_l2_subset_disc():
    b = InstanceMatrix(np.array([[1.0, 1.0, 0.5], [0.5, 0.5, 1.0]]))
    assert oracles.l2_subset_disc(b, [0, 1], [1, -1, 1]) == 0.0
    one = InstanceMatrix(np.array([[0.3, -0.7, 0.2]]))
    assert oracles.l2_subset_disc(one, [0, 1], [1, 1, 1]) == pytest.approx(0.4)
    rng = np.random.default_rng(2)
    a = rng.uniform(-1, 1, (5, 9))
    chi = rng.choice([-1, 1], 9)
    S = [0, 3, 4, 8]
    direct = math.sqrt(sum(sum(a[j, i] * chi[i] for i in S) ** 2 for j in range(5)))
    assert oracles.l2_subset_disc(InstanceMatrix(a), S, chi) == pytest.approx(direct)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 2), st.booleans(), st.integers(0, 2**32 - 1))
def test_max_box_discrepancy_matches_enumeration(n, d, ties, seed):
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, 3, (n, d)).astype(float) if ties else rng.random((n, d))
    p = geometry.PointSet(pts)
    chi = rng.choice([-1, 1], n)
    brute = max(abs(chi[c.members].sum()) for c in geometry.enumerate_distinct_boxes(p))
    assert oracles.max_box_discrepancy(p, chi) == brute


def test_tail_bound_and_fit():
    assert oracles.tail_bound(0) == 2.0
    assert oracles.tail_bound(2) == pytest.approx(2 * math.exp(-2))
    disc = np.array([0.0, 1.0, 2.0, 3.0])
    mass = np.zeros(4)
    # at lambda = 2 the threshold is 4c; exceedance <= 0.25 needs c > 0.5
    c = oracles.fit_constant(disc, mass, 2.0, 0.01, target=0.25)
    assert c == pytest.approx(0.51) and oracles.exceedance(disc, mass, c, 2.0) <= 0.25


def test_tail_report_zero_discrepancy_never_exceeds():
    rep = oracles.tail_report(np.zeros(500), np.ones(500), [0.5, 1.0, 2.0, 3.0])
    assert all(r["exceedance"] == 0.0 for r in rep.rows) and rep.passed
    assert rep.c_hat > 0


def test_tail_config_validation():
    pair = MonitoredPair.of(0, [0])
    with pytest.raises(InvalidInput):
        oracles.TailCheckConfig(pair, trials=50)
    with pytest.raises(InvalidInput):
        oracles.TailCheckConfig(pair, lambdas=[-1.0])


def test_tail_validate_lambda_zero_always_passes():
    sys_ = random_set_system(10, 10, 2, 3)
    b = sys_.matrix()
    j = int(np.argmax(b.entries.sum(axis=1)))
    cfg = oracles.TailCheckConfig(MonitoredPair.of(j, np.flatnonzero(b.entries[j])), trials=100,
                                  lambdas=[0.0])
    rep = oracles.tail_validate(b, strategies.beck_fiala_strategy(sys_), WalkParams(), cfg)
    assert rep.passed and rep.runs + rep.non_terminated == 100
    assert cfg.c_hat == rep.c_hat
    assert rep.max_corrupted <= 8
