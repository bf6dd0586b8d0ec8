import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expsum.divdiff import (
    DDResult,
    NodeMultiset,
    compositions,
    confluent_exp_dd,
    dd_lagrange,
    dd_recurrence,
    dirichlet_quadrature,
    exp_derivative,
    hermite_genocchi,
)
from expsum.errors import DimensionError, DomainError, DuplicateNodeError, NearCoincidentError

# d/da (e^{at} - e^{bt})/(a - b) at a=-1, b=-3, t=2, via mpmath
DOUBLE_NODE_REF = 0.10212115047162611
# exp[0.2, 0.2, 0.9, 1.7], via mpmath differentiation of the distinct form
EXP_DOUBLED_REF = 0.36709114859368785

distinct_nodes = st.lists(st.floats(-10.0, 10.0), min_size=2, max_size=8, unique=True).filter(
    lambda xs: min(abs(a - b) for a, b in itertools.combinations(xs, 2)) > 1e-3
)


def harrison_dd(l1, l2, t):
    """The four-term Erlang(3)+exponential expression divided by λ₁³λ₂."""
    d = l2 - l1
    e1 = math.exp(-l1 * t)
    return e1 / d ** 3 - t * e1 / d ** 2 + t * t * e1 / (2 * d) + math.exp(-l2 * t) / (l1 - l2) ** 3


def test_node_multiset_grouping():
    ns = NodeMultiset.from_points([2.0, -1.0, 2.0, 2.0])
    assert ns.nodes == ((-1.0, 1), (2.0, 3))
    assert ns.total_order == 4
    assert ns.expanded() == [-1.0, 2.0, 2.0, 2.0]


def test_node_multiset_near_coincident():
    pts = [1.0, 1.0 + 1e-12, 3.0]
    with pytest.raises(NearCoincidentError):
        NodeMultiset.from_points(pts)
    merged = NodeMultiset.from_points(pts, mode="regroup")
    assert merged.multiplicities == [2, 1]
    assert merged.locations[0] == pytest.approx(1.0 + 5e-13, abs=1e-15)
    assert NodeMultiset.from_points(pts, mode="keep").total_order == 3


def test_node_multiset_validation():
    with pytest.raises(DomainError):
        NodeMultiset(((2.0, 1), (1.0, 1)))
    with pytest.raises(DomainError):
        NodeMultiset(((1.0, 0),))
    with pytest.raises(DomainError):
        NodeMultiset(())


def test_recurrence_examples():
    assert dd_recurrence(math.exp, [0.4]).value == math.exp(0.4)
    assert dd_recurrence(math.exp, [0.4]).condition_estimate == 1.0
    assert dd_recurrence(math.exp, [0.0, 1.0]).value == pytest.approx(math.e - 1.0, rel=1e-15)
    assert dd_recurrence(lambda x: x * x, [1.0, 2.0, 4.0]).value == pytest.approx(1.0, rel=1e-15)


def test_lagrange_examples():
    for f, nodes in [(math.exp, [0.0, 1.0]), (lambda x: x * x, [1.0, 2.0, 4.0])]:
        lag = dd_lagrange(f, nodes)
        rec = dd_recurrence(f, nodes)
        assert abs(lag.value - rec.value) <= 1e-12 * lag.condition_estimate * abs(rec.value)
        assert lag.condition_estimate >= 1.0
    assert abs(dd_lagrange(lambda x: 1.0, [0.3, 1.7, 2.2, 5.0]).value) < 1e-15
    assert dd_lagrange(math.exp, [-1.0, -2.0]).value == pytest.approx(math.exp(-1) - math.exp(-2), rel=1e-15)


def test_duplicate_nodes_rejected():
    with pytest.raises(DuplicateNodeError):
        dd_recurrence(math.exp, [1.0, 2.0, 1.0])
    with pytest.raises(DuplicateNodeError):
        dd_lagrange(math.exp, [0.5, 0.5])


@settings(max_examples=100, deadline=None)
@given(nodes=distinct_nodes, data=st.data())
def test_lagrange_permutation_symmetry(nodes, data):
    perm = data.draw(st.permutations(nodes))
    f = lambda x: math.sin(x) + 0.1 * x ** 3
    a, b = dd_lagrange(f, nodes), dd_lagrange(f, perm)
    scale = max(abs(a.value), 1e-300)
    assert abs(a.value - b.value) <= 1e-12 * a.condition_estimate * scale + 1e-300


@settings(max_examples=100, deadline=None)
@given(nodes=distinct_nodes)
def test_recurrence_matches_lagrange(nodes):
    f = lambda x: math.exp(0.3 * x)
    lag, rec = dd_lagrange(f, nodes), dd_recurrence(f, nodes)
    # the recurrence loses about as much as the Lagrange sum, plus its own depth
    assert abs(lag.value - rec.value) <= 1e-10 * lag.condition_estimate * abs(lag.value) * len(nodes)


def test_lagrange_matches_hermite_genocchi():
    rng = np.random.default_rng(3)
    for _ in range(20):
        k = rng.integers(2, 6)
        nodes = sorted(rng.uniform(-3.0, 1.0, k))
        t = rng.uniform(0.1, 3.0)
        lag = dd_lagrange(lambda x: math.exp(x * t), nodes)
        hg = hermite_genocchi(exp_derivative(t, k - 1), NodeMultiset.from_points(nodes))
        assert hg.value == pytest.approx(lag.value, rel=1e-10 * lag.condition_estimate)


def test_compositions_lexicographic():
    got = list(compositions(2, 3))
    assert got == [(0, 0, 2), (0, 1, 1), (0, 2, 0), (1, 0, 1), (1, 1, 0), (2, 0, 0)]
    assert len(list(compositions(5, 4))) == math.comb(8, 3)
    assert list(compositions(0, 2)) == [(0, 0)]


def test_confluent_single_location():
    for lam, n, t in [(2.0, 1, 0.5), (1.3, 4, 2.0), (0.2, 9, 11.0)]:
        got = confluent_exp_dd(NodeMultiset(((-lam, n),)), t).value
        assert got == pytest.approx(t ** (n - 1) * math.exp(-lam * t) / math.factorial(n - 1), rel=1e-14)


def test_confluent_distinct_matches_lagrange():
    got = confluent_exp_dd(NodeMultiset(((-2.5, 1), (0.7, 1))), 1.3).value
    ref = dd_lagrange(lambda x: math.exp(1.3 * x), [-2.5, 0.7]).value
    assert got == pytest.approx(ref, rel=1e-14)


def test_confluent_harrison_nodes():
    got = confluent_exp_dd(NodeMultiset(((-2.0, 3), (-1.0, 1))), 1.0)
    assert got.method == "confluent-closed-form"
    assert got.value == pytest.approx(harrison_dd(2.0, 1.0, 1.0), rel=1e-13)
    assert got.value == pytest.approx(0.029541233079910578, rel=1e-13)


def test_confluent_double_node_reference():
    ns = NodeMultiset(((-3.0, 1), (-1.0, 2)))
    assert confluent_exp_dd(ns, 2.0).value == pytest.approx(DOUBLE_NODE_REF, rel=1e-13)
    hg = hermite_genocchi(exp_derivative(2.0, 2), ns)
    assert hg.value == pytest.approx(DOUBLE_NODE_REF, rel=1e-12)


def test_confluent_at_time_zero():
    # e[a_1..a_n] at t = 0 is the divided difference of a constant
    assert confluent_exp_dd(NodeMultiset(((-1.0, 1),)), 0.0).value == 1.0
    assert confluent_exp_dd(NodeMultiset(((-4.0, 1), (-1.0, 2))), 0.0).value == pytest.approx(0.0, abs=1e-15)


def test_confluent_log_scale():
    ns = NodeMultiset(((-900.0, 2), (-800.0, 3)))
    plain = confluent_exp_dd(ns, 1.0, log_scale=780.0).value
    assert math.isfinite(plain) and plain > 0


def test_confluent_matches_hermite_genocchi_up_to_five():
    rng = np.random.default_rng(8)
    for _ in range(15):
        m = rng.integers(1, 4)
        locs = np.sort(rng.choice(np.linspace(-4.0, -0.2, 30), m, replace=False))
        mults = rng.integers(1, 3, m)
        if mults.sum() < 2 or mults.sum() > 5:
            continue
        ns = NodeMultiset(tuple((float(a), int(k)) for a, k in zip(locs, mults)))
        t = rng.uniform(0.2, 4.0)
        cf = confluent_exp_dd(ns, t).value
        hg = hermite_genocchi(exp_derivative(t, ns.total_order - 1), ns).value
        assert hg == pytest.approx(cf, rel=1e-8)


def test_hermite_genocchi_examples():
    a = 0.6
    assert hermite_genocchi(np.exp, NodeMultiset(((a, 2),))).value == pytest.approx(math.exp(a), rel=1e-14)
    assert hermite_genocchi(np.exp, NodeMultiset(((0.0, 1), (1.0, 1)))).value == pytest.approx(math.e - 1, rel=1e-14)


def test_hermite_genocchi_caps():
    with pytest.raises(DomainError):
        hermite_genocchi(np.exp, NodeMultiset(((0.0, 1),)))
    seven = NodeMultiset(tuple((float(i), 1) for i in range(7)))
    with pytest.raises(DimensionError):
        hermite_genocchi(np.exp, seven, quad_order=4)


def test_dirichlet_quadrature_normalisation():
    # ∫ Π s_i^{p_i-1} over the simplex is Π Γ(p_i) / Γ(Σp)
    shapes = [0.5, 1.5, 2.0, 0.7]
    got, _ = dirichlet_quadrature(lambda s: np.ones(len(s)), shapes, 10)
    expect = math.exp(sum(math.lgamma(p) for p in shapes) - math.lgamma(sum(shapes)))
    assert got == pytest.approx(expect, rel=1e-13)


def summand_abs_sum(nodes):
    total = 0.0
    for j, xj in enumerate(nodes):
        total += 1.0 / abs(math.prod(xj - xk for k, xk in enumerate(nodes) if k != j))
    return total


def random_node_set(rng):
    while True:
        k = int(rng.integers(2, 9))
        nodes = list(rng.uniform(-5.0, 5.0, k))
        if min(abs(a - b) for a, b in itertools.combinations(nodes, 2)) > 1e-4:
            return nodes


def reciprocal_product_failures(count=200, seed=31):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(count):
        nodes = random_node_set(rng)
        val = dd_lagrange(lambda x: 1.0, nodes).value
        if not abs(val) <= 1e-10 * summand_abs_sum(nodes):
            bad += 1
    return bad


def basis_sum_failures(count=200, seed=32):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(count):
        nodes = random_node_set(rng)
        while True:
            s = rng.uniform(-6.0, 6.0)
            if min(abs(s - x) for x in nodes) > 1e-3:
                break
        # Σ_j Π_{k≠j} (x_k - s)/(x_k - x_j) equals Π(s - x_k) · (1/(s - x))[x_1..x_m]
        res = dd_lagrange(lambda x: 1.0 / (s - x), nodes)
        total = res.value * math.prod(s - x for x in nodes)
        if not abs(total - 1.0) <= 1e-10 * res.condition_estimate:
            bad += 1
    return bad


def test_sum_of_reciprocal_products_vanishes():
    assert reciprocal_product_failures() == 0


def test_lagrange_basis_sums_to_one():
    assert basis_sum_failures() == 0


def test_confluence_limit_is_first_order():
    a, t = -1.5, 2.0
    target = confluent_exp_dd(NodeMultiset(((a, 2),)), t).value
    hs = [1e-2 / 2 ** i for i in range(8)]
    errs = [abs(dd_recurrence(lambda x: math.exp(x * t), [a, a + h]).value - target) for h in hs]
    ratios = [e0 / e1 for e0, e1 in zip(errs, errs[1:])]
    assert all(1.8 < r < 2.2 for r in ratios)


def test_node_derivative_doubles_the_node():
    h = 1e-6
    rest = [0.9, 1.7]
    f = math.exp
    fd = (dd_lagrange(f, [0.2 + h] + rest).value - dd_lagrange(f, [0.2 - h] + rest).value) / (2 * h)
    confluent = confluent_exp_dd(NodeMultiset(((0.2, 2), (0.9, 1), (1.7, 1))), 1.0).value
    assert abs(fd - confluent) < 1e-5
    assert confluent == pytest.approx(EXP_DOUBLED_REF, rel=1e-13)


def test_ddresult_flag():
    assert DDResult(1.0, 1e9, "lagrange").flagged
    assert not DDResult(1.0, 10.0, "lagrange").flagged
