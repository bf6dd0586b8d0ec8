import math

import numpy as np
import pytest
from scipy import integrate

from expsum.density import EvalGrid, SumDistribution, erlang, exponential, gamma
from expsum.oracle import (
    OracleReport,
    PowerDensity,
    check_grid,
    check_spec,
    component_density,
    convolve_all,
    convolve_pair,
    sample_sum,
)

GRID = np.linspace(0.0, 12.0, 61)


def test_power_density_rejects_bad_lead():
    with pytest.raises(ValueError):
        PowerDensity(-1.0, np.exp)


def test_exponential_convolution_examples():
    e1, e2 = component_density("exponential", 1, 1.0), component_density("exponential", 1, 2.0)
    got = convolve_pair(e1, e2, [1.0]).values[0]
    assert got == pytest.approx(2 * (math.exp(-1) - math.exp(-2)), abs=1e-12)
    lam = 1.7
    e = component_density("exponential", 1, lam)
    out = convolve_pair(e, e, GRID).values
    assert np.allclose(out, lam ** 2 * GRID * np.exp(-lam * GRID), atol=1e-12, rtol=0)


def test_half_gamma_squared_is_exponential():
    g = component_density("gamma", 0.5, 1.0)
    t = GRID[1:]
    out = convolve_pair(g, g, t)
    assert out.converged.all()
    assert np.allclose(out.values, np.exp(-t), atol=1e-12, rtol=0)


def test_plain_callables_are_accepted():
    f = lambda u: math.exp(-u)
    out = convolve_pair(f, f, [0.5, 2.0]).values
    assert out == pytest.approx([0.5 * math.exp(-0.5), 2 * math.exp(-2)], abs=1e-12)


def test_convolution_commutes():
    a = component_density("gamma", 0.6, 1.3)
    b = component_density("erlang", 3, 0.7)
    t = GRID[1:]
    ab = convolve_pair(a, b, t).values
    ba = convolve_pair(b, a, t).values
    assert np.max(np.abs(ab - ba)) <= 1e-10


def test_convolution_associates():
    ds = [component_density("gamma", 0.8, 2.0), component_density("exponential", 1, 0.5),
          component_density("gamma", 2.5, 1.2)]
    t = GRID[1:]
    left = convolve_all(ds, t).values
    right = convolve_all([ds[1], ds[2], ds[0]], t).values
    assert np.max(np.abs(left - right)) <= 1e-9


def test_tabulated_convolution_has_unit_mass():
    ds = [component_density("gamma", 1.5, 1.0), component_density("gamma", 0.3, 2.0)]
    table = np.linspace(0.0, 60.0, 2001)
    conv = convolve_all(ds, table)
    # integrate the interpolant, with the t**lead factor as the quadrature weight
    mass, _ = integrate.quad(lambda u: float(conv.smooth(u)), 0.0, 60.0, weight="alg",
                             wvar=(conv.lead, 0.0), limit=200)
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_sampler_is_deterministic():
    spec = SumDistribution((gamma(0.5, 2), exponential(1)))
    a, b = sample_sum(spec, 1000, 99), sample_sum(spec, 1000, 99)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_sum(spec, 1000, 100))


@pytest.mark.parametrize(
    "comps, mean, var",
    [
        ((exponential(2),), 0.5, 0.25),
        ((erlang(3, 1),), 3.0, 3.0),
        ((gamma(0.5, 2), exponential(1)), 1.25, 0.125 + 1.0),
    ],
)
def test_sample_means(comps, mean, var):
    n = 10 ** 6
    x = sample_sum(SumDistribution(comps), n, 7)
    assert abs(x.mean() - mean) <= 4 * math.sqrt(var / n)


def test_sampler_validates_size():
    with pytest.raises(ValueError):
        sample_sum(SumDistribution((exponential(1),)), 0, 1)


def test_check_grid_avoids_origin_for_small_shapes():
    assert check_grid(SumDistribution((exponential(1), exponential(2)))).points[0] == 0.0
    assert check_grid(SumDistribution((gamma(0.5, 1), exponential(2)))).points[0] > 0.0


@pytest.mark.parametrize(
    "comps, tol",
    [
        ((exponential(1), exponential(2)), 1e-7),
        ((erlang(3, 2), erlang(1, 1)), 1e-7),
        ((gamma(1.5, 1), gamma(0.5, 2), gamma(2, 3)), 1e-6),
    ],
)
def test_check_spec_passes(comps, tol):
    rep = check_spec(SumDistribution(comps), tol_abs=tol)
    assert isinstance(rep, OracleReport)
    assert rep.verdict == "pass"
    assert 0.0 <= rep.max_abs_err <= tol
    assert rep.points_checked == 41


def test_check_spec_with_monte_carlo():
    rep = check_spec(SumDistribution((gamma(0.5, 2), exponential(1))), mc_n=200_000, seed=3)
    assert rep.verdict == "pass"
    assert rep.mc_samples == 200_000
    assert rep.mc_max_z <= rep.mc_z_limit


def test_check_spec_fails_on_impossible_tolerance():
    rep = check_spec(SumDistribution((erlang(3, 2), exponential(1))), tol_abs=1e-300)
    assert rep.verdict == "fail"
    assert rep.to_dict()["verdict"] == "fail"


def test_check_spec_on_custom_grid():
    grid = EvalGrid((0.5, 1.0, 2.0))
    rep = check_spec(SumDistribution((erlang(2, 1), erlang(2, 3))), grid)
    assert rep.points_checked == 3 and rep.verdict == "pass"
