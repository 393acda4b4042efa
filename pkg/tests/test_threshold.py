import math

import numpy as np
import pytest

from nehari.fibering import N_ZERO, analyze_direction
from nehari.functional import Params
from nehari.grid import (
    Field,
    Grid,
    Pair,
    field_from_function,
    h1_weighted_norm_sq,
    l4_norm4,
    l43_norm,
    pair_norm_sq,
    zero_field,
)
from nehari.threshold import check_source_bound, compute_threshold, estimate_s4

from conftest import build_problem, cached_s4, random_pair


def ratio(grid, vals, lam):
    w = Field(grid, vals)
    return l4_norm4(w) ** 0.25 / math.sqrt(h1_weighted_norm_sq(w, lam))


def test_s4_dominates_trial_function():
    g = Grid(1, (1.0,), (99,))
    s4 = cached_s4(g, 1.0)
    (x,) = g.node_coords()
    assert s4 >= ratio(g, x * (1.0 - x), 1.0)
    assert s4 >= ratio(g, np.sin(math.pi * x), 1.0)


def test_s4_monotone_in_lambda():
    g = Grid(1, (1.0,), (99,))
    assert cached_s4(g, 1.0) >= cached_s4(g, 10.0)


def test_s4_stable_across_seeds_and_refinement():
    g = Grid(1, (1.0,), (199,))
    a = estimate_s4(g, 1.0, seed=0)
    b = estimate_s4(g, 1.0, seed=1)
    assert b == pytest.approx(a, rel=1e-3)  # 3 significant digits
    fine = estimate_s4(Grid(1, (1.0,), (399,)), 1.0, seed=0)
    assert fine == pytest.approx(a, rel=0.02)


def test_s4_deterministic():
    g = Grid(1, (1.0,), (99,))
    assert estimate_s4(g, 1.0, seed=0) == estimate_s4(g, 1.0, seed=0)


def test_s4_warns_on_iteration_cap():
    g = Grid(1, (1.0,), (49,))
    with pytest.warns(RuntimeWarning):
        val = estimate_s4(g, 1.0, seed=0, max_iters=2)
    assert val > 0.0  # best-so-far is still returned


def test_threshold_closed_form():
    # chain vs closed form at mu1 = mu2 = beta = 1
    g = Grid(1, (1.0,), (49,))
    z = zero_field(g)
    params = Params(1.0, 1.0, 1.0, 1.0, 1.0, z, z)
    s4 = 0.337  # any positive value; the identity is algebraic
    rep = compute_threshold(params, g, s4)
    closed = (2.0 / 3.0) * (3.0 * s4**4) ** (-0.5) / (math.sqrt(2.0) * s4)
    assert rep.lambda_threshold == pytest.approx(closed, rel=1e-15)
    assert rep.sup_A_bound == s4**4
    assert rep.alpha == pytest.approx((2.0 / 3.0) * math.sqrt(1.0 / (3.0 * s4**4)), rel=1e-15)


def test_threshold_beta_sign_switch():
    g = Grid(1, (1.0,), (49,))
    z = zero_field(g)
    s4 = 0.34
    pos = compute_threshold(Params(1.0, 1.0, 1.0, 1.0, 3.0, z, z), g, s4)
    neg = compute_threshold(Params(1.0, 1.0, 1.0, 1.0, -0.5, z, z), g, s4)
    assert pos.sup_A_bound == 3.0 * s4**4  # beta dominates when positive
    assert neg.sup_A_bound == 1.0 * s4**4  # cross term dropped when negative


def test_threshold_zero_sources_are_degenerate():
    g = Grid(1, (1.0,), (49,))
    z = zero_field(g)
    rep = compute_threshold(Params(1.0, 1.0, 1.0, 1.0, 0.5, z, z), g, 0.34)
    assert rep.degenerate_sources
    assert not rep.satisfied
    # one zero component is enough to violate the hypothesis
    (x,) = g.node_coords()
    f = Field(g, np.sin(math.pi * x))
    rep = compute_threshold(Params(1.0, 1.0, 1.0, 1.0, 0.5, f, z), g, 0.34)
    assert rep.degenerate_sources and not rep.satisfied


def test_threshold_scaling_in_sources():
    g = Grid(1, (1.0,), (49,))
    (x,) = g.node_coords()
    f = Field(g, np.sin(math.pi * x))
    s4 = cached_s4(g, 1.0)
    big = compute_threshold(Params(1.0, 1.0, 1.0, 1.0, 0.5, f.scaled(100.0), f.scaled(100.0)), g, s4)
    small = compute_threshold(Params(1.0, 1.0, 1.0, 1.0, 0.5, f.scaled(1e-3), f.scaled(1e-3)), g, s4)
    assert big.lambda_threshold == small.lambda_threshold  # bit-identical
    assert big.f_norm == pytest.approx(1e5 * small.f_norm, rel=1e-12)
    assert not big.satisfied
    assert small.satisfied


def test_lambda_depends_only_on_coefficients(rng):
    g = Grid(1, (1.0,), (49,))
    s4 = cached_s4(g, 1.0)
    f1 = Field(g, rng.standard_normal(g.size))
    g1 = Field(g, rng.standard_normal(g.size))
    f2 = Field(g, rng.standard_normal(g.size))
    g2 = Field(g, rng.standard_normal(g.size))
    rep1 = compute_threshold(Params(1.0, 2.0, 1.5, 0.5, 0.7, f1, g1), g, s4)
    rep2 = compute_threshold(Params(1.0, 2.0, 1.5, 0.5, 0.7, f2, g2), g, s4)
    assert rep1.lambda_threshold == rep2.lambda_threshold
    assert rep1.alpha == rep2.alpha and rep1.sup_A_bound == rep2.sup_A_bound


def test_discrete_sobolev_inequality_on_random_fields():
    g = Grid(1, (1.0,), (99,))
    s4 = cached_s4(g, 1.0)
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        vals = rng.standard_normal(g.size)
        w = Field(g, vals)
        assert l4_norm4(w) ** 0.25 <= (1.0 + 1e-9) * s4 * math.sqrt(
            h1_weighted_norm_sq(w, 1.0)
        )


def test_source_bound_no_sources(grid_1d, zero_params, rng):
    p = random_pair(grid_1d, rng)
    unit = p.scaled(1.0 / math.sqrt(pair_norm_sq(p, zero_params)))
    rep = compute_threshold(zero_params, grid_1d, cached_s4(grid_1d, 1.0))
    assert check_source_bound(unit, zero_params, rep)


def test_source_bound_requires_unit_norm(grid_1d, zero_params, rng):
    rep = compute_threshold(zero_params, grid_1d, cached_s4(grid_1d, 1.0))
    with pytest.raises(ValueError):
        check_source_bound(random_pair(grid_1d, rng).scaled(3.0), zero_params, rep)


def test_source_bound_under_smallness(rng):
    grid, params, _s4, rep = build_problem(n=99)
    assert rep.satisfied
    for _ in range(500):
        p = random_pair(grid, rng)
        unit = p.scaled(1.0 / math.sqrt(pair_norm_sq(p, params)))
        assert check_source_bound(unit, params, rep)


def test_source_bound_sharpness_past_threshold():
    # scale the sources up until the aligned direction violates the bound
    grid, params, s4, rep = build_problem(n=99, beta=1.0, rho=0.5)
    from nehari.grid import first_eigenvector

    e = first_eigenvector(grid)
    aligned = Pair(e, e)
    unit = aligned.scaled(1.0 / math.sqrt(pair_norm_sq(aligned, params)))
    violated = False
    scale = 1.0
    for _ in range(8):
        scale *= 2.0
        boosted = Params(
            params.lam1, params.lam2, params.mu1, params.mu2, params.beta,
            params.f.scaled(scale), params.g.scaled(scale),
        )
        boosted_rep = compute_threshold(boosted, grid, s4)
        if not check_source_bound(unit, boosted, boosted_rep):
            assert not boosted_rep.satisfied
            violated = True
            break
    assert violated


def test_no_degenerate_roots_under_smallness(rng):
    grid, params, _s4, rep = build_problem(n=99)
    assert rep.satisfied
    for _ in range(500):
        p = random_pair(grid, rng)
        ana = analyze_direction(p, params)
        assert all(r.branch != N_ZERO for r in ana.roots)
        assert len(ana.roots) >= 1
