import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapls import AffineSubspace, Box, GapOperator, IterationState, LineSearchConfig, NonnegativeOrthant, solve
from gapls.linesearch import (
    AffineCache,
    ProjectedLsState,
    StaleCacheError,
    basic_step,
    cached_candidate_residual,
    forward_track,
    golden_section,
    projected_step,
    trigger,
)

seeds = st.integers(0, 2**32 - 1)


def affine_orthant_op(g, m=6, n=12, alphas=(1.5, 1.5), alpha=None):
    A = g.standard_normal((m, n))
    z = g.uniform(0.0, 1.0, n)
    z[: n // 3] = 0.0  # active constraints make the geometry nonsmooth
    C = AffineSubspace(A, A @ z)
    return GapOperator([C, NonnegativeOrthant(n)], alphas, alpha)


# -- trigger ---------------------------------------------------------------


@pytest.mark.parametrize(
    "r, rn, aligned, printed",
    [
        ((1.0, 0.0), (2.0, 0.0), True, False),
        ((1.0, 0.0), (0.0, 1.0), False, True),
        ((1.0, 0.0), (1.0, 0.02), False, True),
        ((1.0, 0.0), (1.0, 0.01), True, False),
    ],
)
def test_trigger_rules(r, rn, aligned, printed):
    r, rn = np.array(r), np.array(rn)
    assert trigger(r, rn) is aligned
    assert trigger(r, rn, rule="printed") is printed


def test_trigger_cosine_near_threshold():
    # cos for (1, 0.02) is 1/sqrt(1.0004), just below 1 - 1e-4
    c = 1.0 / np.sqrt(1.0004)
    assert 1 - 2.1e-4 < c < 1 - 1e-4


def test_trigger_zero_residual():
    assert not trigger(np.zeros(2), np.ones(2))
    assert not trigger(np.ones(2), np.zeros(2), rule="printed")


def test_trigger_bad_rule():
    with pytest.raises(ValueError):
        trigger(np.ones(2), np.ones(2), rule="sideways")


# -- forward tracking ------------------------------------------------------


@pytest.mark.parametrize("merit", [None, lambda v: 0.0])
def test_forward_track_accept_all(merit):
    res = forward_track(lambda t: t, 1.0, 1.4, 5.0, lambda v: True, 18, merit)
    assert res.alpha == pytest.approx(1.4**4)
    assert res.count == 4


def test_forward_track_accept_none():
    calls = []
    res = forward_track(lambda t: calls.append(t), 1.0, 1.4, 1e9, lambda v: False, 7)
    assert res.alpha is None and res.count == 7 == len(calls)


def test_forward_track_stops_after_first_failure():
    # passes on (1.4, 2.744], fails elsewhere
    res = forward_track(lambda t: t, 1.0, 1.4, 100.0, lambda t: 1.5 < t < 2.8, 18)
    assert res.alpha == pytest.approx(1.4**3)
    assert res.count == 4


def test_forward_track_merit_keeps_minimum():
    phi = lambda t: (t - 2.0) ** 2
    res = forward_track(phi, 1.0, 1.4, 100.0, lambda v: True, 18, merit=lambda v: v)
    assert res.alpha == pytest.approx(1.96)  # closest grid point to 2
    assert res.count == 3  # 2.744 shows the increase


def test_forward_track_bad_factor():
    with pytest.raises(ValueError):
        forward_track(lambda t: t, 1.0, 1.0, 2.0, lambda v: True, 3)


# -- basic line search ------------------------------------------------------


def halving_operator(n=4):
    # the point {0} relaxed by 1/2: S x = x / 2
    return GapOperator([AffineSubspace(np.eye(n), np.zeros(n))], (0.5,), 0.5)


@pytest.mark.parametrize("tracking", ["best", "largest"])
@pytest.mark.parametrize("use_cache", [False, True])
def test_basic_step_linear_contraction(tracking, use_cache):
    op = halving_operator()
    x = np.array([1.0, -2.0, 0.5, 3.0])
    cfg = LineSearchConfig(alpha_max=1.9, tracking=tracking)
    state = IterationState.at(op, x)
    np.testing.assert_allclose(op.S(x), x / 2)
    cache = None
    if use_cache:
        cache = AffineCache.start(op, x)
        cache.set_direction(op, state.r)
    out = basic_step(op, state, cfg, cache)

    # closed form: r(x + t r) has norm |1 - t/2| ||x|| / 2, falling for t < 2
    grid = op.alpha * 1.4 ** np.arange(1, 19)
    grid = grid[grid <= 1.9]
    bound = (1 - cfg.epsilon) * np.linalg.norm(state.r_nom)
    scan = [t for t in grid if abs(1 - t / 2) * np.linalg.norm(x) / 2 <= bound]
    assert out.accepted
    assert out.alpha_k == pytest.approx(scan[-1])
    assert out.alpha_k == pytest.approx(0.5 * 1.4**3)
    np.testing.assert_allclose(out.next_x, x + out.alpha_k * state.r)
    direct = np.linalg.norm(op.residual(out.next_x))
    assert out.next_residual_norm == pytest.approx(direct, rel=1e-9)


def test_basic_step_fallback():
    op = halving_operator()
    x = np.ones(4)
    state = IterationState.at(op, x)
    # eps close to 1 makes the bound unreachable
    out = basic_step(op, state, LineSearchConfig(epsilon=0.999, alpha_max=1.9))
    assert not out.accepted
    assert out.alpha_k == op.alpha
    np.testing.assert_array_equal(out.next_x, state.x_nom)


def test_basic_step_rejects_golden():
    op = halving_operator()
    with pytest.raises(ValueError):
        basic_step(op, IterationState.at(op, np.ones(4)), LineSearchConfig(strategy="golden_section"))


def test_alpha_max_below_alpha():
    with pytest.raises(ValueError):
        LineSearchConfig(alpha_max=0.1).resolve_alpha_max(0.5)


@pytest.mark.parametrize("kw", [{"epsilon": 0.0}, {"epsilon": 1.0}, {"tracking_factor": 1.0}, {"strategy": "x"}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        LineSearchConfig(**kw)


# -- cached evaluation ------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_cached_residual_matches_direct(seed):
    g = np.random.default_rng(seed)
    op = affine_orthant_op(g)
    x = g.standard_normal(op.dim)
    r = op.residual(x)
    cache = AffineCache.start(op, x)
    cache.set_direction(op, r)
    for t in g.uniform(op.alpha, 20 * op.alpha, 10):
        xt = x + t * r
        direct = np.linalg.norm(op.S(xt) - xt)
        cached = cached_candidate_residual(op, cache, x, r, t)
        assert cached == pytest.approx(direct, rel=1e-9, abs=1e-12)


def test_cached_at_nominal_step(rng):
    op = affine_orthant_op(rng)
    state = IterationState.at(op, rng.standard_normal(op.dim))
    cache = AffineCache.start(op, state.x)
    cache.set_direction(op, state.r)
    got = cached_candidate_residual(op, cache, state.x, state.r, op.alpha)
    assert got == pytest.approx(np.linalg.norm(state.r_nom), rel=1e-12)


def test_cache_update_reproduces_S1(rng):
    op = affine_orthant_op(rng)
    x = rng.standard_normal(op.dim)
    cache = AffineCache.start(op, x)
    for _ in range(5):
        r = op.residual(x)
        cache.set_direction(op, r)
        t = rng.uniform(op.alpha, 5.0)
        cache.advance(t)
        x = x + t * r
        fresh = op.projectors[0](x)
        np.testing.assert_allclose(cache.S1x(), fresh, atol=1e-10 * (1 + np.linalg.norm(x)))


def test_cache_staleness(rng):
    op = affine_orthant_op(rng)
    x = rng.standard_normal(op.dim)
    cache = AffineCache.start(op, x)
    r = op.residual(x)
    with pytest.raises(StaleCacheError):
        cached_candidate_residual(op, cache, x, r, 1.0)
    cache.set_direction(op, r)
    with pytest.raises(StaleCacheError):
        cached_candidate_residual(op, cache, x, r, 1.0, k=3)


def test_cached_candidates_use_no_affine_solves(rng):
    op = affine_orthant_op(rng)
    C = op.sets[0]
    x = rng.standard_normal(op.dim)
    r = op.residual(x)
    cache = AffineCache.start(op, x)
    cache.set_direction(op, r)
    before = C.solves
    for t in np.linspace(op.alpha, 10.0, 25):
        cached_candidate_residual(op, cache, x, r, t)
    assert C.solves == before


def test_first_projection_from_cache(rng):
    op = affine_orthant_op(rng)
    x = rng.standard_normal(op.dim)
    cache = AffineCache.start(op, x)
    np.testing.assert_allclose(cache.first_projection(op, x), op.sets[0].project(x), atol=1e-12)


# -- projected line search ---------------------------------------------------


def axis_and_halfplane(a2=1.5):
    C = AffineSubspace([[0.0, 1.0]], [0.0])  # the x-axis
    D = Box([-np.inf, 1.0], [np.inf, np.inf])  # x2 >= 1
    return GapOperator([C, D], (1.0, a2), 0.5)


def test_projected_residual_identity_example():
    op = axis_and_halfplane()
    xp = np.zeros(2)
    np.testing.assert_allclose(op.residual(xp), [0.0, 1.5])
    assert 1.5 * op.sets[1].distance(xp) == pytest.approx(1.5)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_projected_identity_and_convexity(seed):
    g = np.random.default_rng(seed)
    a = float(g.uniform(0.2, 2.0))
    op = affine_orthant_op(g, m=int(g.integers(1, 8)), n=10, alphas=(a, float(g.uniform(0.2, 2.0))), alpha=0.5)
    C, D = op.sets
    a2 = op.config.alphas[1]
    x, r = g.standard_normal(10), g.standard_normal(10)
    for t in g.uniform(0, 10, 3):
        xp = C.project(x + t * r)
        lhs = np.linalg.norm(op.S(xp) - xp)
        assert lhs == pytest.approx(a2 * D.distance(xp), rel=1e-10, abs=1e-14)
    phi = lambda t: D.distance(C.project(x + t * r))
    lo, hi = sorted(g.uniform(-10, 10, 2))
    assert phi(0.5 * (lo + hi)) <= 0.5 * (phi(lo) + phi(hi)) + 1e-9


def test_projected_candidate_in_intersection_accepted():
    op = axis_and_halfplane()
    C = AffineSubspace([[0.0, 1.0]], [1.0])  # the line x2 = 1 lies inside D
    op = GapOperator([C, op.sets[1]], (1.0, 1.5), 0.5)
    state = IterationState.at(op, np.array([0.0, 3.0]))
    pls = ProjectedLsState(1e-300)
    out = projected_step(op, state, pls, LineSearchConfig())
    assert out.accepted and out.next_residual_norm == 0.0
    assert pls.last_ls_iteration == 0 and pls.pending


def test_projected_reference_refresh():
    pls = ProjectedLsState(5.0)
    pls.last_ls_iteration, pls.pending = 3, True
    pls.observe(3, 1.0)
    assert pls.reference_residual_norm == 5.0
    pls.observe(4, 2.0)
    assert pls.reference_residual_norm == 2.0 and not pls.pending
    pls.observe(5, 0.1)
    assert pls.reference_residual_norm == 2.0


def test_projected_needs_affine_first():
    op = GapOperator([NonnegativeOrthant(2), AffineSubspace([[1.0, 1.0]], [1.0])], (1.0, 1.0))
    state = IterationState.at(op, np.ones(2))
    with pytest.raises(ValueError):
        projected_step(op, state, ProjectedLsState(1.0), LineSearchConfig())
    with pytest.raises(ValueError):
        solve(op, np.ones(2), stepper="projected_ls")


# -- golden section ------------------------------------------------------------


def test_golden_quadratic():
    assert golden_section(lambda t: (t - 3) ** 2, 0, 10, tol=1e-6) == pytest.approx(3, abs=1e-6)


def test_golden_nonsmooth():
    assert golden_section(lambda t: abs(t - 2), 0, 5, tol=1e-6) == pytest.approx(2, abs=1e-6)


def test_golden_budget_returns_best():
    calls = []

    def phi(t):
        calls.append(t)
        return (t - 3) ** 2

    t = golden_section(phi, 0, 10, tol=1e-12, max_eval=6)
    assert len(calls) == 6
    assert (t - 3) ** 2 == min((c - 3) ** 2 for c in calls)


@pytest.mark.parametrize("seed", range(5))
def test_golden_matches_grid_on_projected_objective(seed):
    g = np.random.default_rng(seed)
    op = affine_orthant_op(g, m=4, n=10)
    C, D = op.sets
    x = g.standard_normal(10)
    r = op.residual(x)
    base, d = C.project(x), C.apply_linear(r)
    phi = lambda t: D.distance(base + t * d)
    lo, hi = 0.0, 20.0
    grid = np.linspace(lo, hi, 10_000)
    vals = np.array([phi(t) for t in grid])
    t_grid = grid[np.argmin(vals)]
    t_gold = golden_section(phi, lo, hi, tol=1e-8)
    h = grid[1] - grid[0]
    # phi may be flat at its minimum; compare values, then location when the minimizer is unique
    assert phi(t_gold) <= vals.min() + 1e-12
    if np.sum(vals <= vals.min() + 1e-12) == 1:
        assert abs(t_gold - t_grid) <= h
