import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from ceazf.analysis import second_conditional_pdf
from ceazf.errors import GeometryError, ParameterError
from ceazf.geometry import (
    Window,
    associate,
    build_typical_context,
    default_window_radius,
    nearest_two,
    neighbor_count,
    sample_kprime,
    sample_network,
    sample_ppp,
)

LAM = 1e-6


def test_zero_intensity_is_empty():
    assert sample_ppp(0.0, Window(1000.0), 1).shape == (0, 2)


def test_ppp_mean_count():
    w = Window(30_000.0)
    counts = [len(sample_ppp(LAM, w, s)) for s in range(10_000)]
    expected = LAM * np.pi * 30_000.0**2
    assert expected == pytest.approx(2827.43, abs=0.01)
    # standard error of the mean is sqrt(2827/1e4) ~ 0.53
    assert np.mean(counts) == pytest.approx(expected, abs=2.5)


def test_ppp_seed_determinism():
    w = Window(5000.0)
    np.testing.assert_array_equal(sample_ppp(LAM, w, 42), sample_ppp(LAM, w, 42))


def test_ppp_points_inside_window():
    w = Window(2000.0, center=(500.0, -300.0))
    pts = sample_ppp(1e-5, w, 3)
    assert len(pts) > 0 and np.all(w.contains(pts))


@pytest.mark.parametrize("bad", [-1.0, np.inf, np.nan])
def test_ppp_rejects_bad_density(bad):
    with pytest.raises(ParameterError):
        sample_ppp(bad, Window(10.0))


def test_window_validation():
    with pytest.raises(ParameterError):
        Window(0.0)


def test_default_radius_scales_with_cell_size():
    assert default_window_radius(1e-6) == pytest.approx(30_000.0)
    assert default_window_radius(4e-6) == pytest.approx(15_000.0)


def test_associate_single_bs_is_an_error():
    with pytest.raises(GeometryError):
        associate([[1.0, 2.0]], [0.0, 0.0])


def test_associate_two_points():
    i, t, j, s = associate([[100.0, 0.0], [0.0, 200.0]], [0.0, 0.0])
    assert (i, t, j, s) == (0, 100.0, 1, 200.0)


def test_associate_breaks_ties_by_index():
    i, t, j, s = associate([[0.0, 50.0], [50.0, 0.0], [0.0, -50.0]], [0.0, 0.0])
    assert (i, j) == (0, 1) and t == s == 50.0


def test_associate_matches_exhaustive_sort():
    rng = np.random.default_rng(0)
    bs = rng.uniform(-1e4, 1e4, size=(500, 2))
    for ue in rng.uniform(-1e4, 1e4, size=(20, 2)):
        d = np.hypot(*(bs - ue).T)
        order = np.argsort(d)
        i, t, j, s = associate(bs, ue)
        assert (i, j) == (order[0], order[1])
        assert t == pytest.approx(d[order[0]]) and s == pytest.approx(d[order[1]])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(0, 10_000))
def test_nearest_two_ordering_property(n_bs, seed):
    rng = np.random.default_rng(seed)
    bs = rng.uniform(-1, 1, size=(n_bs, 2))
    ue = rng.uniform(-1, 1, size=(15, 2))
    i, t, j, s = nearest_two(bs, ue)
    assert np.all(t <= s) and np.all(i != j)
    d = np.hypot(*(bs[None, :, :] - ue[:, None, :]).transpose(2, 0, 1))
    np.testing.assert_allclose(t, d.min(axis=1))
    np.testing.assert_allclose(s, np.sort(d, axis=1)[:, 1])


def test_neighbor_count_empty_users():
    assert neighbor_count([[0, 0], [1, 1]], np.empty((0, 2)), 0) == 0


def test_neighbor_count_matches_enumeration():
    rng = np.random.default_rng(5)
    bs = rng.uniform(0, 1000, size=(5, 2))
    ue = rng.uniform(0, 1000, size=(20, 2))
    for b in range(5):
        expected = sum(int(np.argsort(np.hypot(*(bs - u).T))[1] == b) for u in ue)
        assert neighbor_count(bs, ue, b) == expected


def test_neighbor_count_rejects_bad_index():
    with pytest.raises(ParameterError):
        neighbor_count([[0, 0], [1, 1]], [[0.5, 0.5]], 2)


def _contexts(n, K=10, seed=0):
    w = Window(default_window_radius(LAM))
    out = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        out.append(build_typical_context(sample_network(LAM, w, rng), K, rng))
    return out


def test_typical_context_structure():
    for ctx in _contexts(5):
        assert 0 < ctx.t <= ctx.s
        assert ctx.bs_distances[0] == pytest.approx(ctx.t) and ctx.bs_distances[1] == pytest.approx(ctx.s)
        assert np.all(np.diff(ctx.bs_distances) >= 0)
        served = ctx.served(0)
        assert len(served) == ctx.K and ctx.TYPICAL in served
        assert ctx.ue_second[ctx.TYPICAL] == 1
        assert len(ctx.cell_mates) == ctx.K - 1
        # every scheduled user of the serving cell is closer to it than to any other BS
        d_own = ctx.link_distance(0, served)
        for b in range(1, 6):
            assert np.all(d_own <= ctx.link_distance(b, served) + 1e-9)
        nb = ctx.neighbors(0)
        assert np.all(np.diff(ctx.link_distance(0, nb)) >= 0)


def test_nearest_distance_law_ppp():
    rng = np.random.default_rng(7)
    w = Window(5000.0)  # P(no BS within 5 km) = exp(-25 pi)
    t = np.array([np.hypot(*sample_ppp(LAM, w, rng).T).min() for _ in range(100_000)])
    cdf = lambda r: 1 - np.exp(-LAM * np.pi * r**2)
    assert stats.kstest(t, cdf).statistic < 0.01


@pytest.mark.slow
def test_nearest_distance_law():
    t = np.array([c.t for c in _contexts(3000, K=2, seed=1)])
    cdf = lambda r: 1 - np.exp(-LAM * np.pi * r**2)
    assert stats.kstest(t, cdf).statistic < 0.03


@pytest.mark.slow
def test_second_distance_conditional_law():
    ctxs = _contexts(3000, K=2, seed=2)
    # v = lambda pi (s^2 - t^2) is Exp(1) independent of t under the conditional law
    v = np.array([LAM * np.pi * (c.s**2 - c.t**2) for c in ctxs])
    assert stats.kstest(v, "expon").statistic < 0.03
    # probability integral transform through the conditional density, then a chi-square on deciles
    u = np.array([integrate.quad(second_conditional_pdf, c.t, c.s, args=(c.t, LAM))[0] for c in ctxs[:1000]])
    observed = np.histogram(u, np.linspace(0, 1, 11))[0]
    assert stats.chisquare(observed).pvalue > 1e-3


@pytest.mark.slow
def test_mean_kprime_near_k():
    draws = [sample_kprime(10, LAM, np.random.default_rng([3, i])) for i in range(1500)]
    assert np.mean(draws) == pytest.approx(10, rel=0.05)
