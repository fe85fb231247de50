import numpy as np
import pytest
from scipy import stats

from ceazf.channel import ChannelSet, CsiSpec, PilotConfig, sample_fading
from ceazf.errors import ConsistencyError, ParameterError
from ceazf.geometry import Window, build_typical_context, default_window_radius, sample_network
from ceazf.precoding import CEA_ZF, CEU_ZF, ExtendedChannelMatrix, cea_zf, ceu_zf
from ceazf.sir import (
    SirSample,
    _bartlett_blocks,
    _power_matrices,
    compute_sir,
    explicit_sir,
    reduced_sir,
    sample_effective_fading,
)

LAM = 1e-6
PERFECT = CsiSpec("perfect", PilotConfig(alpha=4.0))


def _ctx(seed, K=6):
    rng = np.random.default_rng(seed)
    net = sample_network(LAM, Window(default_window_radius(LAM)), rng)
    return build_typical_context(net, K, rng), rng


def test_effective_fading_moments():
    g = sample_effective_fading(10, np.random.default_rng(0), size=1_000_000)
    assert np.mean(g) == pytest.approx(1.0, rel=0.003)
    assert np.var(g) == pytest.approx(0.1, rel=0.02)


def test_effective_fading_k1_is_exponential():
    g = sample_effective_fading(1, np.random.default_rng(1), size=100_000)
    assert stats.kstest(g, "expon").statistic < 0.01


def test_effective_fading_rejects_k0():
    with pytest.raises(ParameterError):
        sample_effective_fading(0, np.random.default_rng())


def test_sample_from_parts():
    s = SirSample.from_parts(CEU_ZF, 2.0, 0.5, 0.5)
    assert s.value == 2.0 and not s.infinite
    inf = SirSample.from_parts(CEU_ZF, 1.0, 0.0, 0.0)
    assert inf.infinite and inf.value == np.inf
    with pytest.raises(ParameterError):
        SirSample.from_parts(CEU_ZF, 1.0, -1.0, 0.0)


def test_perfect_csi_ceu_has_no_intra_cell_interference():
    ctx, rng = _ctx(2)
    for scheme, smp in explicit_sir(ctx, 32, 4.0, PERFECT, rng).items():
        assert smp.intra < 1e-12 * smp.signal


def test_perfect_csi_cea_nulls_typical_at_second_bs():
    for seed in range(10):
        ctx, rng = _ctx(seed)
        smp = explicit_sir(ctx, 64, 4.0, PERFECT, rng, schemes=(CEA_ZF,))[CEA_ZF]
        if smp.typical_nulled:
            assert smp.second_term < 1e-12 * smp.signal
            return
    pytest.fail("typical user was never nulled in ten scenes")


def test_compute_sir_matches_hand_expansion():
    # five BSs, two served users each, the typical user (id 0) served by BS 0
    rng = np.random.default_rng(3)
    N, alpha = 8, 4.0
    chans = ChannelSet(N, alpha)
    served = {0: [0, 1], 1: [2, 3], 2: [4, 5], 3: [6, 7], 4: [8, 9]}
    dist = {b: rng.uniform(100, 1000, size=10) for b in served}
    for b, d in dist.items():
        x = sample_fading(10, N, rng)
        for u in range(10):
            chans.add(b, u, x[u], x[u], d[u] ** -alpha, 0.0)
    precs = {}
    for b, ids in served.items():
        p = ceu_zf(chans.estimated_matrix(b, ids))
        p.ue_ids = np.array(ids)
        precs[b] = p
    smp = compute_sir(None, chans, precs)

    signal = intra = out = 0.0
    for b, p in precs.items():
        h = np.sqrt(dist[b][0] ** -alpha) * chans.true_fading[(b, 0)]
        for k in range(p.n_streams):
            v = abs(np.sum(h * p.columns[:, k])) ** 2
            if b == 0 and k == 0:
                signal += v
            elif b == 0:
                intra += v
            else:
                out += v
    assert smp.signal == pytest.approx(signal, rel=1e-12)
    assert smp.intra == pytest.approx(intra, rel=1e-9, abs=1e-30)
    assert smp.out == pytest.approx(out, rel=1e-12)
    assert smp.value == pytest.approx(signal / (intra + out), rel=1e-9)


def test_compute_sir_requires_serving_precoder():
    with pytest.raises(ConsistencyError):
        compute_sir(None, ChannelSet(4, 4.0), {})


def test_bartlett_blocks_match_wishart_inverse():
    # trace of the served block of S^{-1}, S complex Wishart with K + kp rows
    rng = np.random.default_rng(4)
    N, K, kp, n = 12, 3, 4, 20_000
    L_sn, L_ss = _bartlett_blocks(N, K, np.full(n, kp), rng)
    gram = L_sn @ np.conj(np.swapaxes(L_sn, 1, 2)) + L_ss @ np.conj(np.swapaxes(L_ss, 1, 2))
    cea = np.trace(np.linalg.inv(L_ss @ np.conj(np.swapaxes(L_ss, 1, 2))), axis1=1, axis2=2).real
    ceu = np.trace(np.linalg.inv(gram), axis1=1, axis2=2).real
    direct_cea, direct_ceu = [], []
    for _ in range(n):
        X = sample_fading(K + kp, N, rng)
        Sinv = np.linalg.inv(X @ X.conj().T)
        direct_cea.append(np.trace(Sinv[:K, :K]).real)
        direct_ceu.append(np.trace(np.linalg.inv(X[:K] @ X[:K].conj().T)).real)
    # E[tr] = K / (N - m) with m the row count
    assert np.mean(cea) == pytest.approx(K / (N - K - kp), rel=0.02)
    assert np.mean(direct_cea) == pytest.approx(K / (N - K - kp), rel=0.02)
    assert np.mean(ceu) == pytest.approx(K / (N - K), rel=0.02)
    assert np.mean(direct_ceu) == pytest.approx(K / (N - K), rel=0.02)
    assert stats.ks_2samp(cea, direct_cea).pvalue > 1e-3


def test_power_matrices_zero_neighbors_coincide():
    rng = np.random.default_rng(5)
    d = rng.uniform(100, 500, size=(3, 4))
    P = _power_matrices(16, d, np.zeros(3, dtype=int), 4.0, rng, (CEU_ZF, CEA_ZF))
    np.testing.assert_allclose(P[CEU_ZF], P[CEA_ZF], rtol=1e-12)


def test_reduced_sir_same_geometry_outputs():
    ctx, rng = _ctx(6, K=8)
    out = reduced_sir(ctx, 64, 4.0, PERFECT, rng)
    assert set(out) == {CEU_ZF, CEA_ZF}
    for s in out.values():
        assert s.value > 0 and s.intra < 1e-12 * s.signal
    # only the CEA precoder of the second BS can null the typical user
    assert not out[CEU_ZF].typical_nulled
    assert out[CEA_ZF].second_term == 0.0


@pytest.mark.slow
def test_explicit_and_reduced_engines_agree():
    csi = CsiSpec("fixed", PilotConfig(alpha=4.0), 0.1, 0.2)
    exp_, red = {CEU_ZF: [], CEA_ZF: []}, {CEU_ZF: [], CEA_ZF: []}
    for i in range(600):
        ctx, rng = _ctx([11, i], K=6)
        for s, v in explicit_sir(ctx, 24, 4.0, csi, rng).items():
            exp_[s].append(v.value)
        for s, v in reduced_sir(ctx, 24, 4.0, csi, rng).items():
            red[s].append(v.value)
    for s in exp_:
        assert stats.ks_2samp(exp_[s], red[s]).pvalue > 1e-3
        assert np.mean(np.log(exp_[s])) == pytest.approx(np.mean(np.log(red[s])), abs=0.1)
