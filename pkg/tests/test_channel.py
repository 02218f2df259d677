import math

import numpy as np
import pytest

from adaptive_pnc.channel import (
    ChannelRealization,
    RicianParams,
    SerEstimate,
    SimulationConfig,
    complex_noise,
    end_node_decode,
    estimate_pairwise,
    relay_ml_decode,
    sample_rician,
    simulate_batch,
    simulate_ser,
)
from adaptive_pnc.constellation import psk_points
from adaptive_pnc.netmap import ClusterMap, xor_map
from adaptive_pnc.schemes import make_policy


def test_rician_moments():
    rng = np.random.default_rng(0)
    h = sample_rician(0, rng, 10**6)
    assert abs(h.mean()) < 5e-3
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1, abs=5e-3)
    h = sample_rician(RicianParams(4), rng, 10**6)
    se = h.real.std() / 1000
    assert abs(h.real.mean() - math.sqrt(0.8)) < 3 * se
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1, abs=5e-3)
    assert np.all(sample_rician(math.inf, rng, 5) == 1)


def test_rician_params_validation():
    with pytest.raises(ValueError):
        RicianParams(-1)
    with pytest.raises(ValueError):
        RicianParams(1, los_phase=0.5)


def test_noise_variance():
    z = complex_noise(0.25, np.random.default_rng(1), 10**6)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(0.25, rel=1e-2)


def test_realization_fade_state():
    r = ChannelRealization(2, 1 + 1j, 1, 1)
    assert r.fade_state == 0.5 + 0.5j


def test_relay_decode_noiseless(qpsk):
    x = qpsk.array
    h_a, h_b = 0.8 - 0.3j, 0.4 + 0.9j
    for a in range(4):
        for b in range(4):
            assert relay_ml_decode(qpsk, h_a, h_b, h_a * x[a] + h_b * x[b]) == (a, b)


def test_relay_decode_tie_breaks_row_major(qpsk):
    x = qpsk.array
    # at z = 1 the pairs (a, b) and (b, a) collide; the smaller row wins
    y = x[3] + x[0]
    assert relay_ml_decode(qpsk, 1, 1, y) == (0, 3)


def test_relay_decode_at_vanishing_snr(qpsk):
    rng = np.random.default_rng(2)
    n = 200000
    a, b = rng.integers(0, 4, n), rng.integers(0, 4, n)
    h_a, h_b = sample_rician(4, rng, n), sample_rician(4, rng, n)
    x = qpsk.array
    y = h_a * x[a] + h_b * x[b] + complex_noise(1e3, rng, n)
    a_r, b_r = relay_ml_decode(qpsk, h_a, h_b, y)
    err = np.mean((a_r != a) | (b_r != b))
    assert err == pytest.approx(1 - 1 / 16, abs=0.01)


def test_end_node_decode():
    m = xor_map(4)
    pts = psk_points(4)
    for own in range(4):
        for partner in range(4):
            y = 0.7j * pts[m.labels[own][partner]]
            assert end_node_decode(m, pts, own, 0.7j, y) == partner
            assert end_node_decode(m, pts, own, 0.7j, y) == m.labels[own][partner] ^ own
    # y on another broadcast point decodes to the partner carrying that label
    assert end_node_decode(m, pts, 2, 1, pts[1]) == m.labels[2].index(1)
    with pytest.raises(ValueError):
        end_node_decode(ClusterMap(((0,) * 4,) * 4), pts, 0, 1, 1)


def test_ser_estimate_properties():
    e = SerEstimate(30, 1000, 5, 7, 10, 14, 2)
    assert e.ser == 0.01
    assert e.stderr == pytest.approx(math.sqrt(0.01 * 0.99 / 1000))
    assert e.ber == 14 / 4000


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig("fixed-xor", ())
    with pytest.raises(ValueError):
        SimulationConfig("fixed-xor", (10,), trial_budget=0)


def test_simulate_rejects_mismatch():
    cfg = SimulationConfig("fixed-xor", (10,), trial_budget=1000)
    with pytest.raises(ValueError):
        simulate_ser(cfg, make_policy("fixed-modulo"))


def test_batch_counts_consistent(qpsk_library):
    rng = np.random.default_rng(5)
    ea, eb, eu, bits = simulate_batch(make_policy("adaptive-all", library=qpsk_library), 4, 10.0, 20000, rng)
    assert max(ea, eb) <= eu <= ea + eb
    assert bits >= ea + eb


def test_noise_only_regime():
    cfg = SimulationConfig("adaptive-all", (-30.0,), trial_budget=100000, target_errors=10**9, seed=4)
    (e,) = simulate_ser(cfg, make_policy("adaptive-all"))
    # each node guesses its partner uniformly, independently of the other
    assert e.errors_a / e.trials == pytest.approx(1 - 1 / 4, abs=0.01)
    assert e.errors_b / e.trials == pytest.approx(1 - 1 / 4, abs=0.01)
    assert e.ser == pytest.approx(1 - 1 / 16, abs=0.01)


def test_determinism_and_worker_independence():
    cfg = SimulationConfig("fixed-modulo", (5.0, 10.0, 15.0), trial_budget=60000, target_errors=300, seed=9)
    p = make_policy("fixed-modulo")
    a = simulate_ser(cfg, p)
    assert a == simulate_ser(cfg, p)
    assert a == simulate_ser(cfg, p, workers=2)
    other = simulate_ser(SimulationConfig("fixed-modulo", (5.0, 10.0, 15.0), trial_budget=60000, target_errors=300, seed=10), p)
    assert a != other


def test_early_stopping():
    cfg = SimulationConfig("fixed-modulo", (0.0,), trial_budget=10**7, target_errors=100, batch_size=1000)
    (e,) = simulate_ser(cfg, make_policy("fixed-modulo"))
    assert e.trials == 1000 and e.errors_union >= 100


def test_ser_decreases_with_snr():
    cfg = SimulationConfig("adaptive-dominant", (0.0, 10.0, 20.0, 30.0), trial_budget=400000, target_errors=400, seed=1)
    r = simulate_ser(cfg, make_policy("adaptive-dominant"))
    for lo, hi in zip(r, r[1:]):
        assert hi.ser <= lo.ser + 3 * math.hypot(lo.stderr, hi.stderr)


def test_pairwise_importance_matches_plain_monte_carlo(qpsk_library):
    cfg = SimulationConfig("fixed-modulo", (15.0,), seed=3)
    p = make_policy("fixed-modulo")
    for sent, dec in [((0, 2), (1, 3)), ((0, 0), (0, 1))]:
        (imp,) = estimate_pairwise(cfg, sent, dec, p, 400000, importance=True)
        (mc,) = estimate_pairwise(cfg, sent, dec, p, 400000, importance=False)
        assert imp.prob == pytest.approx(mc.prob, abs=3 * math.hypot(imp.stderr, mc.stderr))


def test_pairwise_intra_cluster_is_zero(qpsk_library):
    # s = 1 pairs are clustered by the xor map, so the event never counts
    cfg = SimulationConfig("fixed-xor", (15.0,), seed=3)
    (e,) = estimate_pairwise(cfg, (0, 2), (2, 0), make_policy("fixed-xor"), 20000)
    assert e.prob == 0


def test_pairwise_rejects_identical_pairs():
    with pytest.raises(ValueError):
        estimate_pairwise(SimulationConfig("fixed-xor", (15.0,)), (0, 1), (0, 1), make_policy("fixed-xor"))
