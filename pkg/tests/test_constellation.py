import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_pnc.constellation import (
    Constellation,
    difference_set,
    effective_constellation,
    gray_code,
    make_psk,
    min_distance,
    psk_min_distance,
    psk_points,
)

finite = st.floats(-3, 3, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def brute_min_distance(c, h_a, h_b):
    pts = [h_a * c.points[a] + h_b * c.points[b] for a in range(c.M) for b in range(c.M)]
    return min(abs(p - q) for p, q in itertools.combinations(pts, 2))


@pytest.mark.parametrize("M", [2, 4, 8, 16])
def test_psk_unit_energy_distinct_and_gray(M):
    c = make_psk(M)
    x = c.array
    assert np.allclose(np.abs(x), 1.0, atol=1e-12)
    assert min(abs(p - q) for p, q in itertools.combinations(x, 2)) > 1e-6
    assert 2 ** c.bits_per_symbol == M
    for k in range(M):
        # neighbouring points differ in one bit
        assert bin(c.labels[k] ^ c.labels[(k + 1) % M]).count("1") == 1


def test_bpsk_points_are_antipodal_on_imaginary_axis():
    x = make_psk(2).array
    assert np.allclose(x, [1j, -1j])


def test_qpsk_points():
    x = make_psk(4).array
    expected = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / math.sqrt(2)
    assert np.allclose(x, expected)


@pytest.mark.parametrize("M", [0, 1, 3, 6, 32])
def test_make_psk_rejects_unsupported_orders(M):
    with pytest.raises(ValueError):
        make_psk(M)


def test_psk_points_any_order_and_min_distance():
    for L in range(2, 9):
        x = psk_points(L)
        d = min(abs(p - q) for p, q in itertools.combinations(x, 2))
        assert d == pytest.approx(psk_min_distance(L), abs=1e-12)
    with pytest.raises(ValueError):
        psk_points(0)


def test_gray_code_is_a_permutation():
    assert sorted(gray_code(k) for k in range(16)) == list(range(16))


def test_json_round_trip(qpsk):
    d = json.loads(qpsk.to_json())
    assert set(d) == {"M", "points", "labels"}
    assert Constellation.from_dict(d) == qpsk


def test_constellation_validation():
    with pytest.raises(ValueError):
        Constellation(3, (1, 1j, -1), (0, 1, 2))
    with pytest.raises(ValueError):
        Constellation(2, (1, -1), (0, 0))


def test_qpsk_difference_set(qpsk):
    # oracle: enumerate 16 ordered pairs with a coarse rounding key
    x = qpsk.array
    oracle = {(round((p - q).real, 6), round((p - q).imag, 6)) for p in x for q in x}
    ds = difference_set(qpsk)
    assert len(ds) == len(oracle) == 9
    mags = sorted({round(abs(d), 9) for d in ds})
    assert mags == [0.0, round(math.sqrt(2), 9), 2.0]


@pytest.mark.parametrize("M", [2, 4, 8])
def test_difference_set_negation_closed_with_zero(M):
    ds = difference_set(make_psk(M))
    assert any(abs(d) < 1e-12 for d in ds)
    for d in ds:
        assert min(abs(-d - e) for e in ds) < 1e-9


def test_bpsk_difference_set():
    ds = difference_set(make_psk(2))
    assert len(ds) == 3


def test_effective_constellation(qpsk):
    eff = effective_constellation(qpsk, 0.7 + 0.2j, -0.3 + 1.1j)
    assert len(eff) == 16
    assert [pair for pair, _ in eff] == [(a, b) for a in range(4) for b in range(4)]
    pts = [p for _, p in eff]
    assert min(abs(p - q) for p, q in itertools.combinations(pts, 2)) > 1e-6
    # H_B = 0 leaves only M distinct points
    pts0 = {(round(p.real, 9), round(p.imag, 9)) for _, p in effective_constellation(qpsk, 1, 0)}
    assert len(pts0) == 4
    # at a singular state two points coincide
    pts1 = [p for _, p in effective_constellation(qpsk, 1, 1j)]
    assert min(abs(p - q) for p, q in itertools.combinations(pts1, 2)) < 1e-9


def test_min_distance_examples(qpsk):
    assert min_distance(qpsk, 1, 1) == pytest.approx(0, abs=1e-12)
    # H_B = 0 merges (x_A, x_B) with (x_A, x'_B): the relay sees only M points
    assert min_distance(qpsk, 1, 0) == brute_min_distance(qpsk, 1, 0) == 0
    # the closest distinct relay points then differ only in x_A
    assert min_distance(qpsk, 1, 1e-12) == pytest.approx(0, abs=1e-11)
    assert min_distance(qpsk, 0, 0) == 0


@settings(max_examples=60, deadline=None)
@given(cplx, cplx)
def test_min_distance_matches_brute_force(h_a, h_b):
    c = make_psk(4)
    assert min_distance(c, h_a, h_b) == pytest.approx(brute_min_distance(c, h_a, h_b), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(cplx, cplx, cplx)
def test_min_distance_scales(h_a, h_b, a):
    c = make_psk(4)
    assert min_distance(c, a * h_a, a * h_b) == pytest.approx(abs(a) * min_distance(c, h_a, h_b), abs=1e-9)
