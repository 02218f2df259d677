import numpy as np
import pytest

from adaptive_pnc.netmap import modulo_map, xor_map
from adaptive_pnc.schemes import SCHEMES, make_policy


def test_fixed_policies():
    for name, m in [("fixed-modulo", modulo_map(4)), ("fixed-xor", xor_map(4))]:
        p = make_policy(name)
        assert not p.adaptive and p.fixed_map == m
        assert np.all(p.choose([0.3, 1, 2j]) == 0)
        assert p.removed_states == ()


def test_removed_state_sets(qpsk_library):
    def removed(name):
        return {complex(round(s.real, 9), round(s.imag, 9)) for s in make_policy(name, library=qpsk_library).removed_states}

    assert len(removed("adaptive-all")) == 12
    assert removed("adaptive-dominant") == {1, 0.5 + 0.5j, 0.5 - 0.5j, 1 + 1j, 1 - 1j}
    assert removed("adaptive-only-s1") == {1}
    assert len(removed("adaptive-all-but-s1")) == 11 and 1 not in removed("adaptive-all-but-s1")


def test_partial_policy_uses_baseline_outside_its_regions(qpsk_library):
    p = make_policy("adaptive-only-s1", library=qpsk_library)
    assert p.maps[-1] == modulo_map(4)
    assert p.maps[p.choose(1)[0]] == qpsk_library.maps[qpsk_library.index_of(1)]
    assert p.maps[p.choose(1j)[0]] == modulo_map(4)


def test_tables(qpsk_library):
    p = make_policy("adaptive-all", library=qpsk_library)
    assert p.label_table.shape == (13, 4, 4)
    assert p.bc_table.shape == (13, 5)
    assert p.max_clusters == 5
    for k, m in enumerate(p.maps):
        assert np.allclose(np.abs(p.bc_table[k, :m.n_clusters]), 1)


def test_unknown_scheme():
    with pytest.raises(ValueError):
        make_policy("adaptive-nothing")
    with pytest.raises(ValueError):
        make_policy("mystery")
    assert len(SCHEMES) == 6
