import pytest

from adaptive_pnc.constellation import make_psk
from adaptive_pnc.quantizer import estimate_all_deltas
from adaptive_pnc.schemes import full_library
from adaptive_pnc.singular import enumerate_singular_states


@pytest.fixture(scope="session")
def qpsk():
    return make_psk(4)


@pytest.fixture(scope="session")
def qpsk_states(qpsk):
    return enumerate_singular_states(qpsk)


@pytest.fixture(scope="session")
def qpsk_library(qpsk):
    return full_library(qpsk)


@pytest.fixture(scope="session")
def qpsk_deltas(qpsk_library):
    return estimate_all_deltas(qpsk_library)
