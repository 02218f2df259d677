"""Adaptive network-coding maps for two-way relaying over Rician fading."""

from .bounds import (
    BoundReport,
    anc_cross_bound,
    anc_nonremovable_bound,
    bc_phase_bound,
    end_to_end_bound,
    fnc_pairwise_bound,
    gaussian_q,
    lemma1_integral,
    marcum_q1,
)
from .channel import SimulationConfig, estimate_pairwise, simulate_ser
from .constellation import Constellation, make_psk
from .experiment import ExperimentSpec, extract_gain, run_experiment
from .netmap import ClusterMap, build_removal_map, check_exclusive_law, min_cluster_distance, modulo_map, removes, xor_map
from .quantizer import MapLibrary, build_library, classify_grid, estimate_delta, select_map
from .schemes import SCHEMES, make_policy
from .singular import dominance_factor, enumerate_singular_states, select_dominant

__version__ = "0.1.0"
