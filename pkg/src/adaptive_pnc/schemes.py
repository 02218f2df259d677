"""Relay map-selection policies for the fixed and adaptive schemes.

Partial-removal schemes share the quantization of the full library: inside
the region of a removed state the relay uses that state's map, everywhere
else it falls back to a baseline map that removes nothing (modulo-M).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constellation import Constellation, make_psk, psk_points
from .netmap import ClusterMap, modulo_map, xor_map
from .quantizer import MapLibrary, build_library
from .singular import enumerate_singular_states, select_dominant

SCHEMES = (
    "fixed-modulo",
    "fixed-xor",
    "adaptive-all",
    "adaptive-dominant",
    "adaptive-only-s1",
    "adaptive-all-but-s1",
)


@dataclass(frozen=True)
class MapPolicy:
    name: str
    constellation: Constellation
    maps: tuple[ClusterMap, ...]
    library: MapLibrary | None = None
    honoured: frozenset[int] | None = None  # library entries used; None = all

    @property
    def adaptive(self) -> bool:
        return self.library is not None

    @property
    def fixed_map(self) -> ClusterMap | None:
        return None if self.adaptive else self.maps[0]

    @property
    def removed_states(self) -> tuple[complex, ...]:
        if not self.adaptive:
            return ()
        ids = range(len(self.library.entries)) if self.honoured is None else sorted(self.honoured)
        return tuple(self.library.entries[i][0].value for i in ids)

    @property
    def max_clusters(self) -> int:
        return max(m.n_clusters for m in self.maps)

    def choose(self, z) -> np.ndarray:
        """Index into ``maps`` of the map used at each fade state."""
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        if not self.adaptive:
            return np.zeros(z.size, dtype=np.int64)
        ids = self.library.select(z)
        if self.honoured is not None:
            ids = np.where(np.isin(ids, list(self.honoured)), ids, len(self.maps) - 1)
        return ids

    @cached_property
    def label_table(self) -> np.ndarray:
        """(n_maps, M, M) cluster labels."""
        return np.stack([m.array for m in self.maps])

    @cached_property
    def bc_table(self) -> np.ndarray:
        """(n_maps, L_max) broadcast points; map k uses an L_k-PSK, zero padded."""
        out = np.zeros((len(self.maps), self.max_clusters), dtype=complex)
        for k, m in enumerate(self.maps):
            out[k, :m.n_clusters] = psk_points(m.n_clusters)
        return out


def fixed_policy(name: str, c: Constellation, m: ClusterMap) -> MapPolicy:
    return MapPolicy(name, c, (m,))


def adaptive_policy(
    name: str,
    library: MapLibrary,
    removed: list[complex] | None = None,
    baseline: ClusterMap | None = None,
) -> MapPolicy:
    """Adaptive policy over ``library``; with ``removed`` only those states'
    regions use their maps and every other region uses ``baseline``."""
    c = library.constellation
    if removed is None:
        return MapPolicy(name, c, library.maps, library, None)
    honoured = frozenset(library.index_of(s) for s in removed)
    baseline = modulo_map(c.M) if baseline is None else baseline
    return MapPolicy(name, c, library.maps + (baseline,), library, honoured)


def full_library(c: Constellation) -> MapLibrary:
    return build_library(c, enumerate_singular_states(c))


def make_policy(name: str, c: Constellation | None = None, library: MapLibrary | None = None) -> MapPolicy:
    c = make_psk(4) if c is None else c
    if name == "fixed-modulo":
        return fixed_policy(name, c, modulo_map(c.M))
    if name == "fixed-xor":
        return fixed_policy(name, c, xor_map(c.M))
    if not name.startswith("adaptive-"):
        raise ValueError(f"unknown scheme {name!r}; expected one of {SCHEMES}")
    lib = full_library(c) if library is None else library
    states = [st.value for st in lib.states]
    one = [s for s in states if abs(s - 1) < 1e-9]
    if name == "adaptive-all":
        return adaptive_policy(name, lib)
    if name == "adaptive-dominant":
        return adaptive_policy(name, lib, [st.value for st in select_dominant(list(lib.states))])
    if name == "adaptive-only-s1":
        return adaptive_policy(name, lib, one)
    if name == "adaptive-all-but-s1":
        return adaptive_policy(name, lib, [s for s in states if abs(s - 1) >= 1e-9])
    raise ValueError(f"unknown scheme {name!r}; expected one of {SCHEMES}")
