"""Fade-state plane quantization by max-min cluster distance.

The relay holds a library of maps, one per removed singular state plus a
fallback.  At fade state z it picks the map whose minimum cluster distance
is largest; among maps tied at the maximum it prefers the one built for the
singular state nearest to z, then library order, with the fallback last.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .constellation import DEDUP_TOL, Constellation, psk_min_distance
from .netmap import ClusterMap, build_removal_map, cross_cluster_differences, xor_map
from .singular import SingularState, enumerate_singular_states

TIE_TOL = 1e-9
_CHUNK = 20000


class InconsistentLibraryError(RuntimeError):
    """A state's own map is not selected at the state itself."""


@dataclass(frozen=True)
class MapLibrary:
    constellation: Constellation
    entries: tuple[tuple[SingularState, ClusterMap], ...]
    fallback: ClusterMap
    s_prime_max_dmin: float

    @property
    def maps(self) -> tuple[ClusterMap, ...]:
        return tuple(m for _, m in self.entries) + (self.fallback,)

    @property
    def states(self) -> tuple[SingularState, ...]:
        return tuple(st for st, _ in self.entries)

    @property
    def fallback_id(self) -> int:
        return len(self.entries)

    def index_of(self, s: complex, tol: float = 1e-6) -> int:
        for i, (st, _) in enumerate(self.entries):
            if abs(st.value - s) <= tol:
                return i
        raise KeyError(f"state {s} has no entry in the library")

    @cached_property
    def _weights(self):
        # Each cross-cluster difference pair (dA, dB) with both parts nonzero
        # contributes |dB| |z - s| for its singular state s; pairs with dB = 0
        # contribute the constant |dA| and pairs with dA = 0 contribute
        # |dB| |z|.  Keeping the smallest |dB| per (map, state) is exact.
        all_states = enumerate_singular_states(self.constellation)
        svals = np.array([st.value for st in all_states])
        w = np.full((len(self.maps), svals.size), np.inf)
        c_a = c_b = np.inf
        for k, m in enumerate(self.maps):
            da, db = cross_cluster_differences(m, self.constellation)
            for u, v in zip(da, db):
                if abs(v) <= DEDUP_TOL:
                    c_a = min(c_a, abs(u))
                elif abs(u) <= DEDUP_TOL:
                    c_b = min(c_b, abs(v))
                else:
                    i = int(np.argmin(np.abs(svals + u / v)))
                    w[k, i] = min(w[k, i], abs(v))
        return svals, w, c_a, c_b

    def distances(self, z) -> np.ndarray:
        """Minimum cluster distance of every library map at each z; shape (N, n_maps)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        svals, w, c_a, c_b = self._weights
        out = np.empty((z.size, w.shape[0]))
        for lo in range(0, z.size, _CHUNK):
            zc = z[lo:lo + _CHUNK]
            gap = np.abs(zc[:, None] - svals[None, :])
            with np.errstate(invalid="ignore"):
                # inf * 0 -> nan marks "pair absent at its own state"; fmin skips it
                d = np.fmin.reduce(gap[:, None, :] * w[None, :, :], axis=2)
            d0 = np.minimum(c_a, c_b * np.abs(zc))
            out[lo:lo + _CHUNK] = np.fmin(d, d0[:, None])
        return out

    def select(self, z) -> np.ndarray:
        """Vectorised map selection; returns map ids (fallback = len(entries))."""
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        d = self.distances(z)
        tied = d >= d.max(axis=1, keepdims=True) - TIE_TOL
        svals = np.array([st.value for st in self.states], dtype=complex)
        prox = np.abs(z[:, None] - svals[None, :])
        prox = np.concatenate([prox, np.full((z.size, 1), np.finfo(float).max)], axis=1)
        prox[~tied] = np.inf
        return np.argmin(prox, axis=1)


def build_library(
    c: Constellation,
    states: list[SingularState],
    fallback: ClusterMap | None = None,
) -> MapLibrary:
    if not states:
        raise ValueError("library needs at least one singular state")
    entries = tuple((st, build_removal_map(c, st)) for st in states)
    fallback = xor_map(c.M) if fallback is None else fallback
    l_max = max(m.n_clusters for _, m in entries)
    return MapLibrary(c, entries, fallback, psk_min_distance(l_max))


def select_map(lib: MapLibrary, z: complex) -> int:
    return int(lib.select(z)[0])


# ---------------------------------------------------------------------------
# Enclosed-circle radius
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaEstimate:
    state: complex
    delta: float
    angular_samples: int
    radius_tol: float
    capped: bool = False


def search_cap(lib: MapLibrary) -> float:
    vals = np.array([st.value for st in lib.states])
    if vals.size < 2:
        return 2.0 * (1.0 + float(np.abs(vals).max()))
    return 2.0 * float(np.abs(vals[:, None] - vals[None, :]).max())


def estimate_delta(
    lib: MapLibrary,
    s: SingularState | complex,
    angular_samples: int = 360,
    radius_tol: float = 1e-3,
    max_iter: int = 200,
) -> DeltaEstimate:
    """Largest radius r such that every probe s + r e^{j phi} selects the
    library entry of s, found by bisection on (0, cap]."""
    sv = s.value if isinstance(s, SingularState) else complex(s)
    own = lib.index_of(sv)
    if select_map(lib, sv) != own:
        raise InconsistentLibraryError(f"map of {sv} is not selected at z = {sv}")
    ring = np.exp(2j * np.pi * np.arange(angular_samples) / angular_samples)

    def feasible(r: float) -> bool:
        return bool(np.all(lib.select(sv + r * ring) == own))

    cap = search_cap(lib)
    if feasible(cap):
        return DeltaEstimate(sv, cap, angular_samples, radius_tol, capped=True)
    lo, hi = 0.0, cap
    for _ in range(max_iter):
        if hi - lo <= radius_tol * hi and lo > 0:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return DeltaEstimate(sv, lo, angular_samples, radius_tol)


def estimate_all_deltas(lib: MapLibrary, angular_samples: int = 360, radius_tol: float = 1e-3):
    return {st.value: estimate_delta(lib, st, angular_samples, radius_tol) for st in lib.states}


def deltas_to_csv(estimates) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s_re", "s_im", "delta"])
    for est in estimates:
        w.writerow([f"{est.state.real:.12g}", f"{est.state.imag:.12g}", f"{est.delta:.12g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Grid classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Raster:
    re: np.ndarray
    im: np.ndarray
    ids: np.ndarray = field(repr=False)  # shape (len(im), len(re))

    def cell_of(self, z: complex) -> tuple[int, int]:
        return int(np.argmin(np.abs(self.im - z.imag))), int(np.argmin(np.abs(self.re - z.real)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "map_id"])
        for i, y in enumerate(self.im):
            for k, x in enumerate(self.re):
                w.writerow([f"{x:.6g}", f"{y:.6g}", int(self.ids[i, k])])
        return buf.getvalue()


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("resolution must be positive")
    if n == 1:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, n)


def classify_grid(
    lib: MapLibrary,
    re_range: tuple[float, float] = (-2.5, 2.5),
    im_range: tuple[float, float] = (-2.5, 2.5),
    resolution: int = 501,
) -> Raster:
    re = _axis(*re_range, resolution)
    im = _axis(*im_range, resolution)
    zz = re[None, :] + 1j * im[:, None]
    ids = lib.select(zz.ravel()).reshape(zz.shape)
    return Raster(re, im, ids)
