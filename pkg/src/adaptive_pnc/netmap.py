"""Network-coding maps as cluster-label tables.

A map is an M x M table whose entry (a, b) is the cluster that the relay
assigns to the decoded pair (x_A = a, x_B = b).  The exclusive law is the
Latin-square property: no label repeats along a row or a column.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constellation import DEDUP_TOL, Constellation
from .singular import SingularState


class InfeasibleMapError(ValueError):
    """The constraints for removing a singular state contradict the exclusive law."""


@dataclass(frozen=True)
class ClusterMap:
    labels: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        M = len(self.labels)
        if M < 2 or any(len(row) != M for row in self.labels):
            raise ValueError("labels must be a square table of size >= 2")
        used = {v for row in self.labels for v in row}
        if used != set(range(len(used))):
            raise ValueError("labels must use exactly 0..L-1")

    @classmethod
    def from_array(cls, arr) -> "ClusterMap":
        return cls(tuple(tuple(int(v) for v in row) for row in np.asarray(arr)))

    @property
    def M(self) -> int:
        return len(self.labels)

    @cached_property
    def n_clusters(self) -> int:
        return 1 + max(v for row in self.labels for v in row)

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.array(self.labels, dtype=np.int64)
        arr.flags.writeable = False
        return arr

    def canonical(self) -> tuple[tuple[int, ...], ...]:
        """Labels renumbered in row-major order of first appearance.

        Two maps induce the same clustering iff their canonical forms agree.
        """
        seen: dict[int, int] = {}
        out = []
        for row in self.labels:
            out.append(tuple(seen.setdefault(v, len(seen)) for v in row))
        return tuple(out)

    def same_clustering(self, other: "ClusterMap") -> bool:
        return self.canonical() == other.canonical()

    def to_dict(self) -> dict:
        return {"labels": [list(r) for r in self.labels], "n_clusters": self.n_clusters}


def check_exclusive_law(m: ClusterMap) -> bool:
    arr = np.asarray(m.labels)
    M = arr.shape[0]
    rows_ok = all(len(set(arr[i, :])) == M for i in range(M))
    cols_ok = all(len(set(arr[:, j])) == M for j in range(M))
    return rows_ok and cols_ok


def xor_map(M: int) -> ClusterMap:
    if M < 2 or M & (M - 1):
        raise ValueError(f"XOR map needs a power of two, got {M}")
    i = np.arange(M)
    return ClusterMap.from_array(i[:, None] ^ i[None, :])


def modulo_map(M: int) -> ClusterMap:
    if M < 2:
        raise ValueError(f"modulo map needs M >= 2, got {M}")
    i = np.arange(M)
    return ClusterMap.from_array((i[:, None] + i[None, :]) % M)


@dataclass(frozen=True)
class ClusterDistanceProfile:
    fade_state: complex
    min_cluster_distance: float
    argmin: tuple[tuple[int, int], tuple[int, int]]


def _require_exclusive(m: ClusterMap, c: Constellation):
    if m.M != c.M:
        raise ValueError(f"map size {m.M} does not match constellation size {c.M}")
    if not check_exclusive_law(m):
        raise ValueError("map violates the exclusive law")


def min_cluster_distance(m: ClusterMap, c: Constellation, z: complex) -> ClusterDistanceProfile:
    """Smallest |(x_A - x'_A) + z (x_B - x'_B)| over pairs in different clusters."""
    _require_exclusive(m, c)
    x = c.array
    pts = (x[:, None] + z * x[None, :]).ravel()
    lab = m.array.ravel()
    dist = np.abs(pts[:, None] - pts[None, :])
    dist[lab[:, None] == lab[None, :]] = np.inf
    k = int(np.argmin(dist))
    i, j = divmod(k, pts.size)
    M = c.M
    return ClusterDistanceProfile(
        fade_state=complex(z),
        min_cluster_distance=float(dist.flat[k]),
        argmin=(divmod(i, M), divmod(j, M)),
    )


def removes(m: ClusterMap, c: Constellation, s: complex, tol: float = 1e-9) -> bool:
    return min_cluster_distance(m, c, s).min_cluster_distance > tol


def cross_cluster_differences(m: ClusterMap, c: Constellation) -> tuple[np.ndarray, np.ndarray]:
    """Distinct (dA, dB) realised by at least one cross-cluster pair of cells.

    The minimum cluster distance at z equals min |dA + z dB| over this set,
    which is what the vectorised selectors evaluate.
    """
    _require_exclusive(m, c)
    x = c.array
    M = c.M
    lab = m.array
    found: list[tuple[complex, complex]] = []
    for a in range(M):
        for b in range(M):
            for a2 in range(M):
                for b2 in range(M):
                    if lab[a, b] == lab[a2, b2]:
                        continue
                    d = (x[a] - x[a2], x[b] - x[b2])
                    if not any(abs(d[0] - u) <= DEDUP_TOL and abs(d[1] - v) <= DEDUP_TOL for u, v in found):
                        found.append(d)
    da = np.array([d[0] for d in found])
    db = np.array([d[1] for d in found])
    return da, db


# ---------------------------------------------------------------------------
# Removal-map construction
# ---------------------------------------------------------------------------


def _union_find(n: int):
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    return find, union


def _same_label_groups(c: Constellation, state: SingularState) -> list[list[tuple[int, int]]]:
    M = c.M
    x = c.array
    diff = x[:, None] - x[None, :]
    find, union = _union_find(M * M)
    for da, db in state.generators:
        rows = np.argwhere(np.abs(diff - da) <= DEDUP_TOL)
        cols = np.argwhere(np.abs(diff - db) <= DEDUP_TOL)
        for a, a2 in rows:
            for b, b2 in cols:
                union(a * M + b, a2 * M + b2)
    groups: dict[int, list[tuple[int, int]]] = {}
    for cell in range(M * M):
        groups.setdefault(find(cell), []).append(divmod(cell, M))
    # row-major order of each group's first cell
    return sorted(groups.values(), key=lambda g: g[0])


def _color(conflicts: list[set[int]], n_colors: int) -> list[int] | None:
    n = len(conflicts)
    colors = [-1] * n

    def place(i: int) -> bool:
        if i == n:
            return True
        taken = {colors[j] for j in conflicts[i] if colors[j] >= 0}
        for col in range(n_colors):
            if col not in taken:
                colors[i] = col
                if place(i + 1):
                    return True
        colors[i] = -1
        return False

    return colors if place(0) else None


def build_removal_map(c: Constellation, state: SingularState) -> ClusterMap:
    """Construct an exclusive-law map that clusters together every pair
    generating ``state``, so that its minimum cluster distance at z = state
    is positive.

    Cells tied by a generator are merged into groups; groups sharing a row
    or column must get different labels.  The group graph is coloured by
    backtracking with the smallest label count that admits a solution,
    scanning groups row-major and trying labels in ascending order.
    """
    M = c.M
    groups = _same_label_groups(c, state)
    for g in groups:
        rows = [a for a, _ in g]
        cols = [b for _, b in g]
        if len(set(rows)) < len(rows) or len(set(cols)) < len(cols):
            raise InfeasibleMapError(
                f"state {state.value} forces two cells of one row/column into a cluster"
            )
    lines = [{("r", a) for a, _ in g} | {("c", b) for _, b in g} for g in groups]
    conflicts = [
        {j for j in range(len(groups)) if j != i and lines[i] & lines[j]}
        for i in range(len(groups))
    ]
    for n_colors in range(M, M * M + 1):
        colors = _color(conflicts, n_colors)
        if colors is not None:
            break
    else:  # pragma: no cover - M*M colours always suffice
        raise InfeasibleMapError(f"no colouring found for state {state.value}")
    table = np.empty((M, M), dtype=np.int64)
    for g, col in zip(groups, colors):
        for a, b in g:
            table[a, b] = col
    return ClusterMap.from_array(table)


def catalog_to_json(entries: list[tuple[SingularState, ClusterMap]]) -> str:
    return json.dumps(
        [
            {
                "singular_state": [st.value.real, st.value.imag],
                "labels": [list(r) for r in m.labels],
                "n_clusters": m.n_clusters,
            }
            for st, m in entries
        ],
        indent=1,
    )
