"""Unit-energy PSK signal sets and the relay-side effective constellation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

SUPPORTED_ORDERS = (2, 4, 8, 16)
DEDUP_TOL = 1e-9


def psk_points(M: int) -> np.ndarray:
    """Return the M-PSK points exp(j(pi/M + 2 pi k/M)), k = 0..M-1.

    Unlike :func:`make_psk` this accepts any M >= 1; the relay uses it for
    broadcast signal sets whose size is the cluster count of a map.
    """
    if M < 1:
        raise ValueError(f"PSK order must be positive, got {M}")
    k = np.arange(M)
    return np.exp(1j * (np.pi / M + 2 * np.pi * k / M))


def psk_min_distance(M: int) -> float:
    if M < 2:
        raise ValueError("minimum distance needs at least two points")
    return 2.0 * np.sin(np.pi / M)


def gray_code(k: int) -> int:
    return k ^ (k >> 1)


@dataclass(frozen=True)
class Constellation:
    """An M-PSK signal set shared by both end nodes.

    Symbol index ``i`` is the angular position of the point; ``labels[i]`` is
    its Gray bit label.
    """

    M: int
    points: tuple[complex, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        if len(self.points) != self.M or len(self.labels) != self.M:
            raise ValueError("points/labels length must equal M")
        if self.M < 2 or self.M & (self.M - 1):
            raise ValueError(f"M must be a power of two, got {self.M}")
        if sorted(self.labels) != list(range(self.M)):
            raise ValueError("labels must be a permutation of range(M)")

    @property
    def bits_per_symbol(self) -> int:
        return self.M.bit_length() - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=complex)

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "points": [[float(p.real), float(p.imag)] for p in self.points],
            "labels": list(self.labels),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Constellation":
        return cls(
            M=int(d["M"]),
            points=tuple(complex(re, im) for re, im in d["points"]),
            labels=tuple(int(v) for v in d["labels"]),
        )


def make_psk(M: int) -> Constellation:
    if M not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported PSK order {M}; expected one of {SUPPORTED_ORDERS}")
    pts = psk_points(M)
    return Constellation(
        M=M,
        points=tuple(complex(p) for p in pts),
        labels=tuple(gray_code(k) for k in range(M)),
    )


def unique_complex(values, tol: float = DEDUP_TOL) -> list[complex]:
    """Deduplicate complex values with an absolute tolerance, keeping first occurrences."""
    out: list[complex] = []
    for v in values:
        v = complex(v)
        if not any(abs(v - u) <= tol for u in out):
            out.append(v)
    return out


def difference_set(c: Constellation) -> list[complex]:
    """All distinct values x - x' over ordered pairs of points (zero included)."""
    x = c.array
    return unique_complex((x[:, None] - x[None, :]).ravel())


def effective_constellation(c: Constellation, h_a: complex, h_b: complex):
    """Relay points H_A x_A + H_B x_B, row-major in (x_A index, x_B index)."""
    x = c.array
    pts = h_a * x[:, None] + h_b * x[None, :]
    return [((a, b), complex(pts[a, b])) for a in range(c.M) for b in range(c.M)]


def _nonzero_difference_pairs(c: Constellation) -> tuple[np.ndarray, np.ndarray]:
    ds = np.asarray(difference_set(c))
    da, db = np.meshgrid(ds, ds, indexing="ij")
    da, db = da.ravel(), db.ravel()
    keep = (np.abs(da) > DEDUP_TOL) | (np.abs(db) > DEDUP_TOL)
    return da[keep], db[keep]


def min_distance(c: Constellation, h_a: complex, h_b: complex) -> float:
    """Minimum distance of the effective constellation seen at the relay.

    Every pair of distinct tuples contributes |H_A dA + H_B dB| for some
    difference pair (dA, dB) != (0, 0), and every such difference pair is
    realised by some tuple pair, so minimising over the difference set is exact.
    """
    da, db = _nonzero_difference_pairs(c)
    return float(np.min(np.abs(h_a * da + h_b * db)))
