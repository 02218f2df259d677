"""Removable singular fade states, dominance factors and the dominant subset."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .constellation import DEDUP_TOL, Constellation, difference_set


def _phase(s: complex) -> float:
    """Phase in [-pi, pi)."""
    p = math.atan2(s.imag, s.real)
    return -math.pi if p >= math.pi else p


def dominance_factor(s: complex) -> float:
    """|1 - s|^2 / (1 + |s|^2)."""
    s = complex(s)
    return abs(1 - s) ** 2 / (1 + abs(s) ** 2)


@dataclass(frozen=True)
class SingularState:
    value: complex
    generators: tuple[tuple[complex, complex], ...]

    def __post_init__(self):
        if not self.generators:
            raise ValueError("a singular state needs at least one generator")
        for da, db in self.generators:
            if abs(da) <= DEDUP_TOL or abs(db) <= DEDUP_TOL:
                raise ValueError("generator differences must both be nonzero")
            if abs(self.value * db + da) >= 1e-9:
                raise ValueError(f"generator {(da, db)} does not produce {self.value}")

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        return _phase(self.value)

    @property
    def dominance(self) -> float:
        return dominance_factor(self.value)

    def __repr__(self):
        return f"SingularState({self.value:.6g}, f={self.dominance:.4g}, n_gen={len(self.generators)})"


def enumerate_singular_states(c: Constellation) -> list[SingularState]:
    """All -dA/dB over nonzero difference values, sorted by (|s|, phase)."""
    nonzero = [d for d in difference_set(c) if abs(d) > DEDUP_TOL]
    groups: list[tuple[complex, list[tuple[complex, complex]]]] = []
    for da in nonzero:
        for db in nonzero:
            s = -da / db
            for rep, gens in groups:
                if abs(rep - s) <= DEDUP_TOL:
                    gens.append((da, db))
                    break
            else:
                groups.append((s, [(da, db)]))

    states = []
    for rep, gens in groups:
        # kill rounding residue so that e.g. 1+1e-17j reports phase 0
        rep = complex(round(rep.real, 12) + 0.0, round(rep.imag, 12) + 0.0)
        states.append(SingularState(rep, tuple(gens)))
    states.sort(key=lambda st: (round(st.magnitude, 9), round(st.phase, 9)))
    return states


def select_dominant(states: list[SingularState], magnitude_tol: float = 1e-6) -> list[SingularState]:
    """Keep, on each circle |s| = const, the states with least |phase|."""
    if not states:
        raise ValueError("states must be nonempty")
    circles: list[list[SingularState]] = []
    for st in sorted(states, key=lambda t: t.magnitude):
        if circles and abs(circles[-1][0].magnitude - st.magnitude) <= magnitude_tol:
            circles[-1].append(st)
        else:
            circles.append([st])
    out = []
    for circle in circles:
        least = min(abs(st.phase) for st in circle)
        out.extend(st for st in circle if abs(abs(st.phase) - least) <= 1e-9)
    return out


def find_state(states: list[SingularState], s: complex, tol: float = 1e-6) -> SingularState:
    for st in states:
        if abs(st.value - s) <= tol:
            return st
    raise KeyError(f"no singular state at {s}")


SINGULAR_CSV_FIELDS = ("s_re", "s_im", "magnitude", "phase", "dominance", "n_generators")


def states_to_csv(states: list[SingularState]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SINGULAR_CSV_FIELDS)
    for st in states:
        w.writerow([
            f"{st.value.real:.12g}", f"{st.value.imag:.12g}", f"{st.magnitude:.12g}",
            f"{st.phase:.12g}", f"{st.dominance:.12g}", len(st.generators),
        ])
    return buf.getvalue()


def conjugate_closed(states: list[SingularState], tol: float = 1e-9) -> bool:
    vals = np.array([st.value for st in states])
    return all(np.min(np.abs(vals - np.conj(v))) <= tol for v in vals)
