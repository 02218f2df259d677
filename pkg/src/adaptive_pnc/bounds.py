"""Closed-form error quantities and their numerical oracles.

SNR arguments are linear (E_s / sigma^2).  The pairwise bounds take the
difference pair (dA, dB) = (x_A - x'_A, x_B - x'_B) of an error event.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc

ANC_MIN_SNR = 10.0


class ValidityWarning(UserWarning):
    """A bound was evaluated outside the regime where it is claimed to hold."""


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------


def gaussian_q(x):
    """Standard normal tail probability."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def bessel_i0(x: float) -> float:
    """Modified Bessel function I_0 (power series below 20, asymptotic above)."""
    return bessel_i0e(x) * math.exp(abs(x))


def bessel_i0e(x: float) -> float:
    """Exponentially scaled I_0: exp(-|x|) I_0(x)."""
    x = abs(float(x))
    if x < 20.0:
        # sum_k (x^2/4)^k / (k!)^2
        q = 0.25 * x * x
        term, total, k = 1.0, 1.0, 0
        while term > 1e-17 * total:
            k += 1
            term *= q / (k * k)
            total += term
        return total * math.exp(-x)
    # Hankel expansion; terms shrink until k ~ 2x, far beyond what 1e-16 needs
    total, term, k = 1.0, 1.0, 0
    while True:
        k += 1
        nxt = term * (2 * k - 1) ** 2 / (8.0 * x * k)
        if nxt < 1e-17 or nxt > term:
            break
        term = nxt
        total += term
    return total / math.sqrt(2.0 * math.pi * x)


def marcum_q1(a: float, b: float) -> float:
    """First-order Marcum Q function Q_1(a, b).

    Evaluated as the survival function of a noncentral chi-square with two
    degrees of freedom: a Poisson(a^2/2) mixture of Poisson(b^2/2) CDFs,
    summed in log space.  Every term is nonnegative, so there is no
    cancellation; the series is cut where the Poisson weights fall below
    1e-20 in total.
    """
    a, b = abs(float(a)), float(b)
    if b <= 0.0:
        return 1.0
    lam, x = 0.5 * a * a, 0.5 * b * b
    if x == 0.0:  # b^2 underflowed
        return 1.0
    n_max = int(lam + 12.0 * math.sqrt(lam) + 40.0)
    n = np.arange(n_max + 1, dtype=float)
    logn = np.concatenate([[0.0], np.cumsum(np.log(n[1:]))])  # log n!
    if lam > 0.0:
        log_w = -lam + n * math.log(lam) - logn
    else:
        log_w = np.full(n.size, -np.inf)
        log_w[0] = 0.0
    # C_n = P(Poisson(x) <= n), kept in log space for tiny values
    log_p = -x + n * math.log(x) - logn
    log_c = np.logaddexp.accumulate(log_p)
    return float(min(1.0, np.exp(log_w + log_c).sum()))


def marcum_q1_quadrature(a: float, b: float) -> float:
    """Oracle: integrate x exp(-(x^2 + a^2)/2) I_0(a x) over [b, inf)."""

    def f(t):
        return t * math.exp(-0.5 * (t - a) ** 2) * bessel_i0e(a * t)

    hi = max(a, b) + 40.0
    pts = [p for p in (a,) if b < p < hi]
    val, _ = integrate.quad(f, b, hi, points=pts or None, epsabs=1e-13, epsrel=1e-11, limit=400)
    return val


# ---------------------------------------------------------------------------
# Lemma: Gaussian integral outside a disc
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscExteriorIntegral:
    exact: float
    upper: float | None  # None when c0 <= |h_c|

    @property
    def upper_defined(self) -> bool:
        return self.upper is not None


def lemma1_integral(r: float, h_c: complex, c0: float) -> DiscExteriorIntegral:
    """(1/pi) * integral of exp(-r |h - h_c|^2) over |h| >= c0, with its bound.

    The 1/pi normalisation makes the whole-plane value 1/r.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if c0 < 0:
        raise ValueError("c0 must be nonnegative")
    m = abs(h_c)
    k = math.sqrt(2.0 * r)
    exact = marcum_q1(k * m, k * c0) / r
    upper = None
    if c0 > m:
        upper = (c0 / (c0 - m)) * math.exp(-r * (c0 - m) ** 2) / r
    return DiscExteriorIntegral(exact, upper)


def lemma1_quadrature(r: float, h_c: complex, c0: float) -> float:
    """Oracle: polar 2-D quadrature of the normalised integral, no Bessel identity."""
    m = abs(h_c)
    phi = math.atan2(h_c.imag, h_c.real)

    def inner(g):
        # exp(-r|h-h_c|^2) = exp(-r (g - m)^2) exp(-2 r g m (1 - cos(t - phi)))
        f = lambda t: math.exp(-2.0 * r * g * m * (1.0 - math.cos(t - phi)))
        v, _ = integrate.quad(f, phi - math.pi, phi + math.pi, points=[phi], epsabs=0, epsrel=1e-12, limit=200)
        return g * math.exp(-r * (g - m) ** 2) * v

    hi = max(c0, m) + 12.0 / math.sqrt(r) + 1.0
    pts = [m] if c0 < m < hi else None
    val, _ = integrate.quad(inner, c0, hi, points=pts, epsabs=0, epsrel=1e-10, limit=400)
    return val / math.pi


# ---------------------------------------------------------------------------
# Pairwise and broadcast-phase bounds
# ---------------------------------------------------------------------------


def fnc_pairwise_bound(da: complex, db: complex, K: float, snr):
    """Fixed-map pairwise bound: exp(-K|dA+dB|^2/D) / (1 + snr D/4), D = |dA|^2 + |dB|^2."""
    D = abs(da) ** 2 + abs(db) ** 2
    if D == 0:
        raise ValueError("(dA, dB) must not both be zero")
    snr = np.asarray(snr, dtype=float)
    return math.exp(-K * abs(da + db) ** 2 / D) / (1.0 + snr * D / 4.0)


def anc_nonremovable_bound(dx: complex, K: float, snr):
    """Bound for error events where one user's symbol is decoded correctly."""
    if abs(dx) == 0:
        raise ValueError("difference must be nonzero")
    snr = np.asarray(snr, dtype=float)
    return math.exp(-K) / (1.0 + snr * abs(dx) ** 2 / 4.0)


def anc_cross_bound(da: complex, db: complex, K: float, snr, delta: float, check_validity: bool = True):
    """Adaptive-map bound for events with both symbols wrong (falls as snr^-2).

    ``delta`` is the radius of the disc around s = -dA/dB inside which the
    relay uses a map that clusters the pair together.  Evaluation below
    snr = 10 emits :class:`ValidityWarning` unless ``check_validity`` is off.
    """
    if abs(da) == 0 or abs(db) == 0:
        raise ValueError("both differences must be nonzero")
    if delta <= 0:
        raise ValueError("delta must be positive")
    snr = np.asarray(snr, dtype=float)
    if check_validity and np.any(snr < ANC_MIN_SNR):
        warnings.warn(f"cross bound is a high-SNR result; snr < {ANC_MIN_SNR}", ValidityWarning, stacklevel=2)
    s = -da / db
    g = K + 1.0 + snr * abs(db) ** 2 / 4.0
    h = g * delta ** 2 + (K + 1.0) * (1.0 + abs(s) ** 2)
    return np.exp(-2.0 * K + K * (K + 1.0) * abs(1.0 + s) ** 2 / h) / (g * h)


def bc_phase_bound(dmin_sprime_max: float, K: float, snr):
    if dmin_sprime_max <= 0:
        raise ValueError("minimum distance must be positive")
    snr = np.asarray(snr, dtype=float)
    return math.exp(-K) / (1.0 + snr * dmin_sprime_max ** 2 / 4.0)


# ---------------------------------------------------------------------------
# Monte Carlo oracles over Rician fades
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleEstimate:
    mean: float
    stderr: float
    n: int


def _rician(K: float, n: int, rng: np.random.Generator) -> np.ndarray:
    g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    return math.sqrt(K / (K + 1.0)) + g / math.sqrt(K + 1.0)


def pairwise_q_oracle(
    da: complex,
    db: complex,
    K: float,
    snr: float,
    n: int = 10**6,
    rng: np.random.Generator | None = None,
    delta: float | None = None,
) -> OracleEstimate:
    """Average of Q(sqrt(snr)|H_A dA + H_B dB|/sqrt 2) over i.i.d. Rician fades.

    With ``delta`` the average is restricted to fades whose ratio H_B/H_A
    stays at least ``delta`` away from s = -dA/dB.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    h_a = _rician(K, n, rng)
    h_b = _rician(K, n, rng)
    v = gaussian_q(math.sqrt(snr) * np.abs(h_a * da + h_b * db) / math.sqrt(2.0))
    if delta is not None:
        s = -da / db
        v = v * (np.abs(h_b / h_a - s) >= delta)
    return OracleEstimate(float(v.mean()), float(v.std(ddof=1) / math.sqrt(n)), n)


# ---------------------------------------------------------------------------
# End-to-end union bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """Union bound on the end-to-end SER, split by error-event class.

    ``ma_*`` terms are averaged over the uniformly sent pair; ``bc`` already
    counts both broadcast links.  ``per_state`` maps each singular state to
    its share of ``ma_cross + ma_unremoved``.
    """

    scheme: str
    K: float
    snr: np.ndarray
    ma_cross: np.ndarray
    ma_nonremovable: np.ndarray
    ma_unremoved: np.ndarray
    bc: np.ndarray
    per_state: dict

    @property
    def ma_total(self) -> np.ndarray:
        return self.ma_cross + self.ma_nonremovable + self.ma_unremoved

    @property
    def total(self) -> np.ndarray:
        return self.ma_total + self.bc

    @property
    def snr_db(self) -> np.ndarray:
        return 10.0 * np.log10(self.snr)

    def dominant_state(self, i: int = -1) -> complex | None:
        """Singular state with the largest contribution at SNR index ``i``."""
        if not self.per_state:
            return None
        return max(self.per_state, key=lambda s: self.per_state[s][i])


BOUND_CSV_FIELDS = ("scheme", "snr_db", "ma_cross", "ma_nonremovable", "ma_unremoved", "bc", "total")


def end_to_end_bound(policy, K: float, snr, deltas: dict | None = None) -> BoundReport:
    """Union bound on P{either end node errs} for a relay map policy.

    Every ordered pair of distinct (x_A, x_B), (x'_A, x'_B) contributes:
    nothing if the pair is intra-cluster under a fixed map; the
    non-removable bound if one user's symbol is unchanged; the adaptive
    cross bound with the state's ``deltas`` entry if its singular state is
    removed; the fixed-map bound otherwise.  Two broadcast-phase terms are
    added on top.
    """
    from .constellation import psk_min_distance

    c = policy.constellation
    x = c.array
    M = c.M
    snr = np.atleast_1d(np.asarray(snr, dtype=float))
    removed = list(policy.removed_states)
    deltas = {} if deltas is None else deltas

    def delta_of(s: complex) -> float:
        for key, d in deltas.items():
            if abs(complex(key) - s) <= 1e-6:
                return float(getattr(d, "delta", d))
        raise KeyError(f"no delta for removed state {s}")

    fixed = policy.fixed_map
    cross = np.zeros_like(snr)
    nonrem = np.zeros_like(snr)
    unrem = np.zeros_like(snr)
    per_state: dict[complex, np.ndarray] = {}
    cache: dict[tuple, np.ndarray] = {}
    for a in range(M):
        for b in range(M):
            for a2 in range(M):
                for b2 in range(M):
                    if (a, b) == (a2, b2):
                        continue
                    if fixed is not None and fixed.labels[a][b] == fixed.labels[a2][b2]:
                        continue
                    da, db = complex(x[a] - x[a2]), complex(x[b] - x[b2])
                    key = (round(da.real, 9), round(da.imag, 9), round(db.real, 9), round(db.imag, 9))
                    if a == a2 or b == b2:
                        if key not in cache:
                            cache[key] = anc_nonremovable_bound(da if b == b2 else db, K, snr)
                        nonrem = nonrem + cache[key]
                        continue
                    s = complex(round((-da / db).real, 9) + 0.0, round((-da / db).imag, 9) + 0.0)
                    is_removed = any(abs(s - r) <= 1e-6 for r in removed)
                    if key not in cache:
                        if is_removed:
                            cache[key] = anc_cross_bound(da, db, K, snr, delta_of(s), check_validity=False)
                        else:
                            cache[key] = fnc_pairwise_bound(da, db, K, snr) * np.ones_like(snr)
                    v = cache[key]
                    if is_removed:
                        cross = cross + v
                    else:
                        unrem = unrem + v
                    per_state[s] = per_state.get(s, 0.0) + v / M**2
    bc = 2.0 * bc_phase_bound(psk_min_distance(policy.max_clusters), K, snr) * np.ones_like(snr)
    n = M**2
    return BoundReport(policy.name, K, snr, cross / n, nonrem / n, unrem / n, bc, per_state)


def bound_rows(report: BoundReport) -> list[list[str]]:
    rows = []
    for i, sdb in enumerate(report.snr_db):
        vals = (report.ma_cross[i], report.ma_nonremovable[i], report.ma_unremoved[i], report.bc[i], report.total[i])
        rows.append([report.scheme, f"{sdb:.6g}"] + [f"{v:.12g}" for v in vals])
    return rows
