"""Rician fading, relay/end-node detection and Monte Carlo SER estimation.

Each SNR point is simulated in fixed-size batches.  Batch ``k`` of point
``snr_db`` draws from its own generator seeded by
``SeedSequence(seed, spawn_key=(scheme, snr, k))``, so results do not depend
on how points are spread across worker processes.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constellation import Constellation, make_psk
from .netmap import ClusterMap, check_exclusive_law
from .schemes import MapPolicy

_SNR_KEY_OFFSET = 10**7


@dataclass(frozen=True)
class RicianParams:
    K: float
    los_phase: float = 0.0

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("Rician factor must be nonnegative")
        if self.los_phase != 0.0:
            raise ValueError("line-of-sight phase is fixed at 0")


def sample_rician(p: RicianParams | float, rng: np.random.Generator, size=None):
    """sqrt(K/(K+1)) + G/sqrt(K+1) with G ~ CN(0, 1); unit second moment."""
    K = p.K if isinstance(p, RicianParams) else float(p)
    if math.isinf(K):
        return np.ones(size) + 0j if size is not None else 1.0 + 0j
    g = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)
    return math.sqrt(K / (K + 1.0)) + g / math.sqrt(K + 1.0)


def complex_noise(var: float, rng: np.random.Generator, size=None):
    return math.sqrt(var / 2.0) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


@dataclass(frozen=True)
class ChannelRealization:
    h_a: complex
    h_b: complex
    hp_a: complex
    hp_b: complex

    @property
    def fade_state(self) -> complex:
        return self.h_b / self.h_a


def db_to_linear(snr_db):
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------


def relay_ml_decode(c: Constellation, h_a, h_b, y, es: float = 1.0):
    """Joint ML estimate of (x_A, x_B) indices; ties go to the first pair row-major."""
    x = c.array
    h_a, h_b, y = (np.asarray(v, dtype=complex) for v in (h_a, h_b, y))
    scalar = y.ndim == 0
    h_a, h_b, y = (np.atleast_1d(v) for v in (h_a, h_b, y))
    cand = math.sqrt(es) * (h_a[:, None, None] * x[None, :, None] + h_b[:, None, None] * x[None, None, :])
    k = np.argmin(np.abs(y[:, None, None] - cand).reshape(y.size, -1), axis=1)
    a_hat, b_hat = np.divmod(k, c.M)
    if scalar:
        return int(a_hat[0]), int(b_hat[0])
    return a_hat, b_hat


def end_node_decode(m: ClusterMap, bc_points, own: int, h: complex, y: complex, es: float = 1.0) -> int:
    """Partner symbol whose cluster point, seen through h, is nearest to y.

    ``own`` is the decoding node's own symbol index, used as the row of
    ``m``; node B passes a transposed map.
    """
    if not check_exclusive_law(m):
        raise ValueError("map violates the exclusive law")
    pts = np.asarray(bc_points, dtype=complex)[m.array[own]]
    return int(np.argmin(np.abs(y - math.sqrt(es) * h * pts)))


# ---------------------------------------------------------------------------
# End-to-end simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationConfig:
    scheme: str
    snr_db: tuple[float, ...]
    K: float = 4.0
    M: int = 4
    trial_budget: int = 10**8
    target_errors: int = 200
    seed: int = 0
    batch_size: int = 20000
    es: float = 1.0

    def __post_init__(self):
        if not self.snr_db:
            raise ValueError("snr list must be nonempty")
        if self.trial_budget <= 0 or self.batch_size <= 0:
            raise ValueError("trial budget and batch size must be positive")

    @property
    def constellation(self) -> Constellation:
        return make_psk(self.M)


@dataclass(frozen=True)
class SerEstimate:
    snr_db: float
    trials: int
    errors_a: int
    errors_b: int
    errors_union: int
    bit_errors: int = 0
    bits_per_symbol: int = 2

    @property
    def ser(self) -> float:
        return self.errors_union / self.trials

    @property
    def stderr(self) -> float:
        p = self.ser
        return math.sqrt(p * (1.0 - p) / self.trials)

    @property
    def ber(self) -> float:
        """Bit errors over all bits exchanged (both directions)."""
        return self.bit_errors / (2 * self.bits_per_symbol * self.trials)


def _batch_rng(seed: int, scheme: str, snr_db: float, batch: int) -> np.random.Generator:
    key = (zlib.crc32(scheme.encode()), int(round(snr_db * 1000)) + _SNR_KEY_OFFSET, batch)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _popcount(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    while np.any(v):
        out += v & 1
        v = v >> 1
    return out


def simulate_batch(policy: MapPolicy, K: float, snr: float, n: int, rng: np.random.Generator, es: float = 1.0):
    """One batch of two-way exchanges; returns (errors_a, errors_b, union, bit_errors)."""
    c = policy.constellation
    x = c.array
    M = c.M
    sigma2 = es / snr
    a = rng.integers(0, M, n)
    b = rng.integers(0, M, n)
    h = sample_rician(K, rng, (4, n))
    h_a, h_b, hp_a, hp_b = h
    noise = complex_noise(sigma2, rng, (3, n))

    y_r = math.sqrt(es) * (h_a * x[a] + h_b * x[b]) + noise[0]
    a_r, b_r = relay_ml_decode(c, h_a, h_b, y_r, es)

    ids = policy.choose(h_b / h_a)
    labels = policy.label_table[ids]  # (n, M, M)
    bc = policy.bc_table[ids]  # (n, L_max)
    rows = np.arange(n)
    x_r = bc[rows, labels[rows, a_r, b_r]]

    # node A knows a and scans its row; node B knows b and scans its column
    y_a = math.sqrt(es) * hp_a * x_r + noise[1]
    y_b = math.sqrt(es) * hp_b * x_r + noise[2]
    cand_a = np.take_along_axis(bc, labels[rows, a, :], axis=1)
    cand_b = np.take_along_axis(bc, labels[rows, :, b], axis=1)
    b_at_a = np.argmin(np.abs(y_a[:, None] - math.sqrt(es) * hp_a[:, None] * cand_a), axis=1)
    a_at_b = np.argmin(np.abs(y_b[:, None] - math.sqrt(es) * hp_b[:, None] * cand_b), axis=1)

    err_a = b_at_a != b
    err_b = a_at_b != a
    gray = np.asarray(c.labels)
    bits = _popcount(gray[b_at_a] ^ gray[b]) + _popcount(gray[a_at_b] ^ gray[a])
    return int(err_a.sum()), int(err_b.sum()), int((err_a | err_b).sum()), int(bits.sum())


def simulate_point(cfg: SimulationConfig, policy: MapPolicy, snr_db: float) -> SerEstimate:
    snr = float(db_to_linear(snr_db))
    trials = ea = eb = eu = bits = 0
    batch = 0
    while trials < cfg.trial_budget and eu < cfg.target_errors:
        n = min(cfg.batch_size, cfg.trial_budget - trials)
        rng = _batch_rng(cfg.seed, cfg.scheme, snr_db, batch)
        r = simulate_batch(policy, cfg.K, snr, n, rng, cfg.es)
        ea, eb, eu, bits = ea + r[0], eb + r[1], eu + r[2], bits + r[3]
        trials += n
        batch += 1
    return SerEstimate(snr_db, trials, ea, eb, eu, bits, policy.constellation.bits_per_symbol)


def _point_job(args):
    cfg, policy, snr_db = args
    return simulate_point(cfg, policy, snr_db)


def simulate_ser(cfg: SimulationConfig, policy: MapPolicy, workers: int = 1) -> list[SerEstimate]:
    """End-to-end union SER per SNR point, with early stopping per point."""
    if policy.name != cfg.scheme:
        raise ValueError(f"policy {policy.name!r} does not match configured scheme {cfg.scheme!r}")
    if policy.constellation.M != cfg.M:
        raise ValueError("policy constellation does not match config")
    jobs = [(cfg, policy, s) for s in cfg.snr_db]
    if workers <= 1:
        return [_point_job(j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(_point_job, jobs))


# ---------------------------------------------------------------------------
# Pairwise relay error events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairwiseEstimate:
    snr_db: float
    prob: float
    stderr: float
    n: int


@dataclass(frozen=True)
class _Proposal:
    """Mixture proposal over (H_A, H_B) concentrated on deep fades.

    Components: the true Rician law; a near-collision law where
    w = H_A dA + H_B dB ~ CN(0, tw) with the non-pivot fade Rician; and
    near-collision laws where the non-pivot fade is itself CN(0, t_k).
    """

    K: float
    da: complex
    db: complex
    tw: float
    t_small: tuple[float, ...]
    weights: tuple[float, ...] = field(default=())

    @property
    def pivot_b(self) -> bool:
        return abs(self.db) > 0

    def _split(self, h_a, h_b):
        # (free fade, pivot coefficient, free coefficient)
        return (h_a, self.db, self.da) if self.pivot_b else (h_b, self.da, self.db)

    def sample(self, n: int, rng: np.random.Generator):
        comp = rng.choice(len(self.weights), size=n, p=self.weights)
        free = sample_rician(self.K, rng, n)
        for k, t in enumerate(self.t_small, start=2):
            sel = comp == k
            free[sel] = complex_noise(t, rng, int(sel.sum()))
        w = complex_noise(self.tw, rng, n)
        piv_coef, free_coef = (self.db, self.da) if self.pivot_b else (self.da, self.db)
        pivot = (w - free * free_coef) / piv_coef
        true_draw = comp == 0
        pivot[true_draw] = sample_rician(self.K, rng, int(true_draw.sum()))
        return (free, pivot) if self.pivot_b else (pivot, free)

    def log_density_ratio(self, h_a, h_b):
        """log p(h) - log q(h) for the Rician target p."""
        free, pivot = (h_a, h_b) if self.pivot_b else (h_b, h_a)
        piv_coef = self.db if self.pivot_b else self.da
        w = h_a * self.da + h_b * self.db
        lf_free = _log_rician_pdf(free, self.K)
        lf_piv = _log_rician_pdf(pivot, self.K)
        lg_w = _log_cn_pdf(w, self.tw) + 2.0 * math.log(abs(piv_coef))
        comps = [lf_free + lf_piv, lf_free + lg_w]
        comps += [_log_cn_pdf(free, t) + lg_w for t in self.t_small]
        logq = np.logaddexp.reduce(
            [math.log(wt) + lc for wt, lc in zip(self.weights, comps)], axis=0
        )
        return lf_free + lf_piv - logq


def _log_cn_pdf(v, var: float):
    return -np.log(np.pi * var) - np.abs(v) ** 2 / var


def _log_rician_pdf(v, K: float):
    mu = math.sqrt(K / (K + 1.0))
    return _log_cn_pdf(v - mu, 1.0 / (K + 1.0))


def make_proposal(K: float, da: complex, db: complex, snr: float) -> _Proposal:
    tw = 8.0 / snr
    scale = abs(db) if abs(db) > 0 else abs(da)
    t_small = tuple(f / (snr * scale**2) for f in (8.0, 32.0, 128.0, 512.0))
    return _Proposal(K, da, db, tw, t_small, (0.1, 0.2, 0.175, 0.175, 0.175, 0.175))


def estimate_pairwise(
    cfg: SimulationConfig,
    sent: tuple[int, int],
    decoded: tuple[int, int],
    policy: MapPolicy,
    n: int = 10**6,
    importance: bool = True,
) -> list[PairwiseEstimate]:
    """P{relay decodes ``sent`` as exactly ``decoded`` and the two pairs lie in
    different clusters of the map in use}, per SNR point.

    With ``importance`` the fades are drawn from a deep-fade mixture proposal
    and reweighted; otherwise plain Monte Carlo over Rician fades.
    """
    if tuple(sent) == tuple(decoded):
        raise ValueError("sent and decoded pairs must differ")
    c = policy.constellation
    x = c.array
    (a, b), (a2, b2) = sent, decoded
    da, db = x[a] - x[a2], x[b] - x[b2]
    out = []
    for snr_db in cfg.snr_db:
        snr = float(db_to_linear(snr_db))
        rng = _batch_rng(cfg.seed, f"pairwise:{policy.name}:{sent}:{decoded}", snr_db, 0)
        if importance:
            prop = make_proposal(cfg.K, da, db, snr)
            h_a, h_b = prop.sample(n, rng)
            wt = np.exp(prop.log_density_ratio(h_a, h_b))
        else:
            h_a = sample_rician(cfg.K, rng, n)
            h_b = sample_rician(cfg.K, rng, n)
            wt = np.ones(n)
        y = math.sqrt(cfg.es) * (h_a * x[a] + h_b * x[b]) + complex_noise(cfg.es / snr, rng, n)
        a_r, b_r = relay_ml_decode(c, h_a, h_b, y, cfg.es)
        lab = policy.label_table[policy.choose(h_b / h_a)]
        cross = lab[:, a, b] != lab[:, a2, b2]
        v = wt * ((a_r == a2) & (b_r == b2) & cross)
        out.append(PairwiseEstimate(snr_db, float(v.mean()), float(v.std(ddof=1) / math.sqrt(n)), n))
    return out
