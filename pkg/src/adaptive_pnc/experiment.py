"""Experiment sweeps across schemes, gain/slope extraction and report files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .bounds import BOUND_CSV_FIELDS, bound_rows, end_to_end_bound
from .channel import SerEstimate, SimulationConfig, simulate_point
from .constellation import make_psk
from .quantizer import estimate_all_deltas
from .schemes import SCHEMES, full_library, make_policy

SIM_CSV_FIELDS = ("scheme", "snr_db", "trials", "errors_A", "errors_B", "errors_union", "ser", "stderr")
REFERENCE_SCHEME = "fixed-modulo"


class ConfigError(ValueError):
    """Malformed experiment configuration."""


class GainUndefined(ValueError):
    """A curve does not bracket the target rate."""


@dataclass(frozen=True)
class ExperimentSpec:
    M: int = 4
    K: float = 4.0
    snr_db: tuple[float, ...] = tuple(np.arange(0.0, 45.01, 2.5))
    schemes: tuple[str, ...] = SCHEMES
    trial_budget: int = 2 * 10**7
    target_errors: int = 200
    batch_size: int = 20000
    seed: int = 0
    out_dir: str = "results"
    target_rate: float = 1e-4

    def __post_init__(self):
        if not self.schemes:
            raise ConfigError("schemes must be nonempty")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown schemes {unknown}; expected a subset of {SCHEMES}")
        if len(self.snr_db) == 0 or np.any(np.diff(self.snr_db) <= 0):
            raise ConfigError("snr grid must be nonempty and strictly increasing")
        if self.trial_budget <= 0 or self.target_errors <= 0 or self.batch_size <= 0:
            raise ConfigError("trial budget, target errors and batch size must be positive")
        if not 0 < self.target_rate < 1:
            raise ConfigError("target rate must lie in (0, 1)")

    def sim_config(self, scheme: str) -> SimulationConfig:
        return SimulationConfig(
            scheme, tuple(float(s) for s in self.snr_db), self.K, self.M,
            self.trial_budget, self.target_errors, self.seed, self.batch_size,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        d = dict(d)
        for key in ("snr_db", "schemes"):
            if key in d:
                if isinstance(d[key], (str, bytes)) or not hasattr(d[key], "__iter__"):
                    raise ConfigError(f"{key} must be a list")
                d[key] = tuple(d[key])
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "ExperimentSpec":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)


PRESETS = {"fig5": ExperimentSpec()}


# ---------------------------------------------------------------------------
# Gain and slope extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GainReport:
    reference: str
    target: str
    target_rate: float
    gain_db: float | None  # None when either curve misses the target rate
    slopes: dict = field(default_factory=dict)


def _crossing(snr_db, rate, target: float) -> float:
    """SNR (dB) where log10(rate) first falls through log10(target)."""
    snr_db = np.asarray(snr_db, dtype=float)
    rate = np.asarray(rate, dtype=float)
    for i in range(len(rate) - 1):
        r0, r1 = rate[i], rate[i + 1]
        if r0 >= target >= r1 and r0 > 0 and r1 > 0:
            if r0 == r1:
                return float(snr_db[i])
            t = (math.log10(r0) - math.log10(target)) / (math.log10(r0) - math.log10(r1))
            return float(snr_db[i] + t * (snr_db[i + 1] - snr_db[i]))
    raise GainUndefined(f"curve does not bracket rate {target:g}")


def high_snr_slope(snr_db, rate) -> float:
    """Least-squares slope of log10(rate) against log10(snr) over the last
    decade of rates (points within 10x of the smallest positive rate)."""
    snr_db = np.asarray(snr_db, dtype=float)
    rate = np.asarray(rate, dtype=float)
    ok = rate > 0
    if ok.sum() < 2:
        return float("nan")
    x, y = snr_db[ok] / 10.0, np.log10(rate[ok])
    keep = y <= y.min() + 1.0
    if keep.sum() < 2:
        keep = np.zeros_like(keep)
        keep[-2:] = True
    return float(np.polyfit(x[keep], y[keep], 1)[0])


def fit_slope(snr_db, rate) -> float:
    """Least-squares slope of log10(rate) against log10(snr) over all positive points."""
    snr_db = np.asarray(snr_db, dtype=float)
    rate = np.asarray(rate, dtype=float)
    ok = rate > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(snr_db[ok] / 10.0, np.log10(rate[ok]), 1)[0])


def extract_gain(curve_a, curve_b, target_rate: float, names=("a", "b")) -> GainReport:
    """dB gain of curve A over curve B: SNR_B(target) - SNR_A(target).

    Curves are ``(snr_db, rate)`` pairs.  Raises :class:`GainUndefined` if
    either curve does not bracket ``target_rate``.
    """
    sa = _crossing(*curve_a, target_rate)
    sb = _crossing(*curve_b, target_rate)
    slopes = {names[0]: high_snr_slope(*curve_a), names[1]: high_snr_slope(*curve_b)}
    return GainReport(names[1], names[0], target_rate, sb - sa, slopes)


def try_gain(curve_a, curve_b, target_rate: float, names=("a", "b")) -> GainReport:
    try:
        return extract_gain(curve_a, curve_b, target_rate, names)
    except GainUndefined:
        slopes = {names[0]: high_snr_slope(*curve_a), names[1]: high_snr_slope(*curve_b)}
        return GainReport(names[1], names[0], target_rate, None, slopes)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def _cell(args):
    spec, scheme, snr_db = args
    return simulate_point(spec.sim_config(scheme), make_policy(scheme, make_psk(spec.M)), snr_db)


def simulate_schemes(spec: ExperimentSpec, workers: int = 1) -> dict[str, list[SerEstimate]]:
    """Every (scheme, SNR) cell; per-cell seeding makes the result worker-independent."""
    jobs = [(spec, s, float(x)) for s in spec.schemes for x in spec.snr_db]
    if workers <= 1:
        res = [_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as ex:
            res = list(ex.map(_cell, jobs))
    n = len(spec.snr_db)
    return {s: res[i * n:(i + 1) * n] for i, s in enumerate(spec.schemes)}


def sim_rows(scheme: str, estimates: list[SerEstimate]) -> list[list[str]]:
    return [
        [scheme, f"{e.snr_db:.6g}", e.trials, e.errors_a, e.errors_b, e.errors_union, f"{e.ser:.12g}", f"{e.stderr:.12g}"]
        for e in estimates
    ]


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def read_sim_csv(text: str) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    curves: dict[str, list] = {}
    for row in csv.DictReader(io.StringIO(text)):
        curves.setdefault(row["scheme"], []).append((float(row["snr_db"]), float(row["ser"])))
    return {k: (np.array([p[0] for p in v]), np.array([p[1] for p in v])) for k, v in curves.items()}


def bound_reports(spec: ExperimentSpec):
    c = make_psk(spec.M)
    lib = full_library(c)
    deltas = estimate_all_deltas(lib)
    snr = 10.0 ** (np.asarray(spec.snr_db, dtype=float) / 10.0)
    return {s: end_to_end_bound(make_policy(s, c, lib), spec.K, snr, deltas) for s in spec.schemes}


def summarize(spec: ExperimentSpec, curves: dict, bers: dict | None = None) -> dict:
    out = {"spec": _spec_json(spec), "schemes": {}, "gains": []}
    for s, (x, y) in curves.items():
        entry = {"high_snr_slope": _num(high_snr_slope(x, y)), "slope_all_points": _num(fit_slope(x, y))}
        if bers and s in bers:
            entry["ber"] = [_num(v) for v in bers[s]]
            entry["ber_high_snr_slope"] = _num(high_snr_slope(x, bers[s]))
        out["schemes"][s] = entry
    ref = REFERENCE_SCHEME if REFERENCE_SCHEME in curves else next(iter(curves))
    for s in curves:
        if s == ref:
            continue
        g = try_gain(curves[s], curves[ref], spec.target_rate, (s, ref))
        item = {"target": s, "reference": ref, "metric": "ser", "target_rate": spec.target_rate, "gain_db": _num(g.gain_db)}
        out["gains"].append(item)
        if bers and s in bers and ref in bers:
            gb = try_gain((curves[s][0], bers[s]), (curves[ref][0], bers[ref]), spec.target_rate, (s, ref))
            out["gains"].append(dict(item, metric="ber", gain_db=_num(gb.gain_db)))
    return out


def _num(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None
    return round(float(v), 9)


def _spec_json(spec: ExperimentSpec) -> dict:
    d = asdict(spec)
    d["snr_db"] = [float(v) for v in spec.snr_db]
    d["schemes"] = list(spec.schemes)
    d.pop("out_dir")
    return d


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> dict[str, Path]:
    """Simulate every scheme, evaluate bounds, and write CSV/JSON reports."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sims = simulate_schemes(spec, workers)
    bounds = bound_reports(spec)
    written = {}
    for s in spec.schemes:
        p = out / f"simulate_{s}.csv"
        p.write_text(write_csv(SIM_CSV_FIELDS, sim_rows(s, sims[s])))
        written[f"simulate_{s}"] = p
        p = out / f"bounds_{s}.csv"
        p.write_text(write_csv(BOUND_CSV_FIELDS, bound_rows(bounds[s])))
        written[f"bounds_{s}"] = p
    curves = {s: (np.array([e.snr_db for e in v]), np.array([e.ser for e in v])) for s, v in sims.items()}
    bers = {s: np.array([e.ber for e in v]) for s, v in sims.items()}
    p = out / "summary.json"
    p.write_text(json.dumps(summarize(spec, curves, bers), indent=1, sort_keys=True) + "\n")
    written["summary"] = p
    return written


def with_overrides(spec: ExperimentSpec, **kw) -> ExperimentSpec:
    return replace(spec, **{k: v for k, v in kw.items() if v is not None})
