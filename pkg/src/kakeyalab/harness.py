"""Scale sweeps, exponent fits and result persistence."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .generators import GeneratorSpec, generate
from .geometry import cap_decompose
from .norms import BroadParams, broad_norm, default_candidates, lp_norm

SEED_ENV = "KAKEYALAB_SEED"
RECORDS = "records.csv"
MANIFEST = "manifest.json"


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


class InsufficientRecords(ValueError):
    pass


@dataclass(frozen=True)
class NormConfig:
    kind: str = "lp"  # "lp" or "broad"
    p: float = 2.0
    k: int = 2
    A: int = 1
    beta: float = 0.25
    net_size: int = 8
    resolution_factor: float = 0.25  # quadrature step as a fraction of delta

    def __post_init__(self):
        if self.kind not in ("lp", "broad"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if not 0 < self.resolution_factor <= 0.25:
            raise ValueError("resolution_factor must lie in (0, 1/4]")


@dataclass(frozen=True)
class SweepRecord:
    delta: float
    norm_value: float
    norm_kind: str
    p: float
    k: int
    A: int
    beta: float
    family_kind: str
    n: int
    tube_count: int
    total_volume: float
    seed: int
    wall_time: float
    config_hash: str

    @property
    def normalized(self) -> float:
        """``norm / (sum |T|)^{1/p}``."""
        return self.norm_value / self.total_volume ** (1 / self.p) if self.total_volume else 0.0

    def to_row(self) -> list:
        # repr keeps floats bit-exact through the CSV
        return [repr(v) if isinstance(v, float) else v for v in asdict(self).values()]

    @classmethod
    def from_row(cls, row: dict) -> "SweepRecord":
        out = {}
        for f in fields(cls):
            v = row[f.name]
            out[f.name] = float(v) if f.type == "float" else int(v) if f.type == "int" else v
        return cls(**out)


FIELDS = [f.name for f in fields(SweepRecord)]


def config_hash(spec: GeneratorSpec, norm: NormConfig) -> str:
    d = spec.to_dict()
    d.pop("delta")
    blob = json.dumps({"spec": d, "norm": asdict(norm)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class ResultStore:
    """Append-only ``records.csv`` plus a JSON manifest keyed by config hash."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.records_path = self.dir / RECORDS
        self.manifest_path = self.dir / MANIFEST

    def register(self, spec: GeneratorSpec, norm: NormConfig) -> str:
        h = config_hash(spec, norm)
        man = self.manifest()
        if h not in man:
            tmpl = spec.to_dict()
            tmpl.pop("delta")
            man[h] = {"spec": tmpl, "norm": asdict(norm), "seed": spec.seed, "version": __version__}
            tmp = self.manifest_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(man, indent=2, sort_keys=True))
            os.replace(tmp, self.manifest_path)
        return h

    def manifest(self) -> dict:
        if self.manifest_path.exists():
            return json.loads(self.manifest_path.read_text())
        return {}

    def append(self, rec: SweepRecord) -> None:
        new = not self.records_path.exists()
        with open(self.records_path, "a", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(FIELDS)
            w.writerow(rec.to_row())
            fh.flush()
            os.fsync(fh.fileno())

    def read(self, config: Optional[str] = None) -> List[SweepRecord]:
        if not self.records_path.exists():
            return []
        with open(self.records_path, newline="") as fh:
            recs = [SweepRecord.from_row(r) for r in csv.DictReader(fh)]
        return [r for r in recs if config is None or r.config_hash == config]


def evaluate(spec: GeneratorSpec, norm: NormConfig) -> SweepRecord:
    """One sweep point: regenerate the family at ``spec.delta`` and measure it."""
    t0 = time.perf_counter()
    f = generate(spec)
    res = norm.resolution_factor * spec.delta
    if norm.kind == "lp":
        value = lp_norm(f, norm.p, resolution=res)
    elif not len(f):
        value = 0.0
    else:
        caps = cap_decompose(f, norm.beta)
        cands = default_candidates(caps.centers, norm.k, spec.n, norm.net_size, seed=spec.seed)
        params = BroadParams(norm.k, norm.A, norm.p, norm.beta, cands)
        value = broad_norm(f, params=params, resolution=res, caps=caps).value
    return SweepRecord(
        spec.delta, float(value), norm.kind, float(norm.p), norm.k, norm.A, float(norm.beta), spec.kind,
        spec.n, len(f), float(f.total_volume), spec.seed, time.perf_counter() - t0, config_hash(spec, norm),
    )


def _evaluate_args(args):
    return evaluate(*args)


def sweep(spec: GeneratorSpec, deltas: Sequence[float], norm: NormConfig = NormConfig(),
          out=None, workers: int = 1) -> List[SweepRecord]:
    """Measure ``norm`` on the family regenerated at every ``delta`` (same seed).

    Points run one per worker; records are persisted in ``delta`` order by
    this process alone, so a failure leaves every earlier point on disk.
    """
    deltas = [float(d) for d in deltas]
    if len(deltas) < 3:
        raise ValueError("a sweep needs at least 3 scales")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    if deltas[0] > 1 / 16:
        raise ValueError("deltas must all be <= 1/16")
    store = ResultStore(out) if out is not None else None
    if store:
        store.register(spec, norm)
    jobs = [(spec.with_(delta=d), norm) for d in deltas]
    records: List[SweepRecord] = []
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            futures = [ex.submit(_evaluate_args, j) for j in jobs]
            for fut in futures:
                rec = fut.result()
                records.append(rec)
                if store:
                    store.append(rec)
    else:
        for j in jobs:
            rec = evaluate(*j)
            records.append(rec)
            if store:
                store.append(rec)
    return records


@dataclass(frozen=True)
class FitResult:
    slope: float  # exponent of 1/delta in norm / (sum |T|)^{1/p}
    intercept: float
    r_squared: float
    theory_slope: float
    n_points: int
    log_slope: float  # slope once a log(log(1/delta)) column is added
    log_power: float  # coefficient of that column

    def to_dict(self) -> dict:
        return asdict(self)


def theory_slope(n: int, p: float) -> float:
    """Growth exponent of ``1/delta`` allowed by the maximal estimate."""
    return max(0.0, n - 1 - n / p)


def _ols(X: np.ndarray, y: np.ndarray):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    return coef, r2


def fit_exponent(records: Iterable[SweepRecord]) -> FitResult:
    """OLS of ``log(norm / (sum |T|)^{1/p})`` against ``log(1/delta)``."""
    recs = sorted(records, key=lambda r: -r.delta)
    if len({r.delta for r in recs}) < 5 or len(recs) != len({r.delta for r in recs}):
        raise InsufficientRecords("a fit needs at least 5 records at distinct scales")
    if len({r.config_hash for r in recs}) != 1:
        raise ValueError("records come from different configurations")
    if any(r.normalized <= 0 for r in recs):
        raise ValueError("cannot fit a log-law through zero norms")
    x = np.log([1 / r.delta for r in recs])
    y = np.log([r.normalized for r in recs])
    one = np.ones_like(x)
    (b0, b1), r2 = _ols(np.column_stack([one, x]), y)
    (_, c1, c2), _ = _ols(np.column_stack([one, x, np.log(x)]), y)
    return FitResult(float(b1), float(b0), r2, theory_slope(recs[0].n, recs[0].p), len(recs), float(c1), float(c2))


# -- the classical planar log law -------------------------------------------------

LOG_LAW_DELTAS = tuple(2.0 ** -j for j in range(4, 10))


@dataclass(frozen=True)
class LogLawResult:
    deltas: tuple
    ratios: tuple  # ||sum chi_T||_2^2 / (delta #T v_1)
    slope: float
    r_squared: float

    @property
    def passed(self) -> bool:
        growing = all(b > a for a, b in zip(self.ratios, self.ratios[1:]))
        return growing and self.slope > 0 and self.r_squared >= 0.8


def planar_log_law(deltas: Sequence[float] = LOG_LAW_DELTAS, seed: Optional[int] = None, out=None) -> LogLawResult:
    """Planar L^2 overlap of a maximal bush, regressed linearly on ``log(1/delta)``."""
    seed = default_seed() if seed is None else seed
    recs = sweep(GeneratorSpec("bush", 2, deltas[0], seed=seed), deltas, NormConfig("lp", 2.0), out=out)
    # delta #T v_1 with v_1 = 2 is the total tube area
    ratios = tuple(r.norm_value ** 2 / r.total_volume for r in recs)
    x = np.log([1 / d for d in deltas])
    (b0, b1), r2 = _ols(np.column_stack([np.ones_like(x), x]), np.array(ratios))
    return LogLawResult(tuple(deltas), ratios, float(b1), r2)


def report(out_dir) -> str:
    """Text summary of every configuration in ``out_dir``; also writes ``fits.csv``."""
    store = ResultStore(out_dir)
    man = store.manifest()
    recs = store.read()
    lines, rows = [], []
    for h in sorted({r.config_hash for r in recs}):
        group = [r for r in recs if r.config_hash == h]
        info = man.get(h, {})
        kind = info.get("spec", {}).get("kind", group[0].family_kind)
        lines.append(f"{h}  {kind} n={group[0].n} {group[0].norm_kind} p={group[0].p:g}  records={len(group)}")
        for r in sorted(group, key=lambda r: -r.delta):
            lines.append(f"    delta={r.delta:<12.6g} norm={r.norm_value:<14.8g} tubes={r.tube_count}")
        try:
            fit = fit_exponent(group)
        except (InsufficientRecords, ValueError) as e:
            lines.append(f"    fit: {e}")
            continue
        lines.append(f"    fit: slope={fit.slope:.4f} theory={fit.theory_slope:.4f} r2={fit.r_squared:.4f} "
                     f"log_power={fit.log_power:.4f}")
        rows.append({"config_hash": h, **fit.to_dict()})
    if rows:
        with open(store.dir / "fits.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return "\n".join(lines) if lines else "no records"
