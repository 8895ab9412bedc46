"""Vehicle reaction envelopes at scale, exceedance rates and rate spectra.

Vehicle sweeps never see the live-load model, so one envelope set per
(fleet, geometry, support, sweep) serves every model. Sets are cached on disk
as CSV plus a JSON sidecar describing the key.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .beam_engine import (
    BridgeGeometry,
    ReactionEnvelope,
    SupportId,
    SweepConfig,
    build_influence_line,
    support_letter,
    sweep_many,
)
from .load_models import LiveLoadModel, default_model_path, load_model, model_envelope
from .wim import VehicleRecord, read_wim, to_train

CACHE_ENV = "SUBSTRUCTURE_ERS_CACHE"
SPECTRUM_HEADER = ["span_m", "rate_percent", "n_exceeding", "n_total"]
CACHE_HEADER = ["vehicle_id", "max_kn", "min_kn", "pos_max_m", "pos_min_m"]


def default_span_grid() -> list[float]:
    """1..30 m every metre, then 35..100 m every 5 m (44 spans)."""
    return [float(s) for s in range(1, 31)] + [float(s) for s in range(35, 101, 5)]


def fleet_fingerprint(records: Sequence[VehicleRecord]) -> str:
    h = hashlib.sha256()
    for r in records:
        h.update(repr((r.id, r.axle_weights, r.axle_spacings)).encode())
    return h.hexdigest()


@dataclass(frozen=True)
class EnvelopeKey:
    fleet: str
    span_count: int
    span_length: float
    support_index: int
    step: float
    directions: str

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:32]


@dataclass
class EnvelopeSet:
    key: EnvelopeKey
    ids: np.ndarray
    # columns: max_kn, min_kn, pos_max_m, pos_min_m
    values: np.ndarray
    from_cache: bool = False

    def __len__(self):
        return len(self.ids)

    @property
    def max(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def min(self) -> np.ndarray:
        return self.values[:, 1]

    def envelope(self, i: int) -> ReactionEnvelope:
        v = self.values[i]
        return ReactionEnvelope(float(v[0]), float(v[1]), float(v[2]), float(v[3]))


def _cache_paths(cache_dir: Path, key: EnvelopeKey) -> tuple[Path, Path]:
    d = key.digest()
    return cache_dir / f"{d}.csv", cache_dir / f"{d}.json"


def _read_cache(cache_dir: Path, key: EnvelopeKey) -> EnvelopeSet | None:
    data, side = _cache_paths(cache_dir, key)
    if not data.exists() or not side.exists():
        return None
    try:
        if json.loads(side.read_text(encoding="utf-8")) != asdict(key):
            return None
        with open(data, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            if next(reader) != CACHE_HEADER:
                return None
            rows = list(reader)
    except (OSError, ValueError, StopIteration):
        return None
    ids = np.array([int(r[0]) for r in rows], dtype=np.int64)
    values = np.array([[float(x) for x in r[1:]] for r in rows], dtype=float).reshape(-1, 4)
    return EnvelopeSet(key, ids, values, from_cache=True)


def _write_cache(cache_dir: Path, es: EnvelopeSet) -> None:
    cache_dir.mkdir(parents=True, exist_ok=True)
    data, side = _cache_paths(cache_dir, es.key)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CACHE_HEADER)
    for vid, row in zip(es.ids, es.values):
        w.writerow([int(vid), *(repr(float(x)) for x in row)])
    # publish atomically: readers see either no entry or a complete one
    for path, text in ((data, buf.getvalue()),
                       (side, json.dumps(asdict(es.key), sort_keys=True, indent=2) + "\n")):
        tmp = path.with_suffix(path.suffix + f".{os.getpid()}.tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)


def resolve_cache_dir(cache_dir) -> Path | None:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else None


def vehicle_envelopes(records: Sequence[VehicleRecord], geometry: BridgeGeometry, support: int,
                      cfg: SweepConfig = SweepConfig(), cache_dir=None, jobs: int | None = None,
                      fingerprint: str | None = None) -> EnvelopeSet:
    """One reaction envelope per vehicle, ordered by record id."""
    if not records:
        raise ValueError("empty fleet")
    SupportId(geometry, support)
    key = EnvelopeKey(fingerprint or fleet_fingerprint(records), geometry.span_count,
                      float(geometry.span_length), support, float(cfg.step), cfg.directions)
    cache = resolve_cache_dir(cache_dir)
    if cache is not None:
        hit = _read_cache(cache, key)
        if hit is not None and len(hit) == len(records):
            return hit
    order = sorted(range(len(records)), key=lambda i: records[i].id)
    ordered = [records[i] for i in order]
    il = build_influence_line(geometry, support)
    values = sweep_many(il, [to_train(r) for r in ordered], cfg, jobs=jobs)
    es = EnvelopeSet(key, np.array([r.id for r in ordered], dtype=np.int64), values)
    if cache is not None:
        _write_cache(cache, es)
    return es


def exceeds(vehicle_env: ReactionEnvelope, reference_env: ReactionEnvelope) -> bool:
    return (vehicle_env.max_reaction > reference_env.max_reaction
            or vehicle_env.min_reaction < reference_env.min_reaction)


@dataclass(frozen=True)
class ExceedanceRate:
    rate_percent: float
    n_exceeding: int
    n_total: int
    n_max_side: int
    n_min_side: int


def exceedance_rate(envelopes: EnvelopeSet, reference_env: ReactionEnvelope) -> ExceedanceRate:
    n = len(envelopes)
    if n == 0:
        raise ValueError("empty envelope set")
    above = envelopes.max > reference_env.max_reaction
    below = envelopes.min < reference_env.min_reaction
    k = int(np.count_nonzero(above | below))
    return ExceedanceRate(100.0 * k / n, k, n, int(above.sum()), int(below.sum()))


@dataclass
class SpectrumPoint:
    span_m: float
    rate_percent: float
    n_exceeding: int
    n_total: int
    n_max_side: int = 0
    n_min_side: int = 0


@dataclass
class ExceedanceSpectrum:
    model: str
    fleet: str
    span_count: int
    support_index: int
    points: list[SpectrumPoint] = field(default_factory=list)
    cache_keys: list[str] = field(default_factory=list)
    all_cached: bool = False

    @property
    def support_letter(self) -> str | None:
        return support_letter(self.span_count, self.support_index)

    @property
    def spans(self) -> np.ndarray:
        return np.array([p.span_m for p in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate_percent for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SPECTRUM_HEADER)
        for p in self.points:
            w.writerow([f"{p.span_m:.10g}", repr(float(p.rate_percent)), p.n_exceeding, p.n_total])
        return buf.getvalue()

    def sides_csv(self) -> str:
        lines = ["span_m,n_max_side,n_min_side"]
        lines += [f"{p.span_m:.10g},{p.n_max_side},{p.n_min_side}" for p in self.points]
        return "\n".join(lines) + "\n"


def read_spectrum_csv(text: str) -> list[SpectrumPoint]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != SPECTRUM_HEADER:
        raise ValueError(f"spectrum CSV header must be {','.join(SPECTRUM_HEADER)}")
    points = []
    for i, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        try:
            span, rate, k, n = float(r[0]), float(r[1]), int(r[2]), int(r[3])
        except (ValueError, IndexError):
            raise ValueError(f"malformed spectrum row {i}: {r}") from None
        points.append(SpectrumPoint(span, rate, k, n))
    return points


def compute_ers(records: Sequence[VehicleRecord], family: int, support_index: int,
                model: LiveLoadModel, grid: Sequence[float] | None = None,
                cfg: SweepConfig = SweepConfig(), cache_dir=None, jobs: int | None = None,
                fleet_name: str = "fleet", memo: dict | None = None) -> ExceedanceSpectrum:
    """Exceedance rate of the fleet against ``model`` at every span of ``grid``.

    Any failure aborts the whole spectrum; partial spectra are never returned.
    """
    grid = default_span_grid() if grid is None else sorted(float(s) for s in grid)
    SupportId(BridgeGeometry(family, 1.0), support_index)
    # coverage checked up front so no sweep is wasted on an impossible spectrum
    for span in grid:
        if not model.applicable(span):
            raise ValueError(f"model {model.name!r} does not cover span {span:g} m")
    fp = fleet_fingerprint(records)
    spec = ExceedanceSpectrum(model.name, fleet_name, family, support_index)
    cached = []
    for span in grid:
        geometry = BridgeGeometry(family, span)
        il = build_influence_line(geometry, support_index)
        ref = model_envelope(il, model, span, geometry, cfg)
        es = None
        key = (fp, family, span, support_index, cfg)
        if memo is not None:
            es = memo.get(key)
        if es is None:
            es = vehicle_envelopes(records, geometry, support_index, cfg, cache_dir, jobs, fp)
            if memo is not None:
                memo[key] = es
        cached.append(es.from_cache)
        r = exceedance_rate(es, ref)
        spec.points.append(SpectrumPoint(span, r.rate_percent, r.n_exceeding, r.n_total,
                                         r.n_max_side, r.n_min_side))
        spec.cache_keys.append(es.key.digest())
    spec.all_cached = all(cached)
    return spec


# --------------------------------------------------------------------------
# campaigns

def _digest_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "-", text).strip("-").lower()


def _families(raw) -> list[tuple[int, list[int]]]:
    if isinstance(raw, dict):
        return [(int(k), [int(s) for s in v]) for k, v in raw.items()]
    out = []
    for item in raw:
        if isinstance(item, dict):
            n = int(item["spans"])
            out.append((n, [int(s) for s in item.get("supports", range(n + 1))]))
        else:
            out.append((int(item), list(range(int(item) + 1))))
    return out


def run_campaign(config, jobs: int | None = None) -> dict:
    """Run every (fleet, family, support, model) cell and write spectra plus a manifest.

    ``config`` is a dict or a path to a JSON file. Relative paths resolve
    against the config file's directory. A failing cell is recorded in the
    manifest and the remaining cells still run.
    """
    base = Path.cwd()
    if not isinstance(config, dict):
        path = Path(config)
        config = json.loads(path.read_text(encoding="utf-8"))
        base = path.resolve().parent

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    out_dir = resolve(config.get("output_dir", "campaign-out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = config.get("cache_dir")
    cache_dir = resolve(cache_dir) if cache_dir else (resolve_cache_dir(None) or out_dir / "cache")
    cfg = SweepConfig(float(config.get("step", 0.01)), config.get("directions", "both"))
    grid = config.get("grid") or default_span_grid()
    jobs = jobs if jobs is not None else config.get("jobs")

    fleets = {}
    for name, fpath in config.get("fleets", {}).items():
        fpath = resolve(fpath)
        try:
            recs, report = read_wim(fpath)
            fleets[name] = (recs, _digest_file(fpath), None)
        except (OSError, ValueError) as exc:
            fleets[name] = (None, None, f"fleet {name!r}: {exc}")

    models = []
    for entry in config.get("models", []):
        try:
            mpath = default_model_path(entry) if not str(entry).endswith(".json") else resolve(entry)
        except KeyError:
            mpath = resolve(entry)
        try:
            models.append((str(entry), load_model(mpath), _digest_file(mpath), None))
        except (OSError, ValueError) as exc:
            models.append((str(entry), None, None, f"model {entry!r}: {exc}"))

    memo: dict = {}
    cells = []
    for fname, (recs, fdigest, ferr) in fleets.items():
        for family, supports in _families(config.get("families", [1])):
            for support in supports:
                for mentry, model, mdigest, merr in models:
                    cell = {
                        "fleet": fname, "family": family, "support": support,
                        "letter": support_letter(family, support), "model": mentry,
                        "fleet_digest": fdigest, "model_digest": mdigest,
                        "sweep": {"step": cfg.step, "directions": cfg.directions},
                    }
                    err = ferr or merr
                    if err is None:
                        try:
                            if not recs:
                                raise ValueError("fleet has no accepted records")
                            spec = compute_ers(recs, family, support, model, grid, cfg,
                                               cache_dir, jobs, fname, memo)
                            stem = f"{_slug(fname)}__{family}span__s{support}__{_slug(model.name)}"
                            (out_dir / f"{stem}.csv").write_text(spec.to_csv(), encoding="utf-8")
                            (out_dir / f"{stem}.sides.csv").write_text(spec.sides_csv(), encoding="utf-8")
                            cell.update(state="cache-hit" if spec.all_cached else "done",
                                        output=f"{stem}.csv", cache_keys=spec.cache_keys)
                        except (ValueError, OSError) as exc:
                            err = str(exc)
                    if err is not None:
                        cell.update(state="error", error=err)
                    cells.append(cell)

    manifest = {
        "config_digest": hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest(),
        "grid": list(map(float, grid)),
        "cache_dir": str(cache_dir),
        "cells": cells,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    return manifest
