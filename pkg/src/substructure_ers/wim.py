"""Weigh-in-motion vehicle records: CSV parsing, validation, statistics, synthesis.

Canonical CSV layout, one vehicle per row::

    id,axle_count,w1,...,wK,s1,...,s(K-1)[,gvw][,timestamp][,lane][,direction]

with K the largest axle count in the file, weights in kN, spacings in m and
unused trailing cells left empty. Bad rows are flagged and skipped, never fatal.
"""
from __future__ import annotations

import csv
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Literal, Sequence

import numpy as np

from .beam_engine import AxleTrain

MIN_AXLES = 2
MAX_AXLES = 13
GVW_TOLERANCE = 0.01

REASONS = ("bad-count", "nonpositive-weight", "nonpositive-spacing", "gvw-mismatch", "malformed")

_WEIGHT_COL = re.compile(r"^w(\d+)$")
_SPACING_COL = re.compile(r"^s(\d+)$")
_OPTIONAL = ("gvw", "timestamp", "lane", "direction")


class WimFormatError(ValueError):
    """The file itself (not a row) cannot be read as WIM CSV."""


@dataclass(frozen=True)
class VehicleRecord:
    id: int
    axle_weights: tuple[float, ...]
    axle_spacings: tuple[float, ...]
    timestamp: str | None = None
    lane: str | None = None
    direction: str | None = None

    @property
    def axle_count(self) -> int:
        return len(self.axle_weights)

    @property
    def gvw(self) -> float:
        return math.fsum(self.axle_weights)

    @property
    def heaviest_axle(self) -> float:
        return max(self.axle_weights)

    @property
    def length(self) -> float:
        return math.fsum(self.axle_spacings)

    def scaled(self, factor: float) -> "VehicleRecord":
        return VehicleRecord(self.id, tuple(w * factor for w in self.axle_weights),
                             self.axle_spacings, self.timestamp, self.lane, self.direction)


@dataclass
class ValidationReport:
    records_total: int = 0
    records_accepted: int = 0
    # (line number, vehicle id or None, reason code)
    flagged: list[tuple[int, int | None, str]] = field(default_factory=list)

    @property
    def records_flagged(self) -> int:
        return len(self.flagged)

    def reason_counts(self) -> Counter:
        return Counter(reason for _, _, reason in self.flagged)


def validate(record: VehicleRecord, gvw: float | None = None) -> str | None:
    """Reason code of the first failed check, or None."""
    n = record.axle_count
    if not MIN_AXLES <= n <= MAX_AXLES or len(record.axle_spacings) != n - 1:
        return "bad-count"
    if any(not w > 0 for w in record.axle_weights):
        return "nonpositive-weight"
    if any(not s > 0 for s in record.axle_spacings):
        return "nonpositive-spacing"
    if gvw is not None and abs(gvw - record.gvw) > GVW_TOLERANCE * abs(record.gvw):
        return "gvw-mismatch"
    return None


class _Layout:
    def __init__(self, header: Sequence[str]):
        names = [h.strip() for h in header]
        self.index = {name: i for i, name in enumerate(names)}
        if "id" not in self.index or "axle_count" not in self.index:
            raise WimFormatError("WIM header must start with 'id,axle_count'")
        weights = sorted((int(m.group(1)), i) for i, h in enumerate(names)
                         if (m := _WEIGHT_COL.match(h)))
        spacings = sorted((int(m.group(1)), i) for i, h in enumerate(names)
                          if (m := _SPACING_COL.match(h)))
        if not weights or [k for k, _ in weights] != list(range(1, len(weights) + 1)):
            raise WimFormatError("WIM header needs weight columns w1..wK")
        if [k for k, _ in spacings] != list(range(1, len(spacings) + 1)):
            raise WimFormatError("spacing columns must be s1..sJ without gaps")
        if len(spacings) != len(weights) - 1:
            raise WimFormatError(
                f"header has {len(weights)} weight columns but {len(spacings)} spacing columns")
        known = {"id", "axle_count", *_OPTIONAL}
        unknown = [h for h in names if h not in known
                   and not _WEIGHT_COL.match(h) and not _SPACING_COL.match(h)]
        if unknown:
            raise WimFormatError(f"unknown WIM columns: {', '.join(unknown)}")
        self.weights = [i for _, i in weights]
        self.spacings = [i for _, i in spacings]
        self.width = len(names)

    def cell(self, row, name):
        i = self.index.get(name)
        if i is None or i >= len(row):
            return None
        v = row[i].strip()
        return v or None


def _filled(row, cols) -> list[str]:
    vals = [row[i].strip() if i < len(row) else "" for i in cols]
    while vals and not vals[-1]:
        vals.pop()
    return vals


def iter_wim(stream: Iterable[str]) -> Iterator[tuple[int, VehicleRecord | None, int | None, str | None]]:
    """Stream rows as (line number, record or None, id or None, reason or None).

    Only one row is held in memory at a time.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise WimFormatError("empty WIM file") from None
    except (csv.Error, UnicodeDecodeError) as exc:
        raise WimFormatError(f"unreadable WIM header: {exc}") from None
    layout = _Layout(header)
    line = 1
    while True:
        try:
            row = next(reader)
        except StopIteration:
            return
        except csv.Error:
            line += 1
            yield line, None, None, "malformed"
            continue
        line += 1
        if not row or all(not c.strip() for c in row):
            continue
        yield (line, *_parse_row(layout, row))


def _parse_row(layout: _Layout, row: list[str]):
    vid = None
    try:
        vid = int(layout.cell(row, "id"))
        count = int(layout.cell(row, "axle_count"))
    except (TypeError, ValueError):
        return None, vid, "malformed"
    if len(row) > layout.width:
        return None, vid, "malformed"
    w_raw = _filled(row, layout.weights)
    s_raw = _filled(row, layout.spacings)
    try:
        weights = tuple(float(w) for w in w_raw)
        spacings = tuple(float(s) for s in s_raw)
        gvw_cell = layout.cell(row, "gvw")
        gvw = float(gvw_cell) if gvw_cell is not None else None
    except ValueError:
        return None, vid, "malformed"
    if not all(map(math.isfinite, weights + spacings)):
        return None, vid, "malformed"
    if count != len(weights) or len(spacings) != count - 1:
        return None, vid, "bad-count"
    rec = VehicleRecord(vid, weights, spacings, layout.cell(row, "timestamp"),
                        layout.cell(row, "lane"), layout.cell(row, "direction"))
    reason = validate(rec, gvw)
    if reason:
        return None, vid, reason
    return rec, vid, None


def parse_wim(stream: Iterable[str]) -> tuple[list[VehicleRecord], ValidationReport]:
    """Parse a WIM CSV stream; flagged rows are counted in the report, not returned."""
    records: list[VehicleRecord] = []
    report = ValidationReport()
    for line, rec, vid, reason in iter_wim(stream):
        report.records_total += 1
        if rec is None:
            report.flagged.append((line, vid, reason))
        else:
            records.append(rec)
    report.records_accepted = len(records)
    return records, report


def read_wim(path) -> tuple[list[VehicleRecord], ValidationReport]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_wim(fh)


def write_wim(records: Sequence[VehicleRecord], stream: IO[str]) -> None:
    """Write records in the canonical layout; floats use shortest round-trip repr."""
    k = max((r.axle_count for r in records), default=MIN_AXLES)
    extras = [name for name in ("timestamp", "lane", "direction")
              if any(getattr(r, name) is not None for r in records)]
    header = ["id", "axle_count", *(f"w{i}" for i in range(1, k + 1)),
              *(f"s{i}" for i in range(1, k)), *extras]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for r in records:
        n = r.axle_count
        row = [str(r.id), str(n), *map(repr, r.axle_weights), *([""] * (k - n)),
               *map(repr, r.axle_spacings), *([""] * (k - n))]
        row += [getattr(r, name) or "" for name in extras]
        writer.writerow(row)


def save_wim(records: Sequence[VehicleRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_wim(records, fh)


def to_train(record: VehicleRecord, direction: Literal["forward", "reverse"] = "forward") -> AxleTrain:
    if direction == "forward":
        return AxleTrain(record.axle_weights, record.axle_spacings)
    if direction == "reverse":
        return AxleTrain(record.axle_weights[::-1], record.axle_spacings[::-1])
    raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")


# --------------------------------------------------------------------------
# statistics

def _gvws(records: Sequence[VehicleRecord]) -> np.ndarray:
    return np.fromiter((r.gvw for r in records), dtype=float, count=len(records))


def gvw_percentile(records: Sequence[VehicleRecord], p: float) -> float:
    """Nearest-rank percentile of GVW; p = 0 gives the minimum."""
    if not records:
        raise ValueError("no records")
    if not 0 <= p <= 100:
        raise ValueError(f"percentile must be in [0, 100], got {p}")
    g = np.sort(_gvws(records))
    rank = max(1, math.ceil(p / 100 * len(g)))
    return float(g[rank - 1])


def filter_above(records: Sequence[VehicleRecord], threshold: float) -> list[VehicleRecord]:
    return [r for r in records if r.gvw > threshold]


@dataclass(frozen=True)
class StatsRow:
    key: str
    count: int
    mean_gvw: float
    std_gvw: float
    mean_heaviest: float
    std_heaviest: float


def summary_stats(records: Sequence[VehicleRecord], ddof: int = 0) -> list[StatsRow]:
    """Count, GVW mean/std and heaviest-axle mean/std per axle count, plus 'all'.

    Standard deviations are population values by default (``ddof=0``).
    """
    if not records:
        raise ValueError("no records")
    counts = np.fromiter((r.axle_count for r in records), dtype=int, count=len(records))
    gvw = _gvws(records)
    heavy = np.fromiter((r.heaviest_axle for r in records), dtype=float, count=len(records))

    def row(key, mask):
        n = int(mask.sum())
        sd = (lambda a: float(np.std(a, ddof=ddof)) if n > ddof else float("nan"))
        return StatsRow(key, n, float(gvw[mask].mean()), sd(gvw[mask]),
                        float(heavy[mask].mean()), sd(heavy[mask]))

    rows = [row("all", np.ones(len(records), dtype=bool))]
    rows += [row(str(k), counts == k) for k in np.unique(counts)]
    return rows


def format_stats(rows: Sequence[StatsRow], name: str = "") -> str:
    prefix = f"{name}, " if name else ""
    lines = ["axles,count,mean_gvw_kn,std_gvw_kn,mean_heaviest_kn,std_heaviest_kn"]
    for r in rows:
        lines.append(f"{r.key},{r.count},{r.mean_gvw:.2f},{r.std_gvw:.2f},"
                     f"{r.mean_heaviest:.2f},{r.std_heaviest:.2f}")
    lines += [f"# {prefix}{r.key}: count {r.count:,}, mean GVW {r.mean_gvw:.2f}, σ {r.std_gvw:.2f}"
              for r in rows[:1]]
    return "\n".join(lines) + "\n"


def gvw_histogram(records: Sequence[VehicleRecord], bin_width: float) -> list[tuple[float, int]]:
    """Half-open bins [k w, (k+1) w) from the lowest to the highest occupied bin."""
    if not bin_width > 0:
        raise ValueError(f"bin width must be positive, got {bin_width}")
    if not records:
        return []
    k = np.floor(_gvws(records) / bin_width).astype(np.int64)
    lo = int(k.min())
    counts = np.bincount(k - lo)
    return [((lo + i) * bin_width, int(c)) for i, c in enumerate(counts)]


# --------------------------------------------------------------------------
# synthetic fleets

@dataclass(frozen=True)
class VehicleClass:
    """One axle class: lognormal GVW (parameters of ln kN) and a geometry template."""

    axle_count: int
    weight: float
    gvw_log_mean: float
    gvw_log_sigma: float
    axle_fractions: tuple[float, ...]
    spacings: tuple[float, ...]

    def __post_init__(self):
        if not MIN_AXLES <= self.axle_count <= MAX_AXLES:
            raise ValueError(f"axle count {self.axle_count} outside {MIN_AXLES}..{MAX_AXLES}")
        if len(self.axle_fractions) != self.axle_count or len(self.spacings) != self.axle_count - 1:
            raise ValueError(f"class {self.axle_count}: template lengths do not match axle count")
        if self.weight <= 0 or self.gvw_log_sigma <= 0:
            raise ValueError(f"class {self.axle_count}: weight and sigma must be positive")
        if any(f <= 0 for f in self.axle_fractions) or any(s <= 0 for s in self.spacings):
            raise ValueError(f"class {self.axle_count}: template values must be positive")

    @classmethod
    def from_moments(cls, axle_count, weight, mean_kn, std_kn, axle_fractions, spacings):
        s2 = math.log1p((std_kn / mean_kn) ** 2)
        return cls(axle_count, weight, math.log(mean_kn) - s2 / 2, math.sqrt(s2),
                   tuple(axle_fractions), tuple(spacings))


@dataclass(frozen=True)
class FleetSpec:
    classes: tuple[VehicleClass, ...]
    weight_jitter: float = 0.15
    spacing_jitter: float = 0.05

    def __post_init__(self):
        if not self.classes:
            raise ValueError("fleet spec has no classes")
        total = math.fsum(c.weight for c in self.classes)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"class weights must sum to 1, got {total}")
        if not 0 <= self.weight_jitter < 1 or not 0 <= self.spacing_jitter < 1:
            raise ValueError("jitter must be in [0, 1)")

    @classmethod
    def from_json(cls, text: str) -> "FleetSpec":
        raw = json.loads(text)
        try:
            classes = []
            for c in raw["classes"]:
                c = dict(c)
                if "gvw_mean_kn" in c:
                    classes.append(VehicleClass.from_moments(
                        c["axle_count"], c["weight"], c["gvw_mean_kn"], c["gvw_std_kn"],
                        c["axle_fractions"], c["spacings_m"]))
                else:
                    classes.append(VehicleClass(
                        c["axle_count"], c["weight"], c["gvw_log_mean"], c["gvw_log_sigma"],
                        tuple(c["axle_fractions"]), tuple(c["spacings_m"])))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"invalid fleet spec: {exc}") from None
        return cls(tuple(classes), raw.get("weight_jitter", 0.15), raw.get("spacing_jitter", 0.05))

    def to_json(self) -> str:
        return json.dumps({
            "weight_jitter": self.weight_jitter,
            "spacing_jitter": self.spacing_jitter,
            "classes": [{
                "axle_count": c.axle_count, "weight": c.weight,
                "gvw_log_mean": c.gvw_log_mean, "gvw_log_sigma": c.gvw_log_sigma,
                "axle_fractions": list(c.axle_fractions), "spacings_m": list(c.spacings),
            } for c in self.classes],
        }, indent=2)


def default_fleet_spec() -> FleetSpec:
    """A five-class mix loosely shaped like heavy-highway traffic (not real data)."""
    vc = VehicleClass.from_moments
    return FleetSpec((
        vc(2, 0.70, 40.0, 35.0, (0.4, 0.6), (4.5,)),
        vc(3, 0.10, 180.0, 60.0, (0.3, 0.35, 0.35), (5.0, 1.3)),
        vc(5, 0.12, 320.0, 80.0, (0.14, 0.22, 0.22, 0.21, 0.21), (3.8, 1.3, 9.5, 1.3)),
        vc(6, 0.05, 380.0, 90.0, (0.12, 0.18, 0.18, 0.173, 0.173, 0.174), (3.8, 1.3, 8.0, 1.3, 1.3)),
        vc(9, 0.03, 420.0, 140.0, (0.1, 0.13, 0.13, 0.12, 0.12, 0.1, 0.1, 0.1, 0.1),
           (3.5, 1.3, 6.0, 1.3, 3.0, 1.3, 4.5, 1.3)),
    ))


def synthesize_fleet(spec: FleetSpec, n: int, seed: int, first_id: int = 1) -> list[VehicleRecord]:
    """Draw ``n`` vehicles; identical output for identical (spec, n, seed)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    weights = np.array([c.weight for c in spec.classes])
    cls_idx = rng.choice(len(spec.classes), size=n, p=weights / weights.sum())
    out = []
    for i, ci in enumerate(cls_idx):
        c = spec.classes[ci]
        gvw = float(rng.lognormal(c.gvw_log_mean, c.gvw_log_sigma))
        frac = np.asarray(c.axle_fractions) * (1 + rng.uniform(-spec.weight_jitter, spec.weight_jitter, c.axle_count))
        axles = gvw * frac / frac.sum()
        spacings = np.asarray(c.spacings) * (1 + rng.uniform(-spec.spacing_jitter, spec.spacing_jitter, c.axle_count - 1))
        out.append(VehicleRecord(first_id + i, tuple(float(w) for w in axles),
                                 tuple(float(round(s, 3)) for s in spacings)))
    return out
