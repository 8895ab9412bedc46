"""Code live-load models as data, and their reference reaction envelopes.

A model is a list of variants. Each variant is an axle train (optionally
scaled), a uniform lane load over the whole bridge, or both, together with the
range of span lengths where it applies. The reference envelope of a model at a
support is the componentwise extreme over every applicable variant.
"""
from __future__ import annotations

import io
import itertools
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Sequence

from .beam_engine import (
    AxleTrain,
    BridgeGeometry,
    InfluenceLine,
    ReactionEnvelope,
    SweepConfig,
    sweep_envelope,
    uniform_reaction,
)

DEFAULT_MODEL_FILES = {
    "T3-S3": "t3-s3.json",
    "T3-S2-R4": "t3-s2-r4.json",
    "IMT-66.5": "imt-66.5.json",
    "HL-93": "hl-93.json",
    "CL-625": "cl-625.json",
    "CL-625-ONT": "cl-625-ont.json",
}
# HL-93 with the design-truck rear spacing swept over 4.3..9.0 m
EXTRA_MODEL_FILES = {"HL-93-VAR": "hl-93-variable.json"}


class ModelConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SpacingRange:
    min: float
    max: float
    step: float = 0.1

    def values(self) -> list[float]:
        n = int(round((self.max - self.min) / self.step))
        return [round(self.min + k * self.step, 10) for k in range(n + 1)]


@dataclass(frozen=True)
class LoadCase:
    label: str
    axle_loads: tuple[float, ...] = ()
    axle_spacings: tuple[float | SpacingRange, ...] = ()
    truck_scale: float = 1.0
    uniform_load: float = 0.0
    uniform_extent: str = "full-bridge"

    @property
    def has_truck(self) -> bool:
        return len(self.axle_loads) > 0


@dataclass(frozen=True)
class Applicability:
    """Span lengths in (span_min, span_max]; None means unbounded."""

    span_min: float | None = None
    span_max: float | None = None

    def __call__(self, span: float) -> bool:
        if self.span_min is not None and not span > self.span_min:
            return False
        if self.span_max is not None and not span <= self.span_max:
            return False
        return True


@dataclass(frozen=True)
class Variant:
    case: LoadCase
    applies: Applicability = Applicability()


@dataclass(frozen=True)
class LiveLoadModel:
    name: str
    variants: tuple[Variant, ...]

    def applicable(self, span: float) -> list[LoadCase]:
        return [v.case for v in self.variants if v.applies(span)]

    def scaled(self, factor: float) -> "LiveLoadModel":
        """Every load (axles and lane) multiplied by ``factor``."""
        out = []
        for v in self.variants:
            c = v.case
            out.append(Variant(
                LoadCase(c.label, tuple(w * factor for w in c.axle_loads), c.axle_spacings,
                         c.truck_scale, c.uniform_load * factor, c.uniform_extent),
                v.applies))
        return LiveLoadModel(self.name, tuple(out))


@dataclass(frozen=True)
class ConcreteCase:
    label: str
    train: AxleTrain | None
    uniform_load: float
    uniform_extent: tuple[float, float]


# --------------------------------------------------------------------------
# config IO

def _number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelConfigError(f"{what} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ModelConfigError(f"{what} must be finite")
    return float(value)


def _optional_number(value, what: str) -> float | None:
    return None if value is None else _number(value, what)


def _parse_variant(raw: dict, i: int) -> Variant:
    if not isinstance(raw, dict):
        raise ModelConfigError(f"variant {i} must be an object")
    label = raw.get("label", f"variant-{i}")
    if not isinstance(label, str):
        raise ModelConfigError(f"variant {i}: label must be a string")
    where = f"variant {label!r}"
    applies_raw = raw.get("applies", {}) or {}
    if not isinstance(applies_raw, dict):
        raise ModelConfigError(f"{where}: 'applies' must be an object")
    applies = Applicability(
        _optional_number(applies_raw.get("span_min_m"), f"{where}: span_min_m"),
        _optional_number(applies_raw.get("span_max_m"), f"{where}: span_max_m"),
    )
    if applies.span_min is not None and applies.span_max is not None \
            and applies.span_min >= applies.span_max:
        raise ModelConfigError(f"{where}: empty span range")
    axles_raw = raw.get("axles_kn", [])
    spacings_raw = raw.get("spacings_m", [])
    if not isinstance(axles_raw, list) or not isinstance(spacings_raw, list):
        raise ModelConfigError(f"{where}: axles_kn and spacings_m must be lists")
    axles = tuple(_number(w, f"{where}: axle load") for w in axles_raw)
    if any(w <= 0 for w in axles):
        raise ModelConfigError(f"{where}: negative or zero axle load")
    expected = max(len(axles) - 1, 0)
    if len(spacings_raw) != expected:
        raise ModelConfigError(
            f"{where}: {len(axles)} axles need {expected} spacings, got {len(spacings_raw)}")
    spacings: list[float | SpacingRange] = []
    for s in spacings_raw:
        if isinstance(s, dict):
            try:
                rng = SpacingRange(_number(s["min"], f"{where}: spacing min"),
                                   _number(s["max"], f"{where}: spacing max"),
                                   _number(s.get("step", 0.1), f"{where}: spacing step"))
            except KeyError as exc:
                raise ModelConfigError(f"{where}: spacing range missing {exc}") from None
            if not 0 < rng.min <= rng.max or rng.step <= 0:
                raise ModelConfigError(f"{where}: invalid spacing range {s}")
            spacings.append(rng)
        else:
            v = _number(s, f"{where}: spacing")
            if v <= 0:
                raise ModelConfigError(f"{where}: non-positive spacing")
            spacings.append(v)
    scale = _number(raw.get("truck_scale", 1.0), f"{where}: truck_scale")
    uniform = _number(raw.get("uniform_kn_per_m", 0.0), f"{where}: uniform_kn_per_m")
    if scale <= 0:
        raise ModelConfigError(f"{where}: truck_scale must be positive")
    if uniform < 0:
        raise ModelConfigError(f"{where}: negative uniform load")
    if not axles and uniform == 0:
        raise ModelConfigError(f"{where}: neither axles nor uniform load")
    extent = raw.get("uniform_extent", "full-bridge")
    if extent != "full-bridge":
        raise ModelConfigError(f"{where}: only 'full-bridge' uniform extent is supported")
    return Variant(LoadCase(label, axles, tuple(spacings), scale, uniform), applies)


def check_coverage(variants: Sequence[Variant]) -> None:
    """Raise unless every span length > 0 is covered by some variant."""
    bounds = sorted({b for v in variants for b in (v.applies.span_min, v.applies.span_max)
                     if b is not None and b > 0})
    probes = [min(bounds[0] / 2, 1e-6)] if bounds else [1.0]
    for lo, hi in zip(bounds, bounds[1:] + [None]):
        probes.append(lo)
        probes.append((lo + hi) / 2 if hi is not None else lo + 1.0)
    for span in probes:
        if not any(v.applies(span) for v in variants):
            raise ModelConfigError(f"span-coverage gap: no variant applies at span {span:g} m")


def load_model_config(stream: str | IO[str]) -> LiveLoadModel:
    """Parse and validate a model JSON document (text or text stream)."""
    text = stream if isinstance(stream, str) else stream.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelConfigError(f"model config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ModelConfigError("model config must be a JSON object")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ModelConfigError("model config needs a non-empty 'name'")
    variants_raw = raw.get("variants")
    if not isinstance(variants_raw, list) or not variants_raw:
        raise ModelConfigError(f"model {name!r}: empty variant list")
    variants = tuple(_parse_variant(v, i) for i, v in enumerate(variants_raw))
    check_coverage(variants)
    return LiveLoadModel(name, variants)


def load_model(path: str | Path) -> LiveLoadModel:
    with open(path, encoding="utf-8") as fh:
        return load_model_config(fh)


def model_to_config(model: LiveLoadModel) -> dict:
    variants = []
    for v in model.variants:
        c = v.case
        variants.append({
            "label": c.label,
            "applies": {"span_min_m": v.applies.span_min, "span_max_m": v.applies.span_max},
            "truck_scale": c.truck_scale,
            "axles_kn": list(c.axle_loads),
            "spacings_m": [
                {"min": s.min, "max": s.max, "step": s.step} if isinstance(s, SpacingRange) else s
                for s in c.axle_spacings
            ],
            "uniform_kn_per_m": c.uniform_load,
        })
    return {"name": model.name, "variants": variants}


def default_model_path(name: str) -> Path:
    fname = DEFAULT_MODEL_FILES.get(name) or EXTRA_MODEL_FILES.get(name)
    if fname is None:
        have = sorted(DEFAULT_MODEL_FILES) + sorted(EXTRA_MODEL_FILES)
        raise KeyError(f"no shipped model named {name!r}; have {have}")
    return Path(str(resources.files(__package__) / "models" / fname))


def default_model(name: str) -> LiveLoadModel:
    return load_model(default_model_path(name))


def default_models() -> dict[str, LiveLoadModel]:
    return {name: default_model(name) for name in DEFAULT_MODEL_FILES}


# --------------------------------------------------------------------------
# envelopes

def resolve_cases(model: LiveLoadModel, span_length: float,
                  geometry: BridgeGeometry) -> list[ConcreteCase]:
    """Concrete cases of the variants applicable at ``span_length``.

    Every spacing range is expanded into its discrete values (cartesian product
    when several ranges occur in one variant).
    """
    cases = model.applicable(span_length)
    if not cases:
        raise ModelConfigError(f"model {model.name!r} has no variant for span {span_length:g} m")
    extent = (0.0, geometry.total_length)
    out = []
    for c in cases:
        if not c.has_truck:
            out.append(ConcreteCase(c.label, None, c.uniform_load, extent))
            continue
        choices = [s.values() if isinstance(s, SpacingRange) else [s] for s in c.axle_spacings]
        loads = tuple(w * c.truck_scale for w in c.axle_loads)
        multi = any(len(ch) > 1 for ch in choices)
        for combo in itertools.product(*choices):
            label = c.label
            if multi:
                label = f"{c.label} [{', '.join(f'{s:g}' for s in combo)}]"
            out.append(ConcreteCase(label, AxleTrain(loads, combo), c.uniform_load, extent))
    return out


def case_envelope(il: InfluenceLine, case: ConcreteCase,
                  cfg: SweepConfig = SweepConfig()) -> ReactionEnvelope:
    """Truck sweep plus a constant full-bridge lane-load reaction."""
    lane = uniform_reaction(il, case.uniform_load, *case.uniform_extent)
    if case.train is None:
        return ReactionEnvelope(lane, lane, 0.0, 0.0)
    return sweep_envelope(il, case.train, cfg).shifted(lane)


def combine_envelopes(envs: Iterable[ReactionEnvelope]) -> ReactionEnvelope:
    best_max = best_min = None
    for e in envs:
        if best_max is None or e.max_reaction > best_max.max_reaction:
            best_max = e
        if best_min is None or e.min_reaction < best_min.min_reaction:
            best_min = e
    if best_max is None:
        raise ValueError("no envelopes to combine")
    return ReactionEnvelope(best_max.max_reaction, best_min.min_reaction,
                            best_max.pos_at_max, best_min.pos_at_min,
                            best_max.dir_at_max, best_min.dir_at_min)


def model_envelope(il: InfluenceLine, model: LiveLoadModel, span: float,
                   geometry: BridgeGeometry | None = None,
                   cfg: SweepConfig = SweepConfig()) -> ReactionEnvelope:
    geometry = geometry or il.geometry
    cases = resolve_cases(model, span, geometry)
    return combine_envelopes(case_envelope(il, c, cfg) for c in cases)


def dump_model(model: LiveLoadModel) -> str:
    buf = io.StringIO()
    json.dump(model_to_config(model), buf, indent=2)
    return buf.getvalue()
