"""Command line interface: ``substructure-ers <subcommand> ...``.

All quantities are kN and m.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import exceedance as exc_mod
from .beam_engine import SUPPORT_ALIASES, BridgeGeometry, SweepConfig, build_influence_line
from .load_models import DEFAULT_MODEL_FILES, EXTRA_MODEL_FILES, ModelConfigError, default_model_path, load_model, model_envelope
from .svg import ChartStyle, render_spectrum_svg
from .wim import (FleetSpec, WimFormatError, default_fleet_spec, filter_above, format_stats,
                  gvw_histogram, gvw_percentile, read_wim, save_wim, summary_stats, synthesize_fleet)


class UserError(Exception):
    pass


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _geometry_args(p, span_required=True):
    p.add_argument("--spans", type=int, choices=range(1, 5), metavar="{1..4}",
                   help="number of spans (bridge family)")
    p.add_argument("--support", type=int, help="support index, counted from the left")
    p.add_argument("--letter", choices=sorted(SUPPORT_ALIASES), help="support letter alias")
    if span_required:
        p.add_argument("--length", type=_positive, required=True, help="span length (m)")


def _sweep_args(p):
    p.add_argument("--step", type=_positive, default=0.01, help="sweep increment (m)")
    p.add_argument("--directions", choices=("both", "forward"), default="both")
    p.add_argument("--jobs", type=int, default=None, help="worker threads for vehicle sweeps")


def _support(args) -> tuple[int, int]:
    if args.letter:
        n, k = SUPPORT_ALIASES[args.letter]
        if args.spans not in (None, n):
            raise UserError(f"support {args.letter} belongs to the {n}-span family")
        return n, k
    if args.spans is None or args.support is None:
        raise UserError("give --spans and --support, or --letter")
    if not 0 <= args.support <= args.spans:
        raise UserError(f"--support must be 0..{args.spans}")
    return args.spans, args.support


def _model(entry: str):
    path = default_model_path(entry) if entry in {**DEFAULT_MODEL_FILES, **EXTRA_MODEL_FILES} else Path(entry)
    if not path.exists():
        raise UserError(f"model file not found: {entry} (shipped: {', '.join(DEFAULT_MODEL_FILES)})")
    return load_model(path)


def _records(path):
    try:
        recs, report = read_wim(path)
    except FileNotFoundError:
        raise UserError(f"WIM file not found: {path}") from None
    if report.records_flagged:
        print(f"note: {report.records_flagged} of {report.records_total} rows flagged "
              f"({dict(report.reason_counts())})", file=sys.stderr)
    if not recs:
        raise UserError(f"{path}: no valid vehicle records")
    return recs


def cmd_influence(args):
    n, k = _support(args)
    il = build_influence_line(BridgeGeometry(n, args.length), k)
    x, v = il.samples(args.step)
    lines = ["x_m,value"] + [f"{xi:.10g},{vi!r}" for xi, vi in zip(x.tolist(), v.tolist())]
    _emit("\n".join(lines) + "\n", args.output)


def cmd_envelope(args):
    n, k = _support(args)
    g = BridgeGeometry(n, args.length)
    cfg = SweepConfig(args.step, args.directions)
    il = build_influence_line(g, k)
    if bool(args.model) == bool(args.wim):
        raise UserError("give exactly one of --model or --wim")
    if args.model:
        env = model_envelope(il, _model(args.model), args.length, g, cfg)
        out = {"source": args.model, "max_kn": env.max_reaction, "min_kn": env.min_reaction,
               "pos_max_m": env.pos_at_max, "pos_min_m": env.pos_at_min}
    else:
        es = exc_mod.vehicle_envelopes(_records(args.wim), g, k, cfg, args.cache_dir, args.jobs)
        imax, imin = int(np.argmax(es.max)), int(np.argmin(es.min))
        out = {"source": args.wim, "vehicles": len(es),
               "max_kn": float(es.max[imax]), "max_vehicle_id": int(es.ids[imax]),
               "min_kn": float(es.min[imin]), "min_vehicle_id": int(es.ids[imin])}
    out.update(spans=n, support=k, span_length_m=args.length)
    _emit(json.dumps(out, indent=2) + "\n", args.output)


def cmd_ers(args):
    n, k = _support(args)
    grid = [float(s) for s in args.grid.split(",")] if args.grid else None
    spec = exc_mod.compute_ers(_records(args.wim), n, k, _model(args.model), grid,
                               SweepConfig(args.step, args.directions), args.cache_dir, args.jobs,
                               fleet_name=Path(args.wim).stem)
    _emit(spec.to_csv(), args.output)


def cmd_campaign(args):
    if not Path(args.config).exists():
        raise UserError(f"campaign config not found: {args.config}")
    manifest = exc_mod.run_campaign(args.config, jobs=args.jobs)
    states = {}
    for c in manifest["cells"]:
        states[c["state"]] = states.get(c["state"], 0) + 1
        if c["state"] == "error":
            print(f"error: {c['fleet']} {c['family']}-span s{c['support']} {c['model']}: {c['error']}",
                  file=sys.stderr)
    print(", ".join(f"{v} {k}" for k, v in sorted(states.items())))
    return 1 if states.get("error") else 0


def cmd_stats(args):
    _emit(format_stats(summary_stats(_records(args.wim), ddof=1 if args.sample_std else 0),
                       Path(args.wim).stem), args.output)


def cmd_hist(args):
    recs = _records(args.wim)
    if args.above_percentile is not None:
        recs = filter_above(recs, gvw_percentile(recs, args.above_percentile))
    lines = ["bin_start_kn,count"] + [f"{b:.10g},{c}" for b, c in gvw_histogram(recs, args.bin_width)]
    _emit("\n".join(lines) + "\n", args.output)


def cmd_synth(args):
    spec = FleetSpec.from_json(Path(args.spec).read_text(encoding="utf-8")) if args.spec \
        else default_fleet_spec()
    recs = synthesize_fleet(spec, args.n, args.seed)
    if args.output:
        save_wim(recs, args.output)
    else:
        from .wim import write_wim
        write_wim(recs, sys.stdout)


def cmd_plot(args):
    text = Path(args.spectrum).read_text(encoding="utf-8")
    title = args.title or Path(args.spectrum).stem
    _emit(render_spectrum_svg(text, ChartStyle(title=title)), args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="substructure-ers",
                                     description="Support-reaction exceedance spectra for girder bridges")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("influence", help="influence line samples as CSV")
    _geometry_args(p)
    p.add_argument("--step", type=_positive, default=0.01)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("envelope", help="reaction envelope of a model or a WIM file")
    _geometry_args(p)
    _sweep_args(p)
    p.add_argument("--model", help="shipped model name or model JSON path")
    p.add_argument("--wim", help="WIM CSV file")
    p.add_argument("--cache-dir")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("ers", help="one exceedance-rate spectrum")
    _geometry_args(p, span_required=False)
    _sweep_args(p)
    p.add_argument("--wim", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--grid", help="comma-separated span lengths (default: 1..30, 35..100)")
    p.add_argument("--cache-dir")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_ers)

    p = sub.add_parser("campaign", help="full matrix of spectra from a JSON config")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("stats", help="per-axle-class GVW and heaviest-axle statistics")
    p.add_argument("wim")
    p.add_argument("--sample-std", action="store_true", help="use n-1 in standard deviations")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("hist", help="GVW histogram CSV")
    p.add_argument("wim")
    p.add_argument("--bin-width", type=_positive, default=10.0)
    p.add_argument("--above-percentile", type=float, help="keep vehicles above this GVW percentile")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("synth", help="generate a synthetic WIM fleet")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", help="fleet spec JSON (default: built-in mix)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plot", help="render a spectrum CSV as SVG")
    p.add_argument("spectrum")
    p.add_argument("--title")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except (UserError, ModelConfigError, WimFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
