"""
Exceedance-rate spectrum
========================

Share of a fleet whose reaction envelope goes beyond a code model's envelope,
as a function of span length, written as CSV and SVG.
"""

from pathlib import Path

from substructure_ers import compute_ers, default_fleet_spec, default_model, synthesize_fleet
from substructure_ers.svg import ChartStyle, render_spectrum_svg

fleet = synthesize_fleet(default_fleet_spec(), 2000, seed=3)

# exterior support of the 2-span family (letter B) against two models
for name in ("HL-93", "CL-625"):
    spec = compute_ers(fleet, 2, 0, default_model(name))
    print(name, "support", spec.support_letter)
    for p in spec.points[::6]:
        print(f"  {p.span_m:5.0f} m  {p.rate_percent:6.2f} %  "
              f"(max side {p.n_max_side}, min side {p.n_min_side})")
    out = Path(f"ers_{name.lower()}_B.svg")
    out.write_text(render_spectrum_svg(spec.to_csv(), ChartStyle(title=f"{name}, support B")))
    print("  wrote", out)

###############################################################################
# HL-93 carries a full-bridge lane load, so its exterior minimum stays positive
# and every vehicle that fits in one span exceeds it on the min side.
