"""
Code live-load envelopes
========================

Reaction envelopes of the shipped live-load models at the exterior (B) and
interior (C) supports of a two-span bridge, across a few span lengths.
"""

from substructure_ers import BridgeGeometry, build_influence_line, default_models, model_envelope
from substructure_ers.beam_engine import SweepConfig

models = default_models()
cfg = SweepConfig(step=0.05)

for span in (10.0, 30.0, 60.0):
    g = BridgeGeometry(2, span)
    print(f"\n2 x {span:g} m")
    for name, model in models.items():
        a = model_envelope(build_influence_line(g, 0), model, span, g, cfg)
        b = model_envelope(build_influence_line(g, 1), model, span, g, cfg)
        print(f"  {name:11s} B max {a.max_reaction:8.1f} min {a.min_reaction:7.1f}"
              f"   C max {b.max_reaction:8.1f} min {b.min_reaction:7.1f} kN")

###############################################################################
# Models carrying a full-bridge lane load never show a negative minimum at the
# exterior support: the lane term lifts the whole reaction trace.
