"""
WIM fleet statistics
====================

A synthetic weigh-in-motion fleet stands in for recorded traffic. The file
format is plain CSV; summary rows mirror a per-axle-class table.
"""

import io

from substructure_ers import default_fleet_spec, synthesize_fleet
from substructure_ers.wim import (filter_above, format_stats, gvw_histogram, gvw_percentile,
                                  parse_wim, summary_stats, write_wim)

fleet = synthesize_fleet(default_fleet_spec(), 20000, seed=1)

# round trip through the CSV layout
buf = io.StringIO()
write_wim(fleet, buf)
print(buf.getvalue().splitlines()[0])
records, report = parse_wim(io.StringIO(buf.getvalue()))
print("accepted", report.records_accepted, "flagged", report.records_flagged)

print(format_stats(summary_stats(records), "synthetic"))

###############################################################################
# The heaviest 10 % of vehicles, by nearest-rank percentile.

p90 = gvw_percentile(records, 90)
heavy = filter_above(records, p90)
print(f"P90 GVW {p90:.1f} kN, {len(heavy)} vehicles above")
for start, count in gvw_histogram(heavy, 50.0):
    print(f"{start:6.0f} {'#' * (count // 20)}")
