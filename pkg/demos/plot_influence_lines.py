"""
Support-reaction influence lines
================================

Influence lines for every support of the 1- to 4-span families, printed as
coarse tables. Each line is a cubic per span, so a few samples tell the story.
"""

import numpy as np

from substructure_ers import BridgeGeometry, influence_lines, support_letter

# One span: the left reaction falls linearly from 1 to 0.
for il in influence_lines(BridgeGeometry(1, 10.0)):
    print(il.support.index, il(np.array([0.0, 2.5, 5.0, 7.5, 10.0])))

###############################################################################
# Two spans of 10 m. The exterior reaction goes negative while the load sits
# in the far span; that is where uplift comes from.

g = BridgeGeometry(2, 10.0)
x = np.arange(0.0, 20.01, 2.5)
print("x     " + " ".join(f"{v:7.2f}" for v in x))
for il in influence_lines(g):
    print(f"{support_letter(2, il.support.index) or il.support.index}     "
          + " ".join(f"{v:7.4f}" for v in il(x)))

###############################################################################
# The most negative exterior ordinate sits at x = 2L - L/sqrt(3).

il = influence_lines(g)[0]
xs = np.linspace(10, 20, 100001)
v = il(xs)
print("min", v.min(), "at", xs[v.argmin()], "expected", 20 - 10 / np.sqrt(3))

###############################################################################
# Reactions always add up to the applied load.

for n in (3, 4):
    g = BridgeGeometry(n, 12.0)
    xs = np.linspace(0, g.total_length, 7)
    print(n, "spans:", sum(il(xs) for il in influence_lines(g)))
