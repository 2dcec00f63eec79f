"""Shared generators for the test suites.

The random profiles here are deliberately tame: positive, bounded away
from zero, built only from trig/affine combinators whose derivatives
stay at unit scale.  Mollifier nodes are excluded because their
fourth-derivative scale inflates second-order finite-difference
truncation beyond the equivalence tolerances; mollifier-bearing
profiles are exercised by the dedicated warp-module tests instead.
"""

import numpy as np

from pscforge.warp import WarpFunction, Const, Affine, SinCap, Sum, Prod, Compose


def random_tame_warp(rng, b=1.0):
    """Random positive combinator tree, values in roughly [0.3, 2.2]."""
    a0 = rng.uniform(0.8, 1.6)
    a1 = rng.uniform(-0.2, 0.3)
    terms = [Const(a0), Affine(0.0, a1)]
    total_amp = abs(a1) * b
    for _ in range(int(rng.integers(1, 3))):
        amp = rng.uniform(0.05, 0.25)
        d = rng.uniform(0.8, 1.6)
        c1 = rng.uniform(0.5, 1.2)
        c0 = rng.uniform(0.0, 1.0)
        node = Prod((Const(amp), Compose(SinCap(d), Affine(c0, c1))))
        if rng.random() < 0.3:
            inner = Compose(SinCap(1.2), Affine(0.0, rng.uniform(0.5, 1.0)))
            node = Prod((Const(amp), Compose(SinCap(d), inner)))
        terms.append(node)
        total_amp += amp * d
    if a0 - total_amp < 0.3:
        return random_tame_warp(rng, b)
    return WarpFunction(b, Sum(tuple(terms)))


def interior_grid(chart, count, rng, pad=0.01):
    """Random points strictly inside a chart's box."""
    lo = [bx[0] + pad for bx in chart.box]
    hi = [bx[1] - pad for bx in chart.box]
    return rng.uniform(lo, hi, size=(count, chart.dim))
