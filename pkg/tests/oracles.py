"""Independent oracles used across the test suite.

Nothing here goes through the scheme-assembly or solver code paths under
test: the unfolded system is transcribed directly from its defining
equations and solved densely with numpy, and valuation generators produce
exact rationals from seeded integer draws.
"""

import itertools
import math
from fractions import Fraction

import numpy as np

from pathprob.dynamics import select_rule
from pathprob.product import ALIVE, DEAD, FINAL, ProductVertex
from pathprob.regions import plus_representative, region_of


def random_valuation(rng, ceilings, max_den=12, beyond=1):
    """Exact rational valuation with entries in [0, T_x + beyond]."""
    out = []
    for c in ceilings:
        den = int(rng.integers(1, max_den + 1))
        num = int(rng.integers(0, den * (c + beyond) + 1))
        out.append(Fraction(num, den))
    return tuple(out)


def bound_equivalent_partner(rng, eta, ceilings):
    """A valuation bound-equivalent to eta: entries equal, except clocks
    above their ceiling may move anywhere else above it."""
    out = []
    for v, c in zip(eta, ceilings):
        if v > c and rng.random() < 0.7:
            out.append(Fraction(c) + Fraction(int(rng.integers(1, 60)), 7))
        else:
            out.append(v)
    return tuple(out)


def vertex_class(graph, state, location, eta):
    code = region_of(eta, graph.dta.ceilings)
    return graph.classes()[graph.index[ProductVertex(state, location, code)]]


def unfolded_dense_system(chain, dta, graph, m):
    """Direct transcription of the horizon-unfolded equations.

    Builds the dense matrix and offset for the alive non-final grid points
    straight from the definition: geometric weights along the saturated
    diagonal chain, jump successors selected at the nudged representative
    with the reset applied to the grid valuation, and the boundary tail.
    Shares nothing with the package's assembly code beyond the region and
    rule primitives it is defined in terms of.
    """
    ceilings = dta.ceilings
    rho = Fraction(1, m)
    maxima = tuple(m * c for c in ceilings)

    def classify(state, location, coords):
        eta = tuple(Fraction(j, m) for j in coords)
        return vertex_class(graph, state, location, eta)

    unknowns = []
    for s in chain.states:
        for q in dta.locations:
            if q in dta.final:
                continue
            for coords in _coords_iter(maxima):
                if classify(s, q, coords) == ALIVE:
                    unknowns.append((s, q, coords))
    index = {u: k for k, u in enumerate(unknowns)}

    def successors(s, q, coords):
        eta = tuple(Fraction(j, m) for j in coords)
        rule = select_rule(
            dta, q, chain.labeling[chain.state_index(s)],
            plus_representative(eta, ceilings),
        )
        reset_coords = tuple(
            0 if i in rule.resets else j for i, j in enumerate(coords)
        )
        si = chain.state_index(s)
        for uj, p in enumerate(chain.transition[si]):
            if p > 0:
                yield chain.states[uj], rule.target, reset_coords, float(p)

    n = len(unknowns)
    mat = np.zeros((n, n))
    off = np.zeros(n)

    def add(row, s, q, coords, weight):
        for u, q2, c2, p in successors(s, q, coords):
            cls = classify(u, q2, c2)
            if cls == FINAL:
                off[row] += weight * p
            elif cls == ALIVE:
                mat[row, index[(u, q2, c2)]] += weight * p

    for row, (s, q, coords) in enumerate(unknowns):
        if coords == maxima:
            add(row, s, q, coords, 1.0)
            continue
        rho_lam = float(rho * chain.exit_rates[chain.state_index(s)])
        a = 1.0 / (1.0 + rho_lam)
        b = rho_lam / (1.0 + rho_lam)
        weight = 1.0
        current = coords
        while classify(s, q, current) != DEAD and current != maxima:
            add(row, s, q, current, weight * b)
            current = tuple(min(j + 1, mx) for j, mx in zip(current, maxima))
            weight *= a
        if classify(s, q, current) != DEAD:
            add(row, s, q, current, weight)
    return unknowns, mat, off


def solve_dense(mat, off):
    return np.linalg.solve(np.eye(len(off)) - mat, off)


def _coords_iter(maxima):
    return itertools.product(*[range(mx + 1) for mx in maxima])


def region_sequence(eta, ceilings):
    """Regions visited by eta + t as t grows, until everything sits above
    its ceiling; alternates boundary and interior regions.

    Region changes happen exactly when some clock at or below its ceiling
    crosses an integer, so stepping to the next such crossing and then to a
    representative just past it enumerates the full sequence.
    """
    sequence = [region_of(eta, ceilings)]
    current = eta
    while any(v <= c for v, c in zip(current, ceilings)):
        gap = min(
            1 - (v - math.floor(v))
            for v, c in zip(current, ceilings)
            if v <= c
        )
        boundary = tuple(v + gap for v in current)
        sequence.append(region_of(boundary, ceilings))
        current = plus_representative(boundary, ceilings)
        sequence.append(region_of(current, ceilings))
    return sequence
