"""Grid construction and assembly of the fixed-point linear schemes.

The unit box spanned by the clock ceilings is discretized with step
``rho = 1/m``.  Each grid point inherits the class (final / alive / dead)
of its region vertex in the product graph.  The alive non-final points are
the unknowns of two equivalent sparse systems:

* the one-step form ``mu = C mu + d``: each interior row couples a point to
  its saturated diagonal-delay neighbour and to its jump successors;
* the unfolded form ``mu = A mu + b``: the diagonal-delay chain is expanded
  through the point's horizon with geometric weights, leaving only jump
  successors and a boundary tail.

The unfolded system is produced by literally unfolding one-step rows, so
both assemblies share one successor code path; an independent transcription
of the unfolded equations lives in the test suite as a cross-check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import regions
from .dynamics import select_rule
from .models import Ctmc, Dta, ModelConstants
from .product import ALIVE, DEAD, FINAL, ProductGraph, ProductVertex

GAMMA_PRIME = "gamma_prime"
GAMMA_DOUBLE = "gamma_double"


class GridPoint(NamedTuple):
    state: str
    location: str
    valuation: tuple


class Grid:
    """All on-grid points for one (CTMC, DTA, m) triple.

    Internally a valuation is an integer coordinate vector (numerators over
    m), which keeps chain walks and reset closure exact and cheap; exact
    rationals are materialized only at the API boundary.
    """

    def __init__(self, chain: Ctmc, dta: Dta, graph: ProductGraph, m: int):
        if m < 1:
            raise ValueError("grid resolution m must be >= 1")
        self.chain = chain
        self.dta = dta
        self.graph = graph
        self.m = m
        self.rho = Fraction(1, m)
        self.ceilings = dta.ceilings
        self.max_coords = tuple(m * c for c in dta.ceilings)
        self._axis_values = [
            [Fraction(j, m) for j in range(mc + 1)] for mc in self.max_coords
        ]
        self._code_by_coords: Dict[tuple, regions.RegionCode] = {}
        self._rule_memo: Dict[tuple, tuple] = {}
        self._horizon_memo: Dict[tuple, int] = {}
        self._classes = graph.classes()

        self.d_m_size = (
            len(chain.states)
            * len(dta.locations)
            * int(np.prod([mc + 1 for mc in self.max_coords], dtype=object))
        )

        # alive non-final grid points in (state, location, valuation) order
        unknowns: List[GridPoint] = []
        bmax_flags: List[bool] = []
        for s in chain.states:
            for q in dta.locations:
                if q in dta.final:
                    continue
                for coords in self._iter_coords():
                    if self._class_by_coords(s, q, coords) == ALIVE:
                        unknowns.append(GridPoint(s, q, self.valuation(coords)))
                        bmax_flags.append(coords == self.max_coords)
        self.b_m: Tuple[GridPoint, ...] = tuple(unknowns)
        self.index: Dict[GridPoint, int] = {p: k for k, p in enumerate(unknowns)}
        self.is_bmax = np.array(bmax_flags, dtype=bool)
        self.horizons = np.array(
            [self._horizon_coords(p.state, p.location, self.coords(p.valuation))
             for p in unknowns],
            dtype=np.int64,
        )

    # -- coordinates ------------------------------------------------------

    def _iter_coords(self) -> Iterator[tuple]:
        yield from itertools.product(*[range(mc + 1) for mc in self.max_coords])

    def valuation(self, coords: tuple) -> tuple:
        return tuple(self._axis_values[i][j] for i, j in enumerate(coords))

    def coords(self, valuation: Sequence) -> tuple:
        out = []
        for i, v in enumerate(valuation):
            j = Fraction(v) * self.m
            if j.denominator != 1 or not 0 <= j <= self.max_coords[i]:
                raise ValueError(f"{tuple(valuation)} is not on the {self.m}-grid")
            out.append(int(j))
        return tuple(out)

    def _clamp_step(self, coords: tuple) -> tuple:
        return tuple(
            min(j + 1, mc) for j, mc in zip(coords, self.max_coords)
        )

    def code_at(self, coords: tuple) -> regions.RegionCode:
        code = self._code_by_coords.get(coords)
        if code is None:
            code = regions.region_of(self.valuation(coords), self.ceilings)
            self._code_by_coords[coords] = code
        return code

    # -- classification ---------------------------------------------------

    def _class_by_coords(self, state: str, location: str, coords: tuple) -> str:
        vertex = ProductVertex(state, location, self.code_at(coords))
        return self._classes[self.graph.index[vertex]]

    def class_at(self, point: GridPoint) -> str:
        return self._class_by_coords(
            point.state, point.location, self.coords(point.valuation)
        )

    def points(self) -> Iterator[Tuple[GridPoint, str]]:
        """Every grid point with its class, in canonical order."""
        for s in self.chain.states:
            for q in self.dta.locations:
                for coords in self._iter_coords():
                    yield (
                        GridPoint(s, q, self.valuation(coords)),
                        self._class_by_coords(s, q, coords),
                    )

    # -- horizons ----------------------------------------------------------

    def _horizon_coords(self, state: str, location: str, coords: tuple) -> int:
        """Steps of saturated rho-delay until the boundary set or a dead
        region; memoized along the shared diagonal chains."""
        key = (state, location, coords)
        chain_keys = []
        while key not in self._horizon_memo:
            s, q, c = key
            if self._class_by_coords(s, q, c) == DEAD or c == self.max_coords:
                self._horizon_memo[key] = 0
                break
            chain_keys.append(key)
            key = (s, q, self._clamp_step(c))
        for k in reversed(chain_keys):
            nxt = (k[0], k[1], self._clamp_step(k[2]))
            self._horizon_memo[k] = 1 + self._horizon_memo[nxt]
        return self._horizon_memo[(state, location, coords)]

    def horizon(self, point: GridPoint) -> int:
        if point not in self.index:
            raise ValueError(f"{point} is not an unknown of the scheme")
        return int(self.horizons[self.index[point]])

    # -- jump successors ---------------------------------------------------

    def _rule_at_plus(self, location: str, label: str, coords: tuple):
        """Target location and reset set of the rule enabled immediately
        after the grid valuation; guard selection happens at the nudged
        representative, the reset applies to the grid valuation itself."""
        code = self.code_at(coords)
        key = (location, label, code)
        hit = self._rule_memo.get(key)
        if hit is None:
            eta_plus = regions.plus_representative(
                self.valuation(coords), self.ceilings
            )
            rule = select_rule(self.dta, location, label, eta_plus)
            hit = (rule.target, tuple(sorted(rule.resets)))
            self._rule_memo[key] = hit
        return hit

    def successor_entries(
        self, state: str, location: str, coords: tuple
    ) -> List[Tuple[Optional[int], float]]:
        """Jump-successor contributions of one grid point.

        Returns ``(column, probability)`` pairs where ``column`` is an
        unknown index, ``None`` for a final target (value 1 folds into the
        constant term) and entries for dead targets are dropped.
        """
        si = self.chain.state_index(state)
        label = self.chain.labeling[si]
        target_loc, resets = self._rule_at_plus(location, label, coords)
        reset_coords = tuple(
            0 if i in resets else j for i, j in enumerate(coords)
        )
        out: List[Tuple[Optional[int], float]] = []
        for uj, p in enumerate(self.chain.transition[si]):
            if p <= 0:
                continue
            u = self.chain.states[uj]
            cls = self._class_by_coords(u, target_loc, reset_coords)
            if cls == DEAD:
                continue
            if cls == FINAL:
                out.append((None, float(p)))
            else:
                col = self.index[GridPoint(u, target_loc, self.valuation(reset_coords))]
                out.append((col, float(p)))
        return out


def build_grid(chain: Ctmc, dta: Dta, graph: ProductGraph, m: int) -> Grid:
    return Grid(chain, dta, graph, m)


@dataclass
class SchemeSystem:
    """Sparse row-wise fixed-point system ``mu = M mu + offset``."""

    kind: str
    grid: Grid
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    offset: np.ndarray

    @property
    def size(self) -> int:
        return len(self.offset)

    @property
    def unknowns(self) -> Tuple[GridPoint, ...]:
        return self.grid.b_m

    @property
    def horizons(self) -> np.ndarray:
        return self.grid.horizons

    @property
    def rho(self) -> Fraction:
        return self.grid.rho

    def row(self, k: int) -> Dict[int, float]:
        lo, hi = self.indptr[k], self.indptr[k + 1]
        return {
            int(j): float(v)
            for j, v in zip(self.indices[lo:hi], self.data[lo:hi])
        }

    def dense(self) -> Tuple[np.ndarray, np.ndarray]:
        n = self.size
        mat = np.zeros((n, n))
        for k in range(n):
            lo, hi = self.indptr[k], self.indptr[k + 1]
            np.add.at(mat[k], self.indices[lo:hi], self.data[lo:hi])
        return mat, self.offset.copy()


def _pack(rows: List[Dict[int, float]], consts: List[float], grid: Grid,
          kind: str) -> SchemeSystem:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    cols: List[int] = []
    vals: List[float] = []
    for k, row in enumerate(rows):
        for j in sorted(row):
            cols.append(j)
            vals.append(row[j])
        indptr[k + 1] = len(cols)
    return SchemeSystem(
        kind=kind,
        grid=grid,
        indptr=indptr,
        indices=np.array(cols, dtype=np.int64),
        data=np.array(vals, dtype=np.float64),
        offset=np.array(consts, dtype=np.float64),
    )


def _row_weights(grid: Grid, state: str) -> Tuple[float, float]:
    rho_lam = float(grid.rho * grid.chain.exit_rates[grid.chain.state_index(state)])
    return 1.0 / (1.0 + rho_lam), rho_lam / (1.0 + rho_lam)


def assemble_gamma_prime(grid: Grid) -> SchemeSystem:
    """One row per unknown of the one-step scheme.

    Interior rows carry ``1/(1+rho*lambda)`` on the saturated-delay
    neighbour and ``rho*lambda/(1+rho*lambda) * P(s,u)`` on each jump
    successor; boundary rows are plain convex combinations of successor
    values.  Final targets fold their value 1 into the constant vector,
    dead targets contribute nothing.
    """
    rows: List[Dict[int, float]] = []
    consts: List[float] = []
    for k, point in enumerate(grid.b_m):
        coords = grid.coords(point.valuation)
        row: Dict[int, float] = {}
        const = 0.0
        if grid.is_bmax[k]:
            for col, p in grid.successor_entries(point.state, point.location, coords):
                if col is None:
                    const += p
                else:
                    row[col] = row.get(col, 0.0) + p
        else:
            a, b = _row_weights(grid, point.state)
            nxt = grid._clamp_step(coords)
            cls = grid._class_by_coords(point.state, point.location, nxt)
            if cls != DEAD:
                col = grid.index[GridPoint(point.state, point.location,
                                           grid.valuation(nxt))]
                row[col] = row.get(col, 0.0) + a
            for col, p in grid.successor_entries(point.state, point.location, coords):
                if col is None:
                    const += b * p
                else:
                    row[col] = row.get(col, 0.0) + b * p
        rows.append(row)
        consts.append(const)
    return _pack(rows, consts, grid, GAMMA_PRIME)


def assemble_gamma_double(grid: Grid) -> SchemeSystem:
    """Unfold each interior row through its horizon.

    Walks the saturated-delay chain of every unknown, accumulating the jump
    successors of each traversed point with geometrically decaying weight,
    and closes with the boundary tail: nothing when the chain dies, the
    boundary point's successor row when it reaches the all-ceilings set.
    """
    rows: List[Dict[int, float]] = []
    consts: List[float] = []
    for k, point in enumerate(grid.b_m):
        coords = grid.coords(point.valuation)
        row: Dict[int, float] = {}
        const = 0.0
        if grid.is_bmax[k]:
            for col, p in grid.successor_entries(point.state, point.location, coords):
                if col is None:
                    const += p
                else:
                    row[col] = row.get(col, 0.0) + p
        else:
            a, b = _row_weights(grid, point.state)
            weight = 1.0
            current = coords
            for _ in range(int(grid.horizons[k])):
                for col, p in grid.successor_entries(point.state, point.location,
                                                     current):
                    if col is None:
                        const += weight * b * p
                    else:
                        row[col] = row.get(col, 0.0) + weight * b * p
                current = grid._clamp_step(current)
                weight *= a
            if grid._class_by_coords(point.state, point.location, current) != DEAD:
                # tail at the all-ceilings boundary point
                for col, p in grid.successor_entries(point.state, point.location,
                                                     current):
                    if col is None:
                        const += weight * p
                    else:
                        row[col] = row.get(col, 0.0) + weight * p
        rows.append(row)
        consts.append(const)
    return _pack(rows, consts, grid, GAMMA_DOUBLE)


def scaled_error_constants(constants: ModelConstants) -> Tuple[float, float, float]:
    """Lipschitz constant of the acceptance probability, the derivative
    truncation constant and the per-row scheme error constant.

    Computed in floating point and rounded up one ulp each so reported
    bounds stay on the safe side.
    """
    lam_t = float(constants.lambda_max * constants.t_max)
    m1 = constants.clock_count * lam_t * math.exp(lam_t)
    m2 = 2.0 * float(constants.lambda_max) * m1
    m3 = constants.t_max * m2
    up = lambda v: math.nextafter(v, math.inf)  # noqa: E731
    return up(m1), up(m2), up(m3)
