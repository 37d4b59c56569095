"""Fixed-point solver, error reports and the end-to-end query workflow.

The sparse system ``mu = C mu + d`` is solved by Gauss-Seidel sweeps that
visit unknowns by increasing horizon, so information flows outward from
the dead and boundary points; on single-clock models one pass is an exact
back substitution.  A dense direct elimination acts as fallback for small
systems when the sweeps stall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .models import Ctmc, Dta, ModelConstants, model_constants
from .product import DEAD, FINAL, ProductGraph, build_graph, contraction_constant
from .scheme import (
    Grid,
    GridPoint,
    SchemeSystem,
    assemble_gamma_prime,
    build_grid,
    scaled_error_constants,
)

DIRECT_LIMIT = 3000
MAX_SWEEPS = 5000


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class BoundInfeasibleError(RuntimeError):
    """The theoretical bound demands an impractically fine grid."""

    def __init__(self, message: str, m_required: int):
        super().__init__(message)
        self.m_required = m_required


@dataclass
class Solution:
    """Solved values over the unknowns plus exact boundary lookups.

    ``values_raw`` is the untouched solver output; ``values`` is the report
    copy clamped to [0, 1].  Dead grid points read exactly 0 and final
    locations exactly 1 by construction, they are never solved for.
    """

    system: SchemeSystem
    values_raw: np.ndarray
    values: np.ndarray
    residual: float
    sweeps: int
    method: str

    def value_at(self, state: str, location: str, valuation: Sequence) -> float:
        grid = self.system.grid
        point = GridPoint(
            state, location, tuple(Fraction(v) for v in valuation)
        )
        cls = grid.class_at(point)
        if cls == FINAL:
            return 1.0
        if cls == DEAD:
            return 0.0
        return float(self.values[grid.index[point]])


def solve(
    system: SchemeSystem,
    tol: float = 1e-10,
    max_sweeps: int = MAX_SWEEPS,
    x0: Optional[np.ndarray] = None,
    direct_limit: int = DIRECT_LIMIT,
) -> Solution:
    """Solve ``mu = C mu + d`` to the requested residual.

    Raises :class:`SolverError` when the sweeps do not converge and the
    system is too large for dense elimination, or when elimination finds
    the matrix singular (possible below the guaranteed grid threshold).
    """
    n = system.size
    if n == 0:
        empty = np.zeros(0)
        return Solution(system, empty, empty.copy(), 0.0, 0, "empty")
    order = np.argsort(system.horizons, kind="stable").astype(np.int64)
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    if x.shape != (n,):
        raise ValueError(f"start vector has shape {x.shape}, expected ({n},)")

    args = (system.indptr, system.indices, system.data, system.offset)
    residual = math.inf
    try:
        for sweep_count in range(1, max_sweeps + 1):
            kernels.gauss_seidel_sweep(*args, x, order)
            residual = kernels.max_residual(*args, x)
            if residual < tol:
                return Solution(
                    system, x, np.clip(x, 0.0, 1.0), float(residual),
                    sweep_count, f"sweep/{kernels.BACKEND}",
                )
    except ZeroDivisionError as exc:
        raise SolverError(
            f"sweep hit a unit diagonal ({exc}); the scheme matrix is not a "
            f"contraction here, which the theory only rules out for "
            f"m > 2|V|^2 = {2 * system.grid.graph.vertex_count ** 2}",
        ) from exc

    if n <= direct_limit:
        mat, rhs = system.dense()
        try:
            x = np.linalg.solve(np.eye(n) - mat, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                f"direct elimination found the system singular; uniqueness "
                f"is only guaranteed for m > 2|V|^2 = "
                f"{2 * system.grid.graph.vertex_count ** 2}",
            ) from exc
        residual = kernels.max_residual(*args, x)
        if residual < tol:
            return Solution(
                system, x, np.clip(x, 0.0, 1.0), float(residual),
                max_sweeps, "direct",
            )
    raise SolverError(
        f"no convergence to residual {tol} after {max_sweeps} sweeps "
        f"(last residual {residual:.3e})",
        residual=float(residual),
    )


# ---------------------------------------------------------------------------
# Error reports


@dataclass
class ErrorReport:
    """All constants feeding the a-priori bound, reported verbatim.

    ``theoretical_bound`` is |V| * c^(-|V|) * M3 * rho, astronomically large
    for most models; it is still the honest guarantee.  The optional
    ``empirical_estimate`` comes from comparing two grid resolutions and is
    a heuristic, clearly not a bound.
    """

    m: int
    rho: float
    m1: float
    m2: float
    m3: float
    contraction: float
    vertex_count: int
    theoretical_bound: float
    m_min: int
    below_threshold: bool
    empirical_estimate: Optional[float] = None
    snap_distance: float = 0.0
    snap_slack: float = 0.0


def error_report(
    graph: ProductGraph,
    constants: ModelConstants,
    m: int,
    empirical_estimate: Optional[float] = None,
) -> ErrorReport:
    m1, m2, m3 = scaled_error_constants(constants)
    c, m_min = contraction_constant(graph, constants)
    n = graph.vertex_count
    if m3 == 0.0:
        bound = 0.0
    else:
        log_bound = math.log(n) - n * math.log(c) + math.log(m3) - math.log(m)
        bound = math.inf if log_bound > 709.0 else math.nextafter(
            math.exp(log_bound), math.inf
        )
    return ErrorReport(
        m=m,
        rho=1.0 / m,
        m1=m1,
        m2=m2,
        m3=m3,
        contraction=c,
        vertex_count=n,
        theoretical_bound=bound,
        m_min=m_min,
        below_threshold=m < m_min,
        empirical_estimate=empirical_estimate,
    )


# ---------------------------------------------------------------------------
# End-to-end queries


class ApproxResult(NamedTuple):
    probability: float
    report: ErrorReport
    residual: float
    grid_points: int


@lru_cache(maxsize=8)
def _analysis(chain: Ctmc, dta: Dta) -> Tuple[ModelConstants, ProductGraph]:
    return model_constants(chain, dta), build_graph(chain, dta)


@lru_cache(maxsize=8)
def _solved(chain: Ctmc, dta: Dta, m: int, tol: float) -> Tuple[Grid, Solution]:
    _, graph = _analysis(chain, dta)
    grid = build_grid(chain, dta, graph, m)
    solution = solve(assemble_gamma_prime(grid), tol=tol)
    return grid, solution


def _snap_to_grid(eta: Sequence, ceilings: Sequence[int], m: int):
    """Clamp into the ceiling box, then snap each clock to the nearest
    multiple of 1/m with ties rounded toward zero."""
    snapped = []
    distance = Fraction(0)
    for v, c in zip(eta, ceilings):
        v = Fraction(v)
        if v < 0:
            raise ValueError("clock values must be non-negative")
        v = min(v, Fraction(c))
        scaled = v * m
        lo = math.floor(scaled)
        j = lo if scaled - lo <= Fraction(1, 2) else lo + 1
        snapped.append(Fraction(j, m))
        distance = max(distance, abs(v - Fraction(j, m)))
    return tuple(snapped), distance


def _required_m(report: ErrorReport, epsilon: float) -> int:
    per_rho = report.theoretical_bound * report.m  # scheme bound per unit rho
    demand = (per_rho + report.m1 / 2.0) / epsilon
    if not math.isfinite(demand):
        return -1
    return max(report.m_min, int(math.ceil(demand)))


def _grid_cells(chain: Ctmc, dta: Dta, m: int) -> int:
    cells = len(chain.states) * len(dta.locations)
    for c in dta.ceilings:
        cells *= m * c + 1
    return cells


def approximate(
    chain: Ctmc,
    dta: Dta,
    state: str,
    location: str,
    valuation: Sequence,
    m: Optional[int] = None,
    epsilon: Optional[float] = None,
    force_empirical: bool = False,
    tol: float = 1e-10,
    with_empirical: bool = False,
    max_grid_cells: int = 5_000_000,
) -> ApproxResult:
    """Approximate the acceptance probability from one starting triple.

    Exactly one of ``m`` (grid resolution) and ``epsilon`` (target accuracy)
    must be given.  The start valuation is clamped into the ceiling box and
    snapped to the nearest grid point; the Lipschitz slack of the snap is
    part of the report.  Final locations answer exactly 1 and dead start
    vertices exactly 0, without solving.
    """
    if (m is None) == (epsilon is None):
        raise ValueError("specify exactly one of m and epsilon")
    constants, graph = _analysis(chain, dta)
    eta = tuple(Fraction(v) for v in valuation)
    if len(eta) != len(dta.clocks):
        raise ValueError(
            f"valuation has {len(eta)} clocks, automaton has {len(dta.clocks)}"
        )

    if epsilon is not None:
        if not 0 < epsilon < 1:
            raise ValueError("epsilon must lie in (0,1)")
        probe = error_report(graph, constants, 1)
        m_req = _required_m(probe, epsilon)
        if m_req > 0 and _grid_cells(chain, dta, m_req) <= max_grid_cells:
            m = m_req
        elif not force_empirical:
            raise BoundInfeasibleError(
                f"the theoretical bound needs m = {m_req if m_req > 0 else 'inf'} "
                f"(grid too large); pass force_empirical to size the grid by "
                f"the heuristic estimate instead",
                m_required=m_req,
            )
        else:
            m = _empirical_m(chain, dta, state, location, eta, epsilon,
                             tol, max_grid_cells)

    shortcut = _shortcut(graph, state, location, eta)
    if shortcut is not None:
        report = error_report(graph, constants, m)
        report.theoretical_bound = 0.0
        return ApproxResult(shortcut, report, 0.0, _grid_cells(chain, dta, m))

    snapped, distance = _snap_to_grid(eta, dta.ceilings, m)
    grid, solution = _solved(chain, dta, m, tol)
    value = solution.value_at(state, location, snapped)

    empirical = None
    if with_empirical:
        _, finer = _solved(chain, dta, 2 * m, tol)
        empirical = abs(value - finer.value_at(state, location, snapped))
    report = error_report(graph, constants, m, empirical_estimate=empirical)
    report.snap_distance = float(distance)
    report.snap_slack = report.m1 * float(distance)
    return ApproxResult(value, report, solution.residual, grid.d_m_size)


def _shortcut(graph: ProductGraph, state: str, location: str, eta) -> Optional[float]:
    if location in graph.dta.final:
        return 1.0
    vertex = graph.vertex_of(state, location, eta)
    if graph.class_of(vertex) == DEAD:
        return 0.0
    return None


def _empirical_m(chain, dta, state, location, eta, epsilon, tol, max_grid_cells):
    """Richardson-style sizing: double m until successive values differ by
    at most epsilon/2 (first-order scheme, so the difference tracks the
    error of the finer grid)."""
    m = 8
    previous = None
    while _grid_cells(chain, dta, m) <= max_grid_cells:
        snapped, _ = _snap_to_grid(eta, dta.ceilings, m)
        _, solution = _solved(chain, dta, m, tol)
        value = solution.value_at(state, location, snapped)
        if previous is not None and abs(value - previous) <= epsilon / 2:
            return m
        previous = value
        m *= 2
    raise BoundInfeasibleError(
        f"empirical sizing exceeded {max_grid_cells} grid cells before "
        f"successive values settled within {epsilon / 2}",
        m_required=m,
    )


def prob_from_distribution(
    chain: Ctmc,
    dta: Dta,
    theta: Dict[str, object],
    location: str,
    valuation: Sequence,
    **options,
) -> ApproxResult:
    """Mix per-state answers by an initial distribution over states.

    ``theta`` maps state names to exact weights summing to one; zero-weight
    states are skipped.  The reported bound is the worst per-state bound.
    """
    weights = {s: Fraction(w) for s, w in theta.items()}
    if sum(weights.values()) != 1:
        raise ValueError(f"initial distribution sums to {sum(weights.values())}")
    unknown = set(weights) - set(chain.states)
    if unknown:
        raise ValueError(f"distribution names unknown states {sorted(unknown)}")
    total = 0.0
    worst: Optional[ApproxResult] = None
    residual = 0.0
    cells = 0
    for s, w in weights.items():
        if w == 0:
            continue
        result = approximate(chain, dta, s, location, valuation, **options)
        total += float(w) * result.probability
        residual = max(residual, result.residual)
        cells = max(cells, result.grid_points)
        if worst is None or _total_bound(result.report) > _total_bound(worst.report):
            worst = result
    if worst is None:
        raise ValueError("initial distribution has no positive weight")
    return ApproxResult(total, worst.report, residual, cells)


def _total_bound(report: ErrorReport) -> float:
    return report.theoretical_bound + report.snap_slack
