import math
from fractions import Fraction

import numpy as np
import pytest

from pathprob.models import model_constants
from pathprob.product import ALIVE, DEAD
from pathprob.scheme import (
    GridPoint,
    assemble_gamma_double,
    assemble_gamma_prime,
    build_grid,
    scaled_error_constants,
)
from pathprob.solver import solve
from oracles import unfolded_dense_system

F = Fraction


@pytest.fixture(scope="module")
def unit_grid4(unit_deadline, unit_graph):
    return build_grid(*unit_deadline, unit_graph, 4)


def test_grid_size_is_combinatorial(unit_grid4, exposure_window, exposure_graph):
    assert unit_grid4.d_m_size == 2 * 3 * 5
    grid = build_grid(*exposure_window, exposure_graph, 4)
    assert grid.d_m_size == 3 * 4 * 5 * 5


def test_ceiling_point_is_dead_and_excluded(unit_grid4):
    point = GridPoint("s", "q0", (F(1),))
    assert unit_grid4.class_at(point) == DEAD
    assert point not in unit_grid4.index


def test_b_m_membership(unit_grid4):
    assert len(unit_grid4.b_m) == 4
    for point in unit_grid4.b_m:
        assert point.state == "s" and point.location == "q0"
        assert unit_grid4.class_at(point) == ALIVE
    assert not unit_grid4.is_bmax.any()  # the all-ceilings point is dead here


def test_bmax_points_sit_on_all_ceilings(departure, departure_graph):
    grid = build_grid(*departure, departure_graph, 8)
    flags = grid.is_bmax
    assert flags.sum() == 1
    boundary = [p for k, p in enumerate(grid.b_m) if flags[k]]
    assert boundary[0].valuation == (F(1),)
    assert grid.horizon(boundary[0]) == 0


def test_horizons_by_forward_scan(unit_grid4):
    assert unit_grid4.horizon(GridPoint("s", "q0", (F(1, 2),))) == 2
    assert unit_grid4.horizon(GridPoint("s", "q0", (F(0),))) == 4
    assert unit_grid4.horizon(GridPoint("s", "q0", (F(3, 4),))) == 1
    with pytest.raises(ValueError):
        unit_grid4.horizon(GridPoint("s", "q0", (F(1),)))


def test_horizon_bounded_by_box_diameter(exposure_window, exposure_graph):
    grid = build_grid(*exposure_window, exposure_graph, 8)
    assert (grid.horizons <= 8 * exposure_window[1].t_max).all()
    assert (grid.horizons >= 0).all()


def test_one_step_row_shape_interior(unit_grid4):
    """Interior row: dead delay neighbour contributes nothing, the final
    jump successor folds 1/1.25 ratios into the constant."""
    system = assemble_gamma_prime(unit_grid4)
    k = unit_grid4.index[GridPoint("s", "q0", (F(3, 4),))]
    assert system.row(k) == {}
    assert system.offset[k] == pytest.approx(0.25 / 1.25, abs=1e-15)
    solution = solve(system)
    assert solution.value_at("s", "q0", (F(3, 4),)) == pytest.approx(0.2, abs=1e-14)


def test_one_step_row_couples_to_delay_neighbour(unit_grid4):
    system = assemble_gamma_prime(unit_grid4)
    k = unit_grid4.index[GridPoint("s", "q0", (F(1, 2),))]
    j = unit_grid4.index[GridPoint("s", "q0", (F(3, 4),))]
    assert system.row(k) == {j: pytest.approx(1 / 1.25, abs=1e-15)}


def test_closed_form_chain_value(unit_grid4):
    system = assemble_gamma_prime(unit_grid4)
    solution = solve(system)
    assert solution.value_at("s", "q0", (F(0),)) == pytest.approx(
        1 - (1 + 0.25) ** -4, abs=1e-14
    )


def test_boundary_row_is_convex_combination_without_self_term(departure,
                                                              departure_graph):
    grid = build_grid(*departure, departure_graph, 4)
    system = assemble_gamma_prime(grid)
    k = grid.index[GridPoint("w", "q0", (F(1),))]
    # the only successor is the final location, so the row is empty and the
    # constant carries the full jump mass
    assert system.row(k) == {}
    assert system.offset[k] == 1.0
    # interior rows of this model carry a genuine self-loop column
    j = grid.index[GridPoint("w", "q0", (F(1, 2),))]
    assert j in system.row(j)


def test_unfolded_row_matches_hand_expansion(unit_grid4):
    system = assemble_gamma_double(unit_grid4)
    k = unit_grid4.index[GridPoint("s", "q0", (F(1, 2),))]
    assert system.row(k) == {}
    assert system.offset[k] == pytest.approx(0.36, abs=1e-14)


def test_unfolded_offsets_telescope(unit_grid4):
    """All successors final and a dead tail: the offset is 1 - a^N."""
    system = assemble_gamma_double(unit_grid4)
    a = 1 / 1.25
    for k, point in enumerate(unit_grid4.b_m):
        n = unit_grid4.horizons[k]
        assert system.row(k) == {}
        assert system.offset[k] == pytest.approx(1 - a ** n, abs=1e-13)


def test_unfolded_matches_one_step_solution(unit_grid4):
    first = solve(assemble_gamma_prime(unit_grid4), tol=1e-12)
    second = solve(assemble_gamma_double(unit_grid4), tol=1e-12)
    assert np.max(np.abs(first.values_raw - second.values_raw)) < 1e-10


def test_unfolded_assembly_against_independent_transcription(
    exposure_window, exposure_graph
):
    """The packaged unfolding equals a direct dense transcription of the
    horizon-expanded equations, coefficient by coefficient."""
    chain, dta = exposure_window
    grid = build_grid(chain, dta, exposure_graph, 4)
    system = assemble_gamma_double(grid)
    unknowns, mat, off = unfolded_dense_system(chain, dta, exposure_graph, 4)
    assert len(unknowns) == system.size
    for k, (s, q, coords) in enumerate(unknowns):
        point = GridPoint(s, q, tuple(F(j, 4) for j in coords))
        kk = grid.index[point]
        assert kk == k  # identical canonical ordering
        row = system.row(k)
        dense_row = {j: mat[k, j] for j in np.nonzero(mat[k])[0]}
        assert set(row) == set(dense_row)
        for j, value in row.items():
            assert value == pytest.approx(dense_row[j], abs=1e-14)
        assert off[k] == pytest.approx(system.offset[k], abs=1e-14)


@pytest.mark.parametrize("assembler", [assemble_gamma_prime, assemble_gamma_double])
def test_rows_are_substochastic(assembler, exposure_window, exposure_graph):
    grid = build_grid(*exposure_window, exposure_graph, 8)
    system = assembler(grid)
    assert (system.data >= 0).all()
    for k in range(system.size):
        lo, hi = system.indptr[k], system.indptr[k + 1]
        assert system.data[lo:hi].sum() + system.offset[k] <= 1.0 + 1e-12


def test_unknown_columns_never_point_at_dead_or_final(exposure_window,
                                                      exposure_graph):
    grid = build_grid(*exposure_window, exposure_graph, 4)
    system = assemble_gamma_prime(grid)
    for j in system.indices:
        assert grid.class_at(grid.b_m[int(j)]) == ALIVE


def test_grid_closure_under_step_and_jump(exposure_window, exposure_graph):
    """The saturated step and every jump successor of a grid point are grid
    points themselves."""
    grid = build_grid(*exposure_window, exposure_graph, 4)
    for point in grid.b_m:
        coords = grid.coords(point.valuation)
        stepped = grid._clamp_step(coords)
        assert all(0 <= j <= mx for j, mx in zip(stepped, grid.max_coords))
        for col, _ in grid.successor_entries(point.state, point.location, coords):
            if col is not None:
                assert 0 <= col < len(grid.b_m)


def test_boundary_row_defect_above_contraction(departure, departure_graph):
    """Above the guaranteed threshold the boundary rows leak at least the
    contraction constant."""
    chain, dta = departure
    k = model_constants(chain, dta)
    from pathprob.product import contraction_constant

    c, m_min = contraction_constant(departure_graph, k)
    m = m_min + 1  # 8 vertices -> m = 130, still tiny
    grid = build_grid(chain, dta, departure_graph, m)
    system = assemble_gamma_double(grid)
    for kk in np.nonzero(grid.is_bmax)[0]:
        lo, hi = system.indptr[kk], system.indptr[kk + 1]
        assert 1.0 - system.data[lo:hi].sum() >= c


def test_error_constants_unit_deadline(unit_deadline):
    k = model_constants(*unit_deadline)
    m1, m2, m3 = scaled_error_constants(k)
    assert m1 == pytest.approx(math.e, rel=1e-14)
    assert m2 == pytest.approx(2 * math.e, rel=1e-14)
    assert m3 == pytest.approx(2 * math.e, rel=1e-14)


def test_error_constants_scale_with_model(exposure_window):
    k = model_constants(*exposure_window)
    m1, m2, m3 = scaled_error_constants(k)
    assert m1 == pytest.approx(2 * 3 * math.exp(3), rel=1e-13)
    assert m2 == pytest.approx(6 * m1, rel=1e-13)
    assert m3 == pytest.approx(m2, rel=1e-13)
